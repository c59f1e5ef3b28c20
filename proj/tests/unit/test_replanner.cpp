#include <cmath>
#include <vector>

#include "doctest.h"

#include "fixtures.hpp"
#include "pgrtb/auction.hpp"
#include "pgrtb/errors.hpp"
#include "pgrtb/replanner.hpp"

using namespace pgrtb;

TEST_CASE("demand shock formula") {
    CHECK(apply_demand_shock(100, 0.0, 3.7, 10) == 100);
    CHECK(apply_demand_shock(100, 0.1, 1.0, 10) == 110);
    CHECK(apply_demand_shock(100, 0.1, -1.0, 10) == 90);
    CHECK(apply_demand_shock(100, 0.1, 0.04, 10) == 100);  // 100.4 rounds down
    CHECK(apply_demand_shock(100, 0.1, 0.06, 10) == 101);
    CHECK(apply_demand_shock(3, 0.5, 1.0, 1) == 5);  // 4.5 rounds away from zero
    // Clamped to one above the remaining supply.
    CHECK(apply_demand_shock(100, 0.5, -1.9, 40) == 41);
    CHECK_THROWS_AS(apply_demand_shock(0, 0.1, 1.0, 10), ArgumentError);
    CHECK_THROWS_AS(apply_demand_shock(10, -0.1, 1.0, 1), ArgumentError);

    UncertaintySpec off;
    off.noise_seed = 99;
    for (int n = 0; n < 20; ++n) CHECK(update_demand(537, off, n, 3) == 537);
}

TEST_CASE("noise is a pure function of seed and step with unit variance") {
    for (NoiseKind kind : {NoiseKind::gaussian, NoiseKind::rademacher}) {
        UncertaintySpec spec{0.1, 4242, kind};
        CHECK(demand_noise(spec, 3) == demand_noise(spec, 3));
        const int n = 100000;
        double sum = 0.0;
        double sq = 0.0;
        double ratio = 0.0;
        double ratio_sq = 0.0;
        const std::int64_t q = 1000000;
        for (int i = 0; i < n; ++i) {
            const double e = demand_noise(spec, i);
            sum += e;
            sq += e * e;
            const double r = static_cast<double>(update_demand(q, spec, i, 10)) / static_cast<double>(q);
            ratio += r;
            ratio_sq += r * r;
        }
        const double mean = sum / n;
        const double var = sq / n - mean * mean;
        CHECK(std::abs(mean) <= 3.0 / std::sqrt(double(n)));
        CHECK(var == doctest::Approx(1.0).epsilon(0.02));
        const double rm = ratio / n;
        const double rse = std::sqrt((ratio_sq / n - rm * rm) / n);
        CHECK(std::abs(rm - 1.0) <= 3.0 * rse);
        if (kind == NoiseKind::rademacher) CHECK(var == doctest::Approx(1.0).epsilon(1e-3));
    }
    CHECK(noise_kind_from_string("rademacher") == NoiseKind::rademacher);
    CHECK(std::string(to_string(NoiseKind::gaussian)) == "gaussian");
    CHECK_THROWS_AS(noise_kind_from_string("pink"), ArgumentError);
}

TEST_CASE("zero noise replan reproduces the static plan bit for bit") {
    const MarketConfig c = fixtures::reference_market();
    const TimeGrid g = TimeGrid::for_config(c);
    const BidModelPayments pay(BidModel::lognormal(0.0, 0.5));
    const auto stat = opt_r(c, g, pay);
    const auto re = replan(c, g, pay, UncertaintySpec{0.0, 7, NoiseKind::gaussian});
    REQUIRE(re.plan.steps.size() == stat.plan.steps.size());
    for (std::size_t n = 0; n < stat.plan.steps.size(); ++n) {
        const auto& a = stat.plan.steps[n];
        const auto& b = re.plan.steps[n];
        CHECK(a.price == b.price);
        CHECK(a.sold == b.sold);
        CHECK(a.sale == b.sale);
        CHECK(a.cumulative == b.cumulative);
        CHECK(a.bound == b.bound);
        CHECK(a.backlog == b.backlog);
    }
    CHECK(re.plan.revenue_total == stat.plan.revenue_total);
    CHECK(re.plan.revenue_pg == stat.plan.revenue_pg);
    CHECK(re.plan.revenue_rtb == stat.plan.revenue_rtb);
    CHECK(re.plan.gamma == stat.plan.gamma);
    for (const auto& t : re.trace) CHECK(t.planned_revenue == stat.plan.revenue_total);
}

TEST_CASE("zero noise identity holds on random small markets") {
    Rng rng(31);
    const fixtures::UniformPayments pay(1.0);
    for (int trial = 0; trial < 60; ++trial) {
        const MarketConfig c = fixtures::random_small_market(rng, 5, 10, 30);
        const TimeGrid g = TimeGrid::for_config(c);
        const auto stat = opt_r(c, g, pay);
        const auto re = replan(c, g, pay, UncertaintySpec{});
        CHECK(re.plan.prices() == stat.plan.prices());
        CHECK(re.plan.sales() == stat.plan.sales());
        CHECK(re.plan.revenue_total == stat.plan.revenue_total);
    }
}

TEST_CASE("noisy replan is deterministic and stays near the static plan") {
    const MarketConfig c = fixtures::reference_market();
    const TimeGrid g = TimeGrid::for_config(c);
    const BidModelPayments pay(BidModel::lognormal(0.0, 0.5));
    const UncertaintySpec spec{0.1, 7, NoiseKind::gaussian};
    const auto a = replan(c, g, pay, spec, 1);
    const auto b = replan(c, g, pay, spec, 4);
    CHECK(a.plan.revenue_total == b.plan.revenue_total);
    CHECK(a.plan.sales() == b.plan.sales());
    const double stat = opt_r(c, g, pay).plan.revenue_total;
    CHECK(std::abs(a.plan.revenue_total / stat - 1.0) <= 0.15);

    std::int64_t prev = 0;
    for (const auto& t : a.trace) {
        CHECK(t.cumulative >= prev);
        CHECK(t.cumulative <= c.supply);
        CHECK(t.shocked_demand > c.supply - t.cumulative);
        prev = t.cumulative;
    }
    CHECK(a.plan.total_sold == prev);
}

TEST_CASE("first committed step follows the static plan") {
    MarketConfig c = fixtures::reference_market();
    c.steps = 1;
    const TimeGrid g = TimeGrid::for_config(c);
    const BidModelPayments pay(BidModel::lognormal(0.0, 0.5));
    const auto stat = opt_r(c, g, pay);
    const auto re = replan(c, g, pay, UncertaintySpec{0.3, 1, NoiseKind::rademacher});
    REQUIRE(re.plan.steps.size() == 2);
    CHECK(re.plan.steps[0].sold == stat.plan.steps[0].sold);
    CHECK(re.plan.steps[0].price == stat.plan.steps[0].price);
    CHECK(re.solves == (re.supply_exhausted ? 1 : 2));
}

TEST_CASE("replan stops once supply is gone") {
    MarketConfig c = fixtures::reference_market();
    c.supply = 20;
    c.max_value = 50.0;
    c.risk_aversion = 500.0;
    c.risk_decay = 0.0;
    const TimeGrid g = TimeGrid::for_config(c);
    const fixtures::UniformPayments pay(1.0);
    const auto re = replan(c, g, pay, UncertaintySpec{0.1, 3, NoiseKind::gaussian});
    CHECK(re.plan.steps.size() == static_cast<std::size_t>(c.steps + 1));
    CHECK(re.plan.total_sold <= c.supply);
    if (re.supply_exhausted) {
        CHECK(re.plan.total_sold == c.supply);
        CHECK(re.solves < c.steps + 1);
    }
}
