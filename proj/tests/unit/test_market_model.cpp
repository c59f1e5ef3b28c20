#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"

#include "fixtures.hpp"
#include "pgrtb/auction.hpp"
#include "pgrtb/errors.hpp"
#include "pgrtb/market_model.hpp"

using namespace pgrtb;

namespace {

MarketConfig simple(double rate, double dt, double mass, std::int64_t demand = 100) {
    MarketConfig c;
    c.supply = 10;
    c.demand = demand;
    c.steps = 4;
    c.horizon = dt * c.steps;
    c.arrival_rate = rate;
    c.initial_arrival_mass = mass;
    return c;
}

// Constant phi and psi, to pin the bound arithmetic.
struct FixedPayments final : PaymentModel {
    double phi;
    double psi;
    FixedPayments(double m, double s) : phi(m), psi(s) {}
    double mean_payment(double) const override { return phi; }
    double payment_std(double) const override { return psi; }
};

}  // namespace

TEST_CASE("expected arrivals per step") {
    CHECK(expected_arrivals(1, simple(2.0, 0.5, 0.0)) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(expected_arrivals(0, simple(2.0, 0.5, 0.2)) == doctest::Approx(21.0).epsilon(1e-15));
    CHECK(expected_arrivals(3, simple(0.0, 0.5, 0.0)) == 0.0);
    CHECK_THROWS_AS(expected_arrivals(5, simple(2.0, 0.5, 0.0)), IndexError);
    CHECK_THROWS_AS(expected_arrivals(-1, simple(2.0, 0.5, 0.0)), IndexError);
    const auto c = simple(3.0, 0.25, 0.1);
    for (int n = 0; n <= c.steps; ++n) {
        CHECK(cumulative_arrivals(n, c) ==
              doctest::Approx(oracle::cumulative_arrivals(n, 3.0, 0.25, 10.0)).epsilon(1e-13));
    }
}

TEST_CASE("time grid") {
    const TimeGrid g(31.0, 31);
    CHECK(g.size() == 32);
    CHECK(g[0] == 0.0);
    CHECK(g[31] == 31.0);
    for (std::size_t i = 1; i < g.size(); ++i) {
        CHECK(g[i] > g[i - 1]);
        CHECK(g[i] - g[i - 1] == doctest::Approx(1.0));
    }
    CHECK_THROWS_AS(TimeGrid(0.0, 3), ConfigError);
    CHECK_THROWS_AS(TimeGrid(1.0, 0), ConfigError);
}

TEST_CASE("purchase ratio") {
    MarketConfig c = simple(1.0, 1.0, 0.0);
    const TimeGrid g = TimeGrid::for_config(c);
    c.price_sensitivity = 1.0;
    c.time_sensitivity = 17.0;
    CHECK(purchase_ratio(c.steps, std::log(2.0), c, g) == doctest::Approx(0.5).epsilon(1e-15));
    for (int n = 0; n <= c.steps; ++n) {
        CHECK(purchase_ratio(n, 0.0, c, g) == 1.0);
    }
    c.price_sensitivity = 0.1;
    c.time_sensitivity = 0.5;
    // t_N - t_n = 2 at n = N - 2 on a unit grid
    CHECK(purchase_ratio(c.steps - 2, 3.0, c, g) == doctest::Approx(0.548811636094026).epsilon(1e-12));
    CHECK(purchase_ratio(0, std::numeric_limits<double>::infinity(), c, g) == 0.0);
    CHECK_THROWS_AS(purchase_ratio(0, -0.1, c, g), DomainError);
}

TEST_CASE("purchase ratio is monotone in price and time") {
    Rng rng(42);
    for (int trial = 0; trial < 200; ++trial) {
        MarketConfig c = simple(1.0, fixtures::uniform_real(rng, 0.1, 3.0), 0.0);
        c.price_sensitivity = fixtures::uniform_real(rng, 0.01, 5.0);
        c.time_sensitivity = fixtures::uniform_real(rng, 0.0, 2.0);
        const TimeGrid g = TimeGrid::for_config(c);
        const double p = fixtures::uniform_real(rng, 0.0, 5.0);
        const double q = p + fixtures::uniform_real(rng, 0.0, 5.0);
        for (int n = 0; n <= c.steps; ++n) {
            CHECK(purchase_ratio(n, p, c, g) >= purchase_ratio(n, q, c, g));
            if (n > 0) CHECK(purchase_ratio(n, p, c, g) >= purchase_ratio(n - 1, p, c, g));
        }
    }
}

TEST_CASE("backlog demand") {
    const MarketConfig c = simple(2.0, 0.5, 0.2);
    const TimeGrid g = TimeGrid::for_config(c);
    CHECK(backlog_demand(0, {}, c, g) == expected_arrivals(0, c));
    const std::vector<double> zeros(3, 0.0);
    CHECK(backlog_demand(3, zeros, c, g) == doctest::Approx(expected_arrivals(3, c)));
    const std::vector<double> closed(3, std::numeric_limits<double>::infinity());
    CHECK(backlog_demand(3, closed, c, g) == doctest::Approx(cumulative_arrivals(3, c)));
    CHECK_THROWS_AS(backlog_demand(2, zeros, c, g), ArgumentError);

    // Direct evaluation of the double sum.
    const std::vector<double> prices{0.3, 1.2, 0.05};
    double expect = expected_arrivals(3, c);
    for (int i = 0; i < 3; ++i) {
        double keep = 1.0;
        for (int j = i; j < 3; ++j) keep *= 1.0 - std::exp(-c.price_sensitivity * prices[j] *
                                                          (1.0 + c.time_sensitivity * (c.horizon - g[j])));
        expect += expected_arrivals(i, c) * keep;
    }
    CHECK(backlog_demand(3, prices, c, g) == doctest::Approx(expect).epsilon(1e-13));
}

TEST_CASE("backlog never exceeds arrivals") {
    Rng rng(7);
    const MarketConfig c = simple(3.0, 0.7, 0.3);
    const TimeGrid g = TimeGrid::for_config(c);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> prices;
        for (int n = 0; n <= c.steps; ++n) {
            CHECK(backlog_demand(n, prices, c, g) <= cumulative_arrivals(n, c) + 1e-12);
            prices.push_back(fixtures::uniform_real(rng, 0.0, 3.0));
        }
    }
}

TEST_CASE("risk preference") {
    MarketConfig c = fixtures::reference_market();
    const TimeGrid g = TimeGrid::for_config(c);
    CHECK(risk_preference(0, c, g) == 10.0);
    c.risk_aversion = 90;
    CHECK(risk_preference(30, c, g) == doctest::Approx(4.480836153107).epsilon(1e-12));
    for (int n = 1; n <= c.steps; ++n) CHECK(risk_preference(n, c, g) <= risk_preference(n - 1, c, g));
    c.risk_aversion = 0;
    for (int n = 0; n <= c.steps; ++n) CHECK(risk_preference(n, c, g) == 0.0);
}

TEST_CASE("censored bound") {
    MarketConfig c = fixtures::reference_market();
    const TimeGrid g = TimeGrid::for_config(c);
    c.risk_aversion = 0;
    c.max_value = 2.0;
    CHECK(censored_bound(0, 3.0, c, g, FixedPayments(0.9, 0.4)) == doctest::Approx(0.9));
    c.risk_aversion = 5.0;
    c.risk_decay = 0.0;
    CHECK(censored_bound(0, 3.0, c, g, FixedPayments(0.9, 1.0)) == 2.0);

    c.risk_aversion = 1.0;
    c.max_value = 10.0;
    const BidModelPayments uniform(BidModel::uniform(0, 1));
    CHECK(censored_bound(0, 3.0, c, g, uniform) ==
          doctest::Approx(0.5 + oracle::uniform_psi(3.0)).epsilon(1e-9));

    c.reserve_price = 0.25;
    CHECK(censored_bound(0, 1.0, c, g, uniform) == 0.25);
    CHECK(censored_bound(0, 0.5, c, g, uniform) == 0.25);
}

TEST_CASE("censored bound stays under both caps") {
    Rng rng(3);
    const BidModelPayments payments(BidModel::lognormal(0.0, 0.5));
    for (int trial = 0; trial < 100; ++trial) {
        MarketConfig c = fixtures::reference_market();
        c.risk_aversion = fixtures::uniform_real(rng, 0.0, 100.0);
        c.risk_decay = fixtures::uniform_real(rng, 0.0, 1.0);
        c.max_value = fixtures::uniform_real(rng, 0.1, 5.0);
        const TimeGrid g = TimeGrid::for_config(c);
        const double xi = fixtures::uniform_real(rng, 2.0, 20.0);
        const int n = std::uniform_int_distribution<int>(0, c.steps)(rng);
        const double bound = censored_bound(n, xi, c, g, payments);
        CHECK(bound <= c.max_value);
        CHECK(bound <= payments.mean_payment(xi) + risk_preference(n, c, g) * payments.payment_std(xi) + 1e-15);
    }
}

TEST_CASE("config validation") {
    CHECK_NOTHROW(validate(fixtures::reference_market()));
    auto bad = [](auto edit) {
        MarketConfig c = fixtures::reference_market();
        edit(c);
        return c;
    };
    CHECK_THROWS_AS(validate(bad([](MarketConfig& c) { c.demand = c.supply; })), ConfigError);
    CHECK_THROWS_AS(validate(bad([](MarketConfig& c) { c.arrival_rate = 1000.0; })), ConfigError);
    CHECK_THROWS_AS(validate(bad([](MarketConfig& c) { c.miss_probability = 0.9; c.penalty_multiplier = 2.0; })),
                    ConfigError);
    CHECK_THROWS_AS(validate(bad([](MarketConfig& c) { c.max_value = 0.0; })), ConfigError);
    CHECK_THROWS_AS(validate(bad([](MarketConfig& c) { c.steps = 0; })), ConfigError);
    CHECK_THROWS_AS(validate(bad([](MarketConfig& c) { c.initial_arrival_mass = 1.5; })), ConfigError);
}
