#include "pgrtb/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include <boost/random/binomial_distribution.hpp>

#include "pgrtb/errors.hpp"
#include "pgrtb/parallel.hpp"

namespace pgrtb {

namespace {

std::uint64_t stream_seed(std::uint64_t seed, SimStream s) {
    return derive_seed(seed, static_cast<std::uint64_t>(s));
}

std::int64_t binomial(Rng& rng, std::int64_t trials, double p) {
    if (trials <= 0 || p <= 0.0) return 0;
    if (p >= 1.0) return trials;
    // libstdc++'s binomial sampler drifts upward by ~1e-4 relative in the
    // regimes used here; Boost's BTRD sampler does not.
    return boost::random::binomial_distribution<std::int64_t>(trials, p)(rng);
}

double quantile_sorted(const std::vector<double>& v, double level) {
    const double pos = level * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace

const char* to_string(PurchaseCap cap) {
    return cap == PurchaseCap::supply ? "supply" : "quota";
}

PurchaseCap purchase_cap_from_string(const std::string& name) {
    if (name == "supply") return PurchaseCap::supply;
    if (name == "quota") return PurchaseCap::quota;
    throw ArgumentError("unknown purchase cap '" + name + "'");
}

std::vector<std::int64_t> generate_arrivals(const MarketConfig& cfg, const TimeGrid& grid, std::uint64_t seed) {
    Rng rng(seed);
    const double mean = cfg.arrival_rate * grid.horizon() / static_cast<double>(grid.steps());
    std::vector<std::int64_t> out(grid.size(), 0);
    for (auto& a : out) {
        a = mean > 0.0 ? std::poisson_distribution<std::int64_t>(mean)(rng) : 0;
    }
    out[0] += static_cast<std::int64_t>(std::floor(cfg.initial_arrival_mass * static_cast<double>(cfg.demand)));
    return out;
}

PurchaseOutcome simulate_purchases(const PricePlan& plan, const MarketConfig& cfg, const TimeGrid& grid,
                                   const std::vector<std::int64_t>& arrivals, Rng& rng, PurchaseCap cap) {
    if (plan.steps.size() != grid.size() || arrivals.size() != grid.size()) {
        throw ArgumentError("plan, arrivals and grid must cover the same steps");
    }
    PurchaseOutcome out;
    out.sold.assign(grid.size(), 0);
    out.present.assign(grid.size(), 0);
    std::int64_t waiting = 0;
    std::int64_t remaining = cfg.supply;
    for (std::size_t n = 0; n < grid.size(); ++n) {
        waiting += arrivals[n];
        out.present[n] = waiting;
        const PlanStep& st = plan.steps[n];
        if (!st.sale) {
            continue;
        }
        const double theta = purchase_ratio(static_cast<int>(n), st.price, cfg, grid);
        std::int64_t buyers = binomial(rng, waiting, theta);
        buyers = std::min(buyers, remaining);
        if (cap == PurchaseCap::quota) {
            buyers = std::min(buyers, st.sold);
        }
        out.sold[n] = buyers;
        out.revenue += st.price * static_cast<double>(buyers);
        waiting -= buyers;
        remaining -= buyers;
    }
    return out;
}

PurchaseOutcome simulate_purchases(const PricePlan& plan, const MarketConfig& cfg, const TimeGrid& grid,
                                   std::uint64_t seed, PurchaseCap cap) {
    const auto arrivals = generate_arrivals(cfg, grid, stream_seed(seed, SimStream::arrivals));
    Rng rng(stream_seed(seed, SimStream::purchases));
    return simulate_purchases(plan, cfg, grid, arrivals, rng, cap);
}

RtbOutcome simulate_rtb(std::int64_t impressions, std::int64_t advertisers, const BidModel& bids,
                        std::uint64_t seed, double reserve_price, const RtbLogOptions& log) {
    if (impressions < 0 || advertisers < 0) {
        throw ArgumentError("simulate_rtb needs non-negative counts");
    }
    RtbOutcome out;
    out.auctions = impressions;
    Rng rng(seed);
    std::int64_t unassigned = advertisers;
    std::vector<double> drawn;
    for (std::int64_t i = 0; i < impressions; ++i) {
        // Sequential conditional binomials give a multinomial assignment.
        const std::int64_t left = impressions - i;
        const std::int64_t k = left == 1 ? unassigned : binomial(rng, unassigned, 1.0 / static_cast<double>(left));
        unassigned -= k;
        drawn.clear();
        for (std::int64_t j = 0; j < k; ++j) {
            drawn.push_back(bids.sample(rng));
        }
        if (k >= 2) {
            std::nth_element(drawn.begin(), drawn.begin() + 1, drawn.end(), std::greater<>());
            out.revenue += drawn[1];
            ++out.contested;
        } else {
            out.revenue += reserve_price;
        }
        if (log.emit && k > 0) {
            const std::int64_t ts = log.start_time + (log.duration * i) / std::max<std::int64_t>(impressions, 1);
            const std::string id = log.auction_prefix + std::to_string(i);
            for (double b : drawn) {
                out.log.push_back({log.slot_id, id, ts, b});
            }
        }
    }
    return out;
}

SimOutcome simulate_once(const PricePlan& plan, const MarketConfig& cfg, const TimeGrid& grid,
                         const BidModel& bids, std::uint64_t seed, PurchaseCap cap) {
    SimOutcome out;
    out.seed = seed;
    const PurchaseOutcome bought = simulate_purchases(plan, cfg, grid, seed, cap);
    out.pg_sold = bought.sold;

    Rng penalty_rng(stream_seed(seed, SimStream::penalty));
    std::int64_t contracts = 0;
    double pg = 0.0;
    for (std::size_t n = 0; n < bought.sold.size(); ++n) {
        const std::int64_t sold = bought.sold[n];
        if (sold == 0) continue;
        const double price = plan.steps[n].price;
        const std::int64_t failed = binomial(penalty_rng, sold, cfg.miss_probability);
        pg += price * static_cast<double>(sold) - cfg.penalty_multiplier * price * static_cast<double>(failed);
        contracts += sold;
        out.failed_contracts += failed;
    }
    out.pg_revenue = pg;
    out.delivered_fraction =
        contracts > 0 ? 1.0 - static_cast<double>(out.failed_contracts) / static_cast<double>(contracts) : 1.0;

    // Advertisers without a contract, including those who never showed up
    // during the selling period, compete in RTB.
    const std::int64_t rest_supply = cfg.supply - contracts;
    const std::int64_t rest_demand = cfg.demand - contracts;
    const RtbOutcome rtb = simulate_rtb(rest_supply, rest_demand, bids, stream_seed(seed, SimStream::rtb),
                                        cfg.reserve_price);
    out.rtb_revenue = rtb.revenue;
    out.total_revenue = out.pg_revenue + out.rtb_revenue;
    return out;
}

SimSummary evaluate_plan(const PricePlan& plan, const MarketConfig& cfg, const TimeGrid& grid,
                         const BidModel& bids, int n_runs, std::uint64_t root_seed, int threads,
                         PurchaseCap cap) {
    if (n_runs < 1) {
        throw ArgumentError("evaluate_plan needs at least one run");
    }
    validate(cfg);
    SimSummary s;
    s.runs = n_runs;
    s.root_seed = root_seed;
    s.outcomes.resize(static_cast<std::size_t>(n_runs));
    parallel_for(s.outcomes.size(), threads, [&](std::size_t r) {
        s.outcomes[r] = simulate_once(plan, cfg, grid, bids, derive_seed(root_seed, r), cap);
    });

    const double runs = n_runs;
    std::vector<double> totals;
    totals.reserve(s.outcomes.size());
    for (const auto& o : s.outcomes) {
        totals.push_back(o.total_revenue);
        s.mean_pg += o.pg_revenue;
        s.mean_rtb += o.rtb_revenue;
        s.mean_delivered_fraction += o.delivered_fraction;
    }
    s.mean_pg /= runs;
    s.mean_rtb /= runs;
    s.mean_delivered_fraction /= runs;
    s.mean_total = std::accumulate(totals.begin(), totals.end(), 0.0) / runs;
    double ss = 0.0;
    for (double t : totals) ss += (t - s.mean_total) * (t - s.mean_total);
    s.std_total = n_runs > 1 ? std::sqrt(ss / (runs - 1.0)) : 0.0;
    s.std_error_total = s.std_total / std::sqrt(runs);

    std::sort(totals.begin(), totals.end());
    for (double level : {0.05, 0.25, 0.5, 0.75, 0.95}) {
        s.quantiles.emplace_back(level, quantile_sorted(totals, level));
    }

    const std::size_t steps = grid.size();
    s.mean_sold.assign(steps, 0.0);
    s.std_error_sold.assign(steps, 0.0);
    for (std::size_t n = 0; n < steps; ++n) {
        double m = 0.0;
        for (const auto& o : s.outcomes) m += static_cast<double>(o.pg_sold[n]);
        m /= runs;
        double v = 0.0;
        for (const auto& o : s.outcomes) v += (static_cast<double>(o.pg_sold[n]) - m) * (static_cast<double>(o.pg_sold[n]) - m);
        s.mean_sold[n] = m;
        s.std_error_sold[n] = n_runs > 1 ? std::sqrt(v / (runs - 1.0) / runs) : 0.0;
    }
    return s;
}

GeneratedLog generate_log(const GenDataSpec& spec, const std::vector<Population>& populations, std::uint64_t seed,
                          double reserve_price) {
    if (spec.xi_levels.empty()) {
        throw ArgumentError("generate_log needs at least one xi level");
    }
    GeneratedLog out;
    for (int h = 0; h < spec.hours; ++h) {
        const double xi = spec.xi_levels[static_cast<std::size_t>(h) % spec.xi_levels.size()];
        for (std::size_t j = 0; j < populations.size(); ++j) {
            const auto s = std::llround(populations[j].share * static_cast<double>(spec.impressions_per_hour));
            const auto q = std::llround(xi * static_cast<double>(s));
            RtbLogOptions log;
            log.emit = true;
            log.slot_id = spec.slot_id;
            log.auction_prefix = "h" + std::to_string(h) + "-p" + std::to_string(j) + "-";
            log.start_time = spec.start_time + 3600LL * h;
            log.duration = 3600;
            const auto rtb = simulate_rtb(s, q, populations[j].bids,
                                          derive_seed(derive_seed(seed, static_cast<std::uint64_t>(h)), j),
                                          reserve_price, log);
            out.impressions += s;
            for (std::size_t i = 0; i < rtb.log.size(); ++i) {
                if (i == 0 || rtb.log[i].auction_id != rtb.log[i - 1].auction_id) ++out.auctions;
            }
            out.records.insert(out.records.end(), rtb.log.begin(), rtb.log.end());
        }
    }
    std::stable_sort(out.records.begin(), out.records.end(),
                     [](const AuctionLogRecord& a, const AuctionLogRecord& b) { return a.timestamp < b.timestamp; });
    return out;
}

}  // namespace pgrtb
