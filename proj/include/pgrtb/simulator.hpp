#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pgrtb/auction_log.hpp"
#include "pgrtb/bid_model.hpp"
#include "pgrtb/dp_solver.hpp"

namespace pgrtb {

// Which limit stops PG sales within a step. `supply` only stops at the
// remaining supply; `quota` also stops at the plan's expected sales for the step.
enum class PurchaseCap { supply, quota };

const char* to_string(PurchaseCap cap);
PurchaseCap purchase_cap_from_string(const std::string& name);

// Random sub-streams of one simulated run.
enum class SimStream : std::uint64_t { arrivals = 1, purchases = 2, penalty = 3, rtb = 4 };

// Poisson(lambda dt) per step, plus floor(initial_arrival_mass * Q) at step 0.
std::vector<std::int64_t> generate_arrivals(const MarketConfig& cfg, const TimeGrid& grid, std::uint64_t seed);

struct PurchaseOutcome {
    std::vector<std::int64_t> sold;     // per step
    std::vector<std::int64_t> present;  // waiting advertisers at each step, before buying
    double revenue = 0.0;               // sum of price * sold, before penalties
};

// Each waiting advertiser buys at a sale step with probability theta(t_n, p_n).
// Advertisers who do not buy stay until t_N. Steps without a sale are closed.
PurchaseOutcome simulate_purchases(const PricePlan& plan, const MarketConfig& cfg, const TimeGrid& grid,
                                   const std::vector<std::int64_t>& arrivals, Rng& rng,
                                   PurchaseCap cap = PurchaseCap::supply);

// Arrivals and purchases drawn from sub-streams of `seed`.
PurchaseOutcome simulate_purchases(const PricePlan& plan, const MarketConfig& cfg, const TimeGrid& grid,
                                   std::uint64_t seed, PurchaseCap cap = PurchaseCap::supply);

struct RtbLogOptions {
    bool emit = false;
    std::string slot_id = "slot";
    std::string auction_prefix = "a";
    std::int64_t start_time = 0;  // seconds since epoch
    std::int64_t duration = 3600; // auctions spread evenly over [start, start + duration)
};

struct RtbOutcome {
    double revenue = 0.0;
    std::int64_t auctions = 0;
    std::int64_t contested = 0;  // auctions with at least two bidders
    std::vector<AuctionLogRecord> log;
};

// Each of `advertisers` bids on one uniformly chosen impression out of
// `impressions`; each auction charges the second-highest bid, or the reserve
// price with fewer than two bidders.
RtbOutcome simulate_rtb(std::int64_t impressions, std::int64_t advertisers, const BidModel& bids,
                        std::uint64_t seed, double reserve_price = 0.0, const RtbLogOptions& log = {});

struct SimOutcome {
    std::vector<std::int64_t> pg_sold;
    double pg_revenue = 0.0;  // after penalty draws
    double rtb_revenue = 0.0;
    double total_revenue = 0.0;
    double delivered_fraction = 1.0;
    std::int64_t failed_contracts = 0;
    std::uint64_t seed = 0;
};

// One full run: arrivals, purchases, penalty draws, RTB for the rest.
SimOutcome simulate_once(const PricePlan& plan, const MarketConfig& cfg, const TimeGrid& grid,
                         const BidModel& bids, std::uint64_t seed, PurchaseCap cap = PurchaseCap::supply);

struct SimSummary {
    int runs = 0;
    std::uint64_t root_seed = 0;
    double mean_total = 0.0;
    double std_total = 0.0;
    double std_error_total = 0.0;
    double mean_pg = 0.0;
    double mean_rtb = 0.0;
    double mean_delivered_fraction = 0.0;
    std::vector<std::pair<double, double>> quantiles;  // (level, value)
    std::vector<double> mean_sold;                     // per step
    std::vector<double> std_error_sold;                // per step
    std::vector<SimOutcome> outcomes;
};

// Runs n_runs independent simulations with seeds derive_seed(root_seed, run).
SimSummary evaluate_plan(const PricePlan& plan, const MarketConfig& cfg, const TimeGrid& grid,
                         const BidModel& bids, int n_runs, std::uint64_t root_seed, int threads = 1,
                         PurchaseCap cap = PurchaseCap::supply);

struct Population {
    double share = 1.0;  // fraction of impressions (and advertisers)
    BidModel bids = BidModel::uniform(0.0, 1.0);
};

// Synthetic log generation: `hours` hourly batches, each running
// impressions_per_hour auctions with xi_levels[hour % size] advertisers per
// impression, split across populations. No populations means one population
// bidding from the run's bid_model.
struct GenDataSpec {
    std::string slot_id = "slot-1";
    std::int64_t start_time = 1704067200;  // 2024-01-01T00:00:00Z
    int hours = 24;
    std::int64_t impressions_per_hour = 500;
    std::vector<double> xi_levels{2, 3, 4, 5, 6, 7, 8};
    std::vector<Population> populations;
};

struct GeneratedLog {
    std::vector<AuctionLogRecord> records;  // stable-sorted by timestamp
    std::int64_t impressions = 0;
    std::int64_t auctions = 0;  // impressions with at least one bid
};

// Hour h and population j draw from derive_seed(derive_seed(seed, h), j).
// Each population gets round(share * impressions_per_hour) impressions and
// round(xi * impressions) advertisers.
GeneratedLog generate_log(const GenDataSpec& spec, const std::vector<Population>& populations, std::uint64_t seed,
                          double reserve_price = 0.0);

}  // namespace pgrtb
