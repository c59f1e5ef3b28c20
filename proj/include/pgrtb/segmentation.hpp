#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pgrtb/auction_log.hpp"
#include "pgrtb/curve_fit.hpp"
#include "pgrtb/dp_solver.hpp"

namespace pgrtb {

struct Segment {
    std::string label;  // group1_high, group2_low for k = 2; group<i> otherwise
    std::vector<std::string> members;
    double centroid = 0.0;
    double mean = 0.0;
    double std = 0.0;
};

struct KMeansResult {
    std::vector<Segment> segments;     // by descending centroid
    std::vector<int> assignment;       // segment index per input value
    std::vector<double> objective_trace;
    int iterations = 0;
};

// Lloyd's algorithm on the line with k-means++ seeding. Ids default to the
// value positions. Throws ClusteringError with fewer than k distinct values.
KMeansResult kmeans_1d(std::span<const double> values, int k, std::uint64_t seed, int max_iters = 100,
                       std::span<const std::string> ids = {});

// Groups ad slots by their mean per-auction bidder count.
KMeansResult group_slots(const std::vector<AuctionLogRecord>& records, int k, std::uint64_t seed,
                         int max_iters = 100);

enum class SegmentFeature { winning_bid, all_bids };

const char* to_string(SegmentFeature feature);
SegmentFeature segment_feature_from_string(const std::string& name);

struct SegmentOptions {
    SegmentFeature feature = SegmentFeature::winning_bid;
    std::uint64_t seed = 0;
    int max_iters = 100;
    FitOptions fit;
    int threads = 1;
};

struct SegmentResult {
    std::string label;
    std::size_t auctions = 0;
    double share = 0.0;
    double centroid = 0.0;
    double mean_competition = 0.0;
    MarketConfig config;
    PaymentFit fit;
    bool rtb_only = false;
    std::optional<PricePlan> plan;
    double rtb_only_revenue = 0.0;  // S_g * phi_g(Q_g / S_g)
    double revenue = 0.0;
};

struct SegmentReport {
    std::vector<SegmentResult> segments;
    double combined_revenue = 0.0;
    double combined_rtb_only_revenue = 0.0;
    bool fallback = false;
    std::vector<std::string> warnings;
};

// Splits advertisers into a high- and a low-valuation subgroup, refits the
// payment curves and pi for each, and optimizes each subgroup with supply and
// demand proportional to its share of auctions. Auctions with fewer than two
// bids are ignored. `base` supplies every other market parameter.
SegmentReport segment_and_optimize(const std::vector<AuctionSummary>& auctions, const MarketConfig& base,
                                   const SegmentOptions& options = {});

}  // namespace pgrtb
