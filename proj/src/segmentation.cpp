#include "pgrtb/segmentation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "pgrtb/errors.hpp"
#include "pgrtb/rng.hpp"

namespace pgrtb {

namespace {

double wcss(std::span<const double> values, const std::vector<int>& assign, const std::vector<double>& centers) {
    double s = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double d = values[i] - centers[static_cast<std::size_t>(assign[i])];
        s += d * d;
    }
    return s;
}

int nearest(double v, const std::vector<double>& centers) {
    int best = 0;
    double best_d = std::abs(v - centers[0]);
    for (std::size_t c = 1; c < centers.size(); ++c) {
        const double d = std::abs(v - centers[c]);
        if (d < best_d) {
            best_d = d;
            best = static_cast<int>(c);
        }
    }
    return best;
}

std::string segment_label(std::size_t rank, std::size_t k) {
    if (k == 2) {
        return rank == 0 ? "group1_high" : "group2_low";
    }
    return "group" + std::to_string(rank + 1);
}

}  // namespace

KMeansResult kmeans_1d(std::span<const double> values, int k, std::uint64_t seed, int max_iters,
                       std::span<const std::string> ids) {
    if (k < 1) {
        throw ClusteringError("k must be at least 1");
    }
    if (!ids.empty() && ids.size() != values.size()) {
        throw ArgumentError("kmeans_1d: ids and values differ in length");
    }
    for (double v : values) {
        if (!std::isfinite(v)) throw ClusteringError("kmeans_1d: non-finite value");
    }
    const std::set<double> distinct(values.begin(), values.end());
    if (distinct.size() < static_cast<std::size_t>(k)) {
        throw ClusteringError("kmeans_1d: " + std::to_string(distinct.size()) + " distinct values for k = " +
                              std::to_string(k));
    }

    // k-means++ seeding.
    Rng rng(seed);
    const std::size_t n = values.size();
    std::vector<double> centers;
    centers.push_back(values[std::uniform_int_distribution<std::size_t>(0, n - 1)(rng)]);
    std::vector<double> d2(n);
    while (centers.size() < static_cast<std::size_t>(k)) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = values[i] - centers[static_cast<std::size_t>(nearest(values[i], centers))];
            d2[i] = d * d;
            total += d2[i];
        }
        double target = std::uniform_real_distribution<double>(0.0, total)(rng);
        std::size_t pick = n - 1;
        for (std::size_t i = 0; i < n; ++i) {
            target -= d2[i];
            if (target < 0.0 && d2[i] > 0.0) {
                pick = i;
                break;
            }
        }
        if (d2[pick] == 0.0) {
            // Rounding left the tail with no mass; take the farthest point.
            pick = static_cast<std::size_t>(std::max_element(d2.begin(), d2.end()) - d2.begin());
        }
        centers.push_back(values[pick]);
    }

    KMeansResult res;
    std::vector<int> assign(n);
    for (std::size_t i = 0; i < n; ++i) assign[i] = nearest(values[i], centers);
    res.objective_trace.push_back(wcss(values, assign, centers));
    for (int it = 0; it < max_iters; ++it) {
        std::vector<double> sum(centers.size(), 0.0);
        std::vector<std::size_t> count(centers.size(), 0);
        for (std::size_t i = 0; i < n; ++i) {
            sum[static_cast<std::size_t>(assign[i])] += values[i];
            ++count[static_cast<std::size_t>(assign[i])];
        }
        for (std::size_t c = 0; c < centers.size(); ++c) {
            if (count[c] > 0) centers[c] = sum[c] / static_cast<double>(count[c]);
        }
        std::vector<int> next(n);
        for (std::size_t i = 0; i < n; ++i) next[i] = nearest(values[i], centers);
        res.iterations = it + 1;
        const bool stable = next == assign;
        assign = std::move(next);
        res.objective_trace.push_back(wcss(values, assign, centers));
        if (stable) break;
    }

    std::vector<std::size_t> order(centers.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return centers[a] > centers[b]; });
    std::vector<int> rank(centers.size());
    for (std::size_t r = 0; r < order.size(); ++r) rank[order[r]] = static_cast<int>(r);

    res.segments.resize(centers.size());
    for (std::size_t r = 0; r < order.size(); ++r) {
        res.segments[r].label = segment_label(r, centers.size());
        res.segments[r].centroid = centers[order[r]];
    }
    res.assignment.resize(n);
    std::vector<std::vector<double>> member_values(centers.size());
    for (std::size_t i = 0; i < n; ++i) {
        const int r = rank[static_cast<std::size_t>(assign[i])];
        res.assignment[i] = r;
        auto& seg = res.segments[static_cast<std::size_t>(r)];
        seg.members.push_back(ids.empty() ? std::to_string(i) : ids[i]);
        member_values[static_cast<std::size_t>(r)].push_back(values[i]);
    }
    for (std::size_t r = 0; r < res.segments.size(); ++r) {
        const auto& v = member_values[r];
        if (v.empty()) continue;
        const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
        double ss = 0.0;
        for (double x : v) ss += (x - m) * (x - m);
        res.segments[r].mean = m;
        res.segments[r].std = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
    }
    return res;
}

KMeansResult group_slots(const std::vector<AuctionLogRecord>& records, int k, std::uint64_t seed, int max_iters) {
    std::map<std::string, std::map<std::string, int>> bids_per_auction;
    for (const auto& r : records) {
        ++bids_per_auction[r.slot_id][r.auction_id];
    }
    std::vector<std::string> ids;
    std::vector<double> values;
    for (const auto& [slot, auctions] : bids_per_auction) {
        double sum = 0.0;
        for (const auto& [id, count] : auctions) sum += count;
        ids.push_back(slot);
        values.push_back(sum / static_cast<double>(auctions.size()));
    }
    return kmeans_1d(values, k, seed, max_iters, ids);
}

const char* to_string(SegmentFeature feature) {
    return feature == SegmentFeature::winning_bid ? "winning_bid" : "all_bids";
}

SegmentFeature segment_feature_from_string(const std::string& name) {
    if (name == "winning_bid") return SegmentFeature::winning_bid;
    if (name == "all_bids") return SegmentFeature::all_bids;
    throw ArgumentError("unknown segmentation feature '" + name + "'");
}

namespace {

SegmentResult build_segment(std::string label, const std::vector<AuctionSummary>& group, std::size_t total,
                            double centroid, const MarketConfig& base, const SegmentOptions& options) {
    SegmentResult seg;
    seg.label = std::move(label);
    seg.auctions = group.size();
    seg.share = static_cast<double>(group.size()) / static_cast<double>(total);
    seg.centroid = centroid;
    double comp = 0.0;
    for (const auto& a : group) comp += a.competition();
    seg.mean_competition = comp / static_cast<double>(group.size());

    seg.fit = fit_phi_psi(group, options.fit);
    MarketConfig& cfg = seg.config;
    cfg = base;
    cfg.supply = std::max<std::int64_t>(1, std::llround(seg.share * static_cast<double>(base.supply)));
    cfg.demand = std::max<std::int64_t>(1, std::llround(seg.share * static_cast<double>(base.demand)));
    cfg.arrival_rate = std::min(base.arrival_rate * seg.share, static_cast<double>(cfg.demand) / cfg.horizon);
    cfg.max_value = estimate_pi(group);

    const CurvePayments payments(seg.fit.phi, seg.fit.psi);
    const double xi = static_cast<double>(cfg.demand) / static_cast<double>(cfg.supply);
    seg.rtb_only_revenue = static_cast<double>(cfg.supply) * expected_payment(payments, xi, cfg.reserve_price);
    seg.rtb_only = seg.mean_competition < 2.0 || cfg.demand <= cfg.supply;
    if (seg.rtb_only) {
        seg.revenue = seg.rtb_only_revenue;
        return seg;
    }
    const TimeGrid grid = TimeGrid::for_config(cfg);
    seg.plan = opt_r(cfg, grid, payments, options.threads).plan;
    seg.revenue = seg.plan->revenue_total;
    return seg;
}

}  // namespace

SegmentReport segment_and_optimize(const std::vector<AuctionSummary>& auctions, const MarketConfig& base,
                                   const SegmentOptions& options) {
    validate(base);
    std::vector<AuctionSummary> usable;
    for (const auto& a : auctions) {
        if (a.competition() >= 2) usable.push_back(a);
    }
    if (usable.empty()) {
        throw FitError("segment_and_optimize: no auction has two or more bids");
    }
    SegmentReport report;
    if (usable.size() < auctions.size()) {
        report.warnings.push_back(std::to_string(auctions.size() - usable.size()) +
                                  " auctions with fewer than two bids ignored");
    }

    std::vector<std::vector<AuctionSummary>> groups(2);
    std::vector<double> centroids(2, 0.0);
    try {
        if (options.feature == SegmentFeature::winning_bid) {
            std::vector<double> values;
            for (const auto& a : usable) values.push_back(a.winning_bid());
            const auto km = kmeans_1d(values, 2, options.seed, options.max_iters);
            for (std::size_t i = 0; i < usable.size(); ++i) {
                groups[static_cast<std::size_t>(km.assignment[i])].push_back(usable[i]);
            }
            centroids = {km.segments[0].centroid, km.segments[1].centroid};
        } else {
            std::vector<double> values;
            for (const auto& a : usable) values.insert(values.end(), a.bids.begin(), a.bids.end());
            const auto km = kmeans_1d(values, 2, options.seed, options.max_iters);
            // bids are stored in descending order, so the first bid of each
            // auction is its winner
            std::size_t offset = 0;
            for (const auto& a : usable) {
                groups[static_cast<std::size_t>(km.assignment[offset])].push_back(a);
                offset += a.bids.size();
            }
            centroids = {km.segments[0].centroid, km.segments[1].centroid};
        }
        for (const auto& g : groups) {
            if (g.size() < 2) {
                throw ClusteringError("a subgroup has fewer than two auctions");
            }
        }
        for (std::size_t g = 0; g < 2; ++g) {
            report.segments.push_back(build_segment(g == 0 ? "group1_high" : "group2_low", groups[g], usable.size(),
                                                    centroids[g], base, options));
        }
    } catch (const ClusteringError& e) {
        report.fallback = true;
        report.warnings.push_back(std::string("segmentation failed, using a single segment: ") + e.what());
        report.segments.clear();
        double mean_win = 0.0;
        for (const auto& a : usable) mean_win += a.winning_bid();
        report.segments.push_back(
            build_segment("all", usable, usable.size(), mean_win / static_cast<double>(usable.size()), base, options));
    }
    for (const auto& s : report.segments) {
        report.combined_revenue += s.revenue;
        report.combined_rtb_only_revenue += s.rtb_only_revenue;
    }
    return report;
}

}  // namespace pgrtb
