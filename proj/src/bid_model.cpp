#include "pgrtb/bid_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/special_functions/erf.hpp>

#include "pgrtb/errors.hpp"

namespace pgrtb {

namespace {

constexpr double kLogNormalTailSigmas = 10.0;
constexpr std::size_t kMaxBins = 5000;

double type7_quantile(std::span<const double> sorted, double q) {
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

std::vector<double> partial_sums(const std::vector<double>& probability) {
    std::vector<double> cumulative(probability.size() + 1, 0.0);
    std::partial_sum(probability.begin(), probability.end(), cumulative.begin() + 1);
    return cumulative;
}

}  // namespace

std::size_t freedman_diaconis_bins(std::span<const double> sorted) {
    const std::size_t n = sorted.size();
    if (n < 2) {
        return 1;
    }
    const double range = sorted.back() - sorted.front();
    const double iqr = type7_quantile(sorted, 0.75) - type7_quantile(sorted, 0.25);
    std::size_t bins = 0;
    if (iqr > 0.0) {
        const double width = 2.0 * iqr / std::cbrt(static_cast<double>(n));
        bins = static_cast<std::size_t>(std::ceil(range / width));
    } else {
        bins = static_cast<std::size_t>(std::ceil(std::log2(static_cast<double>(n)))) + 1;
    }
    return std::clamp<std::size_t>(bins, 1, kMaxBins);
}

BidModel BidModel::uniform(double lo, double hi) {
    if (!std::isfinite(lo) || !std::isfinite(hi) || !(hi > lo) || lo < 0.0) {
        throw ArgumentError("uniform bid model needs 0 <= lo < hi");
    }
    return BidModel(Uniform{lo, hi});
}

BidModel BidModel::lognormal(double mu, double sigma) {
    if (!std::isfinite(mu) || !std::isfinite(sigma) || !(sigma > 0.0)) {
        throw ArgumentError("lognormal bid model needs sigma > 0");
    }
    return BidModel(LogNormal{mu, sigma});
}

BidModel BidModel::empirical(std::span<const double> bids) {
    if (bids.empty()) {
        throw ArgumentError("empirical bid model needs at least one bid");
    }
    std::vector<double> sorted(bids.begin(), bids.end());
    for (double b : sorted) {
        if (!std::isfinite(b) || b < 0.0) {
            throw ArgumentError("empirical bid model needs finite non-negative bids");
        }
    }
    std::sort(sorted.begin(), sorted.end());
    const double lo = sorted.front();
    const double hi = sorted.back();
    if (lo == hi) {
        return histogram({lo, hi}, {1.0}, sorted.size());
    }
    const std::size_t bins = freedman_diaconis_bins(sorted);
    std::vector<double> edges(bins + 1);
    for (std::size_t b = 0; b < bins; ++b) {
        edges[b] = lo + (hi - lo) * static_cast<double>(b) / static_cast<double>(bins);
    }
    edges.back() = hi;
    std::vector<double> counts(bins, 0.0);
    for (double x : sorted) {
        auto b = static_cast<std::size_t>(std::upper_bound(edges.begin(), edges.end(), x) - edges.begin());
        b = std::clamp<std::size_t>(b, 1, bins) - 1;
        counts[b] += 1.0;
    }
    for (double& c : counts) {
        c /= static_cast<double>(sorted.size());
    }
    return histogram(std::move(edges), std::move(counts), sorted.size());
}

BidModel BidModel::histogram(std::vector<double> edges, std::vector<double> probability,
                             std::size_t sample_size) {
    if (edges.size() < 2 || probability.size() + 1 != edges.size()) {
        throw ArgumentError("histogram needs B + 1 edges for B bins");
    }
    const bool point_mass = edges.front() == edges.back();
    for (std::size_t b = 0; b + 1 < edges.size(); ++b) {
        if (!point_mass && !(edges[b + 1] > edges[b])) {
            throw ArgumentError("histogram edges must be strictly increasing");
        }
    }
    if (point_mass && probability.size() != 1) {
        throw ArgumentError("point-mass histogram has exactly one bin");
    }
    double total = 0.0;
    for (double p : probability) {
        if (!(p >= 0.0)) {
            throw ArgumentError("histogram masses must be non-negative");
        }
        total += p;
    }
    if (!(total > 0.0)) {
        throw ArgumentError("histogram has no mass");
    }
    for (double& p : probability) {
        p /= total;
    }
    Histogram h;
    h.cumulative = partial_sums(probability);
    h.edges = std::move(edges);
    h.probability = std::move(probability);
    h.sample_size = sample_size;
    return BidModel(std::move(h));
}

BidModel::Kind BidModel::kind() const {
    switch (dist_.index()) {
        case 0: return Kind::uniform;
        case 1: return Kind::lognormal;
        default: return Kind::empirical;
    }
}

double BidModel::lo() const {
    if (const auto* u = as_uniform()) return u->lo;
    if (as_lognormal() != nullptr) return 0.0;
    return as_histogram()->edges.front();
}

double BidModel::hi() const {
    if (const auto* u = as_uniform()) return u->hi;
    if (const auto* l = as_lognormal()) return std::exp(l->mu + kLogNormalTailSigmas * l->sigma);
    return as_histogram()->edges.back();
}

bool BidModel::is_point_mass() const {
    return lo() == hi();
}

double BidModel::pdf(double x) const {
    if (const auto* u = as_uniform()) {
        return (x < u->lo || x > u->hi) ? 0.0 : 1.0 / (u->hi - u->lo);
    }
    if (const auto* l = as_lognormal()) {
        if (x <= 0.0) return 0.0;
        const double z = (std::log(x) - l->mu) / l->sigma;
        return std::exp(-0.5 * z * z) / (x * l->sigma * std::sqrt(2.0 * M_PI));
    }
    const auto& h = *as_histogram();
    if (is_point_mass() || x < h.edges.front() || x > h.edges.back()) {
        return 0.0;
    }
    auto b = static_cast<std::size_t>(std::upper_bound(h.edges.begin(), h.edges.end(), x) - h.edges.begin());
    b = std::clamp<std::size_t>(b, 1, h.probability.size()) - 1;
    return h.probability[b] / (h.edges[b + 1] - h.edges[b]);
}

double BidModel::cdf(double x) const {
    if (const auto* u = as_uniform()) {
        return std::clamp((x - u->lo) / (u->hi - u->lo), 0.0, 1.0);
    }
    if (const auto* l = as_lognormal()) {
        if (x <= 0.0) return 0.0;
        return 0.5 * std::erfc(-(std::log(x) - l->mu) / (l->sigma * M_SQRT2));
    }
    const auto& h = *as_histogram();
    if (x < h.edges.front()) return 0.0;
    if (x >= h.edges.back()) return 1.0;
    auto b = static_cast<std::size_t>(std::upper_bound(h.edges.begin(), h.edges.end(), x) - h.edges.begin());
    b = std::clamp<std::size_t>(b, 1, h.probability.size()) - 1;
    const double frac = (x - h.edges[b]) / (h.edges[b + 1] - h.edges[b]);
    return std::min(1.0, h.cumulative[b] + h.probability[b] * frac);
}

double BidModel::quantile(double u) const {
    u = std::clamp(u, 0.0, 1.0);
    if (const auto* uni = as_uniform()) {
        return uni->lo + u * (uni->hi - uni->lo);
    }
    if (const auto* l = as_lognormal()) {
        if (u <= 0.0) return 0.0;
        if (u >= 1.0) return hi();
        return std::min(hi(), std::exp(l->mu + l->sigma * M_SQRT2 * boost::math::erf_inv(2.0 * u - 1.0)));
    }
    const auto& h = *as_histogram();
    if (is_point_mass() || u <= 0.0) return h.edges.front();
    if (u >= h.cumulative.back()) return h.edges.back();
    auto b = static_cast<std::size_t>(std::upper_bound(h.cumulative.begin(), h.cumulative.end(), u) -
                                      h.cumulative.begin());
    b = std::clamp<std::size_t>(b, 1, h.probability.size()) - 1;
    if (h.probability[b] <= 0.0) {
        return h.edges[b];
    }
    const double frac = (u - h.cumulative[b]) / h.probability[b];
    return h.edges[b] + std::clamp(frac, 0.0, 1.0) * (h.edges[b + 1] - h.edges[b]);
}

double BidModel::sample(Rng& rng) const {
    if (const auto* u = as_uniform()) {
        return std::uniform_real_distribution<double>(u->lo, u->hi)(rng);
    }
    if (const auto* l = as_lognormal()) {
        return std::lognormal_distribution<double>(l->mu, l->sigma)(rng);
    }
    return quantile(std::uniform_real_distribution<double>(0.0, 1.0)(rng));
}

double BidModel::mean() const {
    if (const auto* u = as_uniform()) return 0.5 * (u->lo + u->hi);
    if (const auto* l = as_lognormal()) return std::exp(l->mu + 0.5 * l->sigma * l->sigma);
    const auto& h = *as_histogram();
    if (is_point_mass()) return h.edges.front();
    double m = 0.0;
    for (std::size_t b = 0; b < h.probability.size(); ++b) {
        m += h.probability[b] * 0.5 * (h.edges[b] + h.edges[b + 1]);
    }
    return m;
}

std::vector<double> BidModel::breakpoints() const {
    const auto* h = as_histogram();
    if (h == nullptr || is_point_mass()) {
        return {};
    }
    return {h->edges.begin() + 1, h->edges.end() - 1};
}

}  // namespace pgrtb
