#pragma once

#include <span>
#include <variant>
#include <vector>

#include "pgrtb/rng.hpp"

namespace pgrtb {

// Distribution of a single advertiser's bid (CPM).
//
// The empirical model is the histogram distribution of the sample, with
// Freedman-Diaconis binning: piecewise-uniform density, piecewise-linear CDF.
// A sample with no spread becomes a point mass.
class BidModel {
public:
    enum class Kind { uniform, lognormal, empirical };

    struct Uniform {
        double lo;
        double hi;
    };
    struct LogNormal {
        double mu;
        double sigma;
    };
    struct Histogram {
        std::vector<double> edges;        // B + 1 increasing edges (one edge for a point mass)
        std::vector<double> probability;  // B bin masses, summing to 1
        std::vector<double> cumulative;   // B + 1 partial sums, cumulative[0] = 0
        std::size_t sample_size = 0;
    };

    static BidModel uniform(double lo, double hi);
    static BidModel lognormal(double mu, double sigma);
    static BidModel empirical(std::span<const double> bids);
    static BidModel histogram(std::vector<double> edges, std::vector<double> probability,
                              std::size_t sample_size = 0);

    Kind kind() const;
    const Uniform* as_uniform() const { return std::get_if<Uniform>(&dist_); }
    const LogNormal* as_lognormal() const { return std::get_if<LogNormal>(&dist_); }
    const Histogram* as_histogram() const { return std::get_if<Histogram>(&dist_); }

    // Support Omega. The lognormal support is cut at exp(mu + 10 sigma), beyond
    // which the tail mass is below 1e-23.
    double lo() const;
    double hi() const;

    bool is_point_mass() const;
    double pdf(double x) const;
    double cdf(double x) const;
    double quantile(double u) const;
    double sample(Rng& rng) const;
    double mean() const;

    // Interior points where the density is not smooth (histogram edges).
    std::vector<double> breakpoints() const;

private:
    explicit BidModel(std::variant<Uniform, LogNormal, Histogram> dist) : dist_(std::move(dist)) {}

    std::variant<Uniform, LogNormal, Histogram> dist_;
};

// Freedman-Diaconis bin count, Sturges when the interquartile range is zero.
std::size_t freedman_diaconis_bins(std::span<const double> sorted);

}  // namespace pgrtb
