#include "pgrtb/auction.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "pgrtb/errors.hpp"
#include "pgrtb/parallel.hpp"
#include "pgrtb/quadrature.hpp"

namespace pgrtb {

namespace {

constexpr double kAbsTol = 1e-10;
constexpr double kNeglectedMass = 1e-14;
constexpr std::size_t kMcShards = 64;

}  // namespace

double expected_payment(const PaymentModel& model, double xi, double reserve_price) {
    if (!(xi >= 2.0)) {
        return reserve_price;
    }
    return model.mean_payment(xi);
}

double payment_dispersion(const PaymentModel& model, double xi) {
    if (!(xi >= 2.0)) {
        return 0.0;
    }
    return model.payment_std(xi);
}

OrderStatisticMoments second_price_moments(double xi, const BidModel& bids) {
    if (!(xi >= 2.0)) {
        throw ArgumentError("second_price_moments needs xi >= 2");
    }
    if (bids.is_point_mass()) {
        return {bids.lo(), 0.0};
    }
    if (std::isinf(xi)) {
        return {bids.hi(), 0.0};
    }

    // Below quantile u0 the order-statistic mass is under kNeglectedMass.
    const double u0 = std::pow(kNeglectedMass / xi, 1.0 / (xi - 1.0));
    const double a = std::max(bids.lo(), bids.quantile(u0));
    const double b = bids.hi();

    std::vector<double> cuts = bids.breakpoints();
    for (double c : {30.0, 10.0, 3.0, 1.0, 0.3, 0.1, 0.03}) {
        const double u = 1.0 - c / xi;
        if (u > u0 && u < 1.0) {
            cuts.push_back(bids.quantile(u));
        }
    }

    // Center near the bulk of the distribution to keep E[(X - c)^2] - E[X - c]^2
    // free of cancellation.
    const double center = bids.quantile(std::clamp(1.0 - 1.5 / xi, 0.0, 1.0));
    const double scale = xi * (xi - 1.0);
    auto integrand = [&](double x) -> std::array<double, 2> {
        const double F = bids.cdf(x);
        const double w = scale * bids.pdf(x) * (1.0 - F) * std::pow(F, xi - 2.0);
        const double d = x - center;
        return {d * w, d * d * w};
    };
    const auto r = integrate_pair(integrand, a, b, std::move(cuts), kAbsTol);
    const double variance = r.second - r.first * r.first;
    return {center + r.first, std::sqrt(std::max(0.0, variance))};
}

double expected_second_price(double xi, const BidModel& bids, double reserve_price) {
    if (!(xi >= 2.0)) {
        return reserve_price;
    }
    return second_price_moments(xi, bids).mean;
}

double second_price_std(double xi, const BidModel& bids) {
    if (!(xi >= 2.0)) {
        return 0.0;
    }
    return second_price_moments(xi, bids).std;
}

McEstimate mc_second_price(double xi, const BidModel& bids, std::int64_t trials, std::uint64_t seed,
                           int threads) {
    if (!(xi >= 2.0) || std::isinf(xi)) {
        throw ArgumentError("mc_second_price needs a finite xi >= 2");
    }
    if (trials < 1) {
        throw ArgumentError("mc_second_price needs at least one trial");
    }
    const int bidders = static_cast<int>(std::ceil(xi));
    const auto n = static_cast<std::size_t>(trials);
    std::vector<double> outcomes(n);
    const std::size_t shards = std::min(kMcShards, n);
    parallel_for(shards, threads, [&](std::size_t s) {
        Rng rng(derive_seed(seed, s));
        const std::size_t begin = s * n / shards;
        const std::size_t end = (s + 1) * n / shards;
        for (std::size_t t = begin; t < end; ++t) {
            double first = -std::numeric_limits<double>::infinity();
            double second = first;
            for (int k = 0; k < bidders; ++k) {
                const double bid = bids.sample(rng);
                if (bid > first) {
                    second = first;
                    first = bid;
                } else if (bid > second) {
                    second = bid;
                }
            }
            outcomes[t] = second;
        }
    });

    McEstimate est;
    est.trials = trials;
    est.bidders = bidders;
    double sum = 0.0;
    for (double x : outcomes) sum += x;
    est.mean = sum / static_cast<double>(n);
    if (n < 2) {
        return est;
    }
    double m2 = 0.0;
    double m4 = 0.0;
    for (double x : outcomes) {
        const double d = x - est.mean;
        const double d2 = d * d;
        m2 += d2;
        m4 += d2 * d2;
    }
    const double nn = static_cast<double>(n);
    const double var = m2 / (nn - 1.0);
    est.std = std::sqrt(var);
    est.std_error = est.std / std::sqrt(nn);
    if (est.std > 0.0) {
        const double central4 = m4 / nn;
        const double var_of_var = std::max(0.0, (central4 - (nn - 3.0) / (nn - 1.0) * var * var) / nn);
        est.std_error_of_std = std::sqrt(var_of_var) / (2.0 * est.std);
    }
    return est;
}

double BidModelPayments::mean_payment(double xi) const {
    return second_price_moments(xi, bids_).mean;
}

double BidModelPayments::payment_std(double xi) const {
    return second_price_moments(xi, bids_).std;
}

std::pair<double, double> BidModelPayments::moments(double xi) const {
    const auto m = second_price_moments(xi, bids_);
    return {m.mean, m.std};
}

}  // namespace pgrtb
