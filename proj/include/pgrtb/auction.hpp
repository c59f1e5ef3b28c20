#pragma once

#include <cstdint>

#include "pgrtb/bid_model.hpp"
#include "pgrtb/payment_model.hpp"

namespace pgrtb {

// Mean and standard deviation of the second-highest of xi i.i.d. bids.
struct OrderStatisticMoments {
    double mean = 0.0;
    double std = 0.0;
};

// Quadrature over the second-order-statistic density
//   xi (xi - 1) g(x) [1 - F(x)] F(x)^(xi - 2)
// with real-valued xi >= 2. xi = +inf gives the top of the support.
OrderStatisticMoments second_price_moments(double xi, const BidModel& bids);

// phi(xi); below two bidders the auction clears at the reserve price.
double expected_second_price(double xi, const BidModel& bids, double reserve_price = 0.0);

// psi(xi), the standard deviation of the second price; 0 below two bidders.
double second_price_std(double xi, const BidModel& bids);

struct McEstimate {
    double mean = 0.0;
    double std = 0.0;
    double std_error = 0.0;         // of the mean
    double std_error_of_std = 0.0;  // delta-method standard error of `std`
    std::int64_t trials = 0;
    int bidders = 0;
};

// Monte Carlo estimate of the second price with ceil(xi) bidders per auction.
// Work is split into fixed shards seeded from (seed, shard), so the result is
// identical for any thread count.
McEstimate mc_second_price(double xi, const BidModel& bids, std::int64_t trials, std::uint64_t seed,
                           int threads = 1);

// PaymentModel backed by quadrature on a bid distribution.
class BidModelPayments final : public PaymentModel {
public:
    explicit BidModelPayments(BidModel bids) : bids_(std::move(bids)) {}

    double mean_payment(double xi) const override;
    double payment_std(double xi) const override;
    std::pair<double, double> moments(double xi) const override;

    const BidModel& bids() const { return bids_; }

private:
    BidModel bids_;
};

}  // namespace pgrtb
