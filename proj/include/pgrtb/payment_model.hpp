#pragma once

#include <utility>

namespace pgrtb {

// Source of the RTB payment curves: expected second price and its dispersion
// as functions of the competition level (bidders per impression).
// Implementations are only queried for xi >= 2; xi may be +infinity.
class PaymentModel {
public:
    virtual ~PaymentModel() = default;

    virtual double mean_payment(double xi) const = 0;
    virtual double payment_std(double xi) const = 0;

    // Both curves at once; overridden where they share work.
    virtual std::pair<double, double> moments(double xi) const {
        return {mean_payment(xi), payment_std(xi)};
    }
};

// Expected payment with the reserve-price rule applied below two bidders.
double expected_payment(const PaymentModel& model, double xi, double reserve_price);

// Payment dispersion; zero below two bidders (the auction clears at the reserve).
double payment_dispersion(const PaymentModel& model, double xi);

}  // namespace pgrtb
