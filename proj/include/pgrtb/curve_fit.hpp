#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pgrtb/payment_model.hpp"

namespace pgrtb {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

enum class FitMethod { lowess, polynomial, sigmoid };

const char* to_string(FitMethod method);
FitMethod fit_method_from_string(const std::string& name);

// A fitted scalar curve. Evaluation outside [x_min, x_max] clamps to the
// boundary value.
//   lowess:     piecewise-linear through `knots`
//   polynomial: sum_k coefficients[k] * t^k, t = x rescaled to [-1, 1];
//               a single coefficient is a constant curve
//   sigmoid:    a / (1 + exp(-b (x - c))) + d with coefficients {a, b, c, d}
struct FittedCurve {
    FitMethod method = FitMethod::polynomial;
    std::vector<Point> knots;
    std::vector<double> coefficients;
    double x_min = 0.0;
    double x_max = 0.0;
    double rmse = 0.0;

    double operator()(double x) const;
    int degree() const { return static_cast<int>(coefficients.size()) - 1; }
};

FittedCurve constant_curve(std::span<const Point> points);

// Cleveland's robust locally weighted linear regression: tricube neighborhood
// weights over the floor(fraction * n) nearest points (at least 2), then `iterations`
// reweighting passes with bisquare weights on 6 * median |residual|.
FittedCurve lowess(std::span<const Point> points, double fraction = 0.3, int iterations = 3);

FittedCurve polynomial_fit(std::span<const Point> points, int degree = 2);

// Scaled logistic fitted by a (b, c) grid with a closed-form (a, d) solve,
// followed by a pattern-search refinement on RMSE.
FittedCurve sigmoid_fit(std::span<const Point> points);

struct FitOptions {
    std::optional<FitMethod> method;  // unset: choose the lowest training RMSE
    double lowess_fraction = 0.3;
    int lowess_iterations = 3;
    int polynomial_degree = 2;
};

// Fits every applicable method and keeps the lowest RMSE (ties prefer lowess,
// then polynomial). Points sharing one x value give a constant curve.
FittedCurve fit_best(std::span<const Point> points, const FitOptions& options = {});

// One observed auction: its bids in descending order.
struct AuctionSummary {
    std::string auction_id;
    std::optional<std::int64_t> hour;  // hours since the Unix epoch
    std::vector<double> bids;

    static AuctionSummary from_bids(std::string id, std::optional<std::int64_t> hour,
                                    std::vector<double> bids);

    int competition() const { return static_cast<int>(bids.size()); }
    double winning_bid() const { return bids.front(); }
    double payment() const { return bids.size() >= 2 ? bids[1] : 0.0; }
};

struct PaymentFit {
    FittedCurve phi;
    FittedCurve psi;
    std::vector<Point> phi_points;
    std::vector<Point> psi_points;
};

// Aggregates auctions into (competition, mean payment) and (competition,
// payment std) points per (hour, bidder count) bucket, then fits both curves.
PaymentFit fit_phi_psi(std::span<const AuctionSummary> auctions, const FitOptions& options = {});

// Largest hourly average bid.
double estimate_pi(std::span<const AuctionSummary> auctions);

// PaymentModel backed by fitted curves; negative fitted values clamp to 0.
class CurvePayments final : public PaymentModel {
public:
    CurvePayments(FittedCurve phi, FittedCurve psi) : phi_(std::move(phi)), psi_(std::move(psi)) {}

    double mean_payment(double xi) const override;
    double payment_std(double xi) const override;

    const FittedCurve& phi() const { return phi_; }
    const FittedCurve& psi() const { return psi_; }

private:
    FittedCurve phi_;
    FittedCurve psi_;
};

}  // namespace pgrtb
