#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "pgrtb/payment_model.hpp"

namespace pgrtb {

// Exogenous scalars of one optimization instance. Prices and values are CPM.
struct MarketConfig {
    std::int64_t supply = 0;           // S, impressions in the delivery period
    std::int64_t demand = 0;           // Q, unit-demand advertisers
    double horizon = 1.0;              // T, selling-period length
    int steps = 1;                     // N, so the grid has N + 1 points
    double arrival_rate = 0.0;         // lambda, arrivals per unit time
    double initial_arrival_mass = 0.2; // fraction of Q present at t0
    double price_sensitivity = 1.0;    // alpha
    double time_sensitivity = 0.0;     // beta
    double risk_aversion = 0.0;        // zeta
    double risk_decay = 0.0;           // v
    double miss_probability = 0.0;     // omega
    double penalty_multiplier = 0.0;   // varpi
    double max_value = 1.0;            // pi
    double reserve_price = 0.0;        // r0

    double step_length() const { return horizon / static_cast<double>(steps); }

    // Expected PG revenue retained per unit of contract price after penalties.
    double pg_revenue_factor() const { return 1.0 - miss_probability * penalty_multiplier; }
};

// Throws ConfigError when a field or a cross-field invariant is violated.
void validate(const MarketConfig& cfg);

// Equally spaced selling-period time points t_0 = 0, ..., t_N = T.
class TimeGrid {
public:
    TimeGrid(double horizon, int steps);
    static TimeGrid for_config(const MarketConfig& cfg);

    double operator[](std::size_t n) const { return points_[n]; }
    std::size_t size() const { return points_.size(); }
    int steps() const { return static_cast<int>(points_.size()) - 1; }
    double horizon() const { return points_.back(); }
    std::span<const double> points() const { return points_; }

    // t_N - t_n
    double time_to_go(std::size_t n) const { return points_.back() - points_[n]; }

private:
    std::vector<double> points_;
};

// f(t_n): lambda * dt, plus the initial mass * Q at n = 0.
double expected_arrivals(int n, const MarketConfig& cfg);

// Sum of f(t_i) for i <= n, accumulated in index order.
double cumulative_arrivals(int n, const MarketConfig& cfg);

// theta(t_n, p) = exp(-alpha * p * (1 + beta * (t_N - t_n))). Accepts p = +inf.
double purchase_ratio(int n, double price, const MarketConfig& cfg, const TimeGrid& grid);

// eta(t_n): advertisers present at t_n who have not bought yet, given the
// prices posted at t_0..t_{n-1}. A price of +inf means no sale at that step.
double backlog_demand(int n, std::span<const double> prior_prices, const MarketConfig& cfg,
                      const TimeGrid& grid);

// delta(t_n) = zeta * exp(-v * t_n)
double risk_preference(int n, const MarketConfig& cfg, const TimeGrid& grid);

// Phi(t_n) = min{phi(xi) + delta(t_n) psi(xi), pi}; falls back to the reserve
// price when xi <= 1.
double censored_bound(int n, double xi, const MarketConfig& cfg, const TimeGrid& grid,
                      const PaymentModel& payments);

}  // namespace pgrtb
