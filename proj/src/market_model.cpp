#include "pgrtb/market_model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pgrtb/errors.hpp"

namespace pgrtb {

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) {
        throw ConfigError("invalid market config: " + what);
    }
}

void check_index(int n, int steps) {
    if (n < 0 || n > steps) {
        throw IndexError("step index " + std::to_string(n) + " outside [0, " +
                         std::to_string(steps) + "]");
    }
}

}  // namespace

void validate(const MarketConfig& cfg) {
    require(cfg.supply > 0, "supply_S must be positive");
    require(cfg.demand > cfg.supply, "demand_Q must exceed supply_S");
    require(std::isfinite(cfg.horizon) && cfg.horizon > 0.0, "horizon_T must be positive");
    require(cfg.steps >= 1, "steps_N must be at least 1");
    require(std::isfinite(cfg.arrival_rate) && cfg.arrival_rate >= 0.0,
            "arrival_rate_lambda must be non-negative");
    const double rate_cap = static_cast<double>(cfg.demand) / cfg.horizon;
    require(cfg.arrival_rate <= rate_cap * (1.0 + 1e-12),
            "arrival_rate_lambda must not exceed demand_Q / horizon_T");
    require(cfg.initial_arrival_mass >= 0.0 && cfg.initial_arrival_mass <= 1.0,
            "initial_arrival_mass must lie in [0, 1]");
    require(std::isfinite(cfg.price_sensitivity) && cfg.price_sensitivity > 0.0,
            "price_effect_alpha must be positive");
    require(std::isfinite(cfg.time_sensitivity) && cfg.time_sensitivity >= 0.0,
            "time_effect_beta must be non-negative");
    require(std::isfinite(cfg.risk_aversion) && cfg.risk_aversion >= 0.0,
            "risk_level_zeta must be non-negative");
    require(std::isfinite(cfg.risk_decay) && cfg.risk_decay >= 0.0,
            "risk_decay_v must be non-negative");
    require(cfg.miss_probability >= 0.0 && cfg.miss_probability <= 1.0,
            "miss_prob_omega must lie in [0, 1]");
    require(std::isfinite(cfg.penalty_multiplier) && cfg.penalty_multiplier >= 0.0,
            "penalty_size_varpi must be non-negative");
    require(cfg.miss_probability * cfg.penalty_multiplier <= 1.0,
            "miss_prob_omega * penalty_size_varpi must not exceed 1");
    require(std::isfinite(cfg.max_value) && cfg.max_value > 0.0, "max_value_pi must be positive");
    require(std::isfinite(cfg.reserve_price) && cfg.reserve_price >= 0.0,
            "reserve_price_r0 must be non-negative");
}

TimeGrid::TimeGrid(double horizon, int steps) {
    if (!(horizon > 0.0) || steps < 1) {
        throw ConfigError("time grid needs horizon > 0 and at least one step");
    }
    points_.resize(static_cast<std::size_t>(steps) + 1);
    for (int n = 0; n < steps; ++n) {
        points_[static_cast<std::size_t>(n)] = horizon * n / steps;
    }
    points_.back() = horizon;
}

TimeGrid TimeGrid::for_config(const MarketConfig& cfg) {
    return TimeGrid(cfg.horizon, cfg.steps);
}

double expected_arrivals(int n, const MarketConfig& cfg) {
    check_index(n, cfg.steps);
    double f = cfg.arrival_rate * cfg.step_length();
    if (n == 0) {
        f += cfg.initial_arrival_mass * static_cast<double>(cfg.demand);
    }
    return f;
}

double cumulative_arrivals(int n, const MarketConfig& cfg) {
    check_index(n, cfg.steps);
    double total = 0.0;
    for (int i = 0; i <= n; ++i) {
        total += expected_arrivals(i, cfg);
    }
    return total;
}

double purchase_ratio(int n, double price, const MarketConfig& cfg, const TimeGrid& grid) {
    check_index(n, grid.steps());
    if (std::isnan(price) || price < 0.0) {
        throw DomainError("purchase_ratio: price must be non-negative");
    }
    const double scale =
        cfg.price_sensitivity * (1.0 + cfg.time_sensitivity * grid.time_to_go(static_cast<std::size_t>(n)));
    return std::exp(-scale * price);
}

double backlog_demand(int n, std::span<const double> prior_prices, const MarketConfig& cfg,
                      const TimeGrid& grid) {
    check_index(n, grid.steps());
    if (prior_prices.size() != static_cast<std::size_t>(n)) {
        throw ArgumentError("backlog_demand: expected " + std::to_string(n) + " prior prices, got " +
                            std::to_string(prior_prices.size()));
    }
    // Walk backwards so the survival product over j = i..n-1 is built incrementally.
    double backlog = 0.0;
    double survive = 1.0;
    for (int i = n - 1; i >= 0; --i) {
        survive *= 1.0 - purchase_ratio(i, prior_prices[static_cast<std::size_t>(i)], cfg, grid);
        backlog += expected_arrivals(i, cfg) * survive;
    }
    return backlog + expected_arrivals(n, cfg);
}

double risk_preference(int n, const MarketConfig& cfg, const TimeGrid& grid) {
    check_index(n, grid.steps());
    return cfg.risk_aversion * std::exp(-cfg.risk_decay * grid[static_cast<std::size_t>(n)]);
}

double censored_bound(int n, double xi, const MarketConfig& cfg, const TimeGrid& grid,
                      const PaymentModel& payments) {
    const double delta = risk_preference(n, cfg, grid);
    if (!(xi > 1.0)) {
        return cfg.reserve_price;
    }
    const double risk_aware =
        expected_payment(payments, xi, cfg.reserve_price) + delta * payment_dispersion(payments, xi);
    return std::min(risk_aware, cfg.max_value);
}

}  // namespace pgrtb
