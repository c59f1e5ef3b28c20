#pragma once

#include <cmath>
#include <cstdint>

#include "oracles.hpp"
#include "pgrtb/market_model.hpp"
#include "pgrtb/payment_model.hpp"
#include "pgrtb/rng.hpp"

namespace fixtures {

// Closed-form uniform[0, b] payments, independent of the quadrature code.
class UniformPayments final : public pgrtb::PaymentModel {
public:
    explicit UniformPayments(double b = 1.0) : curves_{b} {}
    double mean_payment(double xi) const override { return curves_.phi(xi); }
    double payment_std(double xi) const override { return curves_.psi(xi); }
    const oracle::UniformCurves& curves() const { return curves_; }

private:
    oracle::UniformCurves curves_;
};

inline pgrtb::MarketConfig reference_market() {
    pgrtb::MarketConfig c;
    c.supply = 200;
    c.demand = 1800;
    c.horizon = 31;
    c.steps = 31;
    c.arrival_rate = 46.45;
    c.initial_arrival_mass = 0.2;
    c.price_sensitivity = 2.0;
    c.time_sensitivity = 0.05;
    c.risk_aversion = 10;
    c.risk_decay = 0.1;
    c.miss_probability = 0.05;
    c.penalty_multiplier = 0.5;
    c.max_value = 4.0;
    return c;
}

inline double uniform_real(pgrtb::Rng& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

// Random valid small instance within the brute-force limits.
inline pgrtb::MarketConfig random_small_market(pgrtb::Rng& rng, int max_steps = 4, std::int64_t max_supply = 8,
                                               std::int64_t max_demand = 16) {
    pgrtb::MarketConfig c;
    c.steps = std::uniform_int_distribution<int>(1, max_steps)(rng);
    c.supply = std::uniform_int_distribution<std::int64_t>(1, max_supply)(rng);
    c.demand = std::uniform_int_distribution<std::int64_t>(c.supply + 1, std::max(c.supply + 1, max_demand))(rng);
    c.horizon = uniform_real(rng, 0.5, 10.0);
    c.arrival_rate = uniform_real(rng, 0.0, 1.0) * static_cast<double>(c.demand) / c.horizon;
    c.initial_arrival_mass = uniform_real(rng, 0.0, 0.5);
    c.price_sensitivity = uniform_real(rng, 0.2, 4.0);
    c.time_sensitivity = uniform_real(rng, 0.0, 1.0);
    c.risk_aversion = uniform_real(rng, 0.0, 50.0);
    c.risk_decay = uniform_real(rng, 0.0, 1.0);
    c.miss_probability = uniform_real(rng, 0.0, 1.0);
    c.penalty_multiplier = uniform_real(rng, 0.0, 1.0);
    c.max_value = uniform_real(rng, 0.2, 3.0);
    return c;
}

}  // namespace fixtures
