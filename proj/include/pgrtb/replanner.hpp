#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pgrtb/dp_solver.hpp"

namespace pgrtb {

enum class NoiseKind { gaussian, rademacher };

const char* to_string(NoiseKind kind);
NoiseKind noise_kind_from_string(const std::string& name);

struct UncertaintySpec {
    double epsilon = 0.0;  // relative shock size; 0 turns the walk off
    std::uint64_t noise_seed = 0;
    NoiseKind noise_kind = NoiseKind::gaussian;
};

// Zero-mean, unit-variance shock for `step`, a pure function of (seed, step).
double demand_noise(const UncertaintySpec& spec, int step);

// Q * (1 + epsilon * noise) rounded to the nearest integer and kept above the
// remaining supply. epsilon = 0 returns Q unchanged.
std::int64_t apply_demand_shock(std::int64_t demand, double epsilon, double noise,
                                std::int64_t remaining_supply);

std::int64_t update_demand(std::int64_t demand, const UncertaintySpec& spec, int step,
                           std::int64_t remaining_supply);

struct ReplanStep {
    int step = 0;
    std::int64_t committed = 0;        // contracts sold at this step
    std::int64_t cumulative = 0;
    double price = 0.0;
    bool sale = false;
    double planned_revenue = 0.0;      // revenue_total of the plan in force at this step
    std::int64_t planned_total_sold = 0;
    std::int64_t remaining_demand = 0; // before the shock that follows the step
    double noise = 0.0;
    std::int64_t shocked_demand = 0;   // remaining demand after the shock
};

struct ReplanResult {
    PricePlan plan;  // realized path, revenue under the final demand
    std::vector<ReplanStep> trace;
    bool supply_exhausted = false;
    int solves = 0;
};

// Commits one step of the current optimal plan, shocks the remaining demand,
// and re-optimizes the rest of the horizon from the committed state.
ReplanResult replan(const MarketConfig& cfg, const TimeGrid& grid, const PaymentModel& payments,
                    const UncertaintySpec& spec, int threads = 1);

}  // namespace pgrtb
