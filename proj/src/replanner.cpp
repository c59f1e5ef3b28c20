#include "pgrtb/replanner.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "pgrtb/errors.hpp"
#include "pgrtb/rng.hpp"

namespace pgrtb {

const char* to_string(NoiseKind kind) {
    return kind == NoiseKind::gaussian ? "gaussian" : "rademacher";
}

NoiseKind noise_kind_from_string(const std::string& name) {
    if (name == "gaussian") return NoiseKind::gaussian;
    if (name == "rademacher") return NoiseKind::rademacher;
    throw ArgumentError("unknown noise kind '" + name + "'");
}

double demand_noise(const UncertaintySpec& spec, int step) {
    Rng rng(derive_seed(spec.noise_seed, static_cast<std::uint64_t>(step)));
    if (spec.noise_kind == NoiseKind::rademacher) {
        return (rng() >> 63) != 0 ? 1.0 : -1.0;
    }
    return std::normal_distribution<double>(0.0, 1.0)(rng);
}

std::int64_t apply_demand_shock(std::int64_t demand, double epsilon, double noise,
                                std::int64_t remaining_supply) {
    if (demand <= 0) {
        throw ArgumentError("demand must be positive");
    }
    if (epsilon < 0.0) {
        throw ArgumentError("epsilon must be non-negative");
    }
    if (epsilon == 0.0) {
        return demand;
    }
    const double shocked = static_cast<double>(demand) * (1.0 + epsilon * noise);
    return std::max(std::llround(shocked), static_cast<long long>(remaining_supply + 1));
}

std::int64_t update_demand(std::int64_t demand, const UncertaintySpec& spec, int step,
                           std::int64_t remaining_supply) {
    if (spec.epsilon == 0.0) {
        return apply_demand_shock(demand, 0.0, 0.0, remaining_supply);
    }
    return apply_demand_shock(demand, spec.epsilon, demand_noise(spec, step), remaining_supply);
}

ReplanResult replan(const MarketConfig& cfg, const TimeGrid& grid, const PaymentModel& payments,
                    const UncertaintySpec& spec, int threads) {
    validate(cfg);
    if (spec.epsilon < 0.0) {
        throw ConfigError("epsilon must be non-negative");
    }
    const int last = grid.steps();
    ReplanResult out;
    SellingState state{0, 0, 0.0, cfg.demand};
    DpResult current = solve_from(cfg, grid, payments, state, threads);
    ++out.solves;

    std::int64_t sold = 0;
    for (int n = 0; n <= last; ++n) {
        const PlanStep& st = current.plan.steps[static_cast<std::size_t>(n - state.step)];
        out.plan.steps.push_back(st);
        sold = st.cumulative;

        ReplanStep tr;
        tr.step = n;
        tr.committed = st.sold;
        tr.cumulative = sold;
        tr.price = st.price;
        tr.sale = st.sale;
        tr.planned_revenue = current.plan.revenue_total;
        tr.planned_total_sold = current.plan.total_sold;
        tr.remaining_demand = state.demand - sold;
        tr.shocked_demand = tr.remaining_demand;

        if (n == last) {
            out.trace.push_back(tr);
            break;
        }
        if (sold == cfg.supply) {
            // Nothing left to sell: the rest of the current plan is final.
            out.trace.push_back(tr);
            out.supply_exhausted = true;
            for (int m = n + 1; m <= last; ++m) {
                out.plan.steps.push_back(current.plan.steps[static_cast<std::size_t>(m - state.step)]);
            }
            break;
        }
        if (spec.epsilon != 0.0) {
            tr.noise = demand_noise(spec, n);
        }
        tr.shocked_demand = apply_demand_shock(tr.remaining_demand, spec.epsilon, tr.noise,
                                               cfg.supply - sold);
        out.trace.push_back(tr);

        // H_n(y) along the committed path is exactly the realized PG revenue.
        const double prefix = current.tables.value(n, sold);
        state = SellingState{n + 1, sold, prefix, tr.shocked_demand + sold};
        current = solve_from(cfg, grid, payments, state, threads);
        ++out.solves;
    }

    PricePlan& plan = out.plan;
    plan.supply = cfg.supply;
    plan.demand = current.plan.demand;
    plan.total_sold = current.plan.total_sold;
    plan.gamma = current.plan.gamma;
    plan.revenue_pg = current.plan.revenue_pg;
    plan.revenue_rtb = current.plan.revenue_rtb;
    plan.revenue_total = current.plan.revenue_total;
    plan.xi_terminal = current.plan.xi_terminal;
    annotate_backlog(plan, cfg, grid);
    return out;
}

}  // namespace pgrtb
