#include "pgrtb/dp_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "pgrtb/errors.hpp"
#include "pgrtb/parallel.hpp"

namespace pgrtb {

namespace {

constexpr double kUnreachable = -std::numeric_limits<double>::infinity();

double price_denominator(int n, const MarketConfig& cfg, const TimeGrid& grid) {
    return cfg.price_sensitivity * (1.0 + cfg.time_sensitivity * grid.time_to_go(static_cast<std::size_t>(n)));
}

double split_price(double cum_arrivals, std::int64_t sold_before, std::int64_t sell_now, double k) {
    return -(std::log(static_cast<double>(sell_now)) -
             std::log(cum_arrivals - static_cast<double>(sold_before))) /
           k;
}

// PG revenue of one step, penalty expectation included.
double step_revenue(double price, std::int64_t sell_now, const MarketConfig& cfg) {
    return cfg.pg_revenue_factor() * price * static_cast<double>(sell_now);
}

std::int64_t sale_upper_bound(double cum_arrivals, std::int64_t supply) {
    return std::min(supply, static_cast<std::int64_t>(std::floor(cum_arrivals)));
}

void check_step(int n, const TimeGrid& grid) {
    if (n < 0 || n > grid.steps()) {
        throw IndexError("step " + std::to_string(n) + " outside [0, " + std::to_string(grid.steps()) + "]");
    }
}

}  // namespace

double competition_level(std::int64_t demand, std::int64_t supply, std::int64_t sold) {
    if (sold < 0 || sold > supply || sold >= demand) {
        throw ArgumentError("competition_level needs 0 <= sold <= S and sold < Q");
    }
    if (sold == supply) {
        return std::numeric_limits<double>::infinity();
    }
    return static_cast<double>(demand - sold) / static_cast<double>(supply - sold);
}

std::optional<double> price_from_allocation(int n, std::int64_t sell_now, std::int64_t sold_before,
                                            double cum_arrivals, const MarketConfig& cfg,
                                            const TimeGrid& grid) {
    check_step(n, grid);
    if (sell_now < 0 || sold_before < 0) {
        throw InfeasibleSplit("negative split");
    }
    if (sell_now == 0) {
        return std::nullopt;
    }
    if (cum_arrivals - static_cast<double>(sold_before) < static_cast<double>(sell_now)) {
        throw InfeasibleSplit("cannot sell " + std::to_string(sell_now) + " contracts to " +
                              std::to_string(cum_arrivals - static_cast<double>(sold_before)) +
                              " present advertisers");
    }
    return split_price(cum_arrivals, sold_before, sell_now, price_denominator(n, cfg, grid));
}

PaymentTable::PaymentTable(const MarketConfig& cfg, std::int64_t demand, const PaymentModel& payments,
                           int threads) {
    const auto count = static_cast<std::size_t>(cfg.supply + 1);
    xi_.resize(count);
    phi_.resize(count);
    psi_.resize(count);
    parallel_for(count, threads, [&](std::size_t i) {
        const auto y = static_cast<std::int64_t>(i);
        const double xi = competition_level(demand, cfg.supply, y);
        xi_[i] = xi;
        if (xi >= 2.0) {
            const auto [m, s] = payments.moments(xi);
            phi_[i] = m;
            psi_[i] = s;
        } else {
            phi_[i] = expected_payment(payments, xi, cfg.reserve_price);
            psi_[i] = payment_dispersion(payments, xi);
        }
    });
}

double PaymentTable::bound(int n, std::int64_t y, const MarketConfig& cfg, const TimeGrid& grid) const {
    const double delta = risk_preference(n, cfg, grid);
    if (!(xi(y) > 1.0)) {
        return cfg.reserve_price;
    }
    const double risk_aware = phi(y) + delta * psi(y);
    return std::min(risk_aware, cfg.max_value);
}

double PaymentTable::rtb_revenue(std::int64_t y, std::int64_t supply) const {
    if (y == supply) {
        return 0.0;
    }
    return static_cast<double>(supply - y) * phi(y);
}

double DpTables::value(int n, std::int64_t y) const {
    const auto row = static_cast<std::size_t>(n - first_step);
    if (n < first_step || row >= revenue.size() || y < lower[row] || y > upper[row]) {
        return kUnreachable;
    }
    return revenue[row][static_cast<std::size_t>(y - lower[row])];
}

const SplitChoice& DpTables::split(int n, std::int64_t y) const {
    const auto row = static_cast<std::size_t>(n - first_step);
    if (n < first_step || row >= choice.size() || y < lower[row] || y > upper[row]) {
        throw IndexError("no DP entry at step " + std::to_string(n) + ", y = " + std::to_string(y));
    }
    return choice[row][static_cast<std::size_t>(y - lower[row])];
}

std::pair<double, SplitChoice> opt_h(int n, std::int64_t y, const DpTables& tables,
                                     const MarketConfig& cfg, const TimeGrid& grid,
                                     const PaymentTable& table) {
    const double cum = tables.arrivals[static_cast<std::size_t>(n)];
    const double k = price_denominator(n, cfg, grid);
    const double cap = table.bound(n, y, cfg, grid);

    std::int64_t prev_lo = tables.seed_sold;
    std::int64_t prev_hi = tables.seed_sold;
    if (n > tables.first_step) {
        const auto prev = static_cast<std::size_t>(n - 1 - tables.first_step);
        prev_lo = tables.lower[prev];
        prev_hi = tables.upper[prev];
    }
    auto previous = [&](std::int64_t z1) {
        return n > tables.first_step ? tables.value(n - 1, z1) : tables.seed_revenue;
    };

    double best = kUnreachable;
    SplitChoice best_choice{y, 0, cap};
    // sell_now ascending so that ties keep the smaller sale.
    for (std::int64_t z1 = std::min(y, prev_hi); z1 >= prev_lo; --z1) {
        const std::int64_t z2 = y - z1;
        const double before = previous(z1);
        if (before == kUnreachable) {
            continue;
        }
        double value = before;
        double price = cap;
        if (z2 > 0) {
            price = split_price(cum, z1, z2, k);
            if (price > cap) {
                continue;
            }
            value = before + step_revenue(price, z2, cfg);
        }
        if (value > best) {
            best = value;
            best_choice = {z1, z2, price};
        }
    }
    return {best, best_choice};
}

namespace {

PricePlan trace_plan(const DpTables& tables, std::int64_t y_end, const MarketConfig& cfg,
                     const TimeGrid& grid, const PaymentTable& table) {
    const int last = grid.steps();
    PricePlan plan;
    plan.supply = cfg.supply;
    plan.demand = cfg.demand;
    plan.steps.resize(static_cast<std::size_t>(last - tables.first_step + 1));
    std::int64_t y = y_end;
    for (int n = last; n >= tables.first_step; --n) {
        const SplitChoice& c = tables.split(n, y);
        PlanStep& st = plan.steps[static_cast<std::size_t>(n - tables.first_step)];
        st.time = grid[static_cast<std::size_t>(n)];
        st.sale = c.sell_now > 0;
        st.sold = c.sell_now;
        st.cumulative = y;
        st.bound = table.bound(n, y, cfg, grid);
        st.price = st.sale ? c.price : st.bound;
        st.competition = table.xi(y);
        y = c.sold_before;
    }
    plan.total_sold = y_end;
    plan.gamma = static_cast<double>(y_end) / static_cast<double>(cfg.supply);
    plan.revenue_pg = tables.value(last, y_end);
    plan.revenue_rtb = table.rtb_revenue(y_end, cfg.supply);
    plan.revenue_total = plan.revenue_pg + plan.revenue_rtb;
    plan.xi_terminal = table.xi(y_end);
    return plan;
}

}  // namespace

DpResult solve_from(const MarketConfig& cfg, const TimeGrid& grid, const PaymentModel& payments,
                    const SellingState& state, int threads) {
    validate(cfg);
    const int last = grid.steps();
    if (last != cfg.steps) {
        throw ArgumentError("time grid does not match the configured number of steps");
    }
    check_step(state.step, grid);
    if (state.sold < 0 || state.sold > cfg.supply) {
        throw ArgumentError("committed sales outside [0, S]");
    }
    if (state.demand <= cfg.supply) {
        throw ConfigError("demand must exceed supply");
    }

    MarketConfig local = cfg;
    local.demand = state.demand;
    const PaymentTable table(local, state.demand, payments, threads);

    DpTables tables;
    tables.first_step = state.step;
    tables.seed_sold = state.sold;
    tables.seed_revenue = state.revenue_pg;
    tables.arrivals.resize(static_cast<std::size_t>(last + 1));
    double cum = 0.0;
    for (int n = 0; n <= last; ++n) {
        cum += expected_arrivals(n, cfg);
        tables.arrivals[static_cast<std::size_t>(n)] = cum;
    }

    for (int n = state.step; n <= last; ++n) {
        const std::int64_t lo = state.sold;
        const std::int64_t hi =
            std::max(lo, sale_upper_bound(tables.arrivals[static_cast<std::size_t>(n)], cfg.supply));
        const auto width = static_cast<std::size_t>(hi - lo + 1);
        std::vector<double> row(width, kUnreachable);
        std::vector<SplitChoice> picks(width);
        parallel_for(width, threads, [&](std::size_t i) {
            const auto [v, c] = opt_h(n, lo + static_cast<std::int64_t>(i), tables, local, grid, table);
            row[i] = v;
            picks[i] = c;
        });
        tables.lower.push_back(lo);
        tables.upper.push_back(hi);
        tables.revenue.push_back(std::move(row));
        tables.choice.push_back(std::move(picks));
    }

    const auto final_row = static_cast<std::size_t>(last - state.step);
    const std::int64_t lo = tables.lower[final_row];
    const std::int64_t hi = tables.upper[final_row];
    tables.terminal.assign(static_cast<std::size_t>(hi - lo + 1), kUnreachable);
    double best = kUnreachable;
    std::int64_t best_y = -1;
    for (std::int64_t y = lo; y <= hi; ++y) {
        const double h = tables.value(last, y);
        if (h == kUnreachable) {
            continue;
        }
        const double r = h + table.rtb_revenue(y, cfg.supply);
        tables.terminal[static_cast<std::size_t>(y - lo)] = r;
        if (r > best) {
            best = r;
            best_y = y;
        }
    }
    if (best_y < 0) {
        throw std::logic_error("no reachable terminal state");
    }
    PricePlan plan = trace_plan(tables, best_y, local, grid, table);
    plan.revenue_total = best;
    return {std::move(plan), std::move(tables)};
}

DpResult opt_r(const MarketConfig& cfg, const TimeGrid& grid, const PaymentModel& payments, int threads) {
    DpResult result = solve_from(cfg, grid, payments, SellingState{0, 0, 0.0, cfg.demand}, threads);
    annotate_backlog(result.plan, cfg, grid);
    return result;
}

PricePlan brute_force_optimum(const MarketConfig& cfg, const TimeGrid& grid, const PaymentModel& payments) {
    validate(cfg);
    const int last = grid.steps();
    if (last > 5 || cfg.supply > 10) {
        throw GuardError("brute force limited to N <= 5 and S <= 10");
    }
    const PaymentTable table(cfg, cfg.demand, payments);
    std::vector<double> cum(static_cast<std::size_t>(last + 1));
    std::vector<std::int64_t> upper(cum.size());
    for (int n = 0; n <= last; ++n) {
        cum[static_cast<std::size_t>(n)] = cumulative_arrivals(n, cfg);
        upper[static_cast<std::size_t>(n)] = sale_upper_bound(cum[static_cast<std::size_t>(n)], cfg.supply);
    }

    std::vector<std::int64_t> path(cum.size(), 0);
    std::vector<double> prices(cum.size(), 0.0);
    std::vector<std::int64_t> best_path;
    std::vector<double> best_prices;
    double best_total = kUnreachable;
    double best_pg = 0.0;

    // Larger revenue wins; ties prefer smaller final sales, then smaller sales
    // at the latest differing step.
    auto preferred = [&](double total) {
        if (best_path.empty() || total > best_total) return true;
        if (total < best_total) return false;
        if (path.back() != best_path.back()) return path.back() < best_path.back();
        for (int n = last - 1; n >= 0; --n) {
            const auto i = static_cast<std::size_t>(n);
            if (path[i] != best_path[i]) return path[i] > best_path[i];
        }
        return false;
    };

    auto recurse = [&](auto&& self, int n, std::int64_t prev, double acc) -> void {
        const auto i = static_cast<std::size_t>(n);
        for (std::int64_t y = prev; y <= std::max(prev, upper[i]); ++y) {
            const std::int64_t now = y - prev;
            const double cap = table.bound(n, y, cfg, grid);
            double value = acc;
            double price = cap;
            if (now > 0) {
                price = *price_from_allocation(n, now, prev, cum[i], cfg, grid);
                if (price > cap) {
                    continue;
                }
                value = acc + step_revenue(price, now, cfg);
            }
            path[i] = y;
            prices[i] = price;
            if (n == last) {
                const double total = value + table.rtb_revenue(y, cfg.supply);
                if (preferred(total)) {
                    best_total = total;
                    best_pg = value;
                    best_path = path;
                    best_prices = prices;
                }
            } else {
                self(self, n + 1, y, value);
            }
        }
    };
    recurse(recurse, 0, 0, 0.0);

    PricePlan plan;
    plan.supply = cfg.supply;
    plan.demand = cfg.demand;
    std::int64_t prev = 0;
    for (int n = 0; n <= last; ++n) {
        const auto i = static_cast<std::size_t>(n);
        PlanStep st;
        st.time = grid[i];
        st.sold = best_path[i] - prev;
        st.sale = st.sold > 0;
        st.cumulative = best_path[i];
        st.bound = table.bound(n, best_path[i], cfg, grid);
        st.price = best_prices[i];
        st.competition = table.xi(best_path[i]);
        plan.steps.push_back(st);
        prev = best_path[i];
    }
    plan.total_sold = best_path.back();
    plan.gamma = static_cast<double>(plan.total_sold) / static_cast<double>(cfg.supply);
    plan.revenue_pg = best_pg;
    plan.revenue_rtb = table.rtb_revenue(plan.total_sold, cfg.supply);
    plan.revenue_total = best_total;
    plan.xi_terminal = table.xi(plan.total_sold);
    annotate_backlog(plan, cfg, grid);
    return plan;
}

double replay_revenue(const PricePlan& plan, const MarketConfig& cfg, const TimeGrid& grid,
                      const PaymentModel& payments) {
    if (plan.steps.size() != grid.size()) {
        throw ArgumentError("replay_revenue needs a full plan");
    }
    double pg = 0.0;
    std::int64_t sold = 0;
    for (const auto& st : plan.steps) {
        if (st.sale) {
            pg = pg + step_revenue(st.price, st.sold, cfg);
            sold += st.sold;
        }
    }
    if (sold == cfg.supply) {
        return pg;
    }
    const double xi = competition_level(plan.demand, cfg.supply, sold);
    return pg + static_cast<double>(cfg.supply - sold) * expected_payment(payments, xi, cfg.reserve_price);
}

void annotate_backlog(PricePlan& plan, const MarketConfig& cfg, const TimeGrid& grid) {
    if (plan.steps.size() != grid.size()) {
        throw ArgumentError("annotate_backlog needs a full plan");
    }
    std::vector<double> posted;
    posted.reserve(plan.steps.size());
    for (std::size_t n = 0; n < plan.steps.size(); ++n) {
        auto& st = plan.steps[n];
        st.expected_arrivals = expected_arrivals(static_cast<int>(n), cfg);
        st.backlog = backlog_demand(static_cast<int>(n), posted, cfg, grid);
        posted.push_back(st.sale ? st.price : std::numeric_limits<double>::infinity());
    }
}

std::vector<double> PricePlan::prices() const {
    std::vector<double> out;
    for (const auto& st : steps) out.push_back(st.price);
    return out;
}

std::vector<std::int64_t> PricePlan::sales() const {
    std::vector<std::int64_t> out;
    for (const auto& st : steps) out.push_back(st.sold);
    return out;
}

}  // namespace pgrtb
