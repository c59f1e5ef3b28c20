#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "pgrtb/market_model.hpp"
#include "pgrtb/payment_model.hpp"

namespace pgrtb {

// xi = (Q - sold) / (S - sold). Returns +inf once all supply is pre-sold.
double competition_level(std::int64_t demand, std::int64_t supply, std::int64_t sold);

// Price at which sell_now of the (cum_arrivals - sold_before) present
// advertisers buy. Empty when sell_now is 0 (no sale: the price is undefined).
std::optional<double> price_from_allocation(int n, std::int64_t sell_now, std::int64_t sold_before,
                                            double cum_arrivals, const MarketConfig& cfg,
                                            const TimeGrid& grid);

// phi and psi at every cumulative PG sale count y in [0, S], evaluated once.
class PaymentTable {
public:
    PaymentTable(const MarketConfig& cfg, std::int64_t demand, const PaymentModel& payments,
                 int threads = 1);

    double xi(std::int64_t y) const { return xi_[static_cast<std::size_t>(y)]; }
    double phi(std::int64_t y) const { return phi_[static_cast<std::size_t>(y)]; }
    double psi(std::int64_t y) const { return psi_[static_cast<std::size_t>(y)]; }

    // Censored bound at step n once y contracts are sold; same arithmetic as
    // censored_bound().
    double bound(int n, std::int64_t y, const MarketConfig& cfg, const TimeGrid& grid) const;

    // RTB revenue of the unsold supply, 0 when y = S.
    double rtb_revenue(std::int64_t y, std::int64_t supply) const;

private:
    std::vector<double> xi_;
    std::vector<double> phi_;
    std::vector<double> psi_;
};

struct SplitChoice {
    std::int64_t sold_before = 0;  // z(k,1)
    std::int64_t sell_now = 0;     // z(k,2)
    double price = 0.0;            // only meaningful when sell_now > 0
};

// Rows are indexed by step; row n covers y in [lower[n], upper[n]].
// Unreachable entries hold -inf.
struct DpTables {
    int first_step = 0;
    std::int64_t seed_sold = 0;     // the single state before first_step
    double seed_revenue = 0.0;
    std::vector<double> arrivals;   // cumulative expected arrivals, indexed by step
    std::vector<std::int64_t> lower;
    std::vector<std::int64_t> upper;
    std::vector<std::vector<double>> revenue;
    std::vector<std::vector<SplitChoice>> choice;
    std::vector<double> terminal;  // R(y) over row N

    double value(int n, std::int64_t y) const;
    const SplitChoice& split(int n, std::int64_t y) const;
};

struct PlanStep {
    double time = 0.0;
    double price = 0.0;         // contract price; the bound when nothing is sold
    bool sale = false;
    std::int64_t sold = 0;
    std::int64_t cumulative = 0;
    double bound = 0.0;         // Phi(t_n) at the cumulative sales after this step
    double competition = 0.0;   // xi(t_n), +inf once supply is exhausted
    double expected_arrivals = 0.0;
    double backlog = 0.0;       // eta(t_n) under the plan's earlier prices
};

struct PricePlan {
    std::vector<PlanStep> steps;
    std::int64_t supply = 0;
    std::int64_t demand = 0;
    std::int64_t total_sold = 0;
    double gamma = 0.0;
    double revenue_pg = 0.0;
    double revenue_rtb = 0.0;
    double revenue_total = 0.0;
    double xi_terminal = 0.0;

    std::vector<double> prices() const;
    std::vector<std::int64_t> sales() const;
};

// Starting point of a (partial) optimization. Steps before `step` are
// committed: `sold` contracts are sold and earned `revenue_pg`. `demand` is the
// total demand used for xi, i.e. remaining demand plus `sold`.
struct SellingState {
    int step = 0;
    std::int64_t sold = 0;
    double revenue_pg = 0.0;
    std::int64_t demand = 0;
};

struct DpResult {
    PricePlan plan;  // steps from state.step to N
    DpTables tables;
};

// One H_n(y) update: best split of y into z(k,1) from the previous row and
// z(k,2) sold at step n, under the price bound. Ties go to the smaller sale.
std::pair<double, SplitChoice> opt_h(int n, std::int64_t y, const DpTables& tables,
                                     const MarketConfig& cfg, const TimeGrid& grid,
                                     const PaymentTable& table);

DpResult solve_from(const MarketConfig& cfg, const TimeGrid& grid, const PaymentModel& payments,
                    const SellingState& state, int threads = 1);

DpResult opt_r(const MarketConfig& cfg, const TimeGrid& grid, const PaymentModel& payments,
               int threads = 1);

// Exhaustive search over all non-decreasing cumulative sale paths. Refuses
// instances with N > 5 or S > 10.
PricePlan brute_force_optimum(const MarketConfig& cfg, const TimeGrid& grid,
                              const PaymentModel& payments);

// Expected revenue of a full plan recomputed from its prices and sales.
double replay_revenue(const PricePlan& plan, const MarketConfig& cfg, const TimeGrid& grid,
                      const PaymentModel& payments);

// Fills expected_arrivals and backlog for every step of a full plan.
void annotate_backlog(PricePlan& plan, const MarketConfig& cfg, const TimeGrid& grid);

}  // namespace pgrtb
