#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>

#include "pgrtb/auction.hpp"
#include "pgrtb/dp_solver.hpp"
#include "pgrtb/errors.hpp"
#include "pgrtb/json_io.hpp"
#include "pgrtb/parallel.hpp"
#include "pgrtb/replanner.hpp"
#include "pgrtb/run_config.hpp"
#include "pgrtb/simulator.hpp"

namespace py = pybind11;
using namespace pgrtb;

namespace {

// Configs cross the boundary as JSON text; the Python side does the dict conversion.
RunConfig config_of(const std::string& text, const std::string& base_dir) {
    return parse_run_config(nlohmann::ordered_json::parse(text), base_dir);
}

BidModelPayments payments_of(const RunConfig& cfg) {
    if (!cfg.bid_model) throw ConfigError("config needs a bid_model");
    return BidModelPayments(*cfg.bid_model);
}

int threads_or_default(int threads) {
    return threads > 0 ? threads : default_threads();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Dual-channel ad pricing core";

    m.def(
        "optimize",
        [](const std::string& config, const std::string& base_dir, int threads) {
            const RunConfig cfg = config_of(config, base_dir);
            const auto payments = payments_of(cfg);
            py::gil_scoped_release release;
            const auto plan = opt_r(cfg.market, TimeGrid::for_config(cfg.market), payments, threads_or_default(threads)).plan;
            return to_json(plan).dump();
        },
        py::arg("config"), py::arg("base_dir") = "", py::arg("threads") = 0);

    m.def(
        "replan",
        [](const std::string& config, const std::string& base_dir, int threads) {
            const RunConfig cfg = config_of(config, base_dir);
            const auto payments = payments_of(cfg);
            std::string result_json;
            std::string plan_json;
            {
                py::gil_scoped_release release;
                const auto result = replan(cfg.market, TimeGrid::for_config(cfg.market), payments, cfg.uncertainty,
                                           threads_or_default(threads));
                result_json = to_json(result).dump();
                plan_json = to_json(result.plan).dump();
            }
            return py::make_tuple(result_json, plan_json);
        },
        py::arg("config"), py::arg("base_dir") = "", py::arg("threads") = 0);

    m.def(
        "simulate",
        [](const std::string& config, const std::string& base_dir, int runs, int threads) {
            const RunConfig cfg = config_of(config, base_dir);
            const auto payments = payments_of(cfg);
            py::gil_scoped_release release;
            const TimeGrid grid = TimeGrid::for_config(cfg.market);
            const int t = threads_or_default(threads);
            const auto plan = opt_r(cfg.market, grid, payments, t).plan;
            const auto summary = evaluate_plan(plan, cfg.market, grid, *cfg.bid_model,
                                               runs > 0 ? runs : cfg.simulation.runs, cfg.seed, t, cfg.simulation.cap);
            return to_json(summary).dump();
        },
        py::arg("config"), py::arg("base_dir") = "", py::arg("runs") = 0, py::arg("threads") = 0);

    m.def(
        "second_price_moments",
        [](double xi, const std::string& bid_model) {
            const auto moments = pgrtb::second_price_moments(xi, parse_bid_model(nlohmann::ordered_json::parse(bid_model)));
            return py::make_tuple(moments.mean, moments.std);
        },
        py::arg("xi"), py::arg("bid_model"));

    m.def(
        "mc_second_price",
        [](double xi, const std::string& bid_model, std::int64_t trials, std::uint64_t seed) {
            const BidModel bids = parse_bid_model(nlohmann::ordered_json::parse(bid_model));
            McEstimate e;
            {
                py::gil_scoped_release release;
                e = pgrtb::mc_second_price(xi, bids, trials, seed, 0);
            }
            py::dict out;
            out["mean"] = e.mean;
            out["std"] = e.std;
            out["std_error"] = e.std_error;
            out["std_error_of_std"] = e.std_error_of_std;
            out["trials"] = e.trials;
            return out;
        },
        py::arg("xi"), py::arg("bid_model"), py::arg("trials") = 100000, py::arg("seed") = 1);
}
