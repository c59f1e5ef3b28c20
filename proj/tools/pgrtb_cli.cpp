#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "pgrtb/auction.hpp"
#include "pgrtb/auction_log.hpp"
#include "pgrtb/dp_solver.hpp"
#include "pgrtb/errors.hpp"
#include "pgrtb/json_io.hpp"
#include "pgrtb/parallel.hpp"
#include "pgrtb/replanner.hpp"
#include "pgrtb/run_config.hpp"
#include "pgrtb/segmentation.hpp"
#include "pgrtb/simulator.hpp"

namespace fs = std::filesystem;
using namespace pgrtb;

namespace {

struct Globals {
    std::string config;
    std::optional<std::uint64_t> seed;
    int threads = 0;
    std::string out;
};

struct Inputs {
    std::string log;
    std::string model;
    std::string plan;
    std::optional<int> runs;
};

// User-facing input problems map to exit code 2.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

RunConfig load_config(const Globals& g, bool required) {
    if (g.config.empty()) {
        if (required) throw UsageError("--config is required for this command");
        return RunConfig{};
    }
    RunConfig cfg = load_run_config(g.config);
    if (g.seed) cfg.seed = *g.seed;
    return cfg;
}

fs::path output_dir(const Globals& g, const RunConfig& cfg) {
    const fs::path dir = g.out.empty() ? cfg.output_dir : fs::path(g.out);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw InputError("cannot create output directory " + dir.string() + ": " + ec.message());
    return dir;
}

int threads_of(const Globals& g) {
    return g.threads > 0 ? g.threads : default_threads();
}

// Payment curves for optimization: a fitted model when given, otherwise
// quadrature on the configured bid model.
std::unique_ptr<PaymentModel> payments_for(RunConfig& cfg, const std::string& model_path) {
    if (!model_path.empty()) {
        const FittedModel model = fitted_model_from_json(read_json(model_path));
        if (!cfg.max_value_given) cfg.market.max_value = model.max_value;
        if (!cfg.bid_model && model.bids) cfg.bid_model = model.bids;
        validate(cfg.market);
        return std::make_unique<CurvePayments>(model.fit.phi, model.fit.psi);
    }
    if (!cfg.bid_model) throw UsageError("need a bid_model in the config or --model <fitted_model.json>");
    return std::make_unique<BidModelPayments>(*cfg.bid_model);
}

void write_plan_csv(const fs::path& path, const PricePlan& plan, const MarketConfig& m) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path.string());
    out.precision(17);
    out << "step,time,price,bound,sale,sold,cumulative,competition,backlog,pg_revenue,cumulative_pg_revenue\n";
    double cum = 0.0;
    for (std::size_t n = 0; n < plan.steps.size(); ++n) {
        const auto& s = plan.steps[n];
        const double pg = s.sale ? m.pg_revenue_factor() * s.price * static_cast<double>(s.sold) : 0.0;
        cum += pg;
        out << n << ',' << s.time << ',' << s.price << ',' << s.bound << ',' << (s.sale ? 1 : 0) << ',' << s.sold
            << ',' << s.cumulative << ',';
        if (std::isfinite(s.competition)) out << s.competition;
        out << ',' << s.backlog << ',' << pg << ',' << cum << '\n';
    }
}

int cmd_gen_data(const Globals& g) {
    RunConfig cfg = load_config(g, true);
    const GenDataSpec& spec = cfg.gen_data;
    std::vector<Population> pops = spec.populations;
    if (pops.empty()) {
        pops.push_back(Population{1.0, cfg.bid_model.value_or(BidModel::uniform(0.0, 1.0))});
    }
    const GeneratedLog generated = generate_log(spec, pops, cfg.seed, cfg.market.reserve_price);
    const auto& records = generated.records;

    const fs::path dir = output_dir(g, cfg);
    write_auction_log(dir / "auctions.csv", records);

    ojson populations = ojson::array();
    int max_bidders = 2;
    for (double xi : spec.xi_levels) max_bidders = std::max(max_bidders, static_cast<int>(std::ceil(2.0 * xi)) + 2);
    for (const auto& p : pops) {
        ojson phi = ojson::object();
        for (int k = 2; k <= max_bidders; ++k) phi[std::to_string(k)] = expected_second_price(k, p.bids);
        populations.push_back(ojson{{"share", p.share}, {"bid_model", to_json(p.bids)}, {"phi_by_bidders", phi}});
    }
    const ojson truth{{"schema_version", kSchemaVersion},
                      {"seed", cfg.seed},
                      {"slot_id", spec.slot_id},
                      {"start", format_timestamp(spec.start_time)},
                      {"hours", spec.hours},
                      {"impressions_per_hour", spec.impressions_per_hour},
                      {"xi_levels", spec.xi_levels},
                      {"impressions", generated.impressions},
                      {"auctions", generated.auctions},
                      {"rows", records.size()},
                      {"populations", populations}};
    write_json(dir / "auctions.truth.json", truth);
    std::cout << "wrote " << records.size() << " bids in " << generated.auctions << " auctions to " << (dir / "auctions.csv").string()
              << '\n';
    return 0;
}

int cmd_fit(const Globals& g, const Inputs& in) {
    RunConfig cfg = load_config(g, false);
    if (in.log.empty()) throw UsageError("fit needs --log <auctions.csv>");
    const auto records = read_auction_log(fs::path(in.log));
    if (records.empty()) throw InputError("auction log " + in.log + " has no rows");
    const auto all = summarize_auctions(records);
    std::vector<AuctionSummary> contested;
    for (const auto& a : all) {
        if (a.competition() >= 2) contested.push_back(a);
    }
    if (contested.empty()) throw InputError("no auction in the log has two or more bids");

    FittedModel model;
    model.fit = fit_phi_psi(contested, cfg.fit);
    model.max_value = estimate_pi(all);
    std::vector<double> bids;
    for (const auto& r : records) bids.push_back(r.bid_cpm);
    model.bids = BidModel::empirical(bids);
    model.auctions = all.size();
    model.rows = records.size();

    const fs::path dir = output_dir(g, cfg);
    write_json(dir / "fitted_model.json", to_json(model));
    std::cout << "phi: " << to_string(model.fit.phi.method) << " (rmse " << model.fit.phi.rmse << "), psi: "
              << to_string(model.fit.psi.method) << " (rmse " << model.fit.psi.rmse << "), pi = " << model.max_value
              << '\n';
    return 0;
}

int cmd_optimize(const Globals& g, const Inputs& in) {
    RunConfig cfg = load_config(g, true);
    const auto payments = payments_for(cfg, in.model);
    const TimeGrid grid = TimeGrid::for_config(cfg.market);
    const DpResult res = opt_r(cfg.market, grid, *payments, threads_of(g));
    const fs::path dir = output_dir(g, cfg);
    write_json(dir / "plan.json", to_json(res.plan));
    write_plan_csv(dir / "plan_curves.csv", res.plan, cfg.market);
    std::cout << "gamma = " << res.plan.gamma << ", revenue = " << res.plan.revenue_total << " (PG "
              << res.plan.revenue_pg << ", RTB " << res.plan.revenue_rtb << ")\n";
    return 0;
}

int cmd_simulate(const Globals& g, const Inputs& in) {
    RunConfig cfg = load_config(g, true);
    const TimeGrid grid = TimeGrid::for_config(cfg.market);
    PricePlan plan;
    if (!in.plan.empty()) {
        plan = plan_from_json(read_json(in.plan));
        if (!in.model.empty()) payments_for(cfg, in.model);
        if (plan.steps.size() != grid.size()) throw InputError("plan does not match the configured steps_N");
    } else {
        const auto payments = payments_for(cfg, in.model);
        plan = opt_r(cfg.market, grid, *payments, threads_of(g)).plan;
    }
    if (!cfg.bid_model) throw UsageError("simulate needs a bid_model to draw RTB bids");
    const int runs = in.runs.value_or(cfg.simulation.runs);
    if (runs < 1) throw UsageError("--runs must be at least 1");
    const SimSummary s =
        evaluate_plan(plan, cfg.market, grid, *cfg.bid_model, runs, cfg.seed, threads_of(g), cfg.simulation.cap);
    ojson doc = to_json(s, runs <= 100);
    doc["purchase_cap"] = to_string(cfg.simulation.cap);
    doc["plan_revenue_total"] = plan.revenue_total;
    doc["plan_sales"] = plan.sales();
    const fs::path dir = output_dir(g, cfg);
    write_json(dir / "simulation.json", doc);
    std::cout << "mean revenue " << s.mean_total << " +/- " << s.std_error_total << " over " << runs
              << " runs (plan " << plan.revenue_total << ")\n";
    return 0;
}

int cmd_replan(const Globals& g, const Inputs& in) {
    RunConfig cfg = load_config(g, true);
    const auto payments = payments_for(cfg, in.model);
    const TimeGrid grid = TimeGrid::for_config(cfg.market);
    const ReplanResult r = replan(cfg.market, grid, *payments, cfg.uncertainty, threads_of(g));
    const fs::path dir = output_dir(g, cfg);
    ojson doc = to_json(r);
    doc["epsilon"] = cfg.uncertainty.epsilon;
    doc["noise_seed"] = cfg.uncertainty.noise_seed;
    doc["noise_kind"] = to_string(cfg.uncertainty.noise_kind);
    write_json(dir / "replan.json", doc);
    write_json(dir / "replan_plan.json", to_json(r.plan));
    std::cout << "realized revenue " << r.plan.revenue_total << " after " << r.solves << " solves\n";
    return 0;
}

int cmd_segment(const Globals& g, const Inputs& in) {
    RunConfig cfg = load_config(g, true);
    if (in.log.empty()) throw UsageError("segment needs --log <auctions.csv>");
    const auto records = read_auction_log(fs::path(in.log));
    if (records.empty()) throw InputError("auction log " + in.log + " has no rows");
    SegmentOptions opt;
    opt.feature = cfg.segmentation.feature;
    opt.seed = cfg.seed;
    opt.max_iters = cfg.segmentation.max_iters;
    opt.fit = cfg.fit;
    opt.threads = threads_of(g);
    const SegmentReport report = segment_and_optimize(summarize_auctions(records), cfg.market, opt);
    const fs::path dir = output_dir(g, cfg);
    write_json(dir / "segments.json", to_json(report));
    for (const auto& w : report.warnings) std::cerr << "warning: " << w << '\n';
    for (const auto& s : report.segments) {
        std::cout << s.label << ": " << s.auctions << " auctions, revenue " << s.revenue
                  << (s.rtb_only ? " (RTB only)" : "") << '\n';
    }
    std::cout << "combined revenue " << report.combined_revenue << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Dual-channel (guaranteed + RTB) ad pricing toolkit"};
    app.require_subcommand(1);
    Globals g;
    Inputs in;
    app.add_option("--config", g.config, "Run configuration (JSON)");
    app.add_option("--seed", g.seed, "Override the configured root seed");
    app.add_option("--threads", g.threads, "Worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
    app.add_option("--out", g.out, "Output directory");
    app.set_help_all_flag("--help-all");

    auto* gen = app.add_subcommand("gen-data", "Generate a synthetic auction log and its ground truth");
    auto* fit = app.add_subcommand("fit", "Fit phi, psi and pi from an auction log");
    fit->add_option("--log", in.log, "Auction log CSV")->required();
    auto* opt = app.add_subcommand("optimize", "Compute the optimal price and allocation plan");
    opt->add_option("--model", in.model, "Fitted model JSON from `fit`");
    auto* sim = app.add_subcommand("simulate", "Evaluate a plan in the stochastic market simulator");
    sim->add_option("--plan", in.plan, "Plan JSON from `optimize` (default: optimize first)");
    sim->add_option("--model", in.model, "Fitted model JSON from `fit`");
    sim->add_option("--runs", in.runs, "Number of simulated runs");
    auto* rep = app.add_subcommand("replan", "Re-optimize step by step under demand shocks");
    rep->add_option("--model", in.model, "Fitted model JSON from `fit`");
    auto* seg = app.add_subcommand("segment", "Split advertisers by bid level and optimize each group");
    seg->add_option("--log", in.log, "Auction log CSV")->required();
    for (auto* sub : {gen, fit, opt, sim, rep, seg}) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*gen) return cmd_gen_data(g);
        if (*fit) return cmd_fit(g, in);
        if (*opt) return cmd_optimize(g, in);
        if (*sim) return cmd_simulate(g, in);
        if (*rep) return cmd_replan(g, in);
        if (*seg) return cmd_segment(g, in);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const InputError& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return 2;
    } catch (const FitError& e) {
        std::cerr << "fit error: " << e.what() << '\n';
        return 2;
    } catch (const ArgumentError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
