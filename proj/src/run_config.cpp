#include "pgrtb/run_config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "pgrtb/auction_log.hpp"
#include "pgrtb/errors.hpp"

namespace pgrtb {

using json = nlohmann::ordered_json;

namespace {

// Wraps one JSON object and records which keys were read, so leftovers can be
// reported as unknown.
class Section {
public:
    Section(const json& doc, std::string path) : doc_(doc), path_(std::move(path)) {
        if (!doc_.is_object()) {
            throw ConfigError(path_ + " must be an object");
        }
    }

    bool has(const std::string& key) {
        seen_.insert(key);
        return doc_.contains(key) && !doc_.at(key).is_null();
    }

    const json& at(const std::string& key) {
        seen_.insert(key);
        if (!doc_.contains(key)) {
            throw ConfigError(path_ + "." + key + " is required");
        }
        return doc_.at(key);
    }

    double number(const std::string& key) {
        const json& v = at(key);
        if (!v.is_number()) throw ConfigError(where(key) + " must be a number");
        return v.get<double>();
    }

    double number(const std::string& key, double fallback) { return has(key) ? number(key) : fallback; }

    std::int64_t integer(const std::string& key) {
        const json& v = at(key);
        if (v.is_number_integer()) return v.get<std::int64_t>();
        if (v.is_number_float() && v.get<double>() == std::floor(v.get<double>())) {
            return static_cast<std::int64_t>(v.get<double>());
        }
        throw ConfigError(where(key) + " must be an integer");
    }

    std::int64_t integer(const std::string& key, std::int64_t fallback) { return has(key) ? integer(key) : fallback; }

    std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback) {
        if (!has(key)) return fallback;
        const json& v = at(key);
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
            throw ConfigError(where(key) + " must be a non-negative integer");
        }
        return v.get<std::uint64_t>();
    }

    std::string string(const std::string& key, const std::string& fallback) {
        if (!has(key)) return fallback;
        const json& v = at(key);
        if (!v.is_string()) throw ConfigError(where(key) + " must be a string");
        return v.get<std::string>();
    }

    bool boolean(const std::string& key, bool fallback) {
        if (!has(key)) return fallback;
        const json& v = at(key);
        if (!v.is_boolean()) throw ConfigError(where(key) + " must be true or false");
        return v.get<bool>();
    }

    Section child(const std::string& key) { return Section(at(key), where(key)); }

    std::string where(const std::string& key) const { return path_ + "." + key; }

    void finish() const {
        for (const auto& [key, value] : doc_.items()) {
            if (!seen_.count(key)) {
                throw ConfigError("unknown key " + path_ + "." + key);
            }
        }
    }

private:
    const json& doc_;
    std::string path_;
    std::set<std::string> seen_;
};

template <class Fn>
auto rethrow_as_config(const std::string& where, Fn&& fn) {
    try {
        return fn();
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(where + ": " + e.what());
    }
}

MarketConfig parse_market(Section s, bool& max_value_given) {
    MarketConfig m;
    m.supply = s.integer("supply_S");
    m.demand = s.integer("demand_Q");
    m.horizon = s.number("horizon_T", m.horizon);
    m.steps = static_cast<int>(s.integer("steps_N", m.steps));
    m.arrival_rate = s.number("arrival_rate_lambda");
    m.initial_arrival_mass = s.number("initial_arrival_mass", m.initial_arrival_mass);
    m.price_sensitivity = s.number("price_effect_alpha", m.price_sensitivity);
    m.time_sensitivity = s.number("time_effect_beta", m.time_sensitivity);
    m.risk_aversion = s.number("risk_level_zeta", m.risk_aversion);
    m.risk_decay = s.number("risk_decay_v", m.risk_decay);
    m.miss_probability = s.number("miss_prob_omega", m.miss_probability);
    m.penalty_multiplier = s.number("penalty_size_varpi", m.penalty_multiplier);
    max_value_given = s.has("max_value_pi");
    m.max_value = s.number("max_value_pi", m.max_value);
    m.reserve_price = s.number("reserve_price_r0", m.reserve_price);
    s.finish();
    return m;
}

FitOptions parse_fit(Section s) {
    FitOptions f;
    if (s.has("method")) {
        const std::string m = s.string("method", "");
        if (m != "auto") {
            f.method = rethrow_as_config(s.where("method"), [&] { return fit_method_from_string(m); });
        }
    }
    f.lowess_fraction = s.number("lowess_fraction", f.lowess_fraction);
    f.lowess_iterations = static_cast<int>(s.integer("lowess_iterations", f.lowess_iterations));
    f.polynomial_degree = static_cast<int>(s.integer("polynomial_degree", f.polynomial_degree));
    s.finish();
    if (!(f.lowess_fraction > 0.0 && f.lowess_fraction <= 1.0)) throw ConfigError("fit.lowess_fraction must be in (0, 1]");
    if (f.lowess_iterations < 0) throw ConfigError("fit.lowess_iterations must be >= 0");
    if (f.polynomial_degree < 0) throw ConfigError("fit.polynomial_degree must be >= 0");
    return f;
}

UncertaintySpec parse_uncertainty(Section s) {
    UncertaintySpec u;
    u.epsilon = s.number("epsilon", u.epsilon);
    u.noise_seed = s.unsigned_integer("noise_seed", u.noise_seed);
    const std::string kind = s.string("noise_kind", to_string(u.noise_kind));
    u.noise_kind = rethrow_as_config(s.where("noise_kind"), [&] { return noise_kind_from_string(kind); });
    s.finish();
    if (!(u.epsilon >= 0.0)) throw ConfigError("uncertainty.epsilon must be >= 0");
    return u;
}

SegmentationSpec parse_segmentation(Section s) {
    SegmentationSpec g;
    g.enabled = s.boolean("enabled", g.enabled);
    const std::string feature = s.string("feature", to_string(g.feature));
    g.feature = rethrow_as_config(s.where("feature"), [&] { return segment_feature_from_string(feature); });
    g.max_iters = static_cast<int>(s.integer("max_iters", g.max_iters));
    s.finish();
    if (g.max_iters < 1) throw ConfigError("segmentation.max_iters must be >= 1");
    return g;
}

SimulationSpec parse_simulation(Section s) {
    SimulationSpec sim;
    sim.runs = static_cast<int>(s.integer("runs", sim.runs));
    const std::string cap = s.string("purchase_cap", to_string(sim.cap));
    sim.cap = rethrow_as_config(s.where("purchase_cap"), [&] { return purchase_cap_from_string(cap); });
    s.finish();
    if (sim.runs < 1) throw ConfigError("simulation.runs must be >= 1");
    return sim;
}

GenDataSpec parse_gen_data(Section s, const std::filesystem::path& base_dir) {
    GenDataSpec g;
    g.slot_id = s.string("slot_id", g.slot_id);
    if (s.has("start")) {
        const std::string start = s.string("start", "");
        g.start_time = rethrow_as_config(s.where("start"), [&] { return parse_timestamp(start); });
    }
    g.hours = static_cast<int>(s.integer("hours", g.hours));
    g.impressions_per_hour = s.integer("impressions_per_hour", g.impressions_per_hour);
    if (s.has("xi_levels")) {
        const json& levels = s.at("xi_levels");
        if (!levels.is_array() || levels.empty()) throw ConfigError("gen_data.xi_levels must be a non-empty array");
        g.xi_levels.clear();
        for (const auto& v : levels) {
            if (!v.is_number() || !(v.get<double>() >= 0.0)) {
                throw ConfigError("gen_data.xi_levels entries must be non-negative numbers");
            }
            g.xi_levels.push_back(v.get<double>());
        }
    }
    if (s.has("populations")) {
        const json& pops = s.at("populations");
        if (!pops.is_array() || pops.empty()) throw ConfigError("gen_data.populations must be a non-empty array");
        g.populations.clear();
        double total = 0.0;
        for (std::size_t i = 0; i < pops.size(); ++i) {
            Section p(pops[i], s.where("populations") + "[" + std::to_string(i) + "]");
            Population pop;
            pop.share = p.number("share", 1.0);
            pop.bids = parse_bid_model(p.at("bid_model"), base_dir);
            p.finish();
            if (!(pop.share > 0.0)) throw ConfigError("population share must be positive");
            total += pop.share;
            g.populations.push_back(std::move(pop));
        }
        for (auto& p : g.populations) p.share /= total;
    }
    s.finish();
    if (g.hours < 0 || g.impressions_per_hour < 0) {
        throw ConfigError("gen_data.hours and impressions_per_hour must be >= 0");
    }
    return g;
}

}  // namespace

BidModel parse_bid_model(const json& doc, const std::filesystem::path& base_dir) {
    Section s(doc, "bid_model");
    const std::string kind = s.string("kind", "");
    BidModel out = BidModel::uniform(0.0, 1.0);
    if (kind == "uniform") {
        const double lo = s.number("lo", 0.0);
        const double hi = s.number("hi", 1.0);
        out = rethrow_as_config("bid_model", [&] { return BidModel::uniform(lo, hi); });
    } else if (kind == "lognormal") {
        const double mu = s.number("mu");
        const double sigma = s.number("sigma");
        out = rethrow_as_config("bid_model", [&] { return BidModel::lognormal(mu, sigma); });
    } else if (kind == "empirical") {
        std::vector<double> bids;
        if (s.has("bids")) {
            const json& arr = s.at("bids");
            if (!arr.is_array()) throw ConfigError("bid_model.bids must be an array");
            for (const auto& v : arr) {
                if (!v.is_number()) throw ConfigError("bid_model.bids entries must be numbers");
                bids.push_back(v.get<double>());
            }
        } else if (s.has("log")) {
            auto path = std::filesystem::path(s.string("log", ""));
            if (path.is_relative()) path = base_dir / path;
            for (const auto& r : read_auction_log(path)) bids.push_back(r.bid_cpm);
        } else {
            throw ConfigError("empirical bid_model needs 'bids' or 'log'");
        }
        out = rethrow_as_config("bid_model", [&] { return BidModel::empirical(bids); });
    } else {
        throw ConfigError("bid_model.kind must be uniform, lognormal or empirical");
    }
    s.finish();
    return out;
}

RunConfig parse_run_config(const json& doc, const std::filesystem::path& base_dir) {
    Section root(doc, "config");
    RunConfig cfg;
    const std::int64_t version = root.integer("schema_version", kSchemaVersion);
    if (version != kSchemaVersion) {
        throw ConfigError("unsupported schema_version " + std::to_string(version));
    }
    cfg.market = parse_market(root.child("market"), cfg.max_value_given);
    if (root.has("bid_model")) cfg.bid_model = parse_bid_model(root.at("bid_model"), base_dir);
    if (root.has("fit")) cfg.fit = parse_fit(root.child("fit"));
    cfg.seed = root.unsigned_integer("seed", cfg.seed);
    if (root.has("uncertainty")) cfg.uncertainty = parse_uncertainty(root.child("uncertainty"));
    if (root.has("segmentation")) cfg.segmentation = parse_segmentation(root.child("segmentation"));
    if (root.has("simulation")) cfg.simulation = parse_simulation(root.child("simulation"));
    if (root.has("gen_data")) cfg.gen_data = parse_gen_data(root.child("gen_data"), base_dir);
    if (root.has("output")) {
        Section out = root.child("output");
        auto dir = std::filesystem::path(out.string("dir", "out"));
        cfg.output_dir = dir.is_relative() ? base_dir / dir : dir;
        out.finish();
    } else {
        cfg.output_dir = base_dir / "out";
    }
    root.finish();
    validate(cfg.market);
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw InputError("cannot open config " + path.string());
    }
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
    }
    return parse_run_config(doc, path.parent_path());
}

}  // namespace pgrtb
