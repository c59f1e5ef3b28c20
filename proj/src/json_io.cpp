#include "pgrtb/json_io.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include "pgrtb/errors.hpp"
#include "pgrtb/run_config.hpp"

namespace pgrtb {

namespace {

void check_schema(const ojson& doc, const char* what) {
    if (!doc.is_object() || !doc.contains("schema_version") || doc.at("schema_version") != kSchemaVersion) {
        throw InputError(std::string(what) + ": missing or unsupported schema_version");
    }
}

template <class Fn>
auto as_input_error(const char* what, Fn&& fn) {
    try {
        return fn();
    } catch (const ojson::exception& e) {
        throw InputError(std::string(what) + ": " + e.what());
    }
}

}  // namespace

ojson number_or_null(double v) {
    return std::isfinite(v) ? ojson(v) : ojson(nullptr);
}

double number_or_inf(const ojson& v) {
    return v.is_null() ? std::numeric_limits<double>::infinity() : v.get<double>();
}

ojson to_json(const MarketConfig& m) {
    return ojson{{"supply_S", m.supply},
                 {"demand_Q", m.demand},
                 {"horizon_T", m.horizon},
                 {"steps_N", m.steps},
                 {"arrival_rate_lambda", m.arrival_rate},
                 {"initial_arrival_mass", m.initial_arrival_mass},
                 {"price_effect_alpha", m.price_sensitivity},
                 {"time_effect_beta", m.time_sensitivity},
                 {"risk_level_zeta", m.risk_aversion},
                 {"risk_decay_v", m.risk_decay},
                 {"miss_prob_omega", m.miss_probability},
                 {"penalty_size_varpi", m.penalty_multiplier},
                 {"max_value_pi", m.max_value},
                 {"reserve_price_r0", m.reserve_price}};
}

ojson to_json(const FittedCurve& c) {
    ojson doc{{"method", to_string(c.method)}, {"x_min", c.x_min}, {"x_max", c.x_max}, {"rmse", c.rmse}};
    if (c.method == FitMethod::lowess) {
        ojson knots = ojson::array();
        for (const auto& k : c.knots) knots.push_back({k.x, k.y});
        doc["knots"] = std::move(knots);
    } else {
        doc["coefficients"] = c.coefficients;
    }
    return doc;
}

FittedCurve curve_from_json(const ojson& doc) {
    return as_input_error("curve", [&] {
        FittedCurve c;
        c.method = fit_method_from_string(doc.at("method").get<std::string>());
        c.x_min = doc.at("x_min").get<double>();
        c.x_max = doc.at("x_max").get<double>();
        c.rmse = doc.at("rmse").get<double>();
        if (c.method == FitMethod::lowess) {
            for (const auto& k : doc.at("knots")) c.knots.push_back({k.at(0).get<double>(), k.at(1).get<double>()});
            if (c.knots.empty()) throw InputError("lowess curve without knots");
        } else {
            c.coefficients = doc.at("coefficients").get<std::vector<double>>();
            const std::size_t need = c.method == FitMethod::sigmoid ? 4 : 1;
            if (c.coefficients.size() < need || (c.method == FitMethod::sigmoid && c.coefficients.size() != 4)) {
                throw InputError("curve has the wrong number of coefficients");
            }
        }
        return c;
    });
}

ojson to_json(const BidModel& b) {
    switch (b.kind()) {
        case BidModel::Kind::uniform:
            return ojson{{"kind", "uniform"}, {"lo", b.as_uniform()->lo}, {"hi", b.as_uniform()->hi}};
        case BidModel::Kind::lognormal:
            return ojson{{"kind", "lognormal"}, {"mu", b.as_lognormal()->mu}, {"sigma", b.as_lognormal()->sigma}};
        case BidModel::Kind::empirical: {
            const auto* h = b.as_histogram();
            return ojson{{"kind", "histogram"},
                         {"edges", h->edges},
                         {"probability", h->probability},
                         {"sample_size", h->sample_size}};
        }
    }
    return {};
}

BidModel bid_model_from_json(const ojson& doc) {
    return as_input_error("bid model", [&] {
        const auto kind = doc.at("kind").get<std::string>();
        if (kind == "histogram") {
            return BidModel::histogram(doc.at("edges").get<std::vector<double>>(),
                                       doc.at("probability").get<std::vector<double>>(),
                                       doc.at("sample_size").get<std::size_t>());
        }
        try {
            return parse_bid_model(doc);
        } catch (const ConfigError& e) {
            throw InputError(e.what());
        }
    });
}

ojson to_json(const PricePlan& plan) {
    ojson steps = ojson::array();
    for (std::size_t n = 0; n < plan.steps.size(); ++n) {
        const auto& s = plan.steps[n];
        steps.push_back(ojson{{"time", s.time},
                              {"price", s.price},
                              {"sale", s.sale},
                              {"sold", s.sold},
                              {"cumulative", s.cumulative},
                              {"bound", s.bound},
                              {"competition", number_or_null(s.competition)},
                              {"expected_arrivals", s.expected_arrivals},
                              {"backlog", s.backlog}});
    }
    return ojson{{"schema_version", kSchemaVersion},
                 {"supply", plan.supply},
                 {"demand", plan.demand},
                 {"total_sold", plan.total_sold},
                 {"gamma", plan.gamma},
                 {"revenue_pg", plan.revenue_pg},
                 {"revenue_rtb", plan.revenue_rtb},
                 {"revenue_total", plan.revenue_total},
                 {"xi_terminal", number_or_null(plan.xi_terminal)},
                 {"steps", std::move(steps)}};
}

PricePlan plan_from_json(const ojson& doc) {
    check_schema(doc, "plan");
    return as_input_error("plan", [&] {
        PricePlan p;
        p.supply = doc.at("supply").get<std::int64_t>();
        p.demand = doc.at("demand").get<std::int64_t>();
        p.total_sold = doc.at("total_sold").get<std::int64_t>();
        p.gamma = doc.at("gamma").get<double>();
        p.revenue_pg = doc.at("revenue_pg").get<double>();
        p.revenue_rtb = doc.at("revenue_rtb").get<double>();
        p.revenue_total = doc.at("revenue_total").get<double>();
        p.xi_terminal = number_or_inf(doc.at("xi_terminal"));
        for (const auto& s : doc.at("steps")) {
            PlanStep st;
            st.time = s.at("time").get<double>();
            st.price = s.at("price").get<double>();
            st.sale = s.at("sale").get<bool>();
            st.sold = s.at("sold").get<std::int64_t>();
            st.cumulative = s.at("cumulative").get<std::int64_t>();
            st.bound = s.at("bound").get<double>();
            st.competition = number_or_inf(s.at("competition"));
            st.expected_arrivals = s.at("expected_arrivals").get<double>();
            st.backlog = s.at("backlog").get<double>();
            p.steps.push_back(st);
        }
        return p;
    });
}

ojson to_json(const SimSummary& s, bool include_runs) {
    ojson quantiles = ojson::object();
    for (const auto& [level, value] : s.quantiles) {
        quantiles["q" + std::to_string(static_cast<int>(std::lround(level * 100)))] = value;
    }
    ojson doc{{"schema_version", kSchemaVersion},
              {"runs", s.runs},
              {"root_seed", s.root_seed},
              {"mean_total", s.mean_total},
              {"std_total", s.std_total},
              {"std_error_total", s.std_error_total},
              {"mean_pg", s.mean_pg},
              {"mean_rtb", s.mean_rtb},
              {"mean_delivered_fraction", s.mean_delivered_fraction},
              {"quantiles", std::move(quantiles)},
              {"mean_sold", s.mean_sold},
              {"std_error_sold", s.std_error_sold}};
    if (include_runs) {
        ojson runs = ojson::array();
        for (const auto& o : s.outcomes) {
            runs.push_back(ojson{{"seed", o.seed},
                                 {"pg_sold", o.pg_sold},
                                 {"pg_revenue", o.pg_revenue},
                                 {"rtb_revenue", o.rtb_revenue},
                                 {"total_revenue", o.total_revenue},
                                 {"delivered_fraction", o.delivered_fraction}});
        }
        doc["outcomes"] = std::move(runs);
    }
    return doc;
}

ojson to_json(const ReplanResult& r) {
    ojson trace = ojson::array();
    for (const auto& t : r.trace) {
        trace.push_back(ojson{{"step", t.step},
                              {"committed", t.committed},
                              {"cumulative", t.cumulative},
                              {"price", t.price},
                              {"sale", t.sale},
                              {"planned_revenue", t.planned_revenue},
                              {"planned_total_sold", t.planned_total_sold},
                              {"remaining_demand", t.remaining_demand},
                              {"noise", t.noise},
                              {"shocked_demand", t.shocked_demand}});
    }
    return ojson{{"schema_version", kSchemaVersion},
                 {"solves", r.solves},
                 {"supply_exhausted", r.supply_exhausted},
                 {"revenue_total", r.plan.revenue_total},
                 {"total_sold", r.plan.total_sold},
                 {"trace", std::move(trace)}};
}

ojson to_json(const SegmentReport& r) {
    ojson segments = ojson::array();
    for (const auto& s : r.segments) {
        ojson doc{{"label", s.label},
                  {"auctions", s.auctions},
                  {"share", s.share},
                  {"centroid", s.centroid},
                  {"mean_competition", s.mean_competition},
                  {"market", to_json(s.config)},
                  {"phi", to_json(s.fit.phi)},
                  {"psi", to_json(s.fit.psi)},
                  {"rtb_only", s.rtb_only},
                  {"rtb_only_revenue", s.rtb_only_revenue},
                  {"revenue", s.revenue}};
        doc["plan"] = s.plan ? to_json(*s.plan) : ojson(nullptr);
        segments.push_back(std::move(doc));
    }
    return ojson{{"schema_version", kSchemaVersion},
                 {"fallback", r.fallback},
                 {"warnings", r.warnings},
                 {"combined_revenue", r.combined_revenue},
                 {"combined_rtb_only_revenue", r.combined_rtb_only_revenue},
                 {"segments", std::move(segments)}};
}

ojson to_json(const FittedModel& m) {
    auto points = [](const std::vector<Point>& pts) {
        ojson arr = ojson::array();
        for (const auto& p : pts) arr.push_back({p.x, p.y});
        return arr;
    };
    return ojson{{"schema_version", kSchemaVersion},
                 {"auctions", m.auctions},
                 {"rows", m.rows},
                 {"max_value_pi", m.max_value},
                 {"phi", to_json(m.fit.phi)},
                 {"psi", to_json(m.fit.psi)},
                 {"phi_points", points(m.fit.phi_points)},
                 {"psi_points", points(m.fit.psi_points)},
                 {"bid_model", m.bids ? to_json(*m.bids) : ojson(nullptr)}};
}

FittedModel fitted_model_from_json(const ojson& doc) {
    check_schema(doc, "fitted model");
    return as_input_error("fitted model", [&] {
        FittedModel m;
        m.auctions = doc.at("auctions").get<std::size_t>();
        m.rows = doc.at("rows").get<std::size_t>();
        m.max_value = doc.at("max_value_pi").get<double>();
        m.fit.phi = curve_from_json(doc.at("phi"));
        m.fit.psi = curve_from_json(doc.at("psi"));
        for (const auto& p : doc.at("phi_points")) m.fit.phi_points.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
        for (const auto& p : doc.at("psi_points")) m.fit.psi_points.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
        if (!doc.at("bid_model").is_null()) m.bids = bid_model_from_json(doc.at("bid_model"));
        return m;
    });
}

ojson read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw InputError("cannot open " + path.string());
    }
    try {
        return ojson::parse(in);
    } catch (const ojson::parse_error& e) {
        throw InputError(path.string() + " is not valid JSON: " + e.what());
    }
}

void write_json(const std::filesystem::path& path, const ojson& doc) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw InputError("cannot write " + path.string());
    }
    out << doc.dump(2) << '\n';
    if (!out) {
        throw InputError("failed writing " + path.string());
    }
}

}  // namespace pgrtb
