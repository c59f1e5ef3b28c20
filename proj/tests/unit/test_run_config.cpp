#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"

#include "pgrtb/errors.hpp"
#include "pgrtb/run_config.hpp"

using namespace pgrtb;
using nlohmann::ordered_json;

namespace {

ordered_json minimal() {
    return ordered_json::parse(R"({
      "schema_version": 1,
      "market": {"supply_S": 10, "demand_Q": 30, "arrival_rate_lambda": 2.0}
    })");
}

std::filesystem::path config_dir() { return PGRTB_CONFIG_DIR; }

}  // namespace

TEST_CASE("minimal config takes defaults") {
    const auto cfg = parse_run_config(minimal(), "/tmp/base");
    CHECK(cfg.market.supply == 10);
    CHECK(cfg.market.demand == 30);
    CHECK(cfg.market.steps == 1);
    CHECK(cfg.market.initial_arrival_mass == 0.2);
    CHECK_FALSE(cfg.max_value_given);
    CHECK_FALSE(cfg.bid_model.has_value());
    CHECK_FALSE(cfg.fit.method.has_value());
    CHECK(cfg.simulation.runs == 1000);
    CHECK(cfg.simulation.cap == PurchaseCap::supply);
    CHECK(cfg.output_dir == std::filesystem::path("/tmp/base/out"));
}

TEST_CASE("shipped configs load") {
    const auto ref = load_run_config(config_dir() / "reference.json");
    CHECK(ref.market.supply == 200);
    CHECK(ref.market.demand == 1800);
    CHECK(ref.market.price_sensitivity == 2.0);
    CHECK(ref.max_value_given);
    REQUIRE(ref.bid_model.has_value());
    CHECK(ref.bid_model->kind() == BidModel::Kind::lognormal);
    CHECK(ref.seed == 20240101);

    const auto uni = load_run_config(config_dir() / "uniform_log.json");
    CHECK(uni.gen_data.xi_levels.size() == 7);
    CHECK(uni.gen_data.slot_id == "slot-7");

    const auto two = load_run_config(config_dir() / "two_population.json");
    CHECK(two.segmentation.enabled);
    CHECK_FALSE(two.max_value_given);
    REQUIRE(two.gen_data.populations.size() == 2);
    CHECK(two.gen_data.populations[0].share == doctest::Approx(0.5));
}

TEST_CASE("unknown keys and bad values are rejected") {
    auto with = [](const std::string& pointer, const ordered_json& value) {
        auto doc = minimal();
        doc[ordered_json::json_pointer(pointer)] = value;
        return doc;
    };
    CHECK_THROWS_AS(parse_run_config(with("/colour", "red")), ConfigError);
    CHECK_THROWS_AS(parse_run_config(with("/market/supply", 5)), ConfigError);
    CHECK_THROWS_AS(parse_run_config(with("/market/supply_S", 2.5)), ConfigError);
    CHECK_THROWS_AS(parse_run_config(with("/market/demand_Q", 5)), ConfigError);
    CHECK_THROWS_AS(parse_run_config(with("/market/supply_S", "ten")), ConfigError);
    CHECK_THROWS_AS(parse_run_config(with("/schema_version", 2)), ConfigError);
    CHECK_THROWS_AS(parse_run_config(with("/fit", ordered_json{{"method", "spline"}})), ConfigError);
    CHECK_THROWS_AS(parse_run_config(with("/uncertainty", ordered_json{{"epsilon", -0.1}})), ConfigError);
    CHECK_THROWS_AS(parse_run_config(with("/simulation", ordered_json{{"runs", 0}})), ConfigError);
    CHECK_THROWS_AS(parse_run_config(with("/bid_model", ordered_json{{"kind", "pareto"}})), ConfigError);
    CHECK_THROWS_AS(parse_run_config(with("/bid_model", ordered_json{{"kind", "uniform"}, {"lo", 2}, {"hi", 1}})),
                    ConfigError);
    CHECK_THROWS_AS(parse_run_config(with("/seed", -4)), ConfigError);
    auto no_market = minimal();
    no_market.erase("market");
    CHECK_THROWS_AS(parse_run_config(no_market), ConfigError);
}

TEST_CASE("optional sections") {
    auto doc = minimal();
    doc["fit"] = {{"method", "auto"}, {"lowess_fraction", 0.5}};
    doc["uncertainty"] = {{"epsilon", 0.1}, {"noise_seed", 3}, {"noise_kind", "rademacher"}};
    doc["segmentation"] = {{"enabled", true}, {"feature", "all_bids"}};
    doc["simulation"] = {{"runs", 12}, {"purchase_cap", "quota"}};
    doc["gen_data"] = {{"start", "2024-03-01T00:00:00Z"}, {"hours", 3}, {"xi_levels", {2, 4}}};
    doc["bid_model"] = {{"kind", "empirical"}, {"bids", {1.0, 2.0, 2.5}}};
    doc["output"] = {{"dir", "results"}};
    const auto cfg = parse_run_config(doc, "/data");
    CHECK_FALSE(cfg.fit.method.has_value());
    CHECK(cfg.fit.lowess_fraction == 0.5);
    CHECK(cfg.uncertainty.noise_kind == NoiseKind::rademacher);
    CHECK(cfg.segmentation.feature == SegmentFeature::all_bids);
    CHECK(cfg.simulation.cap == PurchaseCap::quota);
    CHECK(cfg.gen_data.start_time == 1709251200);
    CHECK(cfg.gen_data.xi_levels == std::vector<double>{2, 4});
    CHECK(cfg.bid_model->kind() == BidModel::Kind::empirical);
    CHECK(cfg.output_dir == std::filesystem::path("/data/results"));
}

TEST_CASE("empirical bids from a log resolve relative to the config") {
    const auto dir = std::filesystem::temp_directory_path() / "pgrtb_cfg_test";
    std::filesystem::create_directories(dir);
    {
        std::ofstream log(dir / "bids.csv");
        log << "slot_id,auction_id,timestamp,bid_cpm\ns,a,2024-01-01T00:00:00Z,1.0\ns,a,2024-01-01T00:00:00Z,3.0\n";
        auto doc = minimal();
        doc["bid_model"] = {{"kind", "empirical"}, {"log", "bids.csv"}};
        std::ofstream(dir / "run.json") << doc.dump(2);
    }
    const auto cfg = load_run_config(dir / "run.json");
    CHECK(cfg.bid_model->lo() == 1.0);
    CHECK(cfg.bid_model->hi() == 3.0);
    std::ofstream(dir / "broken.json") << "{";
    CHECK_THROWS_AS(load_run_config(dir / "broken.json"), ConfigError);
    CHECK_THROWS_AS(load_run_config(dir / "absent.json"), InputError);
    std::filesystem::remove_all(dir);
}
