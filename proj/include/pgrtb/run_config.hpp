#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "pgrtb/bid_model.hpp"
#include "pgrtb/curve_fit.hpp"
#include "pgrtb/market_model.hpp"
#include "pgrtb/replanner.hpp"
#include "pgrtb/segmentation.hpp"
#include "pgrtb/simulator.hpp"

namespace pgrtb {

inline constexpr int kSchemaVersion = 1;

struct SimulationSpec {
    int runs = 1000;
    PurchaseCap cap = PurchaseCap::supply;
};

struct SegmentationSpec {
    bool enabled = false;
    SegmentFeature feature = SegmentFeature::winning_bid;
    int max_iters = 100;
};

struct RunConfig {
    MarketConfig market;
    bool max_value_given = false;
    std::optional<BidModel> bid_model;
    FitOptions fit;
    std::uint64_t seed = 0;
    UncertaintySpec uncertainty;
    SegmentationSpec segmentation;
    SimulationSpec simulation;
    GenDataSpec gen_data;
    std::filesystem::path output_dir = "out";
};

// Strict parsing: unknown keys, wrong types and out-of-range values throw
// ConfigError. Relative paths inside the file resolve against `base_dir`.
RunConfig parse_run_config(const nlohmann::ordered_json& doc, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

BidModel parse_bid_model(const nlohmann::ordered_json& doc, const std::filesystem::path& base_dir = {});

}  // namespace pgrtb
