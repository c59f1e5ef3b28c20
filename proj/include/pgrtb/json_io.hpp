#pragma once

#include <filesystem>
#include <optional>

#include "json.hpp"

#include "pgrtb/bid_model.hpp"
#include "pgrtb/curve_fit.hpp"
#include "pgrtb/dp_solver.hpp"
#include "pgrtb/replanner.hpp"
#include "pgrtb/segmentation.hpp"
#include "pgrtb/simulator.hpp"

namespace pgrtb {

using ojson = nlohmann::ordered_json;

// Non-finite doubles are written as null and read back as +inf.
ojson number_or_null(double v);
double number_or_inf(const ojson& v);

ojson to_json(const MarketConfig& cfg);
ojson to_json(const FittedCurve& curve);
FittedCurve curve_from_json(const ojson& doc);
ojson to_json(const BidModel& bids);
BidModel bid_model_from_json(const ojson& doc);
ojson to_json(const PricePlan& plan);
PricePlan plan_from_json(const ojson& doc);
ojson to_json(const SimSummary& summary, bool include_runs = false);
ojson to_json(const ReplanResult& result);
ojson to_json(const SegmentReport& report);

// Output of the fit command.
struct FittedModel {
    PaymentFit fit;
    double max_value = 0.0;
    std::optional<BidModel> bids;
    std::size_t auctions = 0;
    std::size_t rows = 0;
};

ojson to_json(const FittedModel& model);
FittedModel fitted_model_from_json(const ojson& doc);

ojson read_json(const std::filesystem::path& path);
// Pretty-printed with two-space indentation and a trailing newline.
void write_json(const std::filesystem::path& path, const ojson& doc);

}  // namespace pgrtb
