#pragma once

#include <string>

#include <json.hpp>

#include "rrmix/collection.hpp"
#include "rrmix/metrics.hpp"
#include "rrmix/selection.hpp"

namespace rrmix {

// Reports are JSON with lexicographically ordered keys and no volatile
// content, so identical runs produce identical bytes.
using Json = nlohmann::json;

inline constexpr const char* kReportVersion = "rrmix-report-v1";

Json model_to_json(const MixtureRegressionModel& model);
MixtureRegressionModel model_from_json(const Json& j);

Json index_to_json(const ModelIndex& index);  // J serialized 1-based
ModelIndex index_from_json(const Json& j);

Json fitted_to_json(const FittedModel& fit);
FittedModel fitted_from_json(const Json& j);

Json collection_to_json(const Collection& collection);
Collection collection_from_json(const Json& j);

Json selection_to_json(const SelectionResult& sel);
Json eval_to_json(const EvalReport& report);

void write_report(const std::string& path, const Json& body);
Json read_report(const std::string& path);

}  // namespace rrmix
