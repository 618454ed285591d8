#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "pinnburn/evt.hpp"
#include "pinnburn/fit_pipeline.hpp"

namespace pinnburn {

using Json = nlohmann::json;

inline constexpr int kFormatVersion = 1;

Json to_json(const ParameterSurfaceModel& m);
ParameterSurfaceModel surface_model_from_json(const Json& j);

Json to_json(const StandardizationSpec& s);
StandardizationSpec standardization_from_json(const Json& j);

Json to_json(const FullBurntAreaModel& m);
FullBurntAreaModel model_from_json(const Json& j);

/// Non-finite losses are written as null and read back as NaN.
Json to_json(const TrainLog& log);
TrainLog train_log_from_json(const Json& j);

Json to_json(const FitLogs& logs);
FitLogs fit_logs_from_json(const Json& j);

Json to_json(const ArchitectureSpec& a);
ArchitectureSpec architecture_from_json(const Json& j);

Json to_json(const FitConfig& cfg);
FitConfig fit_config_from_json(const Json& j);

Json read_json(const std::filesystem::path& path);
void write_json(const Json& j, const std::filesystem::path& path);

void save_model(const FullBurntAreaModel& m, const std::filesystem::path& path);
FullBurntAreaModel load_model(const std::filesystem::path& path);

/// Run directory layout: ensemble.json (config and one entry per replicate)
/// plus replicate_NNNN/{model.json,logs.json} for every successful replicate.
void save_ensemble(const BootstrapEnsemble& ens, const FitConfig& cfg, const std::filesystem::path& dir);
BootstrapEnsemble load_ensemble(const std::filesystem::path& dir, FitConfig* cfg = nullptr);

/// 64-bit FNV-1a digest of a file's bytes, as 16 hex digits.
std::string file_digest(const std::filesystem::path& path);

}  // namespace pinnburn
