#pragma once

// JSON schemas for sensor parameters, scenarios, calibration models and
// simulation configs. Readers fill missing keys with defaults, so a file
// only needs the keys it overrides.

#include <filesystem>

#include <json.hpp>

#include "coinft/calibration.hpp"
#include "coinft/dataio.hpp"
#include "coinft/sensor_model.hpp"
#include "coinft/simulation.hpp"

namespace coinft::config {

using json = nlohmann::json;

inline constexpr const char* kSensorSchema = "coinft.sensor/1";
inline constexpr const char* kScenarioSchema = "coinft.scenario/1";
inline constexpr const char* kModelSchema = "coinft.calibration/1";
inline constexpr const char* kSimSchema = "coinft.sim/1";

json to_json(const sensor::SensorParams& p);
sensor::SensorParams sensor_params_from_json(const json& j);

json to_json(const dataio::Scenario& s);
dataio::Scenario scenario_from_json(const json& j);

json to_json(const calibration::TempCompensator& c);
calibration::TempCompensator compensator_from_json(const json& j);

json to_json(const calibration::CalibrationModel& m);
/// Throws FormatError on a schema mismatch or wrong matrix shape.
calibration::CalibrationModel model_from_json(const json& j);

json to_json(const flight::SimConfig& c);
flight::SimConfig sim_config_from_json(const json& j);

/// Throws FormatError(kIo / kSchema) on unreadable or malformed files.
json load_json(const std::filesystem::path& path);
void save_json(const json& j, const std::filesystem::path& path);

}  // namespace coinft::config
