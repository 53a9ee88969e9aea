#include <filesystem>
#include <random>

#include <gtest/gtest.h>

#include "coinft/config.hpp"

using namespace coinft;
using namespace coinft::config;

namespace {

// Through text, the way files are read back.
json reparse(const json& j) { return json::parse(j.dump()); }

}  // namespace

TEST(Config, SensorRoundTrip) {
  sensor::SensorParams p;
  p.pillars.radius = 37e-6;
  p.pillars.rings = {{0.0, 1}, {3e-3, 17}};
  p.geometry.finger_pitch = 0.31e-3;
  p.drift.alpha[3] = 0.123e-3;
  p.cdc.noise_sigma = 1.5;
  p.lag_enabled = true;
  EXPECT_EQ(sensor_params_from_json(reparse(to_json(p))), p);
}

TEST(Config, SensorDefaultsFromEmptyObject) {
  EXPECT_EQ(sensor_params_from_json(json::object()), sensor::SensorParams{});
}

TEST(Config, SensorShoreHardnessOverride) {
  const auto p = sensor_params_from_json(json::parse(R"({"pillars": {"shore_a": 40}})"));
  EXPECT_EQ(p.pillars.youngs_modulus, sensor::shore_to_youngs(40.0));
}

TEST(Config, WrongTypeIsSchemaError) {
  try {
    sensor_params_from_json(json::parse(R"({"cdc": {"noise_sigma_counts": "loud"}})"));
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.kind(), FormatError::Kind::kSchema);
  }
  EXPECT_THROW(sensor_params_from_json(json::parse(R"({"schema": "other/1"})")), FormatError);
}

TEST(Config, ScenarioRoundTripAndPresets) {
  dataio::Scenario s = dataio::Scenario::small_range();
  s.duration = 12.5;
  s.temperature_rate = 0.01;
  EXPECT_EQ(scenario_from_json(reparse(to_json(s))), s);
  EXPECT_EQ(scenario_from_json(json::parse(R"({"preset": "large_range"})")), dataio::Scenario::large_range());
  EXPECT_THROW(scenario_from_json(json::parse(R"({"preset": "huge"})")), FormatError);
}

TEST(Config, ModelRoundTripIsExact) {
  calibration::CalibrationModel m;
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 1.0);
  m.matrix = Eigen::MatrixXd::NullaryExpr(6, 24, [&] { return n(rng) * 1e-7; });
  for (auto& b : m.baseline) b = 1000.0 + n(rng);
  m.ridge = 1e-9;
  calibration::TempCompensator c;
  for (auto& ch : c.channels) ch = {n(rng), n(rng), n(rng), 0.9999};
  m.temperature = c;
  const auto back = model_from_json(reparse(to_json(m)));
  EXPECT_EQ(back.matrix, m.matrix);
  EXPECT_EQ(back.baseline, m.baseline);
  EXPECT_EQ(back.ridge, m.ridge);
  ASSERT_TRUE(back.temperature.has_value());
  for (std::size_t k = 0; k < 12; ++k) {
    EXPECT_EQ(back.temperature->channels[k].a1, c.channels[k].a1);
    EXPECT_EQ(back.temperature->channels[k].r2, c.channels[k].r2);
  }
}

TEST(Config, ModelShapeChecked) {
  calibration::CalibrationModel m;
  m.matrix = Eigen::MatrixXd::Zero(6, 24);
  json j = to_json(m);
  j["mode"] = "shear_only";
  EXPECT_THROW(model_from_json(j), FormatError);
  j = to_json(m);
  j.erase("schema");
  EXPECT_THROW(model_from_json(j), FormatError);
  j = to_json(m);
  j["matrix"].erase(0);
  EXPECT_THROW(model_from_json(j), FormatError);
}

TEST(Config, SimRoundTrip) {
  flight::SimConfig c;
  c.plant.mass = 0.41;
  c.gains.kp_in(2, 2) = 3.3;
  c.deploy.contact_forces = {1.0, 2.0, 6.0};
  c.seed = 77;
  const auto back = sim_config_from_json(reparse(to_json(c)));
  EXPECT_EQ(back.plant.mass, 0.41);
  EXPECT_EQ(back.gains.kp_in, c.gains.kp_in);
  EXPECT_EQ(back.deploy.contact_forces, c.deploy.contact_forces);
  EXPECT_EQ(back.seed, 77u);
  EXPECT_EQ(back.search.z_lo, c.search.z_lo);
  EXPECT_EQ(back.thrust.ki, c.thrust.ki);
}

TEST(Config, FilesRoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "coinft_config_test.json";
  save_json(to_json(sensor::SensorParams{}), path);
  EXPECT_EQ(sensor_params_from_json(load_json(path)), sensor::SensorParams{});
  std::filesystem::remove(path);
  EXPECT_THROW(load_json(path), FormatError);
}
