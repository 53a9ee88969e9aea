#pragma once

// Synthetic calibration trials and their CSV log format.
//
// Log layout: optional "# key=value" metadata lines, then the header
//   t,T,Z1,Z2,Z3,Z4,X1,X2,X3,X4,Y1,Y2,Y3,Y4,Fx,Fy,Fz,Mx,My,Mz
// and one row per sample. Floats are written in shortest round-trip form.

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "coinft/core.hpp"
#include "coinft/sensor_model.hpp"

namespace coinft::dataio {

using sensor::CapacitanceFrame;
using sensor::SensorParams;

inline constexpr const char* kLogHeader =
    "t,T,Z1,Z2,Z3,Z4,X1,X2,X3,X4,Y1,Y2,Y3,Y4,Fx,Fy,Fz,Mx,My,Mz";
inline constexpr int kLogColumns = 20;

struct Sample {
  CapacitanceFrame frame;  // carries timestamp and temperature
  Wrench wrench;

  friend bool operator==(const Sample&, const Sample&) = default;
};

struct TrialMetadata {
  std::string scenario;
  std::uint64_t seed = 0;
  std::string params_hash;

  friend bool operator==(const TrialMetadata&, const TrialMetadata&) = default;
};

struct Trial {
  TrialMetadata meta;
  std::vector<Sample> samples;

  std::vector<CapacitanceFrame> frames() const;
  std::vector<Wrench> wrenches() const;
  /// Frames whose reference wrench is exactly zero (the rest segment).
  std::vector<CapacitanceFrame> no_load_frames() const;
  /// Strictly increasing timestamps.
  void validate() const;

  friend bool operator==(const Trial&, const Trial&) = default;
};

struct AxisRange {
  double lo = 0.0;
  double hi = 0.0;

  friend bool operator==(const AxisRange&, const AxisRange&) = default;
};

/// Band-limited random loading of the sensor. Ranges are in N (forces) and
/// mN*m (moments) and must contain zero.
struct Scenario {
  std::string name = "large_range";
  std::array<AxisRange, 6> ranges{};
  double duration = 35.0;         // s
  double rest_duration = 1.0;     // s of no-load lead-in
  double ramp_duration = 1.0;     // s raised-cosine fade-in after the rest
  double min_frequency = 0.05;    // Hz
  double max_frequency = 2.0;     // Hz
  int components = 6;             // sinusoids per axis
  bool noise = true;
  bool drift = true;
  double temperature = 25.0;        // degC at t = 0
  double temperature_rate = 0.0;    // degC/s

  /// 0..14 N normal, +-5 N shear.
  static Scenario large_range();
  /// 0..5 N normal, +-2 N shear.
  static Scenario small_range();
  static Scenario zero_range();

  /// Throws InvalidArgument if the declared ranges can saturate the sensor.
  void validate(const SensorParams& params) const;

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

/// Wrench trajectory of a scenario sampled at rate_hz. Deterministic per seed.
std::vector<Wrench> wrench_trajectory(const Scenario& scenario, double rate_hz,
                                      std::uint64_t seed);

Trial generate_trial(const Scenario& scenario, const SensorParams& params, std::uint64_t seed);

/// Trials with seeds base_seed, base_seed + 1, ... generated on up to
/// `jobs` threads; the result does not depend on jobs.
std::vector<Trial> generate_trials(const Scenario& scenario, const SensorParams& params,
                                   int count, std::uint64_t base_seed, int jobs = 1);

/// No-load frames at a fixed temperature.
std::vector<CapacitanceFrame> generate_no_load(const SensorParams& params, int count,
                                               double temperature, std::uint64_t seed);

/// No-load chamber sweep: `steps` equally spaced setpoints from t_start to
/// t_end, `frames_per_step` frames each.
std::vector<CapacitanceFrame> generate_temperature_sweep(const SensorParams& params,
                                                         double t_start, double t_end,
                                                         int steps, int frames_per_step,
                                                         std::uint64_t seed);

std::string params_hash(const SensorParams& params);

void write_log(const Trial& trial, std::ostream& out);
void write_log(const Trial& trial, const std::filesystem::path& path);
Trial read_log(std::istream& in);
Trial load_log(const std::filesystem::path& path);

/// Last trial is the test set, the rest train.
std::pair<std::vector<Trial>, std::vector<Trial>> split(std::vector<Trial> trials);

/// Shortest decimal form that parses back to the same double.
std::string format_double(double v);

}  // namespace coinft::dataio
