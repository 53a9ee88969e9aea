#pragma once

// Closed-loop contact experiments: the plant runs at 1 kHz, the sensor at
// 360 Hz and the controller at 20 Hz, with zero-order hold between rates.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "coinft/controller.hpp"
#include "coinft/flight.hpp"

namespace coinft::flight {

enum class FlightScenario { kTrackSine, kDeployPackage };

std::string to_string(FlightScenario s);
FlightScenario flight_scenario_from_string(const std::string& s);

/// Desired contact force during HOLD: mean + amplitude * sin(2 pi f t).
struct SineProfile {
  double mean = 2.0;       // N
  double amplitude = 1.0;  // N
  double frequency = 0.5;  // Hz
};

/// Press with each force in turn until the payload no longer loads the
/// sensor after backing off.
struct DeployPlan {
  std::vector<double> contact_forces{0.7, 5.0};  // N
  double hold_duration = 3.0;                    // s per press
  double hover_time = 2.0;                       // s of hover used to read the payload load
  double residual_fraction = 0.5;                // of the initial payload reading
};

struct SimConfig {
  PlantParams plant;
  ContactEnv env;
  control::GainSet gains = control::GainSet::defaults();
  control::ThrustParams thrust;
  control::SetpointSequence search{0.0, 0.0, 0.70, 1.0, 0.05, 0.0};
  SineProfile sine;
  DeployPlan deploy;
  double plant_rate_hz = 1000.0;
  double control_rate_hz = 20.0;
  double sensor_rate_hz = 360.0;
  double max_duration = 120.0;  // s
  double sensor_temperature = 25.0;
  std::uint64_t seed = 1;

  void validate() const;
};

struct TraceRow {
  double t = 0.0;
  Vec3 p = Vec3::Zero();
  Vec3 v = Vec3::Zero();
  UnitQuaternion q;
  double f_oc = 0.0;       // sensed force on the tip [N]
  double f_dc = 0.0;       // desired force on the tip [N]
  double thrust = 0.0;     // normalized command
  control::ThrustState state = control::ThrustState::kFree;
  bool finished = false;   // engagement over, backing off
  bool payload_attached = false;
  double f_contact = 0.0;  // true tip/surface force [N]
};

struct DeployAttempt {
  double contact_force = 0.0;   // commanded contact force [N]
  double peak_sensed = 0.0;     // max sensed during HOLD [N]
  double residual = 0.0;        // mean sensed while hovering afterwards [N]
  bool payload_detected = false;
};

struct SimResult {
  std::vector<TraceRow> trace;
  /// Track-sine: RMS of (true contact force - desired) over HOLD ticks.
  double rms_error = 0.0;
  std::size_t hold_ticks = 0;
  /// Deploy: payload reading before the first press, then one entry per press.
  double initial_payload_reading = 0.0;
  std::vector<DeployAttempt> attempts;
  bool success = false;
};

/// Ascend, search for contact, ramp to the mean force and track the sine
/// for thrust.hold_duration, then back off.
SimResult run_track_sine(const SimConfig& config, ForceSensor& sensor);

/// Package deployment with escalating press force.
SimResult run_deploy(const SimConfig& config, ForceSensor& sensor);

SimResult run(FlightScenario scenario, const SimConfig& config, ForceSensor& sensor);

inline constexpr const char* kTraceHeader =
    "t,px,py,pz,vx,vy,vz,qw,qx,qy,qz,f_oc,f_dc,f_cmd,machine_state,payload_attached,f_contact";

void write_trace(const std::vector<TraceRow>& trace, std::ostream& out);

}  // namespace coinft::flight
