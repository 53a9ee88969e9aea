#pragma once

// Quadrotor plant with attitude-level inputs, a spring-damper contact tip
// under an overhead surface, and the force-sensing chain that closes the
// loop through the sensor model and calibration.

#include <cstdint>
#include <random>

#include "coinft/calibration.hpp"
#include "coinft/core.hpp"
#include "coinft/sensor_model.hpp"

namespace coinft::flight {

struct FlightState {
  Vec3 p = Vec3::Zero();  // m
  Vec3 v = Vec3::Zero();  // m/s
  UnitQuaternion q;
  bool payload_attached = false;
  double t = 0.0;  // s
};

/// Declared for a small quadrotor; not measured values.
struct PlantParams {
  double mass = 0.30;                     // kg, without payload
  double thrust_coefficient = 0.08;       // k_f [1/N]: normalized = k_f * thrust
  double attitude_time_constant = 0.05;   // s
  double max_normalized_thrust = 1.0;
  Vec3 gravity = kGravityVector;

  void validate() const;
};

/// Overhead surface, series-compliant tip and the adhesive payload.
struct ContactEnv {
  double surface_height = 1.0;        // m, hidden from the controller
  double stiffness = 500.0;           // N/m
  double damping = 15.0;              // N*s/m, active while compressing
  Vec3 tip_offset{0.0, 0.0, 0.08};    // m, body frame
  double payload_mass = 0.095;        // kg
  double adhesion_threshold = 4.0;    // N of contact force to stick the payload

  void validate() const;
};

struct Command {
  double normalized_thrust = 0.0;
  UnitQuaternion attitude;
};

Vec3 tip_position(const FlightState& s, const ContactEnv& env);

/// Spring-damper reaction between tip and surface, >= 0.
double contact_force(const FlightState& s, const ContactEnv& env);

/// Weight the payload hangs on the sensor while attached.
double payload_load(const FlightState& s, const ContactEnv& env, const PlantParams& params);

/// Total mass currently carried.
double carried_mass(const FlightState& s, const ContactEnv& env, const PlantParams& params);

/// One semi-implicit Euler step. Attitude relaxes toward the command with
/// time constant tau; the payload stays on the surface once the contact
/// force exceeds the adhesion threshold.
FlightState step_plant(const FlightState& s, const Command& cmd, const PlantParams& params,
                       const ContactEnv& env, double dt);

/// Reads the normal force on the sensor tip. In bypass mode it returns the
/// true load; otherwise the load is pushed through the sensor model and
/// the calibration, and |Fz| of the prediction is returned.
class ForceSensor {
 public:
  /// Perfect feedback.
  static ForceSensor bypass();
  static ForceSensor stack(sensor::SensorParams params, calibration::CalibrationModel model,
                           double temperature, std::uint64_t seed);

  bool is_bypass() const { return bypass_; }

  /// Throws SaturationError if the load is out of the sensor range.
  double sense(const FlightState& s, const ContactEnv& env, const PlantParams& params);
  double read(double true_load);

 private:
  ForceSensor() = default;

  bool bypass_ = true;
  sensor::SensorParams params_;
  calibration::CalibrationModel model_;
  double temperature_ = 25.0;
  std::mt19937_64 rng_;
};

/// Kinetic plus gravitational energy of the carried mass, 0.5 m |v|^2 - m g.p.
double mechanical_energy(const FlightState& s, const ContactEnv& env, const PlantParams& params);

}  // namespace coinft::flight
