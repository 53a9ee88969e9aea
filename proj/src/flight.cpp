#include "coinft/flight.hpp"

#include <algorithm>
#include <cmath>

namespace coinft::flight {

void PlantParams::validate() const {
  if (!(mass > 0.0)) throw InvalidArgument("plant mass must be positive");
  if (!(thrust_coefficient > 0.0)) throw InvalidArgument("thrust coefficient must be positive");
  if (!(attitude_time_constant > 0.0)) throw InvalidArgument("attitude time constant must be positive");
  if (!(max_normalized_thrust > 0.0)) throw InvalidArgument("max normalized thrust must be positive");
  if (!gravity.allFinite()) throw InvalidArgument("gravity must be finite");
}

void ContactEnv::validate() const {
  if (!(stiffness > 0.0)) throw InvalidArgument("contact stiffness must be positive");
  if (!(damping >= 0.0)) throw InvalidArgument("contact damping must be non-negative");
  if (!(adhesion_threshold > 0.0)) throw InvalidArgument("adhesion threshold must be positive");
  if (!(payload_mass >= 0.0)) throw InvalidArgument("payload mass must be non-negative");
  if (!std::isfinite(surface_height) || !tip_offset.allFinite()) {
    throw InvalidArgument("contact geometry must be finite");
  }
}

Vec3 tip_position(const FlightState& s, const ContactEnv& env) {
  return s.p + s.q.rotation() * env.tip_offset;
}

double contact_force(const FlightState& s, const ContactEnv& env) {
  const double penetration = tip_position(s, env).z() - env.surface_height;
  if (penetration <= 0.0) return 0.0;
  return std::max(0.0, env.stiffness * penetration + env.damping * std::max(0.0, s.v.z()));
}

double payload_load(const FlightState& s, const ContactEnv& env, const PlantParams& params) {
  return s.payload_attached ? env.payload_mass * params.gravity.norm() : 0.0;
}

double carried_mass(const FlightState& s, const ContactEnv& env, const PlantParams& params) {
  return params.mass + (s.payload_attached ? env.payload_mass : 0.0);
}

FlightState step_plant(const FlightState& s, const Command& cmd, const PlantParams& params,
                       const ContactEnv& env, double dt) {
  if (!(dt > 0.0 && dt <= 0.01)) throw InvalidArgument("plant step must lie in (0, 0.01] s");
  if (!std::isfinite(cmd.normalized_thrust)) throw InvalidArgument("thrust command must be finite");

  FlightState next = s;
  const double f_contact = contact_force(s, env);
  if (s.payload_attached && f_contact > env.adhesion_threshold) next.payload_attached = false;

  const double mass = carried_mass(s, env, params);
  const double thrust =
      std::clamp(cmd.normalized_thrust, 0.0, params.max_normalized_thrust) / params.thrust_coefficient;
  const Vec3 body_z = s.q.rotation().col(2);
  // Overhead surface: the reaction pushes the tip down.
  const Vec3 accel = thrust / mass * body_z + params.gravity - f_contact / mass * Vec3::UnitZ();

  next.v = s.v + accel * dt;
  next.p = s.p + next.v * dt;
  next.q = s.q.slerp(1.0 - std::exp(-dt / params.attitude_time_constant), cmd.attitude);
  next.t = s.t + dt;
  return next;
}

ForceSensor ForceSensor::bypass() { return ForceSensor(); }

ForceSensor ForceSensor::stack(sensor::SensorParams params, calibration::CalibrationModel model,
                               double temperature, std::uint64_t seed) {
  ForceSensor f;
  f.bypass_ = false;
  f.params_ = std::move(params);
  f.model_ = std::move(model);
  f.temperature_ = temperature;
  f.rng_.seed(seed);
  return f;
}

double ForceSensor::read(double true_load) {
  if (bypass_) return true_load;
  Wrench w;
  w.fz = true_load;
  const auto frame = sensor::sample(w, temperature_, params_, rng_);
  return std::abs(calibration::predict(model_, frame).fz);
}

double ForceSensor::sense(const FlightState& s, const ContactEnv& env, const PlantParams& params) {
  return read(contact_force(s, env) + payload_load(s, env, params));
}

double mechanical_energy(const FlightState& s, const ContactEnv& env, const PlantParams& params) {
  const double m = carried_mass(s, env, params);
  return 0.5 * m * s.v.squaredNorm() - m * params.gravity.dot(s.p);
}

}  // namespace coinft::flight
