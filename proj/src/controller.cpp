#include "coinft/controller.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

namespace coinft::control {
namespace {

void require_spd(const Mat3& m, const char* name) {
  if (!m.allFinite() || !((m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, m.cwiseAbs().maxCoeff()))) {
    throw InvalidArgument(std::string(name) + " must be symmetric");
  }
  const Eigen::SelfAdjointEigenSolver<Mat3> eig(m, Eigen::EigenvaluesOnly);
  if (!(eig.eigenvalues().minCoeff() > 0.0)) {
    throw InvalidArgument(std::string(name) + " must be positive definite");
  }
}

}  // namespace

std::string to_string(ThrustState s) {
  switch (s) {
    case ThrustState::kFree:
      return "FREE";
    case ThrustState::kSearch:
      return "SEARCH";
    case ThrustState::kHold:
      return "HOLD";
  }
  return "?";
}

void GainSet::validate() const {
  require_spd(kp_out, "Kp (out of contact)");
  require_spd(kv_out, "Kv (out of contact)");
  require_spd(kp_in, "Kp (in contact)");
  require_spd(kv_in, "Kv (in contact)");
}

GainSet GainSet::defaults() {
  GainSet g;
  g.kp_out = Vec3(2.4, 2.4, 6.0).asDiagonal();
  g.kv_out = Vec3(1.2, 1.2, 2.2).asDiagonal();
  g.kp_in = Vec3(2.4, 2.4, 1.0).asDiagonal();
  g.kv_in = Vec3(1.2, 1.2, 0.8).asDiagonal();
  return g;
}

void ThrustParams::validate() const {
  if (!(force_increment > 0.0)) throw InvalidArgument("force_increment must be positive");
  if (!std::isfinite(kp) || !std::isfinite(ki) || !std::isfinite(kd)) {
    throw InvalidArgument("PID gains must be finite");
  }
  if (!(hold_duration >= 0.0)) throw InvalidArgument("hold_duration must be non-negative");
  if (!(touch_threshold >= 0.0)) throw InvalidArgument("touch_threshold must be non-negative");
  if (!(max_thrust > min_thrust)) throw InvalidArgument("max_thrust must exceed min_thrust");
  if (!(derivative_filter_tau >= 0.0)) throw InvalidArgument("derivative_filter_tau must be >= 0");
}

ThrustMachine::ThrustMachine(ThrustParams params) : params_(params) { params_.validate(); }

void ThrustMachine::reset() { *this = ThrustMachine(params_); }

ThrustMachine::Output ThrustMachine::clamp(double thrust) {
  const double clamped = std::clamp(thrust, params_.min_thrust, params_.max_thrust);
  return {clamped, clamped != thrust};
}

ThrustMachine::Output ThrustMachine::step(double desired_thrust, double observed_force,
                                          double desired_force, double now) {
  if (!std::isfinite(desired_thrust) || !std::isfinite(observed_force) ||
      !std::isfinite(desired_force) || !std::isfinite(now)) {
    throw InvalidArgument("thrust machine inputs must be finite");
  }
  if (!initialized_) {
    command_ = desired_thrust;
    initialized_ = true;
  }
  if (finished_) {
    const Output out = clamp(desired_thrust);
    command_ = out.thrust;
    return out;
  }

  // set when the SEARCH ramp runs into a limit; command_ is stored clamped
  bool ramp_clipped = false;
  switch (state_) {
    case ThrustState::kFree:
      command_ = desired_thrust;
      if (observed_force > params_.touch_threshold) state_ = ThrustState::kSearch;
      break;

    case ThrustState::kSearch: {
      const Output ramp = clamp(command_ + params_.force_increment);
      command_ = ramp.thrust;
      ramp_clipped = ramp.saturated;
      if (observed_force >= desired_force) {
        hold_thrust_ = command_;
        previous_time_ = now;
        hold_start_ = now;
        integral_ = 0.0;
        previous_error_ = 0.0;
        filtered_derivative_ = 0.0;
        state_ = ThrustState::kHold;
      }
      break;
    }

    case ThrustState::kHold: {
      const double dt = now - previous_time_;
      if (!(dt > 0.0)) throw InvalidArgument("HOLD step needs strictly increasing time");
      const double error = observed_force - desired_force;
      const double p = params_.kp * error;
      integral_ += params_.ki * error * dt;
      double rate = (error - previous_error_) / dt;
      if (params_.derivative_filter_tau > 0.0) {
        filtered_derivative_ += dt / (params_.derivative_filter_tau + dt) * (rate - filtered_derivative_);
        rate = filtered_derivative_;
      }
      const double d = params_.kd * rate;
      command_ = hold_thrust_ + p + integral_ + d;
      previous_error_ = error;
      previous_time_ = now;
      if (now - hold_start_ >= params_.hold_duration) {
        finished_ = true;
        finish_time_ = now;
      }
      break;
    }
  }
  Output out = clamp(command_);
  out.saturated = out.saturated || ramp_clipped;
  return out;
}

TrackingErrors tracking_errors(const Vec3& p_obs, const Vec3& v_obs, const Vec3& p_des,
                               const Vec3& v_des) {
  return {p_obs - p_des, v_obs - v_des};
}

GainPair select_gains(ThrustState state, const GainSet& gains) {
  if (state == ThrustState::kFree) return {gains.kp_out, gains.kv_out};
  return {gains.kp_in, gains.kv_in};
}

GainPair select_gains(const ThrustMachine& machine, const GainSet& gains) {
  if (machine.finished()) return {gains.kp_out, gains.kv_out};
  return select_gains(machine.state(), gains);
}

Vec3 desired_force(const TrackingErrors& e, const GainSet& gains, double mass,
                   const Vec3& gravity, bool in_contact) {
  const GainPair k = select_gains(in_contact ? ThrustState::kHold : ThrustState::kFree, gains);
  return -k.kp * e.position - k.kv * e.velocity - mass * gravity;
}

UnitQuaternion commanded_orientation(const Vec3& desired_force, const UnitQuaternion& q_des) {
  const double norm = desired_force.norm();
  if (!(norm > kMinDesiredForce)) {
    throw DegenerateOrientation("desired force too small to define a thrust axis");
  }
  const Basis des = quat_to_basis(q_des);
  const Vec3 z_cmd = desired_force / norm;
  const Vec3 y_cmd = cross_normalize(z_cmd, des.x);
  // Literal x = y_cmd x z_des is not orthogonal to z_cmd when z_des != z_cmd;
  // project it back onto the plane spanned by the commanded frame.
  Vec3 x_cmd = y_cmd.cross(des.z);
  x_cmd -= x_cmd.dot(z_cmd) * z_cmd;
  x_cmd -= x_cmd.dot(y_cmd) * y_cmd;
  const double xn = x_cmd.norm();
  if (!(xn > kParallelEpsilon)) {
    throw DegenerateOrientation("commanded x axis degenerate");
  }
  x_cmd /= xn;
  // Enforce right-handedness exactly: x = y x z.
  const Vec3 x_rh = y_cmd.cross(z_cmd);
  if (x_rh.dot(x_cmd) < 0.0) {
    throw DegenerateOrientation("commanded frame flips handedness");
  }
  return UnitQuaternion::from_basis(x_rh, y_cmd, z_cmd);
}

double desired_normalized_thrust(const Vec3& desired_force, const UnitQuaternion& q_obs,
                                 double thrust_coefficient) {
  if (!(thrust_coefficient > 0.0)) throw InvalidArgument("thrust coefficient must be positive");
  return thrust_coefficient * desired_force.dot(quat_to_basis(q_obs).z);
}

void SetpointSequence::validate() const {
  if (!(z_lo < z_hi)) throw InvalidArgument("search band needs z_lo < z_hi");
  if (!(search_speed > 0.0)) throw InvalidArgument("search speed must be positive");
  if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(yaw)) {
    throw InvalidArgument("search target must be finite");
  }
}

Setpoint search_trajectory(double t, const SetpointSequence& seq, const ThrustMachine& machine) {
  if (!(t >= 0.0)) throw InvalidArgument("search time must be non-negative");
  seq.validate();
  const double span = seq.z_hi - seq.z_lo;
  auto ramp = [&](double tau) { return seq.z_lo + std::min(seq.search_speed * tau, span); };

  Setpoint sp;
  sp.attitude = UnitQuaternion::from_axis_angle(Vec3::UnitZ(), seq.yaw);
  double z = 0.0;
  double vz = 0.0;
  if (machine.finished()) {
    const double top = ramp(machine.hold_start());
    z = std::max(seq.z_lo, top - seq.search_speed * (t - machine.finish_time()));
    vz = z > seq.z_lo ? -seq.search_speed : 0.0;
  } else if (machine.state() == ThrustState::kHold) {
    z = ramp(machine.hold_start());
  } else {
    if (machine.state() == ThrustState::kFree && seq.search_speed * t > span) {
      throw SurfaceNotFound("search band exhausted without contact");
    }
    z = ramp(t);
    vz = seq.search_speed * t < span ? seq.search_speed : 0.0;
  }
  sp.position = Vec3(seq.x, seq.y, z);
  sp.velocity = Vec3(0.0, 0.0, vz);
  return sp;
}

}  // namespace coinft::control
