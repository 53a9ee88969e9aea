#pragma once

// Switching cascaded attitude controller and the FREE/SEARCH/HOLD thrust
// state machine for contact-force control with a quadrotor.

#include <string>

#include "coinft/core.hpp"

namespace coinft::control {

enum class ThrustState { kFree, kSearch, kHold };

std::string to_string(ThrustState s);

/// Position/velocity gains for out-of-contact and in-contact flight.
/// All four matrices must be symmetric positive definite.
struct GainSet {
  Mat3 kp_out = Mat3::Identity();
  Mat3 kv_out = Mat3::Identity();
  Mat3 kp_in = Mat3::Identity();
  Mat3 kv_in = Mat3::Identity();

  void validate() const;
  /// Tuned for the default plant; not measured on hardware.
  static GainSet defaults();
};

/// Tuning of the thrust state machine. The PID gains act on
/// e = f_oc - f_dc, so they are negative when more thrust means more
/// contact force.
struct ThrustParams {
  double force_increment = 0.005;  // normalized thrust per controller step
  double kp = -0.01;               // 1/N
  double ki = -1.3;                // 1/(N*s)
  double kd = 0.0;                 // s/N
  double hold_duration = 20.0;     // s
  double touch_threshold = 0.2;    // N, FREE -> SEARCH deadband
  double min_thrust = 0.0;
  double max_thrust = 1.0;
  /// Optional first-order filter on the derivative term (0 = raw difference).
  double derivative_filter_tau = 0.0;  // s

  void validate() const;
};

/// Algorithm state. `finished` is set once HOLD has lasted hold_duration;
/// the machine then passes the position controller's thrust through until
/// reset for the next engagement.
class ThrustMachine {
 public:
  struct Output {
    double thrust = 0.0;  // normalized command
    bool saturated = false;
  };

  explicit ThrustMachine(ThrustParams params = {});

  /// One controller tick. Throws InvalidArgument if time does not advance
  /// while in HOLD.
  Output step(double desired_thrust, double observed_force, double desired_force, double now);

  void reset();

  ThrustState state() const { return state_; }
  bool finished() const { return finished_; }
  double command() const { return command_; }
  double hold_thrust() const { return hold_thrust_; }
  double integral() const { return integral_; }
  double previous_error() const { return previous_error_; }
  double previous_time() const { return previous_time_; }
  double hold_start() const { return hold_start_; }
  double finish_time() const { return finish_time_; }
  const ThrustParams& params() const { return params_; }

 private:
  Output clamp(double thrust);

  ThrustParams params_;
  ThrustState state_ = ThrustState::kFree;
  bool initialized_ = false;
  bool finished_ = false;
  double command_ = 0.0;
  double hold_thrust_ = 0.0;
  double integral_ = 0.0;
  double previous_error_ = 0.0;
  double filtered_derivative_ = 0.0;
  double previous_time_ = 0.0;
  double hold_start_ = 0.0;
  double finish_time_ = 0.0;
};

struct TrackingErrors {
  Vec3 position = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();
};

/// e_p = p_obs - p_des, e_v = v_obs - v_des.
TrackingErrors tracking_errors(const Vec3& p_obs, const Vec3& v_obs, const Vec3& p_des,
                               const Vec3& v_des);

struct GainPair {
  Mat3 kp;
  Mat3 kv;
};

/// Out-of-contact gains in FREE (and after the engagement finished),
/// in-contact gains in SEARCH and HOLD.
GainPair select_gains(ThrustState state, const GainSet& gains);
GainPair select_gains(const ThrustMachine& machine, const GainSet& gains);

/// F_des = -Kp e_p - Kv e_v - m g.
Vec3 desired_force(const TrackingErrors& e, const GainSet& gains, double mass,
                   const Vec3& gravity, bool in_contact);

/// z_cmd = F_des/|F_des|, y_cmd = z_cmd x x_des normalized,
/// x_cmd = y_cmd x z_des, then Gram-Schmidt back onto (z_cmd, y_cmd).
/// Throws DegenerateOrientation for |F_des| <= 0.1 N or z_cmd parallel to
/// x_des.
UnitQuaternion commanded_orientation(const Vec3& desired_force, const UnitQuaternion& q_des);

inline constexpr double kMinDesiredForce = 0.1;  // N

/// k_f * (F_des . z_obs).
double desired_normalized_thrust(const Vec3& desired_force, const UnitQuaternion& q_obs,
                                 double thrust_coefficient);

/// Vertical search through [z_lo, z_hi] below an overhead surface.
struct SetpointSequence {
  double x = 0.0;  // m, lateral target
  double y = 0.0;  // m
  double z_lo = 0.0;
  double z_hi = 1.0;
  double search_speed = 0.05;  // m/s
  double yaw = 0.0;            // rad

  void validate() const;
};

struct Setpoint {
  Vec3 position = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();
  UnitQuaternion attitude;
};

/// Setpoint at time t since the engagement started. The height ramps up
/// from z_lo while FREE/SEARCH, freezes at its HOLD-entry value, and ramps
/// back down to z_lo once the engagement finished. Throws SurfaceNotFound
/// when the ramp passes z_hi while still FREE.
Setpoint search_trajectory(double t, const SetpointSequence& seq, const ThrustMachine& machine);

}  // namespace coinft::control
