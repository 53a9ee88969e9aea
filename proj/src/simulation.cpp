#include "coinft/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

#include "coinft/dataio.hpp"

namespace coinft::flight {
namespace {

using control::ThrustMachine;
using control::ThrustState;

// Drives the plant, sensor and controller at their own rates.
class ClosedLoop {
 public:
  ClosedLoop(const SimConfig& cfg, ForceSensor& sensor, bool payload)
      : cfg_(cfg), sensor_(sensor) {
    state_.p = Vec3(cfg.search.x, cfg.search.y, cfg.search.z_lo);
    state_.payload_attached = payload;
    steps_per_tick_ = static_cast<int>(std::lround(cfg.plant_rate_hz / cfg.control_rate_hz));
    dt_ = 1.0 / cfg.plant_rate_hz;
    sensed_ = sensor_.sense(state_, cfg_.env, cfg_.plant);
    ++sensor_index_;
  }

  const FlightState& state() const { return state_; }
  double sensed() const { return sensed_; }
  double time() const { return static_cast<double>(tick_) / cfg_.control_rate_hz; }
  bool time_left() const { return time() < cfg_.max_duration - 1e-9; }

  struct TickInput {
    double f_offset = 0.0;       // subtracted from the sensed force
    double desired_force = 0.0;  // contact force the machine tracks
    double mass = 0.0;           // controller's mass estimate
  };

  // One controller period. `t_rel` is the engagement-relative time.
  TraceRow tick(ThrustMachine& machine, double t_rel, const TickInput& in,
                std::optional<Vec3> hover_at = std::nullopt) {
    control::Setpoint sp;
    if (hover_at) {
      sp.position = *hover_at;
      sp.attitude = UnitQuaternion::from_axis_angle(Vec3::UnitZ(), cfg_.search.yaw);
    } else {
      sp = control::search_trajectory(t_rel, cfg_.search, machine);
    }
    const bool in_contact = !hover_at && !machine.finished() && machine.state() != ThrustState::kFree;
    const auto errors = control::tracking_errors(state_.p, state_.v, sp.position, sp.velocity);
    const Vec3 f_des = control::desired_force(errors, cfg_.gains, in.mass, cfg_.plant.gravity, in_contact);
    const UnitQuaternion q_cmd = control::commanded_orientation(f_des, sp.attitude);
    const double thrust_des =
        control::desired_normalized_thrust(f_des, state_.q, cfg_.plant.thrust_coefficient);

    double thrust = thrust_des;
    if (!hover_at) {
      thrust = machine.step(thrust_des, sensed_ - in.f_offset, in.desired_force, t_rel).thrust;
    } else {
      thrust = std::clamp(thrust, cfg_.thrust.min_thrust, cfg_.thrust.max_thrust);
    }

    TraceRow row;
    row.t = time();
    row.p = state_.p;
    row.v = state_.v;
    row.q = state_.q;
    row.f_oc = sensed_;
    row.f_dc = in.desired_force + in.f_offset;
    row.thrust = thrust;
    row.state = hover_at ? ThrustState::kFree : machine.state();
    row.finished = !hover_at && machine.finished();
    row.payload_attached = state_.payload_attached;
    row.f_contact = contact_force(state_, cfg_.env);

    advance({thrust, q_cmd});
    return row;
  }

 private:
  void advance(const Command& cmd) {
    for (int i = 0; i < steps_per_tick_; ++i) {
      ++step_;
      state_ = step_plant(state_, cmd, cfg_.plant, cfg_.env, dt_);
      state_.t = static_cast<double>(step_) * dt_;
      while (static_cast<double>(sensor_index_) / cfg_.sensor_rate_hz <= state_.t + 1e-12) {
        sensed_ = sensor_.sense(state_, cfg_.env, cfg_.plant);
        ++sensor_index_;
      }
    }
    ++tick_;
  }

  const SimConfig& cfg_;
  ForceSensor& sensor_;
  FlightState state_;
  int steps_per_tick_ = 50;
  double dt_ = 1e-3;
  double sensed_ = 0.0;
  long long step_ = 0;
  long long tick_ = 0;
  long long sensor_index_ = 0;
};

double engagement_end(const SimConfig& cfg, const ThrustMachine& m, double hover_time) {
  const double top = cfg.search.z_lo + std::min(cfg.search.search_speed * m.hold_start(),
                                                cfg.search.z_hi - cfg.search.z_lo);
  return m.finish_time() + (top - cfg.search.z_lo) / cfg.search.search_speed + hover_time;
}

}  // namespace

std::string to_string(FlightScenario s) {
  return s == FlightScenario::kTrackSine ? "track_sine" : "deploy_package";
}

FlightScenario flight_scenario_from_string(const std::string& s) {
  if (s == "track_sine") return FlightScenario::kTrackSine;
  if (s == "deploy_package") return FlightScenario::kDeployPackage;
  throw InvalidArgument("unknown flight scenario '" + s + "' (expected track_sine or deploy_package)");
}

void SimConfig::validate() const {
  plant.validate();
  env.validate();
  gains.validate();
  thrust.validate();
  search.validate();
  if (!(plant_rate_hz > 0.0 && control_rate_hz > 0.0 && sensor_rate_hz > 0.0)) {
    throw InvalidArgument("simulation rates must be positive");
  }
  const double ratio = plant_rate_hz / control_rate_hz;
  if (std::abs(ratio - std::round(ratio)) > 1e-9 || ratio < 1.0) {
    throw InvalidArgument("plant rate must be an integer multiple of the control rate");
  }
  if (1.0 / plant_rate_hz > 0.01) throw InvalidArgument("plant rate must be at least 100 Hz");
  if (!(max_duration >= 0.0)) throw InvalidArgument("max_duration must be non-negative");
  if (!(sine.frequency >= 0.0) || !std::isfinite(sine.mean) || !std::isfinite(sine.amplitude)) {
    throw InvalidArgument("invalid sine profile");
  }
  if (deploy.contact_forces.empty()) throw InvalidArgument("deploy plan needs at least one press force");
  for (double f : deploy.contact_forces) {
    if (!(f > 0.0)) throw InvalidArgument("deploy press forces must be positive");
  }
  if (!(deploy.hold_duration >= 0.0 && deploy.hover_time > 0.0)) {
    throw InvalidArgument("deploy durations must be positive");
  }
  if (!(deploy.residual_fraction > 0.0 && deploy.residual_fraction < 1.0)) {
    throw InvalidArgument("deploy residual_fraction must lie in (0, 1)");
  }
}

SimResult run_track_sine(const SimConfig& cfg, ForceSensor& sensor) {
  cfg.validate();
  SimResult result;
  ClosedLoop loop(cfg, sensor, false);
  ThrustMachine machine(cfg.thrust);
  const double mass = cfg.plant.mass;
  double squared = 0.0;
  const double back_off = 2.0;

  while (loop.time_left()) {
    const double t = loop.time();
    double f_dc = cfg.sine.mean;
    if (machine.state() == ThrustState::kHold && !machine.finished()) {
      f_dc += cfg.sine.amplitude *
              std::sin(2.0 * std::numbers::pi * cfg.sine.frequency * (t - machine.hold_start()));
    }
    const bool tracking = machine.state() == ThrustState::kHold && !machine.finished();
    TraceRow row = loop.tick(machine, t, {0.0, f_dc, mass});
    if (tracking) {
      squared += (row.f_contact - row.f_dc) * (row.f_contact - row.f_dc);
      ++result.hold_ticks;
    }
    result.trace.push_back(row);
    if (machine.finished() && t - machine.finish_time() >= back_off) break;
  }
  if (result.hold_ticks > 0) result.rms_error = std::sqrt(squared / static_cast<double>(result.hold_ticks));
  result.success = machine.finished();
  return result;
}

SimResult run_deploy(const SimConfig& cfg, ForceSensor& sensor) {
  cfg.validate();
  SimResult result;
  ClosedLoop loop(cfg, sensor, true);
  const Vec3 hover_point(cfg.search.x, cfg.search.y, cfg.search.z_lo);
  control::ThrustParams press = cfg.thrust;
  press.hold_duration = cfg.deploy.hold_duration;
  ThrustMachine idle(press);
  bool believed_attached = true;
  auto mass_estimate = [&] {
    return cfg.plant.mass + (believed_attached ? cfg.env.payload_mass : 0.0);
  };

  // Hover to read the payload weight on the sensor.
  double sum = 0.0;
  int count = 0;
  while (loop.time_left() && loop.time() < cfg.deploy.hover_time) {
    TraceRow row = loop.tick(idle, 0.0, {0.0, 0.0, mass_estimate()}, hover_point);
    if (loop.time() > 0.5 * cfg.deploy.hover_time) {
      sum += row.f_oc;
      ++count;
    }
    result.trace.push_back(row);
  }
  if (count == 0) return result;
  result.initial_payload_reading = sum / count;
  const double threshold =
      cfg.deploy.residual_fraction * std::max(result.initial_payload_reading, cfg.thrust.touch_threshold);
  double offset = result.initial_payload_reading;

  for (double force : cfg.deploy.contact_forces) {
    if (!loop.time_left()) break;
    DeployAttempt attempt;
    attempt.contact_force = force;
    ThrustMachine machine(press);
    const double start = loop.time();
    double residual_sum = 0.0;
    int residual_count = 0;
    while (loop.time_left()) {
      const double t_rel = loop.time() - start;
      if (machine.finished() && t_rel >= engagement_end(cfg, machine, cfg.deploy.hover_time)) break;
      TraceRow row = loop.tick(machine, t_rel, {offset, force, mass_estimate()});
      if (row.state == ThrustState::kHold && !row.finished) {
        attempt.peak_sensed = std::max(attempt.peak_sensed, row.f_oc);
      }
      if (machine.finished() &&
          t_rel >= engagement_end(cfg, machine, cfg.deploy.hover_time) - 0.5 * cfg.deploy.hover_time) {
        residual_sum += row.f_oc;
        ++residual_count;
      }
      result.trace.push_back(row);
    }
    if (residual_count == 0) break;
    attempt.residual = residual_sum / residual_count;
    attempt.payload_detected = attempt.residual > threshold;
    result.attempts.push_back(attempt);
    if (!attempt.payload_detected) {
      believed_attached = false;
      result.success = true;
      break;
    }
    offset = attempt.residual;
  }
  return result;
}

SimResult run(FlightScenario scenario, const SimConfig& config, ForceSensor& sensor) {
  return scenario == FlightScenario::kTrackSine ? run_track_sine(config, sensor)
                                                : run_deploy(config, sensor);
}

void write_trace(const std::vector<TraceRow>& trace, std::ostream& out) {
  using dataio::format_double;
  out << kTraceHeader << '\n';
  for (const auto& r : trace) {
    out << format_double(r.t);
    for (double v : {r.p.x(), r.p.y(), r.p.z(), r.v.x(), r.v.y(), r.v.z(), r.q.w(), r.q.x(),
                     r.q.y(), r.q.z(), r.f_oc, r.f_dc, r.thrust}) {
      out << ',' << format_double(v);
    }
    out << ',' << (r.finished ? std::string("DONE") : control::to_string(r.state));
    out << ',' << (r.payload_attached ? 1 : 0) << ',' << format_double(r.f_contact) << '\n';
  }
}

}  // namespace coinft::flight
