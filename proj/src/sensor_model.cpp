#include "coinft/sensor_model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace coinft::sensor {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kMaxCompression = 0.8;   // fraction of pillar height
constexpr double kMaxStretch = 0.5;       // fraction of pillar height
constexpr double kMaxAngle = 0.1;         // rad

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw InvalidArgument(std::string(name) + " must be positive and finite");
  }
}

// Per-pillar normal stiffness at compression dz under constant volume:
//   h' = h - dz,  r'^2 = r^2 h / h',  E_e' = E (1 + r'^2 / (2 h'^2))
//   k = E_e' pi r'^2 / h' = E pi r^2 h (1/h'^2 + r^2 h / (2 h'^5))
double pillar_normal_stiffness(const PillarModel& p, double dz) {
  const double h = p.height;
  const double r2 = p.radius * p.radius;
  const double hc = h - dz;
  return p.youngs_modulus * kPi * r2 * h *
         (1.0 / (hc * hc) + 0.5 * r2 * h / std::pow(hc, 5));
}

double pillar_normal_force(const PillarModel& p, double dz) {
  const double h = p.height;
  const double r2 = p.radius * p.radius;
  const double hc = h - dz;
  return p.youngs_modulus * kPi * r2 * h *
         ((1.0 / hc - 1.0 / h) + r2 * h / 8.0 * (1.0 / std::pow(hc, 4) - 1.0 / std::pow(h, 4)));
}

// Sum over pillars of rho^2 (rho = distance of pillar center from the axis).
double polar_sum(const PillarModel& p) {
  double s = 0.0;
  for (const auto& ring : p.rings) s += ring.count * ring.radius * ring.radius;
  return s;
}

double solve_compression(const PillarModel& p, double fz) {
  const double lo_limit = -kMaxStretch * p.height;
  const double hi_limit = kMaxCompression * p.height;
  const double n = p.pillar_count();
  if (fz > n * pillar_normal_force(p, hi_limit) || fz < n * pillar_normal_force(p, lo_limit)) {
    throw SaturationError("normal load " + std::to_string(fz) +
                          " N exceeds the pillar compression range");
  }
  if (fz == 0.0) return 0.0;

  // Newton on a monotone function, kept inside a shrinking bracket.
  double lo = fz > 0.0 ? 0.0 : lo_limit;
  double hi = fz > 0.0 ? hi_limit : 0.0;
  double dz = fz / (n * pillar_normal_stiffness(p, 0.0));
  dz = std::clamp(dz, lo, hi);
  const double tol = 1e-13 * std::max(1.0, std::abs(fz));
  for (int iter = 0; iter < 200; ++iter) {
    const double residual = n * pillar_normal_force(p, dz) - fz;
    if (std::abs(residual) <= tol) return dz;
    if (residual > 0.0) {
      hi = dz;
    } else {
      lo = dz;
    }
    double next = dz - residual / (n * pillar_normal_stiffness(p, dz));
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (next == dz) return dz;
    dz = next;
  }
  throw SaturationError("normal deformation solve did not converge");
}

}  // namespace

int PillarModel::pillar_count() const {
  int n = 0;
  for (const auto& ring : rings) n += ring.count;
  return n;
}

void PillarModel::validate() const {
  require_positive(youngs_modulus, "youngs_modulus");
  require_positive(height, "pillar height");
  require_positive(radius, "pillar radius");
  if (rings.empty()) throw InvalidArgument("pillar model needs at least one ring");
  for (const auto& ring : rings) {
    if (ring.count < 1 || ring.radius < 0.0 || !std::isfinite(ring.radius)) {
      throw InvalidArgument("pillar ring needs count >= 1 and radius >= 0");
    }
    // Tilt stiffness assumes an isotropic ring (sum of y^2 = n rho^2 / 2).
    if (ring.radius > 0.0 && ring.count < 3) {
      throw InvalidArgument("off-axis pillar ring needs at least 3 pillars");
    }
  }
}

PillarModel PillarModel::defaults() {
  PillarModel p;
  p.youngs_modulus = shore_to_youngs(30.0);
  p.height = 127e-6;
  p.radius = 50e-6;
  // Denser toward the rim. About 57 mm^2 of pillar area in total.
  p.rings = {{2e-3, 600}, {4e-3, 1400}, {6e-3, 2400}, {8e-3, 2800}};
  return p;
}

std::array<double, 2> SensorGeometry::centroid(int quadrant) const {
  const double angle = kPi / 4.0 + kPi / 2.0 * quadrant;
  return {centroid_radius * std::cos(angle), centroid_radius * std::sin(angle)};
}

void SensorGeometry::validate() const {
  require_positive(nominal_gap, "nominal_gap");
  require_positive(centroid_radius, "centroid_radius");
  require_positive(normal_electrode_area, "normal_electrode_area");
  require_positive(shear_overlap_area, "shear_overlap_area");
  require_positive(finger_pitch, "finger_pitch");
  require_positive(eps_pillar, "eps_pillar");
  require_positive(eps_air, "eps_air");
  if (!(pillar_area_fraction > 0.0 && pillar_area_fraction < 1.0)) {
    throw InvalidArgument("pillar_area_fraction must lie in (0, 1)");
  }
}

DriftModel DriftModel::defaults() {
  DriftModel d;
  for (std::size_t k = 0; k < kChannels; ++k) {
    d.alpha[k] = 1.2e-3 + 1.4e-3 * static_cast<double>(k) / (kChannels - 1);
    d.beta[k] = 1e-5;
  }
  return d;
}

DriftModel DriftModel::none(double reference_temperature) {
  DriftModel d;
  d.reference_temperature = reference_temperature;
  return d;
}

void SensorParams::validate() const {
  pillars.validate();
  geometry.validate();
  require_positive(cdc.counts_per_farad, "counts_per_farad");
  if (!(cdc.noise_sigma >= 0.0)) throw InvalidArgument("noise_sigma must be >= 0");
  require_positive(sample_rate_hz, "sample_rate_hz");
  if (lag_enabled) require_positive(lag_corner_hz, "lag_corner_hz");
  if (!std::isfinite(drift.reference_temperature)) {
    throw InvalidArgument("drift reference temperature must be finite");
  }
}

double shore_to_youngs(double shore_a) {
  if (!(shore_a >= 10.0 && shore_a <= 90.0)) {
    throw InvalidArgument("Shore A hardness must lie in [10, 90]");
  }
  const double mpa =
      0.0981 * (56.0 + 7.62336 * shore_a) / (0.137505 * (254.0 - 2.54 * shore_a));
  return mpa * 1e6;
}

double effective_modulus(double youngs_modulus, double aspect_ratio) {
  require_positive(youngs_modulus, "youngs_modulus");
  require_positive(aspect_ratio, "aspect_ratio");
  return youngs_modulus * (1.0 + 0.5 / (aspect_ratio * aspect_ratio));
}

double parallel_plate_capacitance(double relative_permittivity, double area, double gap) {
  require_positive(relative_permittivity, "relative permittivity");
  require_positive(area, "electrode area");
  if (!(gap > 0.0)) throw SaturationError("electrode gap closed");
  return kVacuumPermittivity * relative_permittivity * area / gap;
}

StiffnessSet pillar_stiffness(const PillarModel& p, double dz) {
  p.validate();
  if (!(dz >= 0.0 && dz < p.height)) {
    throw InvalidArgument("compression must satisfy 0 <= dz < pillar height");
  }
  const double n = p.pillar_count();
  const double area = kPi * p.radius * p.radius;
  const double shear_per_pillar = p.shear_modulus() * area / p.height;
  const double polar_moment = kPi * std::pow(p.radius, 4) / 2.0;
  const double k_pillar = pillar_normal_stiffness(p, dz);

  StiffnessSet s;
  s.normal = n * k_pillar;
  s.shear = n * shear_per_pillar;
  s.torsion = shear_per_pillar * polar_sum(p) + n * p.shear_modulus() * polar_moment / p.height;
  s.tilt = k_pillar * polar_sum(p) / 2.0;
  return s;
}

double normal_force(const PillarModel& p, double dz) {
  if (!(dz < p.height)) throw InvalidArgument("compression must stay below pillar height");
  return p.pillar_count() * pillar_normal_force(p, dz);
}

PlateDisplacement solve_deformation(const Wrench& w, const PillarModel& p) {
  p.validate();
  if (!w.is_finite()) throw InvalidArgument("wrench must be finite");

  PlateDisplacement d;
  d.dz = solve_compression(p, w.fz);

  // Tilt stiffness follows the current compression; stretched pillars fall
  // back to the small-strain value.
  const StiffnessSet k = pillar_stiffness(p, std::max(d.dz, 0.0));
  d.dx = w.fx / k.shear;
  d.dy = w.fy / k.shear;
  d.tilt_x = w.mx * 1e-3 / k.tilt;
  d.tilt_y = w.my * 1e-3 / k.tilt;
  d.twist_z = w.mz * 1e-3 / k.torsion;
  if (std::abs(d.tilt_x) >= kMaxAngle || std::abs(d.tilt_y) >= kMaxAngle ||
      std::abs(d.twist_z) >= kMaxAngle) {
    throw SaturationError("moment load exceeds the small-angle range");
  }
  return d;
}

Wrench restoring_wrench(const PlateDisplacement& d, const PillarModel& p) {
  const StiffnessSet k = pillar_stiffness(p, std::max(d.dz, 0.0));
  Wrench w;
  w.fz = normal_force(p, d.dz);
  w.fx = k.shear * d.dx;
  w.fy = k.shear * d.dy;
  w.mx = k.tilt * d.tilt_x * 1e3;
  w.my = k.tilt * d.tilt_y * 1e3;
  w.mz = k.torsion * d.twist_z * 1e3;
  return w;
}

double quadrant_gap(const PlateDisplacement& d, const SensorGeometry& g, int quadrant) {
  const auto [x, y] = g.centroid(quadrant);
  return g.nominal_gap - (d.dz + d.tilt_x * y - d.tilt_y * x);
}

std::array<double, kNormalChannels> normal_mode_capacitance(const PlateDisplacement& d,
                                                            const SensorGeometry& g) {
  std::array<double, kNormalChannels> c{};
  const double eps = g.effective_permittivity();
  for (int i = 0; i < kNormalChannels; ++i) {
    const double gap = quadrant_gap(d, g, i);
    if (!(gap > 0.0)) throw SaturationError("normal-mode gap closed at quadrant " + std::to_string(i + 1));
    c[static_cast<std::size_t>(i)] = parallel_plate_capacitance(eps, g.normal_electrode_area, gap);
  }
  return c;
}

std::array<double, kShearChannels> shear_mode_capacitance(const PlateDisplacement& d,
                                                          const SensorGeometry& g) {
  std::array<double, kShearChannels> c{};
  const double eps = g.effective_permittivity();
  // Quadrants 0 and 2 -> X1..X4, quadrants 1 and 3 -> Y1..Y4.
  constexpr std::array<int, 4> kFirstSlot{0, 4, 2, 6};
  for (int q = 0; q < 4; ++q) {
    const auto [x, y] = g.centroid(q);
    const double ux = d.dx - d.twist_z * y;
    const double uy = d.dy + d.twist_z * x;
    const double shift = (q % 2 == 0) ? ux : uy;
    if (!(std::abs(shift) < g.finger_pitch / 2.0)) {
      throw SaturationError("shear displacement exceeds half the finger pitch");
    }
    const double gap = quadrant_gap(d, g, q);
    if (!(gap > 0.0)) throw SaturationError("shear-mode gap closed at quadrant " + std::to_string(q + 1));
    const double ratio = shift / g.finger_pitch;
    const auto slot = static_cast<std::size_t>(kFirstSlot[static_cast<std::size_t>(q)]);
    c[slot] = parallel_plate_capacitance(eps, g.shear_overlap_area * (1.0 + ratio), gap);
    c[slot + 1] = parallel_plate_capacitance(eps, g.shear_overlap_area * (1.0 - ratio), gap);
  }
  return c;
}

Capacitances capacitances(const Wrench& w, const SensorParams& params) {
  const PlateDisplacement d = solve_deformation(w, params.pillars);
  const auto normal = normal_mode_capacitance(d, params.geometry);
  const auto shear = shear_mode_capacitance(d, params.geometry);
  Capacitances c{};
  std::copy(normal.begin(), normal.end(), c.begin());
  std::copy(shear.begin(), shear.end(), c.begin() + kNormalChannels);
  return c;
}

CapacitanceFrame digitize(const Capacitances& c, double temperature,
                          const SensorParams& params, std::mt19937_64& rng,
                          double timestamp) {
  if (!std::isfinite(temperature)) throw InvalidArgument("temperature must be finite");
  CapacitanceFrame frame;
  frame.timestamp = timestamp;
  frame.temperature = temperature;
  std::normal_distribution<double> noise(0.0, 1.0);
  for (int k = 0; k < kChannels; ++k) {
    const auto i = static_cast<std::size_t>(k);
    double counts = c[i] * params.drift.factor(k, temperature) * params.cdc.counts_per_farad +
                    params.cdc.offset;
    // Always draw, so the stream position does not depend on sigma.
    const double z = noise(rng);
    counts += params.cdc.noise_sigma * z;
    frame.counts[i] = std::max<std::int64_t>(0, std::llround(counts));
  }
  return frame;
}

CapacitanceFrame sample(const Wrench& w, double temperature, const SensorParams& params,
                        std::mt19937_64& rng, double timestamp) {
  return digitize(capacitances(w, params), temperature, params, rng, timestamp);
}

CapacitanceFrame sample(const Wrench& w, double temperature, const SensorParams& params,
                        std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return sample(w, temperature, params, rng);
}

CapacitanceLag::CapacitanceLag(double corner_hz, double sample_rate_hz) {
  require_positive(corner_hz, "lag corner frequency");
  require_positive(sample_rate_hz, "sample rate");
  alpha_ = 1.0 - std::exp(-2.0 * kPi * corner_hz / sample_rate_hz);
}

Capacitances CapacitanceLag::filter(const Capacitances& input) {
  if (!primed_) {
    state_ = input;
    primed_ = true;
    return state_;
  }
  for (std::size_t k = 0; k < state_.size(); ++k) state_[k] += alpha_ * (input[k] - state_[k]);
  return state_;
}

}  // namespace coinft::sensor
