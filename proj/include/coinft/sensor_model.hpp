#pragma once

// Forward model of the capacitive F/T sensor: wrench -> pillar-array
// deformation -> 12 electrode capacitances -> CDC counts.
//
// Channel order everywhere: Z1..Z4 (normal mode), X1..X4, Y1..Y4 (shear mode).
// Quadrant i (0-based) sits at angle 45 + 90*i degrees. Quadrants 0 and 2
// carry the X pairs (X1/X2, X3/X4); quadrants 1 and 3 carry the Y pairs
// (Y1/Y2, Y3/Y4). The first electrode of each pair gains overlap for a
// positive displacement along the quadrant's sensitive axis.

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "coinft/core.hpp"

namespace coinft::sensor {

inline constexpr double kVacuumPermittivity = 8.8541878128e-12;  // F/m
inline constexpr int kNormalChannels = 4;
inline constexpr int kShearChannels = 8;
inline constexpr int kChannels = kNormalChannels + kShearChannels;

inline constexpr std::array<const char*, kChannels> kChannelNames{
    "Z1", "Z2", "Z3", "Z4", "X1", "X2", "X3", "X4", "Y1", "Y2", "Y3", "Y4"};

struct PillarRing {
  double radius = 0.0;  // m, ring radius of the pillar centers
  int count = 0;

  friend bool operator==(const PillarRing&, const PillarRing&) = default;
};

/// Elastomer pillar array between the sensing layers.
struct PillarModel {
  double youngs_modulus = 0.0;  // Pa
  double height = 127e-6;       // m
  double radius = 50e-6;        // m
  std::vector<PillarRing> rings;

  double aspect_ratio() const { return height / radius; }
  /// Incompressible rubber: G = E / 3.
  double shear_modulus() const { return youngs_modulus / 3.0; }
  int pillar_count() const;
  void validate() const;

  /// Shore 30A silicone, 7200 pillars of 100 um diameter on four rings.
  static PillarModel defaults();

  friend bool operator==(const PillarModel&, const PillarModel&) = default;
};

struct SensorGeometry {
  double nominal_gap = 203e-6;              // m
  double centroid_radius = 6e-3;            // m, quadrant centroid circle
  double normal_electrode_area = 40e-6;     // m^2 per quadrant (normal mode)
  double shear_overlap_area = 20e-6;        // m^2 per shear electrode at rest
  double finger_pitch = 0.25e-3;            // m
  double pillar_area_fraction = 0.3;
  double eps_pillar = 3.0;
  double eps_air = 1.0;

  /// Area-weighted relative permittivity of the gap.
  double effective_permittivity() const {
    return pillar_area_fraction * eps_pillar + (1.0 - pillar_area_fraction) * eps_air;
  }
  /// (x, y) centroid of quadrant i in meters.
  std::array<double, 2> centroid(int quadrant) const;
  void validate() const;

  friend bool operator==(const SensorGeometry&, const SensorGeometry&) = default;
};

/// Relative pose of the upper plate with respect to the lower one.
/// dz > 0 closes the gap.
struct PlateDisplacement {
  double dz = 0.0;       // m
  double tilt_x = 0.0;   // rad
  double tilt_y = 0.0;   // rad
  double dx = 0.0;       // m
  double dy = 0.0;       // m
  double twist_z = 0.0;  // rad

  friend bool operator==(const PlateDisplacement&, const PlateDisplacement&) = default;
};

struct StiffnessSet {
  double normal = 0.0;   // N/m
  double shear = 0.0;    // N/m
  double torsion = 0.0;  // N*m/rad
  double tilt = 0.0;     // N*m/rad
};

/// Baseline scaling C * (1 + alpha*(T - T0) + beta*(T - T0)^2) per channel.
struct DriftModel {
  std::array<double, kChannels> alpha{};  // 1/degC
  std::array<double, kChannels> beta{};   // 1/degC^2
  double reference_temperature = 25.0;    // degC

  double factor(int channel, double temperature) const {
    const double dt = temperature - reference_temperature;
    const auto k = static_cast<std::size_t>(channel);
    return 1.0 + alpha[k] * dt + beta[k] * dt * dt;
  }
  /// 1.3 % to 2.7 % per 10 degC across channels.
  static DriftModel defaults();
  static DriftModel none(double reference_temperature = 25.0);

  friend bool operator==(const DriftModel&, const DriftModel&) = default;
};

/// Capacitance-to-digital conversion.
struct CdcModel {
  double counts_per_farad = 1e15;  // 1 count per fF
  double offset = 0.0;             // counts
  double noise_sigma = 2.0;        // counts

  friend bool operator==(const CdcModel&, const CdcModel&) = default;
};

struct SensorParams {
  PillarModel pillars = PillarModel::defaults();
  SensorGeometry geometry{};
  DriftModel drift = DriftModel::defaults();
  CdcModel cdc{};
  bool lag_enabled = false;
  double lag_corner_hz = 97.0;
  double sample_rate_hz = 360.0;

  void validate() const;
  friend bool operator==(const SensorParams&, const SensorParams&) = default;
};

using Capacitances = std::array<double, kChannels>;  // F

/// One interleaved 12-channel sample.
struct CapacitanceFrame {
  std::array<std::int64_t, kChannels> counts{};
  double timestamp = 0.0;    // s
  double temperature = 0.0;  // degC

  std::span<const std::int64_t, kNormalChannels> normal() const {
    return std::span<const std::int64_t, kChannels>(counts).first<kNormalChannels>();
  }
  std::span<const std::int64_t, kShearChannels> shear() const {
    return std::span<const std::int64_t, kChannels>(counts).last<kShearChannels>();
  }

  friend bool operator==(const CapacitanceFrame&, const CapacitanceFrame&) = default;
};

/// Gent relation between Shore A hardness (10..90) and Young's modulus [Pa].
double shore_to_youngs(double shore_a);

/// Bonded-disk effective modulus E * (1 + 1/(2 eta^2)).
double effective_modulus(double youngs_modulus, double aspect_ratio);

/// eps0 * eps_r * area / gap [F].
double parallel_plate_capacitance(double relative_permittivity, double area, double gap);

/// Tangent stiffnesses at compression dz (0 <= dz < h). Pillars keep their
/// volume as they compress, so the aspect ratio drops and E_e rises.
StiffnessSet pillar_stiffness(const PillarModel& pillars, double dz);

/// Normal force [N] needed to compress the array by dz; the integral of
/// the normal stiffness from 0 to dz. Negative dz stretches the pillars.
double normal_force(const PillarModel& pillars, double dz);

/// Lumped static equilibrium. Throws SaturationError when the load would
/// compress the pillars past 80 % of their height or tilt/twist the plate
/// past 0.1 rad.
PlateDisplacement solve_deformation(const Wrench& w, const PillarModel& pillars);

/// Wrench that holds the plate at the given displacement (inverse of
/// solve_deformation).
Wrench restoring_wrench(const PlateDisplacement& d, const PillarModel& pillars);

/// Gap under quadrant i.
double quadrant_gap(const PlateDisplacement& d, const SensorGeometry& g, int quadrant);

/// Z1..Z4 [F]. Depends only on dz, tilt_x, tilt_y.
std::array<double, kNormalChannels> normal_mode_capacitance(const PlateDisplacement& d,
                                                            const SensorGeometry& g);

/// X1..X4, Y1..Y4 [F].
std::array<double, kShearChannels> shear_mode_capacitance(const PlateDisplacement& d,
                                                          const SensorGeometry& g);

/// Noise-free, drift-free capacitances for a wrench.
Capacitances capacitances(const Wrench& w, const SensorParams& params);

/// Applies drift, CDC gain, noise and rounding to a capacitance vector.
CapacitanceFrame digitize(const Capacitances& c, double temperature,
                          const SensorParams& params, std::mt19937_64& rng,
                          double timestamp = 0.0);

/// Full forward chain for one sample. Deterministic for a given RNG state.
CapacitanceFrame sample(const Wrench& w, double temperature, const SensorParams& params,
                        std::mt19937_64& rng, double timestamp = 0.0);
CapacitanceFrame sample(const Wrench& w, double temperature, const SensorParams& params,
                        std::uint64_t seed);

/// First-order low-pass on the capacitance vector, mimicking the finite
/// mechanical bandwidth of the pillar layer.
class CapacitanceLag {
 public:
  CapacitanceLag(double corner_hz, double sample_rate_hz);
  Capacitances filter(const Capacitances& input);
  void reset() { primed_ = false; }

 private:
  double alpha_;
  bool primed_ = false;
  Capacitances state_{};
};

}  // namespace coinft::sensor
