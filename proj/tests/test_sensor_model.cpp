#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "coinft/sensor_model.hpp"

using namespace coinft;
using namespace coinft::sensor;

namespace {

constexpr double kPi = std::numbers::pi;

// Per-pillar stiffness written directly from the constant-volume picture:
// compressed height h', radius grows so that r'^2 h' = r^2 h, and the
// bonded-disk modulus is re-evaluated at the new aspect ratio.
double oracle_pillar_k(const PillarModel& p, double dz) {
  const double hc = p.height - dz;
  const double rc2 = p.radius * p.radius * p.height / hc;
  const double eta = hc / std::sqrt(rc2);
  const double ee = p.youngs_modulus * (1.0 + 0.5 / (eta * eta));
  return ee * kPi * rc2 / hc;
}

// Composite Simpson integral of the array stiffness from 0 to dz.
double oracle_force(const PillarModel& p, double dz) {
  const int n = 2000;
  const double h = dz / n;
  double s = oracle_pillar_k(p, 0.0) + oracle_pillar_k(p, dz);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * oracle_pillar_k(p, i * h);
  return p.pillar_count() * s * h / 3.0;
}

double oracle_compression(const PillarModel& p, double fz) {
  double lo = 0.0;
  double hi = 0.8 * p.height;
  for (int i = 0; i < 100; ++i) {
    const double mid = 0.5 * (lo + hi);
    (oracle_force(p, mid) < fz ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

SensorParams quiet() {
  SensorParams p;
  p.cdc.noise_sigma = 0.0;
  return p;
}

Wrench unit(int axis, double value) {
  std::array<double, 6> a{};
  a[static_cast<std::size_t>(axis)] = value;
  return Wrench::from_array(a);
}

}  // namespace

TEST(ShoreToYoungs, GoldenValueAt30) {
  EXPECT_NEAR(shore_to_youngs(30.0), 1.142371731732508e6, 1e-9 * 1.142371731732508e6);
}

TEST(ShoreToYoungs, MonotoneAndPositive) {
  double prev = 0.0;
  for (double s = 10.0; s <= 90.0; s += 0.5) {
    const double e = shore_to_youngs(s);
    EXPECT_GT(e, prev);
    prev = e;
  }
  EXPECT_GT(shore_to_youngs(40.0), shore_to_youngs(30.0));
}

TEST(ShoreToYoungs, RejectsOutOfRange) {
  EXPECT_THROW(shore_to_youngs(5.0), InvalidArgument);
  EXPECT_THROW(shore_to_youngs(95.0), InvalidArgument);
}

TEST(EffectiveModulus, Examples) {
  EXPECT_NEAR(effective_modulus(1e6, 1e6), 1e6, 1e-6 * 1e6);
  EXPECT_NEAR(effective_modulus(1e6, 1.0), 1.5e6, 1e-9 * 1.5e6);
  EXPECT_NEAR(effective_modulus(2e6, 2.54), 2.15500031000062e6, 1e-9 * 2.155e6);
  EXPECT_NEAR(effective_modulus(2e6, 127e-6 / 50e-6), 2.155e6, 0.001e6);
}

TEST(EffectiveModulus, NeverBelowE) {
  for (double eta = 0.1; eta < 100.0; eta *= 1.3) EXPECT_GE(effective_modulus(3e5, eta), 3e5);
}

TEST(EffectiveModulus, RejectsNonPositive) {
  EXPECT_THROW(effective_modulus(0.0, 1.0), InvalidArgument);
  EXPECT_THROW(effective_modulus(1e6, 0.0), InvalidArgument);
  EXPECT_THROW(effective_modulus(-1.0, 2.0), InvalidArgument);
}

TEST(Capacitance, SingleColumn) {
  const double c = parallel_plate_capacitance(3.0, 1e-6, 127e-6);
  EXPECT_NEAR(c, 0.2092e-12, 0.001 * 0.2092e-12);
  EXPECT_DOUBLE_EQ(parallel_plate_capacitance(3.0, 1e-6, 63.5e-6), 2.0 * c);
}

TEST(PillarModel, Invariants) {
  const PillarModel p = PillarModel::defaults();
  EXPECT_EQ(p.height, 127e-6);
  EXPECT_EQ(p.aspect_ratio(), p.height / p.radius);
  EXPECT_EQ(p.shear_modulus(), p.youngs_modulus / 3.0);
  EXPECT_NO_THROW(p.validate());
  PillarModel bad = p;
  bad.radius = 0.0;
  EXPECT_THROW(bad.validate(), InvalidArgument);
  bad = p;
  bad.rings.clear();
  EXPECT_THROW(bad.validate(), InvalidArgument);
}

TEST(PillarStiffness, UndeformedMatchesSmallStrain) {
  const PillarModel p = PillarModel::defaults();
  const double area = kPi * p.radius * p.radius;
  const double expected =
      p.pillar_count() * effective_modulus(p.youngs_modulus, p.aspect_ratio()) * area / p.height;
  EXPECT_NEAR(pillar_stiffness(p, 0.0).normal, expected, 1e-12 * expected);
}

TEST(PillarStiffness, StiffensUnderCompression) {
  const PillarModel p = PillarModel::defaults();
  EXPECT_GT(pillar_stiffness(p, 0.3 * p.height).normal, pillar_stiffness(p, 0.0).normal);
  double prev = 0.0;
  for (int i = 0; i < 50; ++i) {
    const double k = pillar_stiffness(p, 0.9 * p.height * i / 50).normal;
    EXPECT_GE(k, prev);
    prev = k;
  }
}

TEST(PillarStiffness, RejectsCompressionBeyondHeight) {
  const PillarModel p = PillarModel::defaults();
  EXPECT_THROW(pillar_stiffness(p, p.height), InvalidArgument);
  EXPECT_THROW(pillar_stiffness(p, -1e-6), InvalidArgument);
}

TEST(PillarStiffness, ShearScalesWithArea) {
  PillarModel p = PillarModel::defaults();
  const double k1 = pillar_stiffness(p, 0.0).shear;
  p.radius *= 2.0;
  const double k2 = pillar_stiffness(p, 0.0).shear;
  EXPECT_NEAR(k2 / k1, 4.0, 1e-12);
}

TEST(PillarStiffness, MatchesConstantVolumeOracle) {
  const PillarModel p = PillarModel::defaults();
  for (double f : {0.0, 0.1, 0.3, 0.5, 0.7}) {
    const double dz = f * p.height;
    const double oracle = p.pillar_count() * oracle_pillar_k(p, dz);
    EXPECT_NEAR(pillar_stiffness(p, dz).normal, oracle, 1e-10 * oracle);
  }
}

TEST(PillarStiffness, FiniteDifferenceOfForce) {
  const PillarModel p = PillarModel::defaults();
  const double step = 1e-4 * p.height;
  for (int i = 0; i <= 20; ++i) {
    const double dz = 0.5 * p.height * i / 20;
    const double fd = (normal_force(p, dz + step) - normal_force(p, dz - step)) / (2 * step);
    const double k = pillar_stiffness(p, dz).normal;
    EXPECT_NEAR(fd, k, 0.01 * k) << "dz=" << dz;
  }
}

TEST(NormalForce, MatchesIntegratedStiffness) {
  const PillarModel p = PillarModel::defaults();
  for (double f : {0.05, 0.2, 0.4, 0.6}) {
    const double dz = f * p.height;
    EXPECT_NEAR(normal_force(p, dz), oracle_force(p, dz), 1e-9 * oracle_force(p, dz));
  }
}

TEST(SolveDeformation, ZeroWrench) {
  const PlateDisplacement d = solve_deformation(Wrench{}, PillarModel::defaults());
  EXPECT_EQ(d, PlateDisplacement{});
}

TEST(SolveDeformation, PureFzOnlyCompresses) {
  const PlateDisplacement d = solve_deformation(unit(2, 7.0), PillarModel::defaults());
  EXPECT_GT(d.dz, 0.0);
  EXPECT_EQ(d.dx, 0.0);
  EXPECT_EQ(d.dy, 0.0);
  EXPECT_EQ(d.tilt_x, 0.0);
  EXPECT_EQ(d.tilt_y, 0.0);
  EXPECT_EQ(d.twist_z, 0.0);
}

TEST(SolveDeformation, TenNewtonsAgainstBisectionOracle) {
  const PillarModel p = PillarModel::defaults();
  const double dz = solve_deformation(unit(2, 10.0), p).dz;
  EXPECT_NEAR(dz, oracle_compression(p, 10.0), 1e-9);
}

TEST(SolveDeformation, RoundTripThroughRestoringWrench) {
  const PillarModel p = PillarModel::defaults();
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> force(-5.0, 5.0);
  std::uniform_real_distribution<double> normal(-3.0, 20.0);
  std::uniform_real_distribution<double> moment(-80.0, 80.0);
  for (int i = 0; i < 500; ++i) {
    const Wrench w{force(rng), force(rng), normal(rng), moment(rng), moment(rng), moment(rng)};
    const Wrench back = restoring_wrench(solve_deformation(w, p), p);
    // forces in N; moments compared in N*m
    EXPECT_NEAR(back.fx, w.fx, 1e-9);
    EXPECT_NEAR(back.fy, w.fy, 1e-9);
    EXPECT_NEAR(back.fz, w.fz, 1e-9);
    EXPECT_NEAR(back.mx * 1e-3, w.mx * 1e-3, 1e-9);
    EXPECT_NEAR(back.my * 1e-3, w.my * 1e-3, 1e-9);
    EXPECT_NEAR(back.mz * 1e-3, w.mz * 1e-3, 1e-9);
  }
}

TEST(SolveDeformation, SaturatesOutOfRange) {
  const PillarModel p = PillarModel::defaults();
  EXPECT_THROW(solve_deformation(unit(2, 1e6), p), SaturationError);
  EXPECT_THROW(solve_deformation(unit(3, 1e5), p), SaturationError);
  EXPECT_THROW(solve_deformation(unit(2, std::nan("")), p), InvalidArgument);
}

TEST(NormalMode, IndependentOfLateralMotion) {
  const SensorGeometry g;
  PlateDisplacement d{20e-6, 1e-3, -2e-3, 0.0, 0.0, 0.0};
  const auto base = normal_mode_capacitance(d, g);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1e-4, 1e-4);
  for (int i = 0; i < 100; ++i) {
    d.dx = u(rng);
    d.dy = u(rng);
    d.twist_z = u(rng) * 100;
    EXPECT_EQ(normal_mode_capacitance(d, g), base);
  }
}

TEST(NormalMode, GapFormula) {
  const SensorGeometry g;
  const PlateDisplacement d{10e-6, 2e-3, 1e-3, 0, 0, 0};
  for (int i = 0; i < 4; ++i) {
    const double angle = kPi / 4 + kPi / 2 * i;
    const double x = 6e-3 * std::cos(angle);
    const double y = 6e-3 * std::sin(angle);
    EXPECT_NEAR(quadrant_gap(d, g, i), 203e-6 - (10e-6 + 2e-3 * y - 1e-3 * x), 1e-15);
  }
}

TEST(NormalMode, PositiveMxRaisesPlusYSide) {
  const SensorGeometry g;
  const auto rest = normal_mode_capacitance(PlateDisplacement{}, g);
  const double theta = 1e-4;
  const auto c = normal_mode_capacitance(PlateDisplacement{0, theta, 0, 0, 0, 0}, g);
  double sum = 0.0;
  double largest = 0.0;
  for (int i = 0; i < 4; ++i) {
    const auto k = static_cast<std::size_t>(i);
    const double dc = c[k] - rest[k];
    const double y = g.centroid(i)[1];
    // first-order Taylor: dC = C0 * theta * y / d0
    const double taylor = rest[k] * theta * y / g.nominal_gap;
    EXPECT_NEAR(dc, taylor, 0.05 * std::abs(taylor));
    EXPECT_EQ(dc > 0.0, y > 0.0);
    sum += dc;
    largest = std::max(largest, std::abs(dc));
  }
  EXPECT_LT(std::abs(sum), 0.01 * largest);
}

TEST(NormalMode, ClosedGapSaturates) {
  const SensorGeometry g;
  EXPECT_THROW(normal_mode_capacitance(PlateDisplacement{204e-6, 0, 0, 0, 0, 0}, g), SaturationError);
}

TEST(ShearMode, RestIsUniform) {
  const SensorGeometry g;
  const double c0 = kVacuumPermittivity * g.effective_permittivity() * g.shear_overlap_area / g.nominal_gap;
  for (double c : shear_mode_capacitance(PlateDisplacement{}, g)) EXPECT_NEAR(c, c0, 1e-12 * c0);
}

TEST(ShearMode, FxSplitsXPairsOnly) {
  const SensorParams p = quiet();
  const auto c = capacitances(unit(0, 2.0), p);
  EXPECT_GT(c[4], c[5]);
  EXPECT_GT(c[6], c[7]);
  EXPECT_DOUBLE_EQ(c[8], c[9]);
  EXPECT_DOUBLE_EQ(c[10], c[11]);
}

TEST(ShearMode, FxMirrorSymmetry) {
  const SensorParams p = quiet();
  for (double f : {0.3, 1.0, 4.5}) {
    const auto plus = capacitances(unit(0, f), p);
    const auto minus = capacitances(unit(0, -f), p);
    for (int k = 0; k < 4; ++k) EXPECT_EQ(plus[static_cast<std::size_t>(k)], minus[static_cast<std::size_t>(k)]);
    EXPECT_DOUBLE_EQ(plus[4], minus[5]);
    EXPECT_DOUBLE_EQ(plus[5], minus[4]);
    EXPECT_DOUBLE_EQ(plus[6], minus[7]);
    EXPECT_DOUBLE_EQ(plus[7], minus[6]);
    for (int k = 8; k < 12; ++k) EXPECT_DOUBLE_EQ(plus[static_cast<std::size_t>(k)], minus[static_cast<std::size_t>(k)]);
  }
}

TEST(ShearMode, TwistMatchesPerQuadrantHandComputation) {
  const SensorGeometry g;
  const double theta = 0.01;
  const auto c = shear_mode_capacitance(PlateDisplacement{0, 0, 0, 0, 0, theta}, g);
  const double eps = kVacuumPermittivity * (0.3 * 3.0 + 0.7 * 1.0);
  const double a0 = 20e-6;
  const double wf = 0.25e-3;
  const double d0 = 203e-6;
  const double s = 6e-3 / std::sqrt(2.0);
  // quadrant centroids (+s,+s), (-s,+s), (-s,-s), (+s,-s)
  // X quadrants see -theta*y, Y quadrants see +theta*x
  const double q0 = -theta * s;
  const double q1 = theta * -s;
  const double q2 = -theta * -s;
  const double q3 = theta * s;
  auto pair = [&](double delta) {
    return std::array<double, 2>{eps * a0 * (1 + delta / wf) / d0, eps * a0 * (1 - delta / wf) / d0};
  };
  const std::array<std::array<double, 2>, 4> expected{pair(q0), pair(q2), pair(q1), pair(q3)};
  for (std::size_t j = 0; j < 4; ++j) {
    EXPECT_NEAR(c[2 * j], expected[j][0], 1e-9 * expected[j][0]);
    EXPECT_NEAR(c[2 * j + 1], expected[j][1], 1e-9 * expected[j][1]);
  }
  // tangential pattern: X1<X2, X3>X4, Y1<Y2, Y3>Y4
  EXPECT_LT(c[0], c[1]);
  EXPECT_GT(c[2], c[3]);
  EXPECT_LT(c[4], c[5]);
  EXPECT_GT(c[6], c[7]);
}

TEST(ShearMode, WraparoundSaturates) {
  const SensorGeometry g;
  EXPECT_THROW(shear_mode_capacitance(PlateDisplacement{0, 0, 0, 0.2e-3, 0, 0}, g), SaturationError);
  EXPECT_NO_THROW(shear_mode_capacitance(PlateDisplacement{0, 0, 0, 0.1e-3, 0, 0}, g));
}

TEST(Sensitivity, DecreasesWithPillarRadius) {
  double prev = std::numeric_limits<double>::infinity();
  for (double r : {35e-6, 45e-6, 50e-6, 60e-6, 75e-6}) {
    SensorParams p = quiet();
    p.pillars.radius = r;
    const double slope = (capacitances(unit(2, 0.01), p)[0] - capacitances(Wrench{}, p)[0]) / 0.01;
    EXPECT_GT(slope, 0.0);
    EXPECT_LT(slope, prev) << "r=" << r;
    prev = slope;
  }
}

TEST(Sample, NoiselessTareIsRoundedBaseline) {
  const SensorParams p = quiet();
  const auto frame = sample(Wrench{}, p.drift.reference_temperature, p, 3);
  const auto c = capacitances(Wrench{}, p);
  for (std::size_t k = 0; k < 12; ++k) EXPECT_EQ(frame.counts[k], std::llround(c[k] * 1e15));
}

TEST(Sample, SameSeedSameFrame) {
  const SensorParams p;
  const Wrench w{0.5, -1.0, 6.0, 10.0, -20.0, 5.0};
  EXPECT_EQ(sample(w, 27.0, p, 42), sample(w, 27.0, p, 42));
  EXPECT_NE(sample(w, 27.0, p, 42), sample(w, 27.0, p, 43));
}

TEST(Sample, CountsNonNegative) {
  SensorParams p;
  p.cdc.offset = -1e9;
  for (auto c : sample(Wrench{}, 25.0, p, 1).counts) EXPECT_EQ(c, 0);
}

TEST(Sample, DriftOverTenDegrees) {
  const SensorParams p = quiet();
  const auto cold = sample(Wrench{}, 25.0, p, 1);
  const auto warm = sample(Wrench{}, 35.0, p, 1);
  const auto c = capacitances(Wrench{}, p);
  for (std::size_t k = 0; k < 12; ++k) {
    const double alpha = 1.2e-3 + 1.4e-3 * static_cast<double>(k) / 11.0;
    const double factor = 1.0 + alpha * 10.0 + 1e-5 * 100.0;
    EXPECT_EQ(warm.counts[k], std::llround(c[k] * factor * 1e15));
    const double shift = double(warm.counts[k] - cold.counts[k]) / double(cold.counts[k]);
    EXPECT_GE(shift, 0.01);
    EXPECT_LE(shift, 0.03);
  }
}

TEST(Sample, NoiseStatistics) {
  const SensorParams p;
  std::mt19937_64 rng(9);
  const auto c = capacitances(Wrench{}, p);
  double sum = 0.0;
  double sq = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double e = double(digitize(c, 25.0, p, rng).counts[0]) - c[0] * 1e15;
    sum += e;
    sq += e * e;
  }
  const double mean = sum / n;
  const double sd = std::sqrt(sq / n - mean * mean);
  // rounding adds 1/12 count^2
  EXPECT_NEAR(sd, std::sqrt(4.0 + 1.0 / 12.0), 0.05);
  EXPECT_NEAR(mean, 0.0, 0.1);
}

TEST(CapacitanceLag, FirstOrderStepResponse) {
  CapacitanceLag lag(97.0, 360.0);
  Capacitances zero{};
  Capacitances one{};
  one.fill(1.0);
  lag.filter(zero);
  const double a = 1.0 - std::exp(-2 * kPi * 97.0 / 360.0);
  double expected = 0.0;
  for (int i = 0; i < 10; ++i) {
    expected += a * (1.0 - expected);
    EXPECT_NEAR(lag.filter(one)[3], expected, 1e-15);
  }
}
