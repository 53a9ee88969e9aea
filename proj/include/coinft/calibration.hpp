#pragma once

// Least-squares calibration from tared capacitance counts to wrenches, with
// per-channel quadratic temperature compensation.

#include <array>
#include <optional>
#include <span>
#include <string>

#include <Eigen/Core>

#include "coinft/core.hpp"
#include "coinft/sensor_model.hpp"

namespace coinft::calibration {

using sensor::CapacitanceFrame;
using sensor::kChannels;

/// Which electrodes feed the regression. kFull uses all 12 channels (24
/// features); kShearOnly drops Z1..Z4 (16 features).
enum class FeatureMode { kFull, kShearOnly };

int feature_count(FeatureMode mode);
std::string to_string(FeatureMode mode);
FeatureMode feature_mode_from_string(const std::string& s);

/// Per-channel no-load counts.
using Baseline = std::array<double, kChannels>;

/// Layout: tared values c_k of the used channels, then their squares.
using FeatureVector = Eigen::VectorXd;

/// Quadratic baseline drift model of one channel, in dT = T - T_ref:
/// counts(T) = a0 + a1 dT + a2 dT^2.
struct ChannelDrift {
  double a0 = 0.0;  // counts
  double a1 = 0.0;  // counts/degC
  double a2 = 0.0;  // counts/degC^2
  double r2 = 1.0;  // fit quality on the per-temperature means
};

struct TempCompensator {
  double reference_temperature = 25.0;
  std::array<ChannelDrift, kChannels> channels{};

  /// Predicted drift a1 dT + a2 dT^2 on channel k.
  double drift(int channel, double temperature) const;
  double min_r2() const;
};

struct CalibrationModel {
  FeatureMode mode = FeatureMode::kFull;
  Eigen::MatrixXd matrix;  // 6 x feature_count(mode)
  Baseline baseline{};
  double ridge = 0.0;  // applied on the unit-diagonal normal matrix
  std::optional<TempCompensator> temperature;
};

/// Per-axis accuracy. R^2 is empty for an axis with zero variance.
struct Metrics {
  std::array<double, 6> rmse{};
  std::array<std::optional<double>, 6> r2{};
  std::size_t samples = 0;
};

struct FitOptions {
  FeatureMode mode = FeatureMode::kFull;
  /// Ridge on the equilibrated normal matrix. Empty selects
  /// 1e-9 * trace / n_features; 0 is the plain normal equation.
  std::optional<double> ridge;
};

struct FitReport {
  CalibrationModel model;
  Metrics training;
  /// max|X (Y - A X)^T| / max|X Y^T|, the normal-equation optimality residual.
  double gradient_ratio = 0.0;
};

/// Per-channel mean of no-load frames.
Baseline tare(std::span<const CapacitanceFrame> no_load);

FeatureVector expand_features(const CapacitanceFrame& frame, const Baseline& baseline,
                              FeatureMode mode = FeatureMode::kFull);

/// Solves (X X^T + ridge) A^T = X Y^T after scaling every feature to a unit
/// diagonal. Throws IllConditionedError for fewer samples than features or
/// a singular system without ridge.
FitReport fit(std::span<const CapacitanceFrame> frames, std::span<const Wrench> wrenches,
              const Baseline& baseline, const FitOptions& options = {});

/// A * features. Throws ChannelMismatch if the length does not match.
Wrench predict_features(const CalibrationModel& model, const FeatureVector& features);

/// Full inference chain: temperature compensation (if the model carries a
/// compensator), tare, expansion, A * x.
Wrench predict(const CalibrationModel& model, const CapacitanceFrame& frame);
Wrench predict(const CalibrationModel& model, const CapacitanceFrame& frame,
               const Baseline& baseline);

Metrics compute_metrics(std::span<const Wrench> predicted, std::span<const Wrench> reference);
Metrics evaluate(const CalibrationModel& model, std::span<const CapacitanceFrame> frames,
                 std::span<const Wrench> reference);

/// Fits a quadratic in (T - reference) per channel to no-load frames.
/// Frames recorded at the same temperature are averaged before computing
/// R^2. Needs >= 3 distinct temperatures spanning >= 5 degC.
TempCompensator fit_temp_baseline(std::span<const CapacitanceFrame> sweep,
                                  double reference_temperature);

/// Removes the predicted drift at temperature T, restoring the
/// reference-temperature baseline. Counts are rounded back to integers.
CapacitanceFrame compensate(const CapacitanceFrame& frame, double temperature,
                            const TempCompensator& comp);

}  // namespace coinft::calibration
