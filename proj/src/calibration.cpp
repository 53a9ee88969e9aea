#include "coinft/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <Eigen/Dense>

namespace coinft::calibration {
namespace {

constexpr int kAxes = 6;

// Channel indices (into the 12-channel frame) used by each mode.
std::span<const int> used_channels(FeatureMode mode) {
  static constexpr std::array<int, 12> kAll{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11};
  if (mode == FeatureMode::kFull) return {kAll.data(), 12};
  return {kAll.data() + sensor::kNormalChannels, sensor::kShearChannels};
}

Eigen::Matrix<double, kAxes, 1> to_vector(const Wrench& w) {
  Eigen::Matrix<double, kAxes, 1> v;
  v << w.fx, w.fy, w.fz, w.mx, w.my, w.mz;
  return v;
}

Wrench from_vector(const Eigen::Matrix<double, kAxes, 1>& v) {
  return {v(0), v(1), v(2), v(3), v(4), v(5)};
}

// Quadratic least squares y ~ a0 + a1 x + a2 x^2 with weights.
Eigen::Vector3d weighted_quadratic(std::span<const double> x, std::span<const double> y,
                                   std::span<const double> weight) {
  Eigen::Matrix3d normal = Eigen::Matrix3d::Zero();
  Eigen::Vector3d rhs = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < x.size(); ++i) {
    const Eigen::Vector3d phi(1.0, x[i], x[i] * x[i]);
    normal += weight[i] * phi * phi.transpose();
    rhs += weight[i] * y[i] * phi;
  }
  return normal.ldlt().solve(rhs);
}

}  // namespace

int feature_count(FeatureMode mode) {
  return 2 * static_cast<int>(used_channels(mode).size());
}

std::string to_string(FeatureMode mode) {
  return mode == FeatureMode::kFull ? "full" : "shear_only";
}

FeatureMode feature_mode_from_string(const std::string& s) {
  if (s == "full") return FeatureMode::kFull;
  if (s == "shear_only") return FeatureMode::kShearOnly;
  throw InvalidArgument("unknown feature mode '" + s + "' (expected full or shear_only)");
}

double TempCompensator::drift(int channel, double temperature) const {
  const auto& c = channels[static_cast<std::size_t>(channel)];
  const double dt = temperature - reference_temperature;
  return c.a1 * dt + c.a2 * dt * dt;
}

double TempCompensator::min_r2() const {
  double r = 1.0;
  for (const auto& c : channels) r = std::min(r, c.r2);
  return r;
}

Baseline tare(std::span<const CapacitanceFrame> no_load) {
  if (no_load.empty()) throw InvalidArgument("tare needs at least one no-load frame");
  Baseline sum{};
  for (const auto& f : no_load) {
    for (std::size_t k = 0; k < kChannels; ++k) sum[k] += static_cast<double>(f.counts[k]);
  }
  for (double& s : sum) s /= static_cast<double>(no_load.size());
  return sum;
}

FeatureVector expand_features(const CapacitanceFrame& frame, const Baseline& baseline,
                              FeatureMode mode) {
  const auto channels = used_channels(mode);
  const auto n = static_cast<Eigen::Index>(channels.size());
  FeatureVector x(2 * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(channels[static_cast<std::size_t>(i)]);
    const double c = static_cast<double>(frame.counts[k]) - baseline[k];
    x(i) = c;
    x(n + i) = c * c;
  }
  return x;
}

FitReport fit(std::span<const CapacitanceFrame> frames, std::span<const Wrench> wrenches,
              const Baseline& baseline, const FitOptions& options) {
  if (frames.size() != wrenches.size()) {
    throw InvalidArgument("fit: frame and wrench counts differ");
  }
  const int nf = feature_count(options.mode);
  if (frames.size() < static_cast<std::size_t>(nf)) {
    throw IllConditionedError("fit needs at least " + std::to_string(nf) + " samples, got " +
                              std::to_string(frames.size()));
  }
  if (options.ridge && !(*options.ridge >= 0.0)) {
    throw InvalidArgument("ridge must be non-negative");
  }

  // Sequential accumulation keeps the result bit-stable.
  Eigen::MatrixXd xxt = Eigen::MatrixXd::Zero(nf, nf);
  Eigen::MatrixXd xyt = Eigen::MatrixXd::Zero(nf, kAxes);
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const FeatureVector x = expand_features(frames[i], baseline, options.mode);
    xxt.selfadjointView<Eigen::Lower>().rankUpdate(x);
    xyt.noalias() += x * to_vector(wrenches[i]).transpose();
  }
  xxt.triangularView<Eigen::StrictlyUpper>() = xxt.transpose();

  // Equilibrate to a unit diagonal; the ridge acts in these coordinates.
  Eigen::VectorXd scale(nf);
  for (int j = 0; j < nf; ++j) {
    scale(j) = xxt(j, j) > 0.0 ? 1.0 / std::sqrt(xxt(j, j)) : 1.0;
  }
  Eigen::MatrixXd scaled = scale.asDiagonal() * xxt * scale.asDiagonal();
  const double ridge = options.ridge.value_or(1e-9 * scaled.trace() / nf);

  if (ridge == 0.0) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(scaled, Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    if (!(lo > 1e-12 * hi)) {
      throw IllConditionedError("normal matrix is rank deficient (min/max eigenvalue " +
                                std::to_string(lo / hi) + "); add samples or a ridge term");
    }
  }
  scaled.diagonal().array() += ridge;
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(scaled);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
    throw IllConditionedError("normal matrix factorization failed");
  }
  const Eigen::MatrixXd at = scale.asDiagonal() * ldlt.solve(scale.asDiagonal() * xyt);

  FitReport report;
  report.model.mode = options.mode;
  report.model.matrix = at.transpose();
  report.model.baseline = baseline;
  report.model.ridge = ridge;
  if (!report.model.matrix.allFinite()) {
    throw IllConditionedError("calibration matrix has non-finite entries");
  }

  std::vector<Wrench> predicted;
  predicted.reserve(frames.size());
  Eigen::MatrixXd gradient = Eigen::MatrixXd::Zero(nf, kAxes);
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const FeatureVector x = expand_features(frames[i], baseline, options.mode);
    const Eigen::Matrix<double, kAxes, 1> yhat = report.model.matrix * x;
    gradient.noalias() += x * (to_vector(wrenches[i]) - yhat).transpose();
    predicted.push_back(from_vector(yhat));
  }
  const double denom = xyt.cwiseAbs().maxCoeff();
  report.gradient_ratio = denom > 0.0 ? gradient.cwiseAbs().maxCoeff() / denom : 0.0;
  report.training = compute_metrics(predicted, wrenches);
  return report;
}

Wrench predict_features(const CalibrationModel& model, const FeatureVector& features) {
  if (features.size() != model.matrix.cols() || model.matrix.rows() != kAxes) {
    throw ChannelMismatch("model expects " + std::to_string(model.matrix.cols()) +
                          " features, got " + std::to_string(features.size()));
  }
  return from_vector(model.matrix * features);
}

Wrench predict(const CalibrationModel& model, const CapacitanceFrame& frame,
               const Baseline& baseline) {
  const CapacitanceFrame input =
      model.temperature ? compensate(frame, frame.temperature, *model.temperature) : frame;
  return predict_features(model, expand_features(input, baseline, model.mode));
}

Wrench predict(const CalibrationModel& model, const CapacitanceFrame& frame) {
  return predict(model, frame, model.baseline);
}

Metrics compute_metrics(std::span<const Wrench> predicted, std::span<const Wrench> reference) {
  if (predicted.size() != reference.size()) {
    throw InvalidArgument("metrics: prediction and reference lengths differ");
  }
  if (reference.empty()) throw InvalidArgument("metrics need a non-empty test set");
  const double n = static_cast<double>(reference.size());

  // Plain sample-order sums so the numbers are reproducible by hand.
  Metrics m;
  m.samples = reference.size();
  for (int a = 0; a < kAxes; ++a) {
    double mean = 0.0;
    bool constant = true;
    for (const auto& w : reference) {
      mean += w[a];
      constant = constant && w[a] == reference.front()[a];
    }
    mean /= n;
    double ss_res = 0.0;
    double ss_tot = 0.0;
    for (std::size_t i = 0; i < reference.size(); ++i) {
      const double r = reference[i][a] - predicted[i][a];
      const double d = reference[i][a] - mean;
      ss_res += r * r;
      ss_tot += d * d;
    }
    const auto i = static_cast<std::size_t>(a);
    m.rmse[i] = std::sqrt(ss_res / n);
    if (!constant) m.r2[i] = 1.0 - ss_res / ss_tot;
  }
  return m;
}

Metrics evaluate(const CalibrationModel& model, std::span<const CapacitanceFrame> frames,
                 std::span<const Wrench> reference) {
  if (frames.size() != reference.size()) {
    throw InvalidArgument("evaluate: frame and wrench counts differ");
  }
  std::vector<Wrench> predicted;
  predicted.reserve(frames.size());
  for (const auto& f : frames) predicted.push_back(predict(model, f));
  return compute_metrics(predicted, reference);
}

TempCompensator fit_temp_baseline(std::span<const CapacitanceFrame> sweep,
                                  double reference_temperature) {
  std::map<double, std::vector<const CapacitanceFrame*>> by_temperature;
  for (const auto& f : sweep) {
    if (!std::isfinite(f.temperature)) throw InvalidArgument("sweep temperature must be finite");
    by_temperature[f.temperature].push_back(&f);
  }
  if (by_temperature.size() < 3) {
    throw InvalidArgument("temperature sweep needs at least 3 distinct temperatures, got " +
                          std::to_string(by_temperature.size()));
  }
  const double span = by_temperature.rbegin()->first - by_temperature.begin()->first;
  if (span < 5.0) {
    throw InvalidArgument("temperature sweep must span at least 5 degC");
  }

  std::vector<double> dt;
  std::vector<double> weight;
  std::vector<std::array<double, kChannels>> means;
  for (const auto& [temperature, frames] : by_temperature) {
    dt.push_back(temperature - reference_temperature);
    weight.push_back(static_cast<double>(frames.size()));
    std::array<double, kChannels> m{};
    for (const auto* f : frames) {
      for (std::size_t k = 0; k < kChannels; ++k) m[k] += static_cast<double>(f->counts[k]);
    }
    for (double& v : m) v /= static_cast<double>(frames.size());
    means.push_back(m);
  }

  TempCompensator comp;
  comp.reference_temperature = reference_temperature;
  std::vector<double> y(dt.size());
  for (std::size_t k = 0; k < kChannels; ++k) {
    for (std::size_t i = 0; i < dt.size(); ++i) y[i] = means[i][k];
    const Eigen::Vector3d a = weighted_quadratic(dt, y, weight);
    double wsum = 0.0;
    double ybar = 0.0;
    for (std::size_t i = 0; i < dt.size(); ++i) {
      wsum += weight[i];
      ybar += weight[i] * y[i];
    }
    ybar /= wsum;
    double ss_res = 0.0;
    double ss_tot = 0.0;
    for (std::size_t i = 0; i < dt.size(); ++i) {
      const double fit = a(0) + a(1) * dt[i] + a(2) * dt[i] * dt[i];
      ss_res += weight[i] * (y[i] - fit) * (y[i] - fit);
      ss_tot += weight[i] * (y[i] - ybar) * (y[i] - ybar);
    }
    auto& c = comp.channels[k];
    c.a0 = a(0);
    c.a1 = a(1);
    c.a2 = a(2);
    // A flat channel is explained perfectly by the constant term.
    c.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  }
  return comp;
}

CapacitanceFrame compensate(const CapacitanceFrame& frame, double temperature,
                            const TempCompensator& comp) {
  CapacitanceFrame out = frame;
  for (int k = 0; k < kChannels; ++k) {
    const auto i = static_cast<std::size_t>(k);
    const double drift = comp.drift(k, temperature);
    if (drift != 0.0) {
      out.counts[i] = std::llround(static_cast<double>(frame.counts[i]) - drift);
    }
  }
  return out;
}

}  // namespace coinft::calibration
