// coinft: synthetic data, calibration, temperature sweeps and closed-loop
// flights from the command line. Every output is a CSV or JSON file under
// the output directory (--out, else $COINFT_OUT_DIR, else ./coinft_out).

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "coinft/calibration.hpp"
#include "coinft/config.hpp"
#include "coinft/dataio.hpp"
#include "coinft/simulation.hpp"

namespace fs = std::filesystem;
using namespace coinft;
using config::json;

namespace {

enum ExitCode : int {
  kOk = 0,
  kUsage = 2,
  kData = 3,
  kModel = 4,
  kSimulation = 5,
  kSaturation = 6,
};

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

fs::path output_dir(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("COINFT_OUT_DIR"); env && *env) return env;
  return "coinft_out";
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw FormatError(FormatError::Kind::kIo, 0, "cannot create " + dir.string() + ": " + ec.message());
}

// Write to a sibling temp file and rename, so a failed run never leaves a
// half-written output behind.
template <typename Fn>
void write_atomic(const fs::path& path, Fn&& body) {
  fs::path tmp = path;
  tmp += ".part";
  try {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw FormatError(FormatError::Kind::kIo, 0, "cannot open " + tmp.string() + " for writing");
    body(out);
    out.flush();
    if (!out) throw FormatError(FormatError::Kind::kIo, 0, "write failed for " + tmp.string());
  } catch (...) {
    std::error_code ignored;
    fs::remove(tmp, ignored);
    throw;
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw FormatError(FormatError::Kind::kIo, 0, "cannot rename to " + path.string());
}

void write_json(const fs::path& path, const json& j) {
  write_atomic(path, [&](std::ostream& out) { out << j.dump(2) << '\n'; });
}

std::string file_hash(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::uint64_t h = 1469598103934665603ULL;
  char c;
  while (in.get(c)) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << h;
  return s.str();
}

sensor::SensorParams load_sensor(const std::string& path) {
  if (path.empty()) return {};
  return config::sensor_params_from_json(config::load_json(path));
}

dataio::Scenario load_scenario(const std::string& path, const std::string& preset) {
  if (!path.empty()) return config::scenario_from_json(config::load_json(path));
  if (preset == "large_range") return dataio::Scenario::large_range();
  if (preset == "small_range") return dataio::Scenario::small_range();
  if (preset == "zero_range") return dataio::Scenario::zero_range();
  throw UsageError("unknown preset '" + preset + "'");
}

std::string fmt(double v, int prec = 4) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(prec) << v;
  return s.str();
}

// Training data pooled from several logs, tare taken from their rest rows.
struct Pooled {
  std::vector<sensor::CapacitanceFrame> frames;
  std::vector<Wrench> wrenches;
  std::vector<sensor::CapacitanceFrame> no_load;
};

Pooled pool(const std::vector<dataio::Trial>& trials) {
  Pooled p;
  for (const auto& t : trials) {
    for (const auto& s : t.samples) {
      p.frames.push_back(s.frame);
      p.wrenches.push_back(s.wrench);
      if (s.wrench == Wrench{}) p.no_load.push_back(s.frame);
    }
  }
  return p;
}

std::vector<dataio::Trial> load_logs(const std::vector<std::string>& paths) {
  std::vector<dataio::Trial> out;
  for (const auto& p : paths) out.push_back(dataio::load_log(p));
  return out;
}

void print_table(std::ostream& out, const std::string& title,
                 const std::vector<std::pair<std::string, calibration::Metrics>>& rows) {
  out << title << '\n';
  out << std::left << std::setw(24) << "" << std::right;
  for (const char* a : kAxisNames) out << std::setw(9) << a;
  out << '\n';
  for (const auto& [name, m] : rows) {
    out << std::left << std::setw(24) << (name + " (RMSE)") << std::right;
    for (double v : m.rmse) out << std::setw(9) << fmt(v, 3);
    out << '\n';
  }
  for (const auto& [name, m] : rows) {
    out << std::left << std::setw(24) << (name + " (R2)") << std::right;
    for (const auto& r : m.r2) out << std::setw(9) << (r ? fmt(*r, 4) : std::string("n/a"));
    out << '\n';
  }
  out << "forces in N, moments in mN*m\n";
}

void write_metrics_csv(std::ostream& out, const std::string& mode, const calibration::Metrics& m,
                       const std::string& set) {
  for (std::size_t a = 0; a < 6; ++a) {
    out << set << ',' << mode << ',' << kAxisNames[a] << ',' << dataio::format_double(m.rmse[a]) << ','
        << (m.r2[a] ? dataio::format_double(*m.r2[a]) : std::string()) << ',' << m.samples << '\n';
  }
}

calibration::CalibrationModel train_default(const sensor::SensorParams& params, std::uint64_t seed,
                                            int jobs) {
  auto trials = dataio::generate_trials(dataio::Scenario::large_range(), params, 10, seed, jobs);
  const Pooled p = pool(trials);
  return calibration::fit(p.frames, p.wrenches, calibration::tare(p.no_load)).model;
}

// ---------------------------------------------------------------- generate

struct GenerateArgs {
  std::string scenario_file, preset = "large_range", sensor_file, out;
  int trials = 11;
  std::uint64_t seed = 1;
  int jobs = 1;
  double duration = -1.0;
};

int cmd_generate(const GenerateArgs& a) {
  if (a.trials <= 0) throw UsageError("--trials must be at least 1");
  if (a.jobs <= 0) throw UsageError("--jobs must be at least 1");
  const auto params = load_sensor(a.sensor_file);
  auto scenario = load_scenario(a.scenario_file, a.preset);
  if (a.duration >= 0.0) scenario.duration = a.duration;
  scenario.validate(params);
  const auto trials = dataio::generate_trials(scenario, params, a.trials, a.seed, a.jobs);

  const fs::path dir = output_dir(a.out);
  ensure_dir(dir);
  json files = json::array();
  for (std::size_t i = 0; i < trials.size(); ++i) {
    std::ostringstream name;
    name << "trial_" << std::setw(3) << std::setfill('0') << i << ".csv";
    const fs::path path = dir / name.str();
    write_atomic(path, [&](std::ostream& out) { dataio::write_log(trials[i], out); });
    files.push_back({{"file", name.str()},
                     {"seed", trials[i].meta.seed},
                     {"rows", trials[i].samples.size()},
                     {"fnv1a", file_hash(path)},
                     {"role", i + 1 == trials.size() && trials.size() > 1 ? "test" : "train"}});
  }
  json manifest = {{"scenario", config::to_json(scenario)},
                   {"sensor", config::to_json(params)},
                   {"params_hash", dataio::params_hash(params)},
                   {"base_seed", a.seed},
                   {"trials", files}};
  write_json(dir / "manifest.json", manifest);
  std::cout << "wrote " << trials.size() << " trials to " << dir.string() << '\n';
  return kOk;
}

// --------------------------------------------------------------- calibrate

struct CalibrateArgs {
  std::vector<std::string> train, test;
  std::string mode = "full", out;
  std::optional<double> ridge;
};

int cmd_calibrate(const CalibrateArgs& a) {
  if (a.mode != "full" && a.mode != "shear_only" && a.mode != "both") {
    throw UsageError("--mode must be full, shear_only or both");
  }
  if (a.ridge && !(*a.ridge >= 0.0)) throw UsageError("--ridge must be non-negative");
  const auto train = load_logs(a.train);
  const auto test = load_logs(a.test);
  const Pooled p = pool(train);
  if (p.no_load.empty()) {
    throw FormatError(FormatError::Kind::kSchema, 0, "training logs contain no no-load rows to tare from");
  }
  const auto baseline = calibration::tare(p.no_load);
  const Pooled t = pool(test);

  std::vector<calibration::FeatureMode> modes;
  if (a.mode != "shear_only") modes.push_back(calibration::FeatureMode::kFull);
  if (a.mode != "full") modes.push_back(calibration::FeatureMode::kShearOnly);

  // Fit everything before writing anything.
  std::vector<calibration::FitReport> reports;
  for (auto m : modes) reports.push_back(calibration::fit(p.frames, p.wrenches, baseline, {m, a.ridge}));

  const fs::path dir = output_dir(a.out);
  ensure_dir(dir);
  std::vector<std::pair<std::string, calibration::Metrics>> train_rows, test_rows;
  std::ostringstream csv;
  csv << "set,mode,axis,rmse,r2,samples\n";
  for (const auto& r : reports) {
    const std::string name = calibration::to_string(r.model.mode);
    const std::string label = r.model.mode == calibration::FeatureMode::kFull ? "Normal + Shear" : "Shear";
    train_rows.emplace_back(label, r.training);
    write_metrics_csv(csv, name, r.training, "train");
    if (!t.frames.empty()) {
      auto m = calibration::evaluate(r.model, t.frames, t.wrenches);
      test_rows.emplace_back(label, m);
      write_metrics_csv(csv, name, m, "test");
    }
  }
  for (const auto& r : reports) {
    write_json(dir / ("model_" + calibration::to_string(r.model.mode) + ".json"), config::to_json(r.model));
  }
  write_atomic(dir / "calibration_report.csv", [&](std::ostream& out) { out << csv.str(); });

  print_table(std::cout, "training set (" + std::to_string(p.frames.size()) + " samples)", train_rows);
  if (!test_rows.empty()) {
    std::cout << '\n';
    print_table(std::cout, "test set (" + std::to_string(t.frames.size()) + " samples)", test_rows);
  }
  for (const auto& r : reports) {
    std::cout << calibration::to_string(r.model.mode) << " optimality residual "
              << std::scientific << std::setprecision(2) << r.gradient_ratio << std::defaultfloat << '\n';
  }
  return kOk;
}

// ---------------------------------------------------------------- evaluate

struct EvaluateArgs {
  std::string model, out;
  std::vector<std::string> logs;
};

int cmd_evaluate(const EvaluateArgs& a) {
  const auto model = config::model_from_json(config::load_json(a.model));
  const auto trials = load_logs(a.logs);
  const Pooled p = pool(trials);
  std::vector<Wrench> predicted;
  predicted.reserve(p.frames.size());
  for (const auto& f : p.frames) predicted.push_back(calibration::predict(model, f));
  const auto m = calibration::compute_metrics(predicted, p.wrenches);

  const fs::path dir = output_dir(a.out);
  ensure_dir(dir);
  write_atomic(dir / "metrics.csv", [&](std::ostream& out) {
    out << "set,mode,axis,rmse,r2,samples\n";
    write_metrics_csv(out, calibration::to_string(model.mode), m, "eval");
  });
  write_atomic(dir / "predictions.csv", [&](std::ostream& out) {
    out << "t,Fx_ref,Fy_ref,Fz_ref,Mx_ref,My_ref,Mz_ref,Fx,Fy,Fz,Mx,My,Mz\n";
    for (std::size_t i = 0; i < predicted.size(); ++i) {
      out << dataio::format_double(p.frames[i].timestamp);
      for (double v : p.wrenches[i].to_array()) out << ',' << dataio::format_double(v);
      for (double v : predicted[i].to_array()) out << ',' << dataio::format_double(v);
      out << '\n';
    }
  });
  print_table(std::cout, "evaluation (" + std::to_string(m.samples) + " samples)",
              {{calibration::to_string(model.mode), m}});
  return kOk;
}

// -------------------------------------------------------------- temp-sweep

struct TempSweepArgs {
  std::string sensor_file, model, out;
  double t_start = 25.0, t_end = 35.0, reference = 25.0;
  int steps = 11, frames = 3600, jobs = 1;
  std::uint64_t seed = 1;
};

int cmd_temp_sweep(const TempSweepArgs& a) {
  if (a.steps < 3) throw UsageError("--steps must be at least 3");
  if (a.frames < 1) throw UsageError("--frames must be at least 1");
  const auto params = load_sensor(a.sensor_file);
  calibration::CalibrationModel model =
      a.model.empty() ? train_default(params, a.seed + 1000, a.jobs)
                      : config::model_from_json(config::load_json(a.model));
  model.temperature.reset();
  const auto sweep =
      dataio::generate_temperature_sweep(params, a.t_start, a.t_end, a.steps, a.frames, a.seed);
  const auto comp = calibration::fit_temp_baseline(sweep, a.reference);

  const fs::path dir = output_dir(a.out);
  ensure_dir(dir);
  write_json(dir / "compensator.json", config::to_json(comp));
  double worst_raw = 0.0, worst_comp = 0.0;
  write_atomic(dir / "temp_sweep.csv", [&](std::ostream& out) {
    out << "t,T,F_uncompensated,F_compensated,M_uncompensated,M_compensated\n";
    for (const auto& f : sweep) {
      const Wrench raw = calibration::predict(model, f);
      const Wrench fixed = calibration::predict(model, calibration::compensate(f, f.temperature, comp));
      const double moment_raw = Vec3(raw.mx, raw.my, raw.mz).norm();
      const double moment_fixed = Vec3(fixed.mx, fixed.my, fixed.mz).norm();
      worst_raw = std::max(worst_raw, raw.force().norm());
      worst_comp = std::max(worst_comp, fixed.force().norm());
      out << dataio::format_double(f.timestamp) << ',' << dataio::format_double(f.temperature) << ','
          << dataio::format_double(raw.force().norm()) << ',' << dataio::format_double(fixed.force().norm())
          << ',' << dataio::format_double(moment_raw) << ',' << dataio::format_double(moment_fixed) << '\n';
    }
  });
  write_atomic(dir / "compensator.csv", [&](std::ostream& out) {
    out << "channel,a0,a1,a2,r2\n";
    for (int k = 0; k < sensor::kChannels; ++k) {
      const auto& c = comp.channels[static_cast<std::size_t>(k)];
      out << sensor::kChannelNames[static_cast<std::size_t>(k)] << ',' << dataio::format_double(c.a0) << ','
          << dataio::format_double(c.a1) << ',' << dataio::format_double(c.a2) << ','
          << dataio::format_double(c.r2) << '\n';
    }
  });
  std::cout << "min channel R2 " << fmt(comp.min_r2(), 6) << '\n'
            << "max no-load |F| uncompensated " << fmt(worst_raw, 3) << " N, compensated "
            << fmt(worst_comp, 3) << " N\n";
  return kOk;
}

// --------------------------------------------------------------------- fly

struct FlyArgs {
  std::string scenario = "track_sine", config_file, sensor_file, model, out;
  bool bypass = false;
  std::optional<double> duration;
  std::optional<std::uint64_t> seed;
  int jobs = 1;
};

int cmd_fly(const FlyArgs& a) {
  const auto scenario = flight::flight_scenario_from_string(a.scenario);
  flight::SimConfig cfg =
      a.config_file.empty() ? flight::SimConfig{} : config::sim_config_from_json(config::load_json(a.config_file));
  if (a.duration) cfg.max_duration = *a.duration;
  if (a.seed) cfg.seed = *a.seed;
  cfg.validate();

  std::optional<flight::ForceSensor> sensor;
  if (a.bypass) {
    sensor = flight::ForceSensor::bypass();
  } else {
    const auto params = load_sensor(a.sensor_file);
    auto model = a.model.empty() ? train_default(params, cfg.seed + 1000, a.jobs)
                                 : config::model_from_json(config::load_json(a.model));
    sensor = flight::ForceSensor::stack(params, std::move(model), cfg.sensor_temperature, cfg.seed);
  }
  const auto result = flight::run(scenario, cfg, *sensor);

  const fs::path dir = output_dir(a.out);
  ensure_dir(dir);
  write_atomic(dir / ("flight_" + a.scenario + ".csv"),
               [&](std::ostream& out) { flight::write_trace(result.trace, out); });
  json summary = {{"scenario", a.scenario},
                  {"bypass_sensor", a.bypass},
                  {"seed", cfg.seed},
                  {"rows", result.trace.size()},
                  {"success", result.success}};
  if (scenario == flight::FlightScenario::kTrackSine) {
    summary["rms_error_n"] = result.rms_error;
    summary["hold_ticks"] = result.hold_ticks;
    std::cout << "force tracking RMS error " << fmt(result.rms_error) << " N over " << result.hold_ticks
              << " HOLD ticks\n";
  } else {
    json attempts = json::array();
    std::cout << "payload reading before pressing " << fmt(result.initial_payload_reading, 3) << " N\n";
    for (const auto& at : result.attempts) {
      attempts.push_back({{"contact_force_n", at.contact_force},
                          {"peak_sensed_n", at.peak_sensed},
                          {"residual_n", at.residual},
                          {"payload_detected", at.payload_detected}});
      std::cout << "press " << fmt(at.contact_force, 2) << " N: residual " << fmt(at.residual, 3) << " N, "
                << (at.payload_detected ? "payload still attached" : "payload released") << '\n';
    }
    summary["initial_payload_reading_n"] = result.initial_payload_reading;
    summary["attempts"] = attempts;
    std::cout << (result.success ? "deployment succeeded\n" : "deployment did not complete\n");
  }
  write_json(dir / ("flight_" + a.scenario + "_summary.json"), summary);
  return kOk;
}

// ------------------------------------------------------------------ params

int cmd_params(const std::string& which) {
  if (which == "sensor") {
    std::cout << config::to_json(sensor::SensorParams{}).dump(2) << '\n';
  } else if (which == "scenario") {
    std::cout << config::to_json(dataio::Scenario::large_range()).dump(2) << '\n';
  } else if (which == "sim") {
    std::cout << config::to_json(flight::SimConfig{}).dump(2) << '\n';
  } else {
    throw UsageError("params expects sensor, scenario or sim");
  }
  return kOk;
}

int guarded(const std::function<int()>& fn) {
  try {
    return fn();
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const InvalidArgument& e) {
    std::cerr << "invalid argument: " << e.what() << '\n';
    return kUsage;
  } catch (const FormatError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const IllConditionedError& e) {
    std::cerr << "model error: " << e.what() << '\n';
    return kModel;
  } catch (const ChannelMismatch& e) {
    std::cerr << "model error: " << e.what() << '\n';
    return kModel;
  } catch (const SaturationError& e) {
    std::cerr << "saturation: " << e.what() << '\n';
    return kSaturation;
  } catch (const SurfaceNotFound& e) {
    std::cerr << "simulation fault: " << e.what() << '\n';
    return kSimulation;
  } catch (const DegenerateOrientation& e) {
    std::cerr << "simulation fault: " << e.what() << '\n';
    return kSimulation;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kSimulation;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"coinft - capacitive F/T sensor twin, calibration and contact-flight harness"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "write synthetic calibration trials and a manifest");
  g->add_option("--scenario", gen.scenario_file, "scenario JSON file");
  g->add_option("--preset", gen.preset, "large_range, small_range or zero_range")->capture_default_str();
  g->add_option("--sensor", gen.sensor_file, "sensor parameter JSON file");
  g->add_option("-n,--trials", gen.trials, "number of trials")->capture_default_str();
  g->add_option("--seed", gen.seed, "seed of the first trial")->capture_default_str();
  g->add_option("--duration", gen.duration, "override trial duration [s]");
  g->add_option("-j,--jobs", gen.jobs, "worker threads")->capture_default_str();
  g->add_option("-o,--out", gen.out, "output directory");

  CalibrateArgs cal;
  auto* c = app.add_subcommand("calibrate", "fit calibration matrices from training logs");
  c->add_option("train", cal.train, "training logs")->required();
  c->add_option("--test", cal.test, "held-out logs");
  c->add_option("--mode", cal.mode, "full, shear_only or both")->capture_default_str();
  c->add_option("--ridge", cal.ridge, "ridge on the equilibrated normal matrix (default 1e-9 trace/n)");
  c->add_option("-o,--out", cal.out, "output directory");

  EvaluateArgs ev;
  auto* e = app.add_subcommand("evaluate", "per-axis metrics and predicted time series");
  e->add_option("--model", ev.model, "calibration model JSON")->required();
  e->add_option("logs", ev.logs, "logs to evaluate")->required();
  e->add_option("-o,--out", ev.out, "output directory");

  TempSweepArgs ts;
  auto* t = app.add_subcommand("temp-sweep", "no-load temperature sweep and compensation");
  t->add_option("--sensor", ts.sensor_file, "sensor parameter JSON file");
  t->add_option("--model", ts.model, "calibration model (trained internally if absent)");
  t->add_option("--t-start", ts.t_start, "first setpoint [degC]")->capture_default_str();
  t->add_option("--t-end", ts.t_end, "last setpoint [degC]")->capture_default_str();
  t->add_option("--reference", ts.reference, "reference temperature [degC]")->capture_default_str();
  t->add_option("--steps", ts.steps, "setpoints")->capture_default_str();
  t->add_option("--frames", ts.frames, "frames per setpoint")->capture_default_str();
  t->add_option("--seed", ts.seed, "seed")->capture_default_str();
  t->add_option("-j,--jobs", ts.jobs, "worker threads for internal calibration")->capture_default_str();
  t->add_option("-o,--out", ts.out, "output directory");

  FlyArgs fl;
  auto* f = app.add_subcommand("fly", "closed-loop contact flight");
  f->add_option("scenario", fl.scenario, "track_sine or deploy_package")->capture_default_str();
  f->add_option("--config", fl.config_file, "simulation JSON file");
  f->add_option("--sensor", fl.sensor_file, "sensor parameter JSON file");
  f->add_option("--model", fl.model, "calibration model (trained internally if absent)");
  f->add_flag("--bypass-sensor", fl.bypass, "feed the true contact force back");
  f->add_option("--duration", fl.duration, "override max duration [s]");
  f->add_option("--seed", fl.seed, "override seed");
  f->add_option("-j,--jobs", fl.jobs, "worker threads for internal calibration")->capture_default_str();
  f->add_option("-o,--out", fl.out, "output directory");

  std::string which = "sensor";
  auto* pr = app.add_subcommand("params", "print default configuration");
  pr->add_option("which", which, "sensor, scenario or sim")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int rc = app.exit(err);
    return rc == 0 ? kOk : kUsage;
  }

  if (*g) return guarded([&] { return cmd_generate(gen); });
  if (*c) return guarded([&] { return cmd_calibrate(cal); });
  if (*e) return guarded([&] { return cmd_evaluate(ev); });
  if (*t) return guarded([&] { return cmd_temp_sweep(ts); });
  if (*f) return guarded([&] { return cmd_fly(fl); });
  if (*pr) return guarded([&] { return cmd_params(which); });
  return kUsage;
}
