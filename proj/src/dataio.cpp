#include "coinft/dataio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <thread>

#include "coinft/config.hpp"

namespace coinft::dataio {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Distinct stream per (seed, purpose) so the trajectory and the sensor
// noise never share draws.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

SensorParams effective_params(const Scenario& s, const SensorParams& params) {
  SensorParams p = params;
  if (!s.noise) p.cdc.noise_sigma = 0.0;
  if (!s.drift) p.drift = sensor::DriftModel::none(params.drift.reference_temperature);
  return p;
}

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

template <typename T>
T parse_number(std::string_view text, std::size_t line, const char* column) {
  T value{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || text.empty()) {
    throw FormatError(FormatError::Kind::kNumber, line,
                      std::string("cannot parse ") + column + " value '" + std::string(text) + "'");
  }
  return value;
}

}  // namespace

std::vector<CapacitanceFrame> Trial::frames() const {
  std::vector<CapacitanceFrame> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(s.frame);
  return out;
}

std::vector<Wrench> Trial::wrenches() const {
  std::vector<Wrench> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(s.wrench);
  return out;
}

std::vector<CapacitanceFrame> Trial::no_load_frames() const {
  std::vector<CapacitanceFrame> out;
  for (const auto& s : samples) {
    if (s.wrench == Wrench{}) out.push_back(s.frame);
  }
  return out;
}

void Trial::validate() const {
  for (std::size_t i = 1; i < samples.size(); ++i) {
    if (!(samples[i].frame.timestamp > samples[i - 1].frame.timestamp)) {
      throw FormatError(FormatError::Kind::kTimestamp, 0,
                        "timestamps not strictly increasing at sample " + std::to_string(i));
    }
  }
}

Scenario Scenario::large_range() {
  Scenario s;
  s.name = "large_range";
  s.ranges = {AxisRange{-5.0, 5.0}, AxisRange{-5.0, 5.0}, AxisRange{0.0, 14.0},
              AxisRange{-25.0, 25.0}, AxisRange{-25.0, 25.0}, AxisRange{-15.0, 15.0}};
  return s;
}

Scenario Scenario::small_range() {
  Scenario s;
  s.name = "small_range";
  s.ranges = {AxisRange{-2.0, 2.0}, AxisRange{-2.0, 2.0}, AxisRange{0.0, 5.0},
              AxisRange{-10.0, 10.0}, AxisRange{-10.0, 10.0}, AxisRange{-6.0, 6.0}};
  return s;
}

Scenario Scenario::zero_range() {
  Scenario s;
  s.name = "zero_range";
  return s;
}

void Scenario::validate(const SensorParams& params) const {
  if (!(duration >= 0.0) || !(rest_duration >= 0.0) || !(ramp_duration >= 0.0)) {
    throw InvalidArgument("scenario durations must be non-negative");
  }
  if (!(min_frequency > 0.0 && max_frequency >= min_frequency)) {
    throw InvalidArgument("scenario needs 0 < min_frequency <= max_frequency");
  }
  if (components < 1) throw InvalidArgument("scenario needs at least one sinusoid per axis");
  if (!std::isfinite(temperature) || !std::isfinite(temperature_rate)) {
    throw InvalidArgument("scenario temperature must be finite");
  }
  for (std::size_t a = 0; a < ranges.size(); ++a) {
    const auto& r = ranges[a];
    if (!(r.lo <= 0.0 && r.hi >= 0.0)) {
      throw InvalidArgument(std::string("range of ") + kAxisNames[a] + " must contain zero");
    }
  }
  // Every corner of the load box must stay inside the mechanical range.
  for (int mask = 0; mask < 64; ++mask) {
    std::array<double, 6> w{};
    for (std::size_t a = 0; a < 6; ++a) w[a] = (mask >> a) & 1 ? ranges[a].hi : ranges[a].lo;
    try {
      sensor::capacitances(Wrench::from_array(w), params);
    } catch (const SaturationError& e) {
      throw InvalidArgument("scenario '" + name + "' exceeds the sensor range: " + e.what());
    }
  }
}

std::vector<Wrench> wrench_trajectory(const Scenario& s, double rate_hz, std::uint64_t seed) {
  const auto n = static_cast<std::size_t>(std::llround(s.duration * rate_hz));
  std::vector<Wrench> out(n);
  std::mt19937_64 rng(mix_seed(seed, 1));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double active_from = s.rest_duration + s.ramp_duration;

  for (std::size_t axis = 0; axis < 6; ++axis) {
    std::vector<double> freq(static_cast<std::size_t>(s.components));
    std::vector<double> phase(freq.size());
    std::vector<double> amp(freq.size());
    for (std::size_t j = 0; j < freq.size(); ++j) {
      freq[j] = s.min_frequency + (s.max_frequency - s.min_frequency) * unit(rng);
      phase[j] = kTwoPi * unit(rng);
      amp[j] = 1.0 / std::sqrt(freq[j]);  // more weight on slow content
    }
    std::vector<double> u(n);
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) / rate_hz;
      double v = 0.0;
      for (std::size_t j = 0; j < freq.size(); ++j) v += amp[j] * std::sin(kTwoPi * freq[j] * t + phase[j]);
      u[i] = v;
      if (t >= active_from) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
    const AxisRange range = s.ranges[axis];
    for (std::size_t i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) / rate_hz;
      double window = 1.0;
      if (t < s.rest_duration) {
        window = 0.0;
      } else if (t < active_from) {
        window = 0.5 - 0.5 * std::cos(std::numbers::pi * (t - s.rest_duration) / s.ramp_duration);
      }
      double value = 0.0;
      if (window > 0.0 && hi > lo && range.hi > range.lo) {
        const double mapped = range.lo + (range.hi - range.lo) * (u[i] - lo) / (hi - lo);
        value = window * std::clamp(mapped, range.lo, range.hi);
      }
      auto a = out[i].to_array();
      a[axis] = value;
      out[i] = Wrench::from_array(a);
    }
  }
  return out;
}

Trial generate_trial(const Scenario& scenario, const SensorParams& params, std::uint64_t seed) {
  params.validate();
  scenario.validate(params);
  const SensorParams p = effective_params(scenario, params);
  const double rate = p.sample_rate_hz;

  Trial trial;
  trial.meta = {scenario.name, seed, params_hash(params)};
  const std::vector<Wrench> wrenches = wrench_trajectory(scenario, rate, seed);
  trial.samples.reserve(wrenches.size());

  std::mt19937_64 rng(mix_seed(seed, 2));
  std::optional<sensor::CapacitanceLag> lag;
  if (p.lag_enabled) lag.emplace(p.lag_corner_hz, rate);
  for (std::size_t i = 0; i < wrenches.size(); ++i) {
    const double t = static_cast<double>(i) / rate;
    const double temperature = scenario.temperature + scenario.temperature_rate * t;
    sensor::Capacitances c = sensor::capacitances(wrenches[i], p);
    if (lag) c = lag->filter(c);
    trial.samples.push_back({sensor::digitize(c, temperature, p, rng, t), wrenches[i]});
  }
  return trial;
}

std::vector<Trial> generate_trials(const Scenario& scenario, const SensorParams& params,
                                   int count, std::uint64_t base_seed, int jobs) {
  if (count < 1) throw InvalidArgument("trial count must be at least 1");
  scenario.validate(params);
  std::vector<Trial> trials(static_cast<std::size_t>(count));
  const int workers = std::clamp(jobs, 1, count);
  if (workers == 1) {
    for (int i = 0; i < count; ++i) {
      trials[static_cast<std::size_t>(i)] = generate_trial(scenario, params, base_seed + static_cast<std::uint64_t>(i));
    }
    return trials;
  }
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (int i = w; i < count; i += workers) {
          trials[static_cast<std::size_t>(i)] =
              generate_trial(scenario, params, base_seed + static_cast<std::uint64_t>(i));
        }
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return trials;
}

std::vector<CapacitanceFrame> generate_no_load(const SensorParams& params, int count,
                                               double temperature, std::uint64_t seed) {
  if (count < 1) throw InvalidArgument("no-load frame count must be at least 1");
  const sensor::Capacitances c = sensor::capacitances(Wrench{}, params);
  std::mt19937_64 rng(mix_seed(seed, 3));
  std::vector<CapacitanceFrame> frames;
  frames.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    frames.push_back(sensor::digitize(c, temperature, params, rng, i / params.sample_rate_hz));
  }
  return frames;
}

std::vector<CapacitanceFrame> generate_temperature_sweep(const SensorParams& params,
                                                         double t_start, double t_end,
                                                         int steps, int frames_per_step,
                                                         std::uint64_t seed) {
  if (steps < 2 || frames_per_step < 1) {
    throw InvalidArgument("temperature sweep needs >= 2 steps and >= 1 frame per step");
  }
  const sensor::Capacitances c = sensor::capacitances(Wrench{}, params);
  std::mt19937_64 rng(mix_seed(seed, 4));
  std::vector<CapacitanceFrame> frames;
  frames.reserve(static_cast<std::size_t>(steps) * static_cast<std::size_t>(frames_per_step));
  std::size_t index = 0;
  for (int s = 0; s < steps; ++s) {
    const double temperature = t_start + (t_end - t_start) * s / (steps - 1);
    for (int i = 0; i < frames_per_step; ++i, ++index) {
      frames.push_back(sensor::digitize(c, temperature, params, rng,
                                        static_cast<double>(index) / params.sample_rate_hz));
    }
  }
  return frames;
}

std::string params_hash(const SensorParams& params) {
  const std::string text = config::to_json(params).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << h;
  return os.str();
}

std::string format_double(double v) {
  std::array<char, 32> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc()) throw InvalidArgument("cannot format value");
  return std::string(buf.data(), ptr);
}

void write_log(const Trial& trial, std::ostream& out) {
  out << "# scenario=" << trial.meta.scenario << '\n';
  out << "# seed=" << trial.meta.seed << '\n';
  out << "# params_hash=" << trial.meta.params_hash << '\n';
  out << kLogHeader << '\n';
  for (const auto& s : trial.samples) {
    out << format_double(s.frame.timestamp) << ',' << format_double(s.frame.temperature);
    for (auto c : s.frame.counts) out << ',' << c;
    for (double v : s.wrench.to_array()) out << ',' << format_double(v);
    out << '\n';
  }
}

void write_log(const Trial& trial, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError(FormatError::Kind::kIo, 0, "cannot open " + path.string() + " for writing");
  write_log(trial, out);
  if (!out) throw FormatError(FormatError::Kind::kIo, 0, "write failed for " + path.string());
}

Trial read_log(std::istream& in) {
  Trial trial;
  std::string raw;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line(raw);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!header_seen) {
      if (line.empty()) continue;
      if (line.front() == '#') {
        const auto body = line.substr(1);
        const auto eq = body.find('=');
        if (eq == std::string_view::npos) continue;
        auto key = body.substr(0, eq);
        while (!key.empty() && key.front() == ' ') key.remove_prefix(1);
        const std::string value(body.substr(eq + 1));
        if (key == "scenario") {
          trial.meta.scenario = value;
        } else if (key == "seed") {
          trial.meta.seed = parse_number<std::uint64_t>(value, line_no, "seed");
        } else if (key == "params_hash") {
          trial.meta.params_hash = value;
        }
        continue;
      }
      if (line != kLogHeader) {
        throw FormatError(FormatError::Kind::kHeader, line_no,
                          "unexpected header; expected '" + std::string(kLogHeader) + "'");
      }
      header_seen = true;
      continue;
    }
    if (line.empty()) continue;
    const auto cols = split_csv(line);
    if (cols.size() != kLogColumns) {
      throw FormatError(FormatError::Kind::kColumnCount, line_no,
                        "expected " + std::to_string(kLogColumns) + " columns, found " +
                            std::to_string(cols.size()));
    }
    Sample s;
    s.frame.timestamp = parse_number<double>(cols[0], line_no, "t");
    s.frame.temperature = parse_number<double>(cols[1], line_no, "T");
    for (std::size_t k = 0; k < sensor::kChannels; ++k) {
      s.frame.counts[k] = parse_number<std::int64_t>(cols[2 + k], line_no, sensor::kChannelNames[k]);
      if (s.frame.counts[k] < 0) {
        throw FormatError(FormatError::Kind::kNumber, line_no, "negative count");
      }
    }
    std::array<double, 6> w{};
    for (std::size_t a = 0; a < 6; ++a) w[a] = parse_number<double>(cols[14 + a], line_no, kAxisNames[a]);
    s.wrench = Wrench::from_array(w);
    if (!trial.samples.empty() && !(s.frame.timestamp > trial.samples.back().frame.timestamp)) {
      throw FormatError(FormatError::Kind::kTimestamp, line_no, "timestamp is not strictly increasing");
    }
    trial.samples.push_back(s);
  }
  if (!header_seen) throw FormatError(FormatError::Kind::kHeader, line_no + 1, "missing header row");
  return trial;
}

Trial load_log(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(FormatError::Kind::kIo, 0, "cannot open " + path.string());
  return read_log(in);
}

std::pair<std::vector<Trial>, std::vector<Trial>> split(std::vector<Trial> trials) {
  if (trials.size() < 2) throw InvalidArgument("split needs at least 2 trials");
  std::vector<Trial> test;
  test.push_back(std::move(trials.back()));
  trials.pop_back();
  return {std::move(trials), std::move(test)};
}

}  // namespace coinft::dataio
