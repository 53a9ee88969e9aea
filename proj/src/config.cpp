#include "coinft/config.hpp"

#include <fstream>

namespace coinft::config {
namespace {

json sub(const json& j, const char* key) {
  if (!j.contains(key)) return json::object();
  const json& v = j.at(key);
  if (!v.is_object()) {
    throw FormatError(FormatError::Kind::kSchema, 0, std::string("'") + key + "' must be an object");
  }
  return v;
}

template <typename T>
T get(const json& j, const char* key, const T& fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw FormatError(FormatError::Kind::kSchema, 0, std::string("key '") + key + "': " + e.what());
  }
}

void check_schema(const json& j, const char* expected) {
  if (!j.is_object()) throw FormatError(FormatError::Kind::kSchema, 0, "document must be a JSON object");
  if (j.contains("schema") && j.at("schema") != expected) {
    throw FormatError(FormatError::Kind::kSchema, 0,
                      "schema '" + j.at("schema").dump() + "' does not match " + expected);
  }
}

json vec3(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

Vec3 vec3_from(const json& j, const char* key, const Vec3& fallback) {
  const auto a = get<std::array<double, 3>>(j, key, {fallback.x(), fallback.y(), fallback.z()});
  return {a[0], a[1], a[2]};
}

json diag_or_matrix(const Mat3& m) {
  json rows = json::array();
  for (int r = 0; r < 3; ++r) rows.push_back({m(r, 0), m(r, 1), m(r, 2)});
  return rows;
}

// Accepts either a 3-element diagonal or a 3x3 row-major matrix.
Mat3 mat3_from(const json& j, const char* key, const Mat3& fallback) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  try {
    if (v.is_array() && v.size() == 3 && v.at(0).is_number()) {
      const auto d = v.get<std::array<double, 3>>();
      return Vec3(d[0], d[1], d[2]).asDiagonal();
    }
    const auto rows = v.get<std::array<std::array<double, 3>, 3>>();
    Mat3 m;
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) m(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
    }
    return m;
  } catch (const json::exception& e) {
    throw FormatError(FormatError::Kind::kSchema, 0, std::string("gain '") + key + "': " + e.what());
  }
}

}  // namespace

json to_json(const sensor::SensorParams& p) {
  json rings = json::array();
  for (const auto& r : p.pillars.rings) rings.push_back({{"radius_m", r.radius}, {"count", r.count}});
  return {
      {"schema", kSensorSchema},
      {"pillars",
       {{"youngs_modulus_pa", p.pillars.youngs_modulus},
        {"height_m", p.pillars.height},
        {"radius_m", p.pillars.radius},
        {"rings", rings}}},
      {"geometry",
       {{"nominal_gap_m", p.geometry.nominal_gap},
        {"centroid_radius_m", p.geometry.centroid_radius},
        {"normal_electrode_area_m2", p.geometry.normal_electrode_area},
        {"shear_overlap_area_m2", p.geometry.shear_overlap_area},
        {"finger_pitch_m", p.geometry.finger_pitch},
        {"pillar_area_fraction", p.geometry.pillar_area_fraction},
        {"eps_pillar", p.geometry.eps_pillar},
        {"eps_air", p.geometry.eps_air}}},
      {"drift",
       {{"reference_temperature_c", p.drift.reference_temperature},
        {"alpha_per_c", p.drift.alpha},
        {"beta_per_c2", p.drift.beta}}},
      {"cdc",
       {{"counts_per_farad", p.cdc.counts_per_farad},
        {"offset_counts", p.cdc.offset},
        {"noise_sigma_counts", p.cdc.noise_sigma}}},
      {"lag", {{"enabled", p.lag_enabled}, {"corner_hz", p.lag_corner_hz}}},
      {"sample_rate_hz", p.sample_rate_hz},
  };
}

sensor::SensorParams sensor_params_from_json(const json& j) {
  check_schema(j, kSensorSchema);
  sensor::SensorParams p;
  const json pj = sub(j, "pillars");
  if (pj.contains("shore_a")) {
    p.pillars.youngs_modulus = sensor::shore_to_youngs(get<double>(pj, "shore_a", 30.0));
  }
  p.pillars.youngs_modulus = get(pj, "youngs_modulus_pa", p.pillars.youngs_modulus);
  p.pillars.height = get(pj, "height_m", p.pillars.height);
  p.pillars.radius = get(pj, "radius_m", p.pillars.radius);
  if (pj.contains("rings")) {
    p.pillars.rings.clear();
    for (const auto& r : pj.at("rings")) {
      p.pillars.rings.push_back({get<double>(r, "radius_m", 0.0), get<int>(r, "count", 0)});
    }
  }
  const json gj = sub(j, "geometry");
  auto& g = p.geometry;
  g.nominal_gap = get(gj, "nominal_gap_m", g.nominal_gap);
  g.centroid_radius = get(gj, "centroid_radius_m", g.centroid_radius);
  g.normal_electrode_area = get(gj, "normal_electrode_area_m2", g.normal_electrode_area);
  g.shear_overlap_area = get(gj, "shear_overlap_area_m2", g.shear_overlap_area);
  g.finger_pitch = get(gj, "finger_pitch_m", g.finger_pitch);
  g.pillar_area_fraction = get(gj, "pillar_area_fraction", g.pillar_area_fraction);
  g.eps_pillar = get(gj, "eps_pillar", g.eps_pillar);
  g.eps_air = get(gj, "eps_air", g.eps_air);

  const json dj = sub(j, "drift");
  p.drift.reference_temperature = get(dj, "reference_temperature_c", p.drift.reference_temperature);
  p.drift.alpha = get(dj, "alpha_per_c", p.drift.alpha);
  p.drift.beta = get(dj, "beta_per_c2", p.drift.beta);

  const json cj = sub(j, "cdc");
  p.cdc.counts_per_farad = get(cj, "counts_per_farad", p.cdc.counts_per_farad);
  p.cdc.offset = get(cj, "offset_counts", p.cdc.offset);
  p.cdc.noise_sigma = get(cj, "noise_sigma_counts", p.cdc.noise_sigma);

  const json lj = sub(j, "lag");
  p.lag_enabled = get(lj, "enabled", p.lag_enabled);
  p.lag_corner_hz = get(lj, "corner_hz", p.lag_corner_hz);
  p.sample_rate_hz = get(j, "sample_rate_hz", p.sample_rate_hz);
  p.validate();
  return p;
}

json to_json(const dataio::Scenario& s) {
  json ranges = json::object();
  for (std::size_t a = 0; a < 6; ++a) ranges[kAxisNames[a]] = {s.ranges[a].lo, s.ranges[a].hi};
  return {
      {"schema", kScenarioSchema},   {"name", s.name},
      {"ranges", ranges},            {"duration_s", s.duration},
      {"rest_duration_s", s.rest_duration}, {"ramp_duration_s", s.ramp_duration},
      {"min_frequency_hz", s.min_frequency}, {"max_frequency_hz", s.max_frequency},
      {"components", s.components},  {"noise", s.noise},
      {"drift", s.drift},            {"temperature_c", s.temperature},
      {"temperature_rate_c_per_s", s.temperature_rate},
  };
}

dataio::Scenario scenario_from_json(const json& j) {
  check_schema(j, kScenarioSchema);
  dataio::Scenario s;
  const std::string preset = get<std::string>(j, "preset", "large_range");
  if (preset == "large_range") {
    s = dataio::Scenario::large_range();
  } else if (preset == "small_range") {
    s = dataio::Scenario::small_range();
  } else if (preset == "zero_range") {
    s = dataio::Scenario::zero_range();
  } else {
    throw FormatError(FormatError::Kind::kSchema, 0, "unknown scenario preset '" + preset + "'");
  }
  s.name = get(j, "name", s.name);
  const json rj = sub(j, "ranges");
  for (std::size_t a = 0; a < 6; ++a) {
    const auto r = get<std::array<double, 2>>(rj, kAxisNames[a], {s.ranges[a].lo, s.ranges[a].hi});
    s.ranges[a] = {r[0], r[1]};
  }
  s.duration = get(j, "duration_s", s.duration);
  s.rest_duration = get(j, "rest_duration_s", s.rest_duration);
  s.ramp_duration = get(j, "ramp_duration_s", s.ramp_duration);
  s.min_frequency = get(j, "min_frequency_hz", s.min_frequency);
  s.max_frequency = get(j, "max_frequency_hz", s.max_frequency);
  s.components = get(j, "components", s.components);
  s.noise = get(j, "noise", s.noise);
  s.drift = get(j, "drift", s.drift);
  s.temperature = get(j, "temperature_c", s.temperature);
  s.temperature_rate = get(j, "temperature_rate_c_per_s", s.temperature_rate);
  return s;
}

json to_json(const calibration::TempCompensator& c) {
  json channels = json::array();
  for (const auto& ch : c.channels) {
    channels.push_back({{"a0", ch.a0}, {"a1", ch.a1}, {"a2", ch.a2}, {"r2", ch.r2}});
  }
  return {{"reference_temperature_c", c.reference_temperature}, {"channels", channels}};
}

calibration::TempCompensator compensator_from_json(const json& j) {
  calibration::TempCompensator c;
  c.reference_temperature = get(j, "reference_temperature_c", c.reference_temperature);
  if (!j.contains("channels") || j.at("channels").size() != sensor::kChannels) {
    throw FormatError(FormatError::Kind::kSchema, 0, "temperature compensator needs 12 channels");
  }
  for (std::size_t k = 0; k < sensor::kChannels; ++k) {
    const json& ch = j.at("channels").at(k);
    c.channels[k] = {get(ch, "a0", 0.0), get(ch, "a1", 0.0), get(ch, "a2", 0.0), get(ch, "r2", 1.0)};
  }
  return c;
}

json to_json(const calibration::CalibrationModel& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.matrix.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.matrix.cols(); ++c) row.push_back(m.matrix(r, c));
    rows.push_back(row);
  }
  json j = {
      {"schema", kModelSchema},
      {"mode", calibration::to_string(m.mode)},
      {"ridge", m.ridge},
      {"baseline", m.baseline},
      {"matrix", rows},
  };
  j["temperature_compensation"] = m.temperature ? to_json(*m.temperature) : json(nullptr);
  return j;
}

calibration::CalibrationModel model_from_json(const json& j) {
  if (!j.is_object() || !j.contains("schema") || j.at("schema") != kModelSchema) {
    throw FormatError(FormatError::Kind::kSchema, 0,
                      std::string("calibration model must declare schema ") + kModelSchema);
  }
  calibration::CalibrationModel m;
  try {
    m.mode = calibration::feature_mode_from_string(j.at("mode").get<std::string>());
    m.ridge = j.at("ridge").get<double>();
    m.baseline = j.at("baseline").get<calibration::Baseline>();
    const auto rows = j.at("matrix").get<std::vector<std::vector<double>>>();
    const int cols = calibration::feature_count(m.mode);
    if (rows.size() != 6) throw FormatError(FormatError::Kind::kSchema, 0, "matrix must have 6 rows");
    m.matrix.resize(6, cols);
    for (std::size_t r = 0; r < 6; ++r) {
      if (rows[r].size() != static_cast<std::size_t>(cols)) {
        throw FormatError(FormatError::Kind::kSchema, 0,
                          "matrix row " + std::to_string(r) + " must have " + std::to_string(cols) + " entries");
      }
      for (int c = 0; c < cols; ++c) m.matrix(static_cast<Eigen::Index>(r), c) = rows[r][static_cast<std::size_t>(c)];
    }
  } catch (const json::exception& e) {
    throw FormatError(FormatError::Kind::kSchema, 0, std::string("calibration model: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw FormatError(FormatError::Kind::kSchema, 0, e.what());
  }
  if (!m.matrix.allFinite()) throw FormatError(FormatError::Kind::kSchema, 0, "matrix has non-finite entries");
  if (j.contains("temperature_compensation") && !j.at("temperature_compensation").is_null()) {
    m.temperature = compensator_from_json(j.at("temperature_compensation"));
  }
  return m;
}

json to_json(const flight::SimConfig& c) {
  json forces = c.deploy.contact_forces;
  return {
      {"schema", kSimSchema},
      {"note", "default plant, environment and gains are declared values, not from hardware"},
      {"plant",
       {{"mass_kg", c.plant.mass},
        {"thrust_coefficient_per_n", c.plant.thrust_coefficient},
        {"attitude_time_constant_s", c.plant.attitude_time_constant},
        {"max_normalized_thrust", c.plant.max_normalized_thrust},
        {"gravity_m_s2", vec3(c.plant.gravity)}}},
      {"environment",
       {{"surface_height_m", c.env.surface_height},
        {"stiffness_n_per_m", c.env.stiffness},
        {"damping_ns_per_m", c.env.damping},
        {"tip_offset_m", vec3(c.env.tip_offset)},
        {"payload_mass_kg", c.env.payload_mass},
        {"adhesion_threshold_n", c.env.adhesion_threshold}}},
      {"gains",
       {{"kp_out", diag_or_matrix(c.gains.kp_out)},
        {"kv_out", diag_or_matrix(c.gains.kv_out)},
        {"kp_in", diag_or_matrix(c.gains.kp_in)},
        {"kv_in", diag_or_matrix(c.gains.kv_in)}}},
      {"thrust_machine",
       {{"force_increment", c.thrust.force_increment},
        {"kp", c.thrust.kp},
        {"ki", c.thrust.ki},
        {"kd", c.thrust.kd},
        {"hold_duration_s", c.thrust.hold_duration},
        {"touch_threshold_n", c.thrust.touch_threshold},
        {"min_thrust", c.thrust.min_thrust},
        {"max_thrust", c.thrust.max_thrust},
        {"derivative_filter_tau_s", c.thrust.derivative_filter_tau}}},
      {"search",
       {{"x_m", c.search.x},
        {"y_m", c.search.y},
        {"z_lo_m", c.search.z_lo},
        {"z_hi_m", c.search.z_hi},
        {"speed_m_per_s", c.search.search_speed},
        {"yaw_rad", c.search.yaw}}},
      {"sine", {{"mean_n", c.sine.mean}, {"amplitude_n", c.sine.amplitude}, {"frequency_hz", c.sine.frequency}}},
      {"deploy",
       {{"contact_forces_n", forces},
        {"hold_duration_s", c.deploy.hold_duration},
        {"hover_time_s", c.deploy.hover_time},
        {"residual_fraction", c.deploy.residual_fraction}}},
      {"rates", {{"plant_hz", c.plant_rate_hz}, {"control_hz", c.control_rate_hz}, {"sensor_hz", c.sensor_rate_hz}}},
      {"max_duration_s", c.max_duration},
      {"sensor_temperature_c", c.sensor_temperature},
      {"seed", c.seed},
  };
}

flight::SimConfig sim_config_from_json(const json& j) {
  check_schema(j, kSimSchema);
  flight::SimConfig c;
  const json pj = sub(j, "plant");
  c.plant.mass = get(pj, "mass_kg", c.plant.mass);
  c.plant.thrust_coefficient = get(pj, "thrust_coefficient_per_n", c.plant.thrust_coefficient);
  c.plant.attitude_time_constant = get(pj, "attitude_time_constant_s", c.plant.attitude_time_constant);
  c.plant.max_normalized_thrust = get(pj, "max_normalized_thrust", c.plant.max_normalized_thrust);
  c.plant.gravity = vec3_from(pj, "gravity_m_s2", c.plant.gravity);

  const json ej = sub(j, "environment");
  c.env.surface_height = get(ej, "surface_height_m", c.env.surface_height);
  c.env.stiffness = get(ej, "stiffness_n_per_m", c.env.stiffness);
  c.env.damping = get(ej, "damping_ns_per_m", c.env.damping);
  c.env.tip_offset = vec3_from(ej, "tip_offset_m", c.env.tip_offset);
  c.env.payload_mass = get(ej, "payload_mass_kg", c.env.payload_mass);
  c.env.adhesion_threshold = get(ej, "adhesion_threshold_n", c.env.adhesion_threshold);

  const json gj = sub(j, "gains");
  c.gains.kp_out = mat3_from(gj, "kp_out", c.gains.kp_out);
  c.gains.kv_out = mat3_from(gj, "kv_out", c.gains.kv_out);
  c.gains.kp_in = mat3_from(gj, "kp_in", c.gains.kp_in);
  c.gains.kv_in = mat3_from(gj, "kv_in", c.gains.kv_in);

  const json tj = sub(j, "thrust_machine");
  c.thrust.force_increment = get(tj, "force_increment", c.thrust.force_increment);
  c.thrust.kp = get(tj, "kp", c.thrust.kp);
  c.thrust.ki = get(tj, "ki", c.thrust.ki);
  c.thrust.kd = get(tj, "kd", c.thrust.kd);
  c.thrust.hold_duration = get(tj, "hold_duration_s", c.thrust.hold_duration);
  c.thrust.touch_threshold = get(tj, "touch_threshold_n", c.thrust.touch_threshold);
  c.thrust.min_thrust = get(tj, "min_thrust", c.thrust.min_thrust);
  c.thrust.max_thrust = get(tj, "max_thrust", c.thrust.max_thrust);
  c.thrust.derivative_filter_tau = get(tj, "derivative_filter_tau_s", c.thrust.derivative_filter_tau);

  const json sj = sub(j, "search");
  c.search.x = get(sj, "x_m", c.search.x);
  c.search.y = get(sj, "y_m", c.search.y);
  c.search.z_lo = get(sj, "z_lo_m", c.search.z_lo);
  c.search.z_hi = get(sj, "z_hi_m", c.search.z_hi);
  c.search.search_speed = get(sj, "speed_m_per_s", c.search.search_speed);
  c.search.yaw = get(sj, "yaw_rad", c.search.yaw);

  const json sinej = sub(j, "sine");
  c.sine.mean = get(sinej, "mean_n", c.sine.mean);
  c.sine.amplitude = get(sinej, "amplitude_n", c.sine.amplitude);
  c.sine.frequency = get(sinej, "frequency_hz", c.sine.frequency);

  const json dj = sub(j, "deploy");
  c.deploy.contact_forces = get(dj, "contact_forces_n", c.deploy.contact_forces);
  c.deploy.hold_duration = get(dj, "hold_duration_s", c.deploy.hold_duration);
  c.deploy.hover_time = get(dj, "hover_time_s", c.deploy.hover_time);
  c.deploy.residual_fraction = get(dj, "residual_fraction", c.deploy.residual_fraction);

  const json rj = sub(j, "rates");
  c.plant_rate_hz = get(rj, "plant_hz", c.plant_rate_hz);
  c.control_rate_hz = get(rj, "control_hz", c.control_rate_hz);
  c.sensor_rate_hz = get(rj, "sensor_hz", c.sensor_rate_hz);
  c.max_duration = get(j, "max_duration_s", c.max_duration);
  c.sensor_temperature = get(j, "sensor_temperature_c", c.sensor_temperature);
  c.seed = get(j, "seed", c.seed);
  c.validate();
  return c;
}

json load_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError(FormatError::Kind::kIo, 0, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError(FormatError::Kind::kSchema, 0, path.string() + ": " + e.what());
  }
}

void save_json(const json& j, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError(FormatError::Kind::kIo, 0, "cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
  if (!out) throw FormatError(FormatError::Kind::kIo, 0, "write failed for " + path.string());
}

}  // namespace coinft::config
