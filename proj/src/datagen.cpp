#include "cplcalib/datagen.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "cplcalib/text.hpp"

namespace cplcalib {

namespace {

void check_range(const ParamRange& r, const char* name) {
  if (!(r.min <= r.max)) {
    throw Error(std::string("ParamRanges: min > max for ") + name);
  }
}

double sample_range(const ParamRange& r, Rng& rng) {
  if (r.fixed()) return r.min;
  return rng.uniform(r.min, r.max);
}

double sample_guarded_disparity(const ParamRange& r, double guard, Rng& rng) {
  if (r.min > -guard && r.max < guard) {
    throw EmptyRangeAfterGuardError(
        "disparity range lies entirely inside the guard band");
  }
  for (int attempt = 0; attempt < 100000; ++attempt) {
    const double d = sample_range(r, rng);
    if (std::abs(d) >= guard) return d;
  }
  throw EmptyRangeAfterGuardError(
      "disparity resampling failed to clear the guard band");
}

void write_file_atomic(const std::filesystem::path& path,
                       const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + tmp.string());
    out << content;
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("rename failed: " + path.string());
}

}  // namespace

void ParamRanges::validate() const {
  check_range(fx, "fx");
  check_range(fy, "fy");
  check_range(u0, "u0");
  check_range(v0, "v0");
  check_range(b, "b");
  check_range(d, "d");
  check_range(theta_p_deg, "theta_p_deg");
  check_range(tx, "tx");
  check_range(ty, "ty");
  check_range(tz, "tz");
  check_range(yaw_deg, "yaw_deg");
  check_range(roll_deg, "roll_deg");
  if (!(d_min_guard >= 0.0)) throw Error("ParamRanges: negative d_min_guard");
}

ParamRanges cvgl_ranges() {
  ParamRanges r;
  r.fx = {15.005, 120.092};
  r.fy = {15.005, 120.092};
  r.u0 = {56.0, 56.0};
  r.v0 = {56.0, 56.0};
  r.b = {-168.0, 0.0};
  r.d = {-16.0, 14.531};
  r.tx = {-168.0, 0.0};
  r.ty = {-5.0, 5.0};
  r.tz = {-1.6, 0.4};
  r.theta_p_deg = {-45.0, 15.0};
  r.tie_fy_to_fx = true;  // the published fx and fy columns are identical
  return r;
}

ParamRanges cityscapes_ranges() {
  ParamRanges r;
  r.fx = {2262.52, 2268.36};
  r.fy = {2225.540, 2265.301};
  r.u0 = {1045.53, 1096.98};
  r.v0 = {513.137, 519.277};
  r.b = {0.209, 0.222};
  r.d = {-4.675, 57.339};
  r.tx = {1.7, 1.7};
  r.ty = {-0.1, 0.1};
  r.tz = {1.18, 1.3};
  r.theta_p_deg = {0.038, 0.05};
  return r;
}

ParamRanges tsinghua_ranges() {
  ParamRanges r;
  r.fx = {2282.864, 2282.864};
  r.fy = {2281.794, 2281.794};
  r.u0 = {1042.041, 1042.041};
  r.v0 = {529.888, 529.888};
  r.b = {0.208, 0.208};
  r.d = {-6.753, 83.093};
  r.tx = {2.0, 2.0};
  r.ty = {0.125, 0.125};
  r.tz = {1.23, 1.23};
  r.theta_p_deg = {0.022, 0.022};
  return r;
}

std::optional<ParamRanges> preset_by_name(std::string_view name) {
  if (name == "cvgl") return cvgl_ranges();
  if (name == "cityscapes") return cityscapes_ranges();
  if (name == "tsinghua") return tsinghua_ranges();
  return std::nullopt;
}

ParamRanges load_ranges(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open ranges file: " + path.string());
  ParamRanges r;
  struct Entry {
    std::string_view key;
    double* slot;
  };
  const Entry entries[] = {
      {"fx_min", &r.fx.min},         {"fx_max", &r.fx.max},
      {"fy_min", &r.fy.min},         {"fy_max", &r.fy.max},
      {"u0_min", &r.u0.min},         {"u0_max", &r.u0.max},
      {"v0_min", &r.v0.min},         {"v0_max", &r.v0.max},
      {"b_min", &r.b.min},           {"b_max", &r.b.max},
      {"d_min", &r.d.min},           {"d_max", &r.d.max},
      {"theta_p_deg_min", &r.theta_p_deg.min},
      {"theta_p_deg_max", &r.theta_p_deg.max},
      {"tx_min", &r.tx.min},         {"tx_max", &r.tx.max},
      {"ty_min", &r.ty.min},         {"ty_max", &r.ty.max},
      {"tz_min", &r.tz.min},         {"tz_max", &r.tz.max},
      {"yaw_deg_min", &r.yaw_deg.min},   {"yaw_deg_max", &r.yaw_deg.max},
      {"roll_deg_min", &r.roll_deg.min}, {"roll_deg_max", &r.roll_deg.max},
      {"d_min_guard", &r.d_min_guard},
  };
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw IoError("ranges file: expected key=value, got '" + line + "'");
    }
    const std::string_view key = std::string_view(line).substr(0, eq);
    const std::string_view value = std::string_view(line).substr(eq + 1);
    if (key == "tie_fy_to_fx") {
      r.tie_fy_to_fx = parse_double(value) != 0.0;
      continue;
    }
    bool matched = false;
    for (const Entry& e : entries) {
      if (e.key == key) {
        *e.slot = parse_double(value);
        matched = true;
        break;
      }
    }
    if (!matched) throw IoError("ranges file: unknown key '" + std::string(key) + "'");
  }
  r.validate();
  return r;
}

CameraParams RawConfig::camera_params() const {
  CameraParams p;
  p.intrinsics = {fx, fy, u0, v0};
  p.extrinsics = {b, deg_to_rad(theta_p_deg), tx, ty, tz};
  p.d = d;
  return p;
}

RawConfig sample_raw_config(const ParamRanges& ranges, Rng& rng) {
  ranges.validate();
  RawConfig c;
  c.fx = sample_range(ranges.fx, rng);
  c.fy = ranges.tie_fy_to_fx ? c.fx : sample_range(ranges.fy, rng);
  c.u0 = sample_range(ranges.u0, rng);
  c.v0 = sample_range(ranges.v0, rng);
  c.b = sample_range(ranges.b, rng);
  c.d = sample_guarded_disparity(ranges.d, ranges.d_min_guard, rng);
  c.theta_p_deg = sample_range(ranges.theta_p_deg, rng);
  c.tx = sample_range(ranges.tx, rng);
  c.ty = sample_range(ranges.ty, rng);
  c.tz = sample_range(ranges.tz, rng);
  c.yaw_deg = sample_range(ranges.yaw_deg, rng);
  c.roll_deg = sample_range(ranges.roll_deg, rng);
  return c;
}

CameraParams sample_config(const ParamRanges& ranges, std::uint64_t seed) {
  Rng rng(seed);
  return sample_raw_config(ranges, rng).camera_params();
}

CameraParams SyntheticRecord::camera_params() const {
  CameraParams p;
  p.intrinsics = {fx, fy, u0, v0};
  p.extrinsics = {b, deg_to_rad(theta_p_deg), tx, ty, tz};
  p.d = d;
  return p;
}

ParamVector13 SyntheticRecord::param_vector() const {
  WorldPoint centroid;
  for (const WorldPoint& w : world_points) {
    centroid.X += w.X;
    centroid.Y += w.Y;
    centroid.Z += w.Z;
  }
  const double n = static_cast<double>(world_points.size());
  if (n > 0) {
    centroid.X /= n;
    centroid.Y /= n;
    centroid.Z /= n;
  }
  return ParamVector13::from_parts(camera_params(), centroid);
}

CorrespondenceSet SyntheticRecord::correspondences(bool with_disparity) const {
  CorrespondenceSet set;
  set.observations.reserve(observations.size());
  for (const Observation& o : observations) {
    PixelObservation px{o.u, o.v, std::nullopt};
    if (with_disparity) px.disparity = o.disparity;
    set.observations.push_back(px);
  }
  return set;
}

bool SyntheticRecord::operator==(const SyntheticRecord& other) const {
  // noise_sigma is generation metadata and deliberately excluded: equality
  // covers exactly what the dataset file stores.
  return config_id == other.config_id && fx == other.fx && fy == other.fy &&
         u0 == other.u0 && v0 == other.v0 && b == other.b && d == other.d &&
         theta_p_deg == other.theta_p_deg && tx == other.tx &&
         ty == other.ty && tz == other.tz &&
         observations == other.observations &&
         world_points == other.world_points;
}

std::vector<SyntheticRecord> generate_records(const ParamRanges& ranges,
                                              int n_configs,
                                              int pts_per_config,
                                              double noise_sigma,
                                              std::uint64_t seed) {
  if (n_configs < 1) throw Error("generate_records: n_configs must be >= 1");
  if (pts_per_config < 1) {
    throw Error("generate_records: pts_per_config must be >= 1");
  }
  if (!(noise_sigma >= 0.0)) {
    throw Error("generate_records: noise_sigma must be >= 0");
  }
  ranges.validate();

  std::vector<SyntheticRecord> records;
  records.reserve(static_cast<std::size_t>(n_configs));
  for (int i = 0; i < n_configs; ++i) {
    Rng rng(seed, static_cast<std::uint64_t>(i));
    const RawConfig cfg = sample_raw_config(ranges, rng);

    SyntheticRecord rec;
    rec.config_id = i;
    rec.fx = cfg.fx;
    rec.fy = cfg.fy;
    rec.u0 = cfg.u0;
    rec.v0 = cfg.v0;
    rec.b = cfg.b;
    rec.d = cfg.d;
    rec.theta_p_deg = cfg.theta_p_deg;
    rec.tx = cfg.tx;
    rec.ty = cfg.ty;
    rec.tz = cfg.tz;
    rec.noise_sigma = noise_sigma;

    rec.observations.reserve(static_cast<std::size_t>(pts_per_config));
    for (int j = 0; j < pts_per_config; ++j) {
      Observation o;
      o.u = rng.uniform(0.0, 2.0 * cfg.u0);
      o.v = rng.uniform(0.0, 2.0 * cfg.v0);
      o.disparity =
          sample_guarded_disparity(ranges.d, ranges.d_min_guard, rng);
      rec.observations.push_back(o);
    }

    const CameraParams params = rec.camera_params();
    rec.world_points.reserve(rec.observations.size());
    for (const Observation& o : rec.observations) {
      rec.world_points.push_back(
          project_to_world({o.u, o.v, o.disparity}, params));
    }

    if (noise_sigma > 0.0) {
      for (Observation& o : rec.observations) {
        o.u += noise_sigma * rng.gaussian();
        o.v += noise_sigma * rng.gaussian();
      }
    }
    records.push_back(std::move(rec));
  }
  return records;
}

std::string dataset_header(int pts_per_config) {
  std::ostringstream out;
  out << "config_id,fx,fy,u0,v0,b,d,theta_p_deg,tx,ty,tz";
  for (int j = 0; j < pts_per_config; ++j) {
    out << ",obs" << j << "_u,obs" << j << "_v,obs" << j << "_disp";
  }
  for (int j = 0; j < pts_per_config; ++j) {
    out << ",pt" << j << "_X,pt" << j << "_Y,pt" << j << "_Z";
  }
  return out.str();
}

std::string serialize_records(const std::vector<SyntheticRecord>& records) {
  if (records.empty()) throw Error("serialize_records: no records");
  const std::size_t pts = records.front().observations.size();
  for (const SyntheticRecord& r : records) {
    if (r.observations.size() != pts || r.world_points.size() != pts) {
      throw ShapeMismatchError(
          "serialize_records: records must share one point count");
    }
  }
  std::ostringstream out;
  out << dataset_header(static_cast<int>(pts)) << '\n';
  for (const SyntheticRecord& r : records) {
    out << r.config_id;
    for (double v : {r.fx, r.fy, r.u0, r.v0, r.b, r.d, r.theta_p_deg, r.tx,
                     r.ty, r.tz}) {
      out << ',' << format_g17(v);
    }
    for (const Observation& o : r.observations) {
      out << ',' << format_g17(o.u) << ',' << format_g17(o.v) << ','
          << format_g17(o.disparity);
    }
    for (const WorldPoint& w : r.world_points) {
      out << ',' << format_g17(w.X) << ',' << format_g17(w.Y) << ','
          << format_g17(w.Z);
    }
    out << '\n';
  }
  return out.str();
}

std::vector<SyntheticRecord> parse_records(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw IoError("dataset: empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  const auto header_cols = split(line, ',');
  // Columns: 1 id + 10 parameters + 6 per point.
  if (header_cols.size() < 17 || (header_cols.size() - 11) % 6 != 0) {
    throw IoError("dataset: malformed header");
  }
  const int pts = static_cast<int>((header_cols.size() - 11) / 6);
  if (line != dataset_header(pts)) {
    throw IoError("dataset: header does not match the expected format");
  }

  std::vector<SyntheticRecord> records;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cols = split(line, ',');
    if (cols.size() != header_cols.size()) {
      throw IoError("dataset: wrong column count on line " +
                    std::to_string(line_no));
    }
    SyntheticRecord r;
    std::size_t c = 0;
    r.config_id = static_cast<int>(parse_double(cols[c++]));
    for (double* slot : {&r.fx, &r.fy, &r.u0, &r.v0, &r.b, &r.d,
                         &r.theta_p_deg, &r.tx, &r.ty, &r.tz}) {
      *slot = parse_double(cols[c++]);
    }
    r.observations.resize(static_cast<std::size_t>(pts));
    for (Observation& o : r.observations) {
      o.u = parse_double(cols[c++]);
      o.v = parse_double(cols[c++]);
      o.disparity = parse_double(cols[c++]);
    }
    r.world_points.resize(static_cast<std::size_t>(pts));
    for (WorldPoint& w : r.world_points) {
      w.X = parse_double(cols[c++]);
      w.Y = parse_double(cols[c++]);
      w.Z = parse_double(cols[c++]);
    }
    records.push_back(std::move(r));
  }
  if (records.empty()) throw IoError("dataset: no records");
  return records;
}

void save_records(const std::filesystem::path& path,
                  const std::vector<SyntheticRecord>& records) {
  write_file_atomic(path, serialize_records(records));
}

std::vector<SyntheticRecord> load_records(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open dataset: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_records(buf.str());
}

}  // namespace cplcalib
