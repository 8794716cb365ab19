#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mhplan/bench.hpp"
#include "mhplan/environment.hpp"
#include "mhplan/expert.hpp"
#include "mhplan/geometry.hpp"
#include "mhplan/multimodal.hpp"
#include "mhplan/trajectory.hpp"

namespace mhplan::io {

using nlohmann::json;
namespace fs = std::filesystem;

/// A file could not be opened or does not exist.
class FileError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Shortest representation that parses back to the same double.
inline std::string format_double(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

inline double parse_double(std::string_view s, const std::string &where) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc{} || r.ptr != s.data() + s.size() || s.empty())
    throw InputError(where + ": cannot parse number '" + std::string(s) + "'");
  return v;
}

inline std::string read_text(const fs::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text(const fs::path &path, const std::string &text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FileError("cannot write '" + path.string() + "'");
  out << text;
}

inline json read_json(const fs::path &path) {
  const std::string text = read_text(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error &e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

inline json to_json(const Vec3 &v) { return json::array({v.x(), v.y(), v.z()}); }

inline Vec3 vec3_from_json(const json &j, const std::string &what) {
  if (!j.is_array() || j.size() != 3) throw InputError(what + " must be an array of three numbers");
  Vec3 v;
  for (int k = 0; k < 3; ++k) {
    if (!j[static_cast<std::size_t>(k)].is_number()) throw InputError(what + " must be an array of three numbers");
    v[k] = j[static_cast<std::size_t>(k)].get<double>();
  }
  if (!v.allFinite()) throw InputError(what + " is not finite");
  return v;
}

// ---------------------------------------------------------------------------
// Point clouds

inline std::string cloud_to_xyz(const PointCloud &cloud) {
  std::string out;
  for (const auto &p : cloud.points()) {
    out += format_double(p.x());
    out += ' ';
    out += format_double(p.y());
    out += ' ';
    out += format_double(p.z());
    out += '\n';
  }
  return out;
}

/// One "x y z" triple per line; '#' starts a comment.
inline PointCloud cloud_from_xyz(std::string_view text, const std::string &name = "xyz") {
  std::vector<Point3> pts;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto eol = text.find('\n');
    std::string_view line = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    std::vector<std::string_view> fields;
    std::size_t i = 0;
    while (i < line.size()) {
      while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == ',' || line[i] == '\r')) ++i;
      const std::size_t j = i;
      while (i < line.size() && !(line[i] == ' ' || line[i] == '\t' || line[i] == ',' || line[i] == '\r')) ++i;
      if (i > j) fields.push_back(line.substr(j, i - j));
    }
    if (fields.empty()) continue;
    const std::string where = name + ":" + std::to_string(line_no);
    if (fields.size() != 3) throw InputError(where + ": expected three coordinates");
    pts.emplace_back(parse_double(fields[0], where), parse_double(fields[1], where), parse_double(fields[2], where));
  }
  return PointCloud(std::move(pts));
}

inline json cloud_to_json(const PointCloud &cloud) {
  json arr = json::array();
  for (const auto &p : cloud.points()) arr.push_back(to_json(p));
  return arr;
}

inline PointCloud cloud_from_json(const json &j) {
  if (!j.is_array()) throw InputError("point cloud JSON must be an array of [x, y, z]");
  std::vector<Point3> pts;
  pts.reserve(j.size());
  for (const auto &e : j) pts.push_back(vec3_from_json(e, "cloud point"));
  return PointCloud(std::move(pts));
}

/// Loads ".json" as a JSON array, anything else as XYZ text.
inline PointCloud load_cloud(const fs::path &path) {
  if (path.extension() == ".json") return cloud_from_json(read_json(path));
  return cloud_from_xyz(read_text(path), path.filename().string());
}

inline void save_cloud(const fs::path &path, const PointCloud &cloud) {
  write_text(path, path.extension() == ".json" ? cloud_to_json(cloud).dump() + "\n" : cloud_to_xyz(cloud));
}

// ---------------------------------------------------------------------------
// Trajectories

inline std::string trajectory_to_csv(const DiscreteTrajectory &traj) {
  const bool full = traj.has_derivatives();
  std::string out = full ? "t,x,y,z,vx,vy,vz,ax,ay,az\n" : "t,x,y,z\n";
  for (const auto &s : traj.samples()) {
    out += format_double(s.t);
    auto put = [&](const Vec3 &v) {
      for (int k = 0; k < 3; ++k) {
        out += ',';
        out += format_double(v[k]);
      }
    };
    put(s.position);
    if (full) {
      put(*s.velocity);
      put(*s.acceleration);
    }
    out += '\n';
  }
  return out;
}

inline DiscreteTrajectory trajectory_from_csv(std::string_view text, const std::string &name = "csv") {
  std::vector<TrajectorySample> samples;
  std::size_t line_no = 0;
  std::size_t columns = 0;
  while (!text.empty()) {
    const auto eol = text.find('\n');
    std::string_view line = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    for (;;) {
      const auto comma = line.find(',', start);
      fields.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    const std::string where = name + ":" + std::to_string(line_no);
    if (columns == 0) {
      if (fields.size() != 4 && fields.size() != 10) throw InputError(where + ": header must have 4 or 10 columns");
      const char *names[] = {"t", "x", "y", "z", "vx", "vy", "vz", "ax", "ay", "az"};
      for (std::size_t i = 0; i < fields.size(); ++i) {
        std::string_view f = fields[i];
        while (!f.empty() && f.front() == ' ') f.remove_prefix(1);
        while (!f.empty() && f.back() == ' ') f.remove_suffix(1);
        if (f != names[i]) throw InputError(where + ": unexpected header column '" + std::string(fields[i]) + "'");
      }
      columns = fields.size();
      continue;
    }
    if (fields.size() != columns) throw InputError(where + ": expected " + std::to_string(columns) + " columns");
    std::vector<double> v;
    for (const auto f : fields) v.push_back(parse_double(f, where));
    TrajectorySample s{v[0], Point3(v[1], v[2], v[3]), std::nullopt, std::nullopt};
    if (columns == 10) {
      s.velocity = Vec3(v[4], v[5], v[6]);
      s.acceleration = Vec3(v[7], v[8], v[9]);
    }
    samples.push_back(s);
  }
  if (columns == 0) throw InputError(name + ": missing header");
  return DiscreteTrajectory(std::move(samples));
}

inline json quintic_to_json(const QuinticTrajectory &q) {
  json axes = json::array();
  for (int a = 0; a < 3; ++a) {
    json row = json::array();
    for (int c = 0; c < 6; ++c) row.push_back(q.coeffs(a, c));
    axes.push_back(row);
  }
  return {{"beta", q.beta}, {"axes", axes}};
}

inline QuinticTrajectory quintic_from_json(const json &j) {
  QuinticTrajectory q;
  if (!j.contains("beta") || !j.contains("axes") || !j["axes"].is_array() || j["axes"].size() != 3)
    throw InputError("quintic JSON needs \"beta\" and three \"axes\"");
  q.beta = j["beta"].get<double>();
  for (std::size_t a = 0; a < 3; ++a) {
    const auto &row = j["axes"][a];
    if (!row.is_array() || row.size() != 6) throw InputError("each quintic axis needs six coefficients");
    for (std::size_t c = 0; c < 6; ++c) q.coeffs(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(c)) = row[c].get<double>();
  }
  return q;
}

// ---------------------------------------------------------------------------
// Scenarios

inline json state_to_json(const KinematicState &s) {
  return {{"position", to_json(s.position)}, {"velocity", to_json(s.velocity)}, {"acceleration", to_json(s.acceleration)}};
}

inline KinematicState state_from_json(const json &j) {
  if (!j.is_object() || !j.contains("position")) throw InputError("state needs a \"position\"");
  KinematicState s;
  s.position = vec3_from_json(j["position"], "start.position");
  if (j.contains("velocity")) s.velocity = vec3_from_json(j["velocity"], "start.velocity");
  if (j.contains("acceleration")) s.acceleration = vec3_from_json(j["acceleration"], "start.acceleration");
  return s;
}

/// Writes dir/scenario.json plus the cloud and reference it points to (paths relative to dir).
inline fs::path save_scenario(const fs::path &dir, const Scenario &sc, const json &extra = json::object()) {
  fs::create_directories(dir);
  save_cloud(dir / "cloud.xyz", sc.cloud);
  write_text(dir / "reference.csv", trajectory_to_csv(sc.reference));
  json j = {{"cloud", "cloud.xyz"},
            {"reference", "reference.csv"},
            {"goal", to_json(sc.goal)},
            {"goal_radius", sc.goal_radius},
            {"start", state_to_json(sc.start)}};
  if (!extra.empty()) j["generator"] = extra;
  write_text(dir / "scenario.json", j.dump(2) + "\n");
  return dir / "scenario.json";
}

inline Scenario load_scenario(const fs::path &path) {
  const json j = read_json(path);
  for (const char *key : {"cloud", "reference", "goal", "start"})
    if (!j.contains(key)) throw InputError(path.string() + ": missing \"" + key + "\"");
  const fs::path base = path.parent_path();
  auto resolve = [&](const std::string &p) { return fs::path(p).is_absolute() ? fs::path(p) : base / p; };
  Scenario sc;
  sc.cloud = load_cloud(resolve(j["cloud"].get<std::string>()));
  const fs::path ref = resolve(j["reference"].get<std::string>());
  sc.reference = trajectory_from_csv(read_text(ref), ref.filename().string());
  if (sc.reference.empty()) throw InputError(path.string() + ": reference is empty");
  sc.goal = vec3_from_json(j["goal"], "goal");
  sc.goal_radius = j.value("goal_radius", 5.0);
  if (!(sc.goal_radius > 0.0)) throw InputError(path.string() + ": goal_radius must be positive");
  sc.start = state_from_json(j["start"]);
  return sc;
}

// ---------------------------------------------------------------------------
// Labels, fits, reports

inline json label_to_json(const MhResult &r, const Point3 &origin) {
  json trajs = json::array(), costs = json::array(), collision = json::array();
  for (const auto &e : r.label.entries) {
    trajs.push_back(trajectory_to_csv(e.trajectory));
    costs.push_back(e.cost);
    collision.push_back(e.collision_cost);
  }
  return {{"status", r.status == PlanStatus::ok ? "ok" : "infeasible"},
          {"origin", to_json(origin)},
          {"trajectories", trajs},
          {"costs", costs},
          {"collision_costs", collision},
          {"chain_stats",
           {{"acceptance_rate", r.stats.acceptance_rate()},
            {"proposals", r.stats.proposals},
            {"accepted", r.stats.accepted}}}};
}

/// Label trajectories relative to the label's origin (zero when absent).
inline LabelSet labels_from_json(const json &j) {
  if (!j.contains("trajectories") || !j["trajectories"].is_array())
    throw InputError("labels JSON needs a \"trajectories\" array");
  const Point3 origin = j.contains("origin") ? vec3_from_json(j["origin"], "origin") : Point3::Zero();
  LabelSet labels;
  for (const auto &t : j["trajectories"]) {
    if (!t.is_string()) throw InputError("each trajectory must be an inline CSV string");
    labels.trajectories.push_back(to_matrix(trajectory_from_csv(t.get<std::string>(), "trajectory"), origin));
  }
  if (j.contains("collision_costs"))
    for (const auto &c : j["collision_costs"]) labels.collision_costs.push_back(c.get<double>());
  return labels;
}

inline json fit_to_json(const FitResult &fit, const LossConfig &cfg) {
  json hyps = json::array();
  for (const auto &h : fit.hypotheses.trajectories) hyps.push_back(trajectory_to_csv(to_trajectory(h)));
  return {{"modes", fit.hypotheses.size()},
          {"epsilon", cfg.epsilon},
          {"hypotheses", hyps},
          {"loss_trace", fit.trace},
          {"final_loss", fit.trace.empty() ? 0.0 : fit.trace.back()},
          {"diverged", fit.diverged}};
}

inline json report_to_json(const RunReport &rep) {
  json cells = json::array();
  for (const auto &c : rep.cells) {
    json path = json::array();
    for (const auto &p : c.path) path.push_back(to_json(p));
    json cell = {{"speed", c.speed},         {"seed", c.seed},
                 {"outcome", to_string(c.outcome)}, {"flight_time", c.flight_time},
                 {"mean_speed", c.mean_speed}, {"path_length", c.path_length},
                 {"path", path}};
    if (!c.cause.empty()) cell["cause"] = c.cause;
    cells.push_back(cell);
  }
  json agg = json::array();
  for (const auto &a : rep.aggregate)
    agg.push_back({{"speed", a.speed}, {"runs", a.runs}, {"successes", a.successes}, {"success_rate", a.success_rate}});
  return {{"environment", rep.environment},
          {"policy", to_string(rep.policy)},
          {"note", "privileged expert rolled out with idealized tracking; compare trends, not absolute rates"},
          {"cells", cells},
          {"aggregate", agg}};
}

inline std::string report_to_csv(const RunReport &rep) {
  std::string out = "speed,seed,outcome,flight_time,mean_speed\n";
  for (const auto &c : rep.cells)
    out += format_double(c.speed) + "," + std::to_string(c.seed) + "," + to_string(c.outcome) + "," +
           format_double(c.flight_time) + "," + format_double(c.mean_speed) + "\n";
  return out;
}

}  // namespace mhplan::io
