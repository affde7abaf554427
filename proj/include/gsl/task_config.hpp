#pragma once
// Task family configuration.  A .task file describes one family: its language
// description, placement ranges for demonstrations and evaluation, an optional
// scale interval, the object layout relative to a sampled primary position,
// and the success predicate.  Variant files reuse the same format and point at
// their base family so the benchmark can check that an axis actually moved.
//
// Line format (full-line # comments and blank lines allowed):
//   id press_button
//   description press(button[color=red])
//   train  <x_lo> <x_hi> <y_lo> <y_hi>
//   eval   <x_lo> <x_hi> <y_lo> <y_hi>
//   scale  <lo> <hi>
//   base   <train family id>         (variants only)
//   axis   spatial|appearance|distractor|compositional   (variants only)
//   object key=value ...
//   success <kind> <args...>

#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "gsl/error.hpp"
#include "gsl/rng.hpp"
#include "gsl/world.hpp"

namespace gsl {

struct ObjectTemplate {
  int id = 0;
  std::string role = "primary";  // primary | companion | distractor
  Category category = Category::block;
  std::string color = "gray";
  Shape shape;
  double z = 0.0;      // resting center height at scale 1
  Vec3 offset{0, 0, 0};  // xy offset from the primary object
  Articulation articulation;
  double value0 = 0.0;
  int parent = 0;
};

struct AtomTemplate {
  std::string kind;  // artic_at_least artic_at_most near height_rel height_abs
                     // attached not_attached
  int a = 0, b = 0;
  double x = 0.0;
};

struct TaskFamily {
  std::string id;
  std::string description;
  std::string base;  // empty for train families
  std::string axis;  // empty for train families
  double train_x[2] = {0, 0}, train_y[2] = {0, 0};
  double eval_x[2] = {0, 0}, eval_y[2] = {0, 0};
  double scale_lo = 1.0, scale_hi = 1.0;
  std::vector<ObjectTemplate> objects;
  std::vector<AtomTemplate> atoms;
  std::string source;  // path for error messages
};

namespace detail {

inline double cfg_real(const std::string& tok, const std::string& path, int line) {
  char* end = nullptr;
  double v = std::strtod(tok.c_str(), &end);
  if (end == nullptr || *end != '\0' || tok.empty())
    throw ConfigError(path, line, "expected a number, found '" + tok + "'");
  return v;
}

inline long cfg_int(const std::string& tok, const std::string& path, int line) {
  char* end = nullptr;
  long v = std::strtol(tok.c_str(), &end, 10);
  if (end == nullptr || *end != '\0' || tok.empty())
    throw ConfigError(path, line, "expected an integer, found '" + tok + "'");
  return v;
}

inline Vec3 cfg_vec(const std::string& tok, int want, const std::string& path, int line) {
  std::vector<double> vals;
  std::string cur;
  std::istringstream ss(tok);
  while (std::getline(ss, cur, ',')) vals.push_back(cfg_real(cur, path, line));
  if (static_cast<int>(vals.size()) != want)
    throw ConfigError(path, line,
                      "expected " + std::to_string(want) + " comma-separated values");
  Vec3 v{vals[0], vals[1], 0};
  if (want == 3) v.z = vals[2];
  return v;
}

inline ObjectTemplate parse_object_line(const std::vector<std::string>& toks,
                                        const std::string& path, int line) {
  ObjectTemplate o;
  bool have_id = false;
  for (std::size_t i = 1; i < toks.size(); ++i) {
    auto eq = toks[i].find('=');
    if (eq == std::string::npos)
      throw ConfigError(path, line, "object attribute '" + toks[i] + "' lacks '='");
    std::string key = toks[i].substr(0, eq), val = toks[i].substr(eq + 1);
    if (key == "id") {
      o.id = static_cast<int>(cfg_int(val, path, line));
      have_id = true;
    } else if (key == "role") {
      if (val != "primary" && val != "companion" && val != "distractor")
        throw ConfigError(path, line, "unknown role '" + val + "'");
      o.role = val;
    } else if (key == "category") {
      auto c = category_from_string(val);
      if (!c) throw ConfigError(path, line, "unknown category '" + val + "'");
      o.category = *c;
    } else if (key == "color") {
      o.color = val;
    } else if (key == "shape") {
      if (val == "box") o.shape.kind = ShapeKind::box;
      else if (val == "cylinder") o.shape.kind = ShapeKind::cylinder;
      else if (val == "sphere") o.shape.kind = ShapeKind::sphere;
      else throw ConfigError(path, line, "unknown shape '" + val + "'");
    } else if (key == "dims") {
      o.shape.dims = cfg_vec(val, 3, path, line);
    } else if (key == "z") {
      o.z = cfg_real(val, path, line);
    } else if (key == "offset") {
      Vec3 v = cfg_vec(val, 2, path, line);
      o.offset = {v.x, v.y, 0};
    } else if (key == "artic") {
      if (val == "pressable") o.articulation.kind = ArticulationKind::pressable;
      else if (val == "prismatic") o.articulation.kind = ArticulationKind::prismatic;
      else if (val == "hinged") o.articulation.kind = ArticulationKind::hinged_lid;
      else if (val == "screw") o.articulation.kind = ArticulationKind::screw_cap;
      else if (val == "rigid") o.articulation.kind = ArticulationKind::rigid;
      else throw ConfigError(path, line, "unknown articulation '" + val + "'");
    } else if (key == "travel") {
      o.articulation.travel = cfg_real(val, path, line);
    } else if (key == "axis") {
      o.articulation.axis = cfg_vec(val, 3, path, line);
    } else if (key == "range") {
      o.articulation.range = cfg_real(val, path, line);
    } else if (key == "open") {
      o.articulation.open_angle = cfg_real(val, path, line);
    } else if (key == "value") {
      o.value0 = cfg_real(val, path, line);
    } else if (key == "parent") {
      o.parent = static_cast<int>(cfg_int(val, path, line));
    } else {
      throw ConfigError(path, line, "unknown object attribute '" + key + "'");
    }
  }
  if (!have_id) throw ConfigError(path, line, "object needs an id");
  return o;
}

}  // namespace detail

inline TaskFamily load_task_family(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path, "cannot open");
  TaskFamily fam;
  fam.source = path;
  std::string line;
  int lineno = 0;
  int primary_count = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::vector<std::string> toks;
    std::string tok;
    while (ss >> tok) toks.push_back(tok);
    if (toks.empty()) continue;
    const std::string& head = toks[0];

    if (head == "id") {
      if (toks.size() != 2) throw ConfigError(path, lineno, "id takes one value");
      fam.id = toks[1];
    } else if (head == "description") {
      auto pos = line.find("description");
      fam.description = line.substr(pos + 12);
      while (!fam.description.empty() && fam.description.front() == ' ')
        fam.description.erase(fam.description.begin());
    } else if (head == "train" || head == "eval") {
      if (toks.size() != 5)
        throw ConfigError(path, lineno, head + " takes four values");
      double* x = head == "train" ? fam.train_x : fam.eval_x;
      double* y = head == "train" ? fam.train_y : fam.eval_y;
      x[0] = detail::cfg_real(toks[1], path, lineno);
      x[1] = detail::cfg_real(toks[2], path, lineno);
      y[0] = detail::cfg_real(toks[3], path, lineno);
      y[1] = detail::cfg_real(toks[4], path, lineno);
      if (x[0] > x[1] || y[0] > y[1])
        throw ConfigError(path, lineno, "range bounds out of order");
    } else if (head == "scale") {
      if (toks.size() != 3) throw ConfigError(path, lineno, "scale takes two values");
      fam.scale_lo = detail::cfg_real(toks[1], path, lineno);
      fam.scale_hi = detail::cfg_real(toks[2], path, lineno);
      if (fam.scale_lo > fam.scale_hi || fam.scale_lo <= 0)
        throw ConfigError(path, lineno, "bad scale interval");
    } else if (head == "base") {
      if (toks.size() != 2) throw ConfigError(path, lineno, "base takes one value");
      fam.base = toks[1];
    } else if (head == "axis") {
      if (toks.size() != 2) throw ConfigError(path, lineno, "axis takes one value");
      if (toks[1] != "spatial" && toks[1] != "appearance" && toks[1] != "distractor" &&
          toks[1] != "compositional")
        throw ConfigError(path, lineno, "unknown axis '" + toks[1] + "'");
      fam.axis = toks[1];
    } else if (head == "object") {
      ObjectTemplate o = detail::parse_object_line(toks, path, lineno);
      if (o.role == "primary") ++primary_count;
      fam.objects.push_back(o);
    } else if (head == "success") {
      if (toks.size() < 2) throw ConfigError(path, lineno, "success needs a kind");
      AtomTemplate a;
      a.kind = toks[1];
      auto need = [&](std::size_t n) {
        if (toks.size() != n)
          throw ConfigError(path, lineno,
                            "success " + a.kind + " takes " + std::to_string(n - 2) +
                                " arguments");
      };
      if (a.kind == "artic_at_least" || a.kind == "artic_at_most" ||
          a.kind == "height_rel" || a.kind == "height_abs") {
        need(4);
        a.a = static_cast<int>(detail::cfg_int(toks[2], path, lineno));
        a.x = detail::cfg_real(toks[3], path, lineno);
      } else if (a.kind == "near") {
        need(5);
        a.a = static_cast<int>(detail::cfg_int(toks[2], path, lineno));
        a.b = static_cast<int>(detail::cfg_int(toks[3], path, lineno));
        a.x = detail::cfg_real(toks[4], path, lineno);
      } else if (a.kind == "attached" || a.kind == "not_attached") {
        need(2);
      } else {
        throw ConfigError(path, lineno, "unknown success kind '" + a.kind + "'");
      }
      fam.atoms.push_back(a);
    } else {
      throw ConfigError(path, lineno, "unknown directive '" + head + "'");
    }
  }
  if (fam.id.empty()) throw ConfigError(path, 0, "missing id");
  if (fam.description.empty()) throw ConfigError(path, 0, "missing description");
  if (primary_count != 1)
    throw ConfigError(path, 0, "exactly one primary object required");
  return fam;
}

// ---------------------------------------------------------------------------
// Instance construction

struct SampledInstance {
  TaskInstance task;
  double x = 0, y = 0;   // primary placement
  double scale = 1.0;
};

// Deterministic in (family, seed).  Scale multiplies shape dims, resting
// heights, and press travel; placements and offsets stay metric.
inline SampledInstance build_task_instance(const TaskFamily& fam, bool eval_range,
                                           std::uint64_t seed) {
  Rng rng(mix_seed(seed, 13));
  SampledInstance out;
  const double* rx = eval_range ? fam.eval_x : fam.train_x;
  const double* ry = eval_range ? fam.eval_y : fam.train_y;
  out.x = rng.uniform(rx[0], rx[1]);
  out.y = rng.uniform(ry[0], ry[1]);
  out.scale = rng.uniform(fam.scale_lo, fam.scale_hi);

  TaskInstance& task = out.task;
  task.task_id = fam.id;
  task.description = fam.description;
  task.scene.rng_seed = mix_seed(seed, 977);
  task.scene.gripper.position = {0.22, -0.22, 0.26};

  std::map<int, double> spawn_z;
  for (const ObjectTemplate& t : fam.objects) {
    ObjectSpec o;
    o.instance_id = t.id;
    o.category = t.category;
    o.color = t.color;
    o.shape = t.shape;
    o.shape.dims = t.shape.dims * out.scale;
    o.articulation = t.articulation;
    o.articulation.travel *= out.scale;
    o.articulation_value = t.value0;
    o.parent_id = t.parent;
    Vec3 pos{out.x + t.offset.x, out.y + t.offset.y, t.z * out.scale};
    if (o.articulation.kind == ArticulationKind::prismatic)
      pos = pos + o.articulation.axis * (o.articulation.range * t.value0);
    o.pose = RigidTransform::translate(pos);
    spawn_z[t.id] = pos.z;

    Aabb bounds = object_aabb(o);
    if (!task.scene.table.contains(bounds.lo.x, bounds.lo.y) ||
        !task.scene.table.contains(bounds.hi.x, bounds.hi.y) || bounds.lo.z < -1e-9)
      throw ConfigError(fam.source, 0,
                        "object " + std::to_string(t.id) + " of '" + fam.id +
                            "' leaves the table at placement (" +
                            std::to_string(out.x) + ", " + std::to_string(out.y) + ")");
    task.scene.objects.push_back(o);
  }

  for (const AtomTemplate& a : fam.atoms) {
    SuccessAtom atom;
    if (a.kind == "artic_at_least") {
      atom.kind = SuccessAtom::Kind::articulation_at_least;
      atom.a = a.a;
      atom.threshold = a.x;
    } else if (a.kind == "artic_at_most") {
      atom.kind = SuccessAtom::Kind::articulation_at_most;
      atom.a = a.a;
      atom.threshold = a.x;
    } else if (a.kind == "near") {
      atom.kind = SuccessAtom::Kind::near_object;
      atom.a = a.a;
      atom.b = a.b;
      atom.threshold = a.x;
    } else if (a.kind == "height_rel") {
      atom.kind = SuccessAtom::Kind::height_at_least;
      atom.a = a.a;
      atom.threshold = spawn_z.count(a.a) ? spawn_z[a.a] + a.x : a.x;
    } else if (a.kind == "height_abs") {
      atom.kind = SuccessAtom::Kind::height_at_least;
      atom.a = a.a;
      atom.threshold = a.x;
    } else if (a.kind == "attached") {
      atom.kind = SuccessAtom::Kind::attached;
    } else if (a.kind == "not_attached") {
      atom.kind = SuccessAtom::Kind::not_attached;
    }
    task.success.atoms.push_back(atom);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Benchmark configuration

struct BenchmarkConfig {
  int demos_per_family = 3;
  int rollouts_per_task = 20;
  std::uint64_t demo_seed = 101;
  std::uint64_t eval_seed = 202;
  std::vector<std::string> train;  // family ids, order defines seed streams
  std::vector<std::pair<std::string, std::vector<std::string>>> splits;
  std::string source;
};

inline BenchmarkConfig load_benchmark_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path, "cannot open");
  BenchmarkConfig cfg;
  cfg.source = path;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::vector<std::string> toks;
    std::string tok;
    while (ss >> tok) toks.push_back(tok);
    if (toks.empty()) continue;
    const std::string& head = toks[0];
    if (head == "demos_per_family") {
      cfg.demos_per_family = static_cast<int>(detail::cfg_int(toks.at(1), path, lineno));
    } else if (head == "rollouts_per_task") {
      cfg.rollouts_per_task = static_cast<int>(detail::cfg_int(toks.at(1), path, lineno));
    } else if (head == "demo_seed") {
      cfg.demo_seed = static_cast<std::uint64_t>(detail::cfg_int(toks.at(1), path, lineno));
    } else if (head == "eval_seed") {
      cfg.eval_seed = static_cast<std::uint64_t>(detail::cfg_int(toks.at(1), path, lineno));
    } else if (head == "train") {
      for (std::size_t i = 1; i < toks.size(); ++i) cfg.train.push_back(toks[i]);
    } else if (head == "split") {
      if (toks.size() < 3)
        throw ConfigError(path, lineno, "split needs an axis and at least one task");
      std::vector<std::string> ids(toks.begin() + 2, toks.end());
      cfg.splits.emplace_back(toks[1], ids);
    } else {
      throw ConfigError(path, lineno, "unknown directive '" + head + "'");
    }
  }
  if (cfg.train.empty()) throw ConfigError(path, 0, "no train families listed");
  return cfg;
}

// Resolution order: explicit override, GSL_CONFIG_DIR, ./configs.
inline std::string resolve_config_dir(const std::string& override_dir = "") {
  if (!override_dir.empty()) return override_dir;
  const char* env = std::getenv("GSL_CONFIG_DIR");
  if (env != nullptr && env[0] != '\0') return env;
  return "configs";
}

}  // namespace gsl
