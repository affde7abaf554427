#pragma once
// Scripted expert demonstrations.  Each expert drives the gripper through a
// parameterized skill script; approaches between skills come from the same
// transit planner the executor uses, so demonstration and execution share
// motion structure.  Keyframes mark aperture threshold crossings and isolated
// speed minima, with the endpoints always included.

#include <cinttypes>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "gsl/error.hpp"
#include "gsl/geometry.hpp"
#include "gsl/grammar.hpp"
#include "gsl/planner.hpp"
#include "gsl/sensing.hpp"
#include "gsl/world.hpp"

namespace gsl {

// ---------------------------------------------------------------------------
// Keyframes

struct TooShort : Error {
  int steps;
  explicit TooShort(int steps_)
      : Error("trajectory with " + std::to_string(steps_) +
              " steps is too short for keyframe extraction (need >= 2)"),
        steps(steps_) {}
};

// Indices, ascending and unique: {0, last} plus aperture crossings of either
// grasp threshold, plus isolated speed minima (v_i < v_eps with both
// neighboring speeds strictly larger).  v_i is the travel of step i.
inline std::vector<int> extract_keyframes(const Trajectory& traj, const SimConfig& cfg) {
  int m = static_cast<int>(traj.size());
  if (m < 2) throw TooShort(m);
  std::vector<bool> mark(m, false);
  mark[0] = mark[m - 1] = true;

  for (int i = 1; i < m; ++i) {
    double prev = traj.steps[i - 1].aperture;
    double cur = traj.steps[i].aperture;
    bool closes = prev >= cfg.grasp_close_threshold && cur < cfg.grasp_close_threshold;
    bool opens = prev <= cfg.release_threshold && cur > cfg.release_threshold;
    if (closes || opens) mark[i] = true;
  }

  std::vector<double> v(m, 0.0);
  for (int i = 1; i < m; ++i)
    v[i] = distance(traj.steps[i].position, traj.steps[i - 1].position);
  for (int i = 1; i + 1 < m; ++i)
    if (v[i] < cfg.v_eps && v[i - 1] > v[i] && v[i + 1] > v[i]) mark[i] = true;

  std::vector<int> out;
  for (int i = 0; i < m; ++i)
    if (mark[i]) out.push_back(i);
  return out;
}

// ---------------------------------------------------------------------------
// Demonstrations

struct DemoFailure : Error {
  explicit DemoFailure(const std::string& msg) : Error(msg) {}
};

struct Demo {
  std::string task_id;
  std::string description;
  std::uint64_t seed = 0;
  Scene initial;                // scene before any motion
  Trajectory trajectory;        // starts at the initial gripper state
  std::vector<int> keyframes;   // metadata; recomputable from the trajectory
  std::vector<Scene> frames;    // one scene per trajectory step
};

// Incremental trajectory assembly with bounded step sizes.
class TrajectoryBuilder {
 public:
  TrajectoryBuilder(const GripperState& start, const SimConfig& cfg) : cfg_(&cfg) {
    traj_.steps.push_back(start);
  }

  const GripperState& last() const { return traj_.steps.back(); }
  const Trajectory& trajectory() const { return traj_; }
  int size() const { return static_cast<int>(traj_.size()); }

  // Straight-line motion with slerped orientation, aperture held.
  void move_to(const Vec3& pos, const UnitQuat& orient) {
    GripperState from = last();
    double len = distance(from.position, pos);
    double ang = from.orientation.angle_to(orient);
    if (len < 1e-15 && ang < 1e-12) return;
    int n = std::max({1, static_cast<int>(std::ceil(len / cfg_->substep)),
                      static_cast<int>(std::ceil(ang / 0.3))});
    for (int i = 1; i <= n; ++i) {
      double u = static_cast<double>(i) / n;
      GripperState g;
      g.position = from.position + (pos - from.position) * u;
      g.orientation = slerp(from.orientation, orient, u);
      g.aperture = from.aperture;
      traj_.steps.push_back(g);
    }
  }
  void move_to(const Vec3& pos) { move_to(pos, last().orientation); }

  // Single-step aperture change at the current pose.
  void set_aperture(double a) {
    GripperState g = last();
    g.aperture = a;
    traj_.steps.push_back(g);
  }

  // Splice an already-planned trajectory, dropping a duplicated leading state.
  void append(const Trajectory& t) {
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (i == 0 && !traj_.empty()) {
        const GripperState& a = last();
        const GripperState& b = t.steps[0];
        if (distance(a.position, b.position) < 1e-15 &&
            a.orientation.angle_to(b.orientation) < 1e-12 &&
            std::fabs(a.aperture - b.aperture) < 1e-15)
          continue;
      }
      traj_.steps.push_back(t.steps[i]);
    }
  }

 private:
  const SimConfig* cfg_;
  Trajectory traj_;
};

// ---------------------------------------------------------------------------
// Expert scripts

namespace expert {

inline constexpr double kOpen = 1.0;
inline constexpr double kClosed = 0.05;
inline constexpr double kHover = 0.06;        // above interaction points
inline constexpr double kGraspHover = 0.08;   // above grasp points
inline constexpr double kPressOvershoot = 1.6;  // in units of travel
inline constexpr double kLiftHeight = 0.18;
inline constexpr double kPlaceGap = 0.002;
inline constexpr double kScrewTurns = 1.15;   // fraction of a full turn
inline constexpr double kDrawerStandoff = 0.035;
inline constexpr double kDrawerOverpull = 1.08;
inline constexpr double kArcOvershoot = 1.12;

// Where the transit should deliver the gripper before each skill script runs.
inline GripperState skill_start_pose(SkillLabel label, const Scene& scene,
                                     const ObjectSpec& target, const SimConfig&) {
  GripperState g;
  g.orientation = scene.gripper.orientation;
  g.aperture = scene.gripper.aperture;
  switch (label) {
    case SkillLabel::press:
      g.position = target.press_point() + Vec3{0, 0, kHover};
      break;
    case SkillLabel::pick:
      g.position = target.grasp_point() + Vec3{0, 0, kGraspHover};
      break;
    case SkillLabel::lift:
      g.position = scene.gripper.position;  // continue from the grasp
      break;
    case SkillLabel::place: {
      double carried_half = 0.0;
      if (scene.attached) carried_half = scene.find(*scene.attached)->shape.height() * 0.5;
      double z_drop = object_aabb(target).hi.z + carried_half + kPlaceGap;
      g.position = Vec3{target.pose.translation.x, target.pose.translation.y,
                        z_drop + kHover};
      break;
    }
    case SkillLabel::screw: {
      double lid_half = 0.0;
      if (scene.attached) lid_half = scene.find(*scene.attached)->shape.height() * 0.5;
      g.position = target.mouth_point() + Vec3{0, 0, lid_half + kPlaceGap + kHover};
      break;
    }
    case SkillLabel::pull_out:
    case SkillLabel::push_back:
      g.position = target.handle_point() + target.articulation.axis * kDrawerStandoff;
      break;
    case SkillLabel::open:
    case SkillLabel::close:
      g.position = target.lid_handle(target.lid_angle()) + Vec3{0, 0, kHover};
      break;
  }
  return g;
}

// Each script assumes the gripper is at skill_start_pose for (label, target).
inline void run_script(TrajectoryBuilder& b, SkillLabel label, const Scene& scene,
                       const ObjectSpec& target, const SimConfig& cfg) {
  switch (label) {
    case SkillLabel::press: {
      double top0 = target.pose.translation.z + target.shape.half_extents().z;
      Vec3 bottom{target.pose.translation.x, target.pose.translation.y,
                  top0 - kPressOvershoot * target.articulation.travel};
      b.move_to(bottom);
      break;
    }
    case SkillLabel::pick: {
      b.move_to(target.grasp_point());
      b.set_aperture(kClosed);
      break;
    }
    case SkillLabel::lift: {
      Vec3 up = b.last().position + Vec3{0, 0, kLiftHeight};
      b.move_to(up);
      break;
    }
    case SkillLabel::place: {
      double carried_half = 0.0;
      if (scene.attached) carried_half = scene.find(*scene.attached)->shape.height() * 0.5;
      double z_drop = object_aabb(target).hi.z + carried_half + kPlaceGap;
      b.move_to({target.pose.translation.x, target.pose.translation.y, z_drop});
      b.set_aperture(kOpen);
      break;
    }
    case SkillLabel::screw: {
      double lid_half = 0.0;
      if (scene.attached) lid_half = scene.find(*scene.attached)->shape.height() * 0.5;
      Vec3 seat = target.mouth_point() + Vec3{0, 0, lid_half + kPlaceGap};
      b.move_to(seat);
      double total = kScrewTurns * cfg.screw_full_angle;
      double start_yaw = b.last().orientation.yaw();
      int n = static_cast<int>(std::ceil(total / 0.25));
      for (int i = 1; i <= n; ++i) {
        GripperState g = b.last();
        g.orientation = UnitQuat::from_yaw(start_yaw + total * i / n);
        b.move_to(seat, g.orientation);
      }
      b.set_aperture(kOpen);
      break;
    }
    case SkillLabel::pull_out:
    case SkillLabel::push_back: {
      Vec3 handle = target.handle_point();
      b.move_to(handle);
      b.set_aperture(kClosed);
      double sgn = label == SkillLabel::pull_out ? 1.0 : -1.0;
      double remaining = label == SkillLabel::pull_out
                             ? (1.0 - target.articulation_value)
                             : target.articulation_value;
      Vec3 end = handle + target.articulation.axis *
                              (sgn * kDrawerOverpull * remaining * target.articulation.range);
      b.move_to(end);
      b.set_aperture(kOpen);
      break;
    }
    case SkillLabel::open:
    case SkillLabel::close: {
      double theta0 = target.lid_angle();
      b.move_to(target.lid_handle(theta0));
      b.set_aperture(kClosed);
      double theta1 = label == SkillLabel::open
                          ? kArcOvershoot * target.articulation.open_angle
                          : (1.0 - kArcOvershoot) * target.articulation.open_angle;
      double r = target.hinge_radius();
      int n = std::max(1, static_cast<int>(std::ceil(std::fabs(theta1 - theta0) * r /
                                                     cfg.substep)));
      for (int i = 1; i <= n; ++i) {
        double theta = theta0 + (theta1 - theta0) * i / n;
        b.move_to(target.lid_handle(std::clamp(theta, -M_PI * 0.49, M_PI * 0.49)));
      }
      b.set_aperture(kOpen);
      break;
    }
  }
}

}  // namespace expert

// ---------------------------------------------------------------------------
// Demo generation

// Roll out the scripted expert for a task.  Grounding runs on clean
// observations between skills, approaches come from plan_transit, and the
// final frame must satisfy the task predicate.
inline Demo generate_demo(const TaskInstance& task, std::uint64_t seed,
                          const SimConfig& cfg) {
  SkillPlan plan = parse_task(task.description);
  Demo demo;
  demo.task_id = task.task_id;
  demo.description = task.description;
  demo.seed = seed;
  demo.initial = task.scene;

  Scene scene = task.scene;
  TrajectoryBuilder builder(scene.gripper, cfg);
  std::vector<Scene> frames{scene};  // frame for the no-op first step
  int executed = 1;

  auto advance = [&]() {
    const Trajectory& full = builder.trajectory();
    for (int i = executed; i < builder.size(); ++i) {
      scene = step_to(scene, full.steps[i], cfg);
      frames.push_back(scene);
    }
    executed = builder.size();
  };

  for (int cursor = 0; cursor < static_cast<int>(plan.steps.size()); ++cursor) {
    LabeledCloud cloud = observe(scene, {}, mix_seed(seed, 50 + cursor), cfg);
    GroundedStep step = next_step(plan, cursor, cloud, scene, cfg);
    const ObjectSpec* target = scene.find(step.target_id);
    GripperState start = expert::skill_start_pose(step.label, scene, *target, cfg);
    builder.append(plan_transit(scene.gripper, start, scene, cfg));
    advance();
    expert::run_script(builder, step.label, scene, *scene.find(step.target_id), cfg);
    advance();
  }

  demo.trajectory = builder.trajectory();
  demo.frames = std::move(frames);
  if (demo.trajectory.size() != demo.frames.size())
    throw DemoFailure("frame bookkeeping out of sync");
  if (!check_success(task, scene))
    throw DemoFailure("expert rollout for task '" + task.task_id +
                      "' does not satisfy the success predicate");
  demo.keyframes = extract_keyframes(demo.trajectory, cfg);
  return demo;
}

// ---------------------------------------------------------------------------
// Serialization: "gsl-demos v1", one '|'-separated record per line.

namespace detail {

inline std::string fmt_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == sep) {
      out.push_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

inline double parse_real(const std::string& s, const std::string& path) {
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (end == nullptr || *end != '\0' || s.empty())
    throw IoError(path, "malformed real number '" + s + "'");
  return v;
}

inline long parse_int(const std::string& s, const std::string& path) {
  char* end = nullptr;
  long v = std::strtol(s.c_str(), &end, 10);
  if (end == nullptr || *end != '\0' || s.empty())
    throw IoError(path, "malformed integer '" + s + "'");
  return v;
}

inline std::string encode_gripper(const GripperState& g) {
  std::string s;
  for (double v : {g.position.x, g.position.y, g.position.z, g.orientation.w,
                   g.orientation.x, g.orientation.y, g.orientation.z, g.aperture}) {
    if (!s.empty()) s += ',';
    s += fmt_real(v);
  }
  return s;
}

inline GripperState decode_gripper(const std::string& s, const std::string& path) {
  auto f = split(s, ',');
  if (f.size() != 8) throw IoError(path, "gripper state needs 8 fields");
  GripperState g;
  g.position = {parse_real(f[0], path), parse_real(f[1], path), parse_real(f[2], path)};
  g.orientation = UnitQuat(parse_real(f[3], path), parse_real(f[4], path),
                           parse_real(f[5], path), parse_real(f[6], path));
  g.aperture = parse_real(f[7], path);
  return g;
}

inline const char* articulation_name(ArticulationKind k) {
  switch (k) {
    case ArticulationKind::rigid: return "rigid";
    case ArticulationKind::pressable: return "pressable";
    case ArticulationKind::prismatic: return "prismatic";
    case ArticulationKind::hinged_lid: return "hinged";
    case ArticulationKind::screw_cap: return "screw";
  }
  return "?";
}

inline ArticulationKind articulation_from_name(const std::string& s,
                                               const std::string& path) {
  for (ArticulationKind k : {ArticulationKind::rigid, ArticulationKind::pressable,
                             ArticulationKind::prismatic, ArticulationKind::hinged_lid,
                             ArticulationKind::screw_cap})
    if (s == articulation_name(k)) return k;
  throw IoError(path, "unknown articulation kind '" + s + "'");
}

inline const char* shape_name(ShapeKind k) {
  switch (k) {
    case ShapeKind::box: return "box";
    case ShapeKind::cylinder: return "cylinder";
    case ShapeKind::sphere: return "sphere";
  }
  return "?";
}

inline ShapeKind shape_from_name(const std::string& s, const std::string& path) {
  for (ShapeKind k : {ShapeKind::box, ShapeKind::cylinder, ShapeKind::sphere})
    if (s == shape_name(k)) return k;
  throw IoError(path, "unknown shape kind '" + s + "'");
}

inline std::string encode_object(const ObjectSpec& o) {
  std::string s = std::to_string(o.instance_id);
  s += ',';
  s += to_string(o.category);
  s += ',';
  s += o.color;
  s += ',';
  s += shape_name(o.shape.kind);
  for (double v : {o.shape.dims.x, o.shape.dims.y, o.shape.dims.z}) {
    s += ',';
    s += fmt_real(v);
  }
  s += ',';
  s += articulation_name(o.articulation.kind);
  double p1 = 0, p2 = 0, p3 = 0, p4 = 0;
  switch (o.articulation.kind) {
    case ArticulationKind::pressable: p1 = o.articulation.travel; break;
    case ArticulationKind::prismatic:
      p1 = o.articulation.axis.x; p2 = o.articulation.axis.y;
      p3 = o.articulation.axis.z; p4 = o.articulation.range;
      break;
    case ArticulationKind::hinged_lid: p1 = o.articulation.open_angle; break;
    default: break;
  }
  for (double v : {p1, p2, p3, p4, o.articulation_value}) {
    s += ',';
    s += fmt_real(v);
  }
  s += ',';
  s += std::to_string(o.parent_id);
  for (double v : {o.pose.translation.x, o.pose.translation.y, o.pose.translation.z,
                   o.pose.rotation.w, o.pose.rotation.x, o.pose.rotation.y,
                   o.pose.rotation.z}) {
    s += ',';
    s += fmt_real(v);
  }
  return s;
}

inline ObjectSpec decode_object(const std::string& s, const std::string& path) {
  auto f = split(s, ',');
  if (f.size() != 21) throw IoError(path, "object record needs 21 fields");
  ObjectSpec o;
  o.instance_id = static_cast<int>(parse_int(f[0], path));
  auto cat = category_from_string(f[1]);
  if (!cat) throw IoError(path, "unknown category '" + f[1] + "'");
  o.category = *cat;
  o.color = f[2];
  o.shape.kind = shape_from_name(f[3], path);
  o.shape.dims = {parse_real(f[4], path), parse_real(f[5], path), parse_real(f[6], path)};
  o.articulation.kind = articulation_from_name(f[7], path);
  double p1 = parse_real(f[8], path), p2 = parse_real(f[9], path);
  double p3 = parse_real(f[10], path), p4 = parse_real(f[11], path);
  switch (o.articulation.kind) {
    case ArticulationKind::pressable: o.articulation.travel = p1; break;
    case ArticulationKind::prismatic:
      o.articulation.axis = {p1, p2, p3};
      o.articulation.range = p4;
      break;
    case ArticulationKind::hinged_lid: o.articulation.open_angle = p1; break;
    default: break;
  }
  o.articulation_value = parse_real(f[12], path);
  o.parent_id = static_cast<int>(parse_int(f[13], path));
  o.pose.translation = {parse_real(f[14], path), parse_real(f[15], path),
                        parse_real(f[16], path)};
  o.pose.rotation = UnitQuat(parse_real(f[17], path), parse_real(f[18], path),
                             parse_real(f[19], path), parse_real(f[20], path));
  return o;
}

}  // namespace detail

inline void save_demos(const std::vector<Demo>& demos, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError(path, "cannot open for writing");
  out << "gsl-demos v1\n";
  for (const Demo& d : demos) {
    out << d.task_id << '|' << d.description << '|' << d.seed << '|';
    for (std::size_t i = 0; i < d.trajectory.size(); ++i) {
      if (i > 0) out << ';';
      out << detail::encode_gripper(d.trajectory.steps[i]);
    }
    out << '|';
    for (std::size_t i = 0; i < d.keyframes.size(); ++i) {
      if (i > 0) out << ',';
      out << d.keyframes[i];
    }
    out << '|';
    // Object poses and articulation values at each keyframe.
    for (std::size_t k = 0; k < d.keyframes.size(); ++k) {
      if (k > 0) out << '#';
      const Scene& f = d.frames[d.keyframes[k]];
      for (std::size_t oi = 0; oi < f.objects.size(); ++oi) {
        const ObjectSpec& o = f.objects[oi];
        if (oi > 0) out << ';';
        out << o.instance_id << ':' << detail::fmt_real(o.pose.translation.x) << ','
            << detail::fmt_real(o.pose.translation.y) << ','
            << detail::fmt_real(o.pose.translation.z) << ','
            << detail::fmt_real(o.articulation_value);
      }
    }
    out << '|';
    out << detail::fmt_real(d.initial.table.x_min) << ','
        << detail::fmt_real(d.initial.table.x_max) << ','
        << detail::fmt_real(d.initial.table.y_min) << ','
        << detail::fmt_real(d.initial.table.y_max);
    out << '|' << d.initial.rng_seed;
    out << '|' << detail::encode_gripper(d.initial.gripper);
    out << '|';
    if (d.initial.attached) out << *d.initial.attached;
    else out << '-';
    out << '|';
    for (std::size_t oi = 0; oi < d.initial.objects.size(); ++oi) {
      if (oi > 0) out << ';';
      out << detail::encode_object(d.initial.objects[oi]);
    }
    out << '\n';
  }
  if (!out) throw IoError(path, "write failure");
}

// Loads demos and re-simulates each trajectory to rebuild the per-step frames;
// the file stores only the initial scene plus keyframe poses as metadata.
inline std::vector<Demo> load_demos(const std::string& path, const SimConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw IoError(path, "cannot open");
  std::string line;
  if (!std::getline(in, line) || line != "gsl-demos v1")
    throw IoError(path, "bad magic, expected 'gsl-demos v1'");

  std::vector<Demo> demos;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto f = detail::split(line, '|');
    if (f.size() != 11) throw IoError(path, "demo record needs 11 fields");
    Demo d;
    d.task_id = f[0];
    d.description = f[1];
    d.seed = static_cast<std::uint64_t>(std::strtoull(f[2].c_str(), nullptr, 10));
    for (const std::string& s : detail::split(f[3], ';'))
      d.trajectory.steps.push_back(detail::decode_gripper(s, path));
    if (!f[4].empty())
      for (const std::string& s : detail::split(f[4], ','))
        d.keyframes.push_back(static_cast<int>(detail::parse_int(s, path)));
    // f[5] holds keyframe object poses; derived data, rebuilt by re-simulation.

    auto tb = detail::split(f[6], ',');
    if (tb.size() != 4) throw IoError(path, "table bounds need 4 fields");
    d.initial.table = {detail::parse_real(tb[0], path), detail::parse_real(tb[1], path),
                       detail::parse_real(tb[2], path), detail::parse_real(tb[3], path)};
    d.initial.rng_seed = static_cast<std::uint64_t>(std::strtoull(f[7].c_str(), nullptr, 10));
    d.initial.gripper = detail::decode_gripper(f[8], path);
    d.initial.attached.reset();
    if (f[9] != "-") d.initial.attached = static_cast<int>(detail::parse_int(f[9], path));
    for (const std::string& s : detail::split(f[10], ';'))
      d.initial.objects.push_back(detail::decode_object(s, path));

    d.frames = run_trajectory(d.initial, d.trajectory, cfg);
    demos.push_back(std::move(d));
  }
  return demos;
}

}  // namespace gsl
