#pragma once
// Deterministic kinematic tabletop world.  A free-flying gripper interacts with
// rigid objects through three mechanisms only: attach/detach on aperture
// threshold crossings, articulation value updates gated by proximity, and rigid
// following of the attached object.  No dynamics, no contact forces; identical
// inputs give identical states bit for bit.

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gsl/error.hpp"
#include "gsl/geometry.hpp"

namespace gsl {

// ---------------------------------------------------------------------------
// Configuration

struct SimConfig {
  double step_max = 0.05;              // max waypoint-to-waypoint travel [m]
  double substep = 0.02;               // interpolation step for generated motions [m]
  double grasp_close_threshold = 0.2;  // aperture crossing below attaches
  double release_threshold = 0.8;      // aperture crossing above detaches
  double grasp_radius = 0.03;          // max distance gripper<->grasp point at attach [m]
  double contact_radius = 0.04;        // articulation interaction gate [m]
  double z_table = 0.0;                // table plane height [m]
  double z_max = 0.45;                 // workspace ceiling [m]
  double lift_complete = 0.12;         // ascent that completes a lift [m]
  double v_eps = 1e-3;                 // speed-minimum threshold for keyframes [m/step]
  double d_near = 0.10;                // skill-segment entry distance to target cloud [m]
  double z_safe_offset = 0.25;         // first transit height above the table [m]
  double z_safe_step = 0.05;           // transit height increment on collision [m]
  double clearance = 0.01;             // obstacle inflation for transit checks [m]
  int points_per_object = 400;         // surface samples per object in observations
  double size_large_threshold = 0.06;  // max object extent separating small/large
  double screw_full_angle = 6.283185307179586476925286766559;  // one full turn [rad]
};

// ---------------------------------------------------------------------------
// Objects

enum class Category { button, jar, lid, bulb, drawer, box, block, cup, distractor };

inline const char* to_string(Category c) {
  switch (c) {
    case Category::button: return "button";
    case Category::jar: return "jar";
    case Category::lid: return "lid";
    case Category::bulb: return "bulb";
    case Category::drawer: return "drawer";
    case Category::box: return "box";
    case Category::block: return "block";
    case Category::cup: return "cup";
    case Category::distractor: return "distractor";
  }
  return "?";
}

inline std::optional<Category> category_from_string(const std::string& s) {
  for (Category c : {Category::button, Category::jar, Category::lid, Category::bulb,
                     Category::drawer, Category::box, Category::block, Category::cup,
                     Category::distractor})
    if (s == to_string(c)) return c;
  return std::nullopt;
}

enum class ShapeKind { box, cylinder, sphere };

struct Shape {
  ShapeKind kind = ShapeKind::box;
  // box: dims = full extents; cylinder: dims.x = radius, dims.y = height;
  // sphere: dims.x = radius.
  Vec3 dims{0.04, 0.04, 0.04};

  Vec3 half_extents() const {
    switch (kind) {
      case ShapeKind::box: return dims * 0.5;
      case ShapeKind::cylinder: return {dims.x, dims.x, dims.y * 0.5};
      case ShapeKind::sphere: return {dims.x, dims.x, dims.x};
    }
    return {};
  }
  double height() const { return half_extents().z * 2.0; }
  double max_extent() const {
    Vec3 h = half_extents();
    return 2.0 * std::max({h.x, h.y, h.z});
  }
};

enum class ArticulationKind { rigid, pressable, prismatic, hinged_lid, screw_cap };

struct Articulation {
  ArticulationKind kind = ArticulationKind::rigid;
  double travel = 0.0;      // pressable: full press depth [m]
  Vec3 axis{0, -1, 0};      // prismatic: sliding direction (unit, world frame)
  double range = 0.0;       // prismatic: slide distance [m]
  double open_angle = 0.0;  // hinged_lid: fully-open angle [rad]
};

struct ObjectSpec {
  int instance_id = 0;  // unique within a scene, >= 1
  Category category = Category::block;
  std::string color = "gray";
  Shape shape;
  RigidTransform pose;  // moves for prismatic objects and attached objects
  Articulation articulation;
  double articulation_value = 0.0;  // in [0, 1]
  int parent_id = 0;                // 0 = none

  bool graspable() const {
    switch (category) {
      case Category::block:
      case Category::lid:
      case Category::bulb:
      case Category::cup:
      case Category::distractor:
        return true;
      default:
        return false;
    }
  }

  Vec3 grasp_point() const { return pose.translation; }

  // Pressable: current top-face center (descends with the press).
  Vec3 press_point() const {
    return pose.translation +
           Vec3{0, 0, shape.half_extents().z - articulation_value * articulation.travel};
  }

  // Jar mouth: top-face center.
  Vec3 mouth_point() const {
    return pose.translation + Vec3{0, 0, shape.half_extents().z};
  }

  // Hinge line of a hinged_lid box: along +y at the top back edge.
  Vec3 hinge_point() const {
    Vec3 h = shape.half_extents();
    return pose.translation + Vec3{-h.x, 0, h.z};
  }
  double hinge_radius() const { return shape.dims.x; }

  // Lid handle position at opening angle theta (front top edge swung up).
  Vec3 lid_handle(double theta) const {
    double r = hinge_radius();
    return hinge_point() + Vec3{r * std::cos(theta), 0, r * std::sin(theta)};
  }
  Vec3 lid_tangent(double theta) const { return {-std::sin(theta), 0, std::cos(theta)}; }
  double lid_angle() const { return articulation_value * articulation.open_angle; }

  // Rigid transform taking closed-lid surface points to their posed location.
  RigidTransform lid_transform() const {
    return RigidTransform::rotate_about(
        UnitQuat::from_axis_angle({0, 1, 0}, -lid_angle()), hinge_point());
  }

  // Interaction point for articulated parts; grasp point otherwise.
  Vec3 handle_point() const {
    switch (articulation.kind) {
      case ArticulationKind::pressable:
        return press_point();
      case ArticulationKind::prismatic: {
        Vec3 h = shape.half_extents();
        double along = std::fabs(articulation.axis.x) * h.x +
                       std::fabs(articulation.axis.y) * h.y +
                       std::fabs(articulation.axis.z) * h.z;
        return pose.translation + articulation.axis * along;
      }
      case ArticulationKind::hinged_lid:
        return lid_handle(lid_angle());
      default:
        return grasp_point();
    }
  }
};

// World-frame axis-aligned bounds; an open hinged lid extends the top.
inline Aabb object_aabb(const ObjectSpec& obj) {
  Vec3 h = obj.shape.half_extents();
  Aabb box{obj.pose.translation - h, obj.pose.translation + h};
  if (obj.articulation.kind == ArticulationKind::hinged_lid) {
    double tip = obj.hinge_point().z + obj.hinge_radius() * std::sin(obj.lid_angle());
    box.hi.z = std::max(box.hi.z, tip);
  }
  return box;
}

// ---------------------------------------------------------------------------
// Gripper and scene

struct GripperState {
  Vec3 position;
  UnitQuat orientation;
  double aperture = 1.0;  // 0 = closed, 1 = open

  RigidTransform pose() const { return {orientation, position}; }
};

struct Trajectory {
  std::vector<GripperState> steps;

  std::size_t size() const { return steps.size(); }
  bool empty() const { return steps.empty(); }
};

struct TableBounds {
  double x_min = -0.35, x_max = 0.35, y_min = -0.35, y_max = 0.35;
  bool contains(double x, double y) const {
    return x >= x_min && x <= x_max && y >= y_min && y <= y_max;
  }
};

struct Scene {
  std::vector<ObjectSpec> objects;
  GripperState gripper;
  std::optional<int> attached;    // instance id of the held object
  RigidTransform attach_rel;      // gripper -> object, frozen at attach time
  TableBounds table;
  std::uint64_t rng_seed = 0;     // surface-sampling seed for observations

  const ObjectSpec* find(int instance_id) const {
    for (const ObjectSpec& o : objects)
      if (o.instance_id == instance_id) return &o;
    return nullptr;
  }
  ObjectSpec* find(int instance_id) {
    for (ObjectSpec& o : objects)
      if (o.instance_id == instance_id) return &o;
    return nullptr;
  }

  // Whole-workspace shift; articulation axes are directions and stay put.
  Scene translated(const Vec3& t) const {
    Scene out = *this;
    for (ObjectSpec& o : out.objects) o.pose.translation += t;
    out.gripper.position += t;
    out.table.x_min += t.x; out.table.x_max += t.x;
    out.table.y_min += t.y; out.table.y_max += t.y;
    return out;
  }
};

// ---------------------------------------------------------------------------
// Success predicates

struct SuccessAtom {
  enum class Kind { articulation_at_least, articulation_at_most, near_object,
                    height_at_least, attached, not_attached };
  Kind kind = Kind::articulation_at_least;
  int a = 0, b = 0;        // instance ids
  double threshold = 0.0;  // value / distance / absolute height
};

// Conjunction of atoms; empty list is vacuously true.
struct SuccessPredicate {
  std::vector<SuccessAtom> atoms;
};

struct TaskInstance {
  std::string task_id;
  std::string description;
  Scene scene;
  SuccessPredicate success;

  TaskInstance translated_xy(double dx, double dy) const {
    TaskInstance out = *this;
    out.scene = scene.translated({dx, dy, 0.0});
    return out;  // height atoms are absolute, hence xy only
  }
};

struct PredicateError : Error {
  explicit PredicateError(int id)
      : Error("success predicate references unknown instance id " + std::to_string(id)) {}
};

inline bool check_success(const TaskInstance& task, const Scene& scene) {
  auto need = [&](int id) -> const ObjectSpec& {
    const ObjectSpec* o = scene.find(id);
    if (o == nullptr) throw PredicateError(id);
    return *o;
  };
  for (const SuccessAtom& atom : task.success.atoms) {
    switch (atom.kind) {
      case SuccessAtom::Kind::articulation_at_least:
        if (!(need(atom.a).articulation_value >= atom.threshold)) return false;
        break;
      case SuccessAtom::Kind::articulation_at_most:
        if (!(need(atom.a).articulation_value <= atom.threshold)) return false;
        break;
      case SuccessAtom::Kind::near_object:
        if (!(distance(need(atom.a).pose.translation, need(atom.b).pose.translation) <=
              atom.threshold))
          return false;
        break;
      case SuccessAtom::Kind::height_at_least:
        if (!(need(atom.a).pose.translation.z >= atom.threshold)) return false;
        break;
      case SuccessAtom::Kind::attached:
        if (!(scene.attached && *scene.attached == atom.a)) return false;
        break;
      case SuccessAtom::Kind::not_attached:
        if (scene.attached && *scene.attached == atom.a) return false;
        break;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// Simulation errors

struct SimError : Error {
  int step = -1;  // index within the offending trajectory, -1 when single-step
  SimError(const std::string& msg, int step_)
      : Error(step_ >= 0 ? msg + " at trajectory step " + std::to_string(step_) : msg),
        step(step_) {}
};

struct WorkspaceViolation : SimError {
  explicit WorkspaceViolation(const std::string& msg, int step_ = -1)
      : SimError(msg, step_) {}
};

struct TableCollision : SimError {
  explicit TableCollision(const std::string& msg, int step_ = -1)
      : SimError(msg, step_) {}
};

struct InvalidTrajectory : Error {
  explicit InvalidTrajectory(const std::string& msg) : Error(msg) {}
};

// ---------------------------------------------------------------------------
// Stepping

inline double wrap_angle(double a) {
  while (a > M_PI) a -= 2.0 * M_PI;
  while (a <= -M_PI) a += 2.0 * M_PI;
  return a;
}

namespace detail {
inline std::string fmt2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}
}  // namespace detail

// Advance the world by one gripper target.  Deterministic update order:
// workspace checks, articulation gates (evaluated against the pre-step
// gripper), attached-object follow, detach crossing, attach crossing.
inline Scene step_to(const Scene& scene, const GripperState& target, const SimConfig& cfg) {
  using detail::fmt2;
  if (target.position.z < cfg.z_table - 1e-12)
    throw TableCollision("gripper target z " + fmt2(target.position.z) +
                         " below table plane");
  if (!scene.table.contains(target.position.x, target.position.y) ||
      target.position.z > cfg.z_max + 1e-12)
    throw WorkspaceViolation("gripper target (" + fmt2(target.position.x) + ", " +
                             fmt2(target.position.y) + ", " + fmt2(target.position.z) +
                             ") outside workspace");

  const GripperState& old = scene.gripper;
  Scene out = scene;
  out.gripper = target;
  out.gripper.aperture = std::clamp(target.aperture, 0.0, 1.0);

  Vec3 delta = target.position - old.position;
  const ObjectSpec* held_old = scene.attached ? scene.find(*scene.attached) : nullptr;

  for (ObjectSpec& obj : out.objects) {
    switch (obj.articulation.kind) {
      case ArticulationKind::pressable: {
        // Pushed by the gripper tip or by whatever it carries; latches.
        double gate = distance(old.position, obj.press_point());
        if (held_old != nullptr)
          gate = std::min(gate, distance(held_old->pose.translation, obj.press_point()));
        if (gate <= cfg.contact_radius && obj.articulation.travel > 0.0) {
          double dv = (old.position.z - target.position.z) / obj.articulation.travel;
          if (dv > 0.0)
            obj.articulation_value = std::min(1.0, obj.articulation_value + dv);
        }
        break;
      }
      case ArticulationKind::prismatic: {
        // Dragged while the closed gripper holds the handle (and holds nothing else).
        if (scene.attached) break;
        if (out.gripper.aperture > cfg.grasp_close_threshold) break;
        if (distance(old.position, obj.handle_point()) > cfg.contact_radius) break;
        if (obj.articulation.range <= 0.0) break;
        double dv = delta.dot(obj.articulation.axis) / obj.articulation.range;
        double nv = std::clamp(obj.articulation_value + dv, 0.0, 1.0);
        obj.pose.translation += obj.articulation.axis *
                                ((nv - obj.articulation_value) * obj.articulation.range);
        obj.articulation_value = nv;
        break;
      }
      case ArticulationKind::hinged_lid: {
        if (scene.attached) break;
        if (out.gripper.aperture > cfg.grasp_close_threshold) break;
        if (distance(old.position, obj.lid_handle(obj.lid_angle())) > cfg.contact_radius)
          break;
        if (obj.articulation.open_angle <= 0.0 || obj.hinge_radius() <= 0.0) break;
        double dtheta = delta.dot(obj.lid_tangent(obj.lid_angle())) / obj.hinge_radius();
        obj.articulation_value =
            std::clamp(obj.articulation_value + dtheta / obj.articulation.open_angle, 0.0,
                       1.0);
        break;
      }
      case ArticulationKind::screw_cap: {
        // Jar special case: an attached lid held at the mouth converts yaw
        // into screw progress; latches.
        if (held_old == nullptr || held_old->category != Category::lid) break;
        if (distance(held_old->pose.translation, obj.mouth_point()) > cfg.contact_radius)
          break;
        double dyaw = wrap_angle(target.orientation.yaw() - old.orientation.yaw());
        obj.articulation_value = std::min(
            1.0, obj.articulation_value + std::fabs(dyaw) / cfg.screw_full_angle);
        break;
      }
      case ArticulationKind::rigid:
        break;
    }
  }

  if (out.attached) {
    ObjectSpec* held = out.find(*out.attached);
    held->pose = out.gripper.pose() * out.attach_rel;
  }

  if (out.attached && old.aperture <= cfg.release_threshold &&
      out.gripper.aperture > cfg.release_threshold) {
    out.attached.reset();
  } else if (!out.attached && old.aperture >= cfg.grasp_close_threshold &&
             out.gripper.aperture < cfg.grasp_close_threshold) {
    int best_id = 0;
    double best_d = 0.0;
    for (const ObjectSpec& obj : out.objects) {
      if (!obj.graspable()) continue;
      double d = distance(out.gripper.position, obj.grasp_point());
      if (d > cfg.grasp_radius) continue;
      bool better = best_id == 0 || d < best_d ||
                    (d == best_d && obj.instance_id < best_id);  // tie: lowest id
      if (better) {
        best_d = d;
        best_id = obj.instance_id;
      }
    }
    if (best_id != 0) {
      out.attached = best_id;
      out.attach_rel = out.gripper.pose().inverse() * out.find(best_id)->pose;
    }
  }
  return out;
}

// Consecutive waypoints must stay within step_max; the jump from the current
// state to the first waypoint is unconstrained (stitching provides continuity
// when it matters).
inline void validate_trajectory(const Trajectory& traj, const SimConfig& cfg) {
  if (traj.empty()) throw InvalidTrajectory("trajectory must contain at least one step");
  for (std::size_t i = 1; i < traj.size(); ++i) {
    double d = distance(traj.steps[i].position, traj.steps[i - 1].position);
    if (d > cfg.step_max + 1e-9)
      throw InvalidTrajectory("step " + std::to_string(i) + " travels " +
                              detail::fmt2(d) + " m, exceeding step_max");
  }
}

// Full rollout returning the scene after every waypoint.
inline std::vector<Scene> run_trajectory(const Scene& scene, const Trajectory& traj,
                                         const SimConfig& cfg) {
  validate_trajectory(traj, cfg);
  std::vector<Scene> frames;
  frames.reserve(traj.size());
  const Scene* cur = &scene;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    try {
      frames.push_back(step_to(*cur, traj.steps[i], cfg));
    } catch (const WorkspaceViolation& e) {
      throw WorkspaceViolation(e.what(), static_cast<int>(i));
    } catch (const TableCollision& e) {
      throw TableCollision(e.what(), static_cast<int>(i));
    }
    cur = &frames.back();
  }
  return frames;
}

inline Scene execute_trajectory(const Scene& scene, const Trajectory& traj,
                                const SimConfig& cfg) {
  return run_trajectory(scene, traj, cfg).back();
}

// ---------------------------------------------------------------------------
// Transit planning

struct PlanFailure : Error {
  explicit PlanFailure(const std::string& msg) : Error(msg) {}
};

// Retreat-over-obstacles transit: ascend to a safe height, translate, descend.
// The safe height starts at z_table + z_safe_offset and raises by z_safe_step
// until all waypoints clear every inflated obstacle box, with two exemptions:
// the ascent column may stay inside boxes that already contain the start
// position, and the descent column inside boxes containing the goal (you must
// be allowed to leave and to arrive).  Aperture is held at the start value.
inline Trajectory plan_transit(const GripperState& from, const GripperState& to,
                               const Scene& scene, const SimConfig& cfg) {
  if (to.position.z < cfg.z_table)
    throw PlanFailure("transit goal below the table plane");

  if (distance(from.position, to.position) < 1e-12 &&
      from.orientation.angle_to(to.orientation) < 1e-12) {
    Trajectory t;
    GripperState g = to;
    g.aperture = from.aperture;
    t.steps.push_back(g);
    return t;
  }

  std::vector<Aabb> boxes;
  for (const ObjectSpec& obj : scene.objects) {
    if (scene.attached && *scene.attached == obj.instance_id) continue;
    boxes.push_back(object_aabb(obj).inflated(cfg.clearance));
  }
  std::vector<bool> start_ok(boxes.size()), goal_ok(boxes.size());
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    start_ok[i] = boxes[i].contains(from.position);
    goal_ok[i] = boxes[i].contains(to.position);
  }

  double z_base = std::max({cfg.z_table + cfg.z_safe_offset, from.position.z,
                            to.position.z});
  for (double z_s = z_base; z_s <= cfg.z_max + 1e-9; z_s += cfg.z_safe_step) {
    z_s = std::min(z_s, cfg.z_max);
    enum Leg { ascend, cruise, descend };
    std::vector<std::pair<GripperState, Leg>> waypoints;
    auto line = [&](const Vec3& a, const Vec3& b, const UnitQuat& qa, const UnitQuat& qb,
                    Leg leg) {
      double len = distance(a, b);
      double ang = qa.angle_to(qb);
      if (len < 1e-15 && ang < 1e-12) return;  // avoid duplicate waypoints
      int n = std::max({1, static_cast<int>(std::ceil(len / cfg.substep)),
                        static_cast<int>(std::ceil(ang / 0.3))});
      for (int i = 1; i <= n; ++i) {
        double u = static_cast<double>(i) / n;
        GripperState g;
        g.position = a + (b - a) * u;
        g.orientation = slerp(qa, qb, u);
        g.aperture = from.aperture;
        waypoints.push_back({g, leg});
      }
    };
    Vec3 up_top{from.position.x, from.position.y, z_s};
    Vec3 down_top{to.position.x, to.position.y, z_s};
    waypoints.push_back({from, ascend});
    line(from.position, up_top, from.orientation, from.orientation, ascend);
    line(up_top, down_top, from.orientation, to.orientation, cruise);
    line(down_top, to.position, to.orientation, to.orientation, descend);

    bool clear = true;
    for (const auto& [g, leg] : waypoints) {
      for (std::size_t b = 0; b < boxes.size() && clear; ++b) {
        if (leg == ascend && start_ok[b]) continue;
        if (leg == descend && goal_ok[b]) continue;
        if (boxes[b].contains(g.position)) clear = false;
      }
      if (!clear) break;
    }
    if (!clear) {
      if (z_s >= cfg.z_max) break;
      continue;
    }

    Trajectory t;
    t.steps.reserve(waypoints.size());
    for (const auto& [g, leg] : waypoints) t.steps.push_back(g);
    return t;
  }
  throw PlanFailure("no collision-free transit below the workspace ceiling");
}

}  // namespace gsl
