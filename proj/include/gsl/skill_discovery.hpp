#pragma once
// Skill discovery: slice demonstrations into per-skill segments using the task
// plan as weak supervision, then store each segment in an object-centric
// canonical frame.  A segment begins when the gripper first comes near the
// step's target and ends at that step's completion event in the simulated
// frames.  Canonicalization subtracts a translation anchor from both the
// observed point cloud and the trajectory; retrieval later replays the stored
// motion relative to a fresh anchor.

#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "gsl/demonstrations.hpp"
#include "gsl/error.hpp"
#include "gsl/geometry.hpp"
#include "gsl/grammar.hpp"
#include "gsl/planner.hpp"
#include "gsl/sensing.hpp"
#include "gsl/world.hpp"

namespace gsl {

struct Segment {
  int start = 0;  // first step of the skill (inclusive)
  int end = 0;    // completion-event step (inclusive)
  SkillLabel label = SkillLabel::press;
  int target_id = 0;
};

struct NoInteraction : Error {
  int plan_step;
  NoInteraction(int plan_step_, SkillLabel label, const std::string& why)
      : Error("plan step " + std::to_string(plan_step_) + " (" +
              std::string(to_string(label)) + "): " + why),
        plan_step(plan_step_) {}
};

enum class InterfaceMode { mask, scene, scene_heatmap };
enum class AnchorMode { centroid, random_on_object, origin };

struct DiscoveryOptions {
  bool from_episode_start = false;  // skip proximity gating of segment starts
  AnchorMode anchor = AnchorMode::centroid;
  InterfaceMode interface_mode = InterfaceMode::mask;
  int augment_count = 0;     // extra randomly-anchored copies per segment
  double heat_scale = 0.05;  // target-distance decay for scene_heatmap
  SensorNoise noise;         // applied to the stored observations
};

namespace detail {

// Deterministic surface resample of one object at its pose in a given frame.
inline PointCloud frame_object_points(const Scene& frame, int id, const SimConfig& cfg) {
  const ObjectSpec* obj = frame.find(id);
  PointCloud out;
  out.points = object_surface_points(*obj, cfg.points_per_object,
                                     object_sample_seed(frame, id));
  return out;
}

inline double gripper_object_distance(const Scene& frame, int id, const SimConfig& cfg) {
  PointCloud pts = frame_object_points(frame, id, cfg);
  double best = std::numeric_limits<double>::infinity();
  for (const Vec3& p : pts.points) best = std::min(best, distance(frame.gripper.position, p));
  return best;
}

// Saturating articulations count as done just below their limit so that float
// accumulation cannot keep an event from firing.
inline constexpr double kValueHigh = 0.999;
inline constexpr double kValueLow = 0.001;

inline bool completion_at(const Demo& demo, const Segment& seg, int j, const SimConfig& cfg) {
  if (j < 1) return false;
  const Scene& prev = demo.frames[j - 1];
  const Scene& cur = demo.frames[j];
  switch (seg.label) {
    case SkillLabel::press:
    case SkillLabel::screw:
    case SkillLabel::pull_out:
    case SkillLabel::open: {
      double a = prev.find(seg.target_id)->articulation_value;
      double b = cur.find(seg.target_id)->articulation_value;
      return a < kValueHigh && b >= kValueHigh;
    }
    case SkillLabel::push_back:
    case SkillLabel::close: {
      double a = prev.find(seg.target_id)->articulation_value;
      double b = cur.find(seg.target_id)->articulation_value;
      return a > kValueLow && b <= kValueLow;
    }
    case SkillLabel::pick:
      return cur.attached == std::optional<int>(seg.target_id) &&
             prev.attached != std::optional<int>(seg.target_id);
    case SkillLabel::place:
      return prev.attached.has_value() && !cur.attached.has_value();
    case SkillLabel::lift:
      return demo.trajectory.steps[j].position.z -
                 demo.trajectory.steps[seg.start].position.z >=
             cfg.lift_complete;
  }
  return false;
}

}  // namespace detail

// Ordered, non-overlapping segments covering each plan step of the demo.
// Grounding reruns on clean observations of the frame where the search
// resumes, mirroring how the demonstration was produced.
inline std::vector<Segment> segment_demo(const Demo& demo, const SimConfig& cfg,
                                         const DiscoveryOptions& opt = {}) {
  SkillPlan plan = parse_task(demo.description);
  int m = static_cast<int>(demo.trajectory.size());
  std::vector<Segment> out;
  int from = 0;
  for (int cursor = 0; cursor < static_cast<int>(plan.steps.size()); ++cursor) {
    if (from >= m)
      throw NoInteraction(cursor, plan.steps[cursor].label, "trajectory ended early");
    LabeledCloud cloud =
        observe(demo.frames[from], {}, mix_seed(demo.seed, 50 + cursor), cfg);
    GroundedStep gs = next_step(plan, cursor, cloud, demo.frames[from], cfg);

    Segment seg;
    seg.label = gs.label;
    seg.target_id = gs.target_id;
    seg.start = -1;
    if (opt.from_episode_start) {
      seg.start = from;
    } else {
      for (int i = from; i < m; ++i) {
        if (detail::gripper_object_distance(demo.frames[i], gs.target_id, cfg) <=
            cfg.d_near) {
          seg.start = i;
          break;
        }
      }
    }
    if (seg.start < 0)
      throw NoInteraction(cursor, gs.label, "gripper never approaches the target");

    seg.end = -1;
    for (int j = std::max(seg.start, 1); j < m; ++j) {
      if (detail::completion_at(demo, seg, j, cfg)) {
        seg.end = j;
        break;
      }
    }
    if (seg.end < 0)
      throw NoInteraction(cursor, gs.label, "no completion event before trajectory end");
    out.push_back(seg);
    from = seg.end + 1;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Canonicalization

inline PointCloud canonicalize_cloud(const PointCloud& cloud, const Vec3& anchor) {
  return translate_cloud(cloud, anchor * -1.0);
}

inline Trajectory canonicalize_trajectory(const Trajectory& traj, const Vec3& anchor) {
  Trajectory out = traj;
  for (GripperState& g : out.steps) g.position = g.position - anchor;
  return out;
}

inline Trajectory un_canonicalize(const Trajectory& traj, const Vec3& anchor) {
  Trajectory out = traj;
  for (GripperState& g : out.steps) g.position = g.position + anchor;
  return out;
}

// ---------------------------------------------------------------------------
// Library

struct CanonicalSkill {
  SkillLabel label = SkillLabel::press;
  PointCloud cloud;             // canonical observation
  std::vector<double> channel;  // per-point target heat; empty unless heatmap mode
  Trajectory trajectory;        // canonical motion, endpoints inclusive
  Vec3 anchor;                  // world anchor removed at build time
  std::string source_task;
  int source_segment = 0;
};

struct SkillLibrary {
  std::vector<CanonicalSkill> entries;

  std::vector<int> of(SkillLabel label) const {
    std::vector<int> idx;
    for (std::size_t i = 0; i < entries.size(); ++i)
      if (entries[i].label == label) idx.push_back(static_cast<int>(i));
    return idx;
  }
};

// One library entry per segment (plus augment_count randomly re-anchored
// copies).  The stored observation is taken at the segment's first step.
inline SkillLibrary build_library(const std::vector<Demo>& demos,
                                  const DiscoveryOptions& opt, const SimConfig& cfg,
                                  std::uint64_t seed = 7) {
  SkillLibrary lib;
  for (const Demo& demo : demos) {
    std::vector<Segment> segs = segment_demo(demo, cfg, opt);
    for (std::size_t si = 0; si < segs.size(); ++si) {
      const Segment& seg = segs[si];
      LabeledCloud obs = observe(demo.frames[seg.start], opt.noise,
                                 mix_seed(demo.seed, 200 + static_cast<int>(si)), cfg);

      PointCloud pts;
      std::vector<double> channel;
      switch (opt.interface_mode) {
        case InterfaceMode::mask:
          pts = lift_mask(obs, seg.target_id);
          break;
        case InterfaceMode::scene:
          pts = obs.points;
          break;
        case InterfaceMode::scene_heatmap:
          pts = obs.points;
          channel = target_heat_channel(obs, seg.target_id, opt.heat_scale);
          break;
      }

      std::vector<Vec3> anchors;
      if (opt.anchor == AnchorMode::origin) {
        anchors.push_back({0, 0, 0});
      } else {
        anchors.push_back(centroid(pts));
        Rng rng(mix_seed(mix_seed(seed, demo.seed), static_cast<int>(si)));
        for (int k = 0; k < opt.augment_count; ++k)
          anchors.push_back(pts.points[rng.uniform_index(pts.size())]);
      }

      Trajectory slice;
      slice.steps.assign(demo.trajectory.steps.begin() + seg.start,
                         demo.trajectory.steps.begin() + seg.end + 1);

      for (const Vec3& anchor : anchors) {
        CanonicalSkill entry;
        entry.label = seg.label;
        entry.cloud = canonicalize_cloud(pts, anchor);
        entry.channel = channel;
        entry.trajectory = canonicalize_trajectory(slice, anchor);
        entry.anchor = anchor;
        entry.source_task = demo.task_id;
        entry.source_segment = static_cast<int>(si);
        lib.entries.push_back(std::move(entry));
      }
    }
  }
  return lib;
}

// ---------------------------------------------------------------------------
// Confidence flags

enum class FlagReason { too_short, far_approach, ambiguous_completion };

inline const char* to_string(FlagReason r) {
  switch (r) {
    case FlagReason::too_short: return "too_short";
    case FlagReason::far_approach: return "far_approach";
    case FlagReason::ambiguous_completion: return "ambiguous_completion";
  }
  return "?";
}

struct ConfidenceFlag {
  int segment_index = 0;
  FlagReason reason = FlagReason::too_short;
};

// Heuristics for demonstrations that segmented but look unreliable:
// (a) fewer than three steps, (b) the gripper never came near the target
// anywhere inside the segment, (c) the completion condition fired more than
// once (value chattering around the threshold).
inline std::vector<ConfidenceFlag> flag_low_confidence(const Demo& demo,
                                                       const std::vector<Segment>& segs,
                                                       const SimConfig& cfg) {
  std::vector<ConfidenceFlag> flags;
  for (std::size_t si = 0; si < segs.size(); ++si) {
    const Segment& seg = segs[si];
    int idx = static_cast<int>(si);
    if (seg.end - seg.start + 1 < 3) flags.push_back({idx, FlagReason::too_short});

    double nearest = std::numeric_limits<double>::infinity();
    for (int i = seg.start; i <= seg.end; ++i)
      nearest = std::min(nearest,
                         detail::gripper_object_distance(demo.frames[i], seg.target_id, cfg));
    if (nearest > cfg.d_near) flags.push_back({idx, FlagReason::far_approach});

    int events = 0;
    for (int j = std::max(seg.start, 1); j <= seg.end; ++j)
      if (detail::completion_at(demo, seg, j, cfg)) ++events;
    if (events > 1) flags.push_back({idx, FlagReason::ambiguous_completion});
  }
  return flags;
}

// ---------------------------------------------------------------------------
// Serialization: "gsl-skills v1", one '|'-separated record per line.

inline void save_library(const SkillLibrary& lib, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError(path, "cannot open for writing");
  out << "gsl-skills v1\n";
  for (const CanonicalSkill& e : lib.entries) {
    out << to_string(e.label) << '|' << e.source_task << '|' << e.source_segment << '|';
    out << detail::fmt_real(e.anchor.x) << ',' << detail::fmt_real(e.anchor.y) << ','
        << detail::fmt_real(e.anchor.z) << '|';
    for (std::size_t i = 0; i < e.trajectory.size(); ++i) {
      if (i > 0) out << ';';
      out << detail::encode_gripper(e.trajectory.steps[i]);
    }
    out << '|';
    for (std::size_t i = 0; i < e.cloud.size(); ++i) {
      const Vec3& p = e.cloud.points[i];
      if (i > 0) out << ';';
      out << detail::fmt_real(p.x) << ',' << detail::fmt_real(p.y) << ','
          << detail::fmt_real(p.z);
    }
    out << '|';
    for (std::size_t i = 0; i < e.channel.size(); ++i) {
      if (i > 0) out << ';';
      out << detail::fmt_real(e.channel[i]);
    }
    out << '\n';
  }
  if (!out) throw IoError(path, "write failure");
}

inline SkillLibrary load_library(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path, "cannot open");
  std::string line;
  if (!std::getline(in, line) || line != "gsl-skills v1")
    throw IoError(path, "bad magic, expected 'gsl-skills v1'");
  SkillLibrary lib;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto f = detail::split(line, '|');
    if (f.size() != 7) throw IoError(path, "skill record needs 7 fields");
    CanonicalSkill e;
    auto label = skill_from_string(f[0]);
    if (!label) throw IoError(path, "unknown skill label '" + f[0] + "'");
    e.label = *label;
    e.source_task = f[1];
    e.source_segment = static_cast<int>(detail::parse_int(f[2], path));
    auto a = detail::split(f[3], ',');
    if (a.size() != 3) throw IoError(path, "anchor needs 3 fields");
    e.anchor = {detail::parse_real(a[0], path), detail::parse_real(a[1], path),
                detail::parse_real(a[2], path)};
    for (const std::string& s : detail::split(f[4], ';'))
      e.trajectory.steps.push_back(detail::decode_gripper(s, path));
    if (!f[5].empty()) {
      for (const std::string& s : detail::split(f[5], ';')) {
        auto p = detail::split(s, ',');
        if (p.size() != 3) throw IoError(path, "cloud point needs 3 fields");
        e.cloud.points.push_back({detail::parse_real(p[0], path),
                                  detail::parse_real(p[1], path),
                                  detail::parse_real(p[2], path)});
      }
    }
    if (!f[6].empty())
      for (const std::string& s : detail::split(f[6], ';'))
        e.channel.push_back(detail::parse_real(s, path));
    lib.entries.push_back(std::move(e));
  }
  return lib;
}

}  // namespace gsl
