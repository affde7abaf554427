#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

#include "gsl/skill_discovery.hpp"

using namespace gsl;

namespace {

GripperState home() {
  GripperState g;
  g.position = {0.22, -0.22, 0.26};
  return g;
}

ObjectSpec button_at(int id, const Vec3& p) {
  ObjectSpec o;
  o.instance_id = id;
  o.category = Category::button;
  o.color = "red";
  o.shape = {ShapeKind::cylinder, {0.025, 0.04, 0}};
  o.pose = RigidTransform::translate(p);
  o.articulation.kind = ArticulationKind::pressable;
  o.articulation.travel = 0.015;
  return o;
}

TaskInstance press_task(double x, double y) {
  TaskInstance t;
  t.task_id = "press_button";
  t.description = "press(button[color=red])";
  t.scene.gripper = home();
  t.scene.rng_seed = 21;
  t.scene.objects.push_back(button_at(1, {x, y, 0.02}));
  t.success.atoms.push_back({SuccessAtom::Kind::articulation_at_least, 1, 0, 0.9});
  return t;
}

TaskInstance pick_lift_task(double x, double y) {
  TaskInstance t;
  t.task_id = "pick_lift";
  t.description = "pick(block[color=blue]) then lift(block[color=blue])";
  t.scene.gripper = home();
  t.scene.rng_seed = 22;
  ObjectSpec o;
  o.instance_id = 1;
  o.category = Category::block;
  o.color = "blue";
  o.shape = {ShapeKind::box, {0.04, 0.04, 0.05}};
  o.pose = RigidTransform::translate({x, y, 0.025});
  t.scene.objects.push_back(o);
  t.success.atoms.push_back({SuccessAtom::Kind::height_at_least, 1, 0, 0.125});
  return t;
}

TaskInstance close_jar_task(double x, double y) {
  TaskInstance t;
  t.task_id = "close_jar";
  t.description = "pick(lid[color=gray]) then screw(jar[color=green])";
  t.scene.gripper = home();
  t.scene.rng_seed = 23;
  ObjectSpec jar;
  jar.instance_id = 1;
  jar.category = Category::jar;
  jar.color = "green";
  jar.shape = {ShapeKind::cylinder, {0.04, 0.12, 0}};
  jar.pose = RigidTransform::translate({x, y, 0.06});
  jar.articulation.kind = ArticulationKind::screw_cap;
  t.scene.objects.push_back(jar);
  ObjectSpec lid;
  lid.instance_id = 2;
  lid.category = Category::lid;
  lid.color = "gray";
  lid.shape = {ShapeKind::cylinder, {0.045, 0.012, 0}};
  lid.pose = RigidTransform::translate({x, y + 0.12, 0.006});
  t.scene.objects.push_back(lid);
  t.success.atoms.push_back({SuccessAtom::Kind::near_object, 2, 1, 0.08});
  t.success.atoms.push_back({SuccessAtom::Kind::articulation_at_least, 1, 0, 0.99});
  return t;
}

// Distance from the gripper to the target's sampled surface, recomputed here
// so segmentation boundaries are cross-checked by a second implementation.
double dist_to_object(const Scene& frame, int id, const SimConfig& cfg) {
  const ObjectSpec* obj = frame.find(id);
  std::vector<Vec3> pts =
      object_surface_points(*obj, cfg.points_per_object, object_sample_seed(frame, id));
  double best = 1e18;
  for (const Vec3& p : pts) best = std::min(best, distance(frame.gripper.position, p));
  return best;
}

}  // namespace

TEST_CASE("press demo yields one segment with proximity-gated start") {
  SimConfig cfg;
  Demo d = generate_demo(press_task(-0.16, 0.0), 900, cfg);
  auto segs = segment_demo(d, cfg);
  REQUIRE(segs.size() == 1);
  const Segment& s = segs[0];
  CHECK(s.label == SkillLabel::press);
  CHECK(s.target_id == 1);

  // Start: first frame within d_near of the button; checked independently.
  int expect_start = -1;
  for (int i = 0; i < static_cast<int>(d.frames.size()); ++i) {
    if (dist_to_object(d.frames[i], 1, cfg) <= cfg.d_near) {
      expect_start = i;
      break;
    }
  }
  CHECK(s.start == expect_start);
  CHECK(s.start > 0);  // the gripper starts far away

  // End: first frame whose articulation value crosses into saturation.
  CHECK(d.frames[s.end].find(1)->articulation_value >= 0.999);
  CHECK(d.frames[s.end - 1].find(1)->articulation_value < 0.999);
  CHECK(s.end < static_cast<int>(d.frames.size()) - 1);  // overshoot tail excluded
}

TEST_CASE("pick then lift splits into ordered segments") {
  SimConfig cfg;
  Demo d = generate_demo(pick_lift_task(-0.2, 0.04), 901, cfg);
  auto segs = segment_demo(d, cfg);
  REQUIRE(segs.size() == 2);
  CHECK(segs[0].label == SkillLabel::pick);
  CHECK(segs[1].label == SkillLabel::lift);
  CHECK(segs[0].end >= segs[0].start);
  CHECK(segs[1].start == segs[0].end + 1);

  // Pick ends exactly at the attach transition.
  CHECK(d.frames[segs[0].end].attached == std::optional<int>(1));
  CHECK_FALSE(d.frames[segs[0].end - 1].attached.has_value());

  // Lift ends at the first frame 0.12 above the segment start.
  double z0 = d.trajectory.steps[segs[1].start].position.z;
  CHECK(d.trajectory.steps[segs[1].end].position.z - z0 >= cfg.lift_complete);
  CHECK(d.trajectory.steps[segs[1].end - 1].position.z - z0 < cfg.lift_complete);
}

TEST_CASE("jar demo segments into pick and screw") {
  SimConfig cfg;
  Demo d = generate_demo(close_jar_task(-0.16, 0.0), 902, cfg);
  auto segs = segment_demo(d, cfg);
  REQUIRE(segs.size() == 2);
  CHECK(segs[0].label == SkillLabel::pick);
  CHECK(segs[0].target_id == 2);
  CHECK(segs[1].label == SkillLabel::screw);
  CHECK(segs[1].target_id == 1);
  CHECK(d.frames[segs[1].end].find(1)->articulation_value >= 0.999);
  CHECK(d.frames[segs[1].end - 1].find(1)->articulation_value < 0.999);
}

TEST_CASE("episode-start segmentation drops the proximity gate") {
  SimConfig cfg;
  Demo d = generate_demo(pick_lift_task(-0.2, 0.04), 903, cfg);
  DiscoveryOptions opt;
  opt.from_episode_start = true;
  auto segs = segment_demo(d, cfg, opt);
  REQUIRE(segs.size() == 2);
  CHECK(segs[0].start == 0);
  CHECK(segs[1].start == segs[0].end + 1);

  auto gated = segment_demo(d, cfg);
  CHECK(segs[0].end == gated[0].end);
  CHECK(segs[0].start < gated[0].start);
}

TEST_CASE("missing interaction raises NoInteraction") {
  SimConfig cfg;
  Demo d;
  d.task_id = "bad";
  d.description = "press(button[color=red])";
  d.seed = 904;
  d.initial.gripper = home();
  d.initial.rng_seed = 24;
  d.initial.objects.push_back(button_at(1, {-0.16, 0.0, 0.02}));
  TrajectoryBuilder b(d.initial.gripper, cfg);
  b.move_to({0.3, -0.22, 0.26});  // wanders away, never approaches
  d.trajectory = b.trajectory();
  d.frames = run_trajectory(d.initial, d.trajectory, cfg);
  CHECK_THROWS_AS(segment_demo(d, cfg), NoInteraction);
  CHECK_THROWS_WITH(segment_demo(d, cfg),
                    Catch::Matchers::ContainsSubstring("never approaches"));
}

TEST_CASE("canonicalization round-trips within 1e-12") {
  Rng rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    Trajectory t;
    for (int i = 0; i < 5; ++i) {
      GripperState g;
      g.position = {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(0, 1)};
      g.aperture = rng.uniform01();
      t.steps.push_back(g);
    }
    Vec3 anchor{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
    Trajectory rt = un_canonicalize(canonicalize_trajectory(t, anchor), anchor);
    for (int i = 0; i < 5; ++i)
      CHECK(distance(rt.steps[i].position, t.steps[i].position) < 1e-12);
  }
}

TEST_CASE("library entries are centroid-anchored canonical segments") {
  SimConfig cfg;
  Demo d = generate_demo(press_task(-0.16, 0.0), 905, cfg);
  SkillLibrary lib = build_library({d}, {}, cfg);
  REQUIRE(lib.entries.size() == 1);
  const CanonicalSkill& e = lib.entries[0];
  CHECK(e.label == SkillLabel::press);
  CHECK(e.source_task == "press_button");
  CHECK(static_cast<int>(e.cloud.size()) == cfg.points_per_object);
  CHECK(centroid(e.cloud).norm() < 1e-9);
  CHECK(e.channel.empty());

  auto segs = segment_demo(d, cfg);
  CHECK(static_cast<int>(e.trajectory.size()) == segs[0].end - segs[0].start + 1);
  Vec3 back = e.trajectory.steps[0].position + e.anchor;
  CHECK(distance(back, d.trajectory.steps[segs[0].start].position) < 1e-12);

  SECTION("origin anchoring stores world coordinates") {
    DiscoveryOptions opt;
    opt.anchor = AnchorMode::origin;
    SkillLibrary raw = build_library({d}, opt, cfg);
    REQUIRE(raw.entries.size() == 1);
    CHECK(raw.entries[0].anchor.norm() == 0.0);
    CHECK(distance(raw.entries[0].trajectory.steps[0].position,
                   d.trajectory.steps[segs[0].start].position) < 1e-15);
    CHECK(distance(centroid(raw.entries[0].cloud),
                   d.frames[segs[0].start].find(1)->pose.translation) < 1e-6);
  }
}

TEST_CASE("anchor augmentation adds on-object anchors deterministically") {
  SimConfig cfg;
  Demo d = generate_demo(press_task(-0.16, 0.0), 906, cfg);
  DiscoveryOptions opt;
  opt.augment_count = 3;
  SkillLibrary lib = build_library({d}, opt, cfg, 99);
  REQUIRE(lib.entries.size() == 4);

  // Augmented anchors are literal cloud points, so each canonical cloud
  // contains its anchor at the origin.
  for (int k = 1; k < 4; ++k) {
    const CanonicalSkill& e = lib.entries[k];
    bool member = false;
    for (std::size_t i = 0; i < e.cloud.size(); ++i)
      if (e.cloud.points[i].norm() < 1e-12) member = true;
    CHECK(member);
  }

  SkillLibrary again = build_library({d}, opt, cfg, 99);
  REQUIRE(again.entries.size() == 4);
  for (int k = 0; k < 4; ++k)
    CHECK(distance(again.entries[k].anchor, lib.entries[k].anchor) == 0.0);

  SkillLibrary other = build_library({d}, opt, cfg, 100);
  bool any_differ = false;
  for (int k = 1; k < 4; ++k)
    if (distance(other.entries[k].anchor, lib.entries[k].anchor) > 0) any_differ = true;
  CHECK(any_differ);
}

TEST_CASE("canonical entries are translation invariant") {
  SimConfig cfg;
  TaskInstance base = close_jar_task(-0.2, 0.0);
  TaskInstance moved = base.translated_xy(0.09, -0.06);
  Demo da = generate_demo(base, 907, cfg);
  Demo db = generate_demo(moved, 907, cfg);
  SkillLibrary la = build_library({da}, {}, cfg);
  SkillLibrary lb = build_library({db}, {}, cfg);
  REQUIRE(la.entries.size() == lb.entries.size());
  for (std::size_t k = 0; k < la.entries.size(); ++k) {
    const CanonicalSkill& a = la.entries[k];
    const CanonicalSkill& b = lb.entries[k];
    REQUIRE(a.cloud.size() == b.cloud.size());
    REQUIRE(a.trajectory.size() == b.trajectory.size());
    for (std::size_t i = 0; i < a.cloud.size(); ++i)
      CHECK(distance(a.cloud.points[i], b.cloud.points[i]) < 1e-9);
    for (std::size_t i = 0; i < a.trajectory.size(); ++i) {
      CHECK(distance(a.trajectory.steps[i].position, b.trajectory.steps[i].position) <
            1e-9);
      CHECK(a.trajectory.steps[i].aperture == b.trajectory.steps[i].aperture);
    }
  }
}

TEST_CASE("scene and heatmap interfaces widen the stored cloud") {
  SimConfig cfg;
  Demo d = generate_demo(close_jar_task(-0.16, 0.0), 908, cfg);

  DiscoveryOptions scene_opt;
  scene_opt.interface_mode = InterfaceMode::scene;
  SkillLibrary ls = build_library({d}, scene_opt, cfg);
  REQUIRE(ls.entries.size() == 2);
  CHECK(static_cast<int>(ls.entries[0].cloud.size()) == 2 * cfg.points_per_object);
  CHECK(ls.entries[0].channel.empty());

  DiscoveryOptions heat_opt;
  heat_opt.interface_mode = InterfaceMode::scene_heatmap;
  SkillLibrary lh = build_library({d}, heat_opt, cfg);
  const CanonicalSkill& e = lh.entries[0];  // pick(lid): target is the lid
  REQUIRE(e.channel.size() == e.cloud.size());
  int ones = 0;
  double off_max = 0.0;
  for (std::size_t i = 0; i < e.channel.size(); ++i) {
    if (e.channel[i] == 1.0) ++ones;
    else off_max = std::max(off_max, e.channel[i]);
  }
  CHECK(ones == cfg.points_per_object);
  CHECK(off_max < 1.0);
}

TEST_CASE("confidence flags fire on doctored segments") {
  SimConfig cfg;
  Demo d = generate_demo(press_task(-0.16, 0.0), 909, cfg);
  auto segs = segment_demo(d, cfg);
  CHECK(flag_low_confidence(d, segs, cfg).empty());

  SECTION("too short") {
    std::vector<Segment> bad = segs;
    bad[0].start = bad[0].end - 1;
    auto flags = flag_low_confidence(d, bad, cfg);
    REQUIRE(flags.size() == 1);
    CHECK(flags[0].reason == FlagReason::too_short);
    CHECK(flags[0].segment_index == 0);
  }

  SECTION("far approach") {
    std::vector<Segment> bad = segs;
    bad[0].start = 0;
    bad[0].end = 3;  // early transit frames, nowhere near the button
    auto flags = flag_low_confidence(d, bad, cfg);
    bool far = false;
    for (const auto& f : flags) far = far || f.reason == FlagReason::far_approach;
    CHECK(far);
  }

  SECTION("ambiguous completion on chattering values") {
    Demo synth;
    synth.task_id = "synth";
    synth.description = "press(button[color=red])";
    synth.seed = 1;
    synth.initial.gripper = home();
    synth.initial.rng_seed = 25;
    synth.initial.objects.push_back(button_at(1, {-0.16, 0.0, 0.02}));
    GripperState g = synth.initial.gripper;
    for (int i = 0; i < 6; ++i) synth.trajectory.steps.push_back(g);
    synth.frames.assign(6, synth.initial);
    double values[6] = {0.0, 1.0, 0.5, 1.0, 1.0, 1.0};
    for (int i = 0; i < 6; ++i)
      synth.frames[i].objects[0].articulation_value = values[i];
    std::vector<Segment> seg{{0, 5, SkillLabel::press, 1}};
    auto flags = flag_low_confidence(synth, seg, cfg);
    bool ambiguous = false;
    for (const auto& f : flags)
      ambiguous = ambiguous || f.reason == FlagReason::ambiguous_completion;
    CHECK(ambiguous);
  }
}

TEST_CASE("library files round-trip byte for byte") {
  SimConfig cfg;
  Demo d1 = generate_demo(press_task(-0.16, 0.0), 910, cfg);
  Demo d2 = generate_demo(close_jar_task(-0.22, 0.02), 911, cfg);
  DiscoveryOptions heat;
  heat.interface_mode = InterfaceMode::scene_heatmap;
  SkillLibrary lib = build_library({d1}, {}, cfg);
  SkillLibrary more = build_library({d2}, heat, cfg);
  lib.entries.insert(lib.entries.end(), more.entries.begin(), more.entries.end());

  const std::string path = "skills_roundtrip.gsl";
  save_library(lib, path);
  SkillLibrary loaded = load_library(path);
  REQUIRE(loaded.entries.size() == lib.entries.size());
  CHECK(loaded.entries[0].label == SkillLabel::press);
  CHECK(loaded.entries[1].label == SkillLabel::pick);
  CHECK(loaded.entries[2].label == SkillLabel::screw);
  CHECK(loaded.entries[2].channel.size() == loaded.entries[2].cloud.size());

  const std::string path2 = "skills_roundtrip2.gsl";
  save_library(loaded, path2);
  std::ifstream f1(path), f2(path2);
  std::stringstream s1, s2;
  s1 << f1.rdbuf();
  s2 << f2.rdbuf();
  CHECK(s1.str() == s2.str());

  CHECK(lib.of(SkillLabel::pick) == std::vector<int>{1});
  CHECK(lib.of(SkillLabel::place).empty());

  std::ofstream bad("skills_bad.gsl");
  bad << "gsl-demos v1\n";
  bad.close();
  CHECK_THROWS_AS(load_library("skills_bad.gsl"), IoError);
}
