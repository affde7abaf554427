#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "gsl/demonstrations.hpp"

using namespace gsl;

namespace {

// Deliberately separate keyframe implementation: set-based, recomputes speeds
// inline, checks the three rules independently.
std::vector<int> keyframe_oracle(const Trajectory& t, const SimConfig& cfg) {
  int m = static_cast<int>(t.size());
  std::set<int> keep{0, m - 1};
  auto speed = [&](int i) {
    return (t.steps[i].position - t.steps[i - 1].position).norm();
  };
  for (int i = 1; i < m; ++i) {
    if (t.steps[i - 1].aperture >= cfg.grasp_close_threshold &&
        t.steps[i].aperture < cfg.grasp_close_threshold)
      keep.insert(i);
    if (t.steps[i - 1].aperture <= cfg.release_threshold &&
        t.steps[i].aperture > cfg.release_threshold)
      keep.insert(i);
  }
  for (int i = 1; i <= m - 2; ++i) {
    if (speed(i) >= cfg.v_eps) continue;
    double left = i == 1 ? 0.0 : speed(i - 1);  // step 0 has no travel
    if (left > speed(i) && speed(i + 1) > speed(i)) keep.insert(i);
  }
  return {keep.begin(), keep.end()};
}

GripperState home() {
  GripperState g;
  g.position = {0.22, -0.22, 0.26};
  return g;
}

Scene base_scene(std::uint64_t seed) {
  Scene s;
  s.gripper = home();
  s.rng_seed = seed;
  return s;
}

ObjectSpec button_at(int id, const Vec3& p, const std::string& color = "red") {
  ObjectSpec o;
  o.instance_id = id;
  o.category = Category::button;
  o.color = color;
  o.shape = {ShapeKind::cylinder, {0.025, 0.04, 0}};
  o.pose = RigidTransform::translate(p);
  o.articulation.kind = ArticulationKind::pressable;
  o.articulation.travel = 0.015;
  return o;
}

ObjectSpec block_at(int id, const Vec3& p, const std::string& color = "blue") {
  ObjectSpec o;
  o.instance_id = id;
  o.category = Category::block;
  o.color = color;
  o.shape = {ShapeKind::box, {0.04, 0.04, 0.05}};
  o.pose = RigidTransform::translate(p);
  return o;
}

TaskInstance press_task(double x, double y) {
  TaskInstance t;
  t.task_id = "press_button";
  t.description = "press(button[color=red])";
  t.scene = base_scene(11);
  t.scene.objects.push_back(button_at(1, {x, y, 0.02}));
  t.success.atoms.push_back({SuccessAtom::Kind::articulation_at_least, 1, 0, 0.9});
  return t;
}

TaskInstance pick_lift_task(double x, double y) {
  TaskInstance t;
  t.task_id = "pick_lift";
  t.description = "pick(block[color=blue]) then lift(block[color=blue])";
  t.scene = base_scene(12);
  t.scene.objects.push_back(block_at(1, {x, y, 0.025}));
  t.success.atoms.push_back({SuccessAtom::Kind::height_at_least, 1, 0, 0.125});
  return t;
}

TaskInstance close_jar_task(double x, double y) {
  TaskInstance t;
  t.task_id = "close_jar";
  t.description = "pick(lid[color=gray]) then screw(jar[color=green])";
  t.scene = base_scene(13);
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

ObjectSpec cabinet_at(int id, double x, double y) {
  ObjectSpec o;
  o.instance_id = id;
  o.category = Category::box;
  o.color = "brown";
  o.shape = {ShapeKind::box, {0.16, 0.14, 0.12}};
  o.pose = RigidTransform::translate({x, y, 0.06});
  return o;
}

ObjectSpec drawer_at(int id, int parent, double x, double y, double value) {
  ObjectSpec o;
  o.instance_id = id;
  o.category = Category::drawer;
  o.color = "brown";
  o.shape = {ShapeKind::box, {0.14, 0.12, 0.05}};
  o.articulation.kind = ArticulationKind::prismatic;
  o.articulation.axis = {0, -1, 0};
  o.articulation.range = 0.10;
  o.articulation_value = value;
  o.parent_id = parent;
  o.pose = RigidTransform::translate({x, y - 0.01 - value * 0.10, 0.035});
  return o;
}

TaskInstance open_drawer_task(double x, double y) {
  TaskInstance t;
  t.task_id = "open_drawer";
  t.description = "pull_out(drawer[color=brown])";
  t.scene = base_scene(14);
  t.scene.objects.push_back(cabinet_at(1, x, y));
  t.scene.objects.push_back(drawer_at(2, 1, x, y, 0.0));
  t.success.atoms.push_back({SuccessAtom::Kind::articulation_at_least, 2, 0, 0.9});
  return t;
}

TaskInstance push_back_task(double x, double y) {
  TaskInstance t;
  t.task_id = "push_back_drawer";
  t.description = "push_back(drawer[color=brown])";
  t.scene = base_scene(15);
  t.scene.objects.push_back(cabinet_at(1, x, y));
  t.scene.objects.push_back(drawer_at(2, 1, x, y, 1.0));
  t.success.atoms.push_back({SuccessAtom::Kind::articulation_at_most, 2, 0, 0.1});
  return t;
}

TaskInstance place_cup_task(double x, double y) {
  TaskInstance t;
  t.task_id = "place_cup";
  t.description = "pick(cup[color=pink]) then place(box[color=orange])";
  t.scene = base_scene(16);
  ObjectSpec cup;
  cup.instance_id = 1;
  cup.category = Category::cup;
  cup.color = "pink";
  cup.shape = {ShapeKind::cylinder, {0.03, 0.07, 0}};
  cup.pose = RigidTransform::translate({x, y, 0.035});
  t.scene.objects.push_back(cup);
  ObjectSpec coaster;
  coaster.instance_id = 2;
  coaster.category = Category::box;
  coaster.color = "orange";
  coaster.shape = {ShapeKind::box, {0.10, 0.10, 0.02}};
  coaster.pose = RigidTransform::translate({x, y - 0.14, 0.01});
  t.scene.objects.push_back(coaster);
  t.success.atoms.push_back({SuccessAtom::Kind::near_object, 1, 2, 0.08});
  t.success.atoms.push_back({SuccessAtom::Kind::not_attached, 0, 0, 0});
  return t;
}

ObjectSpec hinged_box_at(int id, double x, double y, double value) {
  ObjectSpec o;
  o.instance_id = id;
  o.category = Category::box;
  o.color = "yellow";
  o.shape = {ShapeKind::box, {0.16, 0.12, 0.10}};
  o.pose = RigidTransform::translate({x, y, 0.05});
  o.articulation.kind = ArticulationKind::hinged_lid;
  o.articulation.open_angle = M_PI / 3.0;
  o.articulation_value = value;
  return o;
}

TaskInstance open_box_task(double x, double y) {
  TaskInstance t;
  t.task_id = "open_box";
  t.description = "open(box[color=yellow])";
  t.scene = base_scene(17);
  t.scene.objects.push_back(hinged_box_at(1, x, y, 0.0));
  t.success.atoms.push_back({SuccessAtom::Kind::articulation_at_least, 1, 0, 0.9});
  return t;
}

TaskInstance close_box_task(double x, double y) {
  TaskInstance t;
  t.task_id = "close_box";
  t.description = "close(box[color=yellow])";
  t.scene = base_scene(18);
  t.scene.objects.push_back(hinged_box_at(1, x, y, 1.0));
  t.success.atoms.push_back({SuccessAtom::Kind::articulation_at_most, 1, 0, 0.1});
  return t;
}

Trajectory random_walk(Rng& rng, int m) {
  Trajectory t;
  GripperState g;
  g.position = {0, 0, 0.2};
  t.steps.push_back(g);
  for (int i = 1; i < m; ++i) {
    double v;
    switch (rng.uniform_index(4)) {
      case 0: v = rng.uniform(0.0, 5e-4); break;      // below v_eps
      case 1: v = rng.uniform(5e-4, 2e-3); break;     // straddles v_eps
      default: v = rng.uniform(5e-3, 0.02); break;    // normal motion
    }
    Vec3 dir{rng.normal(), rng.normal(), rng.normal()};
    if (dir.norm() < 1e-9) dir = {1, 0, 0};
    g.position = g.position + dir.normalized() * v;
    if (rng.uniform01() < 0.15) g.aperture = rng.uniform01() < 0.5 ? 0.05 : 1.0;
    t.steps.push_back(g);
  }
  return t;
}

}  // namespace

TEST_CASE("keyframes match an independent oracle on random walks") {
  SimConfig cfg;
  Rng rng(987);
  for (int trial = 0; trial < 100; ++trial) {
    Trajectory t = random_walk(rng, 2 + static_cast<int>(rng.uniform_index(80)));
    CHECK(extract_keyframes(t, cfg) == keyframe_oracle(t, cfg));
  }
}

TEST_CASE("keyframe edge cases") {
  SimConfig cfg;
  Trajectory t;
  CHECK_THROWS_AS(extract_keyframes(t, cfg), TooShort);
  t.steps.push_back(GripperState{});
  CHECK_THROWS_AS(extract_keyframes(t, cfg), TooShort);
  t.steps.push_back(GripperState{});
  CHECK(extract_keyframes(t, cfg) == std::vector<int>{0, 1});

  SECTION("stationary grasp appears once") {
    Trajectory u;
    GripperState g;
    g.position = {0, 0, 0.1};
    u.steps.push_back(g);
    g.position.x += 0.01;
    u.steps.push_back(g);
    g.aperture = 0.05;  // close without moving: crossing and speed minimum
    u.steps.push_back(g);
    g.position.x += 0.01;
    u.steps.push_back(g);
    CHECK(extract_keyframes(u, cfg) == std::vector<int>{0, 2, 3});
  }

  SECTION("slow plateau is not isolated") {
    Trajectory u;
    GripperState g;
    u.steps.push_back(g);
    for (int i = 0; i < 4; ++i) {
      g.position.x += 5e-4;  // equal slow speeds: no strict neighbors
      u.steps.push_back(g);
    }
    g.position.x += 0.01;
    u.steps.push_back(g);
    CHECK(extract_keyframes(u, cfg) == std::vector<int>{0, 5});
  }

  SECTION("isolated dip is kept") {
    Trajectory u;
    GripperState g;
    u.steps.push_back(g);
    g.position.x += 0.01;
    u.steps.push_back(g);
    g.position.x += 1e-4;
    u.steps.push_back(g);
    g.position.x += 0.01;
    u.steps.push_back(g);
    CHECK(extract_keyframes(u, cfg) == std::vector<int>{0, 2, 3});
  }
}

TEST_CASE("trajectory builder respects substep bounds") {
  SimConfig cfg;
  GripperState start;
  start.position = {0.1, 0.1, 0.2};
  TrajectoryBuilder b(start, cfg);
  b.move_to({-0.2, 0.05, 0.03});
  b.set_aperture(0.05);
  b.move_to({-0.2, 0.05, 0.25}, UnitQuat::from_yaw(1.2));
  validate_trajectory(b.trajectory(), cfg);
  CHECK(b.last().aperture == 0.05);
  CHECK(distance(b.last().position, {-0.2, 0.05, 0.25}) < 1e-12);
  for (std::size_t i = 1; i < b.trajectory().size(); ++i) {
    CHECK(distance(b.trajectory().steps[i].position,
                   b.trajectory().steps[i - 1].position) <= cfg.substep + 1e-12);
  }

  SECTION("append drops a duplicated seam state") {
    int n = b.size();
    Trajectory t;
    t.steps.push_back(b.last());
    GripperState g = b.last();
    g.position.x += 0.01;
    t.steps.push_back(g);
    b.append(t);
    CHECK(b.size() == n + 1);
  }
}

TEST_CASE("press expert saturates the button") {
  SimConfig cfg;
  TaskInstance task = press_task(-0.16, 0.0);
  Demo d = generate_demo(task, 500, cfg);
  validate_trajectory(d.trajectory, cfg);
  CHECK(d.frames.size() == d.trajectory.size());
  CHECK(d.frames.back().find(1)->articulation_value == 1.0);
  CHECK(d.keyframes.front() == 0);
  CHECK(d.keyframes.back() == static_cast<int>(d.trajectory.size()) - 1);
}

TEST_CASE("pick and lift expert raises the block") {
  SimConfig cfg;
  TaskInstance task = pick_lift_task(-0.16, 0.0);
  Demo d = generate_demo(task, 501, cfg);
  const Scene& last = d.frames.back();
  CHECK(last.attached.has_value());
  CHECK(last.find(1)->pose.translation.z == Catch::Approx(0.025 + 0.18).margin(1e-9));

  // The grasp closure must be a keyframe.
  int close_idx = -1;
  for (std::size_t i = 1; i < d.trajectory.size(); ++i)
    if (d.trajectory.steps[i].aperture < 0.2 && d.trajectory.steps[i - 1].aperture >= 0.2)
      close_idx = static_cast<int>(i);
  REQUIRE(close_idx > 0);
  CHECK(std::count(d.keyframes.begin(), d.keyframes.end(), close_idx) == 1);
}

TEST_CASE("screw expert seats and tightens the lid") {
  SimConfig cfg;
  TaskInstance task = close_jar_task(-0.16, 0.0);
  Demo d = generate_demo(task, 502, cfg);
  const Scene& last = d.frames.back();
  CHECK(last.find(1)->articulation_value == 1.0);
  CHECK(distance(last.find(2)->pose.translation, last.find(1)->pose.translation) < 0.08);
  CHECK_FALSE(last.attached.has_value());  // released after tightening
}

TEST_CASE("drawer experts pull out and push back") {
  SimConfig cfg;
  Demo out = generate_demo(open_drawer_task(-0.16, 0.05), 503, cfg);
  CHECK(out.frames.back().find(2)->articulation_value == 1.0);
  Demo back = generate_demo(push_back_task(-0.16, 0.05), 504, cfg);
  CHECK(back.frames.back().find(2)->articulation_value == 0.0);
}

TEST_CASE("place expert sets the cup on the target") {
  SimConfig cfg;
  TaskInstance task = place_cup_task(-0.16, 0.06);
  Demo d = generate_demo(task, 505, cfg);
  const Scene& last = d.frames.back();
  CHECK_FALSE(last.attached.has_value());
  const ObjectSpec* cup = last.find(1);
  CHECK(cup->pose.translation.x == Catch::Approx(-0.16).margin(1e-9));
  CHECK(cup->pose.translation.y == Catch::Approx(0.06 - 0.14).margin(1e-9));
  CHECK(cup->pose.translation.z == Catch::Approx(0.02 + 0.035 + 0.002).margin(1e-9));
}

TEST_CASE("lid experts follow the hinge arc both ways") {
  SimConfig cfg;
  Demo open = generate_demo(open_box_task(-0.14, 0.0), 506, cfg);
  CHECK(open.frames.back().find(1)->articulation_value == 1.0);
  Demo close = generate_demo(close_box_task(-0.14, 0.0), 507, cfg);
  CHECK(close.frames.back().find(1)->articulation_value == 0.0);
}

TEST_CASE("demo generation is deterministic") {
  SimConfig cfg;
  Demo a = generate_demo(close_jar_task(-0.2, 0.02), 42, cfg);
  Demo b = generate_demo(close_jar_task(-0.2, 0.02), 42, cfg);
  REQUIRE(a.trajectory.size() == b.trajectory.size());
  for (std::size_t i = 0; i < a.trajectory.size(); ++i) {
    CHECK(a.trajectory.steps[i].position.x == b.trajectory.steps[i].position.x);
    CHECK(a.trajectory.steps[i].position.z == b.trajectory.steps[i].position.z);
    CHECK(a.trajectory.steps[i].aperture == b.trajectory.steps[i].aperture);
  }
  CHECK(a.keyframes == b.keyframes);
}

TEST_CASE("demo files round-trip byte for byte") {
  SimConfig cfg;
  std::vector<Demo> demos;
  demos.push_back(generate_demo(press_task(-0.16, 0.0), 600, cfg));
  demos.push_back(generate_demo(pick_lift_task(-0.22, -0.04), 601, cfg));
  const std::string path = "demos_roundtrip.gsl";
  save_demos(demos, path);

  std::vector<Demo> loaded = load_demos(path, cfg);
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0].task_id == "press_button");
  CHECK(loaded[0].description == demos[0].description);
  CHECK(loaded[0].seed == 600);
  CHECK(loaded[0].keyframes == demos[0].keyframes);
  REQUIRE(loaded[1].frames.size() == demos[1].frames.size());
  // Re-simulated frames reproduce the recorded rollout exactly.
  const Scene& a = loaded[1].frames.back();
  const Scene& b = demos[1].frames.back();
  CHECK(a.find(1)->pose.translation.x == b.find(1)->pose.translation.x);
  CHECK(a.find(1)->pose.translation.z == b.find(1)->pose.translation.z);
  CHECK(a.attached == b.attached);

  const std::string path2 = "demos_roundtrip2.gsl";
  save_demos(loaded, path2);
  std::ifstream f1(path), f2(path2);
  std::stringstream s1, s2;
  s1 << f1.rdbuf();
  s2 << f2.rdbuf();
  CHECK(s1.str() == s2.str());
  CHECK(s1.str().rfind("gsl-demos v1\n", 0) == 0);

  SECTION("bad magic raises IoError") {
    std::ofstream bad("demos_bad.gsl");
    bad << "gsl-demos v2\n";
    bad.close();
    CHECK_THROWS_AS(load_demos("demos_bad.gsl", cfg), IoError);
  }
}

TEST_CASE("expert rollouts are translation equivariant") {
  SimConfig cfg;
  TaskInstance base = pick_lift_task(-0.2, 0.0);
  TaskInstance moved = base.translated_xy(0.07, -0.05);
  moved.task_id = "pick_lift_moved";
  Demo a = generate_demo(base, 700, cfg);
  Demo b = generate_demo(moved, 700, cfg);
  REQUIRE(a.trajectory.size() == b.trajectory.size());
  for (std::size_t i = 0; i < a.trajectory.size(); ++i) {
    CHECK(b.trajectory.steps[i].position.x - a.trajectory.steps[i].position.x ==
          Catch::Approx(0.07).margin(1e-9));
    CHECK(b.trajectory.steps[i].position.y - a.trajectory.steps[i].position.y ==
          Catch::Approx(-0.05).margin(1e-9));
  }
}
