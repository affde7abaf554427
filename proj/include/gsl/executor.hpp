#pragma once
// Closed-loop task execution.  For each plan step: observe, ground the query,
// canonicalize the observation around a fresh anchor, retrieve the nearest
// canonical skill, put the trajectory back into the world frame, stitch a
// transit onto its first pose, and run everything through the simulator.
// Every failure mode maps to a stable error kind string so benchmark reports
// can aggregate them.

#include <cstdint>
#include <string>
#include <vector>

#include "gsl/ablation.hpp"
#include "gsl/demonstrations.hpp"
#include "gsl/planner.hpp"
#include "gsl/policy.hpp"
#include "gsl/sensing.hpp"
#include "gsl/skill_discovery.hpp"
#include "gsl/world.hpp"

namespace gsl {

struct ExecOptions {
  PipelineOptions pipeline;
  SensorNoise noise;  // test-time observation noise
};

struct StepLog {
  int plan_step = 0;
  SkillLabel label = SkillLabel::press;
  int target_id = 0;
  int entry = -1;                  // retrieved library index
  double retrieval_distance = 0.0;
  int waypoints = 0;               // executed steps including the transit
};

struct EpisodeResult {
  std::string task_id;
  std::uint64_t seed = 0;
  bool success = false;
  int steps_completed = 0;   // fully executed plan steps
  std::string error_kind;    // empty when execution ran to the end
  std::string error;
  std::vector<StepLog> log;
};

// Transit from the current gripper state onto the first pose of a retrieved
// trajectory.  Thin wrapper so executor and demos share the same planner.
inline Trajectory connect_skills(const Scene& scene, const GripperState& to,
                                 const SimConfig& cfg) {
  return plan_transit(scene.gripper, to, scene, cfg);
}

inline EpisodeResult execute_task(const TaskInstance& task, const SkillLibrary& lib,
                                  std::uint64_t seed, const SimConfig& cfg,
                                  const ExecOptions& opt = {},
                                  std::vector<GripperState>* trace = nullptr) {
  EpisodeResult result;
  result.task_id = task.task_id;
  result.seed = seed;

  Scene scene = task.scene;
  if (trace != nullptr) trace->push_back(scene.gripper);

  int executed = 0;
  auto run_steps = [&](const Trajectory& traj, std::size_t from) {
    for (std::size_t i = from; i < traj.size(); ++i) {
      scene = step_to(scene, traj.steps[i], cfg);
      if (trace != nullptr) trace->push_back(scene.gripper);
      ++executed;
    }
  };

  try {
    if (!task.description.empty()) {
      SkillPlan plan = parse_task(task.description);
      for (int cursor = 0; cursor < static_cast<int>(plan.steps.size()); ++cursor) {
        LabeledCloud cloud = observe(scene, opt.noise, mix_seed(seed, 300 + cursor), cfg);
        GroundedStep gs = next_step(plan, cursor, cloud, scene, cfg);

        PointCloud query;
        std::vector<double> channel;
        switch (opt.pipeline.discovery.interface_mode) {
          case InterfaceMode::mask:
            query = lift_mask(cloud, gs.target_id);
            break;
          case InterfaceMode::scene:
            query = cloud.points;
            break;
          case InterfaceMode::scene_heatmap:
            query = cloud.points;
            channel = target_heat_channel(cloud, gs.target_id,
                                          opt.pipeline.discovery.heat_scale);
            break;
        }
        Vec3 anchor = opt.pipeline.discovery.anchor == AnchorMode::origin
                          ? Vec3{0, 0, 0}
                          : centroid(query);

        RetrievalResult rr =
            infer_canonical_trajectory(lib, gs.label, canonicalize_cloud(query, anchor),
                                       channel, opt.pipeline.policy);
        Trajectory world = un_canonicalize(rr.trajectory, anchor);

        StepLog entry;
        entry.plan_step = cursor;
        entry.label = gs.label;
        entry.target_id = gs.target_id;
        entry.entry = rr.entry;
        entry.retrieval_distance = rr.distance;

        int before = executed;
        if (opt.pipeline.stitching && !world.empty()) {
          Trajectory transit = connect_skills(scene, world.steps[0], cfg);
          run_steps(transit, 1);  // step 0 duplicates the current state
        }
        run_steps(world, 0);
        entry.waypoints = executed - before;
        result.log.push_back(entry);
        result.steps_completed = cursor + 1;
      }
    }
    result.success = check_success(task, scene);
  } catch (const WorkspaceViolation& e) {
    result.error_kind = "workspace";
    result.error = e.what();
  } catch (const TableCollision& e) {
    result.error_kind = "collision";
    result.error = e.what();
  } catch (const SimError& e) {
    result.error_kind = "sim";
    result.error = e.what();
  } catch (const PlanFailure& e) {
    result.error_kind = "transit";
    result.error = e.what();
  } catch (const GroundingError& e) {
    result.error_kind = "grounding";
    result.error = e.what();
  } catch (const PlanExhausted& e) {
    result.error_kind = "plan";
    result.error = e.what();
  } catch (const EmptyLibrary& e) {
    result.error_kind = "empty_library";
    result.error = e.what();
  } catch (const EmptyMask& e) {
    result.error_kind = "perception";
    result.error = e.what();
  } catch (const EmptyCloud& e) {
    result.error_kind = "perception";
    result.error = e.what();
  } catch (const ParseError& e) {
    result.error_kind = "parse";
    result.error = e.what();
  } catch (const PredicateError& e) {
    result.error_kind = "predicate";
    result.error = e.what();
  } catch (const Error& e) {
    result.error_kind = "error";
    result.error = e.what();
  }
  return result;
}

}  // namespace gsl
