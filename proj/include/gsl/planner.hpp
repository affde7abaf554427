#pragma once
// High-level step sequencing and object grounding.  Grounding works from the
// observed labeled cloud, not privileged scene state: candidate selection uses
// the per-label sample centroids, so noise in the observation flows through to
// qualifier resolution exactly as a real perception stack would behave.

#include <string>
#include <vector>

#include "gsl/error.hpp"
#include "gsl/grammar.hpp"
#include "gsl/sensing.hpp"
#include "gsl/world.hpp"

namespace gsl {

struct GroundingError : Error {
  enum class Kind { no_match, ambiguous };
  Kind kind;
  int candidates;

  GroundingError(Kind kind_, int candidates_, const std::string& query_text)
      : Error(kind_ == Kind::no_match
                  ? "no object matches query " + query_text
                  : std::to_string(candidates_) + " objects match query " + query_text +
                        " and no qualifier disambiguates"),
        kind(kind_),
        candidates(candidates_) {}
};

struct PlanExhausted : Error {
  explicit PlanExhausted(int cursor, int size)
      : Error("plan cursor " + std::to_string(cursor) + " outside plan of " +
              std::to_string(size) + " steps") {}
};

struct GroundedStep {
  SkillLabel label = SkillLabel::press;
  int target_id = 0;
};

inline std::string size_class(const ObjectSpec& obj, const SimConfig& cfg) {
  return obj.shape.max_extent() < cfg.size_large_threshold ? "small" : "large";
}

namespace detail {
inline std::string query_text(const ObjectQuery& q) {
  SkillPlan tmp;
  tmp.steps.push_back({SkillLabel::press, q});
  std::string s = unparse_plan(tmp);
  return s.substr(6, s.size() - 7);  // strip "press(" and ")"
}
}  // namespace detail

// Resolve a query to one instance id visible in the cloud.  Attribute filters
// must all match; with several survivors a qualifier picks one (ties break to
// the lowest instance id), otherwise the ambiguity is an error.
inline int ground_object(const ObjectQuery& query, const LabeledCloud& cloud,
                         const Scene& scene, const SimConfig& cfg) {
  std::vector<int> seen;  // unique labels in first-appearance order
  for (int label : cloud.labels) {
    bool dup = false;
    for (int s : seen) dup = dup || s == label;
    if (!dup) seen.push_back(label);
  }

  std::vector<int> candidates;
  for (int id : seen) {
    const ObjectSpec* obj = scene.find(id);
    if (obj == nullptr) continue;
    if (query.category != to_string(obj->category)) continue;
    bool ok = true;
    for (const auto& [key, value] : query.attributes) {
      if (key == "color") ok = ok && obj->color == value;
      else if (key == "size") ok = ok && size_class(*obj, cfg) == value;
      else ok = false;
    }
    if (ok) candidates.push_back(id);
  }

  if (candidates.empty())
    throw GroundingError(GroundingError::Kind::no_match, 0, detail::query_text(query));
  if (candidates.size() == 1 && query.qualifier == Qualifier::none) return candidates[0];
  if (query.qualifier == Qualifier::none)
    throw GroundingError(GroundingError::Kind::ambiguous,
                         static_cast<int>(candidates.size()), detail::query_text(query));

  // Qualifier key: smaller is better for leftmost/nearest, larger for the rest.
  auto key_of = [&](int id) {
    Vec3 c = label_centroid(cloud, id);
    switch (query.qualifier) {
      case Qualifier::leftmost: return c.x;
      case Qualifier::rightmost: return -c.x;
      case Qualifier::nearest: return distance(c, scene.gripper.position);
      case Qualifier::farthest: return -distance(c, scene.gripper.position);
      default: return 0.0;
    }
  };
  int best = candidates[0];
  double best_key = key_of(best);
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    double k = key_of(candidates[i]);
    if (k < best_key || (k == best_key && candidates[i] < best)) {
      best = candidates[i];
      best_key = k;
    }
  }
  return best;
}

inline GroundedStep next_step(const SkillPlan& plan, int cursor, const LabeledCloud& cloud,
                              const Scene& scene, const SimConfig& cfg) {
  if (cursor < 0 || cursor >= static_cast<int>(plan.steps.size()))
    throw PlanExhausted(cursor, static_cast<int>(plan.steps.size()));
  const PlanStep& step = plan.steps[cursor];
  return {step.label, ground_object(step.query, cloud, scene, cfg)};
}

}  // namespace gsl
