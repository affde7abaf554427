#pragma once
// Named pipeline variants.  Each variant is a fixed combination of discovery,
// policy, and execution switches; apply_ablation maps the name onto options so
// every consumer (executor, benchmark, CLI) agrees on what a variant means.

#include <array>
#include <optional>
#include <string>

#include "gsl/policy.hpp"
#include "gsl/skill_discovery.hpp"

namespace gsl {

enum class AblationVariant {
  complete,              // full pipeline
  regular_skill,         // segments keep their approach; no stitching
  no_canonicalization,   // anchors pinned to the origin
  action_interface,      // whole-scene clouds instead of target masks
  heatmap_interface,     // whole-scene clouds plus a target-distance channel
};

inline constexpr int kVariantCount = 5;

inline const char* to_string(AblationVariant v) {
  switch (v) {
    case AblationVariant::complete: return "complete";
    case AblationVariant::regular_skill: return "regular_skill";
    case AblationVariant::no_canonicalization: return "no_canonicalization";
    case AblationVariant::action_interface: return "action_interface";
    case AblationVariant::heatmap_interface: return "heatmap_interface";
  }
  return "?";
}

inline std::optional<AblationVariant> variant_from_string(const std::string& s) {
  for (AblationVariant v :
       {AblationVariant::complete, AblationVariant::regular_skill,
        AblationVariant::no_canonicalization, AblationVariant::action_interface,
        AblationVariant::heatmap_interface})
    if (s == to_string(v)) return v;
  return std::nullopt;
}

inline const std::array<AblationVariant, kVariantCount>& all_variants() {
  static const std::array<AblationVariant, kVariantCount> k = {
      AblationVariant::complete, AblationVariant::regular_skill,
      AblationVariant::no_canonicalization, AblationVariant::action_interface,
      AblationVariant::heatmap_interface};
  return k;
}

struct PipelineOptions {
  DiscoveryOptions discovery;
  PolicyOptions policy;
  bool stitching = true;  // plan a transit onto each retrieved trajectory
};

inline PipelineOptions apply_ablation(AblationVariant v, PipelineOptions base = {}) {
  switch (v) {
    case AblationVariant::complete:
      break;
    case AblationVariant::regular_skill:
      base.discovery.from_episode_start = true;
      base.stitching = false;
      break;
    case AblationVariant::no_canonicalization:
      base.discovery.anchor = AnchorMode::origin;
      break;
    // Both interface ablations drop the object-centric frame entirely: whole
    // scene clouds, world-frame trajectories.
    case AblationVariant::action_interface:
      base.discovery.interface_mode = InterfaceMode::scene;
      base.discovery.anchor = AnchorMode::origin;
      break;
    case AblationVariant::heatmap_interface:
      base.discovery.interface_mode = InterfaceMode::scene_heatmap;
      base.discovery.anchor = AnchorMode::origin;
      break;
  }
  return base;
}

}  // namespace gsl
