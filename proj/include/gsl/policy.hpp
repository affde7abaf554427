#pragma once
// Retrieval low-level policy.  Given a canonical query cloud and a skill
// label, pick the nearest library entry under chamfer distance and return its
// canonical trajectory, optionally aligned by principal-axis rotation
// canonicalization and/or ICP refinement.  Ties within a small epsilon resolve
// to the lowest library index so that retrieval stays stable under the float
// noise introduced by translation.

#include <array>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gsl/error.hpp"
#include "gsl/geometry.hpp"
#include "gsl/grammar.hpp"
#include "gsl/skill_discovery.hpp"

namespace gsl {

// ---------------------------------------------------------------------------
// Skill embedding (one-hot over the fixed vocabulary)

using SkillEmbedding = std::array<double, kSkillCount>;

struct UnknownSkill : Error {
  std::string name;
  explicit UnknownSkill(const std::string& name_)
      : Error("unknown skill '" + name_ + "'"), name(name_) {}
};

inline SkillEmbedding embed_skill(SkillLabel label) {
  SkillEmbedding e{};
  e[static_cast<int>(label)] = 1.0;
  return e;
}

inline SkillEmbedding embed_skill(const std::string& name) {
  auto label = skill_from_string(name);
  if (!label) throw UnknownSkill(name);
  return embed_skill(*label);
}

// ---------------------------------------------------------------------------
// Retrieval

struct EmptyLibrary : Error {
  SkillLabel label;
  explicit EmptyLibrary(SkillLabel label_)
      : Error("library holds no entries for skill '" +
              std::string(to_string(label_)) + "'"),
        label(label_) {}
};

struct PolicyOptions {
  bool rotation_canonical = false;  // principal-axis alignment before matching
  bool icp_refine = false;          // local refinement of the winning entry
  int icp_iters = 10;
  double tie_epsilon = 1e-9;
};

struct RetrievalResult {
  int entry = -1;             // index into SkillLibrary::entries
  double distance = 0.0;      // chamfer between aligned entry and query
  RigidTransform alignment;   // entry frame -> query frame (identity if plain)
  Trajectory trajectory;      // entry trajectory mapped into the query frame
};

namespace detail {

// Proper sign flips of a right-handed frame: the four diagonal matrices with
// determinant +1.
inline const std::array<std::array<double, 3>, 4>& proper_flips() {
  static const std::array<std::array<double, 3>, 4> k = {{
      {{1, 1, 1}}, {{1, -1, -1}}, {{-1, 1, -1}}, {{-1, -1, 1}}}};
  return k;
}

inline RigidTransform flip_transform(const RigidTransform& frame,
                                     const std::array<double, 3>& s) {
  // S * (R p + t): rotation S R, translation S t.
  Eigen::Matrix3d R = matrix_from_quat(frame.rotation);
  Eigen::Matrix3d SR;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) SR(r, c) = s[r] * R(r, c);
  Vec3 t{s[0] * frame.translation.x, s[1] * frame.translation.y,
         s[2] * frame.translation.z};
  return {quat_from_matrix(SR), t};
}

inline Trajectory map_trajectory(const Trajectory& traj, const RigidTransform& M) {
  Trajectory out = traj;
  for (GripperState& g : out.steps) {
    g.position = M.apply(g.position);
    g.orientation = M.rotation * g.orientation;
  }
  return out;
}

}  // namespace detail

// Point-to-point ICP from src onto dst; returns the refining transform.
// Deterministic: correspondences use the exact grid nearest neighbor.
inline RigidTransform icp_refine(const PointCloud& src, const PointCloud& dst,
                                 int iters) {
  if (src.size() < 3 || dst.size() < 3) return RigidTransform::identity();
  NearestNeighborGrid grid(dst);
  Eigen::Matrix3Xd s(3, src.size()), d(3, src.size());
  for (std::size_t i = 0; i < src.size(); ++i)
    s.col(i) << src.points[i].x, src.points[i].y, src.points[i].z;

  RigidTransform T = RigidTransform::identity();
  for (int it = 0; it < iters; ++it) {
    for (std::size_t i = 0; i < src.size(); ++i) {
      Vec3 moved = T.apply(src.points[i]);
      const Vec3& hit = dst.points[grid.nearest(moved).index];
      d.col(i) << hit.x, hit.y, hit.z;
    }
    Eigen::Matrix4d M = Eigen::umeyama(s, d, false);
    Eigen::Matrix3d R = M.topLeftCorner<3, 3>();
    T.rotation = quat_from_matrix(R);
    T.translation = {M(0, 3), M(1, 3), M(2, 3)};
  }
  return T;
}

// Nearest library entry for a label.  The query cloud must already be
// canonicalized (anchor subtracted); query_channel may be empty.
inline RetrievalResult infer_canonical_trajectory(
    const SkillLibrary& lib, SkillLabel label, const PointCloud& query,
    const std::vector<double>& query_channel = {}, const PolicyOptions& opt = {}) {
  std::vector<int> candidates = lib.of(label);
  if (candidates.empty()) throw EmptyLibrary(label);
  if (query.empty()) throw EmptyCloud();

  // Query-side rotation frames (computed once).  Degenerate geometry falls
  // back to translation-only matching.
  std::vector<RigidTransform> query_frames;
  if (opt.rotation_canonical) {
    try {
      RigidTransform fq = principal_frame(query);
      for (const auto& s : detail::proper_flips())
        query_frames.push_back(detail::flip_transform(fq, s));
    } catch (const DegenerateFrame&) {
      query_frames.clear();
    }
  }

  struct Scored {
    double dist;
    RigidTransform alignment;
  };
  std::vector<Scored> scored;
  scored.reserve(candidates.size());

  for (int idx : candidates) {
    const CanonicalSkill& e = lib.entries[idx];
    bool four_d = !e.channel.empty() && !query_channel.empty();

    Scored best{0.0, RigidTransform::identity()};
    bool rotated = false;
    if (!query_frames.empty()) {
      try {
        RigidTransform fe = principal_frame(e.cloud);
        PointCloud entry_aligned = apply_transform(fe, e.cloud);
        bool first = true;
        for (const RigidTransform& fq : query_frames) {
          PointCloud query_aligned = apply_transform(fq, query);
          double dist = four_d
                            ? chamfer_distance_4d(entry_aligned, e.channel,
                                                  query_aligned, query_channel)
                            : chamfer_distance(entry_aligned, query_aligned);
          if (first || dist < best.dist) {
            best.dist = dist;
            best.alignment = fq.inverse() * fe;  // entry frame -> query frame
            first = false;
          }
        }
        rotated = true;
      } catch (const DegenerateFrame&) {
        rotated = false;
      }
    }
    if (!rotated) {
      best.dist = four_d ? chamfer_distance_4d(e.cloud, e.channel, query, query_channel)
                         : chamfer_distance(e.cloud, query);
      best.alignment = RigidTransform::identity();
    }
    scored.push_back(best);
  }

  double min_dist = scored[0].dist;
  for (const Scored& s : scored) min_dist = std::min(min_dist, s.dist);
  int pick = -1;
  for (std::size_t i = 0; i < scored.size(); ++i) {
    if (scored[i].dist <= min_dist + opt.tie_epsilon) {
      pick = static_cast<int>(i);  // lowest index within epsilon of the best
      break;
    }
  }

  RetrievalResult result;
  result.entry = candidates[pick];
  result.distance = scored[pick].dist;
  result.alignment = scored[pick].alignment;

  const CanonicalSkill& chosen = lib.entries[result.entry];
  if (opt.icp_refine) {
    PointCloud moved = apply_transform(result.alignment, chosen.cloud);
    RigidTransform refine = icp_refine(moved, query, opt.icp_iters);
    result.alignment = refine * result.alignment;
    PointCloud refined = apply_transform(result.alignment, chosen.cloud);
    result.distance = !chosen.channel.empty() && !query_channel.empty()
                          ? chamfer_distance_4d(refined, chosen.channel, query,
                                                query_channel)
                          : chamfer_distance(refined, query);
  }
  result.trajectory = detail::map_trajectory(chosen.trajectory, result.alignment);
  return result;
}

}  // namespace gsl
