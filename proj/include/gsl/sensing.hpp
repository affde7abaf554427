#pragma once
// Synthetic segmented point-cloud sensor.  Surface points are sampled in
// antithetic pairs (p, -p) in the object-local frame, which pins the sample
// centroid to the object center to ~1e-15 instead of the 1/sqrt(n) Monte Carlo
// wobble; mask-as-frame anchoring relies on that.  Sampling is keyed by
// scene.rng_seed and the instance id, so re-observing an unchanged scene
// reproduces the same points bit for bit; the observation seed only drives
// noise.

#include <cstdint>
#include <string>
#include <vector>

#include "gsl/geometry.hpp"
#include "gsl/rng.hpp"
#include "gsl/world.hpp"

namespace gsl {

struct SensorNoise {
  double jitter_sigma = 0.0;     // isotropic Gaussian per coordinate [m]
  double dropout_prob = 0.0;     // per-point drop chance in [0, 1)
  double mask_bleed_prob = 0.0;  // per-point relabel-to-nearest-other chance
  bool merge_parts = false;      // collapse child labels into the parent's
};

struct LabeledCloud {
  PointCloud points;
  std::vector<int> labels;  // instance id per point, parallel to points
};

struct EmptyMask : Error {
  explicit EmptyMask(int id)
      : Error("no points labeled with instance id " + std::to_string(id)) {}
};

// Uniform surface samples in the local (centered) frame, in antithetic pairs.
// An odd count gets one unpaired trailing sample.
inline std::vector<Vec3> local_surface_samples(const Shape& shape, int count,
                                               std::uint64_t seed) {
  std::vector<Vec3> pts;
  pts.reserve(count);
  Rng rng(seed);
  auto emit_pair = [&](const Vec3& p) {
    pts.push_back(p);
    if (static_cast<int>(pts.size()) < count) pts.push_back(-p);
  };
  int pairs = (count + 1) / 2;
  switch (shape.kind) {
    case ShapeKind::box: {
      Vec3 h = shape.half_extents();
      double axy = shape.dims.x * shape.dims.y;
      double axz = shape.dims.x * shape.dims.z;
      double ayz = shape.dims.y * shape.dims.z;
      double total = axy + axz + ayz;
      for (int i = 0; i < pairs; ++i) {
        double pick = rng.uniform(0.0, total);
        double u = rng.uniform01(), v = rng.uniform01();
        if (pick < axy)
          emit_pair({(u - 0.5) * shape.dims.x, (v - 0.5) * shape.dims.y, h.z});
        else if (pick < axy + axz)
          emit_pair({(u - 0.5) * shape.dims.x, h.y, (v - 0.5) * shape.dims.z});
        else
          emit_pair({h.x, (u - 0.5) * shape.dims.y, (v - 0.5) * shape.dims.z});
      }
      break;
    }
    case ShapeKind::cylinder: {
      double r = shape.dims.x, hgt = shape.dims.y;
      double aside = 2.0 * M_PI * r * hgt;
      double acap = M_PI * r * r;
      double total = aside + 2.0 * acap;
      for (int i = 0; i < pairs; ++i) {
        double pick = rng.uniform(0.0, total);
        double u = rng.uniform01(), v = rng.uniform01();
        double theta = 2.0 * M_PI * u;
        if (pick < aside) {
          emit_pair({r * std::cos(theta), r * std::sin(theta), (v - 0.5) * hgt});
        } else {
          double rho = r * std::sqrt(v);
          double zc = pick < aside + acap ? hgt * 0.5 : -hgt * 0.5;
          emit_pair({rho * std::cos(theta), rho * std::sin(theta), zc});
        }
      }
      break;
    }
    case ShapeKind::sphere: {
      double r = shape.dims.x;
      for (int i = 0; i < pairs; ++i) {
        double z = rng.uniform(-1.0, 1.0);
        double theta = 2.0 * M_PI * rng.uniform01();
        double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
        emit_pair({r * rho * std::cos(theta), r * rho * std::sin(theta), r * z});
      }
      break;
    }
  }
  return pts;
}

// World-frame surface points of one object in its current articulated state.
inline std::vector<Vec3> object_surface_points(const ObjectSpec& obj, int count,
                                               std::uint64_t sample_seed) {
  std::vector<Vec3> local = local_surface_samples(obj.shape, count, sample_seed);
  std::vector<Vec3> world;
  world.reserve(local.size());
  bool hinged = obj.articulation.kind == ArticulationKind::hinged_lid;
  double top_z = obj.shape.half_extents().z;
  RigidTransform lid = hinged ? obj.lid_transform() : RigidTransform::identity();
  for (const Vec3& p : local) {
    Vec3 w = obj.pose.apply(p);
    // The top face of a hinged box is the lid; it swings about the hinge line.
    if (hinged && std::fabs(p.z - top_z) < 1e-9) w = lid.apply(w);
    world.push_back(w);
  }
  return world;
}

inline std::uint64_t object_sample_seed(const Scene& scene, int instance_id) {
  return mix_seed(scene.rng_seed, static_cast<std::uint64_t>(instance_id));
}

// Render the scene into a labeled cloud: points_per_object samples per object
// in scene list order, then jitter -> dropout -> mask bleed -> part merge.
// Dropout never removes an object entirely (its first point survives).
inline LabeledCloud observe(const Scene& scene, const SensorNoise& noise,
                            std::uint64_t seed, const SimConfig& cfg) {
  LabeledCloud cloud;
  std::vector<int> object_start;
  for (const ObjectSpec& obj : scene.objects) {
    object_start.push_back(static_cast<int>(cloud.points.size()));
    for (const Vec3& w :
         object_surface_points(obj, cfg.points_per_object, object_sample_seed(scene, obj.instance_id))) {
      cloud.points.points.push_back(w);
      cloud.labels.push_back(obj.instance_id);
    }
  }

  if (noise.jitter_sigma > 0.0) {
    Rng jr(mix_seed(seed, 101));
    for (Vec3& p : cloud.points.points) {
      p.x += noise.jitter_sigma * jr.normal();
      p.y += noise.jitter_sigma * jr.normal();
      p.z += noise.jitter_sigma * jr.normal();
    }
  }

  if (noise.dropout_prob > 0.0) {
    Rng dr(mix_seed(seed, 102));
    std::vector<bool> keep(cloud.points.size());
    for (std::size_t i = 0; i < keep.size(); ++i)
      keep[i] = dr.uniform01() >= noise.dropout_prob;
    for (std::size_t oi = 0; oi < scene.objects.size(); ++oi) {
      int lo = object_start[oi];
      int hi = oi + 1 < object_start.size() ? object_start[oi + 1]
                                            : static_cast<int>(cloud.points.size());
      bool any = false;
      for (int i = lo; i < hi; ++i) any = any || keep[i];
      if (!any && lo < hi) keep[lo] = true;
    }
    LabeledCloud filtered;
    for (std::size_t i = 0; i < cloud.points.size(); ++i) {
      if (!keep[i]) continue;
      filtered.points.points.push_back(cloud.points.points[i]);
      filtered.labels.push_back(cloud.labels[i]);
    }
    cloud = std::move(filtered);
  }

  if (noise.mask_bleed_prob > 0.0 && scene.objects.size() >= 2) {
    Rng br(mix_seed(seed, 103));
    for (std::size_t i = 0; i < cloud.points.size(); ++i) {
      if (br.uniform01() >= noise.mask_bleed_prob) continue;
      int cur = cloud.labels[i];
      int best = cur;
      double best_d = 0.0;
      for (const ObjectSpec& obj : scene.objects) {
        if (obj.instance_id == cur) continue;
        double d = distance(cloud.points.points[i], obj.pose.translation);
        if (best == cur || d < best_d) {
          best = obj.instance_id;
          best_d = d;
        }
      }
      cloud.labels[i] = best;
    }
  }

  if (noise.merge_parts) {
    for (int& label : cloud.labels) {
      const ObjectSpec* obj = scene.find(label);
      if (obj != nullptr && obj->parent_id != 0) label = obj->parent_id;
    }
  }
  return cloud;
}

// Extract the points carrying one instance label, order preserved.
inline PointCloud lift_mask(const LabeledCloud& cloud, int instance_id) {
  PointCloud out;
  for (std::size_t i = 0; i < cloud.points.size(); ++i)
    if (cloud.labels[i] == instance_id) out.points.push_back(cloud.points.points[i]);
  if (out.empty()) throw EmptyMask(instance_id);
  return out;
}

// Per-label sample centroid; used for grounding qualifiers.
inline Vec3 label_centroid(const LabeledCloud& cloud, int instance_id) {
  return centroid(lift_mask(cloud, instance_id));
}

// Soft target-indicator channel: exp(-d/scale) with d the distance to the
// nearest target-labeled point.  Target points get exactly 1.
inline std::vector<double> target_heat_channel(const LabeledCloud& cloud,
                                               int instance_id, double scale) {
  PointCloud target = lift_mask(cloud, instance_id);
  NearestNeighborGrid grid(target);
  std::vector<double> heat;
  heat.reserve(cloud.points.size());
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    if (cloud.labels[i] == instance_id) {
      heat.push_back(1.0);
    } else {
      double d = grid.nearest(cloud.points.points[i]).dist;
      heat.push_back(std::exp(-d / scale));
    }
  }
  return heat;
}

}  // namespace gsl
