#pragma once
// 3D math and point-cloud metrics.  Everything is double precision; quaternions
// keep a canonical sign so equality checks and serialization round-trips are
// stable.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "gsl/error.hpp"

namespace gsl {

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator-() const { return {-x, -y, -z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
  Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
  Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }

  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  Vec3 cross(const Vec3& o) const {
    return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
  }
  double squared_norm() const { return dot(*this); }
  double norm() const { return std::sqrt(squared_norm()); }
  Vec3 normalized() const {
    double n = norm();
    if (n < 1e-300) throw Error("cannot normalize zero-length vector");
    return *this / n;
  }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }

inline double distance(const Vec3& a, const Vec3& b) { return (a - b).norm(); }

// Unit quaternion with canonical sign: w >= 0, and if w == 0 the first nonzero
// imaginary component is positive.  Construction normalizes; a near-zero input
// norm throws.
struct UnitQuat {
  double w = 1.0, x = 0.0, y = 0.0, z = 0.0;

  UnitQuat() = default;
  UnitQuat(double w_, double x_, double y_, double z_) : w(w_), x(x_), y(y_), z(z_) {
    double n = std::sqrt(w * w + x * x + y * y + z * z);
    if (n < 1e-12) throw Error("degenerate quaternion");
    w /= n; x /= n; y /= n; z /= n;
    canonicalize_sign();
  }

  void canonicalize_sign() {
    bool flip = w < 0.0;
    if (w == 0.0) {
      if (x != 0.0) flip = x < 0.0;
      else if (y != 0.0) flip = y < 0.0;
      else flip = z < 0.0;
    }
    if (flip) { w = -w; x = -x; y = -y; z = -z; }
  }

  static UnitQuat identity() { return UnitQuat{}; }

  static UnitQuat from_axis_angle(const Vec3& axis, double angle) {
    Vec3 a = axis.normalized();
    double h = 0.5 * angle;
    double s = std::sin(h);
    return UnitQuat(std::cos(h), a.x * s, a.y * s, a.z * s);
  }

  static UnitQuat from_yaw(double yaw) { return from_axis_angle({0, 0, 1}, yaw); }

  // Hamilton product: this rotation applied after `o`.
  UnitQuat operator*(const UnitQuat& o) const {
    return UnitQuat(w * o.w - x * o.x - y * o.y - z * o.z,
                    w * o.x + x * o.w + y * o.z - z * o.y,
                    w * o.y - x * o.z + y * o.w + z * o.x,
                    w * o.z + x * o.y - y * o.x + z * o.w);
  }

  UnitQuat conjugate() const {
    UnitQuat q;
    q.w = w; q.x = -x; q.y = -y; q.z = -z;
    q.canonicalize_sign();
    return q;
  }
  UnitQuat inverse() const { return conjugate(); }

  Vec3 rotate(const Vec3& v) const {
    // v' = v + 2 q_v x (q_v x v + w v)
    Vec3 qv{x, y, z};
    Vec3 t = qv.cross(v) * 2.0;
    return v + t * w + qv.cross(t);
  }

  double dot(const UnitQuat& o) const { return w * o.w + x * o.x + y * o.y + z * o.z; }

  // Yaw of the rotated +x axis projected to the table plane.
  double yaw() const {
    Vec3 ex = rotate({1, 0, 0});
    return std::atan2(ex.y, ex.x);
  }

  double angle_to(const UnitQuat& o) const {
    double d = std::min(1.0, std::fabs(dot(o)));
    return 2.0 * std::acos(d);
  }
};

inline UnitQuat slerp(const UnitQuat& a, const UnitQuat& b, double t) {
  double d = a.dot(b);
  double sw = d < 0.0 ? -1.0 : 1.0;  // shortest arc
  d = std::fabs(d);
  double wa, wb;
  if (d > 1.0 - 1e-12) {
    wa = 1.0 - t;  // nearly parallel: nlerp is exact enough and stable
    wb = t;
  } else {
    double theta = std::acos(d);
    double s = std::sin(theta);
    wa = std::sin((1.0 - t) * theta) / s;
    wb = std::sin(t * theta) / s;
  }
  return UnitQuat(a.w * wa + sw * b.w * wb, a.x * wa + sw * b.x * wb,
                  a.y * wa + sw * b.y * wb, a.z * wa + sw * b.z * wb);
}

// Shepperd's method; input must be a proper rotation (det +1).
inline UnitQuat quat_from_matrix(const Eigen::Matrix3d& m) {
  double tr = m(0, 0) + m(1, 1) + m(2, 2);
  double w, x, y, z;
  if (tr > 0.0) {
    double s = std::sqrt(tr + 1.0) * 2.0;
    w = 0.25 * s;
    x = (m(2, 1) - m(1, 2)) / s;
    y = (m(0, 2) - m(2, 0)) / s;
    z = (m(1, 0) - m(0, 1)) / s;
  } else if (m(0, 0) > m(1, 1) && m(0, 0) > m(2, 2)) {
    double s = std::sqrt(1.0 + m(0, 0) - m(1, 1) - m(2, 2)) * 2.0;
    w = (m(2, 1) - m(1, 2)) / s;
    x = 0.25 * s;
    y = (m(0, 1) + m(1, 0)) / s;
    z = (m(0, 2) + m(2, 0)) / s;
  } else if (m(1, 1) > m(2, 2)) {
    double s = std::sqrt(1.0 + m(1, 1) - m(0, 0) - m(2, 2)) * 2.0;
    w = (m(0, 2) - m(2, 0)) / s;
    x = (m(0, 1) + m(1, 0)) / s;
    y = 0.25 * s;
    z = (m(1, 2) + m(2, 1)) / s;
  } else {
    double s = std::sqrt(1.0 + m(2, 2) - m(0, 0) - m(1, 1)) * 2.0;
    w = (m(1, 0) - m(0, 1)) / s;
    x = (m(0, 2) + m(2, 0)) / s;
    y = (m(1, 2) + m(2, 1)) / s;
    z = 0.25 * s;
  }
  return UnitQuat(w, x, y, z);
}

inline Eigen::Matrix3d matrix_from_quat(const UnitQuat& q) {
  Eigen::Matrix3d m;
  double w = q.w, x = q.x, y = q.y, z = q.z;
  m << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
       2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
       2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return m;
}

// Rigid transform T(p) = R p + t.
struct RigidTransform {
  UnitQuat rotation;
  Vec3 translation;

  static RigidTransform identity() { return {}; }
  static RigidTransform translate(const Vec3& t) { return {UnitQuat{}, t}; }
  static RigidTransform rotate(const UnitQuat& q) { return {q, Vec3{}}; }
  // Rotation about an arbitrary center point.
  static RigidTransform rotate_about(const UnitQuat& q, const Vec3& center) {
    return {q, center - q.rotate(center)};
  }

  Vec3 apply(const Vec3& p) const { return rotation.rotate(p) + translation; }

  // Composition: (a * b)(p) = a(b(p)).
  RigidTransform operator*(const RigidTransform& o) const {
    return {rotation * o.rotation, rotation.rotate(o.translation) + translation};
  }

  RigidTransform inverse() const {
    UnitQuat qi = rotation.inverse();
    return {qi, -qi.rotate(translation)};
  }
};

struct EmptyCloud : Error {
  EmptyCloud() : Error("operation requires a non-empty point cloud") {}
};

struct PointCloud {
  std::vector<Vec3> points;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

inline Vec3 centroid(const PointCloud& c) {
  if (c.empty()) throw EmptyCloud();
  Vec3 s;
  for (const Vec3& p : c.points) s += p;
  return s / static_cast<double>(c.points.size());
}

inline PointCloud translate_cloud(const PointCloud& c, const Vec3& t) {
  PointCloud out;
  out.points.reserve(c.size());
  for (const Vec3& p : c.points) out.points.push_back(p + t);
  return out;
}

inline PointCloud apply_transform(const RigidTransform& T, const PointCloud& c) {
  PointCloud out;
  out.points.reserve(c.size());
  for (const Vec3& p : c.points) out.points.push_back(T.apply(p));
  return out;
}

// Axis-aligned box.
struct Aabb {
  Vec3 lo, hi;

  Aabb inflated(double d) const { return {lo - Vec3{d, d, d}, hi + Vec3{d, d, d}}; }
  bool contains(const Vec3& p) const {
    return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y &&
           p.z >= lo.z && p.z <= hi.z;
  }
};

// Exact nearest neighbor over a uniform hash grid.  Optionally carries a scalar
// channel per point; queries then use the 4D metric |dp|^2 + (dc)^2.  Ring
// expansion prunes with the 3D component, which lower-bounds the 4D distance,
// so results stay exact either way.
class NearestNeighborGrid {
 public:
  explicit NearestNeighborGrid(const PointCloud& cloud,
                               const std::vector<double>* channel = nullptr)
      : cloud_(&cloud) {
    if (cloud.empty()) throw EmptyCloud();
    if (channel != nullptr) channel_ = *channel;
    Vec3 lo = cloud.points[0], hi = cloud.points[0];
    for (const Vec3& p : cloud.points) {
      lo.x = std::min(lo.x, p.x); lo.y = std::min(lo.y, p.y); lo.z = std::min(lo.z, p.z);
      hi.x = std::max(hi.x, p.x); hi.y = std::max(hi.y, p.y); hi.z = std::max(hi.z, p.z);
    }
    origin_ = lo;
    double span = std::max({hi.x - lo.x, hi.y - lo.y, hi.z - lo.z});
    double divisions = std::cbrt(static_cast<double>(cloud.size()));
    cell_ = std::max(span / std::max(1.0, divisions), 1e-9);
    cell_of(lo, clo_[0], clo_[1], clo_[2]);
    cell_of(hi, chi_[0], chi_[1], chi_[2]);
    for (int i = 0; i < static_cast<int>(cloud.size()); ++i)
      buckets_[coords(cloud.points[i])].push_back(i);
  }

  struct Hit {
    int index;
    double dist;  // 3D or 4D depending on whether a channel is attached
  };

  Hit nearest(const Vec3& q, double q_channel = 0.0) const {
    long cx, cy, cz;
    cell_of(q, cx, cy, cz);
    // Clamp the search center into the occupied cell range.  An occupied cell
    // at Chebyshev ring r from the clamped center is at ring >= r from the
    // query's true cell as well, so the (r-1)*cell distance bound below stays
    // valid while far-outside queries start next to the data instead of
    // walking empty rings across the gap.
    cx = std::clamp(cx, clo_[0], chi_[0]);
    cy = std::clamp(cy, clo_[1], chi_[1]);
    cz = std::clamp(cz, clo_[2], chi_[2]);
    long max_ring = 1 + std::max({chi_[0] - clo_[0], chi_[1] - clo_[1], chi_[2] - clo_[2]});
    double best2 = std::numeric_limits<double>::infinity();
    int best_i = -1;
    // Any point in Chebyshev cell-ring r is at least (r-1)*cell away in 3D,
    // which also lower-bounds the 4D metric, so once the best hit beats that
    // bound no farther ring can improve it.  Rings out to max_ring cover every
    // occupied cell, so best_i is always found and the loop terminates.
    for (long ring = 0; ring <= max_ring; ++ring) {
      if (best_i >= 0 && ring >= 2) {
        double lb = static_cast<double>(ring - 1) * cell_;
        if (best2 <= lb * lb) break;
      }
      scan_ring(q, q_channel, cx, cy, cz, ring, best2, best_i);
    }
    return {best_i, std::sqrt(best2)};
  }

 private:
  void cell_of(const Vec3& p, long& cx, long& cy, long& cz) const {
    cx = static_cast<long>(std::floor((p.x - origin_.x) / cell_));
    cy = static_cast<long>(std::floor((p.y - origin_.y) / cell_));
    cz = static_cast<long>(std::floor((p.z - origin_.z) / cell_));
  }

  std::uint64_t coords(const Vec3& p) const {
    long cx, cy, cz;
    cell_of(p, cx, cy, cz);
    return pack(cx, cy, cz);
  }

  static std::uint64_t pack(long cx, long cy, long cz) {
    auto u = [](long v) { return static_cast<std::uint64_t>(v + 0x100000); };
    std::uint64_t h = u(cx) * 0x9e3779b97f4a7c15ull;
    h ^= u(cy) * 0xbf58476d1ce4e5b9ull + (h << 6) + (h >> 2);
    h ^= u(cz) * 0x94d049bb133111ebull + (h << 6) + (h >> 2);
    return h;
  }

  void scan_cell(const Vec3& q, double q_channel, long cx, long cy, long cz,
                 double& best, int& best_i) const {
    auto it = buckets_.find(pack(cx, cy, cz));
    if (it == buckets_.end()) return;
    for (int i : it->second) {
      double d = (cloud_->points[i] - q).squared_norm();
      if (!channel_.empty()) {
        double dc = channel_[i] - q_channel;
        d += dc * dc;
      }
      if (d < best || (d == best && i < best_i)) {
        best = d;
        best_i = i;
      }
    }
  }

  void scan_ring(const Vec3& q, double q_channel, long cx, long cy, long cz,
                 long ring, double& best2, int& best_i) const {
    auto consider = [&](long x, long y, long z) {
      scan_cell(q, q_channel, x, y, z, best2, best_i);
    };
    if (ring == 0) {
      consider(cx, cy, cz);
      return;
    }
    for (long dx = -ring; dx <= ring; ++dx)
      for (long dy = -ring; dy <= ring; ++dy) {
        consider(cx + dx, cy + dy, cz - ring);
        consider(cx + dx, cy + dy, cz + ring);
      }
    for (long dx = -ring; dx <= ring; ++dx)
      for (long dz = -ring + 1; dz <= ring - 1; ++dz) {
        consider(cx + dx, cy - ring, cz + dz);
        consider(cx + dx, cy + ring, cz + dz);
      }
    for (long dy = -ring + 1; dy <= ring - 1; ++dy)
      for (long dz = -ring + 1; dz <= ring - 1; ++dz) {
        consider(cx - ring, cy + dy, cz + dz);
        consider(cx + ring, cy + dy, cz + dz);
      }
  }

  const PointCloud* cloud_;
  std::vector<double> channel_;
  Vec3 origin_;
  double cell_ = 1.0;
  long clo_[3] = {0, 0, 0}, chi_[3] = {0, 0, 0};
  std::unordered_map<std::uint64_t, std::vector<int>> buckets_;
};

namespace detail {
inline double mean_nearest(const PointCloud& from, const NearestNeighborGrid& to_grid,
                           const std::vector<double>* from_channel) {
  double sum = 0.0;
  for (std::size_t i = 0; i < from.size(); ++i) {
    double c = from_channel ? (*from_channel)[i] : 0.0;
    sum += to_grid.nearest(from.points[i], c).dist;
  }
  return sum / static_cast<double>(from.size());
}
}  // namespace detail

// Symmetric chamfer distance: half the sum of both directed mean nearest-point
// distances (plain Euclidean, not squared).
inline double chamfer_distance(const PointCloud& a, const PointCloud& b) {
  if (a.empty() || b.empty()) throw EmptyCloud();
  NearestNeighborGrid ga(a), gb(b);
  return 0.5 * (detail::mean_nearest(a, gb, nullptr) + detail::mean_nearest(b, ga, nullptr));
}

// 4D variant: each point carries one extra scalar channel.
inline double chamfer_distance_4d(const PointCloud& a, const std::vector<double>& ca,
                                  const PointCloud& b, const std::vector<double>& cb) {
  if (a.empty() || b.empty()) throw EmptyCloud();
  if (ca.size() != a.size() || cb.size() != b.size())
    throw Error("channel length must match cloud size");
  NearestNeighborGrid ga(a, &ca), gb(b, &cb);
  return 0.5 * (detail::mean_nearest(a, gb, &ca) + detail::mean_nearest(b, ga, &cb));
}

// Raised when a cloud's covariance does not span three dimensions; rank is the
// number of non-negligible principal directions found.
struct DegenerateFrame : Error {
  int rank;
  explicit DegenerateFrame(int rank_)
      : Error("point cloud covariance has rank " + std::to_string(rank_) +
              ", need 3 for a canonical frame"),
        rank(rank_) {}
};

// Canonical principal-axis frame: T(p) = R (p - centroid) with rows of R the
// covariance eigenvectors in descending eigenvalue order.  Sign of each axis is
// fixed by a non-negative dot with the matching world axis (exact zeros fall
// back to the first nonzero component); if that leaves det = -1 the last axis
// (smallest eigenvalue, weakest constraint) is flipped to restore a proper
// rotation.
inline RigidTransform principal_frame(const PointCloud& cloud) {
  Vec3 c = centroid(cloud);
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (const Vec3& p : cloud.points) {
    Eigen::Vector3d d(p.x - c.x, p.y - c.y, p.z - c.z);
    cov += d * d.transpose();
  }
  cov /= static_cast<double>(cloud.size());
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov);
  if (es.info() != Eigen::Success) throw Error("eigendecomposition failed");
  // Eigen returns ascending eigenvalues; we want descending.
  Eigen::Vector3d evals = es.eigenvalues().reverse();
  Eigen::Matrix3d axes;
  for (int i = 0; i < 3; ++i) axes.row(i) = es.eigenvectors().col(2 - i).transpose();

  double scale = std::max(evals(0), 0.0);
  double floor_ = std::max(scale * 1e-9, 1e-18);
  int rank = 0;
  for (int i = 0; i < 3; ++i)
    if (evals(i) > floor_) ++rank;
  if (rank < 3) throw DegenerateFrame(rank);

  for (int i = 0; i < 3; ++i) {
    double d = axes(i, i);
    bool flip;
    if (d != 0.0) {
      flip = d < 0.0;
    } else {
      int j = axes(i, 0) != 0.0 ? 0 : (axes(i, 1) != 0.0 ? 1 : 2);
      flip = axes(i, j) < 0.0;
    }
    if (flip) axes.row(i) = -axes.row(i);
  }
  if (axes.determinant() < 0.0) axes.row(2) = -axes.row(2);

  UnitQuat q = quat_from_matrix(axes);
  return {q, -q.rotate(c)};
}

}  // namespace gsl
