#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>
#include <vector>

namespace hil {

using Vec3 = Eigen::Vector3d;
using Quat = Eigen::Quaterniond;

/// Timestamped 7-DOF object pose. Orientation is kept unit-norm.
struct Waypoint {
  double t = 0.0;
  Vec3 position = Vec3::Zero();
  Quat orientation = Quat::Identity();
};

/// Ordered pose samples with strictly increasing timestamps, length >= 1.
struct Trajectory {
  std::vector<Waypoint> waypoints;

  std::size_t size() const { return waypoints.size(); }
  bool empty() const { return waypoints.empty(); }
  const Waypoint& front() const { return waypoints.front(); }
  const Waypoint& back() const { return waypoints.back(); }
};

/// 4x4 homogeneous transform with a fixed (0,0,0,1) bottom row.
class HomTransform {
 public:
  HomTransform() : m_(Eigen::Matrix4d::Identity()) {}

  static HomTransform identity() { return HomTransform(); }

  /// Identity rotation, translation t.
  static HomTransform translation(const Vec3& t);

  /// Rigid transform; throws if R is not orthonormal within 1e-6.
  static HomTransform rigid(const Eigen::Matrix3d& rotation, const Vec3& t);

  /// Adopts an arbitrary matrix; throws if the bottom row is not (0,0,0,1).
  static HomTransform from_matrix(const Eigen::Matrix4d& m);

  const Eigen::Matrix4d& matrix() const { return m_; }
  Eigen::Matrix3d rotation() const { return m_.topLeftCorner<3, 3>(); }
  Vec3 translation_part() const { return m_.topRightCorner<3, 1>(); }

  /// Rigid inverse (R^T, -R^T t).
  HomTransform inverse() const;

  Vec3 apply(const Vec3& p) const;
  HomTransform operator*(const HomTransform& rhs) const;

 private:
  Eigen::Matrix4d m_;
};

/// Throws InvalidArgument unless `traj` satisfies the trajectory invariants.
void validate_trajectory(const Trajectory& traj);

/// Rigid transform with identity rotation moving old_anchor onto new_anchor.
HomTransform translation_between(const Vec3& old_anchor, const Vec3& new_anchor);

/// Maps every position through T and composes orientations with T's rotation.
/// Timestamps are preserved.
Trajectory apply_transform(const HomTransform& transform, const Trajectory& traj);

/// k waypoints at uniform arc-length fractions of the piecewise-linear path.
/// Positions are lerped, orientations nlerped with shorter-arc sign alignment,
/// endpoints preserved exactly. A single-waypoint input is replicated.
Trajectory resample_uniform(const Trajectory& traj, std::size_t k);

/// Running-average jitter filter: waypoints are absorbed into the current
/// window while the window mean stays within `threshold` of the next point;
/// the window is then emitted as one averaged waypoint (first-of-window
/// orientation and timestamp) and a new window starts.
Trajectory smooth_adaptive(const Trajectory& traj, double threshold);

/// Mean index-aligned positional distance after resampling both trajectories
/// to the longer length. Symmetric in its arguments.
double trajectory_error(const Trajectory& generated, const Trajectory& reference);

}  // namespace hil
