#include "hil/trajectory.hpp"

#include <algorithm>
#include <cmath>

#include "hil/errors.hpp"

namespace hil {

namespace {

bool finite(const Vec3& v) { return v.allFinite(); }

Quat nlerp(const Quat& a, const Quat& b, double f) {
  // Sign-align to the shorter arc before blending.
  double dot = a.dot(b);
  double sign = dot < 0.0 ? -1.0 : 1.0;
  Eigen::Vector4d c = (1.0 - f) * a.coeffs() + f * sign * b.coeffs();
  double n = c.norm();
  if (n < 1e-12) return a;
  c /= n;
  return Quat(c);
}

}  // namespace

HomTransform HomTransform::translation(const Vec3& t) {
  if (!finite(t)) throw InvalidArgument("translation: non-finite vector");
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topRightCorner<3, 1>() = t;
  HomTransform out;
  out.m_ = m;
  return out;
}

HomTransform HomTransform::rigid(const Eigen::Matrix3d& rotation, const Vec3& t) {
  if (!rotation.allFinite() || !finite(t)) throw InvalidArgument("rigid: non-finite input");
  Eigen::Matrix3d err = rotation.transpose() * rotation - Eigen::Matrix3d::Identity();
  if (err.cwiseAbs().maxCoeff() > 1e-6) {
    throw InvalidArgument("rigid: rotation block not orthonormal within 1e-6");
  }
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = rotation;
  m.topRightCorner<3, 1>() = t;
  HomTransform out;
  out.m_ = m;
  return out;
}

HomTransform HomTransform::from_matrix(const Eigen::Matrix4d& m) {
  if (!m.allFinite()) throw InvalidArgument("from_matrix: non-finite matrix");
  if (m(3, 0) != 0.0 || m(3, 1) != 0.0 || m(3, 2) != 0.0 || m(3, 3) != 1.0) {
    throw InvalidArgument("from_matrix: bottom row must be (0,0,0,1)");
  }
  HomTransform out;
  out.m_ = m;
  return out;
}

HomTransform HomTransform::inverse() const {
  Eigen::Matrix3d rt = rotation().transpose();
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = rt;
  m.topRightCorner<3, 1>() = -rt * translation_part();
  HomTransform out;
  out.m_ = m;
  return out;
}

Vec3 HomTransform::apply(const Vec3& p) const {
  return rotation() * p + translation_part();
}

HomTransform HomTransform::operator*(const HomTransform& rhs) const {
  HomTransform out;
  out.m_ = m_ * rhs.m_;
  out.m_.row(3) << 0, 0, 0, 1;
  return out;
}

void validate_trajectory(const Trajectory& traj) {
  if (traj.empty()) throw InvalidArgument("trajectory: empty");
  double prev = -1.0;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const Waypoint& w = traj.waypoints[i];
    if (!std::isfinite(w.t) || w.t < 0.0) throw InvalidArgument("trajectory: bad timestamp");
    if (i > 0 && w.t <= prev) throw InvalidArgument("trajectory: timestamps not strictly increasing");
    prev = w.t;
    if (!finite(w.position)) throw InvalidArgument("trajectory: non-finite position");
    if (std::abs(w.orientation.norm() - 1.0) > 1e-6) {
      throw InvalidArgument("trajectory: orientation not unit norm");
    }
  }
}

HomTransform translation_between(const Vec3& old_anchor, const Vec3& new_anchor) {
  if (!finite(old_anchor) || !finite(new_anchor)) {
    throw InvalidArgument("translation_between: non-finite anchor");
  }
  return HomTransform::translation(new_anchor - old_anchor);
}

Trajectory apply_transform(const HomTransform& transform, const Trajectory& traj) {
  Quat rot(transform.rotation());
  rot.normalize();
  Trajectory out;
  out.waypoints.reserve(traj.size());
  for (const Waypoint& w : traj.waypoints) {
    Waypoint m;
    m.t = w.t;
    m.position = transform.apply(w.position);
    m.orientation = (rot * w.orientation).normalized();
    out.waypoints.push_back(m);
  }
  return out;
}

Trajectory resample_uniform(const Trajectory& traj, std::size_t k) {
  if (k < 2) throw InvalidArgument("resample_uniform: k must be >= 2");
  if (traj.empty()) throw InvalidArgument("resample_uniform: empty trajectory");

  const std::size_t n = traj.size();
  if (n == 1) {
    Trajectory out;
    out.waypoints.assign(k, traj.front());
    for (std::size_t j = 0; j < k; ++j) {
      out.waypoints[j].t = traj.front().t + static_cast<double>(j) * 1e-3;
    }
    return out;
  }

  std::vector<double> cum(n, 0.0);
  for (std::size_t i = 1; i < n; ++i) {
    cum[i] = cum[i - 1] + (traj.waypoints[i].position - traj.waypoints[i - 1].position).norm();
  }
  const double total = cum.back();

  Trajectory out;
  out.waypoints.reserve(k);
  out.waypoints.push_back(traj.front());
  std::size_t seg = 0;
  for (std::size_t j = 1; j + 1 < k; ++j) {
    double target = total * static_cast<double>(j) / static_cast<double>(k - 1);
    if (total <= 0.0) {
      // Degenerate zero-length path: interpolate by index instead.
      double idx = static_cast<double>(j) * static_cast<double>(n - 1) / static_cast<double>(k - 1);
      std::size_t lo = std::min(static_cast<std::size_t>(idx), n - 2);
      double f = idx - static_cast<double>(lo);
      const Waypoint& a = traj.waypoints[lo];
      const Waypoint& b = traj.waypoints[lo + 1];
      Waypoint w;
      w.t = a.t + f * (b.t - a.t);
      w.position = a.position;
      w.orientation = nlerp(a.orientation, b.orientation, f);
      out.waypoints.push_back(w);
      continue;
    }
    while (seg + 2 < n && cum[seg + 1] < target) ++seg;
    const Waypoint& a = traj.waypoints[seg];
    const Waypoint& b = traj.waypoints[seg + 1];
    double span = cum[seg + 1] - cum[seg];
    double f = span > 0.0 ? (target - cum[seg]) / span : 0.0;
    f = std::clamp(f, 0.0, 1.0);
    Waypoint w;
    w.t = a.t + f * (b.t - a.t);
    w.position = a.position + f * (b.position - a.position);
    w.orientation = nlerp(a.orientation, b.orientation, f);
    out.waypoints.push_back(w);
  }
  out.waypoints.push_back(traj.back());

  // Zero-length segments (duplicate poses) can collapse interpolated stamps;
  // re-stamp the interior linearly in that case, keeping both endpoints.
  bool strict = true;
  for (std::size_t j = 1; j < out.waypoints.size(); ++j) {
    if (out.waypoints[j].t <= out.waypoints[j - 1].t) { strict = false; break; }
  }
  if (!strict) {
    double t0 = traj.front().t;
    double t1 = traj.back().t;
    for (std::size_t j = 1; j + 1 < out.waypoints.size(); ++j) {
      out.waypoints[j].t =
          t0 + (t1 - t0) * static_cast<double>(j) / static_cast<double>(k - 1);
    }
  }
  return out;
}

Trajectory smooth_adaptive(const Trajectory& traj, double threshold) {
  if (!(threshold > 0.0)) throw InvalidArgument("smooth_adaptive: threshold must be > 0");
  if (traj.empty()) throw InvalidArgument("smooth_adaptive: empty trajectory");

  Trajectory out;
  Vec3 sum = traj.front().position;
  std::size_t count = 1;
  Waypoint head = traj.front();

  auto emit = [&]() {
    Waypoint w = head;
    w.position = sum / static_cast<double>(count);
    out.waypoints.push_back(w);
  };

  for (std::size_t i = 1; i < traj.size(); ++i) {
    const Waypoint& next = traj.waypoints[i];
    Vec3 mean = sum / static_cast<double>(count);
    if ((next.position - mean).norm() <= threshold) {
      sum += next.position;
      ++count;
    } else {
      emit();
      sum = next.position;
      count = 1;
      head = next;
    }
  }
  emit();
  return out;
}

double trajectory_error(const Trajectory& generated, const Trajectory& reference) {
  if (generated.empty() || reference.empty()) {
    throw InvalidArgument("trajectory_error: empty trajectory");
  }
  std::size_t k = std::max(generated.size(), reference.size());
  if (k < 2) {
    return (generated.front().position - reference.front().position).norm();
  }
  Trajectory a = resample_uniform(generated, k);
  Trajectory b = resample_uniform(reference, k);
  double acc = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    acc += (a.waypoints[i].position - b.waypoints[i].position).norm();
  }
  return acc / static_cast<double>(k);
}

}  // namespace hil
