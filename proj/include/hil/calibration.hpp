#pragma once

#include <string>
#include <vector>

#include "hil/trajectory.hpp"

namespace hil {

/// One pose observed simultaneously in the demonstration (unity) frame and
/// the world frame.
struct PairedReading {
  Waypoint unity_pose;
  Waypoint world_pose;
};

struct CalibrationResult {
  HomTransform transform;                  // maps unity-frame poses to world
  double mean_error = 0.0;                 // meters, over surviving readings
  std::vector<double> per_location_errors; // one entry per surviving reading
  std::size_t n_readings = 0;
};

/// Homogeneous matrix of a pose (rotation from quaternion, translation from
/// position).
HomTransform pose_to_matrix(const Waypoint& w);

/// Estimates the unity->world rigid transform from paired readings.
/// Outlier readings (per-frame median/MAD rule) are discarded first; fewer
/// than 3 survivors raise InsufficientData. Per-reading transforms
/// T = M_world * M_unity^-1 are averaged: translations arithmetically,
/// rotations by a sign-aligned normalized quaternion mean.
CalibrationResult estimate_transform(const std::vector<PairedReading>& readings);

/// One JSON object per line: {"u":{"p":[..],"q":[..]},"w":{"p":[..],"q":[..]}}.
std::string write_paired_readings(const std::vector<PairedReading>& readings);
std::vector<PairedReading> parse_paired_readings(const std::string& bytes);

}  // namespace hil
