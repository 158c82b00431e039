#pragma once

#include <string>
#include <utility>
#include <vector>

#include "hil/models.hpp"

namespace hil {

inline constexpr double kSmoothingThreshold = 0.1;  // meters
inline constexpr int kDefaultMaxSteps = 10;

struct SynthesisRequest {
  TaskParameters params;
  Waypoint start_pose;  // tile pickup pose
  int max_steps = kDefaultMaxSteps;
};

struct RolloutResult {
  Trajectory trajectory;      // chained, smoothed, re-stamped
  std::vector<int> sequence;  // emitted labels, DONE appended when reached
  bool done_reached = false;
};

/// Rolls the sequential model from an empty history, decoding one segment per
/// predicted primitive (z = 0) and chaining them; never throws on a missed
/// DONE, reports it in the result instead.
RolloutResult synthesize_rollout(const SkillModelBundle& bundle, const SynthesisRequest& request);

/// As synthesize_rollout but raises SynthesisFailure (carrying the partial
/// label sequence) when DONE is not reached within max_steps.
std::pair<Trajectory, std::vector<int>> synthesize_trajectory(const SkillModelBundle& bundle,
                                                              const SynthesisRequest& request);

/// Rigidly translates each segment so it starts where the previous one ended,
/// concatenating with duplicated junction points dropped.
Trajectory chain_segments(const std::vector<Trajectory>& segments);

/// CSV with header t,x,y,z,qx,qy,qz,qw, one row per waypoint, %.17g floats.
std::string export_waypoints_csv(const Trajectory& traj);
Trajectory parse_waypoints_csv(const std::string& bytes);

}  // namespace hil
