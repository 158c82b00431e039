#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>

#include "hil/demo.hpp"
#include "hil/models.hpp"

namespace hil {

inline constexpr double kTileThickness = 0.015;
inline constexpr double kCanonicalFlange = 0.024;
inline constexpr double kCanonicalInflation = 0.01;
/// The tile overhangs the opening by this much per side for canonical worlds.
inline constexpr double kTileOverhang = 0.0098;

/// Single-cell ceiling grid. The four runner beams frame the opening, each a
/// box `flange_width` wide around the opening edge, hanging below the grid
/// plane (T-bar web pointing down). The anchor is the opening's upper-left
/// corner at grid height.
struct GridWorld {
  double grid_height = 2.0;
  Vec3 cell_anchor = Vec3::Zero();
  double opening_width = 0.0;
  double opening_depth = 0.0;
  double flange_width = kCanonicalFlange;
  double collider_inflation = kCanonicalInflation;
};

struct TileBody {
  double width = 0.0;
  double depth = 0.0;
  double thickness = kTileThickness;
};

struct WorldConfig {
  GridWorld world;
  TileBody tile;
};

enum class FailureReason { kNone, kCollision, kSeatMiss, kNoPlan };

std::string to_string(FailureReason r);

struct TrialResult {
  bool success = false;
  FailureReason failure_reason = FailureReason::kNone;
  double final_offset = 0.0;  // meters from the seat pose
  std::optional<std::size_t> collision_step;
};

struct EvalReport {
  std::string scenario;
  std::size_t trials = 0;
  std::size_t successes = 0;
  double success_rate = 0.0;
  std::size_t collisions = 0;
  std::size_t seat_misses = 0;
  std::size_t no_plans = 0;
  double mean_final_offset = 0.0;
};

/// Throws InvalidArgument unless the tile is strictly larger than the opening
/// (the defining constraint of lay-in tiles) and dimensions are positive.
void validate_tile(const TileBody& tile, const GridWorld& world);

/// Canonical world for a tile: opening = tile minus twice the overhang,
/// grid plane at the anchor's z.
WorldConfig canonical_world(const Vec3& anchor, double tile_width, double tile_depth);

/// Resting pose: tile centered over the opening, level, bottom face a small
/// clearance above the grid plane (on top of the inflated flange colliders).
Waypoint seat_pose(const GridWorld& world, const TileBody& tile);

/// Nominal pickup pose: 1 m below the opening center, level.
Waypoint canonical_pick_pose(const GridWorld& world);

/// True iff any sampled tile surface point (corners, edge midpoints and
/// center of both faces; 18 points) lies inside an inflated beam box.
bool check_collision(const Waypoint& tile_pose, const TileBody& tile, const GridWorld& world);

struct ExpertDemo {
  Demonstration demo;
  std::array<std::size_t, kNumPrimitives> phase_starts{};  // waypoint index per phase
};

/// Deterministic scripted demonstration: the eight canonical phases
/// (approach-pick, lift, tilt, raise-through-opening, level-above-grid,
/// translate-over-seat, lower-onto-seat, release-settle) with collision-
/// clipped Gaussian jitter. Throws InfeasibleTask when the tilted tile
/// cannot clear the opening.
ExpertDemo scripted_expert_detailed(const TaskParameters& params, const GridWorld& world,
                                    double noise_sigma, std::uint64_t seed);

Demonstration scripted_expert(const TaskParameters& params, const GridWorld& world,
                              double noise_sigma, std::uint64_t seed);

/// Sweeps the trajectory (waypoints plus pair midpoints) through
/// check_collision, then scores the final pose against the seat: success iff
/// the positional offset is within seat_tolerance and tilt within 2 degrees.
TrialResult run_trial(const Trajectory& traj, const TileBody& tile, const GridWorld& world,
                      double seat_tolerance = 0.005);

/// Seeded batch: each trial perturbs the pickup pose (sigma 5 mm), runs
/// synthesis and scores it. Rollouts that miss DONE count as no_plan.
EvalReport batch_success_rate(const SkillModelBundle& bundle, const TaskParameters& scenario,
                              const GridWorld& world, std::size_t trials, std::uint64_t seed);

std::string write_eval_report(const EvalReport& report);

std::string write_world_json(const WorldConfig& config);
WorldConfig parse_world_json(const std::string& bytes);

}  // namespace hil
