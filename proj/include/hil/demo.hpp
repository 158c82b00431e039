#pragma once

#include <array>
#include <string>
#include <vector>

#include "hil/trajectory.hpp"

namespace hil {

inline constexpr int kNumPrimitives = 8;
inline constexpr int kDoneLabel = 9;  // sentinel terminating a primitive chain

/// Task conditioning: which tile goes into which grid cell.
struct TaskParameters {
  std::string task_id;
  double tile_width = 0.0;   // meters
  double tile_depth = 0.0;   // meters
  Vec3 grid_anchor = Vec3::Zero();  // upper-left seat corner of the target cell
};

enum class DemoSource { kRecorded, kSynthetic, kFederated };

std::string to_string(DemoSource s);
DemoSource demo_source_from_string(const std::string& s);

/// A labeled trajectory plus its task parameters; the unit of federation.
/// Labels are per-waypoint primitive indices in 1..8 (no DONE), non-decreasing
/// and covering every primitive at least once.
struct Demonstration {
  TaskParameters params;
  Trajectory trajectory;
  std::vector<int> labels;
  std::string demo_id;
  DemoSource source = DemoSource::kSynthetic;
};

/// Throws InvalidArgument when any Demonstration invariant is violated.
void validate_demonstration(const Demonstration& demo);

/// Header-line view of a demonstration, enough for similarity retrieval.
struct DemoHeader {
  std::string demo_id;
  std::string task_id;
  double tile_width = 0.0;
  double tile_depth = 0.0;
  Vec3 grid_anchor = Vec3::Zero();
  DemoSource source = DemoSource::kSynthetic;
};

struct ManifestEntry {
  std::string demo_id;
  std::string task_id;
  Vec3 grid_anchor = Vec3::Zero();
  double tile_width = 0.0;
  double tile_depth = 0.0;
  std::string sha256;  // of the demo file bytes, lowercase hex
};

struct DatasetManifest {
  std::string dataset_id;
  std::vector<ManifestEntry> entries;  // kept sorted by demo_id
  std::string created_at;
};

/// Serializes to the demo JSONL format. Byte-deterministic: fixed key order,
/// 17-significant-digit floats, LF endings.
std::string write_demo(const Demonstration& demo);

/// Parses and validates a demo file; ParseError names line and field.
/// Quaternion norms off by <= 1e-3 are renormalized, larger offsets rejected.
Demonstration parse_demo(const std::string& bytes);

/// Parses only the header line of a demo file.
DemoHeader parse_demo_header(const std::string& bytes);

std::string write_manifest(const DatasetManifest& manifest);
DatasetManifest parse_manifest(const std::string& bytes);

/// Per-axis median/MAD filter: drops waypoints whose position deviates from
/// the axis median by more than 3x the median absolute deviation, keeping at
/// least 80% of the inputs (closest to the median win when the cap engages).
std::vector<Waypoint> remove_outliers(const std::vector<Waypoint>& readings);

/// As remove_outliers but also reports the retained input indices.
std::vector<std::size_t> remove_outlier_indices(const std::vector<Waypoint>& readings);

/// Splits a demonstration at label boundaries into 8 contiguous segments.
std::array<Trajectory, kNumPrimitives> segment_by_label(const Demonstration& demo);

}  // namespace hil
