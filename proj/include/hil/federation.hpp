#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hil/demo.hpp"
#include "hil/store.hpp"

namespace hil {

/// Where a pooled demonstration came from and how it was moved.
struct PoolProvenance {
  std::string demo_id;
  Vec3 original_anchor = Vec3::Zero();
  HomTransform applied;
};

/// Demonstrations transformed onto one target anchor; the training currency.
struct PooledDataset {
  TaskParameters target;
  std::vector<Demonstration> demos;
  std::vector<PoolProvenance> provenance;
};

struct PoolResult {
  std::optional<PooledDataset> pool;
  std::size_t found = 0;
  std::size_t needed = 0;

  bool ok() const { return pool.has_value(); }
};

/// Demos matching the target: identical tile dimensions, or grid anchor
/// within `radius` meters. Deduplicated, sorted by demo_id.
std::vector<std::string> find_related(const std::vector<DemoHeader>& catalog,
                                      const TaskParameters& target, double radius);

/// Shifts every demonstration onto the target anchor (Eq-style translation of
/// task parameters), local demos first. Returns an insufficiency marker when
/// fewer than min_count demos are available.
PoolResult pool_for_task(const TaskParameters& target, const std::vector<Demonstration>& local,
                         const std::vector<Demonstration>& related, std::size_t min_count);

/// One line of the knowledge CSV exported next to a model bundle.
struct KnowledgeRow {
  int primitive = 0;
  int next_label = 0;  // following primitive, kDoneLabel after the last
  double mean_error = 0.0;
  double cond_std_rms = 0.0;
  double seg_std_rms = 0.0;
};

/// Renders the knowledge CSV (header + one row per primitive).
std::string write_knowledge_csv(const std::vector<KnowledgeRow>& rows);

/// Dual storage: writes the bundle JSON under `bundle_key` and the knowledge
/// CSV under `csv_key`. The bundle must parse; returns both content hashes.
std::pair<std::string, std::string> dual_store(ObjectStore& store, const std::string& bundle_bytes,
                                               const std::vector<KnowledgeRow>& rows,
                                               const StoreKey& bundle_key,
                                               const StoreKey& csv_key);

}  // namespace hil
