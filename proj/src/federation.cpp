#include "hil/federation.hpp"

#include <algorithm>
#include <set>

#include "hil/errors.hpp"
#include "hil/models.hpp"
#include "hil/util.hpp"

namespace hil {

std::vector<std::string> find_related(const std::vector<DemoHeader>& catalog,
                                      const TaskParameters& target, double radius) {
  if (!(radius > 0.0)) throw InvalidArgument("find_related: radius must be > 0");
  std::set<std::string> ids;
  for (const DemoHeader& h : catalog) {
    bool same_dims = h.tile_width == target.tile_width && h.tile_depth == target.tile_depth;
    bool near = (h.grid_anchor - target.grid_anchor).norm() <= radius;
    if (same_dims || near) ids.insert(h.demo_id);
  }
  return {ids.begin(), ids.end()};
}

PoolResult pool_for_task(const TaskParameters& target, const std::vector<Demonstration>& local,
                         const std::vector<Demonstration>& related, std::size_t min_count) {
  if (min_count < 1) throw InvalidArgument("pool_for_task: min_count must be >= 1");

  PoolResult result;
  result.needed = min_count;
  result.found = local.size() + related.size();
  if (result.found < min_count) return result;

  PooledDataset pool;
  pool.target = target;
  auto absorb = [&](const Demonstration& demo, bool from_related) {
    HomTransform shift = translation_between(demo.params.grid_anchor, target.grid_anchor);
    Demonstration moved = demo;
    moved.trajectory = apply_transform(shift, demo.trajectory);
    moved.params.grid_anchor = target.grid_anchor;  // bit-exact, not re-derived
    if (from_related) moved.source = DemoSource::kFederated;
    pool.provenance.push_back({demo.demo_id, demo.params.grid_anchor, shift});
    pool.demos.push_back(std::move(moved));
  };
  for (const Demonstration& d : local) absorb(d, false);
  for (const Demonstration& d : related) absorb(d, true);
  result.pool = std::move(pool);
  return result;
}

std::string write_knowledge_csv(const std::vector<KnowledgeRow>& rows) {
  std::string out = "primitive,next,mean_error_m,cond_std_rms,seg_std_rms\n";
  for (const KnowledgeRow& r : rows) {
    out += std::to_string(r.primitive);
    out += ',';
    out += std::to_string(r.next_label);
    out += ',';
    out += fmt_double(r.mean_error);
    out += ',';
    out += fmt_double(r.cond_std_rms);
    out += ',';
    out += fmt_double(r.seg_std_rms);
    out += '\n';
  }
  return out;
}

std::pair<std::string, std::string> dual_store(ObjectStore& store, const std::string& bundle_bytes,
                                               const std::vector<KnowledgeRow>& rows,
                                               const StoreKey& bundle_key,
                                               const StoreKey& csv_key) {
  load_bundle(bundle_bytes);  // reject malformed bundles before any write
  std::string bundle_hash = store.put(bundle_key, bundle_bytes);
  std::string csv_hash = store.put(csv_key, write_knowledge_csv(rows));
  return {bundle_hash, csv_hash};
}

}  // namespace hil
