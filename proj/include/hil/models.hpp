#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "hil/demo.hpp"
#include "hil/federation.hpp"
#include "hil/nn.hpp"
#include "hil/rng.hpp"

namespace hil {

inline constexpr int kSegmentLen = 20;       // waypoints per primitive segment
inline constexpr int kPoseDim = 7;           // xyz + quaternion
inline constexpr int kSegFeatDim = kSegmentLen * kPoseDim;
inline constexpr int kLatentDim = 3;
inline constexpr int kCondDim = 13;          // tile dims, anchor, start pose, primitive
inline constexpr int kSeqVocab = kNumPrimitives + 1;  // 8 primitives + DONE
inline constexpr int kSeqHidden = 16;
inline constexpr int kVaeHidden = 64;
inline constexpr double kKlBeta = 1e-3;
inline constexpr double kSegmentDt = 0.05;   // seconds between decoded waypoints

/// GRU over primitive-label history plus a linear head to 9 logits.
struct SequentialSkillModel {
  nn::GruParams gru;
  nn::Matrix head_weight;  // kSeqVocab x kSeqHidden
  nn::Matrix head_bias;    // kSeqVocab x 1
};

/// Conditional VAE for one primitive: (segment, condition) -> latent ->
/// segment. Segments are 20 resampled waypoints as deltas from the segment's
/// first pose; conditions are [tile_w, tile_d, anchor, start pose, primitive].
struct ReactiveSkillModel {
  int primitive = 0;
  nn::MlpParams encoder;  // (kSegFeatDim + kCondDim) -> hidden -> 2*kLatentDim
  nn::MlpParams decoder;  // (kLatentDim + kCondDim) -> hidden -> kSegFeatDim
};

/// Per-feature normalization; standard deviations floored at 1e-8.
struct NormStats {
  nn::Vector cond_mean, cond_std;  // kCondDim
  nn::Vector seg_mean, seg_std;    // kSegFeatDim
};

struct SkillModelBundle {
  SequentialSkillModel sequential;
  std::vector<ReactiveSkillModel> reactive;  // exactly 8, primitives 1..8
  NormStats norm;
  std::string dataset_id;
  std::uint64_t seed = 0;
  int epochs_trained = 0;
};

/// Condition vector for one primitive at the current pose.
nn::Vector make_condition(const TaskParameters& params, const Waypoint& current_pose,
                          int primitive);

/// Start pose embedded in a condition vector (entries 5..11).
Waypoint condition_start_pose(const nn::Vector& condition);

/// Segment resampled to kSegmentLen waypoints, flattened as per-waypoint
/// deltas from the first pose (quaternions sign-aligned to the first).
nn::Vector segment_features(const Trajectory& segment);

/// Population mean/std over every condition and segment tensor in the pool.
NormStats compute_norm_stats(const PooledDataset& pool);

/// Teacher-forced GRU training on the label chain START -> 1..8 -> DONE,
/// one cross-entropy Adam step per demonstration per epoch.
class SequentialTrainer {
 public:
  SequentialTrainer(const PooledDataset& pool, std::uint64_t seed);
  void run_epochs(int epochs);
  const SequentialSkillModel& model() const { return model_; }
  const std::vector<double>& loss_trace() const { return trace_; }

 private:
  SequentialSkillModel model_;
  nn::AdamState adam_;
  std::vector<std::vector<int>> sequences_;
  std::vector<double> trace_;
};

/// Per-primitive conditional VAE training, one Adam step per demonstration
/// per epoch; reparameterization noise drawn from a SplitMix64 stream.
class ReactiveTrainer {
 public:
  ReactiveTrainer(const PooledDataset& pool, int primitive, std::uint64_t seed,
                  const NormStats& norm);
  void run_epochs(int epochs);
  const ReactiveSkillModel& model() const { return model_; }
  const std::vector<double>& loss_trace() const { return trace_; }

 private:
  ReactiveSkillModel model_;
  NormStats norm_;
  nn::AdamState adam_;
  SplitMix64 eps_rng_;
  std::vector<nn::Vector> conditions_;  // normalized
  std::vector<nn::Vector> targets_;     // normalized segment features
  std::vector<double> trace_;
};

SequentialSkillModel train_sequential(const PooledDataset& pool, int epochs, std::uint64_t seed,
                                      std::vector<double>* loss_trace = nullptr);

/// Greedy next-label prediction given the primitive history (no DONE except
/// possibly last). Returns (label, softmax probability).
std::pair<int, double> predict_next(const SequentialSkillModel& model,
                                    const std::vector<int>& history);

ReactiveSkillModel train_reactive(const PooledDataset& pool, int primitive, int epochs,
                                  std::uint64_t seed, std::vector<double>* loss_trace = nullptr);

/// Decodes one segment: denormalized deltas re-anchored at the condition's
/// start pose. The first waypoint equals the start pose exactly.
Trajectory decode_segment(const ReactiveSkillModel& model, const NormStats& norm,
                          const nn::Vector& condition, const nn::Vector& z);

/// Posterior mean of the encoder for a (segment, condition) pair.
nn::Vector encode_posterior_mean(const ReactiveSkillModel& model, const NormStats& norm,
                                 const nn::Vector& condition, const nn::Vector& seg_features);

/// Mean positional reconstruction error (via the posterior mean) of one
/// reactive model over its segments in the pool.
double reactive_reconstruction_error(const ReactiveSkillModel& model, const NormStats& norm,
                                     const PooledDataset& pool);

/// Trains the full bundle: the sequence model plus 8 reactive models
/// (per-primitive seed = seed + primitive index), shared NormStats.
class BundleTrainer {
 public:
  BundleTrainer(const PooledDataset& pool, std::string dataset_id, std::uint64_t seed);
  void run_epochs(int epochs);
  int epochs_trained() const { return epochs_; }
  SkillModelBundle snapshot() const;

 private:
  const PooledDataset& pool_;
  std::string dataset_id_;
  std::uint64_t seed_;
  NormStats norm_;
  std::unique_ptr<SequentialTrainer> sequential_;
  std::vector<std::unique_ptr<ReactiveTrainer>> reactive_;
  int epochs_ = 0;
};

SkillModelBundle train_bundle(const PooledDataset& pool, const std::string& dataset_id, int epochs,
                              std::uint64_t seed);

struct BundleEvaluation {
  double mean_error = 0.0;                      // meters, full-trajectory
  std::array<double, kNumPrimitives> per_primitive{};  // segment decode errors
};

/// Synthesizes one trajectory per held-out demonstration (z = 0, start pose =
/// the demo's first waypoint) and averages trajectory_error against the
/// demos. Rollouts that never reach DONE contribute their partial trajectory.
BundleEvaluation evaluate_bundle(const SkillModelBundle& bundle, const PooledDataset& heldout);

/// Knowledge rows (primitive chain + per-primitive reconstruction errors)
/// for the dual-storage CSV export.
std::vector<KnowledgeRow> knowledge_rows(const SkillModelBundle& bundle,
                                         const PooledDataset& pool);

/// Deterministic JSON serialization: stable key order, %.17g floats.
std::string save_bundle(const SkillModelBundle& bundle);
SkillModelBundle load_bundle(const std::string& bytes);

}  // namespace hil
