#include "hil/models.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"

#include "hil/errors.hpp"
#include "hil/util.hpp"

namespace hil {

using nn::Matrix;
using nn::Vector;
using nlohmann::json;

namespace {

Quat canonical_sign(const Quat& q) {
  if (q.w() < 0.0) return Quat(-q.w(), -q.x(), -q.y(), -q.z());
  return q;
}

Vector onehot(int label) {
  Vector v = Vector::Zero(kSeqVocab);
  v[label - 1] = 1.0;
  return v;
}

Vector normalize_features(const Vector& x, const Vector& mean, const Vector& std) {
  return (x - mean).cwiseQuotient(std);
}

Vector denormalize_features(const Vector& x, const Vector& mean, const Vector& std) {
  return x.cwiseProduct(std) + mean;
}

/// The label chain of a demo (distinct labels in order; 1..8 by invariant).
std::vector<int> label_chain(const Demonstration& demo) {
  std::vector<int> chain;
  for (int label : demo.labels) {
    if (chain.empty() || chain.back() != label) chain.push_back(label);
  }
  return chain;
}

std::vector<nn::NamedParam> sequential_params(SequentialSkillModel& m) {
  return {
      {"gru.W_rx", &m.gru.W_rx}, {"gru.W_rh", &m.gru.W_rh}, {"gru.W_ux", &m.gru.W_ux},
      {"gru.W_uh", &m.gru.W_uh}, {"gru.W_cx", &m.gru.W_cx}, {"gru.W_ch", &m.gru.W_ch},
      {"gru.b_r", &m.gru.b_r},   {"gru.b_u", &m.gru.b_u},   {"gru.b_c", &m.gru.b_c},
      {"head.W", &m.head_weight}, {"head.b", &m.head_bias},
  };
}

std::vector<nn::NamedParam> reactive_params(ReactiveSkillModel& m) {
  std::vector<nn::NamedParam> out;
  for (std::size_t i = 0; i < m.encoder.layers.size(); ++i) {
    out.push_back({"enc.W" + std::to_string(i), &m.encoder.layers[i].weight});
    out.push_back({"enc.b" + std::to_string(i), &m.encoder.layers[i].bias});
  }
  for (std::size_t i = 0; i < m.decoder.layers.size(); ++i) {
    out.push_back({"dec.W" + std::to_string(i), &m.decoder.layers[i].weight});
    out.push_back({"dec.b" + std::to_string(i), &m.decoder.layers[i].bias});
  }
  return out;
}

}  // namespace

Vector make_condition(const TaskParameters& params, const Waypoint& current_pose, int primitive) {
  if (primitive < 1 || primitive > kNumPrimitives) {
    throw InvalidArgument("make_condition: primitive outside 1..8");
  }
  Vector c(kCondDim);
  Quat q = canonical_sign(current_pose.orientation.normalized());
  c << params.tile_width, params.tile_depth, params.grid_anchor.x(), params.grid_anchor.y(),
      params.grid_anchor.z(), current_pose.position.x(), current_pose.position.y(),
      current_pose.position.z(), q.x(), q.y(), q.z(), q.w(), static_cast<double>(primitive);
  return c;
}

Waypoint condition_start_pose(const Vector& condition) {
  if (condition.size() != kCondDim) throw InvalidArgument("condition must have dim 13");
  Waypoint w;
  w.t = 0.0;
  w.position = Vec3(condition[5], condition[6], condition[7]);
  w.orientation = Quat(condition[11], condition[8], condition[9], condition[10]).normalized();
  return w;
}

Vector segment_features(const Trajectory& segment) {
  Trajectory rs = resample_uniform(segment, kSegmentLen);
  const Vec3 p0 = rs.front().position;
  const Quat q0 = canonical_sign(rs.front().orientation);
  Vector f(kSegFeatDim);
  for (int i = 0; i < kSegmentLen; ++i) {
    const Waypoint& w = rs.waypoints[static_cast<std::size_t>(i)];
    Quat qi = w.orientation;
    if (qi.dot(q0) < 0.0) qi.coeffs() = -qi.coeffs();
    f.segment<3>(7 * i) = w.position - p0;
    f.segment<4>(7 * i + 3) = qi.coeffs() - q0.coeffs();  // (x, y, z, w)
  }
  return f;
}

NormStats compute_norm_stats(const PooledDataset& pool) {
  if (pool.demos.empty()) throw InvalidArgument("compute_norm_stats: empty pool");

  std::vector<Vector> conds, segs;
  for (const Demonstration& demo : pool.demos) {
    auto segments = segment_by_label(demo);
    for (int prim = 1; prim <= kNumPrimitives; ++prim) {
      const Trajectory& seg = segments[static_cast<std::size_t>(prim - 1)];
      conds.push_back(make_condition(demo.params, seg.front(), prim));
      segs.push_back(segment_features(seg));
    }
  }

  auto stats = [](const std::vector<Vector>& rows, Vector& mean, Vector& std) {
    const double n = static_cast<double>(rows.size());
    mean = Vector::Zero(rows.front().size());
    for (const Vector& r : rows) mean += r;
    mean /= n;
    Vector var = Vector::Zero(mean.size());
    for (const Vector& r : rows) var += (r - mean).cwiseAbs2();
    var /= n;
    std = var.cwiseSqrt().cwiseMax(1e-8);
  };

  NormStats norm;
  stats(conds, norm.cond_mean, norm.cond_std);
  stats(segs, norm.seg_mean, norm.seg_std);
  return norm;
}

SequentialTrainer::SequentialTrainer(const PooledDataset& pool, std::uint64_t seed) {
  if (pool.demos.empty()) throw InvalidArgument("train_sequential: empty pool");
  SplitMix64 rng(seed);
  model_.gru = nn::make_gru(kSeqVocab, kSeqHidden, rng);
  model_.head_weight = nn::xavier_uniform(kSeqVocab, kSeqHidden, rng);
  model_.head_bias = Matrix::Zero(kSeqVocab, 1);
  for (const Demonstration& demo : pool.demos) {
    std::vector<int> chain = label_chain(demo);
    chain.push_back(kDoneLabel);
    sequences_.push_back(std::move(chain));
  }
}

void SequentialTrainer::run_epochs(int epochs) {
  if (epochs < 1) throw InvalidArgument("train_sequential: epochs must be >= 1");
  std::vector<nn::NamedParam> params = sequential_params(model_);
  std::vector<Matrix*> tensors;
  for (auto& p : params) tensors.push_back(p.tensor);

  nn::Tape tape;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    double epoch_loss = 0.0;
    for (const std::vector<int>& targets : sequences_) {
      tape.clear();
      nn::GruVars gru = nn::register_gru(tape, model_.gru);
      nn::Tape::Var head_w = tape.leaf(model_.head_weight, true);
      nn::Tape::Var head_b = tape.leaf(model_.head_bias, true);

      nn::Tape::Var h = tape.constant(Matrix::Zero(kSeqHidden, 1));
      nn::Tape::Var loss{};
      for (std::size_t k = 0; k < targets.size(); ++k) {
        Matrix x = k == 0 ? Matrix(Vector::Zero(kSeqVocab)) : Matrix(onehot(targets[k - 1]));
        h = nn::gru_step(tape, gru, tape.constant(x), h);
        nn::Tape::Var logits = tape.affine(head_w, h, head_b);
        nn::Tape::Var ce = tape.softmax_cross_entropy(logits, targets[k] - 1);
        loss = k == 0 ? ce : tape.add(loss, ce);
      }
      loss = tape.scale(loss, 1.0 / static_cast<double>(targets.size()));
      tape.backward(loss);
      epoch_loss += tape.value(loss)(0, 0);

      std::vector<Matrix> grads;
      std::vector<nn::Tape::Var> vars = {gru.W_rx, gru.W_rh, gru.W_ux, gru.W_uh, gru.W_cx,
                                         gru.W_ch, gru.b_r,  gru.b_u,  gru.b_c,  head_w,
                                         head_b};
      for (nn::Tape::Var v : vars) grads.push_back(tape.grad(v));
      nn::adam_step(adam_, tensors, grads);
    }
    trace_.push_back(epoch_loss / static_cast<double>(sequences_.size()));
  }
}

SequentialSkillModel train_sequential(const PooledDataset& pool, int epochs, std::uint64_t seed,
                                      std::vector<double>* loss_trace) {
  SequentialTrainer trainer(pool, seed);
  trainer.run_epochs(epochs);
  if (loss_trace) *loss_trace = trainer.loss_trace();
  return trainer.model();
}

std::pair<int, double> predict_next(const SequentialSkillModel& model,
                                    const std::vector<int>& history) {
  for (std::size_t i = 0; i < history.size(); ++i) {
    int label = history[i];
    if (label < 1 || label > kDoneLabel) throw InvalidArgument("predict_next: label outside 1..9");
    if (label == kDoneLabel && i + 1 != history.size()) {
      throw InvalidArgument("predict_next: history continues after DONE");
    }
  }
  nn::GruState s{Vector::Zero(kSeqHidden)};
  s = nn::gru_step(model.gru, Vector::Zero(kSeqVocab), s);  // START
  for (int label : history) s = nn::gru_step(model.gru, onehot(label), s);

  Vector logits = model.head_weight * s.h + model.head_bias.col(0);
  double zmax = logits.maxCoeff();
  Vector ex = (logits.array() - zmax).exp();
  Vector softmax = ex / ex.sum();
  int best = 0;
  softmax.maxCoeff(&best);
  return {best + 1, softmax[best]};
}

ReactiveTrainer::ReactiveTrainer(const PooledDataset& pool, int primitive, std::uint64_t seed,
                                 const NormStats& norm)
    : norm_(norm), eps_rng_(seed ^ 0xD1B54A32D192ED03ull) {
  if (primitive < 1 || primitive > kNumPrimitives) {
    throw InvalidArgument("train_reactive: primitive outside 1..8");
  }
  if (pool.demos.empty()) throw InvalidArgument("train_reactive: empty pool");

  SplitMix64 rng(seed);
  model_.primitive = primitive;
  model_.encoder = nn::make_mlp({kSegFeatDim + kCondDim, kVaeHidden, 2 * kLatentDim},
                                {nn::Activation::kTanh, nn::Activation::kLinear}, rng);
  model_.decoder = nn::make_mlp({kLatentDim + kCondDim, kVaeHidden, kSegFeatDim},
                                {nn::Activation::kTanh, nn::Activation::kLinear}, rng);

  for (const Demonstration& demo : pool.demos) {
    auto segments = segment_by_label(demo);
    const Trajectory& seg = segments[static_cast<std::size_t>(primitive - 1)];
    Vector cond = make_condition(demo.params, seg.front(), primitive);
    conditions_.push_back(normalize_features(cond, norm_.cond_mean, norm_.cond_std));
    targets_.push_back(
        normalize_features(segment_features(seg), norm_.seg_mean, norm_.seg_std));
  }
}

void ReactiveTrainer::run_epochs(int epochs) {
  if (epochs < 1) throw InvalidArgument("train_reactive: epochs must be >= 1");
  std::vector<nn::NamedParam> params = reactive_params(model_);
  std::vector<Matrix*> tensors;
  for (auto& p : params) tensors.push_back(p.tensor);

  nn::Tape tape;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    double epoch_loss = 0.0;
    for (std::size_t i = 0; i < targets_.size(); ++i) {
      tape.clear();
      nn::MlpVars enc = nn::register_mlp(tape, model_.encoder);
      nn::MlpVars dec = nn::register_mlp(tape, model_.decoder);

      Matrix enc_in(kSegFeatDim + kCondDim, 1);
      enc_in.topRows(kSegFeatDim) = targets_[i];
      enc_in.bottomRows(kCondDim) = conditions_[i];
      nn::Tape::Var stats = nn::mlp_forward(tape, model_.encoder, enc, tape.constant(enc_in));
      nn::Tape::Var mu = tape.rows(stats, 0, kLatentDim);
      nn::Tape::Var logvar = tape.rows(stats, kLatentDim, kLatentDim);

      Vector eps(kLatentDim);
      for (int d = 0; d < kLatentDim; ++d) eps[d] = eps_rng_.gaussian();
      nn::Tape::Var z = tape.reparameterize(mu, logvar, eps);
      nn::Tape::Var dec_in = tape.vconcat(z, tape.constant(conditions_[i]));
      nn::Tape::Var recon = nn::mlp_forward(tape, model_.decoder, dec, dec_in);

      nn::Tape::Var loss = tape.add_scaled(tape.mse(recon, targets_[i]),
                                           tape.gaussian_kl(mu, logvar), kKlBeta);
      tape.backward(loss);
      epoch_loss += tape.value(loss)(0, 0);

      std::vector<Matrix> grads;
      for (const auto& lv : enc.layers) {
        grads.push_back(tape.grad(lv.first));
        grads.push_back(tape.grad(lv.second));
      }
      for (const auto& lv : dec.layers) {
        grads.push_back(tape.grad(lv.first));
        grads.push_back(tape.grad(lv.second));
      }
      nn::adam_step(adam_, tensors, grads);
    }
    trace_.push_back(epoch_loss / static_cast<double>(targets_.size()));
  }
}

ReactiveSkillModel train_reactive(const PooledDataset& pool, int primitive, int epochs,
                                  std::uint64_t seed, std::vector<double>* loss_trace) {
  NormStats norm = compute_norm_stats(pool);
  ReactiveTrainer trainer(pool, primitive, seed, norm);
  trainer.run_epochs(epochs);
  if (loss_trace) *loss_trace = trainer.loss_trace();
  return trainer.model();
}

Trajectory decode_segment(const ReactiveSkillModel& model, const NormStats& norm,
                          const Vector& condition, const Vector& z) {
  if (condition.size() != kCondDim) throw InvalidArgument("decode_segment: condition dim != 13");
  if (z.size() != kLatentDim) throw InvalidArgument("decode_segment: latent dim != 3");

  Vector cn = normalize_features(condition, norm.cond_mean, norm.cond_std);
  Vector in(kLatentDim + kCondDim);
  in.head(kLatentDim) = z;
  in.tail(kCondDim) = cn;
  Vector feats = denormalize_features(nn::mlp_forward(model.decoder, in), norm.seg_mean,
                                      norm.seg_std);

  Waypoint start = condition_start_pose(condition);
  Trajectory out;
  out.waypoints.reserve(kSegmentLen);
  Waypoint first = start;
  first.t = 0.0;
  out.waypoints.push_back(first);  // anchored exactly
  for (int i = 1; i < kSegmentLen; ++i) {
    Waypoint w;
    w.t = static_cast<double>(i) * kSegmentDt;
    w.position = start.position + Vec3(feats[7 * i], feats[7 * i + 1], feats[7 * i + 2]);
    Eigen::Vector4d qc = start.orientation.coeffs() + feats.segment<4>(7 * i + 3);
    double n = qc.norm();
    w.orientation = n > 1e-6 ? Quat(qc / n) : start.orientation;
    out.waypoints.push_back(w);
  }
  return out;
}

Vector encode_posterior_mean(const ReactiveSkillModel& model, const NormStats& norm,
                             const Vector& condition, const Vector& seg_feats) {
  Vector in(kSegFeatDim + kCondDim);
  in.head(kSegFeatDim) = normalize_features(seg_feats, norm.seg_mean, norm.seg_std);
  in.tail(kCondDim) = normalize_features(condition, norm.cond_mean, norm.cond_std);
  Vector stats = nn::mlp_forward(model.encoder, in);
  return stats.head(kLatentDim);
}

double reactive_reconstruction_error(const ReactiveSkillModel& model, const NormStats& norm,
                                     const PooledDataset& pool) {
  if (pool.demos.empty()) throw InvalidArgument("reconstruction error: empty pool");
  double total = 0.0;
  for (const Demonstration& demo : pool.demos) {
    auto segments = segment_by_label(demo);
    const Trajectory& seg = segments[static_cast<std::size_t>(model.primitive - 1)];
    Vector cond = make_condition(demo.params, seg.front(), model.primitive);
    Vector feats = segment_features(seg);
    Vector mu = encode_posterior_mean(model, norm, cond, feats);
    Trajectory decoded = decode_segment(model, norm, cond, mu);
    Trajectory truth = resample_uniform(seg, kSegmentLen);
    double err = 0.0;
    for (int i = 0; i < kSegmentLen; ++i) {
      err += (decoded.waypoints[static_cast<std::size_t>(i)].position -
              truth.waypoints[static_cast<std::size_t>(i)].position)
                 .norm();
    }
    total += err / kSegmentLen;
  }
  return total / static_cast<double>(pool.demos.size());
}

BundleTrainer::BundleTrainer(const PooledDataset& pool, std::string dataset_id,
                             std::uint64_t seed)
    : pool_(pool), dataset_id_(std::move(dataset_id)), seed_(seed) {
  norm_ = compute_norm_stats(pool);
  sequential_ = std::make_unique<SequentialTrainer>(pool, seed);
  for (int prim = 1; prim <= kNumPrimitives; ++prim) {
    reactive_.push_back(std::make_unique<ReactiveTrainer>(
        pool, prim, seed + static_cast<std::uint64_t>(prim), norm_));
  }
}

void BundleTrainer::run_epochs(int epochs) {
  sequential_->run_epochs(epochs);
  for (auto& trainer : reactive_) trainer->run_epochs(epochs);
  epochs_ += epochs;
}

SkillModelBundle BundleTrainer::snapshot() const {
  SkillModelBundle bundle;
  bundle.sequential = sequential_->model();
  for (const auto& trainer : reactive_) bundle.reactive.push_back(trainer->model());
  bundle.norm = norm_;
  bundle.dataset_id = dataset_id_;
  bundle.seed = seed_;
  bundle.epochs_trained = epochs_;
  return bundle;
}

SkillModelBundle train_bundle(const PooledDataset& pool, const std::string& dataset_id, int epochs,
                              std::uint64_t seed) {
  BundleTrainer trainer(pool, dataset_id, seed);
  trainer.run_epochs(epochs);
  return trainer.snapshot();
}

std::vector<KnowledgeRow> knowledge_rows(const SkillModelBundle& bundle,
                                         const PooledDataset& pool) {
  double cond_rms = std::sqrt(bundle.norm.cond_std.squaredNorm() / kCondDim);
  double seg_rms = std::sqrt(bundle.norm.seg_std.squaredNorm() / kSegFeatDim);
  std::vector<KnowledgeRow> rows;
  for (const ReactiveSkillModel& model : bundle.reactive) {
    KnowledgeRow row;
    row.primitive = model.primitive;
    row.next_label = model.primitive < kNumPrimitives ? model.primitive + 1 : kDoneLabel;
    row.mean_error = reactive_reconstruction_error(model, bundle.norm, pool);
    row.cond_std_rms = cond_rms;
    row.seg_std_rms = seg_rms;
    rows.push_back(row);
  }
  return rows;
}

namespace {

void append_matrix(std::string& out, const Matrix& m) {
  out += '[';
  for (long r = 0; r < m.rows(); ++r) {
    if (r) out += ',';
    out += '[';
    for (long c = 0; c < m.cols(); ++c) {
      if (c) out += ',';
      out += fmt_double(m(r, c));
    }
    out += ']';
  }
  out += ']';
}

void append_col(std::string& out, const Matrix& m) {
  out += '[';
  for (long r = 0; r < m.rows(); ++r) {
    if (r) out += ',';
    out += fmt_double(m(r, 0));
  }
  out += ']';
}

void append_vector(std::string& out, const Vector& v) {
  out += '[';
  for (long i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += fmt_double(v[i]);
  }
  out += ']';
}

const char* activation_name(nn::Activation a) {
  switch (a) {
    case nn::Activation::kLinear: return "linear";
    case nn::Activation::kTanh: return "tanh";
    case nn::Activation::kSigmoid: return "sigmoid";
  }
  return "linear";
}

nn::Activation activation_from_name(const std::string& s) {
  if (s == "linear") return nn::Activation::kLinear;
  if (s == "tanh") return nn::Activation::kTanh;
  if (s == "sigmoid") return nn::Activation::kSigmoid;
  throw ParseError("bundle: unknown activation '" + s + "'", 0, "act");
}

void append_mlp(std::string& out, const nn::MlpParams& mlp) {
  out += "{\"layers\":[";
  for (std::size_t i = 0; i < mlp.layers.size(); ++i) {
    if (i) out += ',';
    out += "{\"act\":\"";
    out += activation_name(mlp.layers[i].activation);
    out += "\",\"W\":";
    append_matrix(out, mlp.layers[i].weight);
    out += ",\"b\":";
    append_col(out, mlp.layers[i].bias);
    out += '}';
  }
  out += "]}";
}

Matrix parse_matrix(const json& j, const char* field) {
  if (!j.is_array() || j.empty() || !j[0].is_array()) {
    throw ParseError(std::string("bundle: '") + field + "' must be a 2-d array", 0, field);
  }
  const std::size_t rows = j.size();
  const std::size_t cols = j[0].size();
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols) {
      throw ParseError(std::string("bundle: ragged matrix in '") + field + "'", 0, field);
    }
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

Matrix parse_col(const json& j, const char* field) {
  if (!j.is_array()) throw ParseError(std::string("bundle: '") + field + "' must be an array", 0, field);
  Matrix m(j.size(), 1);
  for (std::size_t i = 0; i < j.size(); ++i) m(i, 0) = j[i].get<double>();
  return m;
}

Vector parse_vector(const json& j, const char* field) { return parse_col(j, field).col(0); }

nn::MlpParams parse_mlp(const json& j, const char* field) {
  nn::MlpParams p;
  if (!j.is_object() || !j.contains("layers") || !j["layers"].is_array()) {
    throw ParseError(std::string("bundle: bad mlp '") + field + "'", 0, field);
  }
  for (const json& lj : j["layers"]) {
    nn::MlpLayer layer;
    layer.activation = activation_from_name(lj.at("act").get<std::string>());
    layer.weight = parse_matrix(lj.at("W"), field);
    layer.bias = parse_col(lj.at("b"), field);
    if (layer.bias.rows() != layer.weight.rows()) {
      throw ParseError(std::string("bundle: bias/weight mismatch in '") + field + "'", 0, field);
    }
    if (!p.layers.empty() && layer.weight.cols() != p.layers.back().weight.rows()) {
      throw ParseError(std::string("bundle: layer shapes do not chain in '") + field + "'", 0,
                       field);
    }
    p.layers.push_back(std::move(layer));
  }
  return p;
}

}  // namespace

std::string save_bundle(const SkillModelBundle& bundle) {
  if (bundle.reactive.size() != kNumPrimitives) {
    throw InvalidArgument("save_bundle: bundle must hold exactly 8 reactive models");
  }
  std::string out = "{\"kind\":\"bundle\",\"version\":1,\"seed\":";
  out += std::to_string(bundle.seed);
  out += ",\"epochs\":";
  out += std::to_string(bundle.epochs_trained);
  out += ",\"dataset_id\":";
  out += json_quote(bundle.dataset_id);
  out += ",\"norm\":{\"cond_mean\":";
  append_vector(out, bundle.norm.cond_mean);
  out += ",\"cond_std\":";
  append_vector(out, bundle.norm.cond_std);
  out += ",\"seg_mean\":";
  append_vector(out, bundle.norm.seg_mean);
  out += ",\"seg_std\":";
  append_vector(out, bundle.norm.seg_std);
  out += "},\"sequential\":{\"gru\":{";
  const nn::GruParams& g = bundle.sequential.gru;
  const std::pair<const char*, const Matrix*> gru_fields[] = {
      {"W_rx", &g.W_rx}, {"W_rh", &g.W_rh}, {"W_ux", &g.W_ux},
      {"W_uh", &g.W_uh}, {"W_cx", &g.W_cx}, {"W_ch", &g.W_ch},
  };
  for (std::size_t i = 0; i < 6; ++i) {
    if (i) out += ',';
    out += '"';
    out += gru_fields[i].first;
    out += "\":";
    append_matrix(out, *gru_fields[i].second);
  }
  out += ",\"b_r\":";
  append_col(out, g.b_r);
  out += ",\"b_u\":";
  append_col(out, g.b_u);
  out += ",\"b_c\":";
  append_col(out, g.b_c);
  out += "},\"head_W\":";
  append_matrix(out, bundle.sequential.head_weight);
  out += ",\"head_b\":";
  append_col(out, bundle.sequential.head_bias);
  out += "},\"reactive\":[";
  for (std::size_t i = 0; i < bundle.reactive.size(); ++i) {
    if (i) out += ',';
    out += "{\"primitive\":";
    out += std::to_string(bundle.reactive[i].primitive);
    out += ",\"encoder\":";
    append_mlp(out, bundle.reactive[i].encoder);
    out += ",\"decoder\":";
    append_mlp(out, bundle.reactive[i].decoder);
    out += '}';
  }
  out += "]}\n";
  return out;
}

SkillModelBundle load_bundle(const std::string& bytes) {
  json j;
  try {
    j = json::parse(bytes);
  } catch (const json::parse_error& e) {
    throw ParseError("bundle parse error at byte " + std::to_string(e.byte) + ": " + e.what(),
                     0, "");
  }
  if (!j.is_object() || j.value("kind", "") != "bundle") {
    throw ParseError("not a bundle file", 0, "kind");
  }
  if (j.value("version", 0) != 1) throw ParseError("unsupported bundle version", 0, "version");

  SkillModelBundle b;
  b.seed = j.at("seed").get<std::uint64_t>();
  b.epochs_trained = j.at("epochs").get<int>();
  b.dataset_id = j.at("dataset_id").get<std::string>();

  const json& nj = j.at("norm");
  b.norm.cond_mean = parse_vector(nj.at("cond_mean"), "cond_mean");
  b.norm.cond_std = parse_vector(nj.at("cond_std"), "cond_std");
  b.norm.seg_mean = parse_vector(nj.at("seg_mean"), "seg_mean");
  b.norm.seg_std = parse_vector(nj.at("seg_std"), "seg_std");
  if (b.norm.cond_mean.size() != kCondDim || b.norm.cond_std.size() != kCondDim ||
      b.norm.seg_mean.size() != kSegFeatDim || b.norm.seg_std.size() != kSegFeatDim) {
    throw ParseError("bundle: norm stats have wrong dimensions", 0, "norm");
  }

  const json& sj = j.at("sequential");
  const json& gj = sj.at("gru");
  b.sequential.gru.W_rx = parse_matrix(gj.at("W_rx"), "W_rx");
  b.sequential.gru.W_rh = parse_matrix(gj.at("W_rh"), "W_rh");
  b.sequential.gru.W_ux = parse_matrix(gj.at("W_ux"), "W_ux");
  b.sequential.gru.W_uh = parse_matrix(gj.at("W_uh"), "W_uh");
  b.sequential.gru.W_cx = parse_matrix(gj.at("W_cx"), "W_cx");
  b.sequential.gru.W_ch = parse_matrix(gj.at("W_ch"), "W_ch");
  b.sequential.gru.b_r = parse_col(gj.at("b_r"), "b_r");
  b.sequential.gru.b_u = parse_col(gj.at("b_u"), "b_u");
  b.sequential.gru.b_c = parse_col(gj.at("b_c"), "b_c");
  b.sequential.head_weight = parse_matrix(sj.at("head_W"), "head_W");
  b.sequential.head_bias = parse_col(sj.at("head_b"), "head_b");
  if (b.sequential.gru.input_dim() != kSeqVocab || b.sequential.gru.hidden_dim() != kSeqHidden ||
      b.sequential.head_weight.rows() != kSeqVocab ||
      b.sequential.head_weight.cols() != kSeqHidden) {
    throw ParseError("bundle: sequential model has inconsistent shapes", 0, "sequential");
  }

  const json& rj = j.at("reactive");
  if (!rj.is_array() || rj.size() != kNumPrimitives) {
    throw ParseError("bundle: expected exactly 8 reactive models", 0, "reactive");
  }
  std::array<bool, kNumPrimitives> seen{};
  for (const json& mj : rj) {
    ReactiveSkillModel m;
    m.primitive = mj.at("primitive").get<int>();
    if (m.primitive < 1 || m.primitive > kNumPrimitives || seen[m.primitive - 1]) {
      throw ParseError("bundle: bad or duplicate primitive index", 0, "primitive");
    }
    seen[m.primitive - 1] = true;
    m.encoder = parse_mlp(mj.at("encoder"), "encoder");
    m.decoder = parse_mlp(mj.at("decoder"), "decoder");
    if (m.encoder.input_dim() != kSegFeatDim + kCondDim ||
        m.encoder.output_dim() != 2 * kLatentDim ||
        m.decoder.input_dim() != kLatentDim + kCondDim ||
        m.decoder.output_dim() != kSegFeatDim) {
      throw ParseError("bundle: reactive model has inconsistent shapes", 0, "reactive");
    }
    b.reactive.push_back(std::move(m));
  }
  std::sort(b.reactive.begin(), b.reactive.end(),
            [](const ReactiveSkillModel& a, const ReactiveSkillModel& c) {
              return a.primitive < c.primitive;
            });
  return b;
}

}  // namespace hil
