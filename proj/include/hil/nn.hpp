#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "hil/rng.hpp"

namespace hil::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Numerically stable logistic function (branches on sign so both tails are
/// computed without overflow, keeping results bit-identical across builds).
double sigmoid(double x);

/// Reverse-mode autodiff tape over dense float64 matrices. Column vectors are
/// n x 1 matrices. Nodes are created in forward order; backward() walks them
/// in reverse, accumulating gradients into every leaf created with
/// requires_grad = true. Any non-finite forward value is a hard error.
class Tape {
 public:
  struct Var {
    int id = -1;
  };

  Var leaf(const Matrix& value, bool requires_grad);
  Var constant(const Matrix& value) { return leaf(value, false); }

  const Matrix& value(Var v) const;
  const Matrix& grad(Var v) const;

  Var affine(Var w, Var x, Var b);  // w*x + b
  Var matmul(Var a, Var b);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var hadamard(Var a, Var b);
  Var scale(Var a, double s);
  Var sigmoid(Var a);
  Var tanh(Var a);
  Var one_minus(Var a);  // 1 - a, elementwise
  Var vconcat(Var a, Var b);
  Var rows(Var a, int start, int count);

  /// z = mu + eps .* exp(0.5 * logvar); eps is a constant.
  Var reparameterize(Var mu, Var logvar, const Vector& eps);

  /// Mean squared elementwise error against a constant target. Scalar.
  Var mse(Var pred, const Matrix& target);

  /// 0.5 * sum(mu^2 + exp(logvar) - 1 - logvar). Scalar.
  Var gaussian_kl(Var mu, Var logvar);

  /// -log softmax(logits)[target]. Scalar.
  Var softmax_cross_entropy(Var logits, int target);

  Var add_scaled(Var a, Var b, double s);  // a + s*b

  /// Seeds d(scalar)/d(scalar) = 1 and accumulates gradients backwards.
  void backward(Var scalar_loss);

  void clear();
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    std::function<void(Tape&, const Matrix&)> backprop;  // empty for leaves
  };

  Var push(Matrix value, std::function<void(Tape&, const Matrix&)> backprop);
  void accumulate(Var v, const Matrix& g);

  std::vector<Node> nodes_;
  friend struct TapeTestPeek;
};

enum class Activation { kLinear, kTanh, kSigmoid };

struct MlpLayer {
  Matrix weight;
  Matrix bias;  // n x 1
  Activation activation = Activation::kLinear;
};

struct MlpParams {
  std::vector<MlpLayer> layers;

  int input_dim() const { return layers.empty() ? 0 : static_cast<int>(layers.front().weight.cols()); }
  int output_dim() const { return layers.empty() ? 0 : static_cast<int>(layers.back().weight.rows()); }
};

/// Gated recurrent cell. Weight naming: W_<gate><source>, gate in
/// {r: reset, u: update, c: candidate}, source in {x: input, h: hidden}.
/// Update rule: r = sigm(W_rx x + W_rh h + b_r), u = sigm(W_ux x + W_uh h + b_u),
/// c = tanh(W_cx x + W_ch (r.*h) + b_c), h' = u.*h + (1-u).*c.
struct GruParams {
  Matrix W_rx, W_rh, W_ux, W_uh, W_cx, W_ch;
  Matrix b_r, b_u, b_c;  // n x 1

  int input_dim() const { return static_cast<int>(W_rx.cols()); }
  int hidden_dim() const { return static_cast<int>(W_rx.rows()); }
};

struct GruState {
  Vector h;
};

/// Xavier-uniform initialization, bound sqrt(6 / (fan_in + fan_out)), drawn
/// from the given SplitMix64 stream in row-major order. Biases zero.
Matrix xavier_uniform(int rows, int cols, SplitMix64& rng);

GruParams make_gru(int input_dim, int hidden_dim, SplitMix64& rng);
MlpParams make_mlp(const std::vector<int>& dims, const std::vector<Activation>& acts,
                   SplitMix64& rng);

/// One GRU step on plain values.
GruState gru_step(const GruParams& params, const Vector& x, const GruState& state);

/// Tape leaves for every GRU parameter, in declaration order.
struct GruVars {
  Tape::Var W_rx, W_rh, W_ux, W_uh, W_cx, W_ch, b_r, b_u, b_c;
};
GruVars register_gru(Tape& tape, const GruParams& params);
Tape::Var gru_step(Tape& tape, const GruVars& vars, Tape::Var x, Tape::Var h);

/// MLP forward on plain values.
Vector mlp_forward(const MlpParams& params, const Vector& x);

struct MlpVars {
  std::vector<std::pair<Tape::Var, Tape::Var>> layers;  // (weight, bias)
};
MlpVars register_mlp(Tape& tape, const MlpParams& params);
Tape::Var mlp_forward(Tape& tape, const MlpParams& params, const MlpVars& vars, Tape::Var x);

struct VaeLossValues {
  double recon_mse = 0.0;
  double kl = 0.0;
  double total = 0.0;
};

/// recon_mse = mean((reconstruction - target)^2),
/// kl = 0.5 * sum(mu^2 + exp(logvar) - 1 - logvar), total = recon + beta*kl.
VaeLossValues vae_losses(const Vector& reconstruction, const Vector& target, const Vector& mu,
                         const Vector& logvar, double beta);

/// z = mu + eps .* exp(0.5*logvar) on plain values.
Vector reparameterize(const Vector& mu, const Vector& logvar, const Vector& eps);

/// Bias-corrected Adam. Moment buffers are lazily sized on first use.
struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long step = 0;
  std::vector<Matrix> m, v;
};

void adam_step(AdamState& state, const std::vector<Matrix*>& params,
               const std::vector<Matrix>& grads);

/// Named view of a parameter tensor for gradient checking and optimizers.
struct NamedParam {
  std::string name;
  Matrix* tensor = nullptr;
};

struct GradCheckEntry {
  std::string name;
  double max_rel_err = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> per_param;
  double max_rel_err = 0.0;
  bool pass = false;
};

/// Compares analytic gradients against central finite differences.
/// loss_fn evaluates the loss at the current parameter values; grad_fn
/// returns analytic gradients aligned with `params`. Relative error metric:
/// |a - f| / max(1e-6, |a| + |f|).
GradCheckReport grad_check(const std::function<double()>& loss_fn,
                           const std::function<std::vector<Matrix>()>& grad_fn,
                           const std::vector<NamedParam>& params, double tolerance,
                           double fd_step = 1e-5);

}  // namespace hil::nn
