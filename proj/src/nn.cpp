#include "hil/nn.hpp"

#include <cmath>

#include "hil/errors.hpp"

namespace hil::nn {

double sigmoid(double x) {
  if (x >= 0.0) {
    double e = std::exp(-x);
    return 1.0 / (1.0 + e);
  }
  double e = std::exp(x);
  return e / (1.0 + e);
}

namespace {

void check_finite(const Matrix& m, const char* where) {
  if (!m.allFinite()) throw Error(std::string("non-finite value in ") + where);
}

Matrix sigmoid_mat(const Matrix& x) {
  return x.unaryExpr([](double v) { return sigmoid(v); });
}

}  // namespace

Tape::Var Tape::push(Matrix value, std::function<void(Tape&, const Matrix&)> backprop) {
  check_finite(value, "tape op");
  Node node;
  node.value = std::move(value);
  node.backprop = std::move(backprop);
  nodes_.push_back(std::move(node));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Tape::Var Tape::leaf(const Matrix& value, bool requires_grad) {
  check_finite(value, "tape leaf");
  Node node;
  node.value = value;
  node.requires_grad = requires_grad;
  nodes_.push_back(std::move(node));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

const Matrix& Tape::value(Var v) const { return nodes_.at(v.id).value; }

const Matrix& Tape::grad(Var v) const {
  const Node& node = nodes_.at(v.id);
  if (node.grad.size() == 0) {
    static const Matrix empty;
    const_cast<Node&>(node).grad = Matrix::Zero(node.value.rows(), node.value.cols());
  }
  return node.grad;
}

void Tape::accumulate(Var v, const Matrix& g) {
  Node& node = nodes_.at(v.id);
  if (node.grad.size() == 0) {
    node.grad = g;
  } else {
    node.grad += g;
  }
}

Tape::Var Tape::affine(Var w, Var x, Var b) {
  Matrix out = value(w) * value(x) + value(b);
  return push(std::move(out), [w, x, b](Tape& t, const Matrix& g) {
    t.accumulate(w, g * t.value(x).transpose());
    t.accumulate(x, t.value(w).transpose() * g);
    t.accumulate(b, g);
  });
}

Tape::Var Tape::matmul(Var a, Var b) {
  return push(value(a) * value(b), [a, b](Tape& t, const Matrix& g) {
    t.accumulate(a, g * t.value(b).transpose());
    t.accumulate(b, t.value(a).transpose() * g);
  });
}

Tape::Var Tape::add(Var a, Var b) {
  return push(value(a) + value(b), [a, b](Tape& t, const Matrix& g) {
    t.accumulate(a, g);
    t.accumulate(b, g);
  });
}

Tape::Var Tape::sub(Var a, Var b) {
  return push(value(a) - value(b), [a, b](Tape& t, const Matrix& g) {
    t.accumulate(a, g);
    t.accumulate(b, -g);
  });
}

Tape::Var Tape::hadamard(Var a, Var b) {
  return push(value(a).cwiseProduct(value(b)), [a, b](Tape& t, const Matrix& g) {
    t.accumulate(a, g.cwiseProduct(t.value(b)));
    t.accumulate(b, g.cwiseProduct(t.value(a)));
  });
}

Tape::Var Tape::scale(Var a, double s) {
  return push(value(a) * s, [a, s](Tape& t, const Matrix& g) { t.accumulate(a, g * s); });
}

Tape::Var Tape::sigmoid(Var a) {
  Matrix y = sigmoid_mat(value(a));
  Var out = push(y, nullptr);
  nodes_.back().backprop = [a, out](Tape& t, const Matrix& g) {
    const Matrix& y = t.value(out);
    t.accumulate(a, g.cwiseProduct(y.cwiseProduct(Matrix::Ones(y.rows(), y.cols()) - y)));
  };
  return out;
}

Tape::Var Tape::tanh(Var a) {
  Matrix y = value(a).array().tanh().matrix();
  Var out = push(y, nullptr);
  nodes_.back().backprop = [a, out](Tape& t, const Matrix& g) {
    const Matrix& y = t.value(out);
    t.accumulate(a, g.cwiseProduct(Matrix::Ones(y.rows(), y.cols()) - y.cwiseProduct(y)));
  };
  return out;
}

Tape::Var Tape::one_minus(Var a) {
  const Matrix& x = value(a);
  return push(Matrix::Ones(x.rows(), x.cols()) - x,
              [a](Tape& t, const Matrix& g) { t.accumulate(a, -g); });
}

Tape::Var Tape::vconcat(Var a, Var b) {
  const Matrix& va = value(a);
  const Matrix& vb = value(b);
  Matrix out(va.rows() + vb.rows(), va.cols());
  out.topRows(va.rows()) = va;
  out.bottomRows(vb.rows()) = vb;
  long na = va.rows();
  long nb = vb.rows();
  return push(std::move(out), [a, b, na, nb](Tape& t, const Matrix& g) {
    t.accumulate(a, g.topRows(na));
    t.accumulate(b, g.bottomRows(nb));
  });
}

Tape::Var Tape::rows(Var a, int start, int count) {
  const Matrix& va = value(a);
  long total = va.rows();
  return push(va.middleRows(start, count), [a, start, count, total](Tape& t, const Matrix& g) {
    Matrix full = Matrix::Zero(total, g.cols());
    full.middleRows(start, count) = g;
    t.accumulate(a, full);
  });
}

Tape::Var Tape::reparameterize(Var mu, Var logvar, const Vector& eps) {
  Matrix sigma = (0.5 * value(logvar)).array().exp().matrix();
  Matrix z = value(mu) + eps.cwiseProduct(sigma);
  return push(std::move(z), [mu, logvar, eps, sigma](Tape& t, const Matrix& g) {
    t.accumulate(mu, g);
    t.accumulate(logvar, 0.5 * g.cwiseProduct(eps.cwiseProduct(sigma)));
  });
}

Tape::Var Tape::mse(Var pred, const Matrix& target) {
  const Matrix& p = value(pred);
  if (p.rows() != target.rows() || p.cols() != target.cols()) {
    throw InvalidArgument("mse: shape mismatch");
  }
  double n = static_cast<double>(target.size());
  Matrix diff = p - target;
  Matrix out(1, 1);
  out(0, 0) = diff.squaredNorm() / n;
  return push(std::move(out), [pred, diff, n](Tape& t, const Matrix& g) {
    t.accumulate(pred, (2.0 / n) * g(0, 0) * diff);
  });
}

Tape::Var Tape::gaussian_kl(Var mu, Var logvar) {
  const Matrix& m = value(mu);
  const Matrix& lv = value(logvar);
  if (m.rows() != lv.rows() || m.cols() != lv.cols()) {
    throw InvalidArgument("gaussian_kl: shape mismatch");
  }
  Matrix ev = lv.array().exp().matrix();
  Matrix out(1, 1);
  out(0, 0) = 0.5 * (m.squaredNorm() + ev.sum() - static_cast<double>(m.size()) - lv.sum());
  return push(std::move(out), [mu, logvar, ev](Tape& t, const Matrix& g) {
    double s = g(0, 0);
    t.accumulate(mu, s * t.value(mu));
    t.accumulate(logvar, 0.5 * s * (ev - Matrix::Ones(ev.rows(), ev.cols())));
  });
}

Tape::Var Tape::softmax_cross_entropy(Var logits, int target) {
  const Matrix& z = value(logits);
  if (target < 0 || target >= z.rows() || z.cols() != 1) {
    throw InvalidArgument("softmax_cross_entropy: bad target or logits shape");
  }
  double zmax = z.maxCoeff();
  Matrix shifted = z - Matrix::Constant(z.rows(), 1, zmax);
  Matrix expz = shifted.array().exp().matrix();
  double denom = expz.sum();
  Matrix softmax = expz / denom;
  Matrix out(1, 1);
  out(0, 0) = -(shifted(target, 0) - std::log(denom));
  return push(std::move(out), [logits, softmax, target](Tape& t, const Matrix& g) {
    Matrix grad = softmax;
    grad(target, 0) -= 1.0;
    t.accumulate(logits, g(0, 0) * grad);
  });
}

Tape::Var Tape::add_scaled(Var a, Var b, double s) {
  return push(value(a) + s * value(b), [a, b, s](Tape& t, const Matrix& g) {
    t.accumulate(a, g);
    t.accumulate(b, s * g);
  });
}

void Tape::backward(Var scalar_loss) {
  Node& loss = nodes_.at(scalar_loss.id);
  if (loss.value.size() != 1) throw InvalidArgument("backward: loss must be scalar");
  for (Node& n : nodes_) {
    if (n.grad.size() != 0) n.grad.setZero();
  }
  accumulate(scalar_loss, Matrix::Ones(1, 1));
  for (int i = scalar_loss.id; i >= 0; --i) {
    Node& node = nodes_[static_cast<std::size_t>(i)];
    if (!node.backprop || node.grad.size() == 0) continue;
    node.backprop(*this, node.grad);
  }
}

void Tape::clear() { nodes_.clear(); }

Matrix xavier_uniform(int rows, int cols, SplitMix64& rng) {
  double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Matrix m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) m(r, c) = rng.uniform(-bound, bound);
  }
  return m;
}

GruParams make_gru(int input_dim, int hidden_dim, SplitMix64& rng) {
  GruParams p;
  p.W_rx = xavier_uniform(hidden_dim, input_dim, rng);
  p.W_rh = xavier_uniform(hidden_dim, hidden_dim, rng);
  p.W_ux = xavier_uniform(hidden_dim, input_dim, rng);
  p.W_uh = xavier_uniform(hidden_dim, hidden_dim, rng);
  p.W_cx = xavier_uniform(hidden_dim, input_dim, rng);
  p.W_ch = xavier_uniform(hidden_dim, hidden_dim, rng);
  p.b_r = Matrix::Zero(hidden_dim, 1);
  p.b_u = Matrix::Zero(hidden_dim, 1);
  p.b_c = Matrix::Zero(hidden_dim, 1);
  return p;
}

MlpParams make_mlp(const std::vector<int>& dims, const std::vector<Activation>& acts,
                   SplitMix64& rng) {
  if (dims.size() < 2 || acts.size() != dims.size() - 1) {
    throw InvalidArgument("make_mlp: dims/activations mismatch");
  }
  MlpParams p;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    MlpLayer layer;
    layer.weight = xavier_uniform(dims[i + 1], dims[i], rng);
    layer.bias = Matrix::Zero(dims[i + 1], 1);
    layer.activation = acts[i];
    p.layers.push_back(std::move(layer));
  }
  return p;
}

GruState gru_step(const GruParams& p, const Vector& x, const GruState& state) {
  if (x.size() != p.input_dim() || state.h.size() != p.hidden_dim()) {
    throw InvalidArgument("gru_step: shape mismatch");
  }
  Vector r = (p.W_rx * x + p.W_rh * state.h + p.b_r.col(0)).unaryExpr([](double v) {
    return sigmoid(v);
  });
  Vector u = (p.W_ux * x + p.W_uh * state.h + p.b_u.col(0)).unaryExpr([](double v) {
    return sigmoid(v);
  });
  Vector c = (p.W_cx * x + p.W_ch * r.cwiseProduct(state.h) + p.b_c.col(0)).array().tanh();
  GruState out;
  out.h = u.cwiseProduct(state.h) + (Vector::Ones(u.size()) - u).cwiseProduct(c);
  if (!out.h.allFinite()) throw Error("gru_step: non-finite state");
  return out;
}

GruVars register_gru(Tape& tape, const GruParams& p) {
  GruVars v;
  v.W_rx = tape.leaf(p.W_rx, true);
  v.W_rh = tape.leaf(p.W_rh, true);
  v.W_ux = tape.leaf(p.W_ux, true);
  v.W_uh = tape.leaf(p.W_uh, true);
  v.W_cx = tape.leaf(p.W_cx, true);
  v.W_ch = tape.leaf(p.W_ch, true);
  v.b_r = tape.leaf(p.b_r, true);
  v.b_u = tape.leaf(p.b_u, true);
  v.b_c = tape.leaf(p.b_c, true);
  return v;
}

Tape::Var gru_step(Tape& tape, const GruVars& v, Tape::Var x, Tape::Var h) {
  Tape::Var r = tape.sigmoid(tape.add(tape.affine(v.W_rx, x, v.b_r), tape.matmul(v.W_rh, h)));
  Tape::Var u = tape.sigmoid(tape.add(tape.affine(v.W_ux, x, v.b_u), tape.matmul(v.W_uh, h)));
  Tape::Var rh = tape.hadamard(r, h);
  Tape::Var c = tape.tanh(tape.add(tape.affine(v.W_cx, x, v.b_c), tape.matmul(v.W_ch, rh)));
  return tape.add(tape.hadamard(u, h), tape.hadamard(tape.one_minus(u), c));
}

Vector mlp_forward(const MlpParams& p, const Vector& x) {
  if (p.layers.empty()) throw InvalidArgument("mlp_forward: empty network");
  if (x.size() != p.input_dim()) throw InvalidArgument("mlp_forward: input shape mismatch");
  Vector h = x;
  for (const MlpLayer& layer : p.layers) {
    h = layer.weight * h + layer.bias.col(0);
    switch (layer.activation) {
      case Activation::kLinear: break;
      case Activation::kTanh: h = h.array().tanh(); break;
      case Activation::kSigmoid:
        h = h.unaryExpr([](double v) { return sigmoid(v); });
        break;
    }
  }
  if (!h.allFinite()) throw Error("mlp_forward: non-finite output");
  return h;
}

MlpVars register_mlp(Tape& tape, const MlpParams& p) {
  MlpVars v;
  for (const MlpLayer& layer : p.layers) {
    v.layers.emplace_back(tape.leaf(layer.weight, true), tape.leaf(layer.bias, true));
  }
  return v;
}

Tape::Var mlp_forward(Tape& tape, const MlpParams& p, const MlpVars& v, Tape::Var x) {
  Tape::Var h = x;
  for (std::size_t i = 0; i < p.layers.size(); ++i) {
    h = tape.affine(v.layers[i].first, h, v.layers[i].second);
    switch (p.layers[i].activation) {
      case Activation::kLinear: break;
      case Activation::kTanh: h = tape.tanh(h); break;
      case Activation::kSigmoid: h = tape.sigmoid(h); break;
    }
  }
  return h;
}

VaeLossValues vae_losses(const Vector& reconstruction, const Vector& target, const Vector& mu,
                         const Vector& logvar, double beta) {
  if (reconstruction.size() != target.size() || mu.size() != logvar.size()) {
    throw InvalidArgument("vae_losses: shape mismatch");
  }
  if (beta < 0.0) throw InvalidArgument("vae_losses: beta must be >= 0");
  VaeLossValues out;
  out.recon_mse = (reconstruction - target).squaredNorm() / static_cast<double>(target.size());
  out.kl = 0.5 * (mu.squaredNorm() + logvar.array().exp().sum() -
                  static_cast<double>(mu.size()) - logvar.sum());
  out.total = out.recon_mse + beta * out.kl;
  return out;
}

Vector reparameterize(const Vector& mu, const Vector& logvar, const Vector& eps) {
  if (mu.size() != logvar.size() || mu.size() != eps.size()) {
    throw InvalidArgument("reparameterize: shape mismatch");
  }
  return mu + eps.cwiseProduct((0.5 * logvar).array().exp().matrix());
}

void adam_step(AdamState& state, const std::vector<Matrix*>& params,
               const std::vector<Matrix>& grads) {
  if (params.size() != grads.size()) throw InvalidArgument("adam_step: params/grads mismatch");
  if (state.m.empty()) {
    for (const Matrix* p : params) {
      state.m.push_back(Matrix::Zero(p->rows(), p->cols()));
      state.v.push_back(Matrix::Zero(p->rows(), p->cols()));
    }
  }
  if (state.m.size() != params.size()) throw InvalidArgument("adam_step: state size mismatch");
  ++state.step;
  double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Matrix& p = *params[i];
    const Matrix& g = grads[i];
    if (g.rows() != p.rows() || g.cols() != p.cols()) {
      throw InvalidArgument("adam_step: gradient shape mismatch");
    }
    check_finite(g, "adam gradient");
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g.cwiseProduct(g);
    Matrix mhat = state.m[i] / bc1;
    Matrix vhat = state.v[i] / bc2;
    p -= state.lr * mhat.cwiseQuotient(vhat.cwiseSqrt() +
                                       Matrix::Constant(p.rows(), p.cols(), state.eps));
    check_finite(p, "adam parameter");
  }
}

GradCheckReport grad_check(const std::function<double()>& loss_fn,
                           const std::function<std::vector<Matrix>()>& grad_fn,
                           const std::vector<NamedParam>& params, double tolerance,
                           double fd_step) {
  if (!(tolerance > 0.0)) throw InvalidArgument("grad_check: tolerance must be > 0");
  std::vector<Matrix> analytic = grad_fn();
  if (analytic.size() != params.size()) throw InvalidArgument("grad_check: gradient count");

  GradCheckReport report;
  for (std::size_t i = 0; i < params.size(); ++i) {
    Matrix& tensor = *params[i].tensor;
    double worst = 0.0;
    for (long r = 0; r < tensor.rows(); ++r) {
      for (long c = 0; c < tensor.cols(); ++c) {
        double saved = tensor(r, c);
        tensor(r, c) = saved + fd_step;
        double up = loss_fn();
        tensor(r, c) = saved - fd_step;
        double down = loss_fn();
        tensor(r, c) = saved;
        double fd = (up - down) / (2.0 * fd_step);
        double a = analytic[i](r, c);
        double rel = std::abs(a - fd) / std::max(1e-6, std::abs(a) + std::abs(fd));
        worst = std::max(worst, rel);
      }
    }
    report.per_param.push_back({params[i].name, worst});
    report.max_rel_err = std::max(report.max_rel_err, worst);
  }
  report.pass = report.max_rel_err <= tolerance;
  return report;
}

}  // namespace hil::nn
