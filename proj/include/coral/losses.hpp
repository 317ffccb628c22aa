#pragma once

#include <cmath>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "coral/data.hpp"
#include "coral/matrix.hpp"
#include "coral/model.hpp"
#include "coral/numeric.hpp"
#include "coral/ordinal.hpp"

namespace coral {

// Per-task importance weights for the K-1 binary tasks.
struct TaskWeights {
  std::vector<double> lambda;

  int num_tasks() const { return static_cast<int>(lambda.size()); }

  void validate() const {
    if (lambda.empty()) throw std::domain_error("task weights: empty");
    for (double v : lambda) {
      if (!(v > 0.0)) throw std::domain_error("task weights: entries must be > 0");
    }
  }

  static TaskWeights uniform(int num_tasks) {
    TaskWeights w;
    w.lambda.assign(static_cast<std::size_t>(num_tasks), 1.0);
    return w;
  }
};

// ---------------------------------------------------------------------------
// Logit-level losses. Batch losses are sums, not means: the loss of one
// example is accumulated in full before it joins the batch total.
// ---------------------------------------------------------------------------

// Weighted cross-entropy of the K-1 binary tasks for one example.
inline double binary_task_loss_one(std::span<const double> logits, const ExtendedTarget& target,
                                   const TaskWeights& lambda) {
  if (logits.size() != target.bits.size() ||
      static_cast<int>(logits.size()) != lambda.num_tasks()) {
    throw std::invalid_argument("binary task loss: task count mismatch");
  }
  double loss = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    const double nll =
        target.bits[k] ? -log_sigmoid(logits[k]) : -log_one_minus_sigmoid(logits[k]);
    loss += lambda.lambda[k] * nll;
  }
  return loss;
}

// Batch form of the above; rows of `logits` are examples.
inline double extended_binary_loss(const Matrix& logits, const std::vector<ExtendedTarget>& targets,
                                   const TaskWeights& lambda) {
  if (logits.rows == 0) throw std::invalid_argument("extended_binary_loss: empty batch");
  if (logits.rows != static_cast<int>(targets.size())) {
    throw std::invalid_argument("extended_binary_loss: batch size mismatch");
  }
  lambda.validate();
  double total = 0.0;
  for (int i = 0; i < logits.rows; ++i) {
    total += binary_task_loss_one(logits.row(i), targets[static_cast<std::size_t>(i)], lambda);
  }
  return total;
}

// Softmax cross-entropy for one example; `label` is the 1-based rank index.
inline double softmax_ce_loss_one(std::span<const double> logits, int label) {
  if (label < 1 || label > static_cast<int>(logits.size())) {
    throw std::domain_error("softmax loss: label out of range");
  }
  return logsumexp(logits) - logits[static_cast<std::size_t>(label - 1)];
}

// ---------------------------------------------------------------------------
// Model-level loss and analytic gradient over a batch of dataset rows.
// The gradient vector is congruent with flatten_params().
// ---------------------------------------------------------------------------

struct LossGrad {
  double loss = 0.0;
  std::vector<double> grad;
};

namespace detail {

inline void check_batch(const OrdinalModel& m, const Dataset& data, std::span<const int> idx) {
  if (idx.empty()) throw std::invalid_argument("loss: empty batch");
  if (data.dim() != m.input_dim()) throw std::invalid_argument("loss: feature dimension mismatch");
  if (data.ranks.num_ranks() != m.num_ranks()) {
    throw std::invalid_argument("loss: rank count mismatch between model and dataset");
  }
}

inline void check_lambda(const OrdinalModel& m, const TaskWeights& lambda) {
  if (m.head_kind() != HeadKind::Ce) {
    lambda.validate();
    if (lambda.num_tasks() != m.num_ranks() - 1) {
      throw std::invalid_argument("loss: need one task weight per binary task");
    }
  }
}

}  // namespace detail

// Loss only. For the ce head the task weights are ignored (plain K-way
// cross-entropy against the rank index).
inline double model_loss(const OrdinalModel& m, const Dataset& data, std::span<const int> idx,
                         const TaskWeights& lambda) {
  detail::check_batch(m, data, idx);
  detail::check_lambda(m, lambda);
  const bool is_ce = m.head_kind() == HeadKind::Ce;
  double total = 0.0;
  for (int i : idx) {
    const std::vector<double> z = model_logits(m, data.features.row(i));
    const int y = data.labels[static_cast<std::size_t>(i)];
    if (is_ce) {
      total += softmax_ce_loss_one(z, y);
    } else {
      total += binary_task_loss_one(z, extend_label(y, m.num_ranks()), lambda);
    }
  }
  return total;
}

inline double model_loss(const OrdinalModel& m, const Dataset& data, const TaskWeights& lambda) {
  std::vector<int> idx(static_cast<std::size_t>(data.size()));
  for (int i = 0; i < data.size(); ++i) idx[static_cast<std::size_t>(i)] = i;
  return model_loss(m, data, idx, lambda);
}

// Fused loss + gradient. Examples are processed in batch order and reduced
// sequentially, which keeps results bit-reproducible.
inline LossGrad model_loss_grad(const OrdinalModel& m, const Dataset& data,
                                std::span<const int> idx, const TaskWeights& lambda) {
  detail::check_batch(m, data, idx);
  detail::check_lambda(m, lambda);

  const MlpParams& body = m.body;
  const int num_layers = body.num_layers();
  const int k = m.num_ranks();

  // Gradient offsets per the canonical flat layout.
  std::vector<std::size_t> w_off(static_cast<std::size_t>(num_layers));
  std::vector<std::size_t> b_off(static_cast<std::size_t>(num_layers));
  std::size_t pos = 0;
  for (int l = 0; l < num_layers; ++l) {
    w_off[static_cast<std::size_t>(l)] = pos;
    pos += body.weights[static_cast<std::size_t>(l)].data.size();
    b_off[static_cast<std::size_t>(l)] = pos;
    pos += body.biases[static_cast<std::size_t>(l)].size();
  }
  const std::size_t head_w_off = pos;

  LossGrad out;
  out.grad.assign(param_count(m), 0.0);

  std::vector<std::vector<double>> pre;   // pre-activations per layer
  std::vector<std::vector<double>> act;   // act[0] = x, act[l+1] = layer l output
  for (int i : idx) {
    // Forward with trace.
    pre.assign(static_cast<std::size_t>(num_layers), {});
    act.assign(static_cast<std::size_t>(num_layers) + 1, {});
    {
      const auto x = data.features.row(i);
      act[0].assign(x.begin(), x.end());
    }
    for (int l = 0; l < num_layers; ++l) {
      const Matrix& w = body.weights[static_cast<std::size_t>(l)];
      const auto& b = body.biases[static_cast<std::size_t>(l)];
      auto& z = pre[static_cast<std::size_t>(l)];
      z.resize(static_cast<std::size_t>(w.rows));
      for (int r = 0; r < w.rows; ++r) {
        z[static_cast<std::size_t>(r)] = dot(w.row(r), act[static_cast<std::size_t>(l)]) +
                                         b[static_cast<std::size_t>(r)];
      }
      auto& a = act[static_cast<std::size_t>(l) + 1];
      a = z;
      if (l + 1 < num_layers) {
        for (double& v : a) v = v > 0.0 ? v : 0.0;
      }
    }
    const std::vector<double>& g = act[static_cast<std::size_t>(num_layers)];
    const int h = static_cast<int>(g.size());
    const int y = data.labels[static_cast<std::size_t>(i)];

    // Head loss and dL/dg.
    std::vector<double> dg(static_cast<std::size_t>(h), 0.0);
    double example_loss = 0.0;
    if (const auto* c = std::get_if<CoralHead>(&m.head)) {
      const ExtendedTarget target = extend_label(y, k);
      const double score = dot(c->shared_weight, g);
      double dscore = 0.0;
      for (int t = 0; t < k - 1; ++t) {
        const double z = score + c->bias[static_cast<std::size_t>(t)];
        const double lam = lambda.lambda[static_cast<std::size_t>(t)];
        const std::uint8_t bit = target.bits[static_cast<std::size_t>(t)];
        example_loss += lam * (bit ? -log_sigmoid(z) : -log_one_minus_sigmoid(z));
        const double dz = lam * (sigmoid(z) - static_cast<double>(bit));
        out.grad[head_w_off + c->shared_weight.size() + static_cast<std::size_t>(t)] += dz;
        dscore += dz;
      }
      for (int j = 0; j < h; ++j) {
        out.grad[head_w_off + static_cast<std::size_t>(j)] += dscore * g[static_cast<std::size_t>(j)];
        dg[static_cast<std::size_t>(j)] = dscore * c->shared_weight[static_cast<std::size_t>(j)];
      }
    } else if (const auto* o = std::get_if<OrHead>(&m.head)) {
      const ExtendedTarget target = extend_label(y, k);
      for (int t = 0; t < k - 1; ++t) {
        const double z = dot(o->weight.row(t), g) + o->bias[static_cast<std::size_t>(t)];
        const double lam = lambda.lambda[static_cast<std::size_t>(t)];
        const std::uint8_t bit = target.bits[static_cast<std::size_t>(t)];
        example_loss += lam * (bit ? -log_sigmoid(z) : -log_one_minus_sigmoid(z));
        const double dz = lam * (sigmoid(z) - static_cast<double>(bit));
        for (int j = 0; j < h; ++j) {
          out.grad[head_w_off + static_cast<std::size_t>(t * h + j)] +=
              dz * g[static_cast<std::size_t>(j)];
          dg[static_cast<std::size_t>(j)] += dz * o->weight.at(t, j);
        }
        out.grad[head_w_off + o->weight.data.size() + static_cast<std::size_t>(t)] += dz;
      }
    } else {
      const auto& ce = std::get<CeHead>(m.head);
      std::vector<double> z(static_cast<std::size_t>(k));
      for (int t = 0; t < k; ++t) {
        z[static_cast<std::size_t>(t)] = dot(ce.weight.row(t), g) + ce.bias[static_cast<std::size_t>(t)];
      }
      const double lse = logsumexp(z);
      example_loss = lse - z[static_cast<std::size_t>(y - 1)];
      for (int t = 0; t < k; ++t) {
        const double dz = std::exp(z[static_cast<std::size_t>(t)] - lse) - (t == y - 1 ? 1.0 : 0.0);
        for (int j = 0; j < h; ++j) {
          out.grad[head_w_off + static_cast<std::size_t>(t * h + j)] +=
              dz * g[static_cast<std::size_t>(j)];
          dg[static_cast<std::size_t>(j)] += dz * ce.weight.at(t, j);
        }
        out.grad[head_w_off + ce.weight.data.size() + static_cast<std::size_t>(t)] += dz;
      }
    }
    out.loss += example_loss;

    // Backprop through the body.
    std::vector<double> delta = std::move(dg);
    for (int l = num_layers - 1; l >= 0; --l) {
      if (l + 1 < num_layers) {
        const auto& z = pre[static_cast<std::size_t>(l)];
        for (std::size_t r = 0; r < delta.size(); ++r) {
          if (z[r] <= 0.0) delta[r] = 0.0;
        }
      }
      const Matrix& w = body.weights[static_cast<std::size_t>(l)];
      const auto& a_in = act[static_cast<std::size_t>(l)];
      for (int r = 0; r < w.rows; ++r) {
        const double d = delta[static_cast<std::size_t>(r)];
        for (int cidx = 0; cidx < w.cols; ++cidx) {
          out.grad[w_off[static_cast<std::size_t>(l)] + static_cast<std::size_t>(r * w.cols + cidx)] +=
              d * a_in[static_cast<std::size_t>(cidx)];
        }
        out.grad[b_off[static_cast<std::size_t>(l)] + static_cast<std::size_t>(r)] += d;
      }
      if (l > 0) {
        std::vector<double> prev(static_cast<std::size_t>(w.cols), 0.0);
        for (int r = 0; r < w.rows; ++r) {
          const double d = delta[static_cast<std::size_t>(r)];
          for (int cidx = 0; cidx < w.cols; ++cidx) {
            prev[static_cast<std::size_t>(cidx)] += d * w.at(r, cidx);
          }
        }
        delta = std::move(prev);
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Central finite differences: the verification oracle for every analytic
// gradient in this library.
// ---------------------------------------------------------------------------

inline std::vector<double> finite_difference_grad(const std::function<double(std::span<const double>)>& f,
                                                  std::vector<double> theta, double step) {
  if (!(step > 0.0)) throw std::invalid_argument("finite differences: step must be > 0");
  std::vector<double> grad(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double orig = theta[i];
    theta[i] = orig + step;
    const double plus = f(theta);
    theta[i] = orig - step;
    const double minus = f(theta);
    theta[i] = orig;
    if (!std::isfinite(plus) || !std::isfinite(minus)) {
      throw std::runtime_error("finite differences: non-finite loss while probing parameter " +
                               std::to_string(i));
    }
    grad[i] = (plus - minus) / (2.0 * step);
  }
  return grad;
}

inline std::vector<double> finite_difference_grad(const OrdinalModel& model, const Dataset& data,
                                                  std::span<const int> idx, const TaskWeights& lambda,
                                                  double step) {
  OrdinalModel probe = model;
  auto f = [&probe, &data, idx, &lambda](std::span<const double> theta) {
    set_params(probe, theta);
    return model_loss(probe, data, idx, lambda);
  };
  return finite_difference_grad(f, flatten_params(model), step);
}

// max_i |a_i - b_i| / max(1, |a_i|, |b_i|)
inline double max_rel_error(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("max_rel_error: length mismatch");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double denom = std::max({1.0, std::fabs(a[i]), std::fabs(b[i])});
    worst = std::max(worst, std::fabs(a[i] - b[i]) / denom);
  }
  return worst;
}

}  // namespace coral
