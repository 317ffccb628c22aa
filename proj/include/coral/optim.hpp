#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "coral/data.hpp"
#include "coral/losses.hpp"
#include "coral/metrics.hpp"
#include "coral/model.hpp"
#include "coral/rng.hpp"

namespace coral {

// ---------------------------------------------------------------------------
// Adaptive moment estimation with bias-corrected moments.
// ---------------------------------------------------------------------------

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.90;
  double beta2 = 0.99;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamConfig cfg;
  std::vector<double> m;  // first moment
  std::vector<double> v;  // second moment
  long step_count = 0;

  AdamState(std::size_t num_params, const AdamConfig& c)
      : cfg(c), m(num_params, 0.0), v(num_params, 0.0) {}
};

inline void adam_step(AdamState& state, std::vector<double>& params,
                      std::span<const double> grad) {
  if (params.size() != state.m.size() || grad.size() != state.m.size()) {
    throw std::invalid_argument("adam_step: shape mismatch");
  }
  for (std::size_t i = 0; i < grad.size(); ++i) {
    if (!std::isfinite(grad[i])) {
      throw std::runtime_error("adam_step: non-finite gradient at parameter " + std::to_string(i));
    }
  }
  ++state.step_count;
  const double c1 = 1.0 - std::pow(state.cfg.beta1, static_cast<double>(state.step_count));
  const double c2 = 1.0 - std::pow(state.cfg.beta2, static_cast<double>(state.step_count));
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = state.cfg.beta1 * state.m[i] + (1.0 - state.cfg.beta1) * grad[i];
    state.v[i] = state.cfg.beta2 * state.v[i] + (1.0 - state.cfg.beta2) * grad[i] * grad[i];
    const double m_hat = state.m[i] / c1;
    const double v_hat = state.v[i] / c2;
    params[i] -= state.cfg.learning_rate * m_hat / (std::sqrt(v_hat) + state.cfg.epsilon);
  }
}

// ---------------------------------------------------------------------------
// Training loop: seeded shuffling, mini-batch updates, best-epoch selection
// by validation MAE.
// ---------------------------------------------------------------------------

struct TrainConfig {
  int epochs = 200;
  int batch_size = 64;
  double learning_rate = 1e-3;  // zero is allowed and leaves parameters fixed
  double beta1 = 0.90;
  double beta2 = 0.99;
  double epsilon = 1e-8;
  std::uint64_t seed = 0;
  HeadKind head = HeadKind::Coral;
  std::vector<int> hidden_sizes = {32, 16};
  std::vector<double> lambda;    // empty = uniform
  bool normalize_features = true;
  // Eq-form batch losses are sums; by default the gradient is divided by the
  // actual batch size before the step so the learning rate does not depend on
  // batch size. Disable to feed the optimizer raw batch-sum gradients.
  bool batch_mean_gradient = true;

  void validate() const {
    if (epochs < 1) throw std::invalid_argument("train config: epochs must be >= 1");
    if (batch_size < 1) throw std::invalid_argument("train config: batch size must be >= 1");
    if (!(learning_rate >= 0.0)) throw std::invalid_argument("train config: learning rate must be >= 0");
  }
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;  // mean per-example Eq-form loss over the epoch
  double val_mae = 0.0;
  double val_rmse = 0.0;
};

struct TrainResult {
  OrdinalModel best_model;
  int best_epoch = 0;
  double best_val_mae = 0.0;
  std::vector<EpochRecord> log;
};

inline TrainResult train(OrdinalModel model, const Dataset& train_set, const Dataset& val_set,
                         const TrainConfig& cfg) {
  cfg.validate();
  if (train_set.size() < 1 || val_set.size() < 1) {
    throw std::invalid_argument("train: empty split");
  }
  const int num_tasks = model.num_ranks() - 1;
  TaskWeights lambda = cfg.lambda.empty() ? TaskWeights::uniform(num_tasks)
                                          : TaskWeights{cfg.lambda};

  std::vector<double> params = flatten_params(model);
  AdamState adam(params.size(), {cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon});
  Rng shuffle_rng(mix_seed(cfg.seed, seed_tag::kShuffle));

  TrainResult result;
  result.best_model = model;
  result.best_val_mae = std::numeric_limits<double>::infinity();
  std::vector<double> scaled;

  const int n = train_set.size();
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const std::vector<int> order = shuffle_rng.permutation(n);
    double epoch_loss = 0.0;
    int batch_index = 0;
    for (int start = 0; start < n; start += cfg.batch_size, ++batch_index) {
      const int end = std::min(start + cfg.batch_size, n);
      const std::span<const int> batch(order.data() + start, static_cast<std::size_t>(end - start));
      LossGrad lg = model_loss_grad(model, train_set, batch, lambda);
      if (!std::isfinite(lg.loss)) {
        throw std::runtime_error("train: non-finite loss at epoch " + std::to_string(epoch) +
                                 ", batch " + std::to_string(batch_index));
      }
      epoch_loss += lg.loss;
      if (cfg.batch_mean_gradient) {
        scaled = lg.grad;
        const double inv = 1.0 / static_cast<double>(end - start);
        for (double& g : scaled) g *= inv;
        adam_step(adam, params, scaled);
      } else {
        adam_step(adam, params, lg.grad);
      }
      set_params(model, params);
    }

    const std::vector<int> val_pred = predict_ranks(model, val_set);
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = epoch_loss / n;
    rec.val_mae = mae(val_set.labels, val_pred);
    rec.val_rmse = rmse(val_set.labels, val_pred);
    result.log.push_back(rec);

    if (rec.val_mae < result.best_val_mae) {
      result.best_val_mae = rec.val_mae;
      result.best_epoch = epoch;
      result.best_model = model;
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Bias-only optimization with body and shared weight frozen. Each bias is
// the root of a strictly increasing 1-D derivative, found by bracketing
// bisection and Newton refinement. This is the subproblem whose minimizer
// carries the ordered-bias guarantee.
// ---------------------------------------------------------------------------

constexpr double kDivergentBiasBound = 50.0;

struct BiasFit {
  std::vector<double> bias;
  std::vector<int> divergent_tasks;  // 1-based tasks clamped at +-kDivergentBiasBound
};

inline BiasFit optimize_biases_only(std::span<const double> scores,
                                    const std::vector<ExtendedTarget>& targets,
                                    const TaskWeights& lambda, double tolerance,
                                    bool clamp_divergent = false) {
  if (!(tolerance > 0.0)) throw std::invalid_argument("optimize_biases_only: tolerance must be > 0");
  if (scores.empty() || targets.size() != scores.size()) {
    throw std::invalid_argument("optimize_biases_only: scores/targets mismatch");
  }
  lambda.validate();
  const int num_tasks = lambda.num_tasks();
  const int n = static_cast<int>(scores.size());
  for (const auto& t : targets) {
    if (t.num_tasks() != num_tasks) {
      throw std::invalid_argument("optimize_biases_only: target width mismatch");
    }
  }

  BiasFit fit;
  fit.bias.assign(static_cast<std::size_t>(num_tasks), 0.0);
  for (int k = 0; k < num_tasks; ++k) {
    int positives = 0;
    for (int i = 0; i < n; ++i) positives += targets[static_cast<std::size_t>(i)].bits[static_cast<std::size_t>(k)];
    if (positives == 0 || positives == n) {
      if (!clamp_divergent) {
        throw std::runtime_error("optimize_biases_only: task " + std::to_string(k + 1) +
                                 " has all-" + (positives == 0 ? std::string("0") : std::string("1")) +
                                 " extended labels; optimum is unbounded");
      }
      fit.bias[static_cast<std::size_t>(k)] = positives == 0 ? -kDivergentBiasBound : kDivergentBiasBound;
      fit.divergent_tasks.push_back(k + 1);
      continue;
    }

    const double lam = lambda.lambda[static_cast<std::size_t>(k)];
    auto deriv = [&](double b) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) {
        s += lam * (sigmoid(scores[static_cast<std::size_t>(i)] + b) -
                    static_cast<double>(targets[static_cast<std::size_t>(i)].bits[static_cast<std::size_t>(k)]));
      }
      return s;
    };

    // Bracket the root; the derivative is increasing with opposite signs at
    // the two infinities whenever both label values occur.
    double lo = -1.0, hi = 1.0;
    while (deriv(lo) > 0.0 && lo > -1e8) lo *= 2.0;
    while (deriv(hi) < 0.0 && hi < 1e8) hi *= 2.0;

    double mid = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
      mid = 0.5 * (lo + hi);
      const double d = deriv(mid);
      if (d > 0.0) {
        hi = mid;
      } else {
        lo = mid;
      }
      if (std::fabs(d) <= tolerance && hi - lo <= 1e-11) break;
      if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::fabs(mid))) break;
    }
    // Newton refinement in case bisection stopped on interval width.
    for (int it = 0; it < 20 && std::fabs(deriv(mid)) > tolerance; ++it) {
      double slope = 0.0;
      for (int i = 0; i < n; ++i) {
        const double p = sigmoid(scores[static_cast<std::size_t>(i)] + mid);
        slope += lam * p * (1.0 - p);
      }
      if (slope <= 0.0) break;
      mid -= deriv(mid) / slope;
    }
    fit.bias[static_cast<std::size_t>(k)] = mid;
  }
  return fit;
}

}  // namespace coral
