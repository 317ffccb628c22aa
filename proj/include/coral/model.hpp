#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "coral/matrix.hpp"
#include "coral/numeric.hpp"
#include "coral/ordinal.hpp"
#include "coral/rng.hpp"

namespace coral {

// ---------------------------------------------------------------------------
// MLP body: affine layers with ReLU between them and a linear (identity)
// penultimate output g(x). The head consumes g.
// ---------------------------------------------------------------------------

struct MlpParams {
  int input_dim = 0;
  std::vector<Matrix> weights;              // weights[l]: out_l x in_l
  std::vector<std::vector<double>> biases;  // biases[l]:  out_l

  int num_layers() const { return static_cast<int>(weights.size()); }
  int penultimate_dim() const { return weights.back().rows; }
};

inline std::vector<double> forward_features(const MlpParams& mlp, std::span<const double> x) {
  if (static_cast<int>(x.size()) != mlp.input_dim) {
    throw std::invalid_argument("forward_features: expected " + std::to_string(mlp.input_dim) +
                                " features, got " + std::to_string(x.size()));
  }
  std::vector<double> a(x.begin(), x.end());
  for (int l = 0; l < mlp.num_layers(); ++l) {
    const Matrix& w = mlp.weights[static_cast<std::size_t>(l)];
    const auto& b = mlp.biases[static_cast<std::size_t>(l)];
    std::vector<double> z(static_cast<std::size_t>(w.rows));
    for (int r = 0; r < w.rows; ++r) {
      z[static_cast<std::size_t>(r)] = dot(w.row(r), a) + b[static_cast<std::size_t>(r)];
    }
    if (l + 1 < mlp.num_layers()) {
      for (double& v : z) v = v > 0.0 ? v : 0.0;  // ReLU on hidden layers
    }
    a = std::move(z);
  }
  return a;
}

// ---------------------------------------------------------------------------
// Output heads. All heads map the penultimate vector g to logits.
// ---------------------------------------------------------------------------

// One weight vector shared by all K-1 binary tasks plus K-1 independent
// biases. Shared weights are what make ordered biases imply ordered task
// probabilities for every input.
struct CoralHead {
  std::vector<double> shared_weight;  // h
  std::vector<double> bias;           // K-1
};

// Reference head: a distinct weight vector per binary task.
struct OrHead {
  Matrix weight;             // (K-1) x h
  std::vector<double> bias;  // K-1
};

// Plain K-way softmax classifier head.
struct CeHead {
  Matrix weight;             // K x h
  std::vector<double> bias;  // K
};

inline std::vector<double> coral_logits(const CoralHead& head, std::span<const double> g) {
  if (g.size() != head.shared_weight.size()) {
    throw std::invalid_argument("coral_logits: penultimate dimension mismatch");
  }
  const double score = dot(head.shared_weight, g);
  std::vector<double> z(head.bias.size());
  for (std::size_t k = 0; k < head.bias.size(); ++k) z[k] = score + head.bias[k];
  return z;
}

inline std::vector<double> coral_probs(const CoralHead& head, std::span<const double> g) {
  std::vector<double> p = coral_logits(head, g);
  for (double& v : p) v = sigmoid(v);
  return p;
}

inline std::vector<double> or_logits(const OrHead& head, std::span<const double> g) {
  if (static_cast<int>(g.size()) != head.weight.cols) {
    throw std::invalid_argument("or_logits: penultimate dimension mismatch");
  }
  std::vector<double> z(head.bias.size());
  for (int k = 0; k < head.weight.rows; ++k) {
    z[static_cast<std::size_t>(k)] = dot(head.weight.row(k), g) + head.bias[static_cast<std::size_t>(k)];
  }
  return z;
}

inline std::vector<double> ce_logits(const CeHead& head, std::span<const double> g) {
  if (static_cast<int>(g.size()) != head.weight.cols) {
    throw std::invalid_argument("ce_logits: penultimate dimension mismatch");
  }
  std::vector<double> z(head.bias.size());
  for (int k = 0; k < head.weight.rows; ++k) {
    z[static_cast<std::size_t>(k)] = dot(head.weight.row(k), g) + head.bias[static_cast<std::size_t>(k)];
  }
  return z;
}

// Argmax decode, first maximum on ties. Returns a 1-based rank index.
inline int ce_predict(std::span<const double> logits) {
  int best = 0;
  for (int k = 1; k < static_cast<int>(logits.size()); ++k) {
    if (logits[static_cast<std::size_t>(k)] > logits[static_cast<std::size_t>(best)]) best = k;
  }
  return best + 1;
}

// ---------------------------------------------------------------------------
// Full model: body + one head.
// ---------------------------------------------------------------------------

enum class HeadKind { Coral, Or, Ce };

inline const char* head_kind_name(HeadKind k) {
  switch (k) {
    case HeadKind::Coral: return "coral";
    case HeadKind::Or: return "or";
    case HeadKind::Ce: return "ce";
  }
  return "?";
}

inline HeadKind head_kind_from_name(const std::string& name) {
  if (name == "coral") return HeadKind::Coral;
  if (name == "or") return HeadKind::Or;
  if (name == "ce") return HeadKind::Ce;
  throw std::invalid_argument("unknown head kind '" + name + "' (expected coral|or|ce)");
}

struct OrdinalModel {
  RankSpec ranks;
  MlpParams body;
  std::variant<CoralHead, OrHead, CeHead> head;

  int num_ranks() const { return ranks.num_ranks(); }
  int input_dim() const { return body.input_dim; }

  HeadKind head_kind() const {
    if (std::holds_alternative<CoralHead>(head)) return HeadKind::Coral;
    if (std::holds_alternative<OrHead>(head)) return HeadKind::Or;
    return HeadKind::Ce;
  }
};

// Logits of the active head: length K-1 for coral/or, K for ce.
inline std::vector<double> model_logits(const OrdinalModel& m, std::span<const double> x) {
  const std::vector<double> g = forward_features(m.body, x);
  if (const auto* c = std::get_if<CoralHead>(&m.head)) return coral_logits(*c, g);
  if (const auto* o = std::get_if<OrHead>(&m.head)) return or_logits(*o, g);
  return ce_logits(std::get<CeHead>(m.head), g);
}

// Per-task probabilities sigma(z_k); only meaningful for the binary-task heads.
inline std::vector<double> model_task_probs(const OrdinalModel& m, std::span<const double> x) {
  if (m.head_kind() == HeadKind::Ce) {
    throw std::logic_error("model_task_probs: ce head has no per-task probabilities");
  }
  std::vector<double> z = model_logits(m, x);
  for (double& v : z) v = sigmoid(v);
  return z;
}

inline BinaryDecisions model_decisions(const OrdinalModel& m, std::span<const double> x) {
  return threshold_probs(model_task_probs(m, x));
}

inline int model_predict_rank(const OrdinalModel& m, std::span<const double> x) {
  if (m.head_kind() == HeadKind::Ce) return ce_predict(model_logits(m, x));
  return decode_rank(model_decisions(m, x));
}

// ---------------------------------------------------------------------------
// Construction. Weights are Glorot-uniform in +-sqrt(6/(fan_in+fan_out));
// every bias starts at zero, so no head begins with a nontrivially ordered
// bias vector.
// ---------------------------------------------------------------------------

inline Matrix glorot_matrix(int rows, int cols, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Matrix w(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) w.at(r, c) = rng.uniform(-bound, bound);
  }
  return w;
}

inline OrdinalModel make_model(const RankSpec& ranks, int input_dim,
                               const std::vector<int>& hidden_sizes, HeadKind head,
                               std::uint64_t seed) {
  if (input_dim < 1) throw std::invalid_argument("make_model: input_dim must be >= 1");
  if (hidden_sizes.empty()) throw std::invalid_argument("make_model: need at least one layer");
  for (int h : hidden_sizes) {
    if (h < 1) throw std::invalid_argument("make_model: layer sizes must be >= 1");
  }

  Rng rng(mix_seed(seed, seed_tag::kModelInit));
  OrdinalModel m;
  m.ranks = ranks;
  m.body.input_dim = input_dim;
  int in = input_dim;
  for (int out : hidden_sizes) {
    m.body.weights.push_back(glorot_matrix(out, in, rng));
    m.body.biases.emplace_back(static_cast<std::size_t>(out), 0.0);
    in = out;
  }

  const int k = ranks.num_ranks();
  const int h = m.body.penultimate_dim();
  switch (head) {
    case HeadKind::Coral: {
      CoralHead c;
      c.shared_weight = glorot_matrix(1, h, rng).data;
      c.bias.assign(static_cast<std::size_t>(k - 1), 0.0);
      m.head = std::move(c);
      break;
    }
    case HeadKind::Or: {
      OrHead o;
      o.weight = Matrix(k - 1, h);
      for (int r = 0; r < k - 1; ++r) {
        Matrix row = glorot_matrix(1, h, rng);  // same fan as the shared vector
        for (int c = 0; c < h; ++c) o.weight.at(r, c) = row.at(0, c);
      }
      o.bias.assign(static_cast<std::size_t>(k - 1), 0.0);
      m.head = std::move(o);
      break;
    }
    case HeadKind::Ce: {
      CeHead ce;
      ce.weight = glorot_matrix(k, h, rng);
      ce.bias.assign(static_cast<std::size_t>(k), 0.0);
      m.head = std::move(ce);
      break;
    }
  }
  return m;
}

// ---------------------------------------------------------------------------
// Flat parameter view. The canonical order -- body layers in sequence
// (weights row-major, then biases), followed by the head (weights, then
// biases) -- is shared by the optimizer, gradient bundles, and the model
// file, so all of them stay congruent by construction.
// ---------------------------------------------------------------------------

inline std::size_t param_count(const OrdinalModel& m) {
  std::size_t n = 0;
  for (std::size_t l = 0; l < m.body.weights.size(); ++l) {
    n += m.body.weights[l].data.size() + m.body.biases[l].size();
  }
  if (const auto* c = std::get_if<CoralHead>(&m.head)) {
    n += c->shared_weight.size() + c->bias.size();
  } else if (const auto* o = std::get_if<OrHead>(&m.head)) {
    n += o->weight.data.size() + o->bias.size();
  } else {
    const auto& ce = std::get<CeHead>(m.head);
    n += ce.weight.data.size() + ce.bias.size();
  }
  return n;
}

inline std::vector<double> flatten_params(const OrdinalModel& m) {
  std::vector<double> out;
  out.reserve(param_count(m));
  auto append = [&out](const std::vector<double>& v) { out.insert(out.end(), v.begin(), v.end()); };
  for (std::size_t l = 0; l < m.body.weights.size(); ++l) {
    append(m.body.weights[l].data);
    append(m.body.biases[l]);
  }
  if (const auto* c = std::get_if<CoralHead>(&m.head)) {
    append(c->shared_weight);
    append(c->bias);
  } else if (const auto* o = std::get_if<OrHead>(&m.head)) {
    append(o->weight.data);
    append(o->bias);
  } else {
    const auto& ce = std::get<CeHead>(m.head);
    append(ce.weight.data);
    append(ce.bias);
  }
  return out;
}

inline void set_params(OrdinalModel& m, std::span<const double> flat) {
  if (flat.size() != param_count(m)) {
    throw std::invalid_argument("set_params: expected " + std::to_string(param_count(m)) +
                                " parameters, got " + std::to_string(flat.size()));
  }
  std::size_t pos = 0;
  auto take = [&flat, &pos](std::vector<double>& v) {
    for (double& x : v) x = flat[pos++];
  };
  for (std::size_t l = 0; l < m.body.weights.size(); ++l) {
    take(m.body.weights[l].data);
    take(m.body.biases[l]);
  }
  if (auto* c = std::get_if<CoralHead>(&m.head)) {
    take(c->shared_weight);
    take(c->bias);
  } else if (auto* o = std::get_if<OrHead>(&m.head)) {
    take(o->weight.data);
    take(o->bias);
  } else {
    auto& ce = std::get<CeHead>(m.head);
    take(ce.weight.data);
    take(ce.bias);
  }
}

}  // namespace coral
