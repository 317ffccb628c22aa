#pragma once

#include <cmath>
#include <fstream>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "coral/data.hpp"
#include "coral/matrix.hpp"
#include "coral/model.hpp"
#include "coral/ordinal.hpp"

namespace coral {

// ---------------------------------------------------------------------------
// Rank error metrics, computed on 1-based rank indices.
// ---------------------------------------------------------------------------

namespace detail {
inline void check_rank_lists(std::span<const int> truth, std::span<const int> pred) {
  if (truth.empty()) throw std::invalid_argument("metrics: empty input");
  if (truth.size() != pred.size()) throw std::invalid_argument("metrics: length mismatch");
}
}  // namespace detail

inline double mae(std::span<const int> truth, std::span<const int> pred) {
  detail::check_rank_lists(truth, pred);
  double s = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) s += std::abs(truth[i] - pred[i]);
  return s / static_cast<double>(truth.size());
}

inline double rmse(std::span<const int> truth, std::span<const int> pred) {
  detail::check_rank_lists(truth, pred);
  double s = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double d = truth[i] - pred[i];
    s += d * d;
  }
  return std::sqrt(s / static_cast<double>(truth.size()));
}

inline std::vector<int> predict_ranks(const OrdinalModel& m, const Dataset& ds) {
  std::vector<int> pred(static_cast<std::size_t>(ds.size()));
  for (int i = 0; i < ds.size(); ++i) {
    pred[static_cast<std::size_t>(i)] = model_predict_rank(m, ds.features.row(i));
  }
  return pred;
}

// ---------------------------------------------------------------------------
// Cost matrices: K x K, zero diagonal, positive off-diagonal. Entry (y, k)
// is the cost of predicting rank k when the truth is y (both 1-based).
// ---------------------------------------------------------------------------

struct CostMatrix {
  Matrix c;

  int num_ranks() const { return c.rows; }

  double at(int true_rank, int predicted_rank) const {
    return c.at(true_rank - 1, predicted_rank - 1);
  }

  static CostMatrix from_grid(Matrix grid) {
    if (grid.rows != grid.cols || grid.rows < 2) {
      throw std::invalid_argument("cost matrix: must be square with K >= 2");
    }
    for (int y = 0; y < grid.rows; ++y) {
      for (int k = 0; k < grid.cols; ++k) {
        const double v = grid.at(y, k);
        if (!std::isfinite(v)) throw std::invalid_argument("cost matrix: non-finite entry");
        if (y == k && v != 0.0) throw std::invalid_argument("cost matrix: diagonal must be 0");
        if (y != k && !(v > 0.0)) {
          throw std::invalid_argument("cost matrix: off-diagonal entries must be > 0");
        }
      }
    }
    CostMatrix cm;
    cm.c = std::move(grid);
    return cm;
  }

  static CostMatrix classification(int num_ranks) {
    Matrix g(num_ranks, num_ranks);
    for (int y = 0; y < num_ranks; ++y) {
      for (int k = 0; k < num_ranks; ++k) g.at(y, k) = y == k ? 0.0 : 1.0;
    }
    return from_grid(std::move(g));
  }

  static CostMatrix absolute(int num_ranks) {
    Matrix g(num_ranks, num_ranks);
    for (int y = 0; y < num_ranks; ++y) {
      for (int k = 0; k < num_ranks; ++k) g.at(y, k) = std::abs(y - k);
    }
    return from_grid(std::move(g));
  }

  // Plain-text K x K numeric grid, whitespace separated.
  static CostMatrix load(std::istream& in) {
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
      std::istringstream ls(line);
      std::vector<double> row;
      double v;
      while (ls >> v) row.push_back(v);
      if (!ls.eof()) throw std::runtime_error("cost matrix: unparsable row '" + line + "'");
      if (!row.empty()) rows.push_back(std::move(row));
    }
    if (rows.empty()) throw std::runtime_error("cost matrix: empty grid");
    const int k = static_cast<int>(rows.size());
    Matrix g(k, k);
    for (int y = 0; y < k; ++y) {
      if (static_cast<int>(rows[static_cast<std::size_t>(y)].size()) != k) {
        throw std::runtime_error("cost matrix: grid is not K x K");
      }
      for (int j = 0; j < k; ++j) g.at(y, j) = rows[static_cast<std::size_t>(y)][static_cast<std::size_t>(j)];
    }
    return from_grid(std::move(g));
  }

  static CostMatrix load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cost matrix: cannot open " + path);
    return load(in);
  }
};

// Structural predicates, all evaluated with non-strict inequalities.
struct CostMatrixKind {
  bool classification = false;
  bool absolute = false;
  bool v_shaped = false;
  bool convex_rows = false;
};

inline CostMatrixKind cost_matrix_kind(const CostMatrix& cm) {
  const int k = cm.num_ranks();
  CostMatrixKind kind;
  kind.classification = true;
  kind.absolute = true;
  kind.v_shaped = true;
  kind.convex_rows = true;
  for (int y = 1; y <= k; ++y) {
    for (int j = 1; j <= k; ++j) {
      const double v = cm.at(y, j);
      if (v != (y == j ? 0.0 : 1.0)) kind.classification = false;
      if (v != static_cast<double>(std::abs(y - j))) kind.absolute = false;
    }
    // Rows decrease (weakly) up to the true rank and increase after it.
    for (int j = 2; j <= y; ++j) {
      if (!(cm.at(y, j - 1) >= cm.at(y, j))) kind.v_shaped = false;
    }
    for (int j = y; j + 1 <= k; ++j) {
      if (!(cm.at(y, j) <= cm.at(y, j + 1))) kind.v_shaped = false;
    }
    // Consecutive differences must be non-decreasing.
    for (int j = 2; j + 1 <= k; ++j) {
      if (!(cm.at(y, j + 1) - cm.at(y, j) >= cm.at(y, j) - cm.at(y, j - 1))) {
        kind.convex_rows = false;
      }
    }
  }
  return kind;
}

// ---------------------------------------------------------------------------
// Generalization-bound evaluation: sample means of the rank cost (LHS) and
// of the cost-difference-weighted binary error sum (RHS). The inequality
// LHS <= RHS is guaranteed only when every decision vector is rank-monotone.
// ---------------------------------------------------------------------------

struct BoundResult {
  double lhs = 0.0;
  double rhs = 0.0;
  bool all_monotone = true;
};

inline BoundResult bound_check(const std::vector<BinaryDecisions>& decisions,
                               std::span<const int> truths, const CostMatrix& cost) {
  if (decisions.empty() || decisions.size() != truths.size()) {
    throw std::invalid_argument("bound_check: decisions/truths mismatch");
  }
  const int k = cost.num_ranks();
  BoundResult r;
  double lhs_sum = 0.0, rhs_sum = 0.0;
  for (std::size_t i = 0; i < decisions.size(); ++i) {
    const BinaryDecisions& f = decisions[i];
    if (f.num_tasks() != k - 1) throw std::invalid_argument("bound_check: task width mismatch");
    const int y = truths[i];
    if (y < 1 || y > k) throw std::invalid_argument("bound_check: truth rank out of range");
    if (!is_rank_monotone(f)) r.all_monotone = false;
    const int h = decode_rank(f);
    lhs_sum += cost.at(y, h);
    const ExtendedTarget target = extend_label(y, k);
    double per_example = 0.0;
    for (int t = 1; t <= k - 1; ++t) {
      if (f.f[static_cast<std::size_t>(t - 1)] != target.bits[static_cast<std::size_t>(t - 1)]) {
        per_example += std::fabs(cost.at(y, t) - cost.at(y, t + 1));
      }
    }
    rhs_sum += per_example;
  }
  r.lhs = lhs_sum / static_cast<double>(decisions.size());
  r.rhs = rhs_sum / static_cast<double>(decisions.size());
  return r;
}

// ---------------------------------------------------------------------------
// Split-level audit: MAE/RMSE, inconsistency means over all / correct-only /
// incorrect-only predictions, and bound evaluations per cost matrix.
// Inconsistency and bound fields are absent for the ce head, which has no
// binary task outputs.
// ---------------------------------------------------------------------------

struct EvalReport {
  int count = 0;
  int correct_count = 0;
  int incorrect_count = 0;
  double mae = 0.0;
  double rmse = 0.0;
  std::optional<double> mean_inconsistencies_all;
  std::optional<double> mean_inconsistencies_correct;
  std::optional<double> mean_inconsistencies_incorrect;
  std::optional<double> mean_inverted_pairs_all;

  struct BoundEntry {
    std::string cost_name;
    double lhs = 0.0;
    double rhs = 0.0;
    bool all_monotone = true;
  };
  std::vector<BoundEntry> bounds;
};

inline EvalReport audit_split(const OrdinalModel& m, const Dataset& ds,
                              const std::vector<std::pair<std::string, CostMatrix>>& costs = {}) {
  if (ds.size() < 1) throw std::invalid_argument("audit_split: empty split");
  if (ds.dim() != m.input_dim()) throw std::invalid_argument("audit_split: feature dimension mismatch");
  if (ds.ranks.num_ranks() != m.num_ranks()) {
    throw std::invalid_argument("audit_split: rank count mismatch");
  }
  const bool has_tasks = m.head_kind() != HeadKind::Ce;

  EvalReport rep;
  rep.count = ds.size();
  std::vector<int> pred(static_cast<std::size_t>(ds.size()));
  std::vector<BinaryDecisions> decisions;
  if (has_tasks) decisions.reserve(static_cast<std::size_t>(ds.size()));

  long long incon_all = 0, incon_correct = 0, incon_incorrect = 0, inverted_all = 0;
  for (int i = 0; i < ds.size(); ++i) {
    const auto x = ds.features.row(i);
    int q;
    if (has_tasks) {
      BinaryDecisions f = model_decisions(m, x);
      q = decode_rank(f);
      const int incon = count_inconsistencies(f);
      incon_all += incon;
      inverted_all += count_inverted_pairs(f);
      if (q == ds.labels[static_cast<std::size_t>(i)]) {
        incon_correct += incon;
      } else {
        incon_incorrect += incon;
      }
      decisions.push_back(std::move(f));
    } else {
      q = model_predict_rank(m, x);
    }
    pred[static_cast<std::size_t>(i)] = q;
    if (q == ds.labels[static_cast<std::size_t>(i)]) {
      ++rep.correct_count;
    } else {
      ++rep.incorrect_count;
    }
  }
  rep.mae = mae(ds.labels, pred);
  rep.rmse = rmse(ds.labels, pred);

  if (has_tasks) {
    rep.mean_inconsistencies_all = static_cast<double>(incon_all) / rep.count;
    rep.mean_inverted_pairs_all = static_cast<double>(inverted_all) / rep.count;
    if (rep.correct_count > 0) {
      rep.mean_inconsistencies_correct = static_cast<double>(incon_correct) / rep.correct_count;
    }
    if (rep.incorrect_count > 0) {
      rep.mean_inconsistencies_incorrect = static_cast<double>(incon_incorrect) / rep.incorrect_count;
    }
    for (const auto& [name, cost] : costs) {
      const BoundResult br = bound_check(decisions, ds.labels, cost);
      rep.bounds.push_back({name, br.lhs, br.rhs, br.all_monotone});
    }
  }
  return rep;
}

}  // namespace coral
