#pragma once

#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

namespace coral {

// Ordered label set r_1 < r_2 < ... < r_K. Labels are user-facing strings;
// everything else in the library works on the 1-based rank index.
struct RankSpec {
  std::vector<std::string> labels;

  int num_ranks() const { return static_cast<int>(labels.size()); }

  const std::string& label(int rank_index) const {
    check_rank(rank_index);
    return labels[static_cast<std::size_t>(rank_index - 1)];
  }

  void check_rank(int rank_index) const {
    if (rank_index < 1 || rank_index > num_ranks()) {
      throw std::domain_error("rank index " + std::to_string(rank_index) +
                              " outside {1,...," + std::to_string(num_ranks()) + "}");
    }
  }

  // Labels "1".."K".
  static RankSpec numeric(int num_ranks) {
    if (num_ranks < 2) throw std::invalid_argument("RankSpec: need at least 2 ranks");
    RankSpec spec;
    spec.labels.reserve(static_cast<std::size_t>(num_ranks));
    for (int i = 1; i <= num_ranks; ++i) spec.labels.push_back(std::to_string(i));
    return spec;
  }

  static RankSpec from_labels(std::vector<std::string> labels) {
    if (labels.size() < 2) throw std::invalid_argument("RankSpec: need at least 2 ranks");
    std::unordered_set<std::string> seen(labels.begin(), labels.end());
    if (seen.size() != labels.size()) {
      throw std::invalid_argument("RankSpec: rank labels must be distinct");
    }
    RankSpec spec;
    spec.labels = std::move(labels);
    return spec;
  }
};

// K-1 binary targets for one example; bit k-1 holds 1{rank > k}.
// Always a prefix of ones, so bits are monotone non-increasing.
struct ExtendedTarget {
  std::vector<std::uint8_t> bits;

  int num_tasks() const { return static_cast<int>(bits.size()); }
  int source_rank() const {
    return 1 + std::accumulate(bits.begin(), bits.end(), 0);
  }
};

// K-1 binary task outputs of a model. Unlike ExtendedTarget these carry no
// structural guarantee: inconsistent vectors are representable on purpose so
// they can be audited.
struct BinaryDecisions {
  std::vector<std::uint8_t> f;

  int num_tasks() const { return static_cast<int>(f.size()); }
};

namespace detail {
inline void check_binary(const std::vector<std::uint8_t>& v, const char* what) {
  for (std::uint8_t b : v) {
    if (b > 1) throw std::domain_error(std::string(what) + ": entries must be 0 or 1");
  }
}
}  // namespace detail

// Extends rank q into the K-1 indicators 1{q > k}, k = 1..K-1.
inline ExtendedTarget extend_label(int rank_index, int num_ranks) {
  if (rank_index < 1 || rank_index > num_ranks) {
    throw std::domain_error("extend_label: rank index " + std::to_string(rank_index) +
                            " outside {1,...," + std::to_string(num_ranks) + "}");
  }
  ExtendedTarget t;
  t.bits.resize(static_cast<std::size_t>(num_ranks - 1));
  for (int k = 1; k < num_ranks; ++k) {
    t.bits[static_cast<std::size_t>(k - 1)] = rank_index > k ? 1 : 0;
  }
  return t;
}

inline ExtendedTarget extend_label(int rank_index, const RankSpec& spec) {
  return extend_label(rank_index, spec.num_ranks());
}

// Predicted rank index q = 1 + sum_k f_k. Defined for inconsistent vectors
// too; the sum rule is the decoder for both the shared-weight and the
// independent-weight heads.
inline int decode_rank(const BinaryDecisions& d) {
  detail::check_binary(d.f, "decode_rank");
  return 1 + std::accumulate(d.f.begin(), d.f.end(), 0);
}

// f_k = 1{p_k > 0.5}; exactly 0.5 maps to 0.
inline BinaryDecisions threshold_probs(std::span<const double> probs) {
  BinaryDecisions d;
  d.f.resize(probs.size());
  for (std::size_t k = 0; k < probs.size(); ++k) {
    if (!(probs[k] >= 0.0 && probs[k] <= 1.0)) {
      throw std::domain_error("threshold_probs: probability outside [0,1] at task " +
                              std::to_string(k + 1));
    }
    d.f[k] = probs[k] > 0.5 ? 1 : 0;
  }
  return d;
}

inline bool is_rank_monotone(const BinaryDecisions& d) {
  for (std::size_t k = 0; k + 1 < d.f.size(); ++k) {
    if (d.f[k] < d.f[k + 1]) return false;
  }
  return true;
}

// Number of adjacent (0,1) violations; zero iff the vector is rank-monotone.
inline int count_inconsistencies(const BinaryDecisions& d) {
  detail::check_binary(d.f, "count_inconsistencies");
  int n = 0;
  for (std::size_t k = 0; k + 1 < d.f.size(); ++k) {
    if (d.f[k] == 0 && d.f[k + 1] == 1) ++n;
  }
  return n;
}

// Secondary statistic: all pairs i < j with f[i] < f[j], not just adjacent ones.
inline int count_inverted_pairs(const BinaryDecisions& d) {
  detail::check_binary(d.f, "count_inverted_pairs");
  int n = 0;
  for (std::size_t i = 0; i < d.f.size(); ++i) {
    for (std::size_t j = i + 1; j < d.f.size(); ++j) {
      if (d.f[i] < d.f[j]) ++n;
    }
  }
  return n;
}

}  // namespace coral
