#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "coral/matrix.hpp"
#include "coral/ordinal.hpp"
#include "coral/rng.hpp"

namespace coral {

struct Dataset {
  Matrix features;          // N x d
  std::vector<int> labels;  // 1-based rank indices
  RankSpec ranks;
  std::string provenance;

  int size() const { return features.rows; }
  int dim() const { return features.cols; }
};

inline void validate_dataset(const Dataset& ds) {
  if (ds.size() < 1) throw std::invalid_argument("dataset is empty");
  if (static_cast<int>(ds.labels.size()) != ds.size()) {
    throw std::invalid_argument("dataset: label count does not match feature rows");
  }
  for (int i = 0; i < ds.size(); ++i) {
    const int y = ds.labels[static_cast<std::size_t>(i)];
    if (y < 1 || y > ds.ranks.num_ranks()) {
      throw std::invalid_argument("dataset: label " + std::to_string(y) + " at row " +
                                  std::to_string(i + 1) + " outside {1,...," +
                                  std::to_string(ds.ranks.num_ranks()) + "}");
    }
  }
  for (double v : ds.features.data) {
    if (!std::isfinite(v)) throw std::invalid_argument("dataset: non-finite feature value");
  }
}

// ---------------------------------------------------------------------------
// Delimited text I/O. One example per line: d feature columns, then one
// integer rank label, comma separated.
// ---------------------------------------------------------------------------

struct CsvSchema {
  int num_ranks = 0;
  bool has_header = false;
  char delimiter = ',';
};

namespace detail {

inline std::vector<std::string> split_cells(const std::string& line, char delim) {
  std::vector<std::string> cells;
  std::string cur;
  for (char ch : line) {
    if (ch == delim) {
      cells.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  cells.push_back(cur);
  return cells;
}

inline double parse_double_cell(const std::string& cell, int line_no, int col_no) {
  const char* begin = cell.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  while (end && *end == ' ') ++end;
  if (end == begin || (end && *end != '\0')) {
    throw std::runtime_error("csv: unparsable cell '" + cell + "' at line " +
                             std::to_string(line_no) + ", column " + std::to_string(col_no));
  }
  return v;
}

}  // namespace detail

inline Dataset load_csv(std::istream& in, const CsvSchema& schema, const std::string& origin) {
  if (schema.num_ranks < 2) throw std::invalid_argument("csv schema: num_ranks must be >= 2");
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  std::string line;
  int line_no = 0;
  int width = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (schema.has_header && line_no == 1) continue;
    if (line.empty()) continue;
    const auto cells = detail::split_cells(line, schema.delimiter);
    if (width < 0) {
      width = static_cast<int>(cells.size());
      if (width < 2) {
        throw std::runtime_error("csv: line " + std::to_string(line_no) +
                                 " has fewer than 2 columns");
      }
    } else if (static_cast<int>(cells.size()) != width) {
      throw std::runtime_error("csv: ragged row at line " + std::to_string(line_no) +
                               " (expected " + std::to_string(width) + " columns, got " +
                               std::to_string(cells.size()) + ")");
    }
    std::vector<double> feat(static_cast<std::size_t>(width - 1));
    for (int c = 0; c + 1 < width; ++c) {
      feat[static_cast<std::size_t>(c)] =
          detail::parse_double_cell(cells[static_cast<std::size_t>(c)], line_no, c + 1);
      if (!std::isfinite(feat[static_cast<std::size_t>(c)])) {
        throw std::runtime_error("csv: non-finite feature at line " + std::to_string(line_no) +
                                 ", column " + std::to_string(c + 1));
      }
    }
    const double raw = detail::parse_double_cell(cells[static_cast<std::size_t>(width - 1)],
                                                 line_no, width);
    const int label = static_cast<int>(raw);
    if (static_cast<double>(label) != raw) {
      throw std::runtime_error("csv: label must be an integer at line " + std::to_string(line_no));
    }
    if (label < 1 || label > schema.num_ranks) {
      throw std::runtime_error("csv: label " + std::to_string(label) + " out of range {1,...," +
                               std::to_string(schema.num_ranks) + "} at line " +
                               std::to_string(line_no));
    }
    rows.push_back(std::move(feat));
    labels.push_back(label);
  }
  if (rows.empty()) throw std::runtime_error("csv: no data rows in " + origin);

  Dataset ds;
  ds.features = Matrix(static_cast<int>(rows.size()), width - 1);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (int c = 0; c + 1 < width; ++c) {
      ds.features.at(static_cast<int>(i), c) = rows[i][static_cast<std::size_t>(c)];
    }
  }
  ds.labels = std::move(labels);
  ds.ranks = RankSpec::numeric(schema.num_ranks);
  ds.provenance = origin;
  return ds;
}

inline Dataset load_csv(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("csv: cannot open " + path);
  return load_csv(in, schema, path);
}

// Writes features with 17 significant digits so a reload reproduces the
// exact doubles.
inline void save_csv(const Dataset& ds, std::ostream& out) {
  char buf[40];
  for (int i = 0; i < ds.size(); ++i) {
    for (int c = 0; c < ds.dim(); ++c) {
      std::snprintf(buf, sizeof(buf), "%.17g", ds.features.at(i, c));
      out << buf << ',';
    }
    out << ds.labels[static_cast<std::size_t>(i)] << '\n';
  }
}

// ---------------------------------------------------------------------------
// Deterministic splitting: seeded permutation, then contiguous slices.
// ---------------------------------------------------------------------------

struct SplitPlan {
  double train_fraction = 0.7;
  double val_fraction = 0.1;
  double test_fraction = 0.2;
  std::uint64_t seed = 0;
};

struct Splits {
  Dataset train;
  Dataset validation;
  Dataset test;
};

namespace detail {
inline Dataset take_rows(const Dataset& ds, const std::vector<int>& order, int begin, int end,
                         const char* part) {
  Dataset out;
  out.features = Matrix(end - begin, ds.dim());
  out.labels.resize(static_cast<std::size_t>(end - begin));
  for (int i = begin; i < end; ++i) {
    const int src = order[static_cast<std::size_t>(i)];
    for (int c = 0; c < ds.dim(); ++c) out.features.at(i - begin, c) = ds.features.at(src, c);
    out.labels[static_cast<std::size_t>(i - begin)] = ds.labels[static_cast<std::size_t>(src)];
  }
  out.ranks = ds.ranks;
  out.provenance = ds.provenance + "#" + part;
  return out;
}
}  // namespace detail

inline Splits split(const Dataset& ds, const SplitPlan& plan) {
  if (!(plan.train_fraction > 0.0 && plan.val_fraction > 0.0 && plan.test_fraction > 0.0)) {
    throw std::invalid_argument("split plan: fractions must be positive");
  }
  if (std::fabs(plan.train_fraction + plan.val_fraction + plan.test_fraction - 1.0) > 1e-9) {
    throw std::invalid_argument("split plan: fractions must sum to 1");
  }
  const int n = ds.size();
  const int n_train = static_cast<int>(std::floor(plan.train_fraction * n + 1e-9));
  const int n_val = static_cast<int>(std::floor(plan.val_fraction * n + 1e-9));
  const int n_test = n - n_train - n_val;
  if (n_train < 1 || n_val < 1 || n_test < 1) {
    throw std::invalid_argument("split plan: a split would be empty (sizes " +
                                std::to_string(n_train) + "/" + std::to_string(n_val) + "/" +
                                std::to_string(n_test) + ")");
  }
  Rng rng(mix_seed(plan.seed, seed_tag::kSplit));
  const std::vector<int> order = rng.permutation(n);
  Splits s;
  s.train = detail::take_rows(ds, order, 0, n_train, "train");
  s.validation = detail::take_rows(ds, order, n_train, n_train + n_val, "validation");
  s.test = detail::take_rows(ds, order, n_train + n_val, n, "test");
  return s;
}

// ---------------------------------------------------------------------------
// Feature standardization. Statistics come from the training split only and
// are applied unchanged to every other split.
// ---------------------------------------------------------------------------

struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;  // population standard deviation
  std::vector<int> zero_variance_columns;

  static Standardizer fit(const Dataset& train) {
    if (train.size() < 1) throw std::invalid_argument("standardizer: empty training split");
    const int n = train.size();
    const int d = train.dim();
    Standardizer st;
    st.mean.assign(static_cast<std::size_t>(d), 0.0);
    st.scale.assign(static_cast<std::size_t>(d), 0.0);
    for (int c = 0; c < d; ++c) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += train.features.at(i, c);
      st.mean[static_cast<std::size_t>(c)] = s / n;
    }
    for (int c = 0; c < d; ++c) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) {
        const double dlt = train.features.at(i, c) - st.mean[static_cast<std::size_t>(c)];
        s += dlt * dlt;
      }
      const double sd = std::sqrt(s / n);
      st.scale[static_cast<std::size_t>(c)] = sd;
      if (sd == 0.0) st.zero_variance_columns.push_back(c);
    }
    return st;
  }

  Dataset apply(const Dataset& ds) const {
    if (ds.dim() != static_cast<int>(mean.size())) {
      throw std::invalid_argument("standardizer: feature dimension mismatch");
    }
    Dataset out = ds;
    for (int i = 0; i < ds.size(); ++i) {
      for (int c = 0; c < ds.dim(); ++c) {
        const double sd = scale[static_cast<std::size_t>(c)];
        out.features.at(i, c) =
            sd == 0.0 ? 0.0 : (ds.features.at(i, c) - mean[static_cast<std::size_t>(c)]) / sd;
      }
    }
    return out;
  }
};

// ---------------------------------------------------------------------------
// Synthetic ordinal data: latent score t = w*.x + noise, bucketed by K-1
// equally spaced thresholds over the empirical score range. Equal-width
// buckets leave the classes mildly imbalanced, which is intended.
// ---------------------------------------------------------------------------

struct SyntheticConfig {
  std::uint64_t seed = 0;
  int n = 2000;
  int dim = 4;
  int num_ranks = 6;
  double noise_sd = 0.1;
};

// The fixed unit direction used by the generator: (1,...,1)/sqrt(d).
inline std::vector<double> synthetic_latent_direction(int dim) {
  return std::vector<double>(static_cast<std::size_t>(dim), 1.0 / std::sqrt(static_cast<double>(dim)));
}

// Also hands back the latent scores so tests can verify separability claims.
inline Dataset generate_synthetic(const SyntheticConfig& cfg, std::vector<double>* latent_scores = nullptr) {
  if (cfg.num_ranks < 2) throw std::invalid_argument("synthetic: num_ranks must be >= 2");
  if (cfg.dim < 1) throw std::invalid_argument("synthetic: dim must be >= 1");
  if (cfg.noise_sd < 0.0) throw std::invalid_argument("synthetic: noise_sd must be >= 0");
  if (cfg.n < 10 * cfg.num_ranks) {
    throw std::invalid_argument("synthetic: need n >= 10*num_ranks (got n=" +
                                std::to_string(cfg.n) + ", K=" + std::to_string(cfg.num_ranks) + ")");
  }
  const std::vector<double> w = synthetic_latent_direction(cfg.dim);
  constexpr int kMaxAttempts = 100;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    Rng rng(mix_seed(cfg.seed, seed_tag::kSynthetic + static_cast<std::uint64_t>(attempt)));
    Matrix x(cfg.n, cfg.dim);
    std::vector<double> t(static_cast<std::size_t>(cfg.n));
    for (int i = 0; i < cfg.n; ++i) {
      for (int c = 0; c < cfg.dim; ++c) x.at(i, c) = rng.uniform(-1.0, 1.0);
      t[static_cast<std::size_t>(i)] = dot(x.row(i), w) + rng.normal(0.0, cfg.noise_sd);
    }
    double tmin = t[0], tmax = t[0];
    for (double v : t) {
      tmin = std::min(tmin, v);
      tmax = std::max(tmax, v);
    }
    std::vector<int> labels(static_cast<std::size_t>(cfg.n));
    for (int i = 0; i < cfg.n; ++i) {
      int q = 1;
      for (int j = 1; j < cfg.num_ranks; ++j) {
        const double threshold = tmin + (tmax - tmin) * j / cfg.num_ranks;
        if (t[static_cast<std::size_t>(i)] > threshold) ++q;
      }
      labels[static_cast<std::size_t>(i)] = q;
    }
    // Postconditions: every rank occurs, every binary task sees both classes.
    std::vector<int> rank_count(static_cast<std::size_t>(cfg.num_ranks) + 1, 0);
    for (int y : labels) ++rank_count[static_cast<std::size_t>(y)];
    bool all_present = true;
    for (int q = 1; q <= cfg.num_ranks; ++q) {
      if (rank_count[static_cast<std::size_t>(q)] == 0) all_present = false;
    }
    if (!all_present) continue;
    bool tasks_two_class = true;
    int below = 0;
    for (int k = 1; k < cfg.num_ranks; ++k) {
      below += rank_count[static_cast<std::size_t>(k)];
      if (below == 0 || below == cfg.n) tasks_two_class = false;
    }
    if (!tasks_two_class) continue;

    Dataset ds;
    ds.features = std::move(x);
    ds.labels = std::move(labels);
    ds.ranks = RankSpec::numeric(cfg.num_ranks);
    {
      std::ostringstream os;
      os << "synthetic(seed=" << cfg.seed << ",n=" << cfg.n << ",d=" << cfg.dim
         << ",K=" << cfg.num_ranks << ",noise_sd=" << cfg.noise_sd << ",attempt=" << attempt << ")";
      ds.provenance = os.str();
    }
    if (latent_scores) *latent_scores = std::move(t);
    return ds;
  }
  throw std::runtime_error("synthetic: retry budget exhausted without covering every rank");
}

}  // namespace coral
