#pragma once

#include <bit>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "coral/data.hpp"
#include "coral/model.hpp"

namespace coral {

// ---------------------------------------------------------------------------
// Model file, format "coral-model v1": line-oriented text with one key per
// line. Doubles are stored as 16-digit hex bit patterns, so save -> load is
// bit-exact. Layout:
//
//   coral-model v1
//   head coral|or|ce
//   input_dim <d>
//   hidden <h1> <h2> ...
//   ranks <K>
//   label <text>              (K lines, in rank order)
//   norm_mean <hex>...        (optional, with norm_scale: input standardizer)
//   norm_scale <hex>...
//   config <single line>      (optional provenance echo)
//   params <N>
//   <hex>                     (N lines, canonical parameter order)
// ---------------------------------------------------------------------------

namespace detail {

inline std::string double_to_hex(double v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(std::bit_cast<std::uint64_t>(v)));
  return std::string(buf);
}

inline double hex_to_double(const std::string& s) {
  if (s.size() != 16) throw std::runtime_error("model file: bad hex value '" + s + "'");
  std::uint64_t bits = 0;
  for (char ch : s) {
    bits <<= 4;
    if (ch >= '0' && ch <= '9') {
      bits |= static_cast<std::uint64_t>(ch - '0');
    } else if (ch >= 'a' && ch <= 'f') {
      bits |= static_cast<std::uint64_t>(ch - 'a' + 10);
    } else {
      throw std::runtime_error("model file: bad hex value '" + s + "'");
    }
  }
  return std::bit_cast<double>(bits);
}

inline std::vector<double> parse_hex_list(std::istringstream& ls, const char* key) {
  std::vector<double> out;
  std::string tok;
  while (ls >> tok) out.push_back(hex_to_double(tok));
  if (out.empty()) throw std::runtime_error(std::string("model file: empty ") + key + " list");
  return out;
}

}  // namespace detail

struct ModelFile {
  OrdinalModel model;
  std::optional<Standardizer> standardizer;
  std::string config;  // verbatim provenance line, may be empty
};

inline void save_model(std::ostream& out, const OrdinalModel& m,
                       const Standardizer* standardizer = nullptr,
                       const std::string& config = "") {
  out << "coral-model v1\n";
  out << "head " << head_kind_name(m.head_kind()) << '\n';
  out << "input_dim " << m.input_dim() << '\n';
  out << "hidden";
  for (const Matrix& w : m.body.weights) out << ' ' << w.rows;
  out << '\n';
  out << "ranks " << m.num_ranks() << '\n';
  for (const std::string& label : m.ranks.labels) out << "label " << label << '\n';
  if (standardizer) {
    out << "norm_mean";
    for (double v : standardizer->mean) out << ' ' << detail::double_to_hex(v);
    out << '\n';
    out << "norm_scale";
    for (double v : standardizer->scale) out << ' ' << detail::double_to_hex(v);
    out << '\n';
  }
  if (!config.empty()) out << "config " << config << '\n';
  const std::vector<double> params = flatten_params(m);
  out << "params " << params.size() << '\n';
  for (double v : params) out << detail::double_to_hex(v) << '\n';
}

inline void save_model(const std::string& path, const OrdinalModel& m,
                       const Standardizer* standardizer = nullptr,
                       const std::string& config = "") {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("model file: cannot write " + path);
  save_model(out, m, standardizer, config);
  if (!out) throw std::runtime_error("model file: write failed for " + path);
}

inline ModelFile load_model(std::istream& in, const std::string& origin) {
  auto next_line = [&in](std::string& line) -> bool {
    if (!std::getline(in, line)) return false;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  };
  std::string line;
  if (!next_line(line) || line != "coral-model v1") {
    throw std::runtime_error("model file: bad magic in " + origin);
  }

  std::optional<HeadKind> head;
  int input_dim = -1;
  std::vector<int> hidden;
  int ranks = -1;
  std::vector<std::string> labels;
  std::vector<double> norm_mean, norm_scale;
  std::string config;
  long params_declared = -1;
  std::vector<double> params;

  while (next_line(line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "head") {
      std::string name;
      ls >> name;
      head = head_kind_from_name(name);
    } else if (key == "input_dim") {
      ls >> input_dim;
    } else if (key == "hidden") {
      int h;
      while (ls >> h) hidden.push_back(h);
    } else if (key == "ranks") {
      ls >> ranks;
    } else if (key == "label") {
      std::string rest;
      std::getline(ls, rest);
      if (!rest.empty() && rest.front() == ' ') rest.erase(rest.begin());
      labels.push_back(rest);
    } else if (key == "norm_mean") {
      norm_mean = detail::parse_hex_list(ls, "norm_mean");
    } else if (key == "norm_scale") {
      norm_scale = detail::parse_hex_list(ls, "norm_scale");
    } else if (key == "config") {
      std::getline(ls, config);
      if (!config.empty() && config.front() == ' ') config.erase(config.begin());
    } else if (key == "params") {
      ls >> params_declared;
      if (params_declared < 1) throw std::runtime_error("model file: bad params count");
      params.reserve(static_cast<std::size_t>(params_declared));
      while (static_cast<long>(params.size()) < params_declared && next_line(line)) {
        if (line.empty()) continue;
        params.push_back(detail::hex_to_double(line));
      }
      if (static_cast<long>(params.size()) != params_declared) {
        throw std::runtime_error("model file: truncated parameter block in " + origin);
      }
    } else {
      throw std::runtime_error("model file: unknown key '" + key + "' in " + origin);
    }
  }

  if (!head || input_dim < 1 || hidden.empty() || ranks < 2) {
    throw std::runtime_error("model file: missing header fields in " + origin);
  }
  if (static_cast<int>(labels.size()) != ranks) {
    throw std::runtime_error("model file: expected " + std::to_string(ranks) + " labels in " + origin);
  }

  ModelFile mf;
  mf.model = make_model(RankSpec::from_labels(labels), input_dim, hidden, *head, /*seed=*/0);
  if (params.size() != param_count(mf.model)) {
    throw std::runtime_error("model file: parameter count mismatch in " + origin);
  }
  set_params(mf.model, params);
  if (!norm_mean.empty() || !norm_scale.empty()) {
    if (norm_mean.size() != norm_scale.size() ||
        static_cast<int>(norm_mean.size()) != input_dim) {
      throw std::runtime_error("model file: malformed standardizer block in " + origin);
    }
    Standardizer st;
    st.mean = std::move(norm_mean);
    st.scale = std::move(norm_scale);
    for (std::size_t c = 0; c < st.scale.size(); ++c) {
      if (st.scale[c] == 0.0) st.zero_variance_columns.push_back(static_cast<int>(c));
    }
    mf.standardizer = std::move(st);
  }
  mf.config = std::move(config);
  return mf;
}

inline ModelFile load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("model file: cannot open " + path);
  return load_model(in, path);
}

}  // namespace coral
