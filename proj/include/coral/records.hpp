#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "coral/metrics.hpp"
#include "coral/optim.hpp"

namespace coral {

// Line-delimited structured records with stable key order, so identical runs
// produce byte-identical files.
using ojson = nlohmann::ordered_json;

inline ojson epoch_record_json(const EpochRecord& r) {
  ojson j;
  j["epoch"] = r.epoch;
  j["train_loss"] = r.train_loss;
  j["val_mae"] = r.val_mae;
  j["val_rmse"] = r.val_rmse;
  return j;
}

inline std::string epoch_log_lines(const std::vector<EpochRecord>& log) {
  std::string out;
  for (const EpochRecord& r : log) {
    out += epoch_record_json(r).dump();
    out += '\n';
  }
  return out;
}

inline ojson eval_report_json(const EvalReport& rep) {
  ojson j;
  j["count"] = rep.count;
  j["correct_count"] = rep.correct_count;
  j["incorrect_count"] = rep.incorrect_count;
  j["mae"] = rep.mae;
  j["rmse"] = rep.rmse;
  if (rep.mean_inconsistencies_all) {
    j["mean_inconsistencies_all"] = *rep.mean_inconsistencies_all;
    if (rep.mean_inconsistencies_correct) {
      j["mean_inconsistencies_correct"] = *rep.mean_inconsistencies_correct;
    }
    if (rep.mean_inconsistencies_incorrect) {
      j["mean_inconsistencies_incorrect"] = *rep.mean_inconsistencies_incorrect;
    }
    j["mean_inverted_pairs_all"] = *rep.mean_inverted_pairs_all;
  }
  if (!rep.bounds.empty()) {
    ojson bounds = ojson::array();
    for (const auto& b : rep.bounds) {
      ojson e;
      e["cost"] = b.cost_name;
      e["lhs"] = b.lhs;
      e["rhs"] = b.rhs;
      e["all_monotone"] = b.all_monotone;
      bounds.push_back(e);
    }
    j["bounds"] = bounds;
  }
  return j;
}

}  // namespace coral
