// coral: train, evaluate, and audit rank-consistent ordinal regression
// models on CSV or synthetic tabular data.
//
// Exit codes: 0 = success / check passed, 1 = check failure, 2 = usage or
// I/O error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "coral/coral.hpp"

namespace fs = std::filesystem;
using coral::ojson;

namespace {

// ---------------------------------------------------------------------------
// Small helpers
// ---------------------------------------------------------------------------

std::vector<int> parse_int_list(const std::string& text, const char* what) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      out.push_back(std::stoi(tok));
    } catch (const std::exception&) {
      throw CLI::ValidationError(std::string(what) + ": expected comma-separated integers, got '" +
                                 text + "'");
    }
  }
  if (out.empty()) throw CLI::ValidationError(std::string(what) + ": empty list");
  return out;
}

coral::SplitPlan parse_split(const std::string& text, std::uint64_t seed) {
  std::vector<double> f;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) f.push_back(std::stod(tok));
  if (f.size() != 3) {
    throw CLI::ValidationError("--split: expected three comma-separated fractions");
  }
  return coral::SplitPlan{f[0], f[1], f[2], seed};
}

// --ranks takes either a count ("6") or an explicit ordered label list
// ("bad,okay,good").
coral::RankSpec parse_ranks(const std::string& text) {
  if (text.find(',') == std::string::npos) {
    try {
      return coral::RankSpec::numeric(std::stoi(text));
    } catch (const std::invalid_argument&) {
      throw CLI::ValidationError("--ranks: expected a count or a comma-separated label list");
    }
  }
  std::vector<std::string> labels;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) labels.push_back(tok);
  return coral::RankSpec::from_labels(std::move(labels));
}

coral::TaskWeights parse_lambda(const std::string& spec, int num_tasks) {
  if (spec == "uniform") return coral::TaskWeights::uniform(num_tasks);
  std::ifstream in(spec);
  if (!in) throw std::runtime_error("--lambda: cannot open " + spec);
  coral::TaskWeights w;
  double v;
  while (in >> v) w.lambda.push_back(v);
  if (static_cast<int>(w.lambda.size()) != num_tasks) {
    throw std::runtime_error("--lambda: expected " + std::to_string(num_tasks) +
                             " weights in " + spec + ", got " + std::to_string(w.lambda.size()));
  }
  w.validate();
  return w;
}

coral::CostMatrix cost_by_name(const std::string& name, int num_ranks) {
  if (name == "classification") return coral::CostMatrix::classification(num_ranks);
  if (name == "absolute") return coral::CostMatrix::absolute(num_ranks);
  coral::CostMatrix cm = coral::CostMatrix::load(name);
  if (cm.num_ranks() != num_ranks) {
    throw std::runtime_error("--cost: matrix in " + name + " is " + std::to_string(cm.num_ranks()) +
                             "x" + std::to_string(cm.num_ranks()) + " but the model has " +
                             std::to_string(num_ranks) + " ranks");
  }
  return cm;
}

// Buffered output: nothing touches the filesystem until every artifact of a
// command has been rendered, so failures leave no partial files behind.
class OutputBundle {
 public:
  void add(fs::path path, std::string content) {
    files_.emplace_back(std::move(path), std::move(content));
  }

  void commit() {
    for (const auto& [path, content] : files_) {
      if (path.has_parent_path()) fs::create_directories(path.parent_path());
      const fs::path tmp = path.string() + ".tmp";
      {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << content;
        if (!out) throw std::runtime_error("write failed for " + tmp.string());
      }
      fs::rename(tmp, path);
    }
  }

 private:
  std::vector<std::pair<fs::path, std::string>> files_;
};

std::string format_mean(const std::optional<double>& v) {
  if (!v) return "absent";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", *v);
  return buf;
}

// ---------------------------------------------------------------------------
// Shared option blocks
// ---------------------------------------------------------------------------

struct DataOptions {
  std::string dataset_path;
  bool has_header = false;
  bool synthetic = false;
  std::string ranks = "6";
  int n = 2000;
  int dim = 4;
  double noise_sd = 0.1;
  std::uint64_t seed = 0;

  void attach(CLI::App* cmd, std::uint64_t* seed_storage) {
    auto* ds = cmd->add_option("--dataset", dataset_path, "CSV dataset path")
                   ->envname("CORAL_DATASET");
    cmd->add_flag("--header", has_header, "CSV has a header line");
    auto* syn = cmd->add_flag("--synthetic", synthetic, "generate a synthetic dataset")
                    ->envname("CORAL_SYNTHETIC");
    ds->excludes(syn);
    cmd->add_option("--ranks", ranks, "rank count or comma-separated ordered labels")
        ->envname("CORAL_RANKS");
    cmd->add_option("--n", n, "synthetic example count")->check(CLI::PositiveNumber);
    cmd->add_option("--dim", dim, "synthetic feature count")->check(CLI::PositiveNumber);
    cmd->add_option("--noise-sd", noise_sd, "synthetic latent noise standard deviation");
    if (seed_storage) {
      cmd->add_option("--seed", *seed_storage, "random seed")->envname("CORAL_SEED");
    }
  }

  coral::Dataset load(std::uint64_t run_seed) const {
    const coral::RankSpec spec = parse_ranks(ranks);
    if (synthetic) {
      return coral::generate_synthetic(
          {run_seed, n, dim, spec.num_ranks(), noise_sd});
    }
    if (dataset_path.empty()) {
      throw CLI::ValidationError("need --dataset PATH or --synthetic");
    }
    coral::Dataset ds = coral::load_csv(dataset_path, {spec.num_ranks(), has_header});
    ds.ranks = spec;
    coral::validate_dataset(ds);
    return ds;
  }

  ojson config_json(std::uint64_t run_seed) const {
    ojson j;
    if (synthetic) {
      j["source"] = "synthetic";
      j["n"] = n;
      j["dim"] = dim;
      j["noise_sd"] = noise_sd;
    } else {
      j["source"] = dataset_path;
      j["header"] = has_header;
    }
    j["ranks"] = ranks;
    j["seed"] = run_seed;
    return j;
  }
};

// ---------------------------------------------------------------------------
// Subcommand implementations; each returns the process exit code.
// ---------------------------------------------------------------------------

int run_train(const DataOptions& data, const coral::TrainConfig& cfg, const std::string& head_name,
              const std::string& split_text, const std::string& lambda_spec,
              const std::vector<std::string>& cost_names, const std::string& out_dir) {
  coral::TrainConfig train_cfg = cfg;
  train_cfg.head = coral::head_kind_from_name(head_name);

  const coral::Dataset full = data.load(train_cfg.seed);
  const coral::SplitPlan plan = parse_split(split_text, train_cfg.seed);
  coral::Splits splits = coral::split(full, plan);

  std::optional<coral::Standardizer> standardizer;
  if (train_cfg.normalize_features) {
    standardizer = coral::Standardizer::fit(splits.train);
    for (int zc : standardizer->zero_variance_columns) {
      std::cerr << "warning: feature column " << zc << " has zero variance; normalized to 0\n";
    }
    splits.train = standardizer->apply(splits.train);
    splits.validation = standardizer->apply(splits.validation);
    splits.test = standardizer->apply(splits.test);
  }

  train_cfg.lambda = parse_lambda(lambda_spec, full.ranks.num_ranks() - 1).lambda;

  ojson config;
  config["command"] = "train";
  config["data"] = data.config_json(train_cfg.seed);
  config["head"] = head_name;
  config["hidden"] = train_cfg.hidden_sizes;
  config["epochs"] = train_cfg.epochs;
  config["batch_size"] = train_cfg.batch_size;
  config["lr"] = train_cfg.learning_rate;
  config["lambda"] = train_cfg.lambda;
  config["split"] = split_text;
  config["normalize"] = train_cfg.normalize_features;
  config["batch_mean_gradient"] = train_cfg.batch_mean_gradient;
  const std::string config_line = config.dump();

  coral::OrdinalModel init = coral::make_model(full.ranks, full.dim(), train_cfg.hidden_sizes,
                                               train_cfg.head, train_cfg.seed);
  const coral::TrainResult result = coral::train(std::move(init), splits.train, splits.validation,
                                                 train_cfg);

  std::vector<std::pair<std::string, coral::CostMatrix>> costs;
  if (result.best_model.head_kind() != coral::HeadKind::Ce) {
    for (const std::string& name : cost_names) {
      costs.emplace_back(name, cost_by_name(name, full.ranks.num_ranks()));
    }
  }
  const coral::EvalReport test_report = coral::audit_split(result.best_model, splits.test, costs);

  OutputBundle out;
  const fs::path dir(out_dir);
  {
    std::string log_text = "{\"config\":" + config_line + "}\n";
    log_text += coral::epoch_log_lines(result.log);
    out.add(dir / "train_log.jsonl", std::move(log_text));
  }
  {
    std::ostringstream model_text;
    coral::save_model(model_text, result.best_model,
                      standardizer ? &*standardizer : nullptr, config_line);
    out.add(dir / "model.coral", model_text.str());
  }
  {
    ojson report;
    report["config"] = config;
    report["best_epoch"] = result.best_epoch;
    report["best_val_mae"] = result.best_val_mae;
    report["test"] = coral::eval_report_json(test_report);
    out.add(dir / "test_report.json", report.dump(2) + "\n");
  }
  out.commit();

  std::cout << "trained " << head_name << " head for " << train_cfg.epochs << " epochs\n"
            << "best epoch " << result.best_epoch << " (validation MAE " << result.best_val_mae
            << ")\n"
            << "test MAE " << test_report.mae << ", test RMSE " << test_report.rmse << '\n'
            << "artifacts in " << dir.string() << '\n';
  return 0;
}

struct LoadedEval {
  coral::ModelFile model_file;
  coral::Dataset data;
};

LoadedEval load_for_eval(const std::string& model_path, const std::string& dataset_path,
                         bool has_header) {
  LoadedEval le{coral::load_model(model_path), {}};
  coral::CsvSchema schema{le.model_file.model.num_ranks(), has_header};
  le.data = coral::load_csv(dataset_path, schema);
  le.data.ranks = le.model_file.model.ranks;
  if (le.model_file.standardizer) le.data = le.model_file.standardizer->apply(le.data);
  return le;
}

int run_eval(const std::string& model_path, const std::string& dataset_path, bool has_header,
             const std::vector<std::string>& cost_names, const std::string& out_path,
             bool table_layout) {
  const LoadedEval le = load_for_eval(model_path, dataset_path, has_header);
  std::vector<std::pair<std::string, coral::CostMatrix>> costs;
  if (le.model_file.model.head_kind() != coral::HeadKind::Ce) {
    for (const std::string& name : cost_names) {
      costs.emplace_back(name, cost_by_name(name, le.model_file.model.num_ranks()));
    }
  }
  const coral::EvalReport rep = coral::audit_split(le.model_file.model, le.data, costs);

  ojson config;
  config["command"] = table_layout ? "audit" : "eval";
  config["model"] = model_path;
  config["dataset"] = dataset_path;
  config["costs"] = cost_names;
  if (!le.model_file.config.empty()) config["model_config"] = le.model_file.config;

  ojson j;
  j["config"] = config;
  j["report"] = coral::eval_report_json(rep);
  const std::string rendered = j.dump(2) + "\n";

  if (table_layout) {
    std::cout << "predictions: " << rep.count << " (" << rep.correct_count << " correct, "
              << rep.incorrect_count << " incorrect)\n"
              << "MAE " << rep.mae << ", RMSE " << rep.rmse << '\n'
              << "mean inconsistencies per example\n"
              << "  all predictions:       " << format_mean(rep.mean_inconsistencies_all) << '\n'
              << "  correct predictions:   " << format_mean(rep.mean_inconsistencies_correct) << '\n'
              << "  incorrect predictions: " << format_mean(rep.mean_inconsistencies_incorrect)
              << '\n';
  } else {
    std::cout << rendered;
  }

  if (!out_path.empty()) {
    OutputBundle out;
    out.add(out_path, rendered);
    out.commit();
  }
  return 0;
}

int run_gradcheck(const std::string& head_name, std::uint64_t seed, int trials, double step,
                  double tolerance) {
  const coral::HeadKind head = coral::head_kind_from_name(head_name);
  double worst = 0.0;
  for (int trial = 0; trial < trials; ++trial) {
    coral::Rng rng(coral::mix_seed(seed, 1000 + static_cast<std::uint64_t>(trial)));
    const int d = rng.uniform_int(2, 8);
    const int k = rng.uniform_int(3, 6);
    const int n = rng.uniform_int(4, 32);
    const std::vector<int> hidden{rng.uniform_int(4, 16), rng.uniform_int(2, 8)};

    coral::Dataset ds;
    ds.features = coral::Matrix(n, d);
    for (double& v : ds.features.data) v = rng.uniform(-1.5, 1.5);
    ds.labels.resize(static_cast<std::size_t>(n));
    for (auto& y : ds.labels) y = rng.uniform_int(1, k);
    ds.ranks = coral::RankSpec::numeric(k);

    coral::TaskWeights lambda = coral::TaskWeights::uniform(k - 1);
    for (double& v : lambda.lambda) v = rng.uniform(0.5, 2.0);

    const coral::OrdinalModel m = coral::make_model(ds.ranks, d, hidden, head, rng.next_u64());
    std::vector<int> idx(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;

    const coral::LossGrad lg = coral::model_loss_grad(m, ds, idx, lambda);
    const std::vector<double> numeric = coral::finite_difference_grad(m, ds, idx, lambda, step);
    worst = std::max(worst, coral::max_rel_error(lg.grad, numeric));
  }
  std::printf("gradcheck head=%s trials=%d max_rel_error=%.3e tolerance=%.1e\n", head_name.c_str(),
              trials, worst, tolerance);
  const bool pass = worst <= tolerance;
  std::printf("%s\n", pass ? "PASS" : "FAIL");
  return pass ? 0 : 1;
}

int run_bound(const std::string& model_path, const std::string& dataset_path, bool has_header,
              const std::vector<std::string>& cost_names) {
  const LoadedEval le = load_for_eval(model_path, dataset_path, has_header);
  if (le.model_file.model.head_kind() == coral::HeadKind::Ce) {
    throw std::runtime_error("bound: the ce head has no binary task decisions");
  }
  std::vector<coral::BinaryDecisions> decisions;
  decisions.reserve(static_cast<std::size_t>(le.data.size()));
  for (int i = 0; i < le.data.size(); ++i) {
    decisions.push_back(coral::model_decisions(le.model_file.model, le.data.features.row(i)));
  }
  bool pass = true;
  for (const std::string& name : cost_names) {
    const coral::CostMatrix cm = cost_by_name(name, le.model_file.model.num_ranks());
    const coral::BoundResult r = coral::bound_check(decisions, le.data.labels, cm);
    const bool holds = r.lhs <= r.rhs + 1e-12;
    pass = pass && holds;
    std::printf("bound cost=%s lhs=%.12f rhs=%.12f rank_monotone=%s %s\n", name.c_str(), r.lhs,
                r.rhs, r.all_monotone ? "yes" : "no", holds ? "PASS" : "FAIL");
    if (!r.all_monotone) {
      std::printf("note: decisions are not rank-monotone; the bound is not guaranteed\n");
    }
  }
  return pass ? 0 : 1;
}

int run_theorem1(int trials, std::uint64_t seed, double order_tolerance) {
  int ordered = 0;
  for (int trial = 0; trial < trials; ++trial) {
    coral::Rng rng(coral::mix_seed(seed, 2000 + static_cast<std::uint64_t>(trial)));
    const int k = rng.uniform_int(3, 8);
    const int n = rng.uniform_int(50, 200);
    std::vector<double> scores(static_cast<std::size_t>(n));
    for (double& s : scores) s = rng.normal(0.0, 1.5);
    std::vector<coral::ExtendedTarget> targets;
    targets.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      const int label = i < k ? i + 1 : rng.uniform_int(1, k);  // every rank occurs
      targets.push_back(coral::extend_label(label, k));
    }
    coral::TaskWeights lambda = coral::TaskWeights::uniform(k - 1);
    for (double& v : lambda.lambda) v = rng.uniform(0.2, 3.0);

    const coral::BiasFit fit = coral::optimize_biases_only(scores, targets, lambda, 1e-12);
    bool is_ordered = true;
    for (std::size_t t = 0; t + 1 < fit.bias.size(); ++t) {
      if (!(fit.bias[t] >= fit.bias[t + 1] - order_tolerance)) is_ordered = false;
    }
    if (is_ordered) ++ordered;
  }
  std::printf("theorem1 ordered=%d/%d (tolerance %.1e)\n", ordered, trials, order_tolerance);
  const bool pass = ordered == trials;
  std::printf("%s\n", pass ? "PASS" : "FAIL");
  return pass ? 0 : 1;
}

int run_gen_data(const DataOptions& data, std::uint64_t seed, const std::string& out_path) {
  const coral::RankSpec spec = parse_ranks(data.ranks);
  const coral::Dataset ds = coral::generate_synthetic(
      {seed, data.n, data.dim, spec.num_ranks(), data.noise_sd});
  std::ostringstream text;
  coral::save_csv(ds, text);
  OutputBundle out;
  out.add(out_path, text.str());
  out.commit();
  std::cout << "wrote " << ds.size() << " examples (" << ds.dim() << " features, K="
            << spec.num_ranks() << ") to " << out_path << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CORAL rank-consistent ordinal regression toolkit"};
  app.require_subcommand(1);
  app.set_config("--config", "", "read options from an INI/TOML file");
  app.allow_config_extras(false);

  int exit_status = 0;

  // --- train ---------------------------------------------------------------
  // Subcommands fall through so `coral train --config file` reaches the
  // app-level --config option.
  auto* train_cmd = app.add_subcommand("train", "train a model and write artifacts");
  train_cmd->fallthrough();
  auto data = std::make_shared<DataOptions>();
  auto train_cfg = std::make_shared<coral::TrainConfig>();
  auto head_name = std::make_shared<std::string>("coral");
  auto split_text = std::make_shared<std::string>("0.7,0.1,0.2");
  auto lambda_spec = std::make_shared<std::string>("uniform");
  auto cost_names = std::make_shared<std::vector<std::string>>(
      std::vector<std::string>{"absolute", "classification"});
  auto out_dir = std::make_shared<std::string>("coral-out");
  auto hidden_text = std::make_shared<std::string>("32,16");
  data->attach(train_cmd, &train_cfg->seed);
  train_cmd->add_option("--head", *head_name, "output head: coral|or|ce")
      ->check(CLI::IsMember({"coral", "or", "ce"}))
      ->envname("CORAL_HEAD");
  train_cmd->add_option("--epochs", train_cfg->epochs, "training epochs")
      ->check(CLI::PositiveNumber)
      ->envname("CORAL_EPOCHS");
  train_cmd->add_option("--batch-size", train_cfg->batch_size, "mini-batch size")
      ->check(CLI::PositiveNumber)
      ->envname("CORAL_BATCH_SIZE");
  train_cmd->add_option("--lr", train_cfg->learning_rate, "learning rate")
      ->envname("CORAL_LR");
  train_cmd->add_option("--hidden", *hidden_text, "hidden layer sizes, e.g. 32,16");
  train_cmd->add_option("--lambda", *lambda_spec, "task weights: 'uniform' or a file path")
      ->envname("CORAL_LAMBDA");
  train_cmd->add_option("--split", *split_text, "train,validation,test fractions")
      ->envname("CORAL_SPLIT");
  train_cmd->add_option("--cost", *cost_names, "cost matrices for the report")
      ->envname("CORAL_COST");
  train_cmd->add_flag("!--no-normalize", train_cfg->normalize_features,
                      "disable train-fitted feature standardization");
  train_cmd->add_flag("!--batch-sum", train_cfg->batch_mean_gradient,
                      "step on raw batch-sum gradients instead of batch means");
  train_cmd->add_option("--out", *out_dir, "output directory")->envname("CORAL_OUT");
  train_cmd->callback([=, &exit_status]() {
    train_cfg->hidden_sizes = parse_int_list(*hidden_text, "--hidden");
    exit_status = run_train(*data, *train_cfg, *head_name, *split_text, *lambda_spec,
                            *cost_names, *out_dir);
  });

  // --- eval / audit ----------------------------------------------------------
  for (const bool table : {false, true}) {
    auto* cmd = app.add_subcommand(table ? "audit" : "eval",
                                   table ? "audit rank consistency of a trained model"
                                         : "evaluate a trained model on a dataset");
    cmd->fallthrough();
    auto model_path = std::make_shared<std::string>();
    auto dataset_path = std::make_shared<std::string>();
    auto header = std::make_shared<bool>(false);
    auto costs = std::make_shared<std::vector<std::string>>(
        std::vector<std::string>{"absolute", "classification"});
    auto out_path = std::make_shared<std::string>();
    cmd->add_option("--model", *model_path, "model file")->required()->envname("CORAL_MODEL");
    cmd->add_option("--dataset", *dataset_path, "CSV dataset path")
        ->required()
        ->envname("CORAL_DATASET");
    cmd->add_flag("--header", *header, "CSV has a header line");
    cmd->add_option("--cost", *costs, "cost matrices for bound evaluation");
    cmd->add_option("--out", *out_path, "write the JSON report here")->envname("CORAL_OUT");
    cmd->callback([=, &exit_status]() {
      exit_status = run_eval(*model_path, *dataset_path, *header, *costs, *out_path, table);
    });
  }

  // --- gradcheck -------------------------------------------------------------
  {
    auto* cmd = app.add_subcommand("gradcheck", "verify analytic gradients with finite differences");
    cmd->fallthrough();
    auto head = std::make_shared<std::string>("coral");
    auto seed = std::make_shared<std::uint64_t>(0);
    auto trials = std::make_shared<int>(20);
    auto step = std::make_shared<double>(1e-6);
    auto tol = std::make_shared<double>(1e-6);
    cmd->add_option("--head", *head, "output head: coral|or|ce")
        ->check(CLI::IsMember({"coral", "or", "ce"}))
        ->envname("CORAL_HEAD");
    cmd->add_option("--seed", *seed, "random seed")->envname("CORAL_SEED");
    cmd->add_option("--trials", *trials, "number of random model/batch pairs")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--step", *step, "finite-difference step");
    cmd->add_option("--tol", *tol, "maximum relative error accepted");
    cmd->callback([=, &exit_status]() {
      exit_status = run_gradcheck(*head, *seed, *trials, *step, *tol);
    });
  }

  // --- bound -------------------------------------------------------------------
  {
    auto* cmd = app.add_subcommand("bound", "evaluate the generalization bound on a dataset");
    cmd->fallthrough();
    auto model_path = std::make_shared<std::string>();
    auto dataset_path = std::make_shared<std::string>();
    auto header = std::make_shared<bool>(false);
    auto costs = std::make_shared<std::vector<std::string>>(std::vector<std::string>{"absolute"});
    cmd->add_option("--model", *model_path, "model file")->required()->envname("CORAL_MODEL");
    cmd->add_option("--dataset", *dataset_path, "CSV dataset path")
        ->required()
        ->envname("CORAL_DATASET");
    cmd->add_flag("--header", *header, "CSV has a header line");
    cmd->add_option("--cost", *costs, "cost matrices to check");
    cmd->callback([=, &exit_status]() {
      exit_status = run_bound(*model_path, *dataset_path, *header, *costs);
    });
  }

  // --- theorem1 ----------------------------------------------------------------
  {
    auto* cmd = app.add_subcommand("theorem1",
                                   "verify ordered biases at random bias-subproblem optima");
    cmd->fallthrough();
    auto trials = std::make_shared<int>(100);
    auto seed = std::make_shared<std::uint64_t>(0);
    auto tol = std::make_shared<double>(1e-9);
    cmd->add_option("--trials", *trials, "number of random instances")->check(CLI::PositiveNumber);
    cmd->add_option("--seed", *seed, "random seed")->envname("CORAL_SEED");
    cmd->add_option("--tol", *tol, "ordering slack");
    cmd->callback([=, &exit_status]() { exit_status = run_theorem1(*trials, *seed, *tol); });
  }

  // --- gen-data ------------------------------------------------------------------
  {
    auto* cmd = app.add_subcommand("gen-data", "write a synthetic dataset as CSV");
    cmd->fallthrough();
    auto gen = std::make_shared<DataOptions>();
    auto seed = std::make_shared<std::uint64_t>(0);
    auto out_path = std::make_shared<std::string>("synthetic.csv");
    cmd->add_option("--ranks", gen->ranks, "rank count")->envname("CORAL_RANKS");
    cmd->add_option("--n", gen->n, "example count")->check(CLI::PositiveNumber);
    cmd->add_option("--dim", gen->dim, "feature count")->check(CLI::PositiveNumber);
    cmd->add_option("--noise-sd", gen->noise_sd, "latent noise standard deviation");
    cmd->add_option("--seed", *seed, "random seed")->envname("CORAL_SEED");
    cmd->add_option("--out", *out_path, "output CSV path")->envname("CORAL_OUT");
    cmd->callback([=, &exit_status]() { exit_status = run_gen_data(*gen, *seed, *out_path); });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return exit_status;
}
