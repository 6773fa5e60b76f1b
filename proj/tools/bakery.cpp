// bakery: run contextual bandit explorers on supervised datasets, sweep
// hyperparameters and summarize the results.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "bakery/bench.hpp"
#include "bakery/dataspace.hpp"
#include "bakery/evalkit.hpp"
#include "bakery/explorers.hpp"

using namespace bakery;

namespace {

struct RunArgs {
  std::vector<std::string> data;
  std::string format = "auto";
  std::vector<std::string> algos;
  std::optional<std::string> reduction;
  std::vector<std::string> encodings;
  std::optional<double> lr;
  bool lr_grid = false;
  std::optional<double> epsilon;
  std::optional<std::size_t> bag_size;
  std::optional<std::size_t> cover_size;
  std::optional<double> psi;
  std::optional<double> c0;
  bool baseline = false;
  bool baseline_grid = false;
  std::vector<std::uint64_t> seeds;
  std::vector<std::uint64_t> shuffle_seeds;
  std::size_t shuffles = 0;
  std::size_t workers = 1;
  std::string out;
  bool grid = false;
  bool timing = false;
};

void add_run_options(CLI::App* cmd, RunArgs& a, bool multi) {
  auto* data = cmd->add_option("--data", a.data, "dataset file(s)")->required();
  auto* algo = cmd->add_option("--algo", a.algos,
                               "greedy, egreedy, active, bag, bag-greedy, cover, cover-nu, "
                               "regcb-opt, regcb-elim, oaa")
                   ->required();
  if (!multi) {
    data->expected(1);
    algo->expected(1);
  }
  cmd->add_option("--format", a.format, "auto, multiclass, multilabel, cs, adf")
      ->check(CLI::IsMember({"auto", "multiclass", "multilabel", "cs", "adf"}));
  cmd->add_option("--reduction", a.reduction, "ips, dr or iwr")
      ->check(CLI::IsMember({"ips", "dr", "iwr"}));
  cmd->add_option("--encoding", a.encodings, "loss encoding: 0/1, -1/0, 9/10");
  auto* lr = cmd->add_option("--lr", a.lr, "learning rate");
  cmd->add_flag("--lr-grid", a.lr_grid, "use the 9-point rate grid 0.001..10")->excludes(lr);
  cmd->add_option("--epsilon", a.epsilon, "exploration rate (egreedy, active)");
  cmd->add_option("--bag-size", a.bag_size, "number of bagged policies");
  cmd->add_option("--cover-size", a.cover_size, "number of cover policies");
  cmd->add_option("--psi", a.psi, "cover diversity weight");
  cmd->add_option("--c0", a.c0, "confidence / disagreement constant (regcb, active)");
  cmd->add_flag("--baseline", a.baseline, "add the shared additive baseline");
  cmd->add_option("--seed", a.seeds, "run seed(s)");
  cmd->add_option("--shuffle-seed", a.shuffle_seeds, "dataset shuffle seed(s); 0 keeps file order");
  cmd->add_option("--workers", a.workers, "worker threads (BANDIT_BAKERY_THREADS overrides)")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--out", a.out, "output JSONL file (default stdout)");
  cmd->add_flag("--timing", a.timing, "record wall time per run");
  if (multi) {
    cmd->add_flag("--grid", a.grid, "enumerate the hyperparameter grid of each algorithm");
    cmd->add_flag("--baseline-grid", a.baseline_grid, "run with and without the baseline");
    cmd->add_option("--shuffles", a.shuffles, "use shuffle seeds 1..N");
  }
}

FormatHint parse_hint(const std::string& s) {
  if (s == "multiclass") return FormatHint::Multiclass;
  if (s == "multilabel") return FormatHint::Multilabel;
  if (s == "cs") return FormatHint::CostSensitive;
  if (s == "adf") return FormatHint::ActionFeatures;
  return FormatHint::Auto;
}

std::vector<std::shared_ptr<const Dataset>> load_all(const RunArgs& a) {
  std::vector<std::shared_ptr<const Dataset>> out;
  for (const auto& path : a.data) {
    out.push_back(std::make_shared<const Dataset>(load_dataset(path, parse_hint(a.format))));
  }
  return out;
}

// Explicit flags on top of the algorithm's fixed defaults.
ExplorerConfig configure(const std::string& algo, const RunArgs& a) {
  ExplorerConfig c = ExplorerConfig::defaults(parse_algorithm(algo));
  if (a.reduction) c.reduction = parse_reduction(*a.reduction);
  if (a.epsilon) c.epsilon = *a.epsilon;
  if (c.algorithm == Algorithm::Bag || c.algorithm == Algorithm::BagGreedy) {
    if (a.bag_size) c.size = *a.bag_size;
  } else if (a.cover_size) {
    c.size = *a.cover_size;
  }
  if (a.psi) c.psi = *a.psi;
  if (a.c0) c.c0 = *a.c0;
  c.baseline = a.baseline;
  if (a.lr) c.learning_rate = *a.lr;
  return c;
}

std::vector<Encoding> encodings_of(const RunArgs& a, bool all_by_default) {
  std::vector<Encoding> out;
  for (const auto& e : a.encodings) out.push_back(Encoding::parse(e));
  if (out.empty()) {
    if (all_by_default) return default_encodings();
    out.push_back(Encoding{0.0});
  }
  return out;
}

std::vector<double> rates_of(const RunArgs& a) {
  if (a.lr) return {*a.lr};
  if (a.lr_grid) return default_learning_rates();
  return {ExplorerConfig{}.learning_rate};
}

std::vector<std::uint64_t> seeds_of(const RunArgs& a) {
  return a.seeds.empty() ? std::vector<std::uint64_t>{1} : a.seeds;
}

std::vector<std::uint64_t> shuffle_seeds_of(const RunArgs& a) {
  std::vector<std::uint64_t> out = a.shuffle_seeds;
  for (std::size_t i = 1; i <= a.shuffles; ++i) out.push_back(i);
  if (out.empty()) out.push_back(1);
  return out;
}

std::vector<MethodConfig> methods_of(const RunArgs& a) {
  std::vector<MethodConfig> out;
  if (a.grid) {
    SweepGrid g;
    g.learning_rates = a.lr ? std::vector<double>{*a.lr} : default_learning_rates();
    g.encodings = encodings_of(a, true);
    g.baselines = a.baseline_grid ? std::vector<bool>{false, true} : std::vector<bool>{a.baseline};
    g.seeds = seeds_of(a);
    if (a.reduction) g.reduction = parse_reduction(*a.reduction);
    for (const auto& algo : a.algos) {
      auto c = g.configs(algo);
      out.insert(out.end(), c.begin(), c.end());
    }
    return out;
  }
  const std::vector<bool> baselines =
      a.baseline_grid ? std::vector<bool>{false, true} : std::vector<bool>{a.baseline};
  for (const auto& algo : a.algos) {
    MethodConfig base;
    if (algo == "oaa") {
      base.oaa = true;
    } else {
      base.explorer = configure(algo, a);
    }
    for (const auto& enc : encodings_of(a, false)) {
      for (bool b : baselines) {
        for (double lr : rates_of(a)) {
          for (auto seed : seeds_of(a)) {
            MethodConfig m = base;
            m.explorer.encoding = enc;
            m.explorer.baseline = b;
            m.explorer.learning_rate = lr;
            m.explorer.seed = seed;
            out.push_back(m);
          }
        }
      }
      if (base.oaa) break;  // encoding does not apply
    }
  }
  return out;
}

void emit(const RunArgs& a, const std::vector<ResultRecord>& records) {
  if (a.out.empty()) {
    write_jsonl(std::cout, records);
    return;
  }
  std::ofstream f(a.out);
  if (!f) throw std::runtime_error("cannot write " + a.out);
  write_jsonl(f, records);
}

int do_run(const RunArgs& a, bool single) {
  auto methods = methods_of(a);
  if (single && !a.grid) {
    // Reject invalid configurations up front instead of emitting error records.
    for (const auto& m : methods) {
      if (!m.oaa) m.explorer.validate();
    }
  }
  const auto datasets = load_all(a);
  const auto records =
      sweep(datasets, methods, shuffle_seeds_of(a), resolve_workers(a.workers), a.timing);
  emit(a, records);
  if (single) {
    for (const auto& r : records) {
      if (r.error) {
        std::cerr << "error: " << *r.error << '\n';
        return 1;
      }
    }
  }
  return 0;
}

struct ReportArgs {
  std::vector<std::string> records;
  std::string mode = "matrix";
  std::string group_by = "config";
  std::string filters;
  std::optional<std::size_t> min_actions, min_features, min_examples;
  std::optional<double> max_pv_oaa;
  bool json = false;
  std::string cf_mode = "reward";
  std::string out;
};

int do_report(const ReportArgs& a) {
  std::vector<ResultRecord> records;
  for (const auto& path : a.records) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot read " + path);
    auto r = read_jsonl(f);
    records.insert(records.end(), r.begin(), r.end());
  }
  ReportOptions opt;
  if (a.mode == "matrix") opt.mode = ReportMode::Matrix;
  else if (a.mode == "best-lr") opt.mode = ReportMode::BestLr;
  else if (a.mode == "cf-error") opt.mode = ReportMode::CfError;
  else opt.mode = ReportMode::Vote;
  opt.group_by = a.group_by == "algo" ? GroupBy::Algorithm : GroupBy::Config;
  opt.filter = DatasetFilter::parse(a.filters);
  if (a.min_actions) opt.filter.min_actions = a.min_actions;
  if (a.min_features) opt.filter.min_features = a.min_features;
  if (a.min_examples) opt.filter.min_examples = a.min_examples;
  if (a.max_pv_oaa) opt.filter.max_pv_oaa = a.max_pv_oaa;
  opt.json = a.json;
  opt.cf_mode = a.cf_mode == "loss" ? CfMode::Loss : CfMode::Reward;

  const std::string text = report(records, opt);
  if (a.out.empty()) {
    std::cout << text;
  } else {
    std::ofstream f(a.out);
    if (!f) throw std::runtime_error("cannot write " + a.out);
    f << text;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Contextual bandit exploration benchmark"};
  app.require_subcommand(1);

  RunArgs run_args;
  auto* run_cmd = app.add_subcommand("run", "run configurations and print their records; exits non-zero on any failure");
  add_run_options(run_cmd, run_args, true);

  RunArgs sweep_args;
  auto* sweep_cmd = app.add_subcommand("sweep", "run configurations over datasets in parallel");
  add_run_options(sweep_cmd, sweep_args, true);

  ReportArgs report_args;
  auto* report_cmd = app.add_subcommand("report", "summarize JSONL records");
  report_cmd->add_option("records", report_args.records, "JSONL record files")->required();
  report_cmd->add_option("--mode", report_args.mode, "matrix, best-lr, cf-error or vote")
      ->check(CLI::IsMember({"matrix", "best-lr", "cf-error", "vote"}));
  report_cmd->add_option("--group-by", report_args.group_by,
                         "config: one method per hyperparameter setting; algo: best setting per algorithm")
      ->check(CLI::IsMember({"config", "algo"}));
  report_cmd->add_option("--filters", report_args.filters,
                         "min-actions=K,min-features=D,min-examples=N,max-pv-oaa=P");
  report_cmd->add_option("--min-actions", report_args.min_actions);
  report_cmd->add_option("--min-features", report_args.min_features);
  report_cmd->add_option("--min-examples", report_args.min_examples);
  report_cmd->add_option("--max-pv-oaa", report_args.max_pv_oaa);
  report_cmd->add_flag("--json", report_args.json, "JSON instead of CSV");
  report_cmd->add_option("--cf-mode", report_args.cf_mode, "reward or loss")
      ->check(CLI::IsMember({"reward", "loss"}));
  report_cmd->add_option("--out", report_args.out);

  std::size_t synth_dim = 10, synth_actions = 3, synth_n = 1000;
  std::uint64_t synth_seed = 1;
  std::string synth_out;
  auto* synth_cmd = app.add_subcommand("synth", "write a synthetic linearly separable dataset");
  synth_cmd->add_option("--dim", synth_dim);
  synth_cmd->add_option("--actions", synth_actions);
  synth_cmd->add_option("--n", synth_n);
  synth_cmd->add_option("--seed", synth_seed);
  synth_cmd->add_option("--out", synth_out);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) return do_run(run_args, true);
    if (*sweep_cmd) return do_run(sweep_args, false);
    if (*report_cmd) return do_report(report_args);
    if (*synth_cmd) {
      const Dataset ds = make_linear_dataset(synth_dim, synth_actions, synth_n, synth_seed);
      if (synth_out.empty()) {
        write_dataset(std::cout, ds);
      } else {
        std::ofstream f(synth_out);
        if (!f) throw std::runtime_error("cannot write " + synth_out);
        write_dataset(f, ds);
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
