#pragma once

// Benchmark harness: single runs, hyperparameter sweeps, JSONL records and reports.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bakery/dataspace.hpp"
#include "bakery/evalkit.hpp"
#include "bakery/explorers.hpp"

namespace bakery {

inline constexpr int kSchemaVersion = 1;

// 0.001 to 10 in half-decade steps.
const std::vector<double>& default_learning_rates();
const std::vector<Encoding>& default_encodings();

// A method to run: an explorer configuration, or the supervised OAA reference.
struct MethodConfig {
  bool oaa = false;
  ExplorerConfig explorer;

  std::string algo_name() const;
  // Algorithm-specific hyperparameters, e.g. {"epsilon":0.02}.
  nlohmann::json params() const;
};

struct ResultRecord {
  int schema = kSchemaVersion;
  std::string dataset;
  std::string algo;
  nlohmann::json params = nlohmann::json::object();
  std::optional<std::string> reduction;
  std::optional<std::string> encoding;
  bool baseline = false;
  double lr = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t shuffle_seed = 0;
  std::size_t n = 0;
  std::size_t num_actions = 0;
  std::size_t num_features = 0;
  bool binary_costs = true;
  std::optional<double> pv_loss;
  std::optional<double> pv_oaa;
  std::optional<double> normalized_loss;
  bool degenerate = false;
  std::optional<double> cf_reward_sq_error;
  std::optional<double> cf_loss_sq_error;
  std::optional<double> wall_time;
  std::optional<std::string> error;

  // Hash of the configuration fields (everything that determines the run).
  std::string fingerprint() const;
  nlohmann::json to_json() const;
  static ResultRecord from_json(const nlohmann::json& j);
};

struct RunSpec {
  std::shared_ptr<const Dataset> dataset;
  MethodConfig method;
  std::uint64_t shuffle_seed = 0;
  bool timing = false;
};

// Runs one configuration; failures become records with `error` set.
// `pv_oaa` may be supplied to skip recomputing the reference.
ResultRecord run_once(const RunSpec& spec, std::optional<double> pv_oaa = std::nullopt);

struct SweepGrid {
  std::vector<double> learning_rates = default_learning_rates();
  std::vector<Encoding> encodings = default_encodings();
  std::vector<bool> baselines = {false};
  std::vector<std::uint64_t> seeds = {1};
  // true: hyperparameter grid per algorithm; false: fixed defaults only.
  bool full = true;
  // Applied to every configuration when set, instead of the per-algorithm choices.
  std::optional<Reduction> reduction;

  // Configurations for one algorithm name ("oaa" allowed), in order:
  // encoding, baseline, hyperparameters (grid order as listed), reduction,
  // learning rate, seed.
  std::vector<MethodConfig> configs(const std::string& algo) const;
};

// Environment override BANDIT_BAKERY_THREADS, else `requested`, at least 1.
std::size_t resolve_workers(std::size_t requested);

// datasets x shuffle seeds x configurations, run on `workers` threads;
// returned sorted by fingerprint (ties by dataset and configuration text).
std::vector<ResultRecord> sweep(const std::vector<std::shared_ptr<const Dataset>>& datasets,
                                const std::vector<std::string>& algorithms, const SweepGrid& grid,
                                const std::vector<std::uint64_t>& shuffle_seeds,
                                std::size_t workers, bool timing = false);
std::vector<ResultRecord> sweep(const std::vector<std::shared_ptr<const Dataset>>& datasets,
                                const std::vector<MethodConfig>& methods,
                                const std::vector<std::uint64_t>& shuffle_seeds,
                                std::size_t workers, bool timing = false);

void sort_records(std::vector<ResultRecord>& records);
void write_jsonl(std::ostream& out, const std::vector<ResultRecord>& records);
std::vector<ResultRecord> read_jsonl(std::istream& in);

enum class ReportMode { Matrix, BestLr, CfError, Vote };
enum class GroupBy { Config, Algorithm };

struct ReportOptions {
  ReportMode mode = ReportMode::Matrix;
  GroupBy group_by = GroupBy::Config;
  DatasetFilter filter;
  bool json = false;
  CfMode cf_mode = CfMode::Reward;
};

// Method label used to group records: algorithm and encoding, plus
// hyperparameters, reduction and baseline under GroupBy::Config.
std::string method_key(const ResultRecord& r, GroupBy group_by);

struct BestRun {
  std::string dataset;
  std::string method;
  double lr = 0.0;
  MeanStderr pv;
  std::size_t n = 0;
  std::optional<double> cf_sq_error;  // mean over runs at the selected rate
};

// Per (dataset, method): mean PV over seeds at each learning rate, then the
// rate with the lowest mean. Under GroupBy::Algorithm the minimum is also
// taken over hyperparameters.
std::vector<BestRun> best_lr(const std::vector<ResultRecord>& records, GroupBy group_by,
                             CfMode cf_mode = CfMode::Reward);

// Instant-runoff over datasets: each dataset ranks methods by significant
// wins minus losses and votes for its top choice (split over ties).
struct VoteResult {
  std::string winner;
  std::vector<std::vector<std::pair<std::string, double>>> rounds;
};
VoteResult instant_runoff(const std::vector<DatasetResults>& results,
                          const std::vector<std::string>& methods);

// Formatted table. Throws std::runtime_error("no datasets matched") when the
// filter leaves nothing.
std::string report(const std::vector<ResultRecord>& records, const ReportOptions& options);

}  // namespace bakery
