#pragma once

// Evaluation: progressive validation, the supervised one-against-all
// reference, pairwise significance, win/loss matrices and counterfactual
// IPS evaluation of the uniform policy.

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bakery/dataspace.hpp"
#include "bakery/explorers.hpp"

namespace bakery {

// Mean true cost of the chosen actions. Throws std::invalid_argument on an empty trace.
double pv_loss(const Trace& trace);

// Supervised baseline: predict argmin (ties broken by the "tiebreak" stream
// of `seed`), record the true cost, then train every action on the full true
// cost vector. Returns the progressive validation loss; 0 for an empty dataset.
double oaa_run(const Dataset& ds, double learning_rate, std::uint64_t seed = 0,
               bool baseline = false);

// Plays a fixed action sequence and reports both learner- and evaluator-side values.
Trace replay(const Dataset& ds, const std::vector<Action>& actions, Encoding enc);

struct NormalizedLoss {
  double value;
  bool degenerate;  // pv_oaa < 1e-6: value is the plain difference
};

NormalizedLoss normalized_loss(double pv, double pv_oaa);

double normal_cdf(double z);

enum class Outcome { AWins, BWins, Tie };

std::string_view to_string(Outcome o);

// One-sided approximate Z-test on two progressive validation losses: a wins
// when NormalCDF((pa - pb) / se) < 0.05.
Outcome significance(double pa, double pb, std::size_t na, std::size_t nb);

struct WinLossEntry {
  int wins = 0;
  int losses = 0;
  int difference() const { return wins - losses; }
};

struct DatasetInfo {
  std::string name;
  std::size_t num_actions = 0;
  std::size_t num_features = 0;
  std::size_t num_examples = 0;
  double pv_oaa = 0.0;
};

// Dataset subset constraints; an unset field does not constrain.
struct DatasetFilter {
  std::optional<std::size_t> min_actions;
  std::optional<std::size_t> min_features;
  std::optional<std::size_t> min_examples;
  std::optional<double> max_pv_oaa;

  bool accepts(const DatasetInfo& info) const;
  bool empty() const;
  // Comma-separated "key=value" list with keys min-actions, min-features,
  // min-examples and max-pv-oaa.
  static DatasetFilter parse(const std::string& text);
  std::string describe() const;
};

struct MethodScore {
  double pv = 0.0;
  std::size_t n = 0;
};

struct DatasetResults {
  DatasetInfo info;
  std::map<std::string, MethodScore> methods;
};

struct WinLossMatrix {
  std::vector<std::string> methods;
  std::vector<std::vector<WinLossEntry>> entries;  // [row][column], row against column
  std::vector<std::string> skipped;                // "dataset: a vs b" for missing runs
  std::size_t datasets_used = 0;

  const WinLossEntry& at(std::size_t row, std::size_t col) const { return entries[row][col]; }
  std::string to_csv() const;
};

WinLossMatrix win_loss_matrix(const std::vector<DatasetResults>& results,
                              const std::vector<std::string>& methods,
                              const DatasetFilter& filter = {});

enum class CfMode { Reward, Loss };

struct CfEstimate {
  double estimate;
  double squared_error;  // against 1 - 1/K
};

// IPS estimate of the uniform policy's expected loss from a logged trace.
// reward: 1 - mean((1 - c) / (K p)); loss: mean(c / (K p)).
CfEstimate cf_ips_uniform(const Trace& trace, std::size_t num_actions, CfMode mode);

struct MeanStderr {
  double mean = 0.0;
  double stderr_ = 0.0;
  std::size_t count = 0;
};

// Mean and standard error of the mean (sample standard deviation / sqrt(n)).
MeanStderr mean_stderr(const std::vector<double>& values);

struct Quartiles {
  double min, q1, median, q3, max;
};

// Linear interpolation between order statistics. Throws on empty input.
Quartiles quartiles(std::vector<double> values);

}  // namespace bakery
