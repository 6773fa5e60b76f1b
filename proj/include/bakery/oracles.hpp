#pragma once

// Loss estimators (IPS, DR) and the reductions that turn interaction records
// into regression updates: cost-sensitive classification by per-action
// regression, and importance-weighted regression (IWR).

#include <cstddef>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include "bakery/dataspace.hpp"
#include "bakery/linreg.hpp"
#include "bakery/rng.hpp"

namespace bakery {

enum class Reduction { IPS, DR, IWR };

std::string_view to_string(Reduction r);
Reduction parse_reduction(std::string_view text);

// One unit of bandit feedback: context, chosen action, observed (encoded)
// loss and the probability the action had when it was drawn.
struct InteractionRecord {
  const Example& context;
  Action action;
  double loss;
  double probability;

  // Throws std::invalid_argument unless 0 < p <= 1 and the loss is finite.
  void validate() const;
};

struct Selection {
  Action action;
  std::size_t ties;
};

// Policy induced by a set of regressors: argmin of predicted losses.
struct Policy {
  explicit Policy(RegressorSet r) : regressors(std::move(r)) {}

  RegressorSet regressors;
  // Number of oracle calls (one per csc/iwr update applied to this policy).
  std::size_t oracle_calls = 0;

  // Actions whose prediction equals the minimum exactly.
  std::vector<Action> greedy_set(const Example& x) const;
  // Argmin with uniform tie-breaking over exact ties.
  Selection select(const Example& x, Rng& rng) const;
};

std::vector<Action> argmin_set(const std::vector<double>& values);

std::vector<double> ips_estimate(const InteractionRecord& rec, std::size_t num_actions);

// lhat(x, .) plus (loss - lhat(x, a)) / p on the chosen action.
std::vector<double> dr_estimate(const InteractionRecord& rec, const RegressorSet& lossreg);

// One weight-1 regression update of the loss estimator on (x, a, loss).
void lossreg_update(RegressorSet& lossreg, const InteractionRecord& rec);

// One weight-1 regression update per action toward costs[a].
void csc_update(Policy& pol, const Example& x, const std::vector<double>& costs);

// One regression update on the chosen action with importance weight 1/p.
void iwr_update(Policy& pol, const InteractionRecord& rec);

// Whether the DR estimate is taken after or before the estimator learns
// from the current record.
enum class DrOrder { UpdateThenEstimate, EstimateThenUpdate };

// Per-round loss estimation (IPS or DR) owning the DR regressor. The DR
// regressor is stepped once per call to estimate().
class LossEstimator {
 public:
  LossEstimator(Reduction reduction, std::size_t num_actions, RegressorOptions options,
                DrOrder order = DrOrder::UpdateThenEstimate);

  Reduction reduction() const { return reduction_; }
  std::vector<double> estimate(const InteractionRecord& rec);
  const std::optional<RegressorSet>& lossreg() const { return lossreg_; }

 private:
  Reduction reduction_;
  std::size_t num_actions_;
  DrOrder order_;
  std::optional<RegressorSet> lossreg_;
};

// ips: csc with the IPS estimate; dr: lossreg update then csc with the DR
// estimate; iwr: importance-weighted update of the chosen action.
void off_policy_update(Policy& pol, const InteractionRecord& rec, Reduction reduction,
                       RegressorSet* lossreg, DrOrder order = DrOrder::UpdateThenEstimate);

}  // namespace bakery
