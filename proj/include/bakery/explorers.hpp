#pragma once

// Exploration algorithms and the generic explore/learn loop.
//
// Each explorer maps a context to a distribution over actions (explore) and
// consumes the resulting interaction record (learn). The round counter t is
// 1-based and advances on learn.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bakery/dataspace.hpp"
#include "bakery/linreg.hpp"
#include "bakery/oracles.hpp"
#include "bakery/rng.hpp"

namespace bakery {

struct ActionDistribution {
  std::vector<double> p;

  static ActionDistribution uniform(std::size_t num_actions);
  static ActionDistribution uniform_over(std::size_t num_actions, const std::vector<Action>& support);

  std::size_t size() const { return p.size(); }
  double operator[](Action a) const { return p[a]; }
  // Throws std::logic_error unless entries are finite, >= 0 and sum to 1 within 1e-9.
  void validate() const;
  // Inverse-CDF draw with one uniform variate; never returns a zero-mass action.
  Action sample(Rng& rng) const;
};

enum class Algorithm { Greedy, EpsilonGreedy, Active, Bag, BagGreedy, Cover, CoverNU, RegCBOpt, RegCBElim };

std::string_view to_string(Algorithm a);
Algorithm parse_algorithm(std::string_view text);

struct ExplorerConfig {
  Algorithm algorithm = Algorithm::Greedy;
  Reduction reduction = Reduction::IWR;
  double epsilon = 0.02;
  std::size_t size = 4;  // N for bag and cover
  double psi = 0.1;
  double c0 = 1e-3;
  Encoding encoding{};
  bool baseline = false;
  double learning_rate = 0.5;
  std::uint64_t seed = 0;
  DrOrder dr_order = DrOrder::UpdateThenEstimate;

  // Fixed hyperparameters used when none are tuned.
  static ExplorerConfig defaults(Algorithm algorithm);
  // Throws std::invalid_argument on an out-of-domain parameter.
  void validate() const;
  // Whether `reduction` influences the algorithm at all.
  bool uses_reduction() const;
};

class Explorer {
 public:
  Explorer(std::size_t num_actions, const ExplorerConfig& cfg, bool shared_weights);
  virtual ~Explorer() = default;

  virtual ActionDistribution explore(const Example& x) = 0;
  void learn(const InteractionRecord& rec, const ActionDistribution& dist);

  std::size_t num_actions() const { return num_actions_; }
  // Round index of the next explore call.
  std::size_t round() const { return learned_ + 1; }
  const ExplorerConfig& config() const { return cfg_; }

 protected:
  virtual void do_learn(const InteractionRecord& rec, const ActionDistribution& dist) = 0;
  RegressorOptions regressor_options() const;
  Policy make_policy() const { return Policy(RegressorSet(num_actions_, regressor_options())); }

  std::size_t num_actions_;
  ExplorerConfig cfg_;
  bool shared_weights_;
  std::size_t learned_ = 0;
};

// Spreads `mass` uniformly over the tie set of each policy's argmin.
void add_votes(std::vector<double>& p, const std::vector<Action>& ties, double mass);

// epsilon/K everywhere plus (1 - epsilon) over the greedy tie set; epsilon = 0 is Greedy.
class EpsilonGreedy final : public Explorer {
 public:
  EpsilonGreedy(std::size_t num_actions, const ExplorerConfig& cfg, bool shared_weights);
  ActionDistribution explore(const Example& x) override;
  const Policy& policy() const { return policy_; }

 private:
  void do_learn(const InteractionRecord& rec, const ActionDistribution& dist) override;
  Policy policy_;
  std::optional<RegressorSet> lossreg_;
};

// Online bootstrap: each policy is trained tau ~ Poisson(1) times per round
// (policy 1 exactly once for bag-greedy); explore averages policy votes.
class Bag final : public Explorer {
 public:
  Bag(std::size_t num_actions, const ExplorerConfig& cfg, bool shared_weights);
  ActionDistribution explore(const Example& x) override;
  const std::vector<Policy>& policies() const { return policies_; }
  bool greedy_head() const { return cfg_.algorithm == Algorithm::BagGreedy; }

 private:
  void do_learn(const InteractionRecord& rec, const ActionDistribution& dist) override;
  std::vector<Policy> policies_;
  std::optional<LossEstimator> estimator_;
  Rng poisson_;
};

class Cover final : public Explorer {
 public:
  Cover(std::size_t num_actions, const ExplorerConfig& cfg, bool shared_weights);
  ActionDistribution explore(const Example& x) override;
  const std::vector<Policy>& policies() const { return policies_; }
  bool uniform_mixing() const { return cfg_.algorithm == Algorithm::Cover; }

  // min(1/K, 1/sqrt(K t)).
  static double epsilon_t(std::size_t num_actions, std::size_t t);
  // lhat - psi eps / (eps + (1 - eps) q).
  static double diversity_cost(double lhat, double q, double eps, double psi);

 private:
  void do_learn(const InteractionRecord& rec, const ActionDistribution& dist) override;
  std::vector<double> vote_distribution(const Example& x, std::size_t count) const;
  std::vector<Policy> policies_;
  LossEstimator estimator_;
};

struct Interval {
  double lower;
  double upper;
};

class RegCB final : public Explorer {
 public:
  RegCB(std::size_t num_actions, const ExplorerConfig& cfg, bool shared_weights);
  ActionDistribution explore(const Example& x) override;

  // C0 ln(K t) / t.
  static double threshold(double c0, std::size_t num_actions, std::size_t t);
  // Confidence interval of action a at the current round, clipped to the loss range.
  Interval bounds(const Example& x, Action a) const;
  // Largest w in [0, 2^24] with (t_a / t) (y'(w) - y)^2 <= delta, by doubling and bisection.
  static double search_weight(const UpdatePath& path, double count_ratio, double delta);

  const RegressorSet& regressor() const { return f_; }

  // Selection rules on precomputed bounds.
  static ActionDistribution optimistic(const std::vector<Interval>& bounds);
  static ActionDistribution elimination(const std::vector<Interval>& bounds);

 private:
  void do_learn(const InteractionRecord& rec, const ActionDistribution& dist) override;
  RegressorSet f_;
};

class ActiveEpsilonGreedy final : public Explorer {
 public:
  ActiveEpsilonGreedy(std::size_t num_actions, const ExplorerConfig& cfg, bool shared_weights);
  ActionDistribution explore(const Example& x) override;

  // sqrt(C0 K ln t / (eps t)) + C0 K ln t / (eps t).
  static double threshold(double c0, std::size_t num_actions, double epsilon, std::size_t t);
  // max(0, tau) / t for the current round.
  double loss_diff(const Example& x, Action candidate) const;
  // Crossing-weight rules on predictions and sensitivities.
  static double csc_crossing(const std::vector<double>& y, const std::vector<double>& s, Action candidate);
  static double iwr_crossing(const std::vector<double>& y, double s_candidate, Action candidate);

  // Admissible set A_t for the current round.
  std::vector<Action> admissible(const Example& x) const;
  const Policy& policy() const { return policy_; }
  // Costs handed to the CSC oracle in the most recent learn (CSC modes only).
  const std::vector<double>& last_costs() const { return last_costs_; }

 private:
  void do_learn(const InteractionRecord& rec, const ActionDistribution& dist) override;
  Policy policy_;
  std::optional<LossEstimator> estimator_;
  std::vector<double> last_costs_;
};

std::unique_ptr<Explorer> make_explorer(const ExplorerConfig& cfg, std::size_t num_actions,
                                        bool shared_weights);

struct TraceEntry {
  std::size_t round;  // 1-based
  Action action;
  double probability;
  double observed_loss;
  double true_cost;
  std::vector<double> distribution;
};

struct Trace {
  std::size_t num_actions = 0;
  std::vector<TraceEntry> rounds;

  std::size_t size() const { return rounds.size(); }
};

// explore, sample from the "sampling" stream, reveal, learn; once per example.
Trace run(const Dataset& ds, const ExplorerConfig& cfg);

}  // namespace bakery
