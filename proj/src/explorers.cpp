#include "bakery/explorers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace bakery {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kMaxWeight = 16777216.0;  // 2^24

std::vector<double> checked_predictions(const RegressorSet& r, const Example& x) {
  auto y = r.predict_all(x);
  for (double v : y) {
    if (!std::isfinite(v)) throw std::runtime_error("non-finite prediction");
  }
  return y;
}

std::vector<Action> greedy_ties(const RegressorSet& r, const Example& x) {
  return argmin_set(checked_predictions(r, x));
}

}  // namespace

// ---------------------------------------------------------------------------
// ActionDistribution

ActionDistribution ActionDistribution::uniform(std::size_t num_actions) {
  return {std::vector<double>(num_actions, 1.0 / static_cast<double>(num_actions))};
}

ActionDistribution ActionDistribution::uniform_over(std::size_t num_actions,
                                                    const std::vector<Action>& support) {
  ActionDistribution d{std::vector<double>(num_actions, 0.0)};
  add_votes(d.p, support, 1.0);
  return d;
}

void ActionDistribution::validate() const {
  if (p.empty()) throw std::logic_error("action distribution: empty");
  double sum = 0.0;
  for (double v : p) {
    if (!std::isfinite(v) || v < 0.0) {
      throw std::logic_error("action distribution: invalid entry " + std::to_string(v));
    }
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw std::logic_error("action distribution: sums to " + std::to_string(sum));
  }
}

Action ActionDistribution::sample(Rng& rng) const {
  const double u = rng.uniform();
  double cum = 0.0;
  Action last = 0;
  for (Action a = 0; a < p.size(); ++a) {
    if (p[a] <= 0.0) continue;
    cum += p[a];
    last = a;
    if (u < cum) return a;
  }
  return last;  // rounding left u just above the final partial sum
}

void add_votes(std::vector<double>& p, const std::vector<Action>& ties, double mass) {
  const double share = mass / static_cast<double>(ties.size());
  for (Action a : ties) p[a] += share;
}

// ---------------------------------------------------------------------------
// Configuration

std::string_view to_string(Algorithm a) {
  switch (a) {
    case Algorithm::Greedy: return "greedy";
    case Algorithm::EpsilonGreedy: return "egreedy";
    case Algorithm::Active: return "active";
    case Algorithm::Bag: return "bag";
    case Algorithm::BagGreedy: return "bag-greedy";
    case Algorithm::Cover: return "cover";
    case Algorithm::CoverNU: return "cover-nu";
    case Algorithm::RegCBOpt: return "regcb-opt";
    case Algorithm::RegCBElim: return "regcb-elim";
  }
  return "?";
}

Algorithm parse_algorithm(std::string_view text) {
  for (auto a : {Algorithm::Greedy, Algorithm::EpsilonGreedy, Algorithm::Active, Algorithm::Bag,
                 Algorithm::BagGreedy, Algorithm::Cover, Algorithm::CoverNU, Algorithm::RegCBOpt,
                 Algorithm::RegCBElim}) {
    if (text == to_string(a)) return a;
  }
  throw std::invalid_argument("unknown algorithm '" + std::string(text) + "'");
}

ExplorerConfig ExplorerConfig::defaults(Algorithm algorithm) {
  ExplorerConfig cfg;
  cfg.algorithm = algorithm;
  switch (algorithm) {
    case Algorithm::Greedy:
      cfg.epsilon = 0.0;
      break;
    case Algorithm::EpsilonGreedy:
      break;
    case Algorithm::Active:
      cfg.c0 = 1e-6;
      break;
    case Algorithm::Bag:
    case Algorithm::BagGreedy:
      break;
    case Algorithm::Cover:
      cfg.reduction = Reduction::IPS;
      break;
    case Algorithm::CoverNU:
      cfg.reduction = Reduction::DR;
      break;
    case Algorithm::RegCBOpt:
    case Algorithm::RegCBElim:
      cfg.c0 = 1e-3;
      break;
  }
  return cfg;
}

bool ExplorerConfig::uses_reduction() const {
  return algorithm != Algorithm::RegCBOpt && algorithm != Algorithm::RegCBElim;
}

void ExplorerConfig::validate() const {
  auto fail = [](const std::string& msg) { throw std::invalid_argument(msg); };
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) fail("learning rate must be > 0");
  if (!std::isfinite(encoding.offset)) fail("encoding offset must be finite");
  switch (algorithm) {
    case Algorithm::Greedy:
      break;
    case Algorithm::EpsilonGreedy:
      if (!(epsilon >= 0.0 && epsilon <= 1.0)) fail("epsilon must lie in [0, 1]");
      break;
    case Algorithm::Active:
      if (!(epsilon > 0.0 && epsilon <= 1.0)) fail("active: epsilon must lie in (0, 1]");
      if (!(c0 > 0.0) || !std::isfinite(c0)) fail("c0 must be > 0");
      break;
    case Algorithm::Bag:
    case Algorithm::BagGreedy:
      if (size < 1) fail("bag size must be >= 1");
      break;
    case Algorithm::Cover:
    case Algorithm::CoverNU:
      if (reduction == Reduction::IWR) fail("cover does not support iwr");
      if (size < 1) fail("cover size must be >= 1");
      if (!(psi > 0.0) || !std::isfinite(psi)) fail("psi must be > 0");
      break;
    case Algorithm::RegCBOpt:
    case Algorithm::RegCBElim:
      if (!(c0 > 0.0) || !std::isfinite(c0)) fail("c0 must be > 0");
      break;
  }
}

// ---------------------------------------------------------------------------
// Explorer base

Explorer::Explorer(std::size_t num_actions, const ExplorerConfig& cfg, bool shared_weights)
    : num_actions_(num_actions), cfg_(cfg), shared_weights_(shared_weights) {
  if (num_actions == 0) throw std::invalid_argument("explorer: no actions");
  cfg_.validate();
}

RegressorOptions Explorer::regressor_options() const {
  return {cfg_.learning_rate, shared_weights_, cfg_.baseline};
}

void Explorer::learn(const InteractionRecord& rec, const ActionDistribution& dist) {
  rec.validate();
  if (rec.action >= num_actions_) throw std::out_of_range("learn: action out of range");
  do_learn(rec, dist);
  ++learned_;
}

// ---------------------------------------------------------------------------
// epsilon-greedy

EpsilonGreedy::EpsilonGreedy(std::size_t num_actions, const ExplorerConfig& cfg,
                             bool shared_weights)
    : Explorer(num_actions, cfg, shared_weights), policy_(make_policy()) {
  if (cfg_.algorithm == Algorithm::Greedy) cfg_.epsilon = 0.0;
  if (cfg_.reduction == Reduction::DR) lossreg_.emplace(num_actions, regressor_options());
}

ActionDistribution EpsilonGreedy::explore(const Example& x) {
  const double eps = cfg_.epsilon;
  ActionDistribution d{std::vector<double>(num_actions_, eps / static_cast<double>(num_actions_))};
  add_votes(d.p, greedy_ties(policy_.regressors, x), 1.0 - eps);
  return d;
}

void EpsilonGreedy::do_learn(const InteractionRecord& rec, const ActionDistribution&) {
  off_policy_update(policy_, rec, cfg_.reduction, lossreg_ ? &*lossreg_ : nullptr,
                    cfg_.dr_order);
}

// ---------------------------------------------------------------------------
// Bag

Bag::Bag(std::size_t num_actions, const ExplorerConfig& cfg, bool shared_weights)
    : Explorer(num_actions, cfg, shared_weights),
      poisson_(Rng::derive(cfg.seed, "poisson")) {
  policies_.reserve(cfg_.size);
  for (std::size_t i = 0; i < cfg_.size; ++i) policies_.push_back(make_policy());
  if (cfg_.reduction != Reduction::IWR) {
    estimator_.emplace(cfg_.reduction, num_actions, regressor_options(), cfg_.dr_order);
  }
}

ActionDistribution Bag::explore(const Example& x) {
  ActionDistribution d{std::vector<double>(num_actions_, 0.0)};
  const double mass = 1.0 / static_cast<double>(policies_.size());
  for (const auto& pol : policies_) add_votes(d.p, greedy_ties(pol.regressors, x), mass);
  return d;
}

void Bag::do_learn(const InteractionRecord& rec, const ActionDistribution&) {
  std::vector<double> est;
  if (estimator_) est = estimator_->estimate(rec);
  for (std::size_t i = 0; i < policies_.size(); ++i) {
    const unsigned tau = (i == 0 && greedy_head()) ? 1u : poisson_.poisson(1.0);
    for (unsigned k = 0; k < tau; ++k) {
      if (estimator_) {
        csc_update(policies_[i], rec.context, est);
      } else {
        iwr_update(policies_[i], rec);
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Cover

Cover::Cover(std::size_t num_actions, const ExplorerConfig& cfg, bool shared_weights)
    : Explorer(num_actions, cfg, shared_weights),
      estimator_(cfg.reduction, num_actions,
                 {cfg.learning_rate, shared_weights, cfg.baseline}, cfg.dr_order) {
  policies_.reserve(cfg_.size);
  for (std::size_t i = 0; i < cfg_.size; ++i) policies_.push_back(make_policy());
}

double Cover::epsilon_t(std::size_t num_actions, std::size_t t) {
  const double k = static_cast<double>(num_actions);
  return std::min(1.0 / k, 1.0 / std::sqrt(k * static_cast<double>(t)));
}

double Cover::diversity_cost(double lhat, double q, double eps, double psi) {
  return lhat - psi * eps / (eps + (1.0 - eps) * q);
}

std::vector<double> Cover::vote_distribution(const Example& x, std::size_t count) const {
  std::vector<double> p(num_actions_, 0.0);
  const double mass = 1.0 / static_cast<double>(count);
  for (std::size_t i = 0; i < count; ++i) add_votes(p, greedy_ties(policies_[i].regressors, x), mass);
  return p;
}

ActionDistribution Cover::explore(const Example& x) {
  ActionDistribution d{vote_distribution(x, policies_.size())};
  if (uniform_mixing()) {
    const double eps = epsilon_t(num_actions_, round());
    const double floor = eps / static_cast<double>(num_actions_);
    for (double& v : d.p) v = floor + (1.0 - eps) * v;
  }
  return d;
}

void Cover::do_learn(const InteractionRecord& rec, const ActionDistribution&) {
  const Example& x = rec.context;
  const auto lhat = estimator_.estimate(rec);
  csc_update(policies_[0], x, lhat);

  const double eps = epsilon_t(num_actions_, round());
  // Vote counts of the already-updated policies 1..i-1.
  std::vector<double> votes(num_actions_, 0.0);
  add_votes(votes, greedy_ties(policies_[0].regressors, x), 1.0);
  std::vector<double> cost(num_actions_);
  for (std::size_t i = 1; i < policies_.size(); ++i) {
    const double count = static_cast<double>(i);
    for (Action a = 0; a < num_actions_; ++a) {
      cost[a] = diversity_cost(lhat[a], votes[a] / count, eps, cfg_.psi);
    }
    csc_update(policies_[i], x, cost);
    add_votes(votes, greedy_ties(policies_[i].regressors, x), 1.0);
  }
}

// ---------------------------------------------------------------------------
// RegCB

RegCB::RegCB(std::size_t num_actions, const ExplorerConfig& cfg, bool shared_weights)
    : Explorer(num_actions, cfg, shared_weights), f_(num_actions, regressor_options()) {}

double RegCB::threshold(double c0, std::size_t num_actions, std::size_t t) {
  const double tt = static_cast<double>(t);
  return c0 * std::log(static_cast<double>(num_actions) * tt) / tt;
}

double RegCB::search_weight(const UpdatePath& path, double count_ratio, double delta) {
  const double y = path.prediction;
  auto excess = [&](double w) {
    const double d = path.at(w) - y;
    return count_ratio * d * d;
  };
  if (count_ratio == 0.0 || path.rate == 0.0 || excess(kMaxWeight) <= delta) return kMaxWeight;

  double lo = 0.0;
  double hi = 1.0;
  while (excess(hi) <= delta) {
    lo = hi;
    hi *= 2.0;
  }
  for (int i = 0; i < 50 && hi - lo > 1e-6 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (excess(mid) <= delta) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo;
}

Interval RegCB::bounds(const Example& x, Action a) const {
  const double cmin = cfg_.encoding.min_loss();
  const double cmax = cfg_.encoding.max_loss();
  const std::size_t t = round();
  const double delta = threshold(cfg_.c0, num_actions_, t);
  const double ratio = static_cast<double>(f_.update_count(a)) / static_cast<double>(t);

  const UpdatePath down = f_.path(x, a, cmin - 1.0);
  const UpdatePath up = f_.path(x, a, cmax + 1.0);
  if (!std::isfinite(down.prediction)) throw std::runtime_error("non-finite prediction");
  const double lower = down.at(search_weight(down, ratio, delta));
  const double upper = up.at(search_weight(up, ratio, delta));
  return {std::clamp(lower, cmin, cmax), std::clamp(upper, cmin, cmax)};
}

ActionDistribution RegCB::optimistic(const std::vector<Interval>& bounds) {
  std::vector<double> lower(bounds.size());
  for (std::size_t a = 0; a < bounds.size(); ++a) lower[a] = bounds[a].lower;
  return ActionDistribution::uniform_over(bounds.size(), argmin_set(lower));
}

ActionDistribution RegCB::elimination(const std::vector<Interval>& bounds) {
  double min_upper = kInf;
  for (const auto& b : bounds) min_upper = std::min(min_upper, b.upper);
  std::vector<Action> support;
  for (Action a = 0; a < bounds.size(); ++a) {
    if (bounds[a].lower <= min_upper) support.push_back(a);
  }
  if (support.empty()) throw std::logic_error("regcb-elim: empty candidate set");
  return ActionDistribution::uniform_over(bounds.size(), support);
}

ActionDistribution RegCB::explore(const Example& x) {
  std::vector<Interval> b(num_actions_);
  for (Action a = 0; a < num_actions_; ++a) b[a] = bounds(x, a);
  return cfg_.algorithm == Algorithm::RegCBOpt ? optimistic(b) : elimination(b);
}

void RegCB::do_learn(const InteractionRecord& rec, const ActionDistribution&) {
  f_.update(rec.context, rec.action, rec.loss, 1.0);
}

// ---------------------------------------------------------------------------
// Active epsilon-greedy

ActiveEpsilonGreedy::ActiveEpsilonGreedy(std::size_t num_actions, const ExplorerConfig& cfg,
                                         bool shared_weights)
    : Explorer(num_actions, cfg, shared_weights), policy_(make_policy()) {
  if (cfg_.reduction != Reduction::IWR) {
    estimator_.emplace(cfg_.reduction, num_actions, regressor_options(), cfg_.dr_order);
  }
}

double ActiveEpsilonGreedy::threshold(double c0, std::size_t num_actions, double epsilon,
                                      std::size_t t) {
  const double tt = static_cast<double>(t);
  const double r = c0 * static_cast<double>(num_actions) * std::log(tt) / (epsilon * tt);
  return std::sqrt(r) + r;
}

double ActiveEpsilonGreedy::csc_crossing(const std::vector<double>& y,
                                         const std::vector<double>& s, Action candidate) {
  double tau = 0.0;
  for (Action a = 0; a < y.size(); ++a) {
    if (a == candidate) continue;
    const double num = y[candidate] - y[a];
    const double den = s[candidate] + s[a];
    double w;
    if (den == 0.0) {
      w = num <= 0.0 ? 0.0 : kInf;
    } else {
      w = num / den;
    }
    tau = std::max(tau, w);
  }
  return tau;
}

double ActiveEpsilonGreedy::iwr_crossing(const std::vector<double>& y, double s_candidate,
                                         Action candidate) {
  const double best = *std::min_element(y.begin(), y.end());
  const double num = y[candidate] - best;
  if (num <= 0.0) return 0.0;
  if (s_candidate == 0.0) return kInf;
  return num / s_candidate;
}

double ActiveEpsilonGreedy::loss_diff(const Example& x, Action candidate) const {
  const RegressorSet& f = policy_.regressors;
  const double cmin = cfg_.encoding.min_loss();
  const double cmax = cfg_.encoding.max_loss();
  auto y = checked_predictions(f, x);
  double tau;
  if (cfg_.reduction == Reduction::IWR) {
    // IWR targets are observed losses, so predictions are clipped to the loss range;
    // otherwise an action at c_min could never cross one predicted below it.
    for (double& v : y) v = std::clamp(v, cmin, cmax);
    tau = iwr_crossing(y, f.sensitivity(x, candidate, cmin), candidate);
  } else {
    std::vector<double> s(num_actions_);
    for (Action a = 0; a < num_actions_; ++a) {
      s[a] = f.sensitivity(x, a, a == candidate ? cmin : cmax);
    }
    tau = csc_crossing(y, s, candidate);
  }
  return std::max(0.0, tau) / static_cast<double>(round());
}

std::vector<Action> ActiveEpsilonGreedy::admissible(const Example& x) const {
  const double delta = threshold(cfg_.c0, num_actions_, cfg_.epsilon, round());
  std::vector<Action> out;
  for (Action a = 0; a < num_actions_; ++a) {
    if (loss_diff(x, a) <= delta) out.push_back(a);
  }
  return out;
}

ActionDistribution ActiveEpsilonGreedy::explore(const Example& x) {
  const auto ties = greedy_ties(policy_.regressors, x);
  const auto allowed = admissible(x);
  const double floor = cfg_.epsilon / static_cast<double>(num_actions_);
  ActionDistribution d{std::vector<double>(num_actions_, 0.0)};
  for (Action a : allowed) d.p[a] = floor;
  add_votes(d.p, ties, 1.0 - floor * static_cast<double>(allowed.size()));
  return d;
}

void ActiveEpsilonGreedy::do_learn(const InteractionRecord& rec, const ActionDistribution& dist) {
  if (!estimator_) {
    iwr_update(policy_, rec);
    return;
  }
  last_costs_ = estimator_->estimate(rec);
  const double cmax = cfg_.encoding.max_loss();
  for (Action a = 0; a < num_actions_; ++a) {
    if (!(dist[a] > 0.0)) last_costs_[a] = cmax;
  }
  csc_update(policy_, rec.context, last_costs_);
}

// ---------------------------------------------------------------------------

std::unique_ptr<Explorer> make_explorer(const ExplorerConfig& cfg, std::size_t num_actions,
                                        bool shared_weights) {
  switch (cfg.algorithm) {
    case Algorithm::Greedy:
    case Algorithm::EpsilonGreedy:
      return std::make_unique<EpsilonGreedy>(num_actions, cfg, shared_weights);
    case Algorithm::Active:
      return std::make_unique<ActiveEpsilonGreedy>(num_actions, cfg, shared_weights);
    case Algorithm::Bag:
    case Algorithm::BagGreedy:
      return std::make_unique<Bag>(num_actions, cfg, shared_weights);
    case Algorithm::Cover:
    case Algorithm::CoverNU:
      return std::make_unique<Cover>(num_actions, cfg, shared_weights);
    case Algorithm::RegCBOpt:
    case Algorithm::RegCBElim:
      return std::make_unique<RegCB>(num_actions, cfg, shared_weights);
  }
  throw std::invalid_argument("unknown algorithm");
}

Trace run(const Dataset& ds, const ExplorerConfig& cfg) {
  cfg.validate();
  Trace trace;
  trace.num_actions = ds.num_actions;
  if (ds.size() == 0) return trace;

  const std::size_t k = ds.num_actions;
  auto explorer = make_explorer(cfg, k, ds.kind == DatasetKind::ActionFeatures);
  Rng sampling = Rng::derive(cfg.seed, "sampling");
  trace.rounds.reserve(ds.size());

  for (std::size_t t = 0; t < ds.size(); ++t) {
    const Example& x = ds.examples[t];
    ActionDistribution dist = k == 1 ? ActionDistribution{{1.0}} : explorer->explore(x);
    dist.validate();
    const Action a = dist.sample(sampling);
    const RoundFeedback fb = bandit_round(ds, t, a, cfg.encoding);
    explorer->learn(InteractionRecord{x, a, fb.observed_loss, dist[a]}, dist);
    trace.rounds.push_back({t + 1, a, dist[a], fb.observed_loss, fb.true_cost, std::move(dist.p)});
  }
  return trace;
}

}  // namespace bakery
