#include "bakery/oracles.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace bakery {

std::string_view to_string(Reduction r) {
  switch (r) {
    case Reduction::IPS: return "ips";
    case Reduction::DR: return "dr";
    case Reduction::IWR: return "iwr";
  }
  return "?";
}

Reduction parse_reduction(std::string_view text) {
  if (text == "ips") return Reduction::IPS;
  if (text == "dr") return Reduction::DR;
  if (text == "iwr") return Reduction::IWR;
  throw std::invalid_argument("unknown reduction '" + std::string(text) + "'");
}

void InteractionRecord::validate() const {
  if (!(probability > 0.0) || probability > 1.0 || !std::isfinite(probability)) {
    throw std::invalid_argument("interaction record: probability must lie in (0, 1], got " +
                                std::to_string(probability));
  }
  if (!std::isfinite(loss)) throw std::invalid_argument("interaction record: non-finite loss");
}

std::vector<Action> argmin_set(const std::vector<double>& values) {
  std::vector<Action> out;
  double best = 0.0;
  for (Action a = 0; a < values.size(); ++a) {
    if (out.empty() || values[a] < best) {
      best = values[a];
      out.assign(1, a);
    } else if (values[a] == best) {
      out.push_back(a);
    }
  }
  return out;
}

std::vector<Action> Policy::greedy_set(const Example& x) const {
  return argmin_set(regressors.predict_all(x));
}

Selection Policy::select(const Example& x, Rng& rng) const {
  const auto ties = greedy_set(x);
  const Action a = ties.size() == 1 ? ties[0] : ties[rng.uniform_index(ties.size())];
  return {a, ties.size()};
}

std::vector<double> ips_estimate(const InteractionRecord& rec, std::size_t num_actions) {
  rec.validate();
  if (rec.action >= num_actions) throw std::out_of_range("ips_estimate: action out of range");
  std::vector<double> out(num_actions, 0.0);
  out[rec.action] = rec.loss / rec.probability;
  return out;
}

std::vector<double> dr_estimate(const InteractionRecord& rec, const RegressorSet& lossreg) {
  rec.validate();
  auto out = lossreg.predict_all(rec.context);
  if (rec.action >= out.size()) throw std::out_of_range("dr_estimate: action out of range");
  out[rec.action] += (rec.loss - out[rec.action]) / rec.probability;
  return out;
}

void lossreg_update(RegressorSet& lossreg, const InteractionRecord& rec) {
  lossreg.update(rec.context, rec.action, rec.loss, 1.0);
}

void csc_update(Policy& pol, const Example& x, const std::vector<double>& costs) {
  if (costs.size() != pol.regressors.num_actions()) {
    throw std::invalid_argument("csc_update: expected " +
                                std::to_string(pol.regressors.num_actions()) + " costs, got " +
                                std::to_string(costs.size()));
  }
  for (Action a = 0; a < costs.size(); ++a) pol.regressors.update(x, a, costs[a], 1.0);
  ++pol.oracle_calls;
}

void iwr_update(Policy& pol, const InteractionRecord& rec) {
  rec.validate();
  pol.regressors.update(rec.context, rec.action, rec.loss, 1.0 / rec.probability);
  ++pol.oracle_calls;
}

LossEstimator::LossEstimator(Reduction reduction, std::size_t num_actions,
                             RegressorOptions options, DrOrder order)
    : reduction_(reduction), num_actions_(num_actions), order_(order) {
  if (reduction == Reduction::IWR) {
    throw std::invalid_argument("loss estimator: iwr is not a loss estimate");
  }
  if (reduction == Reduction::DR) lossreg_.emplace(num_actions, options);
}

std::vector<double> LossEstimator::estimate(const InteractionRecord& rec) {
  if (reduction_ == Reduction::IPS) return ips_estimate(rec, num_actions_);
  if (order_ == DrOrder::UpdateThenEstimate) {
    rec.validate();
    lossreg_update(*lossreg_, rec);
    return dr_estimate(rec, *lossreg_);
  }
  auto out = dr_estimate(rec, *lossreg_);
  lossreg_update(*lossreg_, rec);
  return out;
}

void off_policy_update(Policy& pol, const InteractionRecord& rec, Reduction reduction,
                       RegressorSet* lossreg, DrOrder order) {
  switch (reduction) {
    case Reduction::IPS:
      csc_update(pol, rec.context, ips_estimate(rec, pol.regressors.num_actions()));
      return;
    case Reduction::DR: {
      if (!lossreg) throw std::invalid_argument("dr reduction requires a loss regressor");
      rec.validate();
      std::vector<double> est;
      if (order == DrOrder::UpdateThenEstimate) {
        lossreg_update(*lossreg, rec);
        est = dr_estimate(rec, *lossreg);
      } else {
        est = dr_estimate(rec, *lossreg);
        lossreg_update(*lossreg, rec);
      }
      csc_update(pol, rec.context, est);
      return;
    }
    case Reduction::IWR:
      iwr_update(pol, rec);
      return;
  }
}

}  // namespace bakery
