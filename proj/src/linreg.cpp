#include "bakery/linreg.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string>

namespace bakery {

double UpdatePath::at(double weight) const {
  if (rate == 0.0 || weight == 0.0) return prediction;
  return target + (prediction - target) * std::exp(-weight * rate);
}

double UpdatePath::sensitivity() const { return rate * std::abs(prediction - target); }

RegressorSet::RegressorSet(std::size_t num_actions, RegressorOptions options)
    : options_(options),
      slots_(options.shared_weights ? 1 : num_actions),
      counts_(num_actions, 0) {
  if (!(options_.learning_rate > 0.0) || !std::isfinite(options_.learning_rate)) {
    throw std::invalid_argument("learning rate must be positive and finite");
  }
}

void RegressorSet::check_action(Action a) const {
  if (a >= counts_.size()) {
    throw std::out_of_range("action " + std::to_string(a + 1) + " outside 1.." +
                            std::to_string(counts_.size()));
  }
}

namespace {

template <typename Fn>
void for_each_feature(const Example& x, Action a, bool shared_weights, Fn&& fn) {
  for (const auto& f : x.shared) fn(f);
  if (shared_weights && a < x.action_features.size()) {
    for (const auto& f : x.action_features[a]) fn(f);
  }
}

}  // namespace

double RegressorSet::predict(const Example& x, Action a) const {
  check_action(a);
  // Evaluated under the scales this example would leave behind, so it agrees with path().
  double y = baseline_.weight;
  for (const auto& t : terms(x, a)) y += t.weight * t.x;
  return y;
}

std::vector<double> RegressorSet::predict_all(const Example& x) const {
  std::vector<double> out(num_actions());
  for (Action a = 0; a < out.size(); ++a) out[a] = predict(x, a);
  return out;
}

std::vector<RegressorSet::Term> RegressorSet::terms(const Example& x, Action a) const {
  std::vector<std::pair<std::uint32_t, double>> raw;
  for_each_feature(x, a, options_.shared_weights,
                   [&](const Feature& f) { raw.emplace_back(f.index, f.value); });
  std::sort(raw.begin(), raw.end(),
            [](const auto& l, const auto& r) { return l.first < r.first; });

  const Slot& slot = slots_[slot_of(a)];
  std::vector<Term> out;
  out.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size();) {
    const std::uint32_t index = raw[i].first;
    double value = 0.0;
    for (; i < raw.size() && raw[i].first == index; ++i) value += raw[i].second;
    if (value == 0.0) continue;

    Cell cell;
    if (auto it = slot.find(index); it != slot.end()) cell = it->second;
    const double old_scale = cell.scale;
    const double new_scale = std::max(old_scale, std::abs(value));
    if (old_scale > 0.0 && new_scale > old_scale) {
      // theta <- theta * s_old / s_new; the accumulator follows the normalized gradient.
      const double ratio = old_scale / new_scale;
      cell.weight *= ratio;
      cell.grad_sq *= ratio * ratio;
    }
    out.push_back({index, value / new_scale, new_scale, cell.weight, cell.grad_sq});
  }
  return out;
}

double RegressorSet::rate(const std::vector<Term>& terms, double residual, double eta,
                          std::vector<double>* coefficients) {
  double h = 0.0;
  if (coefficients) coefficients->assign(terms.size(), 0.0);
  if (residual == 0.0) return 0.0;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    const Term& t = terms[i];
    const double denom = std::sqrt(t.grad_sq + t.x * t.x * residual * residual);
    if (denom == 0.0) continue;
    const double d = eta * t.x / denom;
    if (coefficients) (*coefficients)[i] = d;
    h += d * t.x;
  }
  return h;
}

UpdatePath RegressorSet::path(const Example& x, Action a, double target) const {
  check_action(a);
  const auto ts = terms(x, a);
  double y = baseline_.weight;
  for (const auto& t : ts) y += t.weight * t.x;
  return {y, target, rate(ts, y - target, options_.learning_rate, nullptr)};
}

void RegressorSet::update(const Example& x, Action a, double target, double weight) {
  check_action(a);
  if (!std::isfinite(target)) throw std::invalid_argument("update: non-finite target");
  if (!(weight >= 0.0) || !std::isfinite(weight)) {
    throw std::invalid_argument("update: importance weight must be finite and >= 0");
  }
  if (weight == 0.0) return;

  if (options_.baseline) baseline_update(target, weight);

  const auto ts = terms(x, a);
  double y = baseline_.weight;
  for (const auto& t : ts) y += t.weight * t.x;
  const double residual = y - target;

  std::vector<double> coeff;
  const double h = rate(ts, residual, options_.learning_rate, &coeff);
  // Fraction of the remaining residual removed, and of its square.
  const double moved = h > 0.0 ? -std::expm1(-weight * h) : 0.0;
  const double moved_sq = h > 0.0 ? -std::expm1(-2.0 * weight * h) : 0.0;
  const double displacement = -residual * moved;

  Slot& slot = slots_[slot_of(a)];
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const Term& t = ts[i];
    Cell& cell = slot[t.index];
    cell.scale = t.scale;
    cell.weight = t.weight;
    cell.grad_sq = t.grad_sq;
    if (h > 0.0) {
      cell.weight += coeff[i] * displacement / h;
      cell.grad_sq += t.x * t.x * residual * residual * moved_sq;
    }
  }
  ++counts_[a];
}

void RegressorSet::baseline_update(double loss, double weight) {
  if (!options_.baseline || weight == 0.0) return;
  max_loss_ = std::max(max_loss_, std::abs(loss));
  const double residual = baseline_.weight - loss;
  if (max_loss_ == 0.0 || residual == 0.0) return;
  const double h =
      options_.learning_rate * max_loss_ / std::sqrt(baseline_.grad_sq + residual * residual);
  baseline_.weight = loss + residual * std::exp(-weight * h);
  baseline_.grad_sq += residual * residual * -std::expm1(-2.0 * weight * h);
}

std::size_t RegressorSet::total_updates() const {
  std::size_t total = 0;
  for (auto c : counts_) total += c;
  return total;
}

void RegressorSet::dump(std::ostream& out) const {
  const auto old_precision = out.precision(17);
  for (std::size_t s = 0; s < slots_.size(); ++s) {
    std::vector<std::pair<std::uint32_t, double>> cells;
    for (const auto& [index, cell] : slots_[s]) cells.emplace_back(index, cell.weight);
    std::sort(cells.begin(), cells.end());
    for (const auto& [index, w] : cells) {
      out << "weight " << s + 1 << ' ' << index << ' ' << w << '\n';
    }
  }
  if (options_.baseline) out << "weight 0 baseline " << baseline_.weight << '\n';
  out.precision(old_precision);
}

}  // namespace bakery
