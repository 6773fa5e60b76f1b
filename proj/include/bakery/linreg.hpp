#pragma once

// Online linear regression with running-max feature normalization, diagonal
// gradient-square adaptivity and importance-weight-aware closed-form updates
// for the squared loss L = 1/2 (y - target)^2.
//
// Update path. For an example x, action a and target, let x~_i = x_i / s_i be
// the normalized features (after scale maintenance), g = y - target and
//
//   d_i = eta * x~_i / sqrt(G_i + x~_i^2 g^2),    h = sum_i d_i x~_i.
//
// An update with importance weight w moves the prediction along
//
//   y'(w) = target + (y - target) * exp(-w h),
//
// distributing the displacement over weights in proportion to d_i, and adds
// x~_i^2 (g^2 - g'^2) to G_i where g' = y'(w) - target. The quantity
// G_i + x~_i^2 g^2 is therefore conserved along the path, which makes two
// consecutive updates with weights w1 and w2 identical to one update with
// w1 + w2, and bounds each accumulator increment by the initial gradient
// square regardless of w.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <unordered_map>
#include <vector>

#include "bakery/dataspace.hpp"

namespace bakery {

// Prediction and per-unit-weight rate of a (possibly virtual) update.
struct UpdatePath {
  double prediction = 0.0;
  double target = 0.0;
  double rate = 0.0;  // h

  // y'(w); equals `prediction` at w = 0 and tends to `target` as w grows.
  double at(double weight) const;
  // |dy'/dw| at w = 0.
  double sensitivity() const;
};

struct RegressorOptions {
  double learning_rate = 0.5;
  // One weight vector shared by all actions, fed action-dependent features.
  bool shared_weights = false;
  // Action-independent additive term trained by a separate scalar update.
  bool baseline = false;

  friend bool operator==(const RegressorOptions&, const RegressorOptions&) = default;
};

class RegressorSet {
 public:
  RegressorSet(std::size_t num_actions, RegressorOptions options);

  std::size_t num_actions() const { return counts_.size(); }
  const RegressorOptions& options() const { return options_; }

  double predict(const Example& x, Action a) const;
  std::vector<double> predict_all(const Example& x) const;

  // Real update. A zero weight leaves the state untouched. With the baseline
  // enabled the baseline is stepped first and the action weights then
  // regress on the residual.
  void update(const Example& x, Action a, double target, double weight = 1.0);

  // The path an update toward `target` would follow, without mutating state.
  UpdatePath path(const Example& x, Action a, double target) const;
  double sensitivity(const Example& x, Action a, double target) const {
    return path(x, a, target).sensitivity();
  }

  // Scalar step of the baseline toward `loss`, with step size scaled by the
  // largest loss magnitude seen so far. No-op when the baseline is disabled.
  void baseline_update(double loss, double weight = 1.0);

  double baseline() const { return baseline_.weight; }
  double max_loss_magnitude() const { return max_loss_; }
  std::size_t update_count(Action a) const { return counts_.at(a); }
  std::size_t total_updates() const;

  // "weight <action> <index> <value>" lines, 1-based actions, sorted.
  void dump(std::ostream& out) const;

  friend bool operator==(const RegressorSet&, const RegressorSet&) = default;

 private:
  struct Cell {
    double weight = 0.0;
    double grad_sq = 0.0;
    double scale = 0.0;  // 0 until the feature is first seen
    friend bool operator==(const Cell&, const Cell&) = default;
  };
  using Slot = std::unordered_map<std::uint32_t, Cell>;

  // Normalized coordinates of one active feature after (virtual) scale maintenance.
  struct Term {
    std::uint32_t index;
    double x;        // normalized value
    double scale;    // scale after maintenance
    double weight;   // rescaled weight
    double grad_sq;  // rescaled accumulator
  };

  std::size_t slot_of(Action a) const { return options_.shared_weights ? 0 : a; }
  void check_action(Action a) const;
  std::vector<Term> terms(const Example& x, Action a) const;
  static double rate(const std::vector<Term>& terms, double residual, double eta,
                     std::vector<double>* coefficients);

  RegressorOptions options_;
  std::vector<Slot> slots_;
  std::vector<std::size_t> counts_;
  Cell baseline_;
  double max_loss_ = 0.0;
};

}  // namespace bakery
