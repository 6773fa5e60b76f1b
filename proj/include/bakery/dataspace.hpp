#pragma once

// Supervised datasets and their simulation as contextual bandit rounds.
//
// Actions are 0-based in every in-process API and 1-based in text input,
// error messages and JSON output.

#include <cstddef>
#include <cstdint>
#include <istream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace bakery {

using Action = std::size_t;

struct Feature {
  std::uint32_t index = 0;
  double value = 1.0;

  friend bool operator==(const Feature&, const Feature&) = default;
};

using FeatureVector = std::vector<Feature>;

struct MulticlassLabel {
  Action label = 0;
  friend bool operator==(const MulticlassLabel&, const MulticlassLabel&) = default;
};

struct MultilabelLabel {
  std::vector<Action> labels;  // sorted, unique, non-empty
  friend bool operator==(const MultilabelLabel&, const MultilabelLabel&) = default;
};

struct CostSensitiveLabel {
  std::vector<double> costs;  // one per action, each in [0, 1]
  friend bool operator==(const CostSensitiveLabel&, const CostSensitiveLabel&) = default;
};

using LabelSpec = std::variant<MulticlassLabel, MultilabelLabel, CostSensitiveLabel>;

struct Example {
  FeatureVector shared;
  // Non-empty only for action-dependent-feature datasets; one block per action.
  std::vector<FeatureVector> action_features;
  LabelSpec label;

  bool has_action_features() const { return !action_features.empty(); }
  friend bool operator==(const Example&, const Example&) = default;
};

enum class DatasetKind { Multiclass, Multilabel, CostSensitive, ActionFeatures };

std::string_view to_string(DatasetKind kind);

struct Dataset {
  std::string name;
  std::vector<Example> examples;
  std::size_t num_actions = 0;
  DatasetKind kind = DatasetKind::Multiclass;

  std::size_t size() const { return examples.size(); }
  // Distinct feature indices across the dataset.
  std::size_t num_features() const;
  // True when every cost vector is 0/1 valued (multiclass, multilabel).
  bool binary_costs() const;
};

// Raised by parse_dataset; carries the 1-based line number of the offending line.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& message);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

enum class FormatHint { Auto, Multiclass, Multilabel, CostSensitive, ActionFeatures };

// Line-oriented text format:
//   multiclass      "<y> | <idx>:<val> ..."
//   multilabel      "<y1>,<y2>,... | ..."
//   cost-sensitive  "<a1>:<c1> <a2>:<c2> ... | ..."
//   ADF block       "shared | ..." followed by one "<optional cost> | ..." line
//                   per action; blocks are separated by blank lines.
// An optional first line "K:<n>" fixes the action count; otherwise it is the
// largest action index seen. ":<val>" may be omitted and defaults to 1.
// Lines starting with '#' are comments.
Dataset parse_dataset(std::istream& in, FormatHint hint = FormatHint::Auto,
                      std::string name = {});
Dataset parse_dataset(std::string_view text, FormatHint hint = FormatHint::Auto,
                      std::string name = {});
Dataset load_dataset(const std::string& path, FormatHint hint = FormatHint::Auto);

// Additive loss offset: the learner sees c + cost, so losses lie in [c, 1 + c].
struct Encoding {
  double offset = 0.0;

  double min_loss() const { return offset; }
  double max_loss() const { return offset + 1.0; }
  // "0/1", "-1/0", "9/10"; accepts any "<c>/<c+1>" pair or a bare offset.
  static Encoding parse(std::string_view text);
  std::string name() const;

  friend bool operator==(const Encoding&, const Encoding&) = default;
};

// c(a) = 1{a != y} (multiclass), 1{a not in Y} (multilabel), passthrough (cost-sensitive).
std::vector<double> cost_vector(const LabelSpec& label, std::size_t num_actions);
std::vector<double> encode_loss(std::span<const double> costs, Encoding enc);

// Fisher-Yates permutation driven by the "shuffle" sub-stream of `seed`.
Dataset shuffle(const Dataset& ds, std::uint64_t seed);

struct RoundFeedback {
  double observed_loss;  // learner side, encoded
  double true_cost;      // evaluator side, in [0, 1]
};

// Reveals only the chosen action's loss. Throws std::out_of_range on a bad
// round index or action.
RoundFeedback bandit_round(const Dataset& ds, std::size_t t, Action a, Encoding enc);

// Synthetic multiclass data with labels y = argmax_a <w_a, x> for random
// Gaussian w_a and x in R^d; feature 0 is a constant 1 (bias), features
// 1..d carry x. Linearly separable by construction.
Dataset make_linear_dataset(std::size_t dim, std::size_t num_actions, std::size_t n,
                            std::uint64_t seed);

void write_dataset(std::ostream& out, const Dataset& ds);

}  // namespace bakery
