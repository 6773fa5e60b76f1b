#include "bakery/dataspace.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <sstream>
#include <unordered_set>

#include "bakery/rng.hpp"

namespace bakery {

std::string_view to_string(DatasetKind kind) {
  switch (kind) {
    case DatasetKind::Multiclass: return "multiclass";
    case DatasetKind::Multilabel: return "multilabel";
    case DatasetKind::CostSensitive: return "cost-sensitive";
    case DatasetKind::ActionFeatures: return "adf";
  }
  return "unknown";
}

std::size_t Dataset::num_features() const {
  std::unordered_set<std::uint32_t> seen;
  for (const auto& ex : examples) {
    for (const auto& f : ex.shared) seen.insert(f.index);
    for (const auto& block : ex.action_features) {
      for (const auto& f : block) seen.insert(f.index);
    }
  }
  return seen.size();
}

bool Dataset::binary_costs() const {
  if (kind == DatasetKind::Multiclass || kind == DatasetKind::Multilabel) return true;
  for (const auto& ex : examples) {
    for (double c : cost_vector(ex.label, num_actions)) {
      if (c != 0.0 && c != 1.0) return false;
    }
  }
  return true;
}

ParseError::ParseError(std::size_t line, const std::string& message)
    : std::runtime_error("line " + std::to_string(line) + ": " + message), line_(line) {}

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t' && s[j] != '\r') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

template <typename T>
std::optional<T> parse_number(std::string_view s) {
  T value{};
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, value);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return value;
}

std::optional<double> parse_real(std::string_view s) {
  // from_chars rejects a leading '+'.
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  return parse_number<double>(s);
}

struct Line {
  std::size_t number;
  std::string_view text;
};

Action parse_action(std::string_view token, const Line& line) {
  auto v = parse_number<std::uint64_t>(token);
  if (!v || *v == 0) {
    throw ParseError(line.number, "invalid action index '" + std::string(token) +
                                      "' (actions are 1-based)");
  }
  return static_cast<Action>(*v - 1);
}

FeatureVector parse_features(std::string_view text, const Line& line) {
  FeatureVector out;
  for (auto token : split_ws(text)) {
    Feature f;
    const auto colon = token.find(':');
    const auto idx_part = token.substr(0, colon);
    auto idx = parse_number<std::uint32_t>(idx_part);
    if (!idx) {
      throw ParseError(line.number, "invalid feature index '" + std::string(idx_part) + "'");
    }
    f.index = *idx;
    if (colon != std::string_view::npos) {
      auto val = parse_real(token.substr(colon + 1));
      if (!val) {
        throw ParseError(line.number, "invalid feature value in '" + std::string(token) + "'");
      }
      if (!std::isfinite(*val)) {
        throw ParseError(line.number, "non-finite feature value in '" + std::string(token) + "'");
      }
      f.value = *val;
    }
    out.push_back(f);
  }
  return out;
}

double parse_cost(std::string_view token, const Line& line) {
  auto c = parse_real(token);
  if (!c || !std::isfinite(*c) || *c < 0.0 || *c > 1.0) {
    throw ParseError(line.number, "cost '" + std::string(token) + "' must lie in [0, 1]");
  }
  return *c;
}

struct SplitLine {
  std::string_view head;
  std::string_view features;
};

SplitLine split_bar(const Line& line) {
  const auto bar = line.text.find('|');
  if (bar == std::string_view::npos) {
    throw ParseError(line.number, "missing '|' separator");
  }
  return {trim(line.text.substr(0, bar)), line.text.substr(bar + 1)};
}

enum class LabelForm { Single, Set, Costs };

struct RawLabel {
  LabelForm form;
  std::vector<Action> actions;
  std::vector<std::pair<Action, double>> costs;
};

RawLabel parse_label(std::string_view head, const Line& line) {
  if (head.empty()) throw ParseError(line.number, "missing label");
  RawLabel out;
  if (head.find(':') != std::string_view::npos) {
    out.form = LabelForm::Costs;
    for (auto token : split_ws(head)) {
      const auto colon = token.find(':');
      if (colon == std::string_view::npos) {
        throw ParseError(line.number, "expected '<action>:<cost>' but got '" +
                                          std::string(token) + "'");
      }
      out.costs.emplace_back(parse_action(token.substr(0, colon), line),
                             parse_cost(token.substr(colon + 1), line));
    }
    return out;
  }
  if (head.find(',') != std::string_view::npos) {
    out.form = LabelForm::Set;
    std::size_t start = 0;
    while (start <= head.size()) {
      auto comma = head.find(',', start);
      if (comma == std::string_view::npos) comma = head.size();
      out.actions.push_back(parse_action(trim(head.substr(start, comma - start)), line));
      start = comma + 1;
    }
    return out;
  }
  out.form = LabelForm::Single;
  out.actions.push_back(parse_action(head, line));
  return out;
}

bool is_comment_or_blank(std::string_view text) {
  auto t = trim(text);
  return t.empty() || t.front() == '#';
}

std::optional<std::size_t> parse_header(const Line& line) {
  auto t = trim(line.text);
  if (t.size() < 2 || t[0] != 'K' || t[1] != ':') return std::nullopt;
  auto k = parse_number<std::size_t>(trim(t.substr(2)));
  if (!k || *k == 0) throw ParseError(line.number, "invalid header '" + std::string(t) + "'");
  return k;
}

bool starts_shared(std::string_view text) {
  auto t = trim(text);
  const auto bar = t.find('|');
  return trim(t.substr(0, bar)) == "shared";
}

Dataset parse_adf(const std::vector<Line>& lines, std::optional<std::size_t> declared) {
  Dataset ds;
  ds.kind = DatasetKind::ActionFeatures;
  std::optional<std::size_t> k = declared;

  Example current;
  std::vector<double> costs;
  bool open = false;
  std::size_t block_start = 0;

  auto close_block = [&](std::size_t line_no) {
    if (!open) return;
    const std::size_t n_actions = current.action_features.size();
    if (n_actions == 0) throw ParseError(block_start, "ADF block without action lines");
    if (!k) k = n_actions;
    if (*k != n_actions) {
      throw ParseError(line_no, "inconsistent K across ADF blocks: expected " +
                                    std::to_string(*k) + " actions, got " +
                                    std::to_string(n_actions));
    }
    current.label = CostSensitiveLabel{costs};
    ds.examples.push_back(std::move(current));
    current = Example{};
    costs.clear();
    open = false;
  };

  for (const auto& line : lines) {
    if (trim(line.text).empty()) {
      close_block(line.number);
      continue;
    }
    if (trim(line.text).front() == '#') continue;
    auto [head, feats] = split_bar(line);
    if (head == "shared") {
      close_block(line.number);
      open = true;
      block_start = line.number;
      current.shared = parse_features(feats, line);
      continue;
    }
    if (!open) throw ParseError(line.number, "action line outside an ADF block");
    // An action line without a cost is unlabeled and gets the maximal cost.
    costs.push_back(head.empty() ? 1.0 : parse_cost(head, line));
    current.action_features.push_back(parse_features(feats, line));
  }
  close_block(lines.empty() ? 0 : lines.back().number + 1);
  ds.num_actions = k.value_or(0);
  return ds;
}

}  // namespace

Dataset parse_dataset(std::istream& in, FormatHint hint, std::string name) {
  std::vector<std::string> storage;
  for (std::string s; std::getline(in, s);) storage.push_back(std::move(s));

  std::vector<Line> lines;
  lines.reserve(storage.size());
  for (std::size_t i = 0; i < storage.size(); ++i) lines.push_back({i + 1, storage[i]});

  std::optional<std::size_t> declared;
  auto first = std::find_if(lines.begin(), lines.end(),
                            [](const Line& l) { return !is_comment_or_blank(l.text); });
  if (first != lines.end()) {
    declared = parse_header(*first);
    if (declared) lines.erase(lines.begin(), first + 1);
  }

  const bool adf =
      hint == FormatHint::ActionFeatures ||
      (hint == FormatHint::Auto &&
       std::any_of(lines.begin(), lines.end(), [](const Line& l) {
         return !is_comment_or_blank(l.text) && starts_shared(l.text);
       }));
  if (adf) {
    Dataset ds = parse_adf(lines, declared);
    ds.name = std::move(name);
    return ds;
  }

  std::vector<std::pair<RawLabel, FeatureVector>> rows;
  std::vector<std::size_t> row_lines;
  bool any_set = false, any_costs = false;
  std::size_t max_action = 0;
  for (const auto& line : lines) {
    if (is_comment_or_blank(line.text)) continue;
    auto [head, feats] = split_bar(line);
    if (head == "shared") throw ParseError(line.number, "ADF block in a non-ADF dataset");
    RawLabel label = parse_label(head, line);
    any_set |= label.form == LabelForm::Set;
    any_costs |= label.form == LabelForm::Costs;
    for (Action a : label.actions) max_action = std::max(max_action, a + 1);
    for (const auto& [a, c] : label.costs) max_action = std::max(max_action, a + 1);
    rows.emplace_back(std::move(label), parse_features(feats, line));
    row_lines.push_back(line.number);
  }

  DatasetKind kind = DatasetKind::Multiclass;
  switch (hint) {
    case FormatHint::Multiclass: kind = DatasetKind::Multiclass; break;
    case FormatHint::Multilabel: kind = DatasetKind::Multilabel; break;
    case FormatHint::CostSensitive: kind = DatasetKind::CostSensitive; break;
    default:
      if (any_costs) {
        kind = DatasetKind::CostSensitive;
      } else if (any_set) {
        kind = DatasetKind::Multilabel;
      }
  }

  const std::size_t k = declared.value_or(max_action);
  if (declared && max_action > *declared) {
    throw ParseError(first->number, "header declares K=" + std::to_string(*declared) +
                                        " but action " + std::to_string(max_action) +
                                        " appears");
  }

  Dataset ds;
  ds.name = std::move(name);
  ds.kind = kind;
  ds.num_actions = k;
  ds.examples.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    auto& [raw, feats] = rows[r];
    Example ex;
    ex.shared = std::move(feats);
    switch (kind) {
      case DatasetKind::Multiclass:
        if (raw.form != LabelForm::Single) {
          throw ParseError(row_lines[r], "expected a single multiclass label");
        }
        ex.label = MulticlassLabel{raw.actions.front()};
        break;
      case DatasetKind::Multilabel: {
        if (raw.form == LabelForm::Costs) {
          throw ParseError(row_lines[r], "cost label in a multilabel dataset");
        }
        auto set = raw.actions;
        std::sort(set.begin(), set.end());
        set.erase(std::unique(set.begin(), set.end()), set.end());
        ex.label = MultilabelLabel{std::move(set)};
        break;
      }
      case DatasetKind::CostSensitive: {
        if (raw.form != LabelForm::Costs) {
          throw ParseError(row_lines[r], "expected '<action>:<cost>' pairs");
        }
        // Actions not listed on a line cost 1.
        std::vector<double> costs(k, 1.0);
        for (const auto& [a, c] : raw.costs) costs[a] = c;
        ex.label = CostSensitiveLabel{std::move(costs)};
        break;
      }
      case DatasetKind::ActionFeatures: break;
    }
    ds.examples.push_back(std::move(ex));
  }
  return ds;
}

Dataset parse_dataset(std::string_view text, FormatHint hint, std::string name) {
  std::istringstream in{std::string(text)};
  return parse_dataset(in, hint, std::move(name));
}

Dataset load_dataset(const std::string& path, FormatHint hint) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset '" + path + "'");
  std::string name = path;
  if (auto slash = name.find_last_of('/'); slash != std::string::npos) name.erase(0, slash + 1);
  return parse_dataset(in, hint, std::move(name));
}

Encoding Encoding::parse(std::string_view text) {
  text = trim(text);
  const auto slash = text.find('/');
  auto lo = parse_real(text.substr(0, slash));
  if (!lo || !std::isfinite(*lo)) {
    throw std::invalid_argument("invalid encoding '" + std::string(text) + "'");
  }
  if (slash != std::string_view::npos) {
    auto hi = parse_real(text.substr(slash + 1));
    if (!hi || *hi != *lo + 1.0) {
      throw std::invalid_argument("invalid encoding '" + std::string(text) +
                                  "': expected '<c>/<c+1>'");
    }
  }
  return Encoding{*lo};
}

std::string Encoding::name() const {
  std::ostringstream os;
  os << offset << '/' << offset + 1.0;
  return os.str();
}

std::vector<double> cost_vector(const LabelSpec& label, std::size_t num_actions) {
  return std::visit(
      [num_actions](const auto& l) -> std::vector<double> {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, MulticlassLabel>) {
          std::vector<double> c(num_actions, 1.0);
          if (l.label >= num_actions) throw std::out_of_range("multiclass label out of range");
          c[l.label] = 0.0;
          return c;
        } else if constexpr (std::is_same_v<T, MultilabelLabel>) {
          std::vector<double> c(num_actions, 1.0);
          for (Action a : l.labels) {
            if (a >= num_actions) throw std::out_of_range("multilabel label out of range");
            c[a] = 0.0;
          }
          return c;
        } else {
          if (l.costs.size() != num_actions) {
            throw std::invalid_argument("cost vector length does not match K");
          }
          return l.costs;
        }
      },
      label);
}

std::vector<double> encode_loss(std::span<const double> costs, Encoding enc) {
  std::vector<double> out(costs.begin(), costs.end());
  for (double& c : out) c += enc.offset;
  return out;
}

Dataset shuffle(const Dataset& ds, std::uint64_t seed) {
  Dataset out = ds;
  Rng rng = Rng::derive(seed, "shuffle");
  auto& ex = out.examples;
  for (std::size_t i = ex.size(); i > 1; --i) {
    std::size_t j = rng.uniform_index(i);
    std::swap(ex[i - 1], ex[j]);
  }
  return out;
}

RoundFeedback bandit_round(const Dataset& ds, std::size_t t, Action a, Encoding enc) {
  if (t >= ds.size()) throw std::out_of_range("round index beyond dataset");
  if (a >= ds.num_actions) {
    throw std::out_of_range("action " + std::to_string(a + 1) + " outside 1.." +
                            std::to_string(ds.num_actions));
  }
  const auto costs = cost_vector(ds.examples[t].label, ds.num_actions);
  return {costs[a] + enc.offset, costs[a]};
}

Dataset make_linear_dataset(std::size_t dim, std::size_t num_actions, std::size_t n,
                            std::uint64_t seed) {
  if (num_actions == 0) throw std::invalid_argument("make_linear_dataset: K must be positive");
  Rng rng = Rng::derive(seed, "synthetic");
  std::vector<double> w(num_actions * dim);
  for (double& v : w) v = rng.normal();

  Dataset ds;
  ds.name = "linear-d" + std::to_string(dim) + "-k" + std::to_string(num_actions) + "-s" +
            std::to_string(seed);
  ds.kind = DatasetKind::Multiclass;
  ds.num_actions = num_actions;
  ds.examples.reserve(n);
  std::vector<double> x(dim);
  for (std::size_t t = 0; t < n; ++t) {
    for (double& v : x) v = rng.normal();
    Action best = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    for (Action a = 0; a < num_actions; ++a) {
      double score = 0.0;
      for (std::size_t i = 0; i < dim; ++i) score += w[a * dim + i] * x[i];
      if (score > best_score) {
        best_score = score;
        best = a;
      }
    }
    Example ex;
    ex.shared.push_back({0, 1.0});
    for (std::size_t i = 0; i < dim; ++i) {
      ex.shared.push_back({static_cast<std::uint32_t>(i + 1), x[i]});
    }
    ex.label = MulticlassLabel{best};
    ds.examples.push_back(std::move(ex));
  }
  return ds;
}

namespace {

void write_features(std::ostream& out, const FeatureVector& fv) {
  for (const auto& f : fv) out << ' ' << f.index << ':' << f.value;
}

}  // namespace

void write_dataset(std::ostream& out, const Dataset& ds) {
  const auto old_precision = out.precision(17);
  out << "K:" << ds.num_actions << '\n';
  for (const auto& ex : ds.examples) {
    if (ds.kind == DatasetKind::ActionFeatures) {
      const auto costs = cost_vector(ex.label, ds.num_actions);
      out << "shared |";
      write_features(out, ex.shared);
      out << '\n';
      for (Action a = 0; a < ds.num_actions; ++a) {
        out << costs[a] << " |";
        write_features(out, ex.action_features[a]);
        out << '\n';
      }
      out << '\n';
      continue;
    }
    std::visit(
        [&out](const auto& l) {
          using T = std::decay_t<decltype(l)>;
          if constexpr (std::is_same_v<T, MulticlassLabel>) {
            out << l.label + 1;
          } else if constexpr (std::is_same_v<T, MultilabelLabel>) {
            for (std::size_t i = 0; i < l.labels.size(); ++i) {
              out << (i ? "," : "") << l.labels[i] + 1;
            }
          } else {
            for (std::size_t a = 0; a < l.costs.size(); ++a) {
              out << (a ? " " : "") << a + 1 << ':' << l.costs[a];
            }
          }
        },
        ex.label);
    out << " |";
    write_features(out, ex.shared);
    out << '\n';
  }
  out.precision(old_precision);
}

}  // namespace bakery
