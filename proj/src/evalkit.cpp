#include "bakery/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "bakery/oracles.hpp"

namespace bakery {

double pv_loss(const Trace& trace) {
  if (trace.rounds.empty()) throw std::invalid_argument("pv_loss: empty trace");
  double sum = 0.0;
  for (const auto& r : trace.rounds) sum += r.true_cost;
  return sum / static_cast<double>(trace.rounds.size());
}

double oaa_run(const Dataset& ds, double learning_rate, std::uint64_t seed, bool baseline) {
  if (ds.size() == 0) return 0.0;
  const std::size_t k = ds.num_actions;
  Policy pol(RegressorSet(k, {learning_rate, ds.kind == DatasetKind::ActionFeatures, baseline}));
  Rng tiebreak = Rng::derive(seed, "tiebreak");
  double sum = 0.0;
  for (const auto& x : ds.examples) {
    const auto costs = cost_vector(x.label, k);
    const Selection s = pol.select(x, tiebreak);
    sum += costs[s.action];
    csc_update(pol, x, costs);
  }
  return sum / static_cast<double>(ds.size());
}

Trace replay(const Dataset& ds, const std::vector<Action>& actions, Encoding enc) {
  if (actions.size() > ds.size()) throw std::invalid_argument("replay: more actions than rounds");
  Trace trace;
  trace.num_actions = ds.num_actions;
  for (std::size_t t = 0; t < actions.size(); ++t) {
    const RoundFeedback fb = bandit_round(ds, t, actions[t], enc);
    std::vector<double> p(ds.num_actions, 0.0);
    p[actions[t]] = 1.0;
    trace.rounds.push_back({t + 1, actions[t], 1.0, fb.observed_loss, fb.true_cost, std::move(p)});
  }
  return trace;
}

NormalizedLoss normalized_loss(double pv, double pv_oaa) {
  if (pv_oaa < 1e-6) return {pv - pv_oaa, true};
  return {(pv - pv_oaa) / pv_oaa, false};
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::AWins: return "a";
    case Outcome::BWins: return "b";
    case Outcome::Tie: return "tie";
  }
  return "?";
}

Outcome significance(double pa, double pb, std::size_t na, std::size_t nb) {
  if (na == 0 || nb == 0) throw std::invalid_argument("significance: empty sample");
  const double var = pa * (1.0 - pa) / static_cast<double>(na) +
                     pb * (1.0 - pb) / static_cast<double>(nb);
  const double se = std::sqrt(std::max(0.0, var));
  if (se == 0.0) {
    if (pa == pb) return Outcome::Tie;
    return pa < pb ? Outcome::AWins : Outcome::BWins;
  }
  const double z = (pa - pb) / se;
  if (normal_cdf(z) < 0.05) return Outcome::AWins;
  if (normal_cdf(-z) < 0.05) return Outcome::BWins;
  return Outcome::Tie;
}

bool DatasetFilter::accepts(const DatasetInfo& info) const {
  if (min_actions && info.num_actions < *min_actions) return false;
  if (min_features && info.num_features < *min_features) return false;
  if (min_examples && info.num_examples < *min_examples) return false;
  if (max_pv_oaa && info.pv_oaa > *max_pv_oaa) return false;
  return true;
}

bool DatasetFilter::empty() const {
  return !min_actions && !min_features && !min_examples && !max_pv_oaa;
}

DatasetFilter DatasetFilter::parse(const std::string& text) {
  DatasetFilter f;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("filter: expected key=value, got '" + item + "'");
    const std::string key = item.substr(0, eq);
    const std::string value = item.substr(eq + 1);
    try {
      if (key == "min-actions") {
        f.min_actions = std::stoul(value);
      } else if (key == "min-features") {
        f.min_features = std::stoul(value);
      } else if (key == "min-examples") {
        f.min_examples = std::stoul(value);
      } else if (key == "max-pv-oaa") {
        f.max_pv_oaa = std::stod(value);
      } else {
        throw std::invalid_argument("filter: unknown key '" + key + "'");
      }
    } catch (const std::logic_error& e) {
      if (std::string(e.what()).rfind("filter:", 0) == 0) throw;
      throw std::invalid_argument("filter: bad value for " + key + ": '" + value + "'");
    }
  }
  return f;
}

std::string DatasetFilter::describe() const {
  std::ostringstream out;
  const char* sep = "";
  if (min_actions) { out << sep << "K>=" << *min_actions; sep = ","; }
  if (min_features) { out << sep << "d>=" << *min_features; sep = ","; }
  if (min_examples) { out << sep << "n>=" << *min_examples; sep = ","; }
  if (max_pv_oaa) { out << sep << "pv_oaa<=" << *max_pv_oaa; sep = ","; }
  return out.str();
}

WinLossMatrix win_loss_matrix(const std::vector<DatasetResults>& results,
                              const std::vector<std::string>& methods,
                              const DatasetFilter& filter) {
  WinLossMatrix m;
  m.methods = methods;
  m.entries.assign(methods.size(), std::vector<WinLossEntry>(methods.size()));
  for (const auto& ds : results) {
    if (!filter.accepts(ds.info)) continue;
    ++m.datasets_used;
    for (std::size_t i = 0; i < methods.size(); ++i) {
      for (std::size_t j = i + 1; j < methods.size(); ++j) {
        auto a = ds.methods.find(methods[i]);
        auto b = ds.methods.find(methods[j]);
        if (a == ds.methods.end() || b == ds.methods.end()) {
          m.skipped.push_back(ds.info.name + ": " + methods[i] + " vs " + methods[j]);
          continue;
        }
        switch (significance(a->second.pv, b->second.pv, a->second.n, b->second.n)) {
          case Outcome::AWins:
            ++m.entries[i][j].wins;
            ++m.entries[j][i].losses;
            break;
          case Outcome::BWins:
            ++m.entries[j][i].wins;
            ++m.entries[i][j].losses;
            break;
          case Outcome::Tie:
            break;
        }
      }
    }
  }
  return m;
}

std::string WinLossMatrix::to_csv() const {
  std::ostringstream out;
  out << "method";
  for (const auto& name : methods) out << ',' << name;
  out << '\n';
  for (std::size_t i = 0; i < methods.size(); ++i) {
    out << methods[i];
    for (std::size_t j = 0; j < methods.size(); ++j) {
      out << ',';
      if (i != j) out << entries[i][j].wins << '/' << entries[i][j].losses;
      else out << '-';
    }
    out << '\n';
  }
  return out.str();
}

CfEstimate cf_ips_uniform(const Trace& trace, std::size_t num_actions, CfMode mode) {
  if (trace.rounds.empty()) throw std::invalid_argument("cf_ips_uniform: empty trace");
  const double k = static_cast<double>(num_actions);
  double sum = 0.0;
  for (const auto& r : trace.rounds) {
    if (!(r.probability > 0.0)) throw std::invalid_argument("cf_ips_uniform: zero propensity");
    const double c = r.true_cost;
    sum += (mode == CfMode::Reward ? 1.0 - c : c) / (k * r.probability);
  }
  const double mean = sum / static_cast<double>(trace.rounds.size());
  const double estimate = mode == CfMode::Reward ? 1.0 - mean : mean;
  const double err = estimate - (1.0 - 1.0 / k);
  return {estimate, err * err};
}

MeanStderr mean_stderr(const std::vector<double>& values) {
  MeanStderr out;
  out.count = values.size();
  if (values.empty()) return out;
  double sum = 0.0;
  for (double v : values) sum += v;
  out.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    const double var = ss / static_cast<double>(values.size() - 1);
    out.stderr_ = std::sqrt(var / static_cast<double>(values.size()));
  }
  return out;
}

Quartiles quartiles(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("quartiles: empty input");
  std::sort(values.begin(), values.end());
  auto at = [&](double q) {
    const double pos = q * static_cast<double>(values.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
  };
  return {values.front(), at(0.25), at(0.5), at(0.75), values.back()};
}

}  // namespace bakery
