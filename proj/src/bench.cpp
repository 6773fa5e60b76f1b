#include "bakery/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <tuple>

namespace bakery {

using nlohmann::json;

const std::vector<double>& default_learning_rates() {
  static const std::vector<double> rates = {0.001, 0.00316, 0.01, 0.0316, 0.1,
                                            0.316, 1.0,     3.16, 10.0};
  return rates;
}

const std::vector<Encoding>& default_encodings() {
  static const std::vector<Encoding> encodings = {Encoding{0.0}, Encoding{-1.0}, Encoding{9.0}};
  return encodings;
}

// ---------------------------------------------------------------------------
// MethodConfig

std::string MethodConfig::algo_name() const {
  return oaa ? "oaa" : std::string(to_string(explorer.algorithm));
}

json MethodConfig::params() const {
  json p = json::object();
  if (oaa) return p;
  const auto& c = explorer;
  switch (c.algorithm) {
    case Algorithm::Greedy:
      break;
    case Algorithm::EpsilonGreedy:
      p["epsilon"] = c.epsilon;
      break;
    case Algorithm::Active:
      p["epsilon"] = c.epsilon;
      p["c0"] = c.c0;
      break;
    case Algorithm::Bag:
    case Algorithm::BagGreedy:
      p["N"] = c.size;
      break;
    case Algorithm::Cover:
    case Algorithm::CoverNU:
      p["N"] = c.size;
      p["psi"] = c.psi;
      break;
    case Algorithm::RegCBOpt:
    case Algorithm::RegCBElim:
      p["c0"] = c.c0;
      break;
  }
  return p;
}

// ---------------------------------------------------------------------------
// ResultRecord

namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

json config_json(const ResultRecord& r) {
  json j;
  j["dataset"] = r.dataset;
  j["algo"] = r.algo;
  j["params"] = r.params;
  j["reduction"] = r.reduction ? json(*r.reduction) : json(nullptr);
  j["encoding"] = r.encoding ? json(*r.encoding) : json(nullptr);
  j["baseline"] = r.baseline;
  j["lr"] = r.lr;
  j["seed"] = r.seed;
  j["shuffle_seed"] = r.shuffle_seed;
  return j;
}

template <typename T>
json opt(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

template <typename T>
std::optional<T> get_opt(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<T>();
}

}  // namespace

std::string ResultRecord::fingerprint() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a(config_json(*this).dump())));
  return buf;
}

json ResultRecord::to_json() const {
  json j = config_json(*this);
  j["schema"] = schema;
  j["fingerprint"] = fingerprint();
  j["n"] = n;
  j["K"] = num_actions;
  j["d"] = num_features;
  j["binary_costs"] = binary_costs;
  j["pv_loss"] = opt(pv_loss);
  j["pv_oaa"] = opt(pv_oaa);
  j["normalized_loss"] = opt(normalized_loss);
  j["degenerate"] = degenerate;
  j["cf_reward_sq_error"] = opt(cf_reward_sq_error);
  j["cf_loss_sq_error"] = opt(cf_loss_sq_error);
  j["wall_time"] = opt(wall_time);
  j["error"] = opt(error);
  return j;
}

ResultRecord ResultRecord::from_json(const json& j) {
  ResultRecord r;
  r.schema = j.at("schema").get<int>();
  if (r.schema != kSchemaVersion) {
    throw std::runtime_error("unsupported record schema " + std::to_string(r.schema));
  }
  r.dataset = j.at("dataset").get<std::string>();
  r.algo = j.at("algo").get<std::string>();
  r.params = j.value("params", json::object());
  r.reduction = get_opt<std::string>(j, "reduction");
  r.encoding = get_opt<std::string>(j, "encoding");
  r.baseline = j.value("baseline", false);
  r.lr = j.at("lr").get<double>();
  r.seed = j.value("seed", std::uint64_t{0});
  r.shuffle_seed = j.value("shuffle_seed", std::uint64_t{0});
  r.n = j.value("n", std::size_t{0});
  r.num_actions = j.value("K", std::size_t{0});
  r.num_features = j.value("d", std::size_t{0});
  r.binary_costs = j.value("binary_costs", true);
  r.pv_loss = get_opt<double>(j, "pv_loss");
  r.pv_oaa = get_opt<double>(j, "pv_oaa");
  r.normalized_loss = get_opt<double>(j, "normalized_loss");
  r.degenerate = j.value("degenerate", false);
  r.cf_reward_sq_error = get_opt<double>(j, "cf_reward_sq_error");
  r.cf_loss_sq_error = get_opt<double>(j, "cf_loss_sq_error");
  r.wall_time = get_opt<double>(j, "wall_time");
  r.error = get_opt<std::string>(j, "error");
  return r;
}

// ---------------------------------------------------------------------------
// Runs

namespace {

ResultRecord describe(const Dataset& ds, const MethodConfig& m, std::uint64_t shuffle_seed) {
  ResultRecord r;
  r.dataset = ds.name;
  r.algo = m.algo_name();
  r.params = m.params();
  if (!m.oaa) {
    if (m.explorer.uses_reduction()) r.reduction = std::string(to_string(m.explorer.reduction));
    r.encoding = m.explorer.encoding.name();
  }
  r.baseline = m.explorer.baseline;
  r.lr = m.explorer.learning_rate;
  r.seed = m.explorer.seed;
  r.shuffle_seed = shuffle_seed;
  r.n = ds.size();
  r.num_actions = ds.num_actions;
  return r;
}

Dataset ordered(const Dataset& ds, std::uint64_t shuffle_seed) {
  return shuffle_seed == 0 ? ds : shuffle(ds, shuffle_seed);
}

double reference_loss(const Dataset& shuffled, const MethodConfig& m) {
  return oaa_run(shuffled, m.explorer.learning_rate, m.explorer.seed, false);
}

// `shuffled` is the dataset already in run order.
ResultRecord run_prepared(const Dataset& shuffled, const MethodConfig& m,
                          std::uint64_t shuffle_seed, bool timing, std::optional<double> pv_oaa) {
  const auto start = std::chrono::steady_clock::now();
  ResultRecord r = describe(shuffled, m, shuffle_seed);
  try {
    r.num_features = shuffled.num_features();
    r.binary_costs = shuffled.binary_costs();
    if (shuffled.size() == 0) throw std::invalid_argument("dataset has no examples");
    const double ref = pv_oaa ? *pv_oaa : reference_loss(shuffled, m);
    double pv;
    if (m.oaa) {
      pv = m.explorer.baseline
               ? oaa_run(shuffled, m.explorer.learning_rate, m.explorer.seed, true)
               : ref;
    } else {
      const Trace trace = run(shuffled, m.explorer);
      pv = pv_loss(trace);
      if (r.binary_costs) {
        r.cf_reward_sq_error = cf_ips_uniform(trace, shuffled.num_actions, CfMode::Reward).squared_error;
        r.cf_loss_sq_error = cf_ips_uniform(trace, shuffled.num_actions, CfMode::Loss).squared_error;
      }
    }
    const NormalizedLoss nl = normalized_loss(pv, ref);
    r.pv_loss = pv;
    r.pv_oaa = ref;
    r.normalized_loss = nl.value;
    r.degenerate = nl.degenerate;
  } catch (const std::exception& e) {
    r.error = e.what();
    r.pv_loss.reset();
    r.pv_oaa.reset();
    r.normalized_loss.reset();
    r.cf_reward_sq_error.reset();
    r.cf_loss_sq_error.reset();
  }
  if (timing) {
    r.wall_time =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
  return r;
}

template <typename Fn>
void parallel_for(std::size_t count, std::size_t workers, Fn&& fn) {
  workers = std::max<std::size_t>(1, std::min(workers, count));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) fn(i);
    });
  }
}

}  // namespace

ResultRecord run_once(const RunSpec& spec, std::optional<double> pv_oaa) {
  if (!spec.dataset) throw std::invalid_argument("run_once: no dataset");
  std::optional<Dataset> shuffled;
  try {
    shuffled = ordered(*spec.dataset, spec.shuffle_seed);
  } catch (const std::exception& e) {
    ResultRecord r = describe(*spec.dataset, spec.method, spec.shuffle_seed);
    r.error = e.what();
    return r;
  }
  return run_prepared(*shuffled, spec.method, spec.shuffle_seed, spec.timing, pv_oaa);
}

// ---------------------------------------------------------------------------
// Grid

namespace {

struct AlgoGrid {
  std::vector<ExplorerConfig> params;  // hyperparameters only
  std::vector<Reduction> reductions;
};

AlgoGrid algo_grid(Algorithm algo, bool full) {
  AlgoGrid g;
  const ExplorerConfig base = ExplorerConfig::defaults(algo);
  const std::vector<Reduction> all = {Reduction::IPS, Reduction::DR, Reduction::IWR};
  if (!full) {
    g.params = {base};
    g.reductions = {base.reduction};
    return g;
  }
  auto with = [&](auto&& set) {
    ExplorerConfig c = base;
    set(c);
    g.params.push_back(c);
  };
  switch (algo) {
    case Algorithm::Greedy:
      g.params = {base};
      g.reductions = {Reduction::IWR};
      break;
    case Algorithm::EpsilonGreedy:
      for (double e : {0.02, 0.05, 0.1}) with([&](ExplorerConfig& c) { c.epsilon = e; });
      g.reductions = all;
      break;
    case Algorithm::Active:
      for (double e : {0.02, 1.0}) {
        for (double c0 : {1e-2, 1e-4, 1e-6}) {
          with([&](ExplorerConfig& c) {
            c.epsilon = e;
            c.c0 = c0;
          });
        }
      }
      g.reductions = all;
      break;
    case Algorithm::Bag:
    case Algorithm::BagGreedy:
      for (std::size_t n : {4, 8, 16}) with([&](ExplorerConfig& c) { c.size = n; });
      g.reductions = all;
      break;
    case Algorithm::Cover:
    case Algorithm::CoverNU:
      for (std::size_t n : {4, 8, 16}) {
        for (double psi : {0.01, 0.1, 1.0}) {
          with([&](ExplorerConfig& c) {
            c.size = n;
            c.psi = psi;
          });
        }
      }
      g.reductions = {Reduction::IPS, Reduction::DR};
      break;
    case Algorithm::RegCBOpt:
    case Algorithm::RegCBElim:
      for (double c0 : {1e-1, 1e-2, 1e-3}) with([&](ExplorerConfig& c) { c.c0 = c0; });
      g.reductions = {base.reduction};
      break;
  }
  return g;
}

}  // namespace

std::vector<MethodConfig> SweepGrid::configs(const std::string& algo) const {
  std::vector<MethodConfig> out;
  if (algo == "oaa") {
    for (bool b : baselines) {
      for (double lr : learning_rates) {
        for (auto seed : seeds) {
          MethodConfig m;
          m.oaa = true;
          m.explorer.baseline = b;
          m.explorer.learning_rate = lr;
          m.explorer.seed = seed;
          out.push_back(m);
        }
      }
    }
    return out;
  }
  const Algorithm a = parse_algorithm(algo);
  AlgoGrid g = algo_grid(a, full);
  if (reduction && ExplorerConfig::defaults(a).uses_reduction()) g.reductions = {*reduction};
  for (const auto& enc : encodings) {
    for (bool b : baselines) {
      for (const auto& p : g.params) {
        for (auto red : g.reductions) {
          for (double lr : learning_rates) {
            for (auto seed : seeds) {
              MethodConfig m;
              m.explorer = p;
              m.explorer.encoding = enc;
              m.explorer.baseline = b;
              m.explorer.reduction = red;
              m.explorer.learning_rate = lr;
              m.explorer.seed = seed;
              out.push_back(m);
            }
          }
        }
      }
    }
  }
  return out;
}

std::size_t resolve_workers(std::size_t requested) {
  if (const char* env = std::getenv("BANDIT_BAKERY_THREADS"); env && *env) {
    char* end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    if (end && *end == '\0' && v > 0) return v;
  }
  return std::max<std::size_t>(1, requested);
}

std::vector<ResultRecord> sweep(const std::vector<std::shared_ptr<const Dataset>>& datasets,
                                const std::vector<std::string>& algorithms, const SweepGrid& grid,
                                const std::vector<std::uint64_t>& shuffle_seeds,
                                std::size_t workers, bool timing) {
  std::vector<MethodConfig> methods;
  for (const auto& algo : algorithms) {
    auto c = grid.configs(algo);
    methods.insert(methods.end(), c.begin(), c.end());
  }
  return sweep(datasets, methods, shuffle_seeds, workers, timing);
}

std::vector<ResultRecord> sweep(const std::vector<std::shared_ptr<const Dataset>>& datasets,
                                const std::vector<MethodConfig>& methods,
                                const std::vector<std::uint64_t>& shuffle_seeds,
                                std::size_t workers, bool timing) {

  // Ordered copies, one per (dataset, shuffle seed).
  struct Prepared {
    std::size_t dataset;
    std::uint64_t shuffle_seed;
    std::optional<Dataset> data;
    std::string error;
  };
  std::vector<Prepared> prepared;
  for (std::size_t d = 0; d < datasets.size(); ++d) {
    for (auto s : shuffle_seeds) prepared.push_back({d, s, std::nullopt, {}});
  }
  parallel_for(prepared.size(), workers, [&](std::size_t i) {
    try {
      prepared[i].data = ordered(*datasets[prepared[i].dataset], prepared[i].shuffle_seed);
    } catch (const std::exception& e) {
      prepared[i].error = e.what();
    }
  });

  // OAA references, shared by every method with the same rate and seed.
  using RefKey = std::tuple<std::size_t, double, std::uint64_t>;
  std::map<RefKey, std::optional<double>> refs;
  for (std::size_t p = 0; p < prepared.size(); ++p) {
    if (!prepared[p].data || prepared[p].data->size() == 0) continue;
    for (const auto& m : methods) refs[{p, m.explorer.learning_rate, m.explorer.seed}];
  }
  std::vector<std::pair<const RefKey, std::optional<double>>*> ref_slots;
  for (auto& kv : refs) ref_slots.push_back(&kv);
  parallel_for(ref_slots.size(), workers, [&](std::size_t i) {
    const auto& [p, lr, seed] = ref_slots[i]->first;
    try {
      ref_slots[i]->second = oaa_run(*prepared[p].data, lr, seed, false);
    } catch (const std::exception&) {
      // Left empty; the run recomputes and records the error.
    }
  });

  std::vector<ResultRecord> records(prepared.size() * methods.size());
  parallel_for(records.size(), workers, [&](std::size_t i) {
    const Prepared& p = prepared[i / methods.size()];
    const MethodConfig& m = methods[i % methods.size()];
    if (!p.data) {
      records[i] = describe(*datasets[p.dataset], m, p.shuffle_seed);
      records[i].error = p.error;
      return;
    }
    std::optional<double> ref;
    if (auto it = refs.find({i / methods.size(), m.explorer.learning_rate, m.explorer.seed});
        it != refs.end()) {
      ref = it->second;
    }
    records[i] = run_prepared(*p.data, m, p.shuffle_seed, timing, ref);
  });
  sort_records(records);
  return records;
}

void sort_records(std::vector<ResultRecord>& records) {
  std::vector<std::pair<std::string, std::size_t>> keys;
  keys.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    keys.emplace_back(records[i].fingerprint() + config_json(records[i]).dump(), i);
  }
  std::stable_sort(keys.begin(), keys.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<ResultRecord> sorted;
  sorted.reserve(records.size());
  for (const auto& k : keys) sorted.push_back(std::move(records[k.second]));
  records = std::move(sorted);
}

void write_jsonl(std::ostream& out, const std::vector<ResultRecord>& records) {
  for (const auto& r : records) out << r.to_json().dump() << '\n';
}

std::vector<ResultRecord> read_jsonl(std::istream& in) {
  std::vector<ResultRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(ResultRecord::from_json(json::parse(line)));
    } catch (const std::exception& e) {
      throw std::runtime_error("records line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reports

std::string method_key(const ResultRecord& r, GroupBy group_by) {
  std::string key = r.algo;
  if (r.encoding) key += "[" + *r.encoding + "]";
  if (group_by == GroupBy::Algorithm) return key;
  if (!r.params.empty()) {
    std::string p;
    for (const auto& [k, v] : r.params.items()) {
      if (!p.empty()) p += ",";
      p += k + "=" + v.dump();
    }
    key += "{" + p + "}";
  }
  if (r.reduction) key += "(" + *r.reduction + ")";
  if (r.baseline) key += "+baseline";
  return key;
}

std::vector<BestRun> best_lr(const std::vector<ResultRecord>& records, GroupBy group_by,
                             CfMode cf_mode) {
  // (dataset, config key) -> lr -> records
  std::map<std::pair<std::string, std::string>, std::map<double, std::vector<const ResultRecord*>>>
      groups;
  for (const auto& r : records) {
    if (r.error || !r.pv_loss) continue;
    groups[{r.dataset, method_key(r, GroupBy::Config)}][r.lr].push_back(&r);
  }

  std::map<std::pair<std::string, std::string>, BestRun> best;
  for (const auto& [key, by_lr] : groups) {
    std::optional<BestRun> pick;
    for (const auto& [lr, runs] : by_lr) {
      std::vector<double> pvs;
      double cf_sum = 0.0;
      std::size_t cf_count = 0;
      for (const auto* r : runs) {
        pvs.push_back(*r->pv_loss);
        const auto& cf = cf_mode == CfMode::Reward ? r->cf_reward_sq_error : r->cf_loss_sq_error;
        if (cf) {
          cf_sum += *cf;
          ++cf_count;
        }
      }
      BestRun b;
      b.dataset = key.first;
      b.method = method_key(*runs.front(), group_by);
      b.lr = lr;
      b.pv = mean_stderr(pvs);
      b.n = runs.front()->n;
      if (cf_count) b.cf_sq_error = cf_sum / static_cast<double>(cf_count);
      if (!pick || b.pv.mean < pick->pv.mean) pick = b;
    }
    auto slot = std::make_pair(key.first, pick->method);
    auto it = best.find(slot);
    if (it == best.end() || pick->pv.mean < it->second.pv.mean) best[slot] = *pick;
  }

  std::vector<BestRun> out;
  out.reserve(best.size());
  for (auto& [k, b] : best) out.push_back(std::move(b));
  return out;
}

namespace {

struct ReportSelection {
  std::vector<BestRun> best;
  std::vector<DatasetResults> datasets;
  std::vector<std::string> methods;
  std::vector<std::string> non_binary;
};

ReportSelection select_results(const std::vector<ResultRecord>& records, const ReportOptions& opt) {
  std::map<std::string, DatasetInfo> info;
  std::map<std::string, bool> binary;
  for (const auto& r : records) {
    if (r.error) continue;
    auto [it, fresh] = info.try_emplace(r.dataset);
    DatasetInfo& d = it->second;
    if (fresh) {
      d.name = r.dataset;
      d.num_actions = r.num_actions;
      d.num_features = r.num_features;
      d.num_examples = r.n;
      d.pv_oaa = r.pv_oaa.value_or(1.0);
      binary[r.dataset] = r.binary_costs;
    } else if (r.pv_oaa) {
      d.pv_oaa = std::min(d.pv_oaa, *r.pv_oaa);
    }
  }

  ReportSelection s;
  std::set<std::string> accepted;
  for (const auto& [name, d] : info) {
    if (opt.filter.accepts(d)) accepted.insert(name);
  }
  if (accepted.empty()) throw std::runtime_error("no datasets matched");

  std::set<std::string> methods;
  std::map<std::string, DatasetResults> per_dataset;
  for (auto& b : best_lr(records, opt.group_by, opt.cf_mode)) {
    if (!accepted.count(b.dataset)) continue;
    methods.insert(b.method);
    auto& dr = per_dataset[b.dataset];
    dr.info = info[b.dataset];
    dr.methods[b.method] = {b.pv.mean, b.n};
    s.best.push_back(std::move(b));
  }
  for (auto& [name, dr] : per_dataset) {
    if (binary[name]) {
      s.datasets.push_back(std::move(dr));
    } else {
      s.non_binary.push_back(name);
    }
  }
  s.methods.assign(methods.begin(), methods.end());
  return s;
}

std::string fmt(double v) {
  std::ostringstream out;
  out.precision(6);
  out << v;
  return out.str();
}

}  // namespace

VoteResult instant_runoff(const std::vector<DatasetResults>& results,
                          const std::vector<std::string>& methods) {
  VoteResult out;
  if (methods.empty()) return out;
  // Per dataset: wins minus losses of each method against all others.
  std::vector<std::vector<int>> score(results.size(), std::vector<int>(methods.size(), 0));
  std::vector<std::vector<bool>> present(results.size(), std::vector<bool>(methods.size(), false));
  for (std::size_t d = 0; d < results.size(); ++d) {
    const auto& m = results[d].methods;
    for (std::size_t i = 0; i < methods.size(); ++i) present[d][i] = m.count(methods[i]) > 0;
    for (std::size_t i = 0; i < methods.size(); ++i) {
      for (std::size_t j = i + 1; j < methods.size(); ++j) {
        if (!present[d][i] || !present[d][j]) continue;
        const auto& a = m.at(methods[i]);
        const auto& b = m.at(methods[j]);
        switch (significance(a.pv, b.pv, a.n, b.n)) {
          case Outcome::AWins: ++score[d][i]; --score[d][j]; break;
          case Outcome::BWins: --score[d][i]; ++score[d][j]; break;
          case Outcome::Tie: break;
        }
      }
    }
  }

  std::vector<bool> active(methods.size(), true);
  std::size_t remaining = methods.size();
  while (true) {
    std::vector<double> votes(methods.size(), 0.0);
    double total = 0.0;
    for (std::size_t d = 0; d < results.size(); ++d) {
      int top = 0;
      bool any = false;
      for (std::size_t i = 0; i < methods.size(); ++i) {
        if (!active[i] || !present[d][i]) continue;
        if (!any || score[d][i] > top) top = score[d][i];
        any = true;
      }
      if (!any) continue;
      std::vector<std::size_t> firsts;
      for (std::size_t i = 0; i < methods.size(); ++i) {
        if (active[i] && present[d][i] && score[d][i] == top) firsts.push_back(i);
      }
      for (auto i : firsts) votes[i] += 1.0 / static_cast<double>(firsts.size());
      total += 1.0;
    }
    std::vector<std::pair<std::string, double>> round;
    std::size_t leader = methods.size();
    std::size_t loser = methods.size();
    for (std::size_t i = 0; i < methods.size(); ++i) {
      if (!active[i]) continue;
      round.emplace_back(methods[i], votes[i]);
      if (leader == methods.size() || votes[i] > votes[leader]) leader = i;
      // Lowest vote is eliminated; among equals the later name goes first.
      if (loser == methods.size() || votes[i] <= votes[loser]) loser = i;
    }
    out.rounds.push_back(round);
    if (remaining == 1 || votes[leader] > 0.5 * total) {
      out.winner = methods[leader];
      return out;
    }
    active[loser] = false;
    --remaining;
  }
}

std::string report(const std::vector<ResultRecord>& records, const ReportOptions& options) {
  const ReportSelection s = select_results(records, options);
  std::ostringstream out;

  switch (options.mode) {
    case ReportMode::BestLr: {
      if (options.json) {
        json arr = json::array();
        for (const auto& b : s.best) {
          arr.push_back({{"dataset", b.dataset}, {"method", b.method}, {"lr", b.lr},
                         {"pv_mean", b.pv.mean}, {"pv_stderr", b.pv.stderr_},
                         {"runs", b.pv.count}, {"n", b.n}});
        }
        out << arr.dump(2) << '\n';
      } else {
        out << "dataset,method,lr,pv_mean,pv_stderr,runs,n\n";
        for (const auto& b : s.best) {
          out << b.dataset << ',' << b.method << ',' << fmt(b.lr) << ',' << fmt(b.pv.mean) << ','
              << fmt(b.pv.stderr_) << ',' << b.pv.count << ',' << b.n << '\n';
        }
      }
      break;
    }
    case ReportMode::Matrix: {
      if (s.datasets.empty()) throw std::runtime_error("no datasets matched");
      const WinLossMatrix m = win_loss_matrix(s.datasets, s.methods);
      if (options.json) {
        json cells = json::array();
        for (std::size_t i = 0; i < m.methods.size(); ++i) {
          json row = json::array();
          for (std::size_t j = 0; j < m.methods.size(); ++j) {
            row.push_back({{"wins", m.at(i, j).wins}, {"losses", m.at(i, j).losses}});
          }
          cells.push_back(row);
        }
        out << json{{"methods", m.methods}, {"matrix", cells}, {"datasets", m.datasets_used},
                    {"skipped", m.skipped}, {"real_valued_costs", s.non_binary}}
                   .dump(2)
            << '\n';
      } else {
        out << m.to_csv();
        for (const auto& line : m.skipped) out << "# skipped " << line << '\n';
        for (const auto& name : s.non_binary) {
          out << "# " << name << ": real-valued costs, see best-lr for mean and standard error\n";
        }
      }
      break;
    }
    case ReportMode::CfError: {
      std::map<std::string, std::vector<double>> errors;
      for (const auto& b : s.best) {
        if (b.cf_sq_error) errors[b.method].push_back(*b.cf_sq_error);
      }
      if (errors.empty()) throw std::runtime_error("no datasets matched");
      if (options.json) {
        json arr = json::array();
        for (const auto& [method, v] : errors) {
          const Quartiles q = quartiles(v);
          arr.push_back({{"method", method}, {"datasets", v.size()}, {"min", q.min},
                         {"q1", q.q1}, {"median", q.median}, {"q3", q.q3}, {"max", q.max}});
        }
        out << arr.dump(2) << '\n';
      } else {
        out << "method,datasets,min,q1,median,q3,max\n";
        for (const auto& [method, v] : errors) {
          const Quartiles q = quartiles(v);
          out << method << ',' << v.size() << ',' << fmt(q.min) << ',' << fmt(q.q1) << ','
              << fmt(q.median) << ',' << fmt(q.q3) << ',' << fmt(q.max) << '\n';
        }
      }
      break;
    }
    case ReportMode::Vote: {
      if (s.datasets.empty()) throw std::runtime_error("no datasets matched");
      const VoteResult v = instant_runoff(s.datasets, s.methods);
      if (options.json) {
        json rounds = json::array();
        for (const auto& r : v.rounds) {
          json row = json::object();
          for (const auto& [name, votes] : r) row[name] = votes;
          rounds.push_back(row);
        }
        out << json{{"winner", v.winner}, {"rounds", rounds}}.dump(2) << '\n';
      } else {
        for (std::size_t i = 0; i < v.rounds.size(); ++i) {
          out << "round " << i + 1;
          for (const auto& [name, votes] : v.rounds[i]) out << ' ' << name << '=' << fmt(votes);
          out << '\n';
        }
        out << "winner " << v.winner << '\n';
      }
      break;
    }
  }
  return out.str();
}

}  // namespace bakery
