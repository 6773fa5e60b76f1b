#include <doctest.h>

#include <cmath>
#include <numeric>

#include "bakery/explorers.hpp"

using namespace bakery;

namespace {

ExplorerConfig config(Algorithm algo) {
  ExplorerConfig cfg = ExplorerConfig::defaults(algo);
  cfg.seed = 3;
  return cfg;
}

bool same_trace(const Trace& a, const Trace& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto& x = a.rounds[i];
    const auto& y = b.rounds[i];
    if (x.action != y.action || x.probability != y.probability || x.distribution != y.distribution ||
        x.observed_loss != y.observed_loss) {
      return false;
    }
  }
  return true;
}

// Plays `rounds` interactions of `ds` through an explorer, checking every distribution.
void drive(Explorer& e, const Dataset& ds, std::size_t rounds, const Encoding& enc, Rng& rng) {
  for (std::size_t t = 0; t < rounds && t < ds.size(); ++t) {
    const Example& x = ds.examples[t];
    const ActionDistribution d = e.explore(x);
    REQUIRE_NOTHROW(d.validate());
    const Action a = d.sample(rng);
    REQUIRE(d[a] > 0.0);
    const auto fb = bandit_round(ds, t, a, enc);
    e.learn({x, a, fb.observed_loss, d[a]}, d);
  }
}

Example ctx(std::initializer_list<Feature> f) {
  Example e;
  e.shared = f;
  e.label = MulticlassLabel{0};
  return e;
}

const std::vector<Algorithm> kAll = {Algorithm::Greedy,   Algorithm::EpsilonGreedy, Algorithm::Active,
                                     Algorithm::Bag,      Algorithm::BagGreedy,     Algorithm::Cover,
                                     Algorithm::CoverNU,  Algorithm::RegCBOpt,      Algorithm::RegCBElim};

}  // namespace

TEST_CASE("action distribution basics") {
  const auto u = ActionDistribution::uniform(4);
  CHECK_NOTHROW(u.validate());
  CHECK(u[2] == 0.25);
  const auto s = ActionDistribution::uniform_over(4, {1, 3});
  CHECK(s.p == std::vector<double>{0, 0.5, 0, 0.5});
  CHECK_THROWS_AS((ActionDistribution{{0.5, 0.4}}.validate()), std::logic_error);
  CHECK_THROWS_AS((ActionDistribution{{1.5, -0.5}}.validate()), std::logic_error);
  CHECK_THROWS_AS((ActionDistribution{{}}.validate()), std::logic_error);
  CHECK_NOTHROW((ActionDistribution{{0.5, 0.5 + 1e-12}}.validate()));
}

TEST_CASE("sampling follows the distribution and skips zero mass") {
  const ActionDistribution d{{0.2, 0.0, 0.5, 0.3}};
  Rng rng(5);
  std::vector<int> counts(4, 0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) counts[d.sample(rng)]++;
  CHECK(counts[1] == 0);
  for (Action a : {0u, 2u, 3u}) {
    const double sd = std::sqrt(n * d[a] * (1 - d[a]));
    CHECK(std::abs(counts[a] - n * d[a]) < 5 * sd);
  }
  const ActionDistribution tail{{0.5, 0.5, 0.0}};
  for (int i = 0; i < 1000; ++i) CHECK(tail.sample(rng) != 2);
}

TEST_CASE("algorithm names and defaults") {
  for (Algorithm a : kAll) CHECK(parse_algorithm(to_string(a)) == a);
  CHECK_THROWS(parse_algorithm("ucb"));
  CHECK(ExplorerConfig::defaults(Algorithm::Greedy).epsilon == 0.0);
  CHECK(ExplorerConfig::defaults(Algorithm::EpsilonGreedy).epsilon == 0.02);
  CHECK(ExplorerConfig::defaults(Algorithm::Bag).size == 4);
  CHECK(ExplorerConfig::defaults(Algorithm::Cover).psi == 0.1);
  CHECK(ExplorerConfig::defaults(Algorithm::Cover).reduction == Reduction::IPS);
  CHECK(ExplorerConfig::defaults(Algorithm::CoverNU).reduction == Reduction::DR);
  CHECK(ExplorerConfig::defaults(Algorithm::RegCBOpt).c0 == 1e-3);
  CHECK(ExplorerConfig::defaults(Algorithm::Active).c0 == 1e-6);
  CHECK_FALSE(ExplorerConfig::defaults(Algorithm::RegCBElim).uses_reduction());
  for (Algorithm a : kAll) CHECK_NOTHROW(ExplorerConfig::defaults(a).validate());
}

TEST_CASE("invalid configurations are rejected") {
  auto cfg = config(Algorithm::CoverNU);
  cfg.reduction = Reduction::IWR;
  CHECK_THROWS_WITH(cfg.validate(), "cover does not support iwr");
  cfg = config(Algorithm::Active);
  cfg.epsilon = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = config(Algorithm::EpsilonGreedy);
  cfg.epsilon = 1.5;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = config(Algorithm::Bag);
  cfg.size = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = config(Algorithm::RegCBOpt);
  cfg.c0 = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = config(Algorithm::Greedy);
  cfg.learning_rate = -1.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  CHECK_THROWS_AS(run(make_linear_dataset(2, 2, 5, 1), cfg), std::invalid_argument);
}

TEST_CASE("epsilon-greedy distributions") {
  const auto x = ctx({{0, 1}});
  auto cfg = config(Algorithm::EpsilonGreedy);
  cfg.epsilon = 0.1;
  EpsilonGreedy e(4, cfg, false);
  // Fresh regressors tie everywhere.
  CHECK(e.explore(x).p == std::vector<double>{0.25, 0.25, 0.25, 0.25});
  // Make action 2 (index 1) the unique greedy choice.
  for (int i = 0; i < 3; ++i) e.learn({x, 1, -1.0, 1.0}, ActionDistribution::uniform(4));
  const auto d = e.explore(x);
  CHECK(d[0] == doctest::Approx(0.025));
  CHECK(d[1] == doctest::Approx(0.925));
  CHECK(d[2] == doctest::Approx(0.025));
  CHECK(d[3] == doctest::Approx(0.025));
  CHECK(e.round() == 4);

  cfg.epsilon = 1.0;
  EpsilonGreedy uni(4, cfg, false);
  uni.learn({x, 1, 0.0, 1.0}, ActionDistribution::uniform(4));
  for (double v : uni.explore(x).p) CHECK(v == doctest::Approx(0.25));

  // Negative loss at one action makes it greedy under iwr; epsilon = 0 is one-hot.
  EpsilonGreedy g(3, config(Algorithm::Greedy), false);
  g.learn({x, 2, -1.0, 1.0}, ActionDistribution::uniform(3));
  CHECK(g.explore(x).p == std::vector<double>{0, 0, 1});
}

TEST_CASE("epsilon-greedy keeps a floor of epsilon/K") {
  const Dataset ds = make_linear_dataset(4, 5, 400, 2);
  for (double eps : {0.01, 0.1, 0.5}) {
    for (Reduction r : {Reduction::IPS, Reduction::DR, Reduction::IWR}) {
      auto cfg = config(Algorithm::EpsilonGreedy);
      cfg.epsilon = eps;
      cfg.reduction = r;
      const Trace tr = run(ds, cfg);
      for (const auto& e : tr.rounds) {
        for (double v : e.distribution) CHECK(v >= eps / 5 - 1e-15);
      }
    }
  }
}

TEST_CASE("greedy equals epsilon-greedy with epsilon zero") {
  const Dataset ds = make_linear_dataset(5, 3, 500, 4);
  for (Reduction r : {Reduction::IPS, Reduction::DR, Reduction::IWR}) {
    auto g = config(Algorithm::Greedy);
    g.reduction = r;
    auto e = config(Algorithm::EpsilonGreedy);
    e.epsilon = 0.0;
    e.reduction = r;
    CHECK(same_trace(run(ds, g), run(ds, e)));
  }
}

TEST_CASE("bag votes") {
  std::vector<double> p(3, 0.0);
  for (Action a : {0u, 0u, 1u, 2u}) add_votes(p, {a}, 0.25);
  CHECK(p == std::vector<double>{0.5, 0.25, 0.25});
  std::vector<double> q(3, 0.0);
  add_votes(q, {0, 1, 2}, 0.3);
  for (double v : q) CHECK(v == doctest::Approx(0.1));

  const Dataset ds = make_linear_dataset(4, 4, 300, 8);
  for (Reduction r : {Reduction::IPS, Reduction::DR, Reduction::IWR}) {
    auto cfg = config(Algorithm::Bag);
    cfg.size = 5;
    cfg.reduction = r;
    Bag bag(4, cfg, false);
    Rng rng(1);
    drive(bag, ds, 200, cfg.encoding, rng);
    for (std::size_t t = 200; t < 260; ++t) {
      const Example& x = ds.examples[t];
      std::vector<double> manual(4, 0.0);
      for (const auto& pol : bag.policies()) add_votes(manual, pol.greedy_set(x), 0.2);
      const auto d = bag.explore(x);
      for (Action a = 0; a < 4; ++a) CHECK(d[a] == doctest::Approx(manual[a]).epsilon(1e-12));
    }
  }
}

TEST_CASE("bag policies receive Poisson(1) updates") {
  const Dataset ds = make_linear_dataset(3, 3, 2000, 6);
  auto cfg = config(Algorithm::Bag);
  cfg.size = 8;
  Bag bag(3, cfg, false);
  Rng rng(2);
  drive(bag, ds, ds.size(), cfg.encoding, rng);
  double total = 0.0;
  for (const auto& pol : bag.policies()) total += static_cast<double>(pol.oracle_calls);
  const double mean = total / (8.0 * 2000.0);
  // 16000 Poisson(1) draws: standard error 0.008.
  CHECK(std::abs(mean - 1.0) < 0.04);
  for (std::size_t i = 1; i < 8; ++i) CHECK(bag.policies()[i].oracle_calls != bag.policies()[0].oracle_calls);
}

TEST_CASE("bag-greedy head is trained once per round") {
  const Dataset ds = make_linear_dataset(3, 3, 300, 6);
  for (Reduction r : {Reduction::IPS, Reduction::DR, Reduction::IWR}) {
    auto cfg = config(Algorithm::BagGreedy);
    cfg.reduction = r;
    Bag bag(3, cfg, false);
    Rng rng(2);
    drive(bag, ds, ds.size(), cfg.encoding, rng);
    CHECK(bag.policies()[0].oracle_calls == 300);
  }
}

TEST_CASE("single-policy bag-greedy reproduces greedy") {
  const Dataset ds = make_linear_dataset(6, 4, 600, 10);
  for (Reduction r : {Reduction::IPS, Reduction::DR, Reduction::IWR}) {
    auto b = config(Algorithm::BagGreedy);
    b.size = 1;
    b.reduction = r;
    auto g = config(Algorithm::Greedy);
    g.reduction = r;
    CHECK(same_trace(run(ds, b), run(ds, g)));
  }
}

TEST_CASE("cover epsilon schedule and diversity cost") {
  CHECK(Cover::epsilon_t(4, 1) == doctest::Approx(0.25));
  CHECK(Cover::epsilon_t(4, 100) == doctest::Approx(0.05));
  CHECK(Cover::epsilon_t(2, 1) == doctest::Approx(0.5));
  CHECK(Cover::diversity_cost(0.5, 0.0, 0.05, 0.1) == doctest::Approx(0.4));
  CHECK(Cover::diversity_cost(0.5, 0.0, 0.7, 0.1) == doctest::Approx(0.4));
  CHECK(Cover::diversity_cost(0.5, 1.0, 0.05, 0.1) == doctest::Approx(0.495));
}

TEST_CASE("cover learn composes the documented steps") {
  const Dataset ds = make_linear_dataset(3, 3, 60, 12);
  for (Reduction r : {Reduction::IPS, Reduction::DR}) {
    auto cfg = config(Algorithm::Cover);
    cfg.reduction = r;
    cfg.size = 3;
    cfg.psi = 0.3;
    Cover cover(3, cfg, false);
    Rng rng(9);
    drive(cover, ds, 40, cfg.encoding, rng);

    // Replay one more round by hand on copies of the policies.
    std::vector<Policy> pols = cover.policies();
    const Example& x = ds.examples[40];
    const std::size_t t = cover.round();
    const auto d = cover.explore(x);
    const Action a = d.sample(rng);
    const double loss = bandit_round(ds, 40, a, cfg.encoding).observed_loss;
    const InteractionRecord rec{x, a, loss, d[a]};

    std::vector<double> lhat;
    if (r == Reduction::IPS) {
      lhat = ips_estimate(rec, 3);
    } else {
      // Rebuild the loss regressor by replaying the same history.
      RegressorSet lr(3, {cfg.learning_rate, false, false});
      Cover probe(3, cfg, false);
      Rng rng3(9);
      for (std::size_t s = 0; s < 40; ++s) {
        const auto ds_ = probe.explore(ds.examples[s]);
        const Action as = ds_.sample(rng3);
        const double ls = bandit_round(ds, s, as, cfg.encoding).observed_loss;
        lr.update(ds.examples[s], as, ls, 1.0);
        probe.learn({ds.examples[s], as, ls, ds_[as]}, ds_);
      }
      lr.update(x, a, loss, 1.0);
      lhat = lr.predict_all(x);
      lhat[a] += (loss - lhat[a]) / d[a];
    }
    csc_update(pols[0], x, lhat);
    const double eps = Cover::epsilon_t(3, t);
    for (std::size_t i = 1; i < 3; ++i) {
      std::vector<double> q(3, 0.0);
      for (std::size_t j = 0; j < i; ++j) add_votes(q, pols[j].greedy_set(x), 1.0 / static_cast<double>(i));
      std::vector<double> c(3);
      for (Action b = 0; b < 3; ++b) c[b] = lhat[b] - 0.3 * eps / (eps + (1 - eps) * q[b]);
      csc_update(pols[i], x, c);
    }
    cover.learn(rec, d);
    for (std::size_t i = 0; i < 3; ++i) CHECK(cover.policies()[i].regressors == pols[i].regressors);
  }
}

TEST_CASE("cover distributions") {
  const Dataset ds = make_linear_dataset(4, 4, 400, 13);
  SUBCASE("uniform mixing keeps eps_t/K") {
    auto cfg = config(Algorithm::Cover);
    const Trace tr = run(ds, cfg);
    for (const auto& e : tr.rounds) {
      const double floor = Cover::epsilon_t(4, e.round) / 4.0;
      for (double v : e.distribution) CHECK(v >= floor - 1e-15);
    }
  }
  SUBCASE("no-uniform support comes from policy tie sets") {
    auto cfg = config(Algorithm::CoverNU);
    Cover cover(4, cfg, false);
    Rng rng(4);
    drive(cover, ds, 300, cfg.encoding, rng);
    for (std::size_t t = 300; t < 400; ++t) {
      const Example& x = ds.examples[t];
      const auto d = cover.explore(x);
      for (Action a = 0; a < 4; ++a) {
        if (d[a] <= 0.0) continue;
        bool voted = false;
        for (const auto& pol : cover.policies()) {
          const auto ties = pol.greedy_set(x);
          voted |= std::find(ties.begin(), ties.end(), a) != ties.end();
        }
        CHECK(voted);
      }
    }
  }
}

TEST_CASE("regcb thresholds") {
  CHECK(RegCB::threshold(1e-3, 10, 100) == doctest::Approx(6.908e-5).epsilon(1e-4));
  CHECK(RegCB::threshold(1e-3, 10, 100) == doctest::Approx(1e-3 * std::log(1000.0) / 100.0));
}

TEST_CASE("regcb selection rules") {
  const std::vector<Interval> b = {{0.1, 0.5}, {0.3, 0.4}};
  CHECK(RegCB::optimistic(b).p == std::vector<double>{1, 0});
  CHECK(RegCB::elimination(b).p == std::vector<double>{0.5, 0.5});
  const std::vector<Interval> same = {{0.2, 0.4}, {0.2, 0.4}, {0.2, 0.4}};
  for (double v : RegCB::optimistic(same).p) CHECK(v == doctest::Approx(1.0 / 3));
  for (double v : RegCB::elimination(same).p) CHECK(v == doctest::Approx(1.0 / 3));
  CHECK(RegCB::elimination({{0.1, 0.2}, {0.6, 0.9}}).p == std::vector<double>{1, 0});

  Rng rng(17);
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<Interval> r(4);
    for (auto& iv : r) {
      const double m = rng.uniform();
      const double w = 0.3 * rng.uniform();
      iv = {m - w, m + w};
    }
    const auto opt = RegCB::optimistic(r);
    const auto elim = RegCB::elimination(r);
    for (Action a = 0; a < 4; ++a) {
      if (opt[a] > 0.0) CHECK(elim[a] > 0.0);
    }
  }
}

TEST_CASE("regcb fresh bounds span the loss range") {
  for (double c : {0.0, -1.0, 9.0}) {
    auto cfg = config(Algorithm::RegCBOpt);
    cfg.encoding = Encoding{c};
    RegCB r(3, cfg, false);
    const auto x = ctx({{0, 1}, {1, 0.5}});
    for (Action a = 0; a < 3; ++a) {
      const Interval iv = r.bounds(x, a);
      CHECK(iv.lower == c);
      CHECK(iv.upper == c + 1.0);
    }
    CHECK(r.explore(x).p == ActionDistribution::uniform(3).p);
  }
}

TEST_CASE("regcb weight search matches the closed form") {
  Rng rng(23);
  for (int trial = 0; trial < 2000; ++trial) {
    const double y = rng.uniform();
    const double target = rng.uniform() < 0.5 ? -1.0 : 2.0;
    const double h = std::exp(-6.0 + 7.0 * rng.uniform());
    const UpdatePath path{y, target, h};
    const double ratio = 0.01 + rng.uniform();
    const double delta = std::exp(-12.0 + 10.0 * rng.uniform());
    const double w = RegCB::search_weight(path, ratio, delta);
    const double gap = std::abs(target - y);
    const double allowed = std::sqrt(delta / ratio);
    const double cap = 16777216.0;
    const double reach_at_cap = gap * -std::expm1(-cap * h);
    if (allowed >= reach_at_cap) {
      CHECK(w == cap);
      continue;
    }
    const double w_star = -std::log1p(-allowed / gap) / h;
    CHECK(w <= w_star * (1 + 1e-12));
    CHECK(w >= w_star * (1 - 2e-6));
    const double moved = std::abs(path.at(w) - y);
    CHECK(moved == doctest::Approx(std::min(allowed, gap)).epsilon(1e-5));
  }
  CHECK(RegCB::search_weight({0.3, -1.0, 0.5}, 0.0, 1e-4) == 16777216.0);
  CHECK(RegCB::search_weight({0.3, -1.0, 0.0}, 0.5, 1e-4) == 16777216.0);
}

TEST_CASE("regcb bounds bracket the clipped prediction") {
  const Dataset ds = make_linear_dataset(4, 3, 400, 31);
  for (double c : {0.0, -1.0, 9.0}) {
    auto cfg = config(Algorithm::RegCBElim);
    cfg.encoding = Encoding{c};
    RegCB r(3, cfg, false);
    Rng rng(5);
    drive(r, ds, 300, cfg.encoding, rng);
    for (std::size_t t = 300; t < 400; ++t) {
      const Example& x = ds.examples[t];
      for (Action a = 0; a < 3; ++a) {
        const Interval iv = r.bounds(x, a);
        const double f = std::clamp(r.regressor().predict(x, a), c, c + 1.0);
        CHECK(iv.lower <= f);
        CHECK(f <= iv.upper);
        CHECK(iv.lower >= c);
        CHECK(iv.upper <= c + 1.0);
      }
    }
  }
}

TEST_CASE("regcb bounds are monotone in C0 on a fixed state") {
  const Dataset ds = make_linear_dataset(4, 3, 400, 31);
  auto narrow_cfg = config(Algorithm::RegCBOpt);
  auto wide_cfg = narrow_cfg;
  wide_cfg.c0 = 1e-2;
  RegCB narrow(3, narrow_cfg, false);
  RegCB wide(3, wide_cfg, false);
  // Feed both instances the same interactions so their regressors match.
  Rng rng(6);
  for (std::size_t t = 0; t < 300; ++t) {
    const Example& x = ds.examples[t];
    const Action a = rng.uniform_index(3);
    const double loss = bandit_round(ds, t, a, narrow_cfg.encoding).observed_loss;
    const auto u = ActionDistribution::uniform(3);
    narrow.learn({x, a, loss, 1.0 / 3}, u);
    wide.learn({x, a, loss, 1.0 / 3}, u);
  }
  REQUIRE(narrow.regressor() == wide.regressor());
  for (std::size_t t = 300; t < 400; ++t) {
    for (Action a = 0; a < 3; ++a) {
      const Interval n = narrow.bounds(ds.examples[t], a);
      const Interval w = wide.bounds(ds.examples[t], a);
      CHECK(w.lower <= n.lower);
      CHECK(w.upper >= n.upper);
    }
  }
}

TEST_CASE("regcb width shrinks on a repeated example") {
  const auto x = ctx({{0, 1}, {1, 0.7}});
  auto cfg = config(Algorithm::RegCBOpt);
  cfg.c0 = 0.05;
  RegCB r(2, cfg, false);
  double last = INFINITY;
  for (int t = 0; t < 500; ++t) {
    r.learn({x, 0, 0.3, 1.0}, ActionDistribution::uniform(2));
    const Interval iv = r.bounds(x, 0);
    const double width = iv.upper - iv.lower;
    CHECK(width <= last + 1e-12);
    last = width;
  }
  // Unclipped half-width is sqrt(C0 ln(K t) / t_a) with t = 501, t_a = 500.
  CHECK(last == doctest::Approx(2.0 * std::sqrt(0.05 * std::log(2.0 * 501) / 500)).epsilon(1e-4));
}

TEST_CASE("active thresholds and crossing weights") {
  CHECK(ActiveEpsilonGreedy::threshold(1e-6, 10, 0.02, 100) == doctest::Approx(4.822e-3).epsilon(1e-3));
  CHECK(ActiveEpsilonGreedy::threshold(1e-6, 10, 0.02, 1) == 0.0);

  CHECK(ActiveEpsilonGreedy::csc_crossing({0.2, 0.6}, {0.1, 0.3}, 1) == doctest::Approx(1.0));
  CHECK(ActiveEpsilonGreedy::csc_crossing({0.2, 0.6}, {0.1, 0.3}, 0) == 0.0);
  CHECK(ActiveEpsilonGreedy::csc_crossing({0.1, 0.2, 0.9}, {0.1, 0.1, 0.1}, 2) == doctest::Approx(4.0));
  CHECK(ActiveEpsilonGreedy::csc_crossing({0.2, 0.6}, {0.0, 0.0}, 1) == INFINITY);
  CHECK(ActiveEpsilonGreedy::csc_crossing({0.2, 0.6}, {0.0, 0.0}, 0) == 0.0);

  CHECK(ActiveEpsilonGreedy::iwr_crossing({0.1, 0.5}, 0.2, 1) == doctest::Approx(2.0));
  CHECK(ActiveEpsilonGreedy::iwr_crossing({0.1, 0.5}, 0.2, 0) == 0.0);
  CHECK(ActiveEpsilonGreedy::iwr_crossing({0.1, 0.5}, 0.0, 1) == INFINITY);
}

TEST_CASE("active loss_diff divides by the round") {
  const Dataset ds = make_linear_dataset(3, 3, 200, 41);
  for (Reduction r : {Reduction::IPS, Reduction::DR, Reduction::IWR}) {
    auto cfg = config(Algorithm::Active);
    cfg.reduction = r;
    cfg.epsilon = 0.1;
    ActiveEpsilonGreedy act(3, cfg, false);
    Rng rng(3);
    drive(act, ds, 150, cfg.encoding, rng);
    for (std::size_t t = 150; t < 200; ++t) {
      const Example& x = ds.examples[t];
      for (Action g : act.policy().greedy_set(x)) CHECK(act.loss_diff(x, g) == 0.0);
      const auto allowed = act.admissible(x);
      for (Action g : act.policy().greedy_set(x)) {
        CHECK(std::find(allowed.begin(), allowed.end(), g) != allowed.end());
      }
      for (Action a = 0; a < 3; ++a) CHECK(act.loss_diff(x, a) >= 0.0);
    }
  }
}

TEST_CASE("active iwr clips predictions to the loss range") {
  auto cfg = config(Algorithm::Active);
  cfg.reduction = Reduction::IWR;
  ActiveEpsilonGreedy act(2, cfg, false);
  const auto uniform = ActionDistribution::uniform(2);
  act.learn({ctx({{0, 1.0}, {1, 1.0}}), 1, 1.0, 0.5}, uniform);
  const auto x = ctx({{1, -1.0}});
  const auto y = act.policy().regressors.predict_all(x);
  REQUIRE(y[0] == 0.0);
  REQUIRE(y[1] < 0.0);
  // Both sit at c_min after clipping, so the untried action is not excluded.
  CHECK(act.loss_diff(x, 0) == 0.0);
  CHECK(act.admissible(x).size() == 2);
}

TEST_CASE("active with every action admissible matches epsilon-greedy") {
  const Dataset ds = make_linear_dataset(4, 3, 400, 43);
  for (Reduction r : {Reduction::IPS, Reduction::DR, Reduction::IWR}) {
    auto a = config(Algorithm::Active);
    a.reduction = r;
    a.epsilon = 0.1;
    a.c0 = 1e12;
    auto e = config(Algorithm::EpsilonGreedy);
    e.reduction = r;
    e.epsilon = 0.1;
    CHECK(same_trace(run(ds, a), run(ds, e)));
  }
}

TEST_CASE("active restricts exploration and prices unexplored actions at c_max") {
  const Dataset ds = make_linear_dataset(4, 4, 600, 47);
  for (double c : {0.0, -1.0, 9.0}) {
    auto cfg = config(Algorithm::Active);
    cfg.reduction = Reduction::IPS;
    cfg.epsilon = 0.2;
    cfg.c0 = 1e-9;
    cfg.encoding = Encoding{c};
    ActiveEpsilonGreedy act(4, cfg, false);
    Rng rng(11);
    std::size_t restricted = 0;
    for (std::size_t t = 0; t < ds.size(); ++t) {
      const Example& x = ds.examples[t];
      const auto d = act.explore(x);
      REQUIRE_NOTHROW(d.validate());
      const auto allowed = act.admissible(x);
      const auto ties = act.policy().greedy_set(x);
      if (allowed.size() == 1 && ties.size() == 1) {
        CHECK(d[ties[0]] >= 1.0 - 0.2 + 0.2 / 4 - 1e-12);
      }
      const Action a = d.sample(rng);
      const double loss = bandit_round(ds, t, a, cfg.encoding).observed_loss;
      act.learn({x, a, loss, d[a]}, d);
      for (Action b = 0; b < 4; ++b) {
        if (d[b] == 0.0) {
          ++restricted;
          CHECK(act.last_costs()[b] == c + 1.0);
        } else if (b != a) {
          CHECK(act.last_costs()[b] == 0.0);
        }
      }
    }
    INFO("offset " << c);
    CHECK(restricted > 0);
  }
}

TEST_CASE("run handles degenerate inputs") {
  Dataset empty;
  empty.num_actions = 3;
  for (Algorithm a : kAll) CHECK(run(empty, config(a)).size() == 0);

  Dataset single = parse_dataset("K:1\n1 | 1:0.5\n1 | 2:1\n1 | 1:2\n");
  REQUIRE(single.num_actions == 1);
  for (Algorithm a : kAll) {
    const Trace tr = run(single, config(a));
    REQUIRE(tr.size() == 3);
    for (const auto& e : tr.rounds) {
      CHECK(e.distribution == std::vector<double>{1.0});
      CHECK(e.action == 0);
      CHECK(e.true_cost == 0.0);
    }
  }
}

TEST_CASE("every explorer emits valid distributions and deterministic traces") {
  const Dataset ds = make_linear_dataset(5, 4, 300, 51);
  const Dataset adf = parse_dataset(
      "shared | 1:0.5\n0 | 10:1\n1 | 11:1\n1 | 12:1\n\n"
      "shared | 2\n1 | 10\n0 | 11\n1 | 12:0.5\n\n"
      "shared | 1:-1\n1 | 10\n1 | 11\n0 | 12\n");
  for (Algorithm algo : kAll) {
    for (const Dataset* d : {&ds, &adf}) {
      for (double c : {0.0, -1.0, 9.0}) {
        auto cfg = config(algo);
        cfg.encoding = Encoding{c};
        cfg.baseline = c != 0.0;
        const Trace a = run(*d, cfg);
        const Trace b = run(*d, cfg);
        CHECK(same_trace(a, b));
        REQUIRE(a.size() == d->size());
        for (std::size_t t = 0; t < a.size(); ++t) {
          const auto& e = a.rounds[t];
          CHECK(e.round == t + 1);
          CHECK_NOTHROW(ActionDistribution{e.distribution}.validate());
          CHECK(e.probability == e.distribution[e.action]);
          CHECK(e.probability > 0.0);
          CHECK(e.observed_loss - e.true_cost == c);
        }
        cfg.seed = 4;
        if (algo != Algorithm::Greedy && d == &ds) CHECK_FALSE(same_trace(a, run(*d, cfg)));
      }
    }
  }
}
