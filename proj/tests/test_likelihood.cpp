#include <doctest.h>

#include <cmath>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "mahp/error.hpp"
#include "mahp/likelihood.hpp"
#include "mahp/rng.hpp"
#include "mahp/simulate.hpp"

using namespace mahp;

namespace {

EventSequence toy() {
  EventSequence s;
  s.horizon = 2.0;
  s.num_entities = 1;
  s.events = {{0.0, 0}, {1.0, 0}};
  return s;
}

ModelParams toy_params() {
  ModelParams p(1, 1, KernelBasis::exponential({1.0}));
  p.mu(0, 0) = 0.5;
  p.impact(0, 0, 0) = 0.4;
  return p;
}

// -log L by quadrature of the intensity between events plus the log terms.
double quadrature_nll(const ModelParams& p, const EventSequence& seq, std::size_t agent) {
  using boost::math::quadrature::gauss_kronrod;
  double total = 0.0;
  double prev = 0.0;
  std::vector<Event> history;
  auto compensator = [&](double a, double b) {
    double sum = 0.0;
    for (std::size_t c = 0; c < p.num_entities(); ++c) {
      auto f = [&](double t) { return t <= a ? 0.0 : intensity(p, agent, c, t, history, 1u << 30); };
      if (b > a) sum += gauss_kronrod<double, 31>::integrate(f, a, b, 10, 1e-13);
    }
    return sum;
  };
  for (const auto& e : seq.events) {
    total += compensator(prev, e.time);
    std::vector<Event> before;
    for (const auto& h : history) {
      if (h.time < e.time) before.push_back(h);
    }
    total -= std::log(intensity(p, agent, e.entity, e.time, before, 1u << 30));
    history.push_back(e);
    prev = e.time;
  }
  total += compensator(prev, seq.horizon);
  return total;
}

}  // namespace

TEST_CASE("first event has an empty endogenous point feature") {
  const auto f = featurize(toy_params(), toy(), 0, 50);
  CHECK(f.point.nnz() == 1);
  CHECK(f.point.at(0) == 1.0);
  // zero-length first interval at t = 0
  CHECK(f.interval.at(0) == 0.0);
}

TEST_CASE("interval feature of the two-event toy") {
  const auto p = toy_params();
  const auto f = featurize(p, toy(), 1, 50);
  CHECK(f.interval.at(p.impact_index(0, 0, 0)) == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-15));
  CHECK(f.interval.at(p.impact_index(0, 0, 0)) == doctest::Approx(0.632121).epsilon(1e-6));
  CHECK(f.interval.at(p.mu_index(0, 0)) == 1.0);
  CHECK(f.point.at(p.impact_index(0, 0, 0)) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
}

TEST_CASE("U block of X holds the interval length for every entity") {
  ModelParams shape(4, 3, KernelBasis::exponential({1.0}));
  EventSequence s;
  s.agent_id = 2;
  s.horizon = 5.0;
  s.num_entities = 4;
  s.events = {{0.4, 1}, {1.1, 3}};
  const auto f = featurize(shape, s, 1, 50);
  std::size_t u_entries = 0;
  for (const auto& e : f.interval.entries) {
    if (e.index < shape.exogenous_size()) {
      ++u_entries;
      CHECK(e.index % 3 == 2);
      CHECK(e.value == doctest::Approx(0.7).epsilon(1e-15));
    }
  }
  CHECK(u_entries == 4);
  CHECK(f.point.at(shape.mu_index(3, 2)) == 1.0);
  CHECK_THROWS_AS(featurize(shape, s, 2, 50), Error);
}

TEST_CASE("point feature reproduces the intensity") {
  const auto basis = KernelBasis::exponential({0.7, 3.0});
  SimConfig cfg;
  cfg.num_entities = 5;
  cfg.num_agents = 2;
  cfg.horizon = 30.0;
  cfg.basis = basis;
  cfg.spectral_norm = 0.5;
  cfg.seed = 4;
  const auto sim = simulate_dataset(cfg);
  for (const auto& seq : sim.data.sequences) {
    for (std::size_t i = 0; i < seq.size(); ++i) {
      for (std::size_t J : {std::size_t{3}, std::size_t{1000}}) {
        const auto f = featurize(sim.truth, seq, i, J);
        const std::span<const Event> hist(seq.events.data(), i);
        std::vector<Event> strict;
        for (const auto& e : hist) {
          if (e.time < seq.events[i].time) strict.push_back(e);
        }
        const double lam = intensity(sim.truth, seq.agent_id, seq.events[i].entity, seq.events[i].time, strict, J);
        CHECK(f.point.dot(sim.truth.theta()) == doctest::Approx(lam).epsilon(1e-12));
        for (const auto& e : f.point.entries) CHECK(e.value >= 0.0);
        for (const auto& e : f.interval.entries) CHECK(e.value >= 0.0);
        CHECK(f.point.nnz() <= 1 + J * basis.size());
      }
    }
  }
}

TEST_CASE("nll_event hand-evaluated examples") {
  ModelParams p(2, 1, KernelBasis::exponential({1.0}));
  p.mu(0, 0) = 0.5;
  p.mu(1, 0) = 0.5;
  EventSequence s;
  s.horizon = 2.0;
  s.num_entities = 2;
  s.events = {{1.0, 0}};
  CHECK(nll_event(p, featurize(p, s, 0, 50)) == doctest::Approx(1.0 - std::log(0.5)).epsilon(1e-14));
  CHECK(nll_event(p, featurize(p, s, 0, 50)) == doctest::Approx(1.693147).epsilon(1e-6));

  const auto q = toy_params();
  const double want = 0.5 + 0.4 * (1.0 - std::exp(-1.0)) - std::log(0.5 + 0.4 * std::exp(-1.0));
  CHECK(nll_event(q, featurize(q, toy(), 1, 50)) == doctest::Approx(want).epsilon(1e-14));
  CHECK(nll_event(q, featurize(q, toy(), 1, 50)) == doctest::Approx(1.188023).epsilon(1e-6));
}

TEST_CASE("clamp applies inside the log") {
  ModelParams p(1, 1, KernelBasis::exponential({1.0}));
  const auto f = featurize(p, toy(), 1, 50);
  CHECK(nll_event(p, f, 1e-3) == doctest::Approx(-std::log(1e-3)));
}

TEST_CASE("nll_total with the tail term equals the quadrature log-likelihood") {
  SimConfig cfg;
  cfg.num_entities = 3;
  cfg.num_agents = 3;
  cfg.horizon = 15.0;
  cfg.basis = KernelBasis::gaussian({{0.5, 0.4}, {2.0, 1.0}});
  cfg.spectral_norm = 0.4;
  cfg.max_events = 40;
  cfg.seed = 21;
  const auto sim = simulate_dataset(cfg);
  LikelihoodOptions opt;
  opt.history_cap = 100000;
  opt.include_tail = true;
  opt.intensity_floor = 1e-300;
  double oracle = 0.0;
  for (const auto& seq : sim.data.sequences) oracle += quadrature_nll(sim.truth, seq, seq.agent_id);
  CHECK(nll_total(sim.truth, sim.data, opt) == doctest::Approx(oracle).epsilon(1e-9));
}

TEST_CASE("nll_total is additive and matches single-event sums") {
  const auto p = toy_params();
  Dataset one;
  one.num_entities = 1;
  one.horizon = 2.0;
  EventSequence s;
  s.horizon = 2.0;
  s.num_entities = 1;
  s.events = {{0.3, 0}};
  one.sequences = {s};
  CHECK(nll_total(p, one) == doctest::Approx(nll_event(p, featurize(p, s, 0, 50))));

  ModelParams p2(1, 2, p.basis());
  p2.mu(0, 0) = 0.5;
  p2.mu(0, 1) = 0.2;
  p2.impact(0, 0, 0) = 0.4;
  Dataset two = one;
  EventSequence t = toy();
  t.agent_id = 1;
  two.sequences.push_back(t);
  Dataset only_second = two;
  only_second.sequences[0].events.clear();
  Dataset only_first = two;
  only_first.sequences[1].events.clear();
  CHECK(nll_total(p2, two) == doctest::Approx(nll_total(p2, only_first) + nll_total(p2, only_second)));

  Dataset empty;
  empty.num_entities = 1;
  empty.horizon = 1.0;
  CHECK_THROWS_AS(nll_total(p, empty), Error);
}

TEST_CASE("ground truth beats a 10% inflated impact tensor on the synthetic protocol") {
  int wins = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    SimConfig cfg;
    cfg.seed = seed;
    const auto sim = simulate_dataset(cfg);
    ModelParams perturbed = sim.truth;
    for (double& a : perturbed.impacts()) a *= 1.1;
    if (nll_total(sim.truth, sim.data) <= nll_total(perturbed, sim.data)) ++wins;
  }
  CHECK(wins >= 9);
}
