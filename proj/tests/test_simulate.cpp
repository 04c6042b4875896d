#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "mahp/error.hpp"
#include "mahp/simulate.hpp"

using namespace mahp;

namespace {

double svd_norm(std::span<const double> impacts, std::size_t C, std::size_t L) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(C), static_cast<Eigen::Index>(C));
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t d = 0; d < C; ++d) {
      for (std::size_t l = 0; l < L; ++l) m(c, d) += impacts[(c * C + d) * L + l];
    }
  }
  return Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues()(0);
}

ModelParams scalar_model(double mu, double a, double w) {
  ModelParams p(1, 1, KernelBasis::exponential({w}));
  p.mu(0, 0) = mu;
  p.impact(0, 0, 0) = a;
  return p;
}

}  // namespace

TEST_CASE("default configuration: U range, spectral norm and caps") {
  SimConfig cfg;
  cfg.seed = 3;
  const auto sim = simulate_dataset(cfg);
  CHECK(sim.data.num_agents() == 100);
  for (double u : sim.truth.exogenous()) {
    CHECK(u >= 0.0);
    CHECK(u <= 0.05);
  }
  CHECK(std::abs(svd_norm(sim.truth.impacts(), 20, 1) - 0.7) <= 1e-6);
  for (const auto& seq : sim.data.sequences) {
    CHECK(seq.size() <= 100);
    CHECK_NOTHROW(seq.validate());
  }
  CHECK(spectral_radius(branching_matrix(sim.truth), 20) < 1.0);
}

TEST_CASE("spectral norm by power iteration matches SVD for several kernels") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    SimConfig cfg;
    cfg.num_entities = 7;
    cfg.num_agents = 2;
    cfg.basis = KernelBasis::exponential({1.0, 3.0});
    cfg.spectral_norm = 0.45;
    cfg.seed = seed;
    const auto p = generate_params(cfg);
    CHECK(std::abs(svd_norm(p.impacts(), 7, 2) - 0.45) <= 1e-6);
  }
}

TEST_CASE("rho = 0 gives A = 0 and rho >= 1 with one kernel is rejected") {
  SimConfig cfg;
  cfg.num_entities = 4;
  cfg.num_agents = 2;
  cfg.spectral_norm = 0.0;
  const auto p = generate_params(cfg);
  for (double a : p.impacts()) CHECK(a == 0.0);
  cfg.spectral_norm = 1.0;
  CHECK_THROWS_AS(generate_params(cfg), Error);
}

TEST_CASE("unstable explicit parameters are refused") {
  const auto p = scalar_model(0.5, 1.5, 1.0);
  Rng rng = make_stream(1, StreamTag::agent);
  try {
    simulate_sequence(p, 0, 10.0, 100, rng);
    FAIL("expected a stationarity error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::nonstationary);
  }
}

TEST_CASE("same seed reproduces, different agents differ") {
  SimConfig cfg;
  cfg.num_entities = 5;
  cfg.num_agents = 4;
  cfg.seed = 77;
  const auto a = simulate_dataset(cfg);
  const auto b = simulate_dataset(cfg);
  CHECK(a.data == b.data);
  CHECK(a.truth == b.truth);
  CHECK(a.data.sequences[0].events != a.data.sequences[1].events);

  // an agent's stream does not depend on how many agents are simulated
  ModelParams two = a.truth.with_agents(2);
  ModelParams four = a.truth;
  for (std::size_t c = 0; c < 5; ++c) {
    for (std::size_t m = 0; m < 2; ++m) two.mu(c, m) = four.mu(c, m);
  }
  const auto x = simulate_agents(two, cfg.horizon, cfg.max_events, 5);
  const auto y = simulate_agents(four, cfg.horizon, cfg.max_events, 5);
  CHECK(x.sequences[1].events == y.sequences[1].events);
}

TEST_CASE("Poisson degeneracy: counts match the Poisson mean") {
  const auto p = scalar_model(0.5, 0.0, 1.0);
  const int reps = 1000;
  double sum = 0.0;
  std::vector<double> times;
  for (int r = 0; r < reps; ++r) {
    Rng rng = make_stream(10, StreamTag::agent, static_cast<std::uint64_t>(r));
    const auto seq = simulate_sequence(p, 0, 50.0, 100000, rng);
    sum += static_cast<double>(seq.size());
    for (const auto& e : seq.events) times.push_back(e.time);
  }
  const double mean = sum / reps;
  CHECK(std::abs(mean - 25.0) <= 3.0 * std::sqrt(25.0 / reps));
  CHECK(std::abs(mean - 25.0) <= 1.0);

  // KS against uniform arrival times on [0, T]
  std::sort(times.begin(), times.end());
  double d = 0.0;
  const auto n = static_cast<double>(times.size());
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double cdf = times[i] / 50.0;
    d = std::max({d, std::abs(cdf - i / n), std::abs(cdf - (i + 1) / n)});
  }
  CHECK(d < 1.63 / std::sqrt(n));
}

TEST_CASE("one-dimensional cluster process reaches the stationary rate") {
  const auto p = scalar_model(0.5, 0.4, 1.0);
  const int reps = 1000;
  double rate = 0.0;
  for (int r = 0; r < reps; ++r) {
    Rng rng = make_stream(12, StreamTag::agent, static_cast<std::uint64_t>(r));
    rate += static_cast<double>(simulate_sequence(p, 0, 50.0, 100000, rng).size()) / 50.0;
  }
  rate /= reps;
  CHECK(std::abs(rate - 0.5 / (1.0 - 0.4)) <= 0.05 * 0.5 / (1.0 - 0.4));
}

TEST_CASE("offspring counts are Poisson given their parents") {
  // Entity 0 is a pure immigrant stream; entity 1 has no immigrants and no
  // self-excitation, so each of its events is a direct child of an entity-0 event.
  // Given the parents, the child count is Poisson with mean sum_i a G(T - t_i).
  const double a = 1.2;
  const double w = 2.0;
  const double T = 10.0;
  ModelParams p(2, 1, KernelBasis::exponential({w}));
  p.mu(0, 0) = 0.3;
  p.impact(1, 0, 0) = a;
  const int reps = 4000;
  double resid = 0.0;
  double var = 0.0;
  double dispersion = 0.0;
  int used = 0;
  for (int r = 0; r < reps; ++r) {
    Rng rng = make_stream(98, StreamTag::agent, static_cast<std::uint64_t>(r));
    const auto seq = simulate_sequence(p, 0, T, 100000, rng);
    double mean = 0.0;
    double children = 0.0;
    for (const auto& e : seq.events) {
      if (e.entity == 0) {
        mean += a * (1.0 - std::exp(-w * (T - e.time))) / w;
      } else {
        children += 1.0;
      }
    }
    if (mean <= 0.0) continue;
    ++used;
    resid += children - mean;
    var += mean;
    dispersion += (children - mean) * (children - mean) / mean;
  }
  // mean of children matches the conditional Poisson mean
  CHECK(std::abs(resid) / std::sqrt(var) < 3.0);
  // Pearson dispersion is about 1 for Poisson counts
  CHECK(std::abs(dispersion / used - 1.0) < 0.1);
}
