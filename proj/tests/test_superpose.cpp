#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include <Eigen/Dense>
#include <boost/multiprecision/cpp_dec_float.hpp>

#include "mahp/error.hpp"
#include "mahp/optimize.hpp"
#include "mahp/rng.hpp"
#include "mahp/simulate.hpp"
#include "mahp/superpose.hpp"

using namespace mahp;

namespace {

EventSequence seq_of(std::vector<Event> events, double T = 10.0, std::size_t C = 3) {
  EventSequence s;
  s.horizon = T;
  s.num_entities = C;
  s.events = std::move(events);
  return s;
}

using Big = boost::multiprecision::cpp_dec_float_50;

Big oracle_rhs(const RiskBoundInputs& in) {
  const Big logI = boost::multiprecision::log(Big(in.total_events));
  const Big log2d = boost::multiprecision::log(Big(2) / Big(in.delta));
  const Big cl = Big(in.num_entities) * Big(in.num_kernels);
  const Big num = (Big(in.num_agents) + cl) * logI + log2d;
  const Big den = (Big(in.num_folders) + cl) * logI + log2d;
  return (Big(in.impact_bound) + Big(in.exogenous_bound)) * num / den - Big(in.impact_bound);
}

void check_plan(const SuperpositionPlan& plan, std::size_t M, std::size_t Mp) {
  CHECK_NOTHROW(plan.validate());
  CHECK(plan.num_sources == M);
  CHECK(plan.num_folders() == Mp);
  CHECK(plan.max_folder_size() == (M + Mp - 1) / Mp);
  std::set<std::size_t> seen;
  for (const auto& f : plan.folders) {
    for (std::size_t s : f) CHECK(seen.insert(s).second);
  }
  CHECK(seen.size() == M);
}

}  // namespace

TEST_CASE("merge sorts the union and relabels") {
  const auto a = seq_of({{1.0, 0}});
  const auto b = seq_of({{0.5, 1}});
  const auto m = merge_sequences(std::vector<EventSequence>{a, b}, 7);
  CHECK(m.agent_id == 7);
  REQUIRE(m.size() == 2);
  CHECK(m.events[0] == Event{0.5, 1});
  CHECK(m.events[1] == Event{1.0, 0});

  const auto empty = seq_of({});
  const auto same = merge_sequences(std::vector<EventSequence>{empty, b}, 3);
  CHECK(same.events == b.events);
}

TEST_CASE("merge breaks timestamp ties by source order then entity") {
  const auto a = seq_of({{1.0, 2}});
  const auto b = seq_of({{1.0, 0}, {1.0, 1}});
  const auto m = merge_sequences(std::vector<EventSequence>{a, b}, 0);
  REQUIRE(m.size() == 3);
  CHECK(m.events[0].entity == 2);
  CHECK(m.events[1].entity == 0);
  CHECK(m.events[2].entity == 1);
}

TEST_CASE("merge rejects mismatched windows or entity spaces") {
  const auto a = seq_of({{1.0, 0}}, 10.0, 3);
  CHECK_THROWS_AS(merge_sequences(std::vector<EventSequence>{a, seq_of({}, 11.0, 3)}, 0), Error);
  CHECK_THROWS_AS(merge_sequences(std::vector<EventSequence>{a, seq_of({}, 10.0, 4)}, 0), Error);
}

TEST_CASE("merged counting process is the sum of its constituents at every event time") {
  SimConfig cfg;
  cfg.num_entities = 5;
  cfg.num_agents = 12;
  cfg.seed = 4;
  const auto sim = simulate_dataset(cfg);
  const auto merged = merge_sequences(sim.data.sequences, 0);
  std::size_t total = 0;
  for (const auto& s : sim.data.sequences) total += s.size();
  CHECK(merged.size() == total);
  CHECK_NOTHROW(merged.validate());
  for (const auto& e : merged.events) {
    auto sum = std::vector<std::size_t>(5, 0);
    for (const auto& s : sim.data.sequences) {
      const auto n = s.counts_until(e.time);
      for (std::size_t c = 0; c < 5; ++c) sum[c] += n[c];
    }
    CHECK(merged.counts_until(e.time) == sum);
  }
}

TEST_CASE("exogenous estimates are count ratios and add under merging") {
  CHECK(estimate_exogenous(seq_of({}, 50.0)) == std::vector<double>{0.0, 0.0, 0.0});
  std::vector<Event> ev;
  for (int i = 0; i < 10; ++i) ev.push_back({1.0 + i, 1});
  const auto s = seq_of(ev, 50.0);
  CHECK(estimate_exogenous(s)[1] == doctest::Approx(0.2).epsilon(1e-15));

  const auto t = seq_of({{0.5, 0}, {2.5, 1}}, 50.0);
  const auto m = merge_sequences(std::vector<EventSequence>{s, t}, 0);
  const auto em = estimate_exogenous(m);
  const auto es = estimate_exogenous(s);
  const auto et = estimate_exogenous(t);
  for (std::size_t c = 0; c < 3; ++c) CHECK(em[c] == doctest::Approx(es[c] + et[c]).epsilon(1e-15));
}

TEST_CASE("reweighting follows exp(-score) and zeroes stay zero") {
  const auto p = reweight_distribution(std::vector<double>{0.5, 0.5, 0.0}, std::vector<double>{0.0, 1.0, 0.0});
  const double z = 1.0 + std::exp(-1.0);
  CHECK(p[0] == doctest::Approx(1.0 / z).epsilon(1e-15));
  CHECK(p[1] == doctest::Approx(std::exp(-1.0) / z).epsilon(1e-15));
  CHECK(p[1] / p[0] == doctest::Approx(0.3679).epsilon(1e-4));
  CHECK(p[2] == 0.0);

  const auto flat = reweight_distribution(std::vector<double>{0.25, 0.25, 0.5}, std::vector<double>{0.0, 0.0, 0.0});
  CHECK(flat == std::vector<double>{0.25, 0.25, 0.5});
}

TEST_CASE("folder sizes are balanced with the ceiling size first") {
  const auto sizes = folder_sizes(100, 30);
  CHECK(sizes.size() == 30);
  CHECK(*std::max_element(sizes.begin(), sizes.end()) == 4);
  CHECK(*std::min_element(sizes.begin(), sizes.end()) == 3);
  std::size_t sum = 0;
  for (std::size_t s : sizes) sum += s;
  CHECK(sum == 100);
  CHECK(std::is_sorted(sizes.rbegin(), sizes.rend()));
  CHECK_THROWS_AS(folder_sizes(3, 4), Error);
  CHECK_THROWS_AS(folder_sizes(3, 0), Error);
}

TEST_CASE("random and diversity plans satisfy the partition invariants") {
  for (auto [M, Mp] : std::vector<std::pair<std::size_t, std::size_t>>{{100, 30}, {100, 50}, {100, 25}, {7, 1}, {9, 9}}) {
    check_plan(random_plan(M, Mp, 3), M, Mp);
  }
  SimConfig cfg;
  cfg.num_entities = 6;
  cfg.num_agents = 20;
  cfg.seed = 8;
  const auto sim = simulate_dataset(cfg);
  for (std::size_t Mp : {1u, 3u, 7u, 10u, 20u}) {
    const auto sup = diversity_plan(sim.data, Mp, 5);
    check_plan(sup.plan, 20, Mp);
    CHECK(sup.merged.num_agents() == Mp);
    const auto assign = sup.plan.assignment();
    for (std::size_t f = 0; f < Mp; ++f) {
      std::vector<EventSequence> parts;
      for (std::size_t s : sup.plan.folders[f]) parts.push_back(sim.data.sequences[s]);
      CHECK(sup.merged.sequences[f].events == merge_sequences(parts, f).events);
      for (std::size_t s : sup.plan.folders[f]) CHECK(assign[s] == f);
    }
  }
  CHECK_THROWS_AS(diversity_plan(sim.data, 21, 1), Error);
  CHECK(diversity_plan(sim.data, 4, 9).plan == diversity_plan(sim.data, 4, 9).plan);
}

TEST_CASE("a plan with M' = M keeps every sequence on its own") {
  SimConfig cfg;
  cfg.num_entities = 3;
  cfg.num_agents = 8;
  cfg.seed = 2;
  const auto sim = simulate_dataset(cfg);
  const auto sup = diversity_plan(sim.data, 8, 1);
  for (std::size_t f = 0; f < 8; ++f) {
    REQUIRE(sup.plan.folders[f].size() == 1);
    CHECK(sup.merged.sequences[f].events == sim.data.sequences[sup.plan.folders[f][0]].events);
  }
}

TEST_CASE("diversity plan prefers sources orthogonal to the folder") {
  // Sources 0..3 live on entity 0, sources 4..7 on entity 1. With strongly
  // separated estimates the first folder must mix the groups; later folders
  // inherit the accumulated weights, so only a majority is required there.
  std::vector<double> est(2 * 8, 0.0);
  for (std::size_t m = 0; m < 8; ++m) est[(m < 4 ? 0 : 1) * 8 + m] = 5.0;
  Dataset data;
  data.num_entities = 2;
  data.horizon = 1.0;
  for (std::size_t m = 0; m < 8; ++m) {
    EventSequence s;
    s.agent_id = m;
    s.horizon = 1.0;
    s.num_entities = 2;
    data.sequences.push_back(s);
  }
  int mixed = 0;
  int folders = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto sup = diversity_plan(data, 4, seed, est);
    const auto& first = sup.plan.folders[0];
    CHECK((first[0] < 4) != (first[1] < 4));
    for (const auto& f : sup.plan.folders) {
      ++folders;
      if ((f[0] < 4) != (f[1] < 4)) ++mixed;
    }
  }
  // a random pairing mixes 4/7 of folders on average
  CHECK(mixed > folders * 4 / 7);
}

TEST_CASE("superposed exogenous matrix is U P") {
  ModelParams p(2, 4, KernelBasis::exponential({1.0}));
  p.mu(0, 0) = 1.0;
  p.mu(1, 1) = 2.0;
  p.mu(0, 2) = 0.5;
  p.mu(1, 3) = 0.25;
  p.impact(0, 1, 0) = 0.3;
  SuperpositionPlan plan{4, {{0, 1}, {2, 3}}};
  const auto q = superpose_params(p, plan);
  CHECK(q.num_agents() == 2);
  CHECK(q.mu(0, 0) == 1.0);
  CHECK(q.mu(1, 0) == 2.0);
  CHECK(q.mu(0, 1) == 0.5);
  CHECK(q.mu(1, 1) == 0.25);
  CHECK(q.impact(0, 1, 0) == 0.3);

  // orthogonal pairs keep the squared Frobenius norm
  double before = 0.0;
  double after = 0.0;
  for (double u : p.exogenous()) before += u * u;
  for (double u : q.exogenous()) after += u * u;
  CHECK(after == doctest::Approx(before).epsilon(1e-15));

  // in general ||U'||_F^2 <= (sum_m ||mu^m||)^2
  Rng rng = make_stream(1, StreamTag::parameters);
  for (int trial = 0; trial < 50; ++trial) {
    ModelParams r(3, 6, KernelBasis::exponential({1.0}));
    for (double& u : r.exogenous()) u = uniform01(rng);
    const auto rq = superpose_params(r, random_plan(6, 1 + trial % 6, trial));
    double lhs = 0.0;
    for (double u : rq.exogenous()) lhs += u * u;
    double col_sum = 0.0;
    for (std::size_t m = 0; m < 6; ++m) {
      double n2 = 0.0;
      for (std::size_t c = 0; c < 3; ++c) n2 += r.mu(c, m) * r.mu(c, m);
      col_sum += std::sqrt(n2);
    }
    CHECK(lhs <= col_sum * col_sum * (1.0 + 1e-12));
  }
}

TEST_CASE("tightening condition matches a 50-digit oracle") {
  Rng rng = make_stream(17, StreamTag::evaluation);
  for (int trial = 0; trial < 1000; ++trial) {
    RiskBoundInputs in;
    in.exogenous_bound = 0.01 + 100.0 * uniform01(rng);
    in.impact_bound = 0.01 + 100.0 * uniform01(rng);
    in.superposed_exogenous_bound = 0.01 + 200.0 * uniform01(rng);
    in.num_agents = 2 + rng() % 1000;
    in.num_folders = 1 + rng() % in.num_agents;
    in.num_entities = 1 + rng() % 100;
    in.num_kernels = 1 + rng() % 5;
    in.total_events = 2.0 + std::floor(1e7 * uniform01(rng));
    in.delta = 1e-4 + 0.49 * uniform01(rng);
    const auto got = check_tightening(in);
    const double want = static_cast<double>(oracle_rhs(in));
    CHECK(std::abs(got.rhs - want) <= 1e-12 * std::abs(want));
    CHECK(got.lhs == in.superposed_exogenous_bound);
    CHECK(got.holds == (in.superposed_exogenous_bound <= got.rhs));
  }
}

TEST_CASE("orthogonal regime always tightens and M' = M is an equality") {
  Rng rng = make_stream(18, StreamTag::evaluation);
  for (int trial = 0; trial < 1000; ++trial) {
    RiskBoundInputs in;
    in.exogenous_bound = 0.01 + 10.0 * uniform01(rng);
    in.impact_bound = 0.01 + 10.0 * uniform01(rng);
    in.superposed_exogenous_bound = in.exogenous_bound;
    in.num_agents = 2 + rng() % 500;
    in.num_folders = 1 + rng() % (in.num_agents - 1);
    in.num_entities = 1 + rng() % 50;
    in.num_kernels = 1 + rng() % 3;
    in.total_events = 2.0 + std::floor(1e6 * uniform01(rng));
    in.delta = 1e-3 + 0.49 * uniform01(rng);
    const auto r = check_tightening(in);
    CHECK(r.holds);
    CHECK(r.rhs > in.exogenous_bound);
  }
  RiskBoundInputs eq;
  eq.exogenous_bound = 1.0;
  eq.impact_bound = 1.0;
  eq.superposed_exogenous_bound = 1.0;
  eq.num_agents = 10;
  eq.num_folders = 10;
  eq.num_entities = 3;
  eq.num_kernels = 1;
  eq.total_events = 1000.0;
  const auto r = check_tightening(eq);
  CHECK(r.rhs == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(r.holds);
}

TEST_CASE("worked tightening example") {
  RiskBoundInputs in;
  in.exogenous_bound = 1.0;
  in.impact_bound = 1.0;
  in.superposed_exogenous_bound = 1.5;
  in.num_agents = 100;
  in.num_folders = 50;
  in.num_entities = 20;
  in.num_kernels = 1;
  in.total_events = 1e4;
  in.delta = 0.1;
  const auto r = check_tightening(in);
  CHECK(r.holds);
  CHECK(r.rhs == doctest::Approx(static_cast<double>(oracle_rhs(in))).epsilon(1e-14));
  CHECK(r.rhs == doctest::Approx(2.42).epsilon(0.01));
}

TEST_CASE("tightening inputs are validated") {
  RiskBoundInputs in;
  in.exogenous_bound = 1.0;
  in.impact_bound = 1.0;
  in.superposed_exogenous_bound = 1.0;
  in.num_agents = 10;
  in.num_folders = 5;
  in.num_entities = 2;
  in.num_kernels = 1;
  in.total_events = 100.0;
  in.delta = 0.5;
  CHECK_THROWS_AS(check_tightening(in), Error);
  in.delta = 0.1;
  in.total_events = 1.0;
  CHECK_THROWS_AS(check_tightening(in), Error);
  in.total_events = 100.0;
  in.num_folders = 0;
  CHECK_THROWS_AS(check_tightening(in), Error);
}

TEST_CASE("default bound inputs scale the squared norms by 1.1") {
  ModelParams p(2, 4, KernelBasis::exponential({1.0}));
  p.mu(0, 0) = 1.0;
  p.mu(0, 1) = 1.0;
  p.impact(1, 1, 0) = 2.0;
  SuperpositionPlan plan{4, {{0, 1}, {2, 3}}};
  const auto in = default_bound_inputs(p, plan, 500.0);
  CHECK(in.exogenous_bound == doctest::Approx(2.2));
  CHECK(in.impact_bound == doctest::Approx(4.4));
  CHECK(in.superposed_exogenous_bound == doctest::Approx(4.4));
  CHECK(in.num_agents == 4);
  CHECK(in.num_folders == 2);
  CHECK(in.total_events == 500.0);
}

TEST_CASE("orthogonality Gram matches Eigen") {
  std::vector<double> eye{1, 0, 0, 0, 1, 0, 0, 0, 1};
  CHECK(orthogonality_gram(eye, 3, 3) == eye);

  Rng rng = make_stream(3, StreamTag::parameters);
  const std::size_t C = 5;
  const std::size_t M = 7;
  std::vector<double> u(C * M);
  for (double& v : u) v = uniform01(rng);
  // duplicate a column to make the Gram rank deficient
  for (std::size_t c = 0; c < C; ++c) u[c * M + 6] = u[c * M + 2];
  const auto g = orthogonality_gram(u, C, M);
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> U(
      u.data(), static_cast<Eigen::Index>(C), static_cast<Eigen::Index>(M));
  const Eigen::MatrixXd want = U.transpose() * U;
  Eigen::MatrixXd got(M, M);
  for (std::size_t i = 0; i < M; ++i) {
    for (std::size_t j = 0; j < M; ++j) {
      got(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = g[i * M + j];
      CHECK(g[i * M + j] == doctest::Approx(want(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))).epsilon(1e-14));
      CHECK(g[i * M + j] == g[j * M + i]);
    }
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(got);
  CHECK(eig.eigenvalues().minCoeff() >= -1e-12);
  CHECK(Eigen::FullPivLU<Eigen::MatrixXd>(got).rank() < static_cast<Eigen::Index>(M));
}

TEST_CASE("a fit on merged one-entity data recovers the summed rate and shared impact") {
  // Small version of the closure check; the acceptance run uses 20 replicates.
  double mu_ratio = 0.0;
  double a_ratio = 0.0;
  const int reps = 4;
  for (int r = 0; r < reps; ++r) {
    SimConfig cfg;
    cfg.num_entities = 1;
    cfg.num_agents = 10;
    cfg.horizon = 300.0;
    cfg.max_events = 100000;
    std::vector<double> mu(10);
    for (std::size_t m = 0; m < 10; ++m) mu[m] = 0.05 + 0.01 * static_cast<double>(m);
    cfg.exogenous = mu;
    cfg.impacts = std::vector<double>{0.5};
    cfg.seed = 100 + static_cast<std::uint64_t>(r);
    const auto sim = simulate_dataset(cfg);
    Dataset merged;
    merged.num_entities = 1;
    merged.horizon = cfg.horizon;
    merged.sequences.push_back(merge_sequences(sim.data.sequences, 0));
    OptConfig opt;
    opt.batch_size = 8;
    opt.learning_rate = 2e-3;
    opt.epochs = 200;
    opt.tol = 0.0;
    opt.seed = static_cast<std::uint64_t>(r);
    const auto fit = stoc_fit(merged, opt, initial_params(merged, sim.truth.basis(), 1));
    double total = 0.0;
    for (double v : mu) total += v;
    mu_ratio += fit.params.mu(0, 0) / total;
    a_ratio += fit.params.impact(0, 0, 0) / 0.5;
  }
  CHECK(std::abs(mu_ratio / reps - 1.0) < 0.1);
  CHECK(std::abs(a_ratio / reps - 1.0) < 0.15);
}
