#include <doctest.h>

#include <cmath>
#include <set>
#include <string>

#include "mahp/error.hpp"
#include "mahp/pipeline.hpp"
#include "mahp/simulate.hpp"

using namespace mahp;

namespace {

SimulatedData sim_small(std::uint64_t seed) {
  SimConfig cfg;
  cfg.num_entities = 4;
  cfg.num_agents = 8;
  cfg.horizon = 30.0;
  cfg.max_events = 40;
  cfg.seed = seed;
  return simulate_dataset(cfg);
}

OptConfig quick_opt() {
  OptConfig o;
  o.learning_rate = 1e-3;
  o.batch_size = 16;
  o.epochs = 3;
  o.tol = 0.0;
  o.seed = 5;
  return o;
}

}  // namespace

TEST_CASE("strategy names") {
  CHECK(parse_strategy("batch") == Strategy::batch);
  CHECK(parse_strategy("StocOpt") == Strategy::stoc);
  CHECK(parse_strategy("StocOpt+Augment") == Strategy::augment);
  CHECK(parse_strategy("superpose") == Strategy::superpose);
  CHECK(std::string(to_string(Strategy::augment)) == "augment");
  try {
    parse_strategy("admm");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::invalid_argument);
  }
}

TEST_CASE("folder count comes from M' or from K") {
  PipelineConfig cfg;
  cfg.folder_size = 4;
  CHECK(cfg.folder_count(100) == 25);
  CHECK(cfg.folder_count(10) == 3);
  cfg.folders = 7;
  CHECK(cfg.folder_count(100) == 7);
  cfg.outer_rounds = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("stoc strategy is plain stoc_fit") {
  const auto sim = sim_small(1);
  const auto init = initial_params(sim.data, sim.truth.basis(), 1);
  PipelineConfig cfg;
  cfg.opt = quick_opt();
  cfg.strategy = Strategy::stoc;
  const auto a = run_strategy(sim.data, cfg, init);
  const auto b = stoc_fit(sim.data, cfg.opt, init);
  CHECK(a.params == b.params);
  CHECK(a.epochs.size() == b.epochs.size());
}

TEST_CASE("superposition with M' = M and one round equals stoc_fit bit for bit") {
  const auto sim = sim_small(2);
  const auto init = initial_params(sim.data, sim.truth.basis(), 2);
  PipelineConfig cfg;
  cfg.opt = quick_opt();
  cfg.strategy = Strategy::superpose;
  cfg.folders = 8;
  cfg.outer_rounds = 1;
  cfg.epochs_per_stage = 3;
  const auto sup = run_strategy(sim.data, cfg, init);
  const auto plain = stoc_fit(sim.data, cfg.opt, init);
  CHECK(sup.params == plain.params);
  REQUIRE(sup.epochs.size() == plain.epochs.size());
  for (std::size_t i = 0; i < sup.epochs.size(); ++i) {
    CHECK(sup.epochs[i].nll == plain.epochs[i].nll);
    CHECK(sup.epochs[i].stage == "original");
  }
}

TEST_CASE("superposed fit alternates stages and numbers epochs continuously") {
  const auto sim = sim_small(3);
  PipelineConfig cfg;
  cfg.opt = quick_opt();
  cfg.strategy = Strategy::superpose;
  cfg.folder_size = 2;
  cfg.outer_rounds = 3;
  cfg.epochs_per_stage = 2;
  cfg.round_tol = 0.0;
  cfg.truth = sim.truth;
  const auto r = run_strategy(sim.data, cfg, initial_params(sim.data, sim.truth.basis(), 3));
  REQUIRE(r.epochs.size() == 12);
  for (std::size_t i = 0; i < r.epochs.size(); ++i) {
    CHECK(r.epochs[i].epoch == i + 1);
    CHECK(r.epochs[i].round == i / 4 + 1);
    CHECK(r.epochs[i].stage == (i % 4 < 2 ? "superposed" : "original"));
    CHECK(r.epochs[i].err_impact.has_value());
    CHECK(r.epochs[i].err_exogenous.has_value());
  }
  CHECK(r.params.num_agents() == 8);
}

TEST_CASE("zero learning rate keeps parameters across rounds") {
  const auto sim = sim_small(4);
  const auto init = initial_params(sim.data, sim.truth.basis(), 4);
  for (Strategy s : {Strategy::batch, Strategy::stoc, Strategy::augment, Strategy::superpose}) {
    PipelineConfig cfg;
    cfg.opt = quick_opt();
    cfg.opt.learning_rate = 0.0;
    cfg.strategy = s;
    cfg.round_tol = 0.0;
    CHECK(run_strategy(sim.data, cfg, init).params == init);
  }
}

TEST_CASE("every strategy reports the same schema") {
  const auto sim = sim_small(5);
  const auto init = initial_params(sim.data, sim.truth.basis(), 5);
  const std::set<std::string> stages{"batch", "stoc", "augmented", "superposed", "original"};
  for (Strategy s : {Strategy::batch, Strategy::stoc, Strategy::augment, Strategy::superpose}) {
    PipelineConfig cfg;
    cfg.opt = quick_opt();
    cfg.strategy = s;
    cfg.truth = sim.truth;
    const auto r = run_strategy(sim.data, cfg, init);
    CHECK(!r.epochs.empty());
    CHECK(r.params.num_agents() == 8);
    CHECK(r.params.num_entities() == 4);
    for (const auto& e : r.epochs) {
      CHECK(stages.count(e.stage) == 1);
      CHECK(e.err_impact.has_value());
      CHECK(std::isfinite(e.nll));
    }
  }
}

TEST_CASE("augmented fit trains on extra merged sequences but returns M columns") {
  const auto sim = sim_small(6);
  PipelineConfig cfg;
  cfg.opt = quick_opt();
  cfg.strategy = Strategy::augment;
  cfg.folder_size = 4;
  const auto r = run_strategy(sim.data, cfg, initial_params(sim.data, sim.truth.basis(), 6));
  CHECK(r.params.num_agents() == 8);
  for (const auto& e : r.epochs) CHECK(e.stage == "augmented");
}

TEST_CASE("sweeps are deterministic and cover every strategy and K") {
  SweepSpec spec;
  spec.sim.num_entities = 3;
  spec.sim.num_agents = 6;
  spec.sim.horizon = 20.0;
  spec.sim.max_events = 30;
  spec.opt = quick_opt();
  spec.opt.epochs = 2;
  spec.seeds = {1, 2};
  spec.outer_rounds = 1;
  const auto a = run_sweep(spec);
  CHECK(a.size() == 2 * (1 + 1 + 2 + 2));
  const auto b = run_sweep(spec);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].strategy == b[i].strategy);
    CHECK(a[i].folder_size == b[i].folder_size);
    CHECK(a[i].report.params == b[i].report.params);
  }
  for (const auto& run : a) {
    if (run.strategy == Strategy::batch || run.strategy == Strategy::stoc) CHECK(run.folder_size == 1);
  }
}
