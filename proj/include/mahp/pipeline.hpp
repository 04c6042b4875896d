#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mahp/metrics.hpp"
#include "mahp/optimize.hpp"
#include "mahp/simulate.hpp"

namespace mahp {

enum class Strategy { batch, stoc, augment, superpose };

const char* to_string(Strategy s);
// Accepts batch|stoc|augment|superpose (and the long names BatchOpt, StocOpt, ...).
Strategy parse_strategy(const std::string& name);

struct PipelineConfig {
  OptConfig opt;
  Strategy strategy = Strategy::stoc;
  // Superposition granularity: folder count M' when nonzero, otherwise
  // derived from the folder size K as ceil(M / K).
  std::size_t folders = 0;
  std::size_t folder_size = 2;
  std::size_t outer_rounds = 5;
  std::size_t epochs_per_stage = 1;
  double round_tol = 1e-3;
  std::optional<ModelParams> truth;

  void validate() const;
  std::size_t folder_count(std::size_t num_agents) const;
};

// Alternates fitting HP(U', A) on a diversity-driven superposition with
// fitting HP(U, A) on the original sequences, re-planning from the learned U.
FitReport superposed_fit(const Dataset& data, const PipelineConfig& cfg, ModelParams init);

FitReport run_strategy(const Dataset& data, const PipelineConfig& cfg, ModelParams init);

struct SweepSpec {
  SimConfig sim;
  OptConfig opt;
  std::vector<Strategy> strategies = {Strategy::batch, Strategy::stoc, Strategy::augment, Strategy::superpose};
  std::vector<std::size_t> folder_sizes = {2, 4};
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  std::size_t outer_rounds = 5;
  std::size_t epochs_per_stage = 1;
  double round_tol = 1e-3;
};

struct SweepRun {
  Strategy strategy = Strategy::stoc;
  std::size_t folder_size = 1;
  std::uint64_t seed = 0;
  FitReport report;
};

// Simulates one dataset per seed and fits every strategy (and every K for
// the superposition strategies) from the same initial point.
std::vector<SweepRun> run_sweep(const SweepSpec& spec);

}  // namespace mahp
