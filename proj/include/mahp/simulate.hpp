#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "mahp/model.hpp"
#include "mahp/rng.hpp"

namespace mahp {

struct SimConfig {
  std::size_t num_entities = 20;
  std::size_t num_agents = 100;
  double horizon = 50.0;
  KernelBasis basis = KernelBasis::exponential({1.0});

  // U: explicit C x M row-major matrix, or iid uniform on [0, exogenous_max]
  // where a negative exogenous_max means 1 / C.
  std::optional<std::vector<double>> exogenous;
  double exogenous_max = -1.0;

  // A: explicit (c, c', l) tensor, or iid uniform rescaled so that the
  // C x C slice sum has this spectral norm.
  std::optional<std::vector<double>> impacts;
  double spectral_norm = 0.7;

  std::size_t max_events = 100;
  std::uint64_t seed = 0;

  void validate() const;
};

// Largest singular value of a row-major n x n matrix by power iteration on M^T M.
double spectral_norm(const std::vector<double>& matrix, std::size_t n, double tol = 1e-9);

// Gamma_{cc'} = sum_l a_{cc'l} int_0^inf g_l: expected direct offspring of
// entity c from one event of entity c'.
std::vector<double> branching_matrix(const ModelParams& params);

double spectral_radius(const std::vector<double>& matrix, std::size_t n);

// Throws ErrorCode::nonstationary unless the branching matrix has spectral radius < 1.
void require_stationary(const ModelParams& params);

ModelParams generate_params(const SimConfig& cfg);

// Cluster (branching) simulation of one agent on [0, horizon]; keeps the
// earliest max_events events.
EventSequence simulate_sequence(const ModelParams& params, std::size_t agent, double horizon,
                                std::size_t max_events, Rng& rng);

struct SimulatedData {
  ModelParams truth;
  Dataset data;
};

// One sequence per agent; agent m draws from the stream keyed by (seed, m).
SimulatedData simulate_dataset(const SimConfig& cfg);
Dataset simulate_agents(const ModelParams& params, double horizon, std::size_t max_events,
                        std::uint64_t seed);

}  // namespace mahp
