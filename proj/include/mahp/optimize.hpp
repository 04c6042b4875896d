#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mahp/likelihood.hpp"
#include "mahp/model.hpp"

namespace mahp {

inline constexpr std::size_t kUnlimitedHistory = std::numeric_limits<std::size_t>::max();

struct OptConfig {
  std::size_t batch_size = 64;
  std::size_t history_cap = 50;
  double lambda0 = 1e-3;
  double learning_rate = 0.01;
  // eta_e = eta / sqrt(e) for the e-th epoch (1-based)
  bool decay = false;
  std::size_t epochs = 50;
  // stop when ||theta_e - theta_{e-1}|| / ||theta_{e-1}|| < tol; 0 disables
  double tol = 1e-4;
  std::uint64_t seed = 0;
  bool include_tail = false;
  // size of the fixed event subsample the per-epoch NLL is measured on
  std::size_t eval_events = 2000;

  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;
  std::size_t round = 0;
  std::string stage;
  double nll = 0.0;
  std::optional<double> err_exogenous;
  std::optional<double> err_impact;
  double seconds = 0.0;
};

struct FitReport {
  std::vector<EpochRecord> epochs;
  ModelParams params;
  std::vector<std::string> warnings;
  std::size_t steps = 0;
  // feature nonzeros read while forming gradients
  std::size_t touched = 0;
};

// Per-event gradient: X - x / max(x.theta, lambda0).
SparseVector grad_event(const ModelParams& params, const EventFeatures& features, double lambda0);

// Adds grad_event into a dense buffer; returns the number of feature nonzeros read.
std::size_t accumulate_gradient(const EventFeatures& features, std::span<const double> theta,
                                double lambda0, std::span<double> grad);

void project_nonneg(std::span<double> theta);

struct FitOptions {
  // skip updates of the U block
  bool freeze_exogenous = false;
  // same shape as the fitted model; enables err columns
  const ModelParams* truth = nullptr;
  std::size_t round = 0;
  std::string stage = "fit";
  // added to epoch numbers in the report and to the decay schedule
  std::size_t epoch_offset = 0;
};

// U = [N_c^m(T) / T], A iid uniform on [0, 0.1 / C].
ModelParams initial_params(const Dataset& data, const KernelBasis& basis, std::uint64_t seed);

// Event-level stochastic projected gradient descent.
FitReport stoc_fit(const Dataset& data, const OptConfig& cfg, ModelParams init, const FitOptions& options = {});

// Full-gradient projected descent: one step per epoch over every event with unlimited history.
FitReport batch_fit(const Dataset& data, const OptConfig& cfg, ModelParams init, const FitOptions& options = {});

double relative_change(std::span<const double> before, std::span<const double> after);

// Largest eigenvalue of the summed NLL Hessian sum_i x_i x_i^T / max(x_i.theta, lambda0)^2
// at `params` with unlimited history, by power iteration. A full-gradient step
// of at most 1 / this value keeps batch descent stable near `params`.
double smoothness_estimate(const Dataset& data, const ModelParams& params, double lambda0,
                           std::size_t iterations = 50);

}  // namespace mahp
