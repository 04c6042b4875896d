#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "mahp/model.hpp"

namespace mahp {

// Partition of M source agents into M' folders (the binary matrix P). Each
// folder lists its sources in the order they were picked.
struct SuperpositionPlan {
  std::size_t num_sources = 0;
  std::vector<std::vector<std::size_t>> folders;

  std::size_t num_folders() const { return folders.size(); }
  // K = max folder size
  std::size_t max_folder_size() const;
  // source -> folder
  std::vector<std::size_t> assignment() const;
  // Every source in exactly one folder, no empty folder.
  void validate() const;

  bool operator==(const SuperpositionPlan&) const = default;
};

// Union of the events sorted by time; ties go by source position, then entity.
EventSequence merge_sequences(std::span<const EventSequence* const> parts, std::size_t agent_id);
EventSequence merge_sequences(std::span<const EventSequence> parts, std::size_t agent_id);

// One merged sequence per folder; folder f becomes agent f.
Dataset apply_plan(const Dataset& data, const SuperpositionPlan& plan);

// mu_hat_c = N_c(T) / T
std::vector<double> estimate_exogenous(const EventSequence& seq);
// C x M row-major matrix of estimate_exogenous columns.
std::vector<double> exogenous_estimates(const Dataset& data);

// p <- p .* exp(-scores), then L1-normalised. Zero entries stay zero.
std::vector<double> reweight_distribution(std::span<const double> p, std::span<const double> scores);

// Folder sizes for M sources in M' folders: floor(M/M') or ceil(M/M'), larger ones first.
std::vector<std::size_t> folder_sizes(std::size_t num_sources, std::size_t num_folders);

struct Superposition {
  SuperpositionPlan plan;
  Dataset merged;
};

// Diversity-driven superposition. `estimates` is a C x M row-major matrix of
// exogenous intensities; when empty, count-based estimates are used.
Superposition diversity_plan(const Dataset& data, std::size_t num_folders, std::uint64_t seed,
                             std::span<const double> estimates = {});

// Uniformly random partition with balanced folder sizes.
SuperpositionPlan random_plan(std::size_t num_sources, std::size_t num_folders, std::uint64_t seed);

// U' = U P with the same A and basis.
ModelParams superpose_params(const ModelParams& params, const SuperpositionPlan& plan);

struct RiskBoundInputs {
  double exogenous_bound = 0.0;             // U0 >= ||U||_F^2
  double impact_bound = 0.0;                // A0 >= ||A||_F^2
  double superposed_exogenous_bound = 0.0;  // U0' >= ||U'||_F^2
  std::size_t num_agents = 0;               // M
  std::size_t num_folders = 0;              // M'
  std::size_t num_entities = 0;             // C
  std::size_t num_kernels = 0;              // L
  double total_events = 0.0;                // I_Sigma
  double delta = 0.1;
};

struct TighteningCheck {
  bool holds = false;
  double lhs = 0.0;
  double rhs = 0.0;
};

// U0' <= (A0 + U0) [(M + CL) ln I + ln(2/delta)] / [(M' + CL) ln I + ln(2/delta)] - A0
TighteningCheck check_tightening(const RiskBoundInputs& in);

// Bounds taken as 1.1 times the squared Frobenius norms of the estimates.
RiskBoundInputs default_bound_inputs(const ModelParams& estimate, const SuperpositionPlan& plan,
                                     double total_events, double delta = 0.1);

// M x M row-major matrix of column inner products of a C x M row-major matrix.
std::vector<double> orthogonality_gram(std::span<const double> matrix, std::size_t rows, std::size_t cols);

}  // namespace mahp
