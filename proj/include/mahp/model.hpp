#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mahp/kernel.hpp"

namespace mahp {

struct Event {
  double time = 0.0;
  std::size_t entity = 0;

  bool operator==(const Event&) const = default;
};

// One agent's time-ordered marked events on the window [0, horizon].
struct EventSequence {
  std::size_t agent_id = 0;
  double horizon = 0.0;
  std::size_t num_entities = 0;
  std::vector<Event> events;

  std::size_t size() const { return events.size(); }
  bool empty() const { return events.empty(); }

  // Throws if times are unsorted, outside [0, horizon], an entity is out of
  // range, or the same entity fires twice at one instant.
  void validate() const;

  // N_c(t) for every entity c.
  std::vector<std::size_t> counts_until(double t) const;

  bool operator==(const EventSequence&) const = default;
};

// M sequences over a shared entity space and window. sequences[m].agent_id == m.
struct Dataset {
  std::size_t num_entities = 0;
  double horizon = 0.0;
  std::vector<EventSequence> sequences;

  std::size_t num_agents() const { return sequences.size(); }
  std::size_t total_events() const;
  void validate() const;

  bool operator==(const Dataset&) const = default;
};

// Parameters of HP(U, A): exogenous matrix U (C x M) and impact tensor
// A (C x C x L), stored as one vector theta = [U; A] of length C (M + C L).
// U is laid out row-major by (c, m) and A by (c, c', l).
class ModelParams {
 public:
  ModelParams() = default;
  ModelParams(std::size_t num_entities, std::size_t num_agents, KernelBasis basis);

  std::size_t num_entities() const { return entities_; }
  std::size_t num_agents() const { return agents_; }
  std::size_t num_kernels() const { return basis_.size(); }
  std::size_t dimension() const { return theta_.size(); }
  std::size_t exogenous_size() const { return entities_ * agents_; }
  std::size_t impact_size() const { return entities_ * entities_ * basis_.size(); }

  const KernelBasis& basis() const { return basis_; }

  std::size_t mu_index(std::size_t entity, std::size_t agent) const {
    return entity * agents_ + agent;
  }
  std::size_t impact_index(std::size_t target, std::size_t source, std::size_t l) const {
    return exogenous_size() + (target * entities_ + source) * basis_.size() + l;
  }

  double mu(std::size_t entity, std::size_t agent) const { return theta_[mu_index(entity, agent)]; }
  double& mu(std::size_t entity, std::size_t agent) { return theta_[mu_index(entity, agent)]; }
  double impact(std::size_t target, std::size_t source, std::size_t l) const {
    return theta_[impact_index(target, source, l)];
  }
  double& impact(std::size_t target, std::size_t source, std::size_t l) {
    return theta_[impact_index(target, source, l)];
  }

  // phi_{target,source}(lag) = sum_l a_{target,source,l} g_l(lag)
  double trigger(std::size_t target, std::size_t source, double lag) const;

  std::span<double> theta() { return theta_; }
  std::span<const double> theta() const { return theta_; }
  std::span<double> exogenous() { return std::span<double>(theta_).first(exogenous_size()); }
  std::span<const double> exogenous() const {
    return std::span<const double>(theta_).first(exogenous_size());
  }
  std::span<double> impacts() { return std::span<double>(theta_).subspan(exogenous_size()); }
  std::span<const double> impacts() const {
    return std::span<const double>(theta_).subspan(exogenous_size());
  }

  // Column mu^m of U.
  std::vector<double> exogenous_column(std::size_t agent) const;

  // Same A and basis, new exogenous matrix with the given number of agents (zeroed).
  ModelParams with_agents(std::size_t num_agents) const;

  // Throws on negative or non-finite entries.
  void validate() const;

  bool same_shape(const ModelParams& other) const;
  bool operator==(const ModelParams& other) const;

 private:
  std::size_t entities_ = 0;
  std::size_t agents_ = 0;
  KernelBasis basis_;
  std::vector<double> theta_;
};

// lambda_c^m(t) = mu_c^m + sum over the most recent <= history_cap events of
// sum_l a_{c,c_i,l} g_l(t - t_i). Every history event must precede t.
double intensity(const ModelParams& params, std::size_t agent, std::size_t entity, double t,
                 std::span<const Event> history, std::size_t history_cap);

}  // namespace mahp
