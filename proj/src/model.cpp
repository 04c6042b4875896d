#include "mahp/model.hpp"

#include <cmath>
#include <string>

#include "mahp/error.hpp"

namespace mahp {

void EventSequence::validate() const {
  require(std::isfinite(horizon) && horizon > 0.0, ErrorCode::invalid_argument,
          "sequence horizon must be positive");
  for (std::size_t i = 0; i < events.size(); ++i) {
    const Event& e = events[i];
    require(std::isfinite(e.time) && e.time >= 0.0 && e.time <= horizon, ErrorCode::invalid_argument,
            "event " + std::to_string(i) + " of agent " + std::to_string(agent_id) +
                " lies outside [0, T]");
    require(e.entity < num_entities, ErrorCode::index,
            "event " + std::to_string(i) + " of agent " + std::to_string(agent_id) +
                " has entity " + std::to_string(e.entity) + " >= C");
    if (i == 0) continue;
    const Event& prev = events[i - 1];
    require(prev.time <= e.time, ErrorCode::invalid_argument,
            "events of agent " + std::to_string(agent_id) + " are not time-ordered");
    if (prev.time == e.time) {
      // equal times are allowed across entities only
      for (std::size_t j = i; j-- > 0 && events[j].time == e.time;) {
        require(events[j].entity != e.entity, ErrorCode::invalid_argument,
                "agent " + std::to_string(agent_id) + " has simultaneous events of entity " +
                    std::to_string(e.entity));
      }
    }
  }
}

std::vector<std::size_t> EventSequence::counts_until(double t) const {
  std::vector<std::size_t> counts(num_entities, 0);
  for (const Event& e : events) {
    if (e.time > t) break;
    ++counts[e.entity];
  }
  return counts;
}

std::size_t Dataset::total_events() const {
  std::size_t n = 0;
  for (const auto& s : sequences) n += s.size();
  return n;
}

void Dataset::validate() const {
  require(num_entities > 0, ErrorCode::invalid_argument, "dataset needs C >= 1");
  require(std::isfinite(horizon) && horizon > 0.0, ErrorCode::invalid_argument,
          "dataset horizon must be positive");
  for (std::size_t m = 0; m < sequences.size(); ++m) {
    const auto& s = sequences[m];
    require(s.agent_id == m, ErrorCode::invalid_argument,
            "sequence " + std::to_string(m) + " carries agent id " + std::to_string(s.agent_id));
    require(s.num_entities == num_entities && s.horizon == horizon, ErrorCode::dimension,
            "sequence " + std::to_string(m) + " disagrees with the dataset on C or T");
    s.validate();
  }
}

ModelParams::ModelParams(std::size_t num_entities, std::size_t num_agents, KernelBasis basis)
    : entities_(num_entities), agents_(num_agents), basis_(std::move(basis)) {
  require(entities_ > 0, ErrorCode::dimension, "model needs C >= 1");
  require(basis_.size() > 0, ErrorCode::dimension, "model needs L >= 1");
  theta_.assign(entities_ * (agents_ + entities_ * basis_.size()), 0.0);
}

double ModelParams::trigger(std::size_t target, std::size_t source, double lag) const {
  double v = 0.0;
  for (std::size_t l = 0; l < basis_.size(); ++l) {
    const double a = impact(target, source, l);
    if (a != 0.0) v += a * basis_.value(l, lag);
  }
  return v;
}

std::vector<double> ModelParams::exogenous_column(std::size_t agent) const {
  require(agent < agents_, ErrorCode::dimension, "agent index out of range");
  std::vector<double> col(entities_);
  for (std::size_t c = 0; c < entities_; ++c) col[c] = mu(c, agent);
  return col;
}

ModelParams ModelParams::with_agents(std::size_t num_agents) const {
  ModelParams out(entities_, num_agents, basis_);
  auto src = impacts();
  auto dst = out.impacts();
  std::copy(src.begin(), src.end(), dst.begin());
  return out;
}

void ModelParams::validate() const {
  for (std::size_t k = 0; k < theta_.size(); ++k) {
    require(std::isfinite(theta_[k]) && theta_[k] >= 0.0, ErrorCode::invalid_argument,
            "parameter " + std::to_string(k) + " is negative or not finite");
  }
}

bool ModelParams::same_shape(const ModelParams& other) const {
  return entities_ == other.entities_ && agents_ == other.agents_ &&
         basis_.size() == other.basis_.size();
}

bool ModelParams::operator==(const ModelParams& other) const {
  return same_shape(other) && basis_ == other.basis_ && theta_ == other.theta_;
}

double intensity(const ModelParams& params, std::size_t agent, std::size_t entity, double t,
                 std::span<const Event> history, std::size_t history_cap) {
  require(agent < params.num_agents(), ErrorCode::dimension,
          "agent " + std::to_string(agent) + " out of range");
  require(entity < params.num_entities(), ErrorCode::dimension,
          "entity " + std::to_string(entity) + " out of range");
  require(history_cap >= 1, ErrorCode::invalid_argument, "history cap J must be >= 1");
  double value = params.mu(entity, agent);
  const std::size_t n = history.size();
  const std::size_t first = n > history_cap ? n - history_cap : 0;
  for (std::size_t j = first; j < n; ++j) {
    const Event& e = history[j];
    require(e.time < t, ErrorCode::invalid_argument, "history event does not precede the query time");
    require(e.entity < params.num_entities(), ErrorCode::dimension, "history entity out of range");
    value += params.trigger(entity, e.entity, t - e.time);
  }
  return value;
}

}  // namespace mahp
