#include "mahp/likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mahp/error.hpp"

namespace mahp {

double SparseVector::dot(std::span<const double> dense) const {
  double s = 0.0;
  for (const auto& e : entries) s += e.value * dense[e.index];
  return s;
}

double SparseVector::at(std::size_t index) const {
  auto it = std::lower_bound(entries.begin(), entries.end(), index,
                             [](const SparseEntry& e, std::size_t i) { return e.index < i; });
  return it != entries.end() && it->index == index ? it->value : 0.0;
}

Featurizer::Featurizer(std::size_t num_entities, std::size_t num_agents, const KernelBasis& basis)
    : entities_(num_entities), agents_(num_agents), basis_(basis) {}

void Featurizer::check_sequence(const EventSequence& seq) const {
  require(seq.agent_id < agents_, ErrorCode::dimension,
          "agent " + std::to_string(seq.agent_id) + " exceeds the model's M");
  require(seq.num_entities <= entities_, ErrorCode::dimension, "sequence entity space exceeds C");
}

void Featurizer::merge_profile() {
  std::sort(profile_.begin(), profile_.end(), [](const ProfileEntry& a, const ProfileEntry& b) {
    return a.source != b.source ? a.source < b.source : a.kernel < b.kernel;
  });
  std::size_t out = 0;
  for (std::size_t k = 0; k < profile_.size(); ++k) {
    if (out > 0 && profile_[out - 1].source == profile_[k].source &&
        profile_[out - 1].kernel == profile_[k].kernel) {
      profile_[out - 1].value += profile_[k].value;
    } else {
      profile_[out++] = profile_[k];
    }
  }
  profile_.resize(out);
  std::erase_if(profile_, [](const ProfileEntry& p) { return p.value == 0.0; });
}

void Featurizer::build_interval(const EventSequence& seq, std::size_t first, std::size_t last,
                                double from, double to, EventFeatures& out) {
  const std::size_t L = basis_.size();
  const std::size_t exo = entities_ * agents_;
  const double width = to - from;

  profile_.clear();
  for (std::size_t j = first; j < last; ++j) {
    const Event& h = seq.events[j];
    for (std::size_t l = 0; l < L; ++l) {
      profile_.push_back({h.entity, l, basis_.integral(l, from - h.time, to - h.time)});
    }
  }
  merge_profile();

  auto& iv = out.interval.entries;
  iv.clear();
  if (width > 0.0) {
    for (std::size_t c = 0; c < entities_; ++c) iv.push_back({c * agents_ + seq.agent_id, width});
  }
  for (std::size_t c = 0; c < entities_; ++c) {
    for (const auto& p : profile_) {
      iv.push_back({exo + (c * entities_ + p.source) * L + p.kernel, p.value});
    }
  }
}

void Featurizer::compute(const EventSequence& seq, std::size_t index, std::size_t history_cap,
                         EventFeatures& out) {
  check_sequence(seq);
  require(index < seq.size(), ErrorCode::index,
          "event index " + std::to_string(index) + " out of range for a sequence of " +
              std::to_string(seq.size()) + " events");
  require(history_cap >= 1, ErrorCode::invalid_argument, "history cap J must be >= 1");

  const Event& ev = seq.events[index];
  require(ev.entity < entities_, ErrorCode::dimension, "event entity out of range");
  const std::size_t L = basis_.size();
  const std::size_t exo = entities_ * agents_;
  const double prev = index == 0 ? 0.0 : seq.events[index - 1].time;

  out.agent = seq.agent_id;
  out.entity = ev.entity;
  out.time = ev.time;
  out.previous_time = prev;
  out.tail = false;

  // Point feature: history strictly before t_i.
  std::size_t strict_end = index;
  while (strict_end > 0 && seq.events[strict_end - 1].time >= ev.time) --strict_end;
  const std::size_t point_first = strict_end > history_cap ? strict_end - history_cap : 0;
  profile_.clear();
  for (std::size_t j = point_first; j < strict_end; ++j) {
    const Event& h = seq.events[j];
    for (std::size_t l = 0; l < L; ++l) profile_.push_back({h.entity, l, basis_.value(l, ev.time - h.time)});
  }
  merge_profile();
  auto& pt = out.point.entries;
  pt.clear();
  pt.push_back({ev.entity * agents_ + seq.agent_id, 1.0});
  for (const auto& p : profile_) pt.push_back({exo + (ev.entity * entities_ + p.source) * L + p.kernel, p.value});

  // Interval feature over (t_{i-1}, t_i]: every earlier event is history.
  const std::size_t interval_first = index > history_cap ? index - history_cap : 0;
  build_interval(seq, interval_first, index, prev, ev.time, out);
}

void Featurizer::compute_tail(const EventSequence& seq, std::size_t history_cap, EventFeatures& out) {
  check_sequence(seq);
  require(history_cap >= 1, ErrorCode::invalid_argument, "history cap J must be >= 1");
  const std::size_t n = seq.size();
  const double last = n == 0 ? 0.0 : seq.events.back().time;
  out.agent = seq.agent_id;
  out.entity = 0;
  out.time = seq.horizon;
  out.previous_time = last;
  out.tail = true;
  out.point.clear();
  build_interval(seq, n > history_cap ? n - history_cap : 0, n, last, seq.horizon, out);
}

EventFeatures featurize(const ModelParams& shape, const EventSequence& seq, std::size_t index,
                        std::size_t history_cap) {
  Featurizer f(shape);
  EventFeatures out;
  f.compute(seq, index, history_cap, out);
  return out;
}

EventFeatures featurize_tail(const ModelParams& shape, const EventSequence& seq, std::size_t history_cap) {
  Featurizer f(shape);
  EventFeatures out;
  f.compute_tail(seq, history_cap, out);
  return out;
}

double nll_event(const ModelParams& params, const EventFeatures& features, double intensity_floor) {
  const auto theta = params.theta();
  for (const auto* v : {&features.point, &features.interval}) {
    if (!v->empty()) {
      require(v->entries.back().index < theta.size(), ErrorCode::dimension,
              "feature length exceeds the parameter dimension");
    }
  }
  const double compensator = features.interval.dot(theta);
  if (features.tail) return compensator;
  return compensator - std::log(std::max(features.point.dot(theta), intensity_floor));
}

double nll_total(const ModelParams& params, const Dataset& data, const LikelihoodOptions& options) {
  require(!data.sequences.empty(), ErrorCode::invalid_argument, "likelihood needs at least one sequence");
  Featurizer featurizer(params);
  EventFeatures features;
  double total = 0.0;
  for (const auto& seq : data.sequences) {
    for (std::size_t i = 0; i < seq.size(); ++i) {
      featurizer.compute(seq, i, options.history_cap, features);
      total += nll_event(params, features, options.intensity_floor);
    }
    if (options.include_tail) {
      featurizer.compute_tail(seq, options.history_cap, features);
      total += nll_event(params, features, options.intensity_floor);
    }
  }
  return total;
}

}  // namespace mahp
