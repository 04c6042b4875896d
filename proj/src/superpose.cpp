#include "mahp/superpose.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "mahp/error.hpp"
#include "mahp/rng.hpp"

namespace mahp {

std::size_t SuperpositionPlan::max_folder_size() const {
  std::size_t k = 0;
  for (const auto& f : folders) k = std::max(k, f.size());
  return k;
}

std::vector<std::size_t> SuperpositionPlan::assignment() const {
  std::vector<std::size_t> out(num_sources, std::numeric_limits<std::size_t>::max());
  for (std::size_t f = 0; f < folders.size(); ++f) {
    for (std::size_t s : folders[f]) {
      require(s < num_sources, ErrorCode::index, "plan references source " + std::to_string(s));
      out[s] = f;
    }
  }
  return out;
}

void SuperpositionPlan::validate() const {
  require(!folders.empty(), ErrorCode::invalid_argument, "plan needs at least one folder");
  std::vector<char> seen(num_sources, 0);
  std::size_t total = 0;
  for (std::size_t f = 0; f < folders.size(); ++f) {
    require(!folders[f].empty(), ErrorCode::invalid_argument, "folder " + std::to_string(f) + " is empty");
    for (std::size_t s : folders[f]) {
      require(s < num_sources, ErrorCode::index, "plan references source " + std::to_string(s));
      require(!seen[s], ErrorCode::invalid_argument, "source " + std::to_string(s) + " assigned twice");
      seen[s] = 1;
      ++total;
    }
  }
  require(total == num_sources, ErrorCode::invalid_argument, "plan leaves sources unassigned");
}

EventSequence merge_sequences(std::span<const EventSequence* const> parts, std::size_t agent_id) {
  require(!parts.empty(), ErrorCode::invalid_argument, "nothing to merge");
  EventSequence out;
  out.agent_id = agent_id;
  out.horizon = parts.front()->horizon;
  out.num_entities = parts.front()->num_entities;

  struct Tagged {
    double time;
    std::size_t source;
    std::size_t entity;
  };
  std::vector<Tagged> all;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    const auto& s = *parts[p];
    require(s.horizon == out.horizon && s.num_entities == out.num_entities, ErrorCode::dimension,
            "merged sequences must share T and C");
    for (const Event& e : s.events) all.push_back({e.time, p, e.entity});
  }
  std::stable_sort(all.begin(), all.end(), [](const Tagged& a, const Tagged& b) {
    if (a.time != b.time) return a.time < b.time;
    if (a.source != b.source) return a.source < b.source;
    return a.entity < b.entity;
  });
  out.events.reserve(all.size());
  for (const auto& t : all) out.events.push_back({t.time, t.entity});
  return out;
}

EventSequence merge_sequences(std::span<const EventSequence> parts, std::size_t agent_id) {
  std::vector<const EventSequence*> ptrs;
  ptrs.reserve(parts.size());
  for (const auto& s : parts) ptrs.push_back(&s);
  return merge_sequences(std::span<const EventSequence* const>(ptrs), agent_id);
}

Dataset apply_plan(const Dataset& data, const SuperpositionPlan& plan) {
  require(plan.num_sources == data.num_agents(), ErrorCode::dimension, "plan does not match the number of agents");
  plan.validate();
  Dataset out;
  out.num_entities = data.num_entities;
  out.horizon = data.horizon;
  std::vector<const EventSequence*> parts;
  for (std::size_t f = 0; f < plan.num_folders(); ++f) {
    parts.clear();
    for (std::size_t s : plan.folders[f]) parts.push_back(&data.sequences[s]);
    out.sequences.push_back(merge_sequences(std::span<const EventSequence* const>(parts), f));
  }
  return out;
}

std::vector<double> estimate_exogenous(const EventSequence& seq) {
  require(seq.horizon > 0.0, ErrorCode::invalid_argument, "horizon must be positive");
  std::vector<double> mu(seq.num_entities, 0.0);
  for (const Event& e : seq.events) {
    if (e.time <= seq.horizon) mu[e.entity] += 1.0;
  }
  for (double& v : mu) v /= seq.horizon;
  return mu;
}

std::vector<double> exogenous_estimates(const Dataset& data) {
  const std::size_t C = data.num_entities;
  const std::size_t M = data.num_agents();
  std::vector<double> u(C * M, 0.0);
  for (std::size_t m = 0; m < M; ++m) {
    const auto col = estimate_exogenous(data.sequences[m]);
    for (std::size_t c = 0; c < C; ++c) u[c * M + m] = col[c];
  }
  return u;
}

std::vector<double> reweight_distribution(std::span<const double> p, std::span<const double> scores) {
  require(p.size() == scores.size(), ErrorCode::dimension, "weights and scores differ in length");
  // Work relative to the largest surviving log-weight so that large scores
  // cannot underflow every entry at once.
  double top = -std::numeric_limits<double>::infinity();
  std::vector<double> logw(p.size(), -std::numeric_limits<double>::infinity());
  for (std::size_t m = 0; m < p.size(); ++m) {
    if (p[m] > 0.0) {
      require(std::isfinite(scores[m]), ErrorCode::invalid_argument, "reweighting scores must be finite");
      logw[m] = std::log(p[m]) - scores[m];
      top = std::max(top, logw[m]);
    }
  }
  std::vector<double> out(p.size(), 0.0);
  if (top == -std::numeric_limits<double>::infinity()) return out;
  double sum = 0.0;
  for (std::size_t m = 0; m < p.size(); ++m) {
    if (p[m] > 0.0) {
      out[m] = std::exp(logw[m] - top);
      sum += out[m];
    }
  }
  // Surviving sources keep a tiny positive weight even when exp underflows, so
  // an unassigned source is never mistaken for a picked one.
  for (std::size_t m = 0; m < p.size(); ++m) {
    if (p[m] > 0.0) out[m] = std::max(out[m] / sum, std::numeric_limits<double>::min());
  }
  return out;
}

std::vector<std::size_t> folder_sizes(std::size_t num_sources, std::size_t num_folders) {
  require(num_folders >= 1, ErrorCode::invalid_argument, "need at least one folder");
  require(num_folders <= num_sources, ErrorCode::invalid_argument,
          "folder count M' = " + std::to_string(num_folders) + " exceeds M = " + std::to_string(num_sources));
  std::vector<std::size_t> sizes(num_folders, num_sources / num_folders);
  for (std::size_t f = 0; f < num_sources % num_folders; ++f) ++sizes[f];
  return sizes;
}

namespace {

std::size_t sample_index(std::span<const double> p, Rng& rng) {
  double sum = 0.0;
  for (double v : p) sum += v;
  require(sum > 0.0, ErrorCode::runtime, "sampling distribution has no mass");
  const double u = uniform01(rng) * sum;
  double acc = 0.0;
  std::size_t last = 0;
  for (std::size_t m = 0; m < p.size(); ++m) {
    if (p[m] <= 0.0) continue;
    acc += p[m];
    last = m;
    if (u < acc) return m;
  }
  return last;
}

}  // namespace

Superposition diversity_plan(const Dataset& data, std::size_t num_folders, std::uint64_t seed,
                             std::span<const double> estimates) {
  const std::size_t M = data.num_agents();
  const std::size_t C = data.num_entities;
  const auto sizes = folder_sizes(M, num_folders);

  std::vector<double> counts;
  if (estimates.empty()) {
    counts = exogenous_estimates(data);
    estimates = counts;
  }
  require(estimates.size() == C * M, ErrorCode::dimension, "exogenous estimates must be C x M");

  Rng rng = make_stream(seed, StreamTag::plan);
  std::vector<double> p(M, 1.0 / static_cast<double>(M));
  std::vector<double> folder_mu(C);
  std::vector<double> scores(M);

  SuperpositionPlan plan;
  plan.num_sources = M;
  plan.folders.resize(num_folders);
  for (std::size_t f = 0; f < num_folders; ++f) {
    std::size_t m = sample_index(p, rng);
    plan.folders[f].push_back(m);
    for (std::size_t c = 0; c < C; ++c) folder_mu[c] = estimates[c * M + m];
    p[m] = 0.0;
    for (std::size_t k = 1; k < sizes[f]; ++k) {
      for (std::size_t j = 0; j < M; ++j) {
        double s = 0.0;
        for (std::size_t c = 0; c < C; ++c) s += estimates[c * M + j] * folder_mu[c];
        scores[j] = s;
      }
      p = reweight_distribution(p, scores);
      m = sample_index(p, rng);
      plan.folders[f].push_back(m);
      p[m] = 0.0;
      for (std::size_t c = 0; c < C; ++c) folder_mu[c] += estimates[c * M + m];
    }
  }
  plan.validate();
  Dataset merged = apply_plan(data, plan);
  return {std::move(plan), std::move(merged)};
}

SuperpositionPlan random_plan(std::size_t num_sources, std::size_t num_folders, std::uint64_t seed) {
  const auto sizes = folder_sizes(num_sources, num_folders);
  std::vector<std::size_t> perm(num_sources);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng = make_stream(seed, StreamTag::plan);
  std::shuffle(perm.begin(), perm.end(), rng);
  SuperpositionPlan plan;
  plan.num_sources = num_sources;
  std::size_t next = 0;
  for (std::size_t size : sizes) {
    plan.folders.emplace_back(perm.begin() + static_cast<std::ptrdiff_t>(next),
                              perm.begin() + static_cast<std::ptrdiff_t>(next + size));
    next += size;
  }
  return plan;
}

ModelParams superpose_params(const ModelParams& params, const SuperpositionPlan& plan) {
  require(plan.num_sources == params.num_agents(), ErrorCode::dimension, "plan does not match the model's M");
  ModelParams out = params.with_agents(plan.num_folders());
  for (std::size_t f = 0; f < plan.num_folders(); ++f) {
    for (std::size_t s : plan.folders[f]) {
      for (std::size_t c = 0; c < params.num_entities(); ++c) out.mu(c, f) += params.mu(c, s);
    }
  }
  return out;
}

TighteningCheck check_tightening(const RiskBoundInputs& in) {
  require(in.exogenous_bound > 0.0 && in.impact_bound > 0.0 && in.superposed_exogenous_bound > 0.0,
          ErrorCode::invalid_argument, "parameter bounds must be positive");
  require(in.num_agents > 0 && in.num_folders > 0 && in.num_entities > 0 && in.num_kernels > 0,
          ErrorCode::invalid_argument, "counts must be positive");
  require(in.delta > 0.0 && in.delta < 0.5, ErrorCode::invalid_argument, "delta must lie in (0, 0.5)");
  require(in.total_events >= 2.0, ErrorCode::invalid_argument, "need at least two events");

  const double log_events = std::log(in.total_events);
  const double log_conf = std::log(2.0 / in.delta);
  const double cl = static_cast<double>(in.num_entities) * static_cast<double>(in.num_kernels);
  const double den = (static_cast<double>(in.num_folders) + cl) * log_events + log_conf;
  const double num = (static_cast<double>(in.num_agents) + cl) * log_events + log_conf;
  // (A0 + U0) num/den - A0 = U0 num/den + A0 (M - M') ln I / den; the second
  // form avoids cancelling A0 against itself.
  const double excess = (static_cast<double>(in.num_agents) - static_cast<double>(in.num_folders)) * log_events;
  TighteningCheck out;
  out.lhs = in.superposed_exogenous_bound;
  out.rhs = in.exogenous_bound * (num / den) + in.impact_bound * (excess / den);
  out.holds = out.lhs <= out.rhs;
  return out;
}

RiskBoundInputs default_bound_inputs(const ModelParams& estimate, const SuperpositionPlan& plan,
                                     double total_events, double delta) {
  auto sq = [](std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return s;
  };
  const ModelParams sup = superpose_params(estimate, plan);
  RiskBoundInputs in;
  in.exogenous_bound = 1.1 * sq(estimate.exogenous());
  in.impact_bound = 1.1 * sq(estimate.impacts());
  in.superposed_exogenous_bound = 1.1 * sq(sup.exogenous());
  in.num_agents = estimate.num_agents();
  in.num_folders = plan.num_folders();
  in.num_entities = estimate.num_entities();
  in.num_kernels = estimate.num_kernels();
  in.total_events = total_events;
  in.delta = delta;
  return in;
}

std::vector<double> orthogonality_gram(std::span<const double> matrix, std::size_t rows, std::size_t cols) {
  require(matrix.size() == rows * cols, ErrorCode::dimension, "matrix size does not match its shape");
  std::vector<double> gram(cols * cols, 0.0);
  for (std::size_t i = 0; i < cols; ++i) {
    for (std::size_t j = i; j < cols; ++j) {
      double s = 0.0;
      for (std::size_t r = 0; r < rows; ++r) s += matrix[r * cols + i] * matrix[r * cols + j];
      gram[i * cols + j] = s;
      gram[j * cols + i] = s;
    }
  }
  return gram;
}

}  // namespace mahp
