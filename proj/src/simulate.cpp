#include "mahp/simulate.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <queue>
#include <string>

#include "mahp/error.hpp"

namespace mahp {

void SimConfig::validate() const {
  require(num_entities >= 1 && num_agents >= 1, ErrorCode::invalid_argument, "simulation needs C, M >= 1");
  require(std::isfinite(horizon) && horizon > 0.0, ErrorCode::invalid_argument, "horizon T must be positive");
  require(max_events >= 1, ErrorCode::invalid_argument, "max_events must be >= 1");
  require(basis.size() >= 1, ErrorCode::invalid_argument, "kernel basis is empty");
  if (exogenous) {
    require(exogenous->size() == num_entities * num_agents, ErrorCode::dimension,
            "explicit U must have C*M entries");
  }
  if (impacts) {
    require(impacts->size() == num_entities * num_entities * basis.size(), ErrorCode::dimension,
            "explicit A must have C*C*L entries");
  } else {
    require(std::isfinite(spectral_norm) && spectral_norm >= 0.0, ErrorCode::invalid_argument,
            "spectral norm target must be nonnegative");
    if (basis.size() == 1) {
      require(spectral_norm < 1.0, ErrorCode::nonstationary,
              "spectral norm target >= 1 gives a nonstationary process");
    }
  }
}

double spectral_norm(const std::vector<double>& matrix, std::size_t n, double tol) {
  require(matrix.size() == n * n, ErrorCode::dimension, "spectral_norm expects an n x n matrix");
  if (n == 0) return 0.0;
  std::vector<double> v(n, 1.0 / std::sqrt(static_cast<double>(n)));
  std::vector<double> mv(n);
  std::vector<double> w(n);
  double sigma2 = 0.0;
  for (int it = 0; it < 100000; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += matrix[i * n + j] * v[j];
      mv[i] = s;
    }
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += matrix[i * n + j] * mv[i];
      w[j] = s;
    }
    double norm = 0.0;
    for (double x : w) norm += x * x;
    norm = std::sqrt(norm);
    if (norm == 0.0) return 0.0;
    for (std::size_t j = 0; j < n; ++j) v[j] = w[j] / norm;
    const bool done = std::abs(norm - sigma2) <= tol * 1e-3 * norm;
    sigma2 = norm;
    if (done) break;
  }
  return std::sqrt(sigma2);
}

std::vector<double> branching_matrix(const ModelParams& params) {
  const std::size_t C = params.num_entities();
  std::vector<double> gamma(C * C, 0.0);
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t s = 0; s < C; ++s) {
      double v = 0.0;
      for (std::size_t l = 0; l < params.num_kernels(); ++l) {
        v += params.impact(c, s, l) * params.basis().total_mass(l);
      }
      gamma[c * C + s] = v;
    }
  }
  return gamma;
}

double spectral_radius(const std::vector<double>& matrix, std::size_t n) {
  require(matrix.size() == n * n, ErrorCode::dimension, "spectral_radius expects an n x n matrix");
  if (n == 0) return 0.0;
  Eigen::MatrixXd m(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) m(i, j) = matrix[i * n + j];
  }
  Eigen::EigenSolver<Eigen::MatrixXd> solver(m, false);
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

void require_stationary(const ModelParams& params) {
  const double rho = spectral_radius(branching_matrix(params), params.num_entities());
  require(rho < 1.0, ErrorCode::nonstationary,
          "branching matrix has spectral radius " + std::to_string(rho) + " >= 1");
}

ModelParams generate_params(const SimConfig& cfg) {
  cfg.validate();
  const std::size_t C = cfg.num_entities;
  const std::size_t L = cfg.basis.size();
  ModelParams params(C, cfg.num_agents, cfg.basis);
  Rng rng = make_stream(cfg.seed, StreamTag::parameters);

  if (cfg.exogenous) {
    auto u = params.exogenous();
    std::copy(cfg.exogenous->begin(), cfg.exogenous->end(), u.begin());
  } else {
    const double hi = cfg.exogenous_max < 0.0 ? 1.0 / static_cast<double>(C) : cfg.exogenous_max;
    for (double& u : params.exogenous()) u = hi * uniform01(rng);
  }

  if (cfg.impacts) {
    auto a = params.impacts();
    std::copy(cfg.impacts->begin(), cfg.impacts->end(), a.begin());
  } else if (cfg.spectral_norm > 0.0) {
    for (double& a : params.impacts()) a = uniform01(rng);
    std::vector<double> slice_sum(C * C, 0.0);
    for (std::size_t c = 0; c < C; ++c) {
      for (std::size_t s = 0; s < C; ++s) {
        for (std::size_t l = 0; l < L; ++l) slice_sum[c * C + s] += params.impact(c, s, l);
      }
    }
    const double sigma = spectral_norm(slice_sum, C, 1e-12);
    require(sigma > 0.0, ErrorCode::runtime, "random impact matrix has zero norm");
    const double scale = cfg.spectral_norm / sigma;
    for (double& a : params.impacts()) a *= scale;
  }
  params.validate();
  return params;
}

namespace {

struct Pending {
  double time;
  std::size_t entity;
  bool operator>(const Pending& o) const {
    return time != o.time ? time > o.time : entity > o.entity;
  }
};

std::size_t draw_poisson(double mean, Rng& rng) {
  if (!(mean > 0.0)) return 0;
  std::poisson_distribution<std::size_t> dist(mean);
  return dist(rng);
}

}  // namespace

EventSequence simulate_sequence(const ModelParams& params, std::size_t agent, double horizon,
                                std::size_t max_events, Rng& rng) {
  require(agent < params.num_agents(), ErrorCode::dimension, "agent out of range");
  require(std::isfinite(horizon) && horizon > 0.0, ErrorCode::invalid_argument, "horizon must be positive");
  require(max_events >= 1, ErrorCode::invalid_argument, "max_events must be >= 1");
  require_stationary(params);

  const std::size_t C = params.num_entities();
  const std::size_t L = params.num_kernels();
  const KernelBasis& basis = params.basis();

  std::priority_queue<Pending, std::vector<Pending>, std::greater<>> queue;
  for (std::size_t c = 0; c < C; ++c) {
    const std::size_t n = draw_poisson(params.mu(c, agent) * horizon, rng);
    for (std::size_t k = 0; k < n; ++k) queue.push({horizon * uniform01(rng), c});
  }

  EventSequence seq;
  seq.agent_id = agent;
  seq.horizon = horizon;
  seq.num_entities = C;

  // Children always follow their parent, so popping in time order finalises
  // events one by one and the earliest max_events are known once popped.
  while (!queue.empty() && seq.events.size() < max_events) {
    const Pending parent = queue.top();
    queue.pop();
    if (!seq.events.empty() && seq.events.back().time == parent.time &&
        seq.events.back().entity == parent.entity) {
      continue;
    }
    seq.events.push_back({parent.time, parent.entity});
    const double remaining = horizon - parent.time;
    if (remaining <= 0.0) continue;
    for (std::size_t c = 0; c < C; ++c) {
      for (std::size_t l = 0; l < L; ++l) {
        const double a = params.impact(c, parent.entity, l);
        if (a <= 0.0) continue;
        const std::size_t n = draw_poisson(a * basis.integral(l, 0.0, remaining), rng);
        for (std::size_t k = 0; k < n; ++k) {
          const double t = parent.time + basis.sample_lag(l, remaining, uniform01(rng));
          queue.push({std::min(t, horizon), c});
        }
      }
    }
  }
  return seq;
}

Dataset simulate_agents(const ModelParams& params, double horizon, std::size_t max_events, std::uint64_t seed) {
  Dataset data;
  data.num_entities = params.num_entities();
  data.horizon = horizon;
  data.sequences.reserve(params.num_agents());
  for (std::size_t m = 0; m < params.num_agents(); ++m) {
    Rng rng = make_stream(seed, StreamTag::agent, m);
    data.sequences.push_back(simulate_sequence(params, m, horizon, max_events, rng));
  }
  return data;
}

SimulatedData simulate_dataset(const SimConfig& cfg) {
  ModelParams truth = generate_params(cfg);
  Dataset data = simulate_agents(truth, cfg.horizon, cfg.max_events, cfg.seed);
  return {std::move(truth), std::move(data)};
}

}  // namespace mahp
