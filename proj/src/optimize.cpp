#include "mahp/optimize.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <string>

#include "mahp/error.hpp"
#include "mahp/rng.hpp"

namespace mahp {

void OptConfig::validate() const {
  require(batch_size >= 1, ErrorCode::invalid_argument, "batch size B must be >= 1");
  require(history_cap >= 1, ErrorCode::invalid_argument, "history cap J must be >= 1");
  require(std::isfinite(lambda0) && lambda0 > 0.0, ErrorCode::invalid_argument, "offset lambda0 must be positive");
  require(std::isfinite(learning_rate) && learning_rate >= 0.0, ErrorCode::invalid_argument,
          "learning rate must be nonnegative");
  require(epochs >= 1, ErrorCode::invalid_argument, "epochs must be >= 1");
  require(tol >= 0.0, ErrorCode::invalid_argument, "tolerance must be nonnegative");
}

SparseVector grad_event(const ModelParams& params, const EventFeatures& features, double lambda0) {
  const double rate = features.point.dot(params.theta());
  const double inv = features.point.empty() ? 0.0 : 1.0 / std::max(rate, lambda0);
  SparseVector out;
  const auto& x = features.point.entries;
  const auto& X = features.interval.entries;
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < x.size() || j < X.size()) {
    if (j == X.size() || (i < x.size() && x[i].index < X[j].index)) {
      out.entries.push_back({x[i].index, -x[i].value * inv});
      ++i;
    } else if (i == x.size() || X[j].index < x[i].index) {
      out.entries.push_back(X[j]);
      ++j;
    } else {
      out.entries.push_back({x[i].index, X[j].value - x[i].value * inv});
      ++i;
      ++j;
    }
  }
  return out;
}

std::size_t accumulate_gradient(const EventFeatures& features, std::span<const double> theta,
                                double lambda0, std::span<double> grad) {
  for (const auto& e : features.interval.entries) grad[e.index] += e.value;
  if (!features.point.empty()) {
    const double inv = 1.0 / std::max(features.point.dot(theta), lambda0);
    for (const auto& e : features.point.entries) grad[e.index] -= e.value * inv;
  }
  return features.point.nnz() + features.interval.nnz();
}

void project_nonneg(std::span<double> theta) {
  for (double& v : theta) v = std::max(v, 0.0);
}

double relative_change(std::span<const double> before, std::span<const double> after) {
  double num = 0.0;
  double den = 0.0;
  for (std::size_t k = 0; k < before.size(); ++k) {
    const double d = after[k] - before[k];
    num += d * d;
    den += before[k] * before[k];
  }
  if (den == 0.0) return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return std::sqrt(num / den);
}

ModelParams initial_params(const Dataset& data, const KernelBasis& basis, std::uint64_t seed) {
  ModelParams params(data.num_entities, data.num_agents(), basis);
  for (std::size_t m = 0; m < data.num_agents(); ++m) {
    const auto counts = data.sequences[m].counts_until(data.horizon);
    for (std::size_t c = 0; c < data.num_entities; ++c) {
      params.mu(c, m) = static_cast<double>(counts[c]) / data.horizon;
    }
  }
  Rng rng = make_stream(seed, StreamTag::init);
  const double hi = 0.1 / static_cast<double>(data.num_entities);
  for (double& a : params.impacts()) a = hi * uniform01(rng);
  return params;
}

namespace {

constexpr std::uint32_t kTail = std::numeric_limits<std::uint32_t>::max();

struct EventRef {
  std::uint32_t sequence;
  std::uint32_t index;
};

std::optional<double> block_error(std::span<const double> est, std::span<const double> truth) {
  double num = 0.0;
  double den = 0.0;
  for (std::size_t k = 0; k < truth.size(); ++k) {
    const double d = truth[k] - est[k];
    num += d * d;
    den += truth[k] * truth[k];
  }
  if (den == 0.0) return std::nullopt;
  return std::sqrt(num / den);
}

std::optional<double> exogenous_error(const ModelParams& est, const ModelParams& truth) {
  double num = 0.0;
  double den = 0.0;
  for (std::size_t c = 0; c < truth.num_entities(); ++c) {
    for (std::size_t m = 0; m < truth.num_agents(); ++m) {
      const double d = truth.mu(c, m) - est.mu(c, m);
      num += d * d;
      den += truth.mu(c, m) * truth.mu(c, m);
    }
  }
  if (den == 0.0) return std::nullopt;
  return std::sqrt(num / den);
}

class Descent {
 public:
  Descent(const Dataset& data, const OptConfig& cfg, ModelParams init, const FitOptions& options, bool batch)
      : data_(data), cfg_(cfg), options_(options), batch_(batch), featurizer_(init) {
    cfg_.validate();
    data_.validate();
    require(data.num_entities == init.num_entities() && data.num_agents() == init.num_agents(),
            ErrorCode::dimension, "initial parameters do not match the data's C and M");
    if (options.truth) {
      // truth may cover only the leading agents (augmented fits)
      require(options.truth->num_entities() == init.num_entities() &&
                  options.truth->num_kernels() == init.num_kernels() &&
                  options.truth->num_agents() <= init.num_agents(),
              ErrorCode::dimension, "ground truth does not match the model shape");
    }
    init.validate();
    report_.params = std::move(init);
    history_cap_ = batch ? kUnlimitedHistory : cfg.history_cap;

    for (std::uint32_t s = 0; s < data.sequences.size(); ++s) {
      const auto n = static_cast<std::uint32_t>(data.sequences[s].size());
      for (std::uint32_t i = 0; i < n; ++i) refs_.push_back({s, i});
      if (cfg.include_tail) refs_.push_back({s, kTail});
    }
    require(!refs_.empty(), ErrorCode::invalid_argument, "no events to fit");

    batch_size_ = batch ? refs_.size() : cfg.batch_size;
    if (batch_size_ > refs_.size()) {
      report_.warnings.push_back("batch size " + std::to_string(batch_size_) + " exceeds the " +
                                 std::to_string(refs_.size()) + " available events; clamped");
      batch_size_ = refs_.size();
    }

    eval_ = refs_;
    if (eval_.size() > cfg.eval_events && cfg.eval_events > 0) {
      Rng rng = make_stream(cfg.seed, StreamTag::evaluation);
      std::shuffle(eval_.begin(), eval_.end(), rng);
      eval_.resize(cfg.eval_events);
      std::sort(eval_.begin(), eval_.end(), [](const EventRef& a, const EventRef& b) {
        return a.sequence != b.sequence ? a.sequence < b.sequence : a.index < b.index;
      });
    }

    grad_.assign(report_.params.dimension(), 0.0);
    marked_.assign(report_.params.dimension(), 0);
  }

  FitReport run() {
    std::vector<EventRef> order = refs_;
    const std::size_t exo = report_.params.exogenous_size();
    for (std::size_t e = 0; e < cfg_.epochs; ++e) {
      const auto start = std::chrono::steady_clock::now();
      const std::vector<double> before(report_.params.theta().begin(), report_.params.theta().end());
      double eta = cfg_.learning_rate;
      if (cfg_.decay) eta /= std::sqrt(static_cast<double>(options_.epoch_offset + e + 1));
      if (!batch_) {
        Rng rng = make_stream(cfg_.seed, StreamTag::shuffle, e);
        std::shuffle(order.begin(), order.end(), rng);
      }
      for (std::size_t first = 0; first < order.size(); first += batch_size_) {
        const std::size_t last = std::min(order.size(), first + batch_size_);
        step(std::span<const EventRef>(order).subspan(first, last - first), eta, exo);
      }
      EpochRecord rec;
      rec.epoch = options_.epoch_offset + e + 1;
      rec.round = options_.round;
      rec.stage = options_.stage;
      rec.nll = evaluate();
      if (options_.truth) {
        rec.err_exogenous = exogenous_error(report_.params, *options_.truth);
        rec.err_impact = block_error(report_.params.impacts(), options_.truth->impacts());
      }
      rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      report_.epochs.push_back(rec);
      if (cfg_.tol > 0.0 && relative_change(before, report_.params.theta()) < cfg_.tol) break;
    }
    return std::move(report_);
  }

 private:
  void load(const EventRef& ref) {
    const auto& seq = data_.sequences[ref.sequence];
    if (ref.index == kTail) {
      featurizer_.compute_tail(seq, history_cap_, features_);
    } else {
      featurizer_.compute(seq, ref.index, history_cap_, features_);
    }
  }

  void add(std::size_t k, double v) {
    if (!marked_[k]) {
      marked_[k] = 1;
      touched_.push_back(k);
    }
    grad_[k] += v;
  }

  void step(std::span<const EventRef> batch, double eta, std::size_t exo) {
    auto theta = report_.params.theta();
    for (const auto& ref : batch) {
      load(ref);
      for (const auto& en : features_.interval.entries) add(en.index, en.value);
      if (!features_.point.empty()) {
        const double inv = 1.0 / std::max(features_.point.dot(theta), cfg_.lambda0);
        for (const auto& en : features_.point.entries) add(en.index, -en.value * inv);
      }
      report_.touched += features_.point.nnz() + features_.interval.nnz();
    }
    for (std::size_t k : touched_) {
      if (!(options_.freeze_exogenous && k < exo)) theta[k] = std::max(theta[k] - eta * grad_[k], 0.0);
      grad_[k] = 0.0;
      marked_[k] = 0;
    }
    touched_.clear();
    ++report_.steps;
  }

  double evaluate() {
    double total = 0.0;
    for (const auto& ref : eval_) {
      load(ref);
      total += nll_event(report_.params, features_, cfg_.lambda0);
    }
    return total / static_cast<double>(eval_.size());
  }

  const Dataset& data_;
  OptConfig cfg_;
  FitOptions options_;
  bool batch_;
  Featurizer featurizer_;
  EventFeatures features_;
  FitReport report_;
  std::size_t history_cap_ = 0;
  std::size_t batch_size_ = 0;
  std::vector<EventRef> refs_;
  std::vector<EventRef> eval_;
  std::vector<double> grad_;
  std::vector<char> marked_;
  std::vector<std::size_t> touched_;
};

}  // namespace

FitReport stoc_fit(const Dataset& data, const OptConfig& cfg, ModelParams init, const FitOptions& options) {
  return Descent(data, cfg, std::move(init), options, false).run();
}

FitReport batch_fit(const Dataset& data, const OptConfig& cfg, ModelParams init, const FitOptions& options) {
  return Descent(data, cfg, std::move(init), options, true).run();
}

double smoothness_estimate(const Dataset& data, const ModelParams& params, double lambda0,
                           std::size_t iterations) {
  require(lambda0 > 0.0, ErrorCode::invalid_argument, "lambda0 must be positive");
  require(iterations >= 1, ErrorCode::invalid_argument, "need at least one iteration");
  Featurizer featurizer(params);
  EventFeatures f;
  std::vector<SparseVector> points;
  std::vector<double> weights;
  for (const auto& seq : data.sequences) {
    for (std::size_t i = 0; i < seq.size(); ++i) {
      featurizer.compute(seq, i, kUnlimitedHistory, f);
      const double rate = std::max(f.point.dot(params.theta()), lambda0);
      points.push_back(f.point);
      weights.push_back(1.0 / (rate * rate));
    }
  }
  require(!points.empty(), ErrorCode::invalid_argument, "dataset has no events");

  const std::size_t D = params.dimension();
  std::vector<double> v(D, 1.0 / std::sqrt(static_cast<double>(D)));
  std::vector<double> hv(D);
  double lambda = 0.0;
  for (std::size_t it = 0; it < iterations; ++it) {
    std::fill(hv.begin(), hv.end(), 0.0);
    for (std::size_t k = 0; k < points.size(); ++k) {
      const double s = weights[k] * points[k].dot(v);
      for (const auto& e : points[k].entries) hv[e.index] += s * e.value;
    }
    double norm = 0.0;
    for (double x : hv) norm += x * x;
    norm = std::sqrt(norm);
    if (norm == 0.0) return 0.0;
    lambda = norm;
    for (std::size_t d = 0; d < D; ++d) v[d] = hv[d] / norm;
  }
  return lambda;
}

}  // namespace mahp
