#include "mahp/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <string>

#include "mahp/error.hpp"
#include "mahp/rng.hpp"
#include "mahp/superpose.hpp"

namespace mahp {

const char* to_string(Strategy s) {
  switch (s) {
    case Strategy::batch:
      return "batch";
    case Strategy::stoc:
      return "stoc";
    case Strategy::augment:
      return "augment";
    case Strategy::superpose:
      return "superpose";
  }
  return "unknown";
}

Strategy parse_strategy(const std::string& name) {
  std::string n;
  for (char ch : name) {
    if (std::isalnum(static_cast<unsigned char>(ch))) n += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  }
  if (n == "batch" || n == "batchopt") return Strategy::batch;
  if (n == "stoc" || n == "stocopt") return Strategy::stoc;
  if (n == "augment" || n == "stocoptaugment") return Strategy::augment;
  if (n == "superpose" || n == "stocoptsuperpose") return Strategy::superpose;
  fail(ErrorCode::invalid_argument, "unknown strategy '" + name + "'");
}

void PipelineConfig::validate() const {
  opt.validate();
  require(outer_rounds >= 1, ErrorCode::invalid_argument, "outer_rounds must be >= 1");
  require(epochs_per_stage >= 1, ErrorCode::invalid_argument, "epochs_per_stage must be >= 1");
  require(folders > 0 || folder_size >= 1, ErrorCode::invalid_argument, "folder size K must be >= 1");
}

std::size_t PipelineConfig::folder_count(std::size_t num_agents) const {
  if (folders > 0) return folders;
  return (num_agents + folder_size - 1) / folder_size;
}

namespace {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t k) {
  return k == 0 ? seed : splitmix64(seed + k);
}

void append(FitReport& into, FitReport&& part) {
  for (auto& rec : part.epochs) into.epochs.push_back(std::move(rec));
  for (auto& w : part.warnings) into.warnings.push_back(std::move(w));
  into.steps += part.steps;
  into.touched += part.touched;
}

std::size_t last_epoch(const FitReport& r) { return r.epochs.empty() ? 0 : r.epochs.back().epoch; }

}  // namespace

FitReport superposed_fit(const Dataset& data, const PipelineConfig& cfg, ModelParams init) {
  cfg.validate();
  const std::size_t M = data.num_agents();
  const std::size_t folders = cfg.folder_count(M);
  require(folders >= 1 && folders <= M, ErrorCode::invalid_argument,
          "folder count " + std::to_string(folders) + " must lie in [1, M]");
  const ModelParams* truth = cfg.truth ? &*cfg.truth : nullptr;

  FitReport out;
  ModelParams current = std::move(init);
  for (std::size_t r = 0; r < cfg.outer_rounds; ++r) {
    const std::vector<double> before(current.theta().begin(), current.theta().end());

    if (folders < M) {
      // First round plans from event counts; later rounds from the learned U.
      std::span<const double> estimates;
      if (r > 0) estimates = current.exogenous();
      Superposition sup = diversity_plan(data, folders, derive_seed(cfg.opt.seed, 2 * r + 1), estimates);
      std::optional<ModelParams> sup_truth;
      if (truth) sup_truth = superpose_params(*truth, sup.plan);

      OptConfig stage = cfg.opt;
      stage.epochs = cfg.epochs_per_stage;
      stage.seed = derive_seed(cfg.opt.seed, 2 * r + 1);
      const std::size_t k = sup.plan.max_folder_size();
      stage.history_cap = cfg.opt.history_cap > kUnlimitedHistory / k ? kUnlimitedHistory : cfg.opt.history_cap * k;

      FitOptions opts;
      opts.truth = sup_truth ? &*sup_truth : nullptr;
      opts.round = r + 1;
      opts.stage = "superposed";
      opts.epoch_offset = last_epoch(out);
      FitReport part = stoc_fit(sup.merged, stage, superpose_params(current, sup.plan), opts);
      auto learned = part.params.impacts();
      std::copy(learned.begin(), learned.end(), current.impacts().begin());
      append(out, std::move(part));
    }

    OptConfig stage = cfg.opt;
    stage.epochs = cfg.epochs_per_stage;
    stage.seed = derive_seed(cfg.opt.seed, 2 * r);
    FitOptions opts;
    opts.truth = truth;
    opts.round = r + 1;
    opts.stage = "original";
    opts.epoch_offset = last_epoch(out);
    FitReport part = stoc_fit(data, stage, std::move(current), opts);
    current = std::move(part.params);
    append(out, std::move(part));

    if (relative_change(before, current.theta()) < cfg.round_tol) break;
  }
  out.params = std::move(current);
  return out;
}

namespace {

FitReport augmented_fit(const Dataset& data, const PipelineConfig& cfg, ModelParams init) {
  const std::size_t M = data.num_agents();
  const std::size_t folders = cfg.folder_count(M);
  Superposition sup = diversity_plan(data, folders, derive_seed(cfg.opt.seed, 1));

  Dataset augmented = data;
  for (auto& seq : sup.merged.sequences) {
    seq.agent_id += M;
    augmented.sequences.push_back(std::move(seq));
  }
  const ModelParams extra = superpose_params(init, sup.plan);
  ModelParams start = init.with_agents(M + folders);
  for (std::size_t c = 0; c < init.num_entities(); ++c) {
    for (std::size_t m = 0; m < M; ++m) start.mu(c, m) = init.mu(c, m);
    for (std::size_t f = 0; f < folders; ++f) start.mu(c, M + f) = extra.mu(c, f);
  }

  FitOptions opts;
  // errors are measured on the original agents only
  opts.truth = cfg.truth ? &*cfg.truth : nullptr;
  opts.stage = "augmented";
  FitReport report = stoc_fit(augmented, cfg.opt, std::move(start), opts);

  // The extra columns only served training.
  ModelParams learned = report.params.with_agents(M);
  for (std::size_t c = 0; c < learned.num_entities(); ++c) {
    for (std::size_t m = 0; m < M; ++m) learned.mu(c, m) = report.params.mu(c, m);
  }
  report.params = std::move(learned);
  return report;
}

}  // namespace

FitReport run_strategy(const Dataset& data, const PipelineConfig& cfg, ModelParams init) {
  cfg.validate();
  FitOptions opts;
  opts.truth = cfg.truth ? &*cfg.truth : nullptr;
  switch (cfg.strategy) {
    case Strategy::batch:
      opts.stage = "batch";
      return batch_fit(data, cfg.opt, std::move(init), opts);
    case Strategy::stoc:
      opts.stage = "stoc";
      return stoc_fit(data, cfg.opt, std::move(init), opts);
    case Strategy::augment:
      return augmented_fit(data, cfg, std::move(init));
    case Strategy::superpose:
      return superposed_fit(data, cfg, std::move(init));
  }
  fail(ErrorCode::invalid_argument, "unknown strategy");
}

std::vector<SweepRun> run_sweep(const SweepSpec& spec) {
  std::vector<SweepRun> runs;
  for (std::uint64_t seed : spec.seeds) {
    SimConfig sim = spec.sim;
    sim.seed = seed;
    SimulatedData generated = simulate_dataset(sim);
    const ModelParams init = initial_params(generated.data, sim.basis, seed);
    for (Strategy strategy : spec.strategies) {
      const bool superposes = strategy == Strategy::augment || strategy == Strategy::superpose;
      const std::vector<std::size_t> sizes = superposes ? spec.folder_sizes : std::vector<std::size_t>{1};
      for (std::size_t k : sizes) {
        PipelineConfig cfg;
        cfg.opt = spec.opt;
        cfg.opt.seed = seed;
        cfg.strategy = strategy;
        cfg.folder_size = k;
        cfg.outer_rounds = spec.outer_rounds;
        cfg.epochs_per_stage = spec.epochs_per_stage;
        cfg.round_tol = spec.round_tol;
        cfg.truth = generated.truth;
        runs.push_back({strategy, k, seed, run_strategy(generated.data, cfg, init)});
      }
    }
  }
  return runs;
}

}  // namespace mahp
