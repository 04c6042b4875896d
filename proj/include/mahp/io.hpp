#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mahp/model.hpp"
#include "mahp/pipeline.hpp"
#include "mahp/recsys.hpp"
#include "mahp/simulate.hpp"
#include "mahp/superpose.hpp"

namespace mahp::io {

inline constexpr int kFormatVersion = 1;

// %.17g
std::string format_double(double v);

// FNV-1a 64-bit, as 16 lowercase hex digits.
std::string fnv1a_hex(std::string_view text);

// Events: a header line {"C": int, "T": float[, "M": int][, "version": 1]}
// followed by one {"agent": int, "time": float, "entity": int} per line.
// Without "M" the agent count is one past the largest agent id seen.
Dataset read_events(std::istream& in, const std::string& source = "<stream>");
Dataset read_events_file(const std::string& path);
void write_events(std::ostream& out, const Dataset& data);
void write_events_file(const std::string& path, const Dataset& data);

struct Provenance {
  std::uint64_t seed = 0;
  std::string config_hash;
  std::optional<std::string> timestamp;
};

struct Checkpoint {
  ModelParams params;
  Provenance provenance;
};

std::string checkpoint_to_json(const ModelParams& params, const Provenance& provenance);
Checkpoint checkpoint_from_json(const std::string& text);
void write_checkpoint(const std::string& path, const ModelParams& params, const Provenance& provenance);
Checkpoint read_checkpoint(const std::string& path);

std::string kernel_to_json(const KernelBasis& basis);
KernelBasis kernel_from_json(const std::string& text);

// Configs are JSON objects; unknown keys are rejected. Missing keys keep
// the defaults of the `base` argument.
SimConfig parse_sim_config(const std::string& text, const SimConfig& base = {});
std::string sim_config_to_json(const SimConfig& cfg);

// Flat keys: method, K, folders, rounds, epochs_per_stage, round_tol, B, J,
// lambda0, eta, decay, epochs, tol, seed, include_tail, eval_events.
PipelineConfig parse_pipeline_config(const std::string& text, const PipelineConfig& base = {});
std::string pipeline_config_to_json(const PipelineConfig& cfg);

// {"sim": {...}, "opt": {...}, "strategies": [...], "K": [...], "seeds": [...],
//  "rounds": n, "epochs_per_stage": n, "round_tol": x}
SweepSpec parse_sweep_spec(const std::string& text);

// epoch,round,stage,nll,err_U,err_A,seconds. Timing is left blank unless
// requested so that reruns are byte-identical.
void write_report_csv(std::ostream& out, const FitReport& report, bool timing = false);
void write_sweep_csv(std::ostream& out, std::span<const SweepRun> runs, bool timing = false);

// JSON array of folder -> source lists.
std::string plan_to_json(const SuperpositionPlan& plan);
SuperpositionPlan plan_from_json(const std::string& text, std::size_t num_sources);

// CSV with a header naming user_id, item_id, timestamp and optionally rating.
std::vector<RawEvent> read_raw_csv(std::istream& in, const std::string& source = "<stream>");

// agent,rank,entity,score
void write_recommendations_csv(std::ostream& out, std::span<const Recommendation> recs);
// agent -> ranked entities; agents without rows get empty lists.
std::vector<std::vector<std::size_t>> read_recommendations_csv(std::istream& in, std::size_t num_agents = 0,
                                                               const std::string& source = "<stream>");

// agent,entity rows: the relevant (test-window) entities of each agent.
void write_truth_csv(std::ostream& out, std::span<const std::vector<std::size_t>> truth);
std::vector<std::vector<std::size_t>> read_truth_csv(std::istream& in, const std::string& source = "<stream>");

// category,method,N,users,precision,recall,f1
void write_metrics_header(std::ostream& out);
void write_metrics_rows(std::ostream& out, const std::string& category, const std::string& method,
                        std::span<const TopNMetrics> metrics);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace mahp::io
