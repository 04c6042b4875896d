#include "mahp/mahp.h"

#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>

#include <json.hpp>

#include "mahp/error.hpp"
#include "mahp/io.hpp"
#include "mahp/optimize.hpp"
#include "mahp/pipeline.hpp"
#include "mahp/recsys.hpp"
#include "mahp/simulate.hpp"
#include "mahp/superpose.hpp"

struct mahp_dataset {
  mahp::Dataset data;
};

struct mahp_model {
  mahp::ModelParams params;
  mahp::io::Provenance provenance;
};

struct mahp_report {
  mahp::FitReport report;
};

struct mahp_plan {
  mahp::SuperpositionPlan plan;
};

namespace {

thread_local std::string last_error;

mahp_status status_of(mahp::ErrorCode code) {
  switch (code) {
    case mahp::ErrorCode::invalid_argument:
      return MAHP_ERR_INVALID_ARGUMENT;
    case mahp::ErrorCode::dimension:
      return MAHP_ERR_DIMENSION;
    case mahp::ErrorCode::index:
      return MAHP_ERR_INDEX;
    case mahp::ErrorCode::parse:
      return MAHP_ERR_PARSE;
    case mahp::ErrorCode::version:
      return MAHP_ERR_VERSION;
    case mahp::ErrorCode::nonstationary:
      return MAHP_ERR_NONSTATIONARY;
    case mahp::ErrorCode::io:
      return MAHP_ERR_IO;
    case mahp::ErrorCode::runtime:
      return MAHP_ERR_RUNTIME;
  }
  return MAHP_ERR_RUNTIME;
}

template <class F>
mahp_status guarded(F&& body) {
  try {
    body();
    last_error.clear();
    return MAHP_OK;
  } catch (const mahp::Error& e) {
    last_error = e.what();
    return status_of(e.code());
  } catch (const nlohmann::json::exception& e) {
    last_error = e.what();
    return MAHP_ERR_PARSE;
  } catch (const std::exception& e) {
    last_error = e.what();
    return MAHP_ERR_RUNTIME;
  } catch (...) {
    last_error = "unknown failure";
    return MAHP_ERR_RUNTIME;
  }
}

void need(const void* p, const char* name) {
  mahp::require(p != nullptr, mahp::ErrorCode::invalid_argument, std::string(name) + " must not be NULL");
}

std::ofstream open_out(const char* path) {
  std::ofstream out(path, std::ios::binary);
  mahp::require(static_cast<bool>(out), mahp::ErrorCode::io, std::string("cannot write '") + path + "'");
  return out;
}

void finish(std::ofstream& out, const char* path) {
  out.flush();
  mahp::require(static_cast<bool>(out), mahp::ErrorCode::io, std::string("failed writing '") + path + "'");
}

}  // namespace

extern "C" {

const char* mahp_version(void) { return "0.1.0"; }

const char* mahp_last_error(void) { return last_error.c_str(); }

const char* mahp_status_name(mahp_status status) {
  switch (status) {
    case MAHP_OK:
      return "ok";
    case MAHP_ERR_INVALID_ARGUMENT:
      return "invalid argument";
    case MAHP_ERR_DIMENSION:
      return "dimension mismatch";
    case MAHP_ERR_INDEX:
      return "index out of range";
    case MAHP_ERR_PARSE:
      return "parse error";
    case MAHP_ERR_VERSION:
      return "version mismatch";
    case MAHP_ERR_NONSTATIONARY:
      return "nonstationary parameters";
    case MAHP_ERR_IO:
      return "i/o error";
    case MAHP_ERR_RUNTIME:
      return "runtime error";
  }
  return "unknown status";
}

int mahp_status_is_input_error(mahp_status status) {
  return status != MAHP_OK && status != MAHP_ERR_IO && status != MAHP_ERR_RUNTIME;
}

mahp_status mahp_dataset_read(const char* path, mahp_dataset** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new mahp_dataset{mahp::io::read_events_file(path)};
  });
}

mahp_status mahp_dataset_write(const mahp_dataset* data, const char* path) {
  return guarded([&] {
    need(data, "data");
    need(path, "path");
    mahp::io::write_events_file(path, data->data);
  });
}

mahp_status mahp_dataset_info(const mahp_dataset* data, size_t* num_entities, size_t* num_agents, double* horizon,
                              size_t* num_events) {
  return guarded([&] {
    need(data, "data");
    if (num_entities) *num_entities = data->data.num_entities;
    if (num_agents) *num_agents = data->data.num_agents();
    if (horizon) *horizon = data->data.horizon;
    if (num_events) *num_events = data->data.total_events();
  });
}

void mahp_dataset_free(mahp_dataset* data) { delete data; }

mahp_status mahp_model_read(const char* path, mahp_model** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    auto cp = mahp::io::read_checkpoint(path);
    *out = new mahp_model{std::move(cp.params), std::move(cp.provenance)};
  });
}

mahp_status mahp_model_write(const mahp_model* model, const char* path, const char* timestamp) {
  return guarded([&] {
    need(model, "model");
    need(path, "path");
    mahp::io::Provenance p = model->provenance;
    if (timestamp) {
      p.timestamp = std::string(timestamp);
    } else {
      p.timestamp.reset();
    }
    mahp::io::write_checkpoint(path, model->params, p);
  });
}

mahp_status mahp_model_info(const mahp_model* model, size_t* num_entities, size_t* num_agents,
                            size_t* num_kernels) {
  return guarded([&] {
    need(model, "model");
    if (num_entities) *num_entities = model->params.num_entities();
    if (num_agents) *num_agents = model->params.num_agents();
    if (num_kernels) *num_kernels = model->params.num_kernels();
  });
}

mahp_status mahp_model_theta(const mahp_model* model, const double** theta, size_t* length) {
  return guarded([&] {
    need(model, "model");
    need(theta, "theta");
    *theta = model->params.theta().data();
    if (length) *length = model->params.dimension();
  });
}

void mahp_model_free(mahp_model* model) { delete model; }

mahp_status mahp_simulate(const char* config_json, const uint64_t* seed, mahp_dataset** data, mahp_model** truth) {
  return guarded([&] {
    need(data, "data");
    mahp::SimConfig cfg = config_json ? mahp::io::parse_sim_config(config_json) : mahp::SimConfig{};
    if (seed) cfg.seed = *seed;
    auto sim = mahp::simulate_dataset(cfg);
    mahp::io::Provenance p{cfg.seed, mahp::io::fnv1a_hex(mahp::io::sim_config_to_json(cfg)), std::nullopt};
    *data = new mahp_dataset{std::move(sim.data)};
    if (truth) *truth = new mahp_model{std::move(sim.truth), p};
  });
}

mahp_status mahp_fit(const mahp_dataset* data, const char* config_json, const mahp_model* init,
                     const mahp_model* truth, mahp_model** out, mahp_report** report) {
  return guarded([&] {
    need(data, "data");
    need(out, "out");
    // "kernel" picks the basis of a fresh start; the rest is the pipeline config.
    nlohmann::json j = config_json ? nlohmann::json::parse(config_json) : nlohmann::json::object();
    mahp::require(j.is_object(), mahp::ErrorCode::parse, "fit config must be a JSON object");
    std::optional<mahp::KernelBasis> basis;
    if (j.contains("kernel")) {
      basis = mahp::io::kernel_from_json(j.at("kernel").dump());
      j.erase("kernel");
    }
    mahp::PipelineConfig cfg = mahp::io::parse_pipeline_config(j.dump());
    if (truth) cfg.truth = truth->params;
    mahp::ModelParams start;
    if (init) {
      start = init->params;
    } else {
      if (!basis) basis = truth ? truth->params.basis() : mahp::KernelBasis::exponential({1.0});
      start = mahp::initial_params(data->data, *basis, cfg.opt.seed);
    }
    auto fitted = mahp::run_strategy(data->data, cfg, std::move(start));
    mahp::io::Provenance p{cfg.opt.seed, mahp::io::fnv1a_hex(mahp::io::pipeline_config_to_json(cfg)), std::nullopt};
    auto* model = new mahp_model{fitted.params, p};
    if (report) *report = new mahp_report{std::move(fitted)};
    *out = model;
  });
}

mahp_status mahp_report_write_csv(const mahp_report* report, const char* path, int timing) {
  return guarded([&] {
    need(report, "report");
    need(path, "path");
    auto out = open_out(path);
    mahp::io::write_report_csv(out, report->report, timing != 0);
    finish(out, path);
  });
}

size_t mahp_report_epochs(const mahp_report* report) { return report ? report->report.epochs.size() : 0; }

mahp_status mahp_report_final(const mahp_report* report, double* nll, double* err_exogenous, double* err_impact) {
  return guarded([&] {
    need(report, "report");
    mahp::require(!report->report.epochs.empty(), mahp::ErrorCode::invalid_argument, "report has no epochs");
    const auto& last = report->report.epochs.back();
    const double nan = std::numeric_limits<double>::quiet_NaN();
    if (nll) *nll = last.nll;
    if (err_exogenous) *err_exogenous = last.err_exogenous.value_or(nan);
    if (err_impact) *err_impact = last.err_impact.value_or(nan);
  });
}

size_t mahp_report_warning_count(const mahp_report* report) { return report ? report->report.warnings.size() : 0; }

const char* mahp_report_warning(const mahp_report* report, size_t index) {
  if (!report || index >= report->report.warnings.size()) return nullptr;
  return report->report.warnings[index].c_str();
}

void mahp_report_free(mahp_report* report) { delete report; }

mahp_status mahp_superpose(const mahp_dataset* data, size_t num_folders, uint64_t seed, mahp_dataset** merged,
                           mahp_plan** plan) {
  return guarded([&] {
    need(data, "data");
    auto sup = mahp::diversity_plan(data->data, num_folders, seed);
    if (merged) *merged = new mahp_dataset{std::move(sup.merged)};
    if (plan) *plan = new mahp_plan{std::move(sup.plan)};
  });
}

mahp_status mahp_plan_write(const mahp_plan* plan, const char* path) {
  return guarded([&] {
    need(plan, "plan");
    need(path, "path");
    mahp::io::write_text_file(path, mahp::io::plan_to_json(plan->plan));
  });
}

void mahp_plan_free(mahp_plan* plan) { delete plan; }

mahp_status mahp_check_bound(const mahp_bound_inputs* inputs, mahp_bound_result* result) {
  return guarded([&] {
    need(inputs, "inputs");
    need(result, "result");
    mahp::RiskBoundInputs in;
    in.exogenous_bound = inputs->u0;
    in.impact_bound = inputs->a0;
    in.superposed_exogenous_bound = inputs->u0p;
    in.num_agents = inputs->num_agents;
    in.num_folders = inputs->num_folders;
    in.num_entities = inputs->num_entities;
    in.num_kernels = inputs->num_kernels;
    in.total_events = inputs->total_events;
    in.delta = inputs->delta;
    const auto check = mahp::check_tightening(in);
    result->holds = check.holds ? 1 : 0;
    result->lhs = check.lhs;
    result->rhs = check.rhs;
  });
}

mahp_status mahp_recommend(const mahp_model* model, const mahp_dataset* history, double at, size_t top,
                           const char* out_csv) {
  return guarded([&] {
    need(model, "model");
    need(history, "history");
    need(out_csv, "out_csv");
    mahp::require(top >= 1, mahp::ErrorCode::invalid_argument, "top N must be >= 1");
    mahp::require(history->data.num_entities == model->params.num_entities(), mahp::ErrorCode::dimension,
                  "history and model disagree on C");
    const double t = std::isnan(at) ? history->data.horizon : at;
    std::vector<mahp::Recommendation> recs;
    for (const auto& seq : history->data.sequences) recs.push_back(mahp::recommend(model->params, seq, t, top));
    auto out = open_out(out_csv);
    mahp::io::write_recommendations_csv(out, recs);
    finish(out, out_csv);
  });
}

mahp_status mahp_evaluate(const char* results_csv, const char* truth_csv, size_t top, mahp_topn* out) {
  return guarded([&] {
    need(results_csv, "results_csv");
    need(truth_csv, "truth_csv");
    need(out, "out");
    std::ifstream tin(truth_csv);
    mahp::require(static_cast<bool>(tin), mahp::ErrorCode::io, std::string("cannot open '") + truth_csv + "'");
    auto truth = mahp::io::read_truth_csv(tin, truth_csv);
    std::ifstream rin(results_csv);
    mahp::require(static_cast<bool>(rin), mahp::ErrorCode::io, std::string("cannot open '") + results_csv + "'");
    auto ranked = mahp::io::read_recommendations_csv(rin, truth.size(), results_csv);
    truth.resize(ranked.size());
    const auto m = mahp::evaluate_topn(ranked, truth, top);
    *out = mahp_topn{m.top, m.users, m.excluded, m.precision, m.recall, m.f1};
  });
}

mahp_status mahp_sweep(const char* spec_json, const char* out_csv, int timing) {
  return guarded([&] {
    need(spec_json, "spec_json");
    need(out_csv, "out_csv");
    const auto spec = mahp::io::parse_sweep_spec(spec_json);
    const auto runs = mahp::run_sweep(spec);
    auto out = open_out(out_csv);
    mahp::io::write_sweep_csv(out, runs, timing != 0);
    finish(out, out_csv);
  });
}

mahp_status mahp_coldstart_split(const char* raw_csv, const char* options_json, const char* train_out,
                                 const char* truth_out, const char* map_out) {
  return guarded([&] {
    need(raw_csv, "raw_csv");
    need(options_json, "options_json");
    need(train_out, "train_out");
    need(truth_out, "truth_out");
    using json = nlohmann::json;
    const json opts = json::parse(options_json);
    mahp::require(opts.is_object(), mahp::ErrorCode::parse, "split options must be a JSON object");
    mahp::SplitWindows w;
    mahp::SplitFilters f;
    for (const char* k : {"train_begin", "split", "test_end"}) {
      mahp::require(opts.contains(k), mahp::ErrorCode::invalid_argument, std::string("split options need ") + k);
    }
    for (const auto& item : opts.items()) {
      const std::string& k = item.key();
      const json& v = item.value();
      if (k == "train_begin") {
        w.train_begin = v.get<std::int64_t>();
      } else if (k == "split") {
        w.split = v.get<std::int64_t>();
      } else if (k == "test_end") {
        w.test_end = v.get<std::int64_t>();
      } else if (k == "max_train_events") {
        f.max_train_events = v.get<std::size_t>();
      } else if (k == "min_rating") {
        f.min_rating = v.get<double>();
      } else if (k == "min_test_events") {
        f.min_test_events = v.get<std::size_t>();
      } else if (k == "min_item_support") {
        f.min_item_support = v.get<std::size_t>();
      } else if (k == "time_unit") {
        f.time_unit = v.get<double>();
      } else {
        mahp::fail(mahp::ErrorCode::invalid_argument, "unknown split option '" + k + "'");
      }
    }
    std::ifstream in(raw_csv);
    mahp::require(static_cast<bool>(in), mahp::ErrorCode::io, std::string("cannot open '") + raw_csv + "'");
    const auto raw = mahp::io::read_raw_csv(in, raw_csv);
    const auto ds = mahp::coldstart_split(raw, w, f);
    mahp::require(!ds.empty(), mahp::ErrorCode::invalid_argument, "no user survives the cold-start filters");
    mahp::io::write_events_file(train_out, ds.train);
    auto tout = open_out(truth_out);
    mahp::io::write_truth_csv(tout, ds.test);
    finish(tout, truth_out);
    if (map_out) {
      nlohmann::ordered_json j;
      j["users"] = ds.user_ids;
      j["items"] = ds.item_ids;
      j["split_time"] = ds.split_time;
      mahp::io::write_text_file(map_out, j.dump(1) + "\n");
    }
  });
}

}  // extern "C"
