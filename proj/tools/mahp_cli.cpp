// mahp: command-line front end over the C API.
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "mahp/mahp.h"

namespace {

using json = nlohmann::json;

// Thrown for bad command-line input discovered after parsing.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

int exit_code(mahp_status s) {
  if (s == MAHP_OK) return 0;
  return mahp_status_is_input_error(s) ? 1 : 2;
}

int report(mahp_status s) {
  if (s != MAHP_OK) std::cerr << "error: " << mahp_status_name(s) << ": " << mahp_last_error() << "\n";
  return exit_code(s);
}

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::ios_base::failure("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw UsageError(path + ": " + e.what());
  }
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

template <class T>
void overlay(json& j, const char* key, const std::optional<T>& v) {
  if (v) j[key] = *v;
}

// Owning wrappers so early returns free handles.
struct Dataset {
  mahp_dataset* p = nullptr;
  ~Dataset() { mahp_dataset_free(p); }
};
struct Model {
  mahp_model* p = nullptr;
  ~Model() { mahp_model_free(p); }
};
struct Report {
  mahp_report* p = nullptr;
  ~Report() { mahp_report_free(p); }
};
struct Plan {
  mahp_plan* p = nullptr;
  ~Plan() { mahp_plan_free(p); }
};

struct SimulateArgs {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string truth_out;
  bool stamp = false;
};

int run_simulate(const SimulateArgs& a) {
  std::optional<std::string> cfg;
  if (!a.config.empty()) cfg = load_json(a.config).dump();
  Dataset data;
  Model truth;
  const std::uint64_t seed = a.seed.value_or(0);
  mahp_status s = mahp_simulate(cfg ? cfg->c_str() : nullptr, a.seed ? &seed : nullptr, &data.p,
                                a.truth_out.empty() ? nullptr : &truth.p);
  if (s != MAHP_OK) return report(s);
  if ((s = mahp_dataset_write(data.p, a.out.c_str())) != MAHP_OK) return report(s);
  if (!a.truth_out.empty()) {
    const std::string ts = utc_now();
    s = mahp_model_write(truth.p, a.truth_out.c_str(), a.stamp ? ts.c_str() : nullptr);
  }
  return report(s);
}

struct FitArgs {
  std::string config;
  std::string data;
  std::optional<std::string> method;
  std::optional<std::size_t> K, folders, B, J, epochs, rounds, epochs_per_stage;
  std::optional<double> lambda0, eta, tol;
  std::optional<std::uint64_t> seed;
  std::optional<bool> decay;
  std::string truth, init, out, report_path;
  bool timing = false;
  bool stamp = false;
};

int run_fit(const FitArgs& a) {
  json cfg = a.config.empty() ? json::object() : load_json(a.config);
  if (!cfg.is_object()) throw UsageError(a.config + ": expected a JSON object");
  overlay(cfg, "method", a.method);
  overlay(cfg, "K", a.K);
  overlay(cfg, "folders", a.folders);
  overlay(cfg, "B", a.B);
  overlay(cfg, "J", a.J);
  overlay(cfg, "epochs", a.epochs);
  overlay(cfg, "rounds", a.rounds);
  overlay(cfg, "epochs_per_stage", a.epochs_per_stage);
  overlay(cfg, "lambda0", a.lambda0);
  overlay(cfg, "eta", a.eta);
  overlay(cfg, "tol", a.tol);
  overlay(cfg, "seed", a.seed);
  overlay(cfg, "decay", a.decay);

  Dataset data;
  mahp_status s = mahp_dataset_read(a.data.c_str(), &data.p);
  if (s != MAHP_OK) return report(s);
  Model truth, init;
  if (!a.truth.empty() && (s = mahp_model_read(a.truth.c_str(), &truth.p)) != MAHP_OK) return report(s);
  if (!a.init.empty() && (s = mahp_model_read(a.init.c_str(), &init.p)) != MAHP_OK) return report(s);

  Model fitted;
  Report rep;
  const std::string text = cfg.dump();
  s = mahp_fit(data.p, text.c_str(), init.p, truth.p, &fitted.p, &rep.p);
  if (s != MAHP_OK) return report(s);
  for (std::size_t i = 0; i < mahp_report_warning_count(rep.p); ++i) {
    std::cerr << "warning: " << mahp_report_warning(rep.p, i) << "\n";
  }
  if (!a.out.empty()) {
    const std::string ts = utc_now();
    if ((s = mahp_model_write(fitted.p, a.out.c_str(), a.stamp ? ts.c_str() : nullptr)) != MAHP_OK) return report(s);
  }
  if (!a.report_path.empty()) {
    if ((s = mahp_report_write_csv(rep.p, a.report_path.c_str(), a.timing ? 1 : 0)) != MAHP_OK) return report(s);
  }
  double nll = 0, eu = 0, ea = 0;
  if ((s = mahp_report_final(rep.p, &nll, &eu, &ea)) != MAHP_OK) return report(s);
  std::printf("epochs=%zu nll=%.17g", mahp_report_epochs(rep.p), nll);
  if (!std::isnan(eu)) std::printf(" err_U=%.17g", eu);
  if (!std::isnan(ea)) std::printf(" err_A=%.17g", ea);
  std::printf("\n");
  return 0;
}

struct SuperposeArgs {
  std::string data;
  std::optional<std::size_t> folders;
  std::optional<std::size_t> K;
  std::uint64_t seed = 0;
  std::string out;
  std::string plan_out;
};

int run_superpose(const SuperposeArgs& a) {
  Dataset data;
  mahp_status s = mahp_dataset_read(a.data.c_str(), &data.p);
  if (s != MAHP_OK) return report(s);
  std::size_t M = 0;
  mahp_dataset_info(data.p, nullptr, &M, nullptr, nullptr);
  std::size_t folders = 0;
  if (a.folders) {
    folders = *a.folders;
  } else if (a.K) {
    if (*a.K == 0) throw UsageError("--K must be >= 1");
    folders = (M + *a.K - 1) / *a.K;
  } else {
    throw UsageError("superpose needs --folders or --K");
  }
  Dataset merged;
  Plan plan;
  if ((s = mahp_superpose(data.p, folders, a.seed, &merged.p, &plan.p)) != MAHP_OK) return report(s);
  if (!a.out.empty() && (s = mahp_dataset_write(merged.p, a.out.c_str())) != MAHP_OK) return report(s);
  if (!a.plan_out.empty()) s = mahp_plan_write(plan.p, a.plan_out.c_str());
  return report(s);
}

int run_check_bound(const mahp_bound_inputs& in) {
  mahp_bound_result r{};
  const mahp_status s = mahp_check_bound(&in, &r);
  if (s != MAHP_OK) return report(s);
  std::printf("holds=%s lhs=%.17g rhs=%.17g\n", r.holds ? "true" : "false", r.lhs, r.rhs);
  return 0;
}

struct RecommendArgs {
  std::string checkpoint;
  std::string data;
  std::size_t top = 10;
  std::optional<double> at;
  std::string out;
};

int run_recommend(const RecommendArgs& a) {
  Model model;
  Dataset data;
  mahp_status s = mahp_model_read(a.checkpoint.c_str(), &model.p);
  if (s != MAHP_OK) return report(s);
  if ((s = mahp_dataset_read(a.data.c_str(), &data.p)) != MAHP_OK) return report(s);
  const double at = a.at.value_or(std::numeric_limits<double>::quiet_NaN());
  return report(mahp_recommend(model.p, data.p, at, a.top, a.out.c_str()));
}

struct EvaluateArgs {
  std::string results;
  std::string truth;
  std::vector<std::size_t> tops{5};
};

int run_evaluate(const EvaluateArgs& a) {
  std::printf("N,users,excluded,precision,recall,f1\n");
  for (std::size_t top : a.tops) {
    mahp_topn m{};
    const mahp_status s = mahp_evaluate(a.results.c_str(), a.truth.c_str(), top, &m);
    if (s != MAHP_OK) return report(s);
    std::printf("%zu,%zu,%zu,%.17g,%.17g,%.17g\n", m.top, m.users, m.excluded, m.precision, m.recall, m.f1);
  }
  return 0;
}

struct SweepArgs {
  std::string spec;
  std::string out = "sweep.csv";
  bool timing = false;
};

int run_sweep(const SweepArgs& a) {
  const std::string text = load_json(a.spec).dump();
  return report(mahp_sweep(text.c_str(), a.out.c_str(), a.timing ? 1 : 0));
}

struct SplitArgs {
  std::string raw;
  std::int64_t train_begin = 0;
  std::int64_t split = 0;
  std::int64_t test_end = 0;
  std::optional<std::size_t> max_train, min_test, min_support;
  std::optional<double> min_rating, time_unit;
  std::string train_out, truth_out, map_out;
};

int run_split(const SplitArgs& a) {
  json opts;
  opts["train_begin"] = a.train_begin;
  opts["split"] = a.split;
  opts["test_end"] = a.test_end;
  overlay(opts, "max_train_events", a.max_train);
  overlay(opts, "min_test_events", a.min_test);
  overlay(opts, "min_item_support", a.min_support);
  overlay(opts, "min_rating", a.min_rating);
  overlay(opts, "time_unit", a.time_unit);
  const std::string text = opts.dump();
  return report(mahp_coldstart_split(a.raw.c_str(), text.c_str(), a.train_out.c_str(), a.truth_out.c_str(),
                                     a.map_out.empty() ? nullptr : a.map_out.c_str()));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-agent Hawkes process toolkit"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* c_sim = app.add_subcommand("simulate", "Simulate event sequences");
  c_sim->add_option("--config", sim.config, "Simulation config (JSON)")->check(CLI::ExistingFile);
  c_sim->add_option("--out", sim.out, "Events output (JSONL)")->required();
  c_sim->add_option("--seed", sim.seed, "Seed (overrides the config)");
  c_sim->add_option("--truth-out", sim.truth_out, "Write the generating parameters as a checkpoint");
  c_sim->add_flag("--stamp", sim.stamp, "Record the wall-clock time in checkpoints");

  FitArgs fit;
  auto* c_fit = app.add_subcommand("fit", "Fit HP(U, A) to an event dataset");
  c_fit->add_option("--config", fit.config, "Fit config (JSON); flags override it")->check(CLI::ExistingFile);
  c_fit->add_option("--data", fit.data, "Events (JSONL)")->required();
  c_fit->add_option("--method", fit.method, "batch|stoc|augment|superpose");
  c_fit->add_option("--K", fit.K, "Folder size for augment/superpose");
  c_fit->add_option("--folders", fit.folders, "Folder count M' (overrides --K)");
  c_fit->add_option("--B", fit.B, "Batch size");
  c_fit->add_option("--J", fit.J, "History cap");
  c_fit->add_option("--lambda0", fit.lambda0, "Intensity floor");
  c_fit->add_option("--eta", fit.eta, "Learning rate");
  c_fit->add_option("--epochs", fit.epochs, "Epochs");
  c_fit->add_option("--rounds", fit.rounds, "Outer rounds of superpose");
  c_fit->add_option("--epochs-per-stage", fit.epochs_per_stage, "Epochs per superpose stage");
  c_fit->add_option("--tol", fit.tol, "Early-stop tolerance");
  c_fit->add_option("--seed", fit.seed, "Seed");
  c_fit->add_option("--decay", fit.decay, "Decay the learning rate as 1/sqrt(epoch)");
  c_fit->add_option("--truth", fit.truth, "Ground-truth checkpoint for error curves");
  c_fit->add_option("--init", fit.init, "Initial checkpoint");
  c_fit->add_option("--out", fit.out, "Fitted checkpoint (JSON)");
  c_fit->add_option("--report", fit.report_path, "Per-epoch report (CSV)");
  c_fit->add_flag("--timing", fit.timing, "Fill the seconds column of the report");
  c_fit->add_flag("--stamp", fit.stamp, "Record the wall-clock time in checkpoints");

  SuperposeArgs sup;
  auto* c_sup = app.add_subcommand("superpose", "Diversity-driven superposition of a dataset");
  c_sup->add_option("--data", sup.data, "Events (JSONL)")->required();
  c_sup->add_option("--folders", sup.folders, "Number of merged sequences M'");
  c_sup->add_option("--K", sup.K, "Folder size; M' = ceil(M / K)");
  c_sup->add_option("--seed", sup.seed, "Seed");
  c_sup->add_option("--out", sup.out, "Merged events (JSONL)");
  c_sup->add_option("--plan-out", sup.plan_out, "Plan (JSON)");

  mahp_bound_inputs bound{0, 0, 0, 0, 0, 0, 0, 0, 0.1};
  auto* c_bound = app.add_subcommand("check-bound", "Check whether superposition tightens the risk bound");
  c_bound->add_option("--u0", bound.u0, "Bound on ||U||_F^2")->required();
  c_bound->add_option("--a0", bound.a0, "Bound on ||A||_F^2")->required();
  c_bound->add_option("--u0p", bound.u0p, "Bound on ||U'||_F^2")->required();
  c_bound->add_option("--M", bound.num_agents, "Agents")->required();
  c_bound->add_option("--Mp", bound.num_folders, "Superposed agents")->required();
  c_bound->add_option("--C", bound.num_entities, "Entities")->required();
  c_bound->add_option("--L", bound.num_kernels, "Kernels")->required();
  c_bound->add_option("--events", bound.total_events, "Total events I")->required();
  c_bound->add_option("--delta", bound.delta, "Confidence level");

  RecommendArgs rec;
  auto* c_rec = app.add_subcommand("recommend", "Top-N recommendations from a checkpoint");
  c_rec->add_option("--checkpoint", rec.checkpoint, "Model checkpoint (JSON)")->required();
  c_rec->add_option("--data", rec.data, "Histories (JSONL)")->required();
  c_rec->add_option("--top", rec.top, "N");
  c_rec->add_option("--at", rec.at, "Query time (default: the data horizon)");
  c_rec->add_option("--out", rec.out, "Recommendations (CSV)")->required();

  EvaluateArgs ev;
  auto* c_ev = app.add_subcommand("evaluate", "Precision, recall and F1 of recommendations");
  c_ev->add_option("--results", ev.results, "Recommendations (CSV)")->required();
  c_ev->add_option("--truth", ev.truth, "Relevant entities (CSV agent,entity)")->required();
  c_ev->add_option("--top", ev.tops, "N (repeatable)");

  SweepArgs sw;
  auto* c_sw = app.add_subcommand("sweep", "Run an experiment sweep");
  c_sw->add_option("--spec", sw.spec, "Sweep spec (JSON)")->required();
  c_sw->add_option("--out", sw.out, "Tidy results (CSV)");
  c_sw->add_flag("--timing", sw.timing, "Fill the seconds column");

  SplitArgs sp;
  auto* c_sp = app.add_subcommand("split", "Cold-start split of raw interactions");
  c_sp->add_option("--raw", sp.raw, "Raw CSV: user_id,item_id,timestamp[,rating]")->required();
  c_sp->add_option("--train-begin", sp.train_begin, "Train window start (epoch seconds)")->required();
  c_sp->add_option("--split", sp.split, "Train/test boundary (epoch seconds)")->required();
  c_sp->add_option("--test-end", sp.test_end, "Test window end (epoch seconds)")->required();
  c_sp->add_option("--max-train", sp.max_train, "Most train events per user");
  c_sp->add_option("--min-rating", sp.min_rating, "Least train rating");
  c_sp->add_option("--min-test", sp.min_test, "Least test events per user");
  c_sp->add_option("--min-support", sp.min_support, "Items need more interactions than this");
  c_sp->add_option("--time-unit", sp.time_unit, "Seconds per model time unit");
  c_sp->add_option("--train-out", sp.train_out, "Train events (JSONL)")->required();
  c_sp->add_option("--truth-out", sp.truth_out, "Test truth (CSV)")->required();
  c_sp->add_option("--map-out", sp.map_out, "User and item ids (JSON)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  try {
    if (*c_sim) return run_simulate(sim);
    if (*c_fit) return run_fit(fit);
    if (*c_sup) return run_superpose(sup);
    if (*c_bound) return run_check_bound(bound);
    if (*c_rec) return run_recommend(rec);
    if (*c_ev) return run_evaluate(ev);
    if (*c_sw) return run_sweep(sw);
    if (*c_sp) return run_split(sp);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
