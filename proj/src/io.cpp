#include "mahp/io.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "mahp/error.hpp"

namespace mahp::io {

using json = nlohmann::ordered_json;

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fnv1a_hex(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
  return buf;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::io, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorCode::io, "cannot write '" + path + "'");
  out << text;
  out.flush();
  require(static_cast<bool>(out), ErrorCode::io, "failed writing '" + path + "'");
}

namespace {

json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::parse, what + ": " + e.what());
  }
}

void only_keys(const json& j, std::initializer_list<const char*> keys, const std::string& what) {
  require(j.is_object(), ErrorCode::parse, what + ": expected a JSON object");
  for (const auto& item : j.items()) {
    const bool known = std::any_of(keys.begin(), keys.end(), [&](const char* k) { return item.key() == k; });
    require(known, ErrorCode::invalid_argument, what + ": unknown key '" + item.key() + "'");
  }
}

double as_double(const json& v, const std::string& what) {
  require(v.is_number(), ErrorCode::parse, what + " must be a number");
  return v.get<double>();
}

std::uint64_t as_u64(const json& v, const std::string& what) {
  require(v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0), ErrorCode::parse,
          what + " must be a nonnegative integer");
  return v.get<std::uint64_t>();
}

std::size_t as_size(const json& v, const std::string& what) { return static_cast<std::size_t>(as_u64(v, what)); }

bool as_bool(const json& v, const std::string& what) {
  require(v.is_boolean(), ErrorCode::parse, what + " must be true or false");
  return v.get<bool>();
}

std::vector<double> as_doubles(const json& v, const std::string& what) {
  require(v.is_array(), ErrorCode::parse, what + " must be an array");
  std::vector<double> out;
  out.reserve(v.size());
  for (const auto& x : v) out.push_back(as_double(x, what + " entry"));
  return out;
}

json kernel_json(const KernelBasis& basis) {
  json k;
  k["kind"] = to_string(basis.kind());
  if (basis.kind() == KernelKind::exponential) {
    k["rates"] = basis.rates();
  } else {
    json bumps = json::array();
    for (const auto& b : basis.bumps()) bumps.push_back({{"center", b.center}, {"bandwidth", b.bandwidth}});
    k["bumps"] = bumps;
  }
  return k;
}

KernelBasis kernel_of(const json& k) {
  require(k.is_object() && k.contains("kind"), ErrorCode::parse, "kernel spec needs a \"kind\"");
  const std::string kind = k.at("kind").is_string() ? k.at("kind").get<std::string>() : "";
  if (kind == "exponential") {
    only_keys(k, {"kind", "rates"}, "kernel");
    require(k.contains("rates"), ErrorCode::parse, "exponential kernel needs \"rates\"");
    return KernelBasis::exponential(as_doubles(k.at("rates"), "kernel rates"));
  }
  if (kind == "gaussian") {
    only_keys(k, {"kind", "bumps"}, "kernel");
    require(k.contains("bumps") && k.at("bumps").is_array(), ErrorCode::parse, "gaussian kernel needs \"bumps\"");
    std::vector<GaussianBump> bumps;
    for (const auto& b : k.at("bumps")) {
      only_keys(b, {"center", "bandwidth"}, "gaussian bump");
      require(b.contains("center") && b.contains("bandwidth"), ErrorCode::parse,
              "gaussian bump needs center and bandwidth");
      bumps.push_back({as_double(b.at("center"), "center"), as_double(b.at("bandwidth"), "bandwidth")});
    }
    return KernelBasis::gaussian(std::move(bumps));
  }
  fail(ErrorCode::invalid_argument, "unknown kernel kind '" + kind + "'");
}

json opt_json(const OptConfig& o) {
  json j;
  j["B"] = o.batch_size;
  if (o.history_cap == kUnlimitedHistory) {
    j["J"] = nullptr;
  } else {
    j["J"] = o.history_cap;
  }
  j["lambda0"] = o.lambda0;
  j["eta"] = o.learning_rate;
  j["decay"] = o.decay;
  j["epochs"] = o.epochs;
  j["tol"] = o.tol;
  j["seed"] = o.seed;
  j["include_tail"] = o.include_tail;
  j["eval_events"] = o.eval_events;
  return j;
}

// Applies the OptConfig keys found in j; returns false for keys it does not own.
bool apply_opt_key(OptConfig& o, const std::string& key, const json& v) {
  if (key == "B") {
    o.batch_size = as_size(v, key);
  } else if (key == "J") {
    o.history_cap = v.is_null() ? kUnlimitedHistory : as_size(v, key);
  } else if (key == "lambda0") {
    o.lambda0 = as_double(v, key);
  } else if (key == "eta") {
    o.learning_rate = as_double(v, key);
  } else if (key == "decay") {
    o.decay = as_bool(v, key);
  } else if (key == "epochs") {
    o.epochs = as_size(v, key);
  } else if (key == "tol") {
    o.tol = as_double(v, key);
  } else if (key == "seed") {
    o.seed = as_u64(v, key);
  } else if (key == "include_tail") {
    o.include_tail = as_bool(v, key);
  } else if (key == "eval_events") {
    o.eval_events = as_size(v, key);
  } else {
    return false;
  }
  return true;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cell += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cell += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.push_back(std::move(cell));
      cell.clear();
    } else if (ch != '\r') {
      cell += ch;
    }
  }
  out.push_back(std::move(cell));
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

std::string where(const std::string& source, std::size_t line) { return source + ":" + std::to_string(line); }

std::size_t parse_index(const std::string& s, const std::string& at) {
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    require(!s.empty() && s[0] != '-', ErrorCode::parse, at + ": expected a nonnegative integer");
    v = std::stoull(s, &pos);
  } catch (const std::logic_error&) {
    fail(ErrorCode::parse, at + ": expected a nonnegative integer, got '" + s + "'");
  }
  require(pos == s.size(), ErrorCode::parse, at + ": expected a nonnegative integer, got '" + s + "'");
  return static_cast<std::size_t>(v);
}

double parse_number(const std::string& s, const std::string& at) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::logic_error&) {
    fail(ErrorCode::parse, at + ": expected a number, got '" + s + "'");
  }
  require(pos == s.size() && std::isfinite(v), ErrorCode::parse, at + ": expected a number, got '" + s + "'");
  return v;
}

// Reads a header plus rows; returns column positions of the wanted names.
struct CsvTable {
  std::map<std::string, std::size_t> columns;
  std::vector<std::pair<std::size_t, std::vector<std::string>>> rows;  // (line number, cells)
};

CsvTable read_csv(std::istream& in) {
  CsvTable t;
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto cells = split_csv(line);
    for (auto& c : cells) c = trim(c);
    if (!header) {
      for (std::size_t k = 0; k < cells.size(); ++k) t.columns[cells[k]] = k;
      header = true;
      continue;
    }
    t.rows.emplace_back(lineno, std::move(cells));
  }
  return t;
}

std::size_t column(const CsvTable& t, const std::string& name, const std::string& source) {
  auto it = t.columns.find(name);
  require(it != t.columns.end(), ErrorCode::parse, source + ": missing column '" + name + "'");
  return it->second;
}

const std::string& cell(const std::vector<std::string>& row, std::size_t k, const std::string& at) {
  require(k < row.size(), ErrorCode::parse, at + ": too few columns");
  return row[k];
}

}  // namespace

Dataset read_events(std::istream& in, const std::string& source) {
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  std::optional<std::size_t> declared_agents;
  Dataset data;
  std::vector<std::vector<Event>> by_agent;

  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty() || trim(line) == "\r") continue;
    const std::string at = where(source, lineno);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      fail(ErrorCode::parse, at + ": malformed JSON (" + std::string(e.what()) + ")");
    }
    require(j.is_object(), ErrorCode::parse, at + ": expected a JSON object");
    if (!have_header) {
      only_keys(j, {"C", "T", "M", "version"}, at + ": header");
      require(j.contains("C") && j.contains("T"), ErrorCode::parse, at + ": header needs \"C\" and \"T\"");
      if (j.contains("version")) {
        require(as_u64(j.at("version"), at + ": version") == static_cast<std::uint64_t>(kFormatVersion),
                ErrorCode::version, at + ": unsupported events format version");
      }
      data.num_entities = as_size(j.at("C"), at + ": C");
      data.horizon = as_double(j.at("T"), at + ": T");
      require(data.num_entities >= 1, ErrorCode::invalid_argument, at + ": C must be >= 1");
      require(std::isfinite(data.horizon) && data.horizon > 0.0, ErrorCode::invalid_argument,
              at + ": T must be positive");
      if (j.contains("M")) {
        declared_agents = as_size(j.at("M"), at + ": M");
        by_agent.resize(*declared_agents);
      }
      have_header = true;
      continue;
    }
    only_keys(j, {"agent", "time", "entity"}, at);
    require(j.contains("agent") && j.contains("time") && j.contains("entity"), ErrorCode::parse,
            at + ": event needs agent, time and entity");
    const std::size_t agent = as_size(j.at("agent"), at + ": agent");
    const double time = as_double(j.at("time"), at + ": time");
    const std::size_t entity = as_size(j.at("entity"), at + ": entity");
    require(entity < data.num_entities, ErrorCode::index,
            at + ": entity " + std::to_string(entity) + " out of range [0, " + std::to_string(data.num_entities) + ")");
    require(std::isfinite(time) && time >= 0.0, ErrorCode::invalid_argument, at + ": time must be >= 0");
    require(time <= data.horizon, ErrorCode::invalid_argument,
            at + ": time " + format_double(time) + " exceeds T = " + format_double(data.horizon));
    if (declared_agents) {
      require(agent < *declared_agents, ErrorCode::index, at + ": agent " + std::to_string(agent) + " >= M");
    } else if (agent >= by_agent.size()) {
      by_agent.resize(agent + 1);
    }
    by_agent[agent].push_back({time, entity});
  }
  if (!have_header) return data;

  for (std::size_t m = 0; m < by_agent.size(); ++m) {
    EventSequence seq;
    seq.agent_id = m;
    seq.horizon = data.horizon;
    seq.num_entities = data.num_entities;
    seq.events = std::move(by_agent[m]);
    std::stable_sort(seq.events.begin(), seq.events.end(),
                     [](const Event& a, const Event& b) { return a.time < b.time; });
    data.sequences.push_back(std::move(seq));
  }
  try {
    data.validate();
  } catch (const Error& e) {
    fail(e.code(), source + ": " + e.what());
  }
  return data;
}

Dataset read_events_file(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::io, "cannot open events file '" + path + "'");
  return read_events(in, path);
}

void write_events(std::ostream& out, const Dataset& data) {
  out << "{\"C\":" << data.num_entities << ",\"T\":" << format_double(data.horizon)
      << ",\"M\":" << data.num_agents() << ",\"version\":" << kFormatVersion << "}\n";
  for (const auto& seq : data.sequences) {
    for (const auto& e : seq.events) {
      out << "{\"agent\":" << seq.agent_id << ",\"time\":" << format_double(e.time) << ",\"entity\":" << e.entity
          << "}\n";
    }
  }
}

void write_events_file(const std::string& path, const Dataset& data) {
  std::ostringstream ss;
  write_events(ss, data);
  write_text_file(path, ss.str());
}

std::string checkpoint_to_json(const ModelParams& params, const Provenance& provenance) {
  json j;
  j["format"] = "mahp-checkpoint";
  j["version"] = kFormatVersion;
  j["C"] = params.num_entities();
  j["M"] = params.num_agents();
  j["L"] = params.num_kernels();
  j["kernel"] = kernel_json(params.basis());
  j["U"] = std::vector<double>(params.exogenous().begin(), params.exogenous().end());
  j["A"] = std::vector<double>(params.impacts().begin(), params.impacts().end());
  json p;
  p["seed"] = provenance.seed;
  p["config_hash"] = provenance.config_hash;
  if (provenance.timestamp) {
    p["timestamp"] = *provenance.timestamp;
  } else {
    p["timestamp"] = nullptr;
  }
  j["provenance"] = p;
  return j.dump(1) + "\n";
}

Checkpoint checkpoint_from_json(const std::string& text) {
  const json j = parse_json(text, "checkpoint");
  require(j.is_object(), ErrorCode::parse, "checkpoint: expected a JSON object");
  require(j.contains("format") && j.at("format") == "mahp-checkpoint", ErrorCode::parse,
          "checkpoint: not a mahp checkpoint");
  require(j.contains("version"), ErrorCode::parse, "checkpoint: missing version");
  const auto version = as_u64(j.at("version"), "checkpoint version");
  require(version == static_cast<std::uint64_t>(kFormatVersion), ErrorCode::version,
          "checkpoint: unsupported version " + std::to_string(version) + " (expected " +
              std::to_string(kFormatVersion) + ")");
  only_keys(j, {"format", "version", "C", "M", "L", "kernel", "U", "A", "provenance"}, "checkpoint");
  for (const char* k : {"C", "M", "L", "kernel", "U", "A"}) {
    require(j.contains(k), ErrorCode::parse, std::string("checkpoint: missing \"") + k + "\"");
  }
  const std::size_t C = as_size(j.at("C"), "C");
  const std::size_t M = as_size(j.at("M"), "M");
  const std::size_t L = as_size(j.at("L"), "L");
  KernelBasis basis = kernel_of(j.at("kernel"));
  require(basis.size() == L, ErrorCode::dimension,
          "checkpoint: L = " + std::to_string(L) + " but the kernel has " + std::to_string(basis.size()) + " terms");
  const auto U = as_doubles(j.at("U"), "U");
  const auto A = as_doubles(j.at("A"), "A");
  require(U.size() == C * M, ErrorCode::dimension,
          "checkpoint: U has " + std::to_string(U.size()) + " entries, expected C*M = " + std::to_string(C * M));
  require(A.size() == C * C * L, ErrorCode::dimension,
          "checkpoint: A has " + std::to_string(A.size()) + " entries, expected C*C*L = " +
              std::to_string(C * C * L));

  Checkpoint cp;
  cp.params = ModelParams(C, M, std::move(basis));
  std::copy(U.begin(), U.end(), cp.params.exogenous().begin());
  std::copy(A.begin(), A.end(), cp.params.impacts().begin());
  cp.params.validate();
  if (j.contains("provenance")) {
    const auto& p = j.at("provenance");
    only_keys(p, {"seed", "config_hash", "timestamp"}, "provenance");
    if (p.contains("seed")) cp.provenance.seed = as_u64(p.at("seed"), "provenance seed");
    if (p.contains("config_hash") && p.at("config_hash").is_string()) {
      cp.provenance.config_hash = p.at("config_hash").get<std::string>();
    }
    if (p.contains("timestamp") && p.at("timestamp").is_string()) {
      cp.provenance.timestamp = p.at("timestamp").get<std::string>();
    }
  }
  return cp;
}

void write_checkpoint(const std::string& path, const ModelParams& params, const Provenance& provenance) {
  write_text_file(path, checkpoint_to_json(params, provenance));
}

Checkpoint read_checkpoint(const std::string& path) {
  try {
    return checkpoint_from_json(read_text_file(path));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::io) throw;
    fail(e.code(), path + ": " + e.what());
  }
}

std::string kernel_to_json(const KernelBasis& basis) { return kernel_json(basis).dump(); }

KernelBasis kernel_from_json(const std::string& text) { return kernel_of(parse_json(text, "kernel")); }

SimConfig parse_sim_config(const std::string& text, const SimConfig& base) {
  const json j = parse_json(text, "simulation config");
  only_keys(j, {"C", "M", "T", "kernel", "U", "u_max", "A", "rho", "max_events", "seed"}, "simulation config");
  SimConfig cfg = base;
  for (const auto& item : j.items()) {
    const std::string& k = item.key();
    const json& v = item.value();
    if (k == "C") {
      cfg.num_entities = as_size(v, k);
    } else if (k == "M") {
      cfg.num_agents = as_size(v, k);
    } else if (k == "T") {
      cfg.horizon = as_double(v, k);
    } else if (k == "kernel") {
      cfg.basis = kernel_of(v);
    } else if (k == "U") {
      if (v.is_null()) {
        cfg.exogenous.reset();
      } else {
        cfg.exogenous = as_doubles(v, k);
      }
    } else if (k == "u_max") {
      cfg.exogenous_max = v.is_null() ? -1.0 : as_double(v, k);
    } else if (k == "A") {
      if (v.is_null()) {
        cfg.impacts.reset();
      } else {
        cfg.impacts = as_doubles(v, k);
      }
    } else if (k == "rho") {
      cfg.spectral_norm = as_double(v, k);
    } else if (k == "max_events") {
      cfg.max_events = as_size(v, k);
    } else if (k == "seed") {
      cfg.seed = as_u64(v, k);
    }
  }
  cfg.validate();
  return cfg;
}

std::string sim_config_to_json(const SimConfig& cfg) {
  json j;
  j["C"] = cfg.num_entities;
  j["M"] = cfg.num_agents;
  j["T"] = cfg.horizon;
  j["kernel"] = kernel_json(cfg.basis);
  j["U"] = cfg.exogenous ? json(*cfg.exogenous) : json(nullptr);
  j["u_max"] = cfg.exogenous_max;
  j["A"] = cfg.impacts ? json(*cfg.impacts) : json(nullptr);
  j["rho"] = cfg.spectral_norm;
  j["max_events"] = cfg.max_events;
  j["seed"] = cfg.seed;
  return j.dump();
}

PipelineConfig parse_pipeline_config(const std::string& text, const PipelineConfig& base) {
  const json j = parse_json(text, "fit config");
  require(j.is_object(), ErrorCode::parse, "fit config: expected a JSON object");
  PipelineConfig cfg = base;
  for (const auto& item : j.items()) {
    const std::string& k = item.key();
    const json& v = item.value();
    if (apply_opt_key(cfg.opt, k, v)) continue;
    if (k == "method") {
      require(v.is_string(), ErrorCode::parse, "method must be a string");
      cfg.strategy = parse_strategy(v.get<std::string>());
    } else if (k == "K") {
      cfg.folder_size = as_size(v, k);
    } else if (k == "folders") {
      cfg.folders = as_size(v, k);
    } else if (k == "rounds") {
      cfg.outer_rounds = as_size(v, k);
    } else if (k == "epochs_per_stage") {
      cfg.epochs_per_stage = as_size(v, k);
    } else if (k == "round_tol") {
      cfg.round_tol = as_double(v, k);
    } else {
      fail(ErrorCode::invalid_argument, "fit config: unknown key '" + k + "'");
    }
  }
  cfg.validate();
  return cfg;
}

std::string pipeline_config_to_json(const PipelineConfig& cfg) {
  json j;
  j["method"] = to_string(cfg.strategy);
  j["K"] = cfg.folder_size;
  j["folders"] = cfg.folders;
  j["rounds"] = cfg.outer_rounds;
  j["epochs_per_stage"] = cfg.epochs_per_stage;
  j["round_tol"] = cfg.round_tol;
  const json opt = opt_json(cfg.opt);
  for (const auto& item : opt.items()) j[item.key()] = item.value();
  return j.dump();
}

SweepSpec parse_sweep_spec(const std::string& text) {
  const json j = parse_json(text, "sweep spec");
  only_keys(j, {"sim", "opt", "strategies", "K", "seeds", "rounds", "epochs_per_stage", "round_tol"}, "sweep spec");
  SweepSpec spec;
  if (j.contains("sim")) spec.sim = parse_sim_config(j.at("sim").dump());
  if (j.contains("opt")) {
    const json& o = j.at("opt");
    require(o.is_object(), ErrorCode::parse, "sweep spec: opt must be an object");
    for (const auto& item : o.items()) {
      require(apply_opt_key(spec.opt, item.key(), item.value()), ErrorCode::invalid_argument,
              "sweep spec: unknown opt key '" + item.key() + "'");
    }
  }
  if (j.contains("strategies")) {
    require(j.at("strategies").is_array(), ErrorCode::parse, "sweep spec: strategies must be an array");
    spec.strategies.clear();
    for (const auto& s : j.at("strategies")) {
      require(s.is_string(), ErrorCode::parse, "sweep spec: strategy names are strings");
      spec.strategies.push_back(parse_strategy(s.get<std::string>()));
    }
  }
  if (j.contains("K")) {
    require(j.at("K").is_array(), ErrorCode::parse, "sweep spec: K must be an array");
    spec.folder_sizes.clear();
    for (const auto& k : j.at("K")) spec.folder_sizes.push_back(as_size(k, "K"));
  }
  if (j.contains("seeds")) {
    require(j.at("seeds").is_array(), ErrorCode::parse, "sweep spec: seeds must be an array");
    spec.seeds.clear();
    for (const auto& s : j.at("seeds")) spec.seeds.push_back(as_u64(s, "seed"));
  }
  if (j.contains("rounds")) spec.outer_rounds = as_size(j.at("rounds"), "rounds");
  if (j.contains("epochs_per_stage")) spec.epochs_per_stage = as_size(j.at("epochs_per_stage"), "epochs_per_stage");
  if (j.contains("round_tol")) spec.round_tol = as_double(j.at("round_tol"), "round_tol");
  spec.opt.validate();
  require(!spec.seeds.empty() && !spec.strategies.empty(), ErrorCode::invalid_argument,
          "sweep spec needs at least one seed and one strategy");
  return spec;
}

namespace {

std::string optional_cell(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

void write_epoch_cells(std::ostream& out, const EpochRecord& r, bool timing) {
  out << r.epoch << ',' << r.round << ',' << r.stage << ',' << format_double(r.nll) << ','
      << optional_cell(r.err_exogenous) << ',' << optional_cell(r.err_impact) << ','
      << (timing ? format_double(r.seconds) : std::string()) << '\n';
}

}  // namespace

void write_report_csv(std::ostream& out, const FitReport& report, bool timing) {
  out << "epoch,round,stage,nll,err_U,err_A,seconds\n";
  for (const auto& r : report.epochs) write_epoch_cells(out, r, timing);
}

void write_sweep_csv(std::ostream& out, std::span<const SweepRun> runs, bool timing) {
  out << "strategy,K,seed,epoch,round,stage,nll,err_U,err_A,seconds\n";
  for (const auto& run : runs) {
    const bool superposes = run.strategy == Strategy::augment || run.strategy == Strategy::superpose;
    for (const auto& r : run.report.epochs) {
      out << to_string(run.strategy) << ',' << (superposes ? std::to_string(run.folder_size) : std::string()) << ','
          << run.seed << ',';
      write_epoch_cells(out, r, timing);
    }
  }
}

std::string plan_to_json(const SuperpositionPlan& plan) {
  json j = json::array();
  for (const auto& f : plan.folders) j.push_back(f);
  return j.dump() + "\n";
}

SuperpositionPlan plan_from_json(const std::string& text, std::size_t num_sources) {
  const json j = parse_json(text, "plan");
  require(j.is_array(), ErrorCode::parse, "plan: expected an array of folders");
  SuperpositionPlan plan;
  plan.num_sources = num_sources;
  for (const auto& f : j) {
    require(f.is_array(), ErrorCode::parse, "plan: every folder is an array of sources");
    std::vector<std::size_t> folder;
    for (const auto& s : f) folder.push_back(as_size(s, "plan source"));
    plan.folders.push_back(std::move(folder));
  }
  plan.validate();
  return plan;
}

std::vector<RawEvent> read_raw_csv(std::istream& in, const std::string& source) {
  const CsvTable t = read_csv(in);
  const std::size_t cu = column(t, "user_id", source);
  const std::size_t ci = column(t, "item_id", source);
  const std::size_t ct = column(t, "timestamp", source);
  const auto rating_col = t.columns.find("rating");
  std::vector<RawEvent> out;
  out.reserve(t.rows.size());
  for (const auto& [lineno, row] : t.rows) {
    const std::string at = where(source, lineno);
    RawEvent e;
    e.user = cell(row, cu, at);
    e.item = cell(row, ci, at);
    require(!e.user.empty() && !e.item.empty(), ErrorCode::parse, at + ": empty user or item id");
    const std::string& ts = cell(row, ct, at);
    std::size_t pos = 0;
    try {
      e.timestamp = std::stoll(ts, &pos);
    } catch (const std::logic_error&) {
      fail(ErrorCode::parse, at + ": bad timestamp '" + ts + "'");
    }
    require(pos == ts.size(), ErrorCode::parse, at + ": bad timestamp '" + ts + "'");
    if (rating_col != t.columns.end() && rating_col->second < row.size() && !row[rating_col->second].empty()) {
      e.rating = parse_number(row[rating_col->second], at);
    }
    out.push_back(std::move(e));
  }
  return out;
}

void write_recommendations_csv(std::ostream& out, std::span<const Recommendation> recs) {
  out << "agent,rank,entity,score\n";
  for (std::size_t m = 0; m < recs.size(); ++m) {
    for (std::size_t k = 0; k < recs[m].items.size(); ++k) {
      out << m << ',' << k + 1 << ',' << recs[m].items[k] << ',' << format_double(recs[m].scores[k]) << '\n';
    }
  }
}

std::vector<std::vector<std::size_t>> read_recommendations_csv(std::istream& in, std::size_t num_agents,
                                                               const std::string& source) {
  const CsvTable t = read_csv(in);
  const std::size_t ca = column(t, "agent", source);
  const std::size_t cr = column(t, "rank", source);
  const std::size_t ce = column(t, "entity", source);
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> lists(num_agents);
  for (const auto& [lineno, row] : t.rows) {
    const std::string at = where(source, lineno);
    const std::size_t a = parse_index(cell(row, ca, at), at);
    const std::size_t r = parse_index(cell(row, cr, at), at);
    const std::size_t e = parse_index(cell(row, ce, at), at);
    require(r >= 1, ErrorCode::parse, at + ": ranks start at 1");
    if (a >= lists.size()) lists.resize(a + 1);
    lists[a].emplace_back(r, e);
  }
  std::vector<std::vector<std::size_t>> out(lists.size());
  for (std::size_t a = 0; a < lists.size(); ++a) {
    std::sort(lists[a].begin(), lists[a].end());
    for (std::size_t k = 0; k < lists[a].size(); ++k) {
      require(lists[a][k].first == k + 1, ErrorCode::invalid_argument,
              source + ": ranks of agent " + std::to_string(a) + " are not 1..n");
      out[a].push_back(lists[a][k].second);
    }
  }
  return out;
}

void write_truth_csv(std::ostream& out, std::span<const std::vector<std::size_t>> truth) {
  out << "agent,entity\n";
  for (std::size_t m = 0; m < truth.size(); ++m) {
    for (std::size_t c : truth[m]) out << m << ',' << c << '\n';
  }
}

std::vector<std::vector<std::size_t>> read_truth_csv(std::istream& in, const std::string& source) {
  const CsvTable t = read_csv(in);
  const std::size_t ca = column(t, "agent", source);
  const std::size_t ce = column(t, "entity", source);
  std::vector<std::vector<std::size_t>> out;
  for (const auto& [lineno, row] : t.rows) {
    const std::string at = where(source, lineno);
    const std::size_t a = parse_index(cell(row, ca, at), at);
    const std::size_t e = parse_index(cell(row, ce, at), at);
    if (a >= out.size()) out.resize(a + 1);
    out[a].push_back(e);
  }
  for (auto& s : out) {
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end()), s.end());
  }
  return out;
}

void write_metrics_header(std::ostream& out) { out << "category,method,N,users,precision,recall,f1\n"; }

void write_metrics_rows(std::ostream& out, const std::string& category, const std::string& method,
                        std::span<const TopNMetrics> metrics) {
  for (const auto& m : metrics) {
    out << category << ',' << method << ',' << m.top << ',' << m.users << ',' << format_double(m.precision) << ','
        << format_double(m.recall) << ',' << format_double(m.f1) << '\n';
  }
}

}  // namespace mahp::io
