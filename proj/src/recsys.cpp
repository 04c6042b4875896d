#include "mahp/recsys.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <tuple>

#include "mahp/error.hpp"
#include "mahp/optimize.hpp"
#include "mahp/rng.hpp"
#include "mahp/simulate.hpp"

namespace mahp {

RecDataset coldstart_split(std::span<const RawEvent> raw, const SplitWindows& windows, const SplitFilters& filters) {
  require(windows.train_begin < windows.split && windows.split < windows.test_end, ErrorCode::invalid_argument,
          "windows must satisfy train_begin < split < test_end");
  require(filters.time_unit > 0.0, ErrorCode::invalid_argument, "time unit must be positive");

  RecDataset out;
  out.report.raw_events = raw.size();

  std::map<std::string, std::size_t> support;
  for (const auto& e : raw) ++support[e.item];
  std::map<std::string, std::size_t> item_index;
  for (const auto& [item, n] : support) {
    if (n > filters.min_item_support) {
      item_index.emplace(item, out.item_ids.size());
      out.item_ids.push_back(item);
    }
  }
  out.report.items_kept = out.item_ids.size();

  struct UserEvents {
    std::vector<const RawEvent*> train;
    std::vector<const RawEvent*> test;
  };
  std::map<std::string, UserEvents> users;
  for (const auto& e : raw) {
    auto& u = users[e.user];
    if (!item_index.count(e.item)) continue;
    if (e.timestamp >= windows.train_begin && e.timestamp < windows.split) {
      u.train.push_back(&e);
    } else if (e.timestamp >= windows.split && e.timestamp < windows.test_end) {
      u.test.push_back(&e);
    }
  }
  out.report.users_seen = users.size();

  out.train.num_entities = out.item_ids.size();
  out.train.horizon = static_cast<double>(windows.split - windows.train_begin) / filters.time_unit;
  out.split_time = out.train.horizon;

  for (auto& [user, ev] : users) {
    std::sort(ev.train.begin(), ev.train.end(), [&](const RawEvent* a, const RawEvent* b) {
      return std::tie(a->timestamp, item_index.at(a->item)) < std::tie(b->timestamp, item_index.at(b->item));
    });
    const auto dup = std::unique(ev.train.begin(), ev.train.end(), [](const RawEvent* a, const RawEvent* b) {
      return a->timestamp == b->timestamp && a->item == b->item;
    });
    out.report.duplicates_dropped += static_cast<std::size_t>(ev.train.end() - dup);
    ev.train.erase(dup, ev.train.end());

    if (ev.train.size() > filters.max_train_events) {
      ++out.report.dropped_too_many_train;
      continue;
    }
    const bool low = std::any_of(ev.train.begin(), ev.train.end(), [&](const RawEvent* e) {
      return e->rating && *e->rating < filters.min_rating;
    });
    if (low) {
      ++out.report.dropped_low_rating;
      continue;
    }
    if (ev.test.size() < filters.min_test_events || ev.test.empty()) {
      ++out.report.dropped_no_test;
      continue;
    }

    EventSequence seq;
    seq.agent_id = out.train.sequences.size();
    seq.horizon = out.train.horizon;
    seq.num_entities = out.train.num_entities;
    for (const RawEvent* e : ev.train) {
      seq.events.push_back({static_cast<double>(e->timestamp - windows.train_begin) / filters.time_unit,
                            item_index.at(e->item)});
    }
    std::set<std::size_t> test_items;
    for (const RawEvent* e : ev.test) test_items.insert(item_index.at(e->item));
    out.train.sequences.push_back(std::move(seq));
    out.test.emplace_back(test_items.begin(), test_items.end());
    out.user_ids.push_back(user);
  }
  out.report.users_kept = out.user_ids.size();
  if (!out.empty()) out.train.validate();
  return out;
}

std::vector<double> endogenous_scores(const ModelParams& params, const EventSequence& history, double t) {
  const std::size_t C = params.num_entities();
  std::vector<double> scores(C, 0.0);
  for (const Event& e : history.events) {
    if (e.time >= t) break;
    require(e.entity < C, ErrorCode::dimension, "history entity out of range");
    for (std::size_t c = 0; c < C; ++c) scores[c] += params.trigger(c, e.entity, t - e.time);
  }
  return scores;
}

Recommendation recommend(const ModelParams& params, const EventSequence& history, double t, std::size_t top) {
  const std::size_t C = params.num_entities();
  top = std::min(top, C);
  const bool cold = history.events.empty() || history.events.front().time >= t;
  std::vector<double> scores;
  if (cold) {
    scores.assign(C, 0.0);
    if (history.agent_id < params.num_agents()) scores = params.exogenous_column(history.agent_id);
  } else {
    scores = endogenous_scores(params, history, t);
  }
  std::vector<std::size_t> order(C);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  Recommendation rec;
  for (std::size_t k = 0; k < top; ++k) {
    rec.items.push_back(order[k]);
    rec.scores.push_back(scores[order[k]]);
  }
  return rec;
}

TopNMetrics evaluate_topn(std::span<const std::vector<std::size_t>> ranked,
                          std::span<const std::vector<std::size_t>> truth, std::size_t top) {
  require(ranked.size() == truth.size(), ErrorCode::dimension, "ranked lists and truth sets differ in count");
  require(top >= 1, ErrorCode::invalid_argument, "N must be >= 1");
  TopNMetrics out;
  out.top = top;
  for (std::size_t m = 0; m < ranked.size(); ++m) {
    if (truth[m].empty()) {
      ++out.excluded;
      continue;
    }
    const std::size_t n = std::min(top, ranked[m].size());
    require(n > 0, ErrorCode::invalid_argument, "empty recommendation list");
    const std::set<std::size_t> want(truth[m].begin(), truth[m].end());
    std::size_t hits = 0;
    for (std::size_t k = 0; k < n; ++k) hits += want.count(ranked[m][k]);
    UserMetrics u;
    u.precision = 100.0 * static_cast<double>(hits) / static_cast<double>(n);
    u.recall = 100.0 * static_cast<double>(hits) / static_cast<double>(want.size());
    u.f1 = u.precision + u.recall > 0.0 ? 2.0 * u.precision * u.recall / (u.precision + u.recall) : 0.0;
    out.per_user.push_back(u);
  }
  out.users = out.per_user.size();
  for (const auto& u : out.per_user) {
    out.precision += u.precision;
    out.recall += u.recall;
    out.f1 += u.f1;
  }
  if (out.users > 0) {
    const auto n = static_cast<double>(out.users);
    out.precision /= n;
    out.recall /= n;
    out.f1 /= n;
  }
  return out;
}

RecResult train_and_recommend(const RecDataset& dataset, const PipelineConfig& cfg, const KernelBasis& basis,
                              std::span<const std::size_t> tops) {
  require(!dataset.empty(), ErrorCode::invalid_argument, "recommendation dataset is empty");
  require(!tops.empty(), ErrorCode::invalid_argument, "no N requested");
  const std::size_t widest = *std::max_element(tops.begin(), tops.end());

  RecResult out;
  out.fit = run_strategy(dataset.train, cfg, initial_params(dataset.train, basis, cfg.opt.seed));
  for (const auto& seq : dataset.train.sequences) {
    out.ranked.push_back(recommend(out.fit.params, seq, dataset.split_time, widest).items);
  }
  for (std::size_t top : tops) {
    out.metrics.push_back(evaluate_topn(out.ranked, dataset.test, std::min(top, dataset.train.num_entities)));
  }
  return out;
}

PlantedData planted_coldstart(const PlantedConfig& cfg) {
  require(cfg.items >= 2 && cfg.users >= 1 && cfg.groups >= 1 && cfg.groups <= cfg.items,
          ErrorCode::invalid_argument, "planted data needs items >= groups >= 1 and users >= 1");
  const std::size_t C = cfg.items;
  const KernelBasis basis = KernelBasis::exponential({cfg.decay});

  // Targets are shuffled within each group's block, so what a user buys next
  // stays inside the block they prefer.
  Rng rng = make_stream(cfg.seed, StreamTag::parameters);
  const std::size_t block = C / cfg.groups;
  std::vector<std::size_t> target(C);
  std::iota(target.begin(), target.end(), std::size_t{0});
  for (std::size_t g = 0; g < cfg.groups; ++g) {
    const auto first = target.begin() + static_cast<std::ptrdiff_t>(g * block);
    const auto last = g + 1 == cfg.groups ? target.end() : first + static_cast<std::ptrdiff_t>(block);
    std::shuffle(first, last, rng);
  }

  ModelParams full(C, cfg.users, basis);
  for (std::size_t src = 0; src < C; ++src) {
    for (std::size_t c = 0; c < C; ++c) full.impact(c, src, 0) = c == target[src] ? cfg.dominant : cfg.background;
  }
  for (std::size_t u = 0; u < cfg.users; ++u) {
    const std::size_t g = u % cfg.groups;
    for (std::size_t c = 0; c < C; ++c) {
      const bool preferred = c >= g * block && c < (g + 1 == cfg.groups ? C : (g + 1) * block);
      full.mu(c, u) = preferred ? cfg.preferred_rate : cfg.other_rate;
    }
  }

  const double total = cfg.train_horizon + cfg.test_horizon;
  const Dataset sim = simulate_agents(full, total, cfg.max_events, cfg.seed);

  PlantedData out;
  out.target = target;
  RecDataset& rd = out.data;
  rd.train.num_entities = C;
  rd.train.horizon = cfg.train_horizon;
  rd.split_time = cfg.train_horizon;
  for (std::size_t c = 0; c < C; ++c) rd.item_ids.push_back("i" + std::to_string(c));
  std::vector<std::size_t> kept;
  for (const auto& seq : sim.sequences) {
    EventSequence train;
    train.agent_id = rd.train.sequences.size();
    train.horizon = cfg.train_horizon;
    train.num_entities = C;
    std::set<std::size_t> test;
    for (const Event& e : seq.events) {
      if (e.time < cfg.train_horizon) {
        train.events.push_back(e);
      } else {
        test.insert(e.entity);
      }
    }
    ++rd.report.users_seen;
    if (train.events.empty() || train.events.size() > cfg.max_train_events) {
      ++rd.report.dropped_too_many_train;
      continue;
    }
    if (test.empty()) {
      ++rd.report.dropped_no_test;
      continue;
    }
    kept.push_back(seq.agent_id);
    rd.user_ids.push_back("u" + std::to_string(seq.agent_id));
    rd.train.sequences.push_back(std::move(train));
    rd.test.emplace_back(test.begin(), test.end());
  }
  rd.report.users_kept = kept.size();
  rd.report.items_kept = C;

  out.truth = full.with_agents(kept.size());
  for (std::size_t m = 0; m < kept.size(); ++m) {
    for (std::size_t c = 0; c < C; ++c) out.truth.mu(c, m) = full.mu(c, kept[m]);
  }
  return out;
}

}  // namespace mahp
