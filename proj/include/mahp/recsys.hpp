#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mahp/model.hpp"
#include "mahp/pipeline.hpp"

namespace mahp {

// One raw interaction, e.g. a purchase or a rating.
struct RawEvent {
  std::string user;
  std::string item;
  std::int64_t timestamp = 0;  // epoch seconds
  std::optional<double> rating;
};

struct SplitWindows {
  std::int64_t train_begin = 0;
  std::int64_t split = 0;  // end of the train window, start of the test window
  std::int64_t test_end = 0;
};

struct SplitFilters {
  std::size_t max_train_events = 5;
  double min_rating = 4.0;
  std::size_t min_test_events = 1;
  // items need strictly more interactions than this
  std::size_t min_item_support = 40;
  // seconds per model time unit
  double time_unit = 86400.0;
};

struct SplitReport {
  std::size_t raw_events = 0;
  std::size_t items_kept = 0;
  std::size_t users_seen = 0;
  std::size_t users_kept = 0;
  std::size_t dropped_too_many_train = 0;
  std::size_t dropped_low_rating = 0;
  std::size_t dropped_no_test = 0;
  std::size_t duplicates_dropped = 0;
};

struct RecDataset {
  Dataset train;                                 // one sequence per retained user
  std::vector<std::vector<std::size_t>> test;   // distinct test-window items per user
  std::vector<std::string> user_ids;
  std::vector<std::string> item_ids;
  double split_time = 0.0;                       // query time, in model units
  SplitReport report;

  bool empty() const { return train.sequences.empty(); }
};

// Cold-start selection: keeps items with enough support, then users with at
// most max_train_events train-window events, all train ratings >= min_rating
// (where given) and at least min_test_events test-window events.
RecDataset coldstart_split(std::span<const RawEvent> raw, const SplitWindows& windows,
                           const SplitFilters& filters = {});

// sum over history events before t of phi_{c, c_i}(t - t_i), for every c.
std::vector<double> endogenous_scores(const ModelParams& params, const EventSequence& history, double t);

struct Recommendation {
  std::vector<std::size_t> items;
  std::vector<double> scores;
};

// Top-N entities by endogenous intensity at t, ties by ascending index. An
// empty history falls back to the agent's exogenous intensities.
Recommendation recommend(const ModelParams& params, const EventSequence& history, double t, std::size_t top);

struct UserMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Macro-averaged top-N metrics in percent.
struct TopNMetrics {
  std::size_t top = 0;
  std::size_t users = 0;
  std::size_t excluded = 0;  // users without test items
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::vector<UserMetrics> per_user;  // evaluated users only
};

// ranked[m] lists at least `top` items (only the first `top` count).
TopNMetrics evaluate_topn(std::span<const std::vector<std::size_t>> ranked,
                          std::span<const std::vector<std::size_t>> truth, std::size_t top);

struct RecResult {
  std::vector<std::vector<std::size_t>> ranked;
  std::vector<TopNMetrics> metrics;  // one per requested N
  FitReport fit;
};

RecResult train_and_recommend(const RecDataset& dataset, const PipelineConfig& cfg, const KernelBasis& basis,
                              std::span<const std::size_t> tops);

// Planted cold-start data: entity c triggers one target entity strongly;
// users fall into groups that prefer disjoint blocks of items.
struct PlantedConfig {
  std::size_t items = 20;
  std::size_t users = 300;
  std::size_t groups = 4;
  double train_horizon = 30.0;
  double test_horizon = 10.0;
  double decay = 0.1;
  double dominant = 0.06;
  double background = 0.0002;
  double preferred_rate = 0.02;
  double other_rate = 0.001;
  std::size_t max_events = 100;
  std::size_t max_train_events = 5;
  std::uint64_t seed = 0;
};

struct PlantedData {
  ModelParams truth;  // columns follow the retained users
  RecDataset data;
  std::vector<std::size_t> target;  // planted target of each entity
};

PlantedData planted_coldstart(const PlantedConfig& cfg);

}  // namespace mahp
