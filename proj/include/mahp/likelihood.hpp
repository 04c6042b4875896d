#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mahp/model.hpp"

namespace mahp {

struct SparseEntry {
  std::size_t index = 0;
  double value = 0.0;

  bool operator==(const SparseEntry&) const = default;
};

// Entries sorted by strictly increasing index.
struct SparseVector {
  std::vector<SparseEntry> entries;

  std::size_t nnz() const { return entries.size(); }
  bool empty() const { return entries.empty(); }
  double dot(std::span<const double> dense) const;
  double at(std::size_t index) const;
  void clear() { entries.clear(); }
};

// Linear representation of one event's likelihood term:
//   point    = x_{c_i,m}(t_i), so that lambda_{c_i}^m(t_i) = point . theta
//   interval = X_m(t_i) = sum_c int_{t_{i-1}}^{t_i} x_{c,m}(s) ds
// A tail feature covers (t_I, T] and has an empty point part.
struct EventFeatures {
  SparseVector point;
  SparseVector interval;
  std::size_t agent = 0;
  std::size_t entity = 0;
  double time = 0.0;
  double previous_time = 0.0;
  bool tail = false;
};

inline constexpr double kDefaultIntensityFloor = 1e-3;

struct LikelihoodOptions {
  std::size_t history_cap = 50;
  // Lower clamp inside the log; equals the optimizer's offset lambda0.
  double intensity_floor = kDefaultIntensityFloor;
  // Adds the compensator over (t_I, T] for each sequence. Off by default: the
  // per-event decomposition only covers the inter-event intervals.
  bool include_tail = false;
};

// Reusable scratch space for building features of many events.
class Featurizer {
 public:
  Featurizer(std::size_t num_entities, std::size_t num_agents, const KernelBasis& basis);
  explicit Featurizer(const ModelParams& shape)
      : Featurizer(shape.num_entities(), shape.num_agents(), shape.basis()) {}

  // Features of event `index` (0-based). The first interval starts at t = 0.
  void compute(const EventSequence& seq, std::size_t index, std::size_t history_cap,
               EventFeatures& out);
  void compute_tail(const EventSequence& seq, std::size_t history_cap, EventFeatures& out);

 private:
  struct ProfileEntry {
    std::size_t source;
    std::size_t kernel;
    double value;
  };

  void check_sequence(const EventSequence& seq) const;
  void build_interval(const EventSequence& seq, std::size_t first, std::size_t last, double from,
                      double to, EventFeatures& out);
  void merge_profile();

  std::size_t entities_;
  std::size_t agents_;
  KernelBasis basis_;
  std::vector<ProfileEntry> profile_;
};

EventFeatures featurize(const ModelParams& shape, const EventSequence& seq, std::size_t index,
                        std::size_t history_cap);
EventFeatures featurize_tail(const ModelParams& shape, const EventSequence& seq,
                             std::size_t history_cap);

// f_i(theta) = X.theta - log(max(x.theta, floor)); tail features have no log term.
double nll_event(const ModelParams& params, const EventFeatures& features,
                 double intensity_floor = kDefaultIntensityFloor);

// Sum of nll_event over every event of every sequence.
double nll_total(const ModelParams& params, const Dataset& data, const LikelihoodOptions& options = {});

}  // namespace mahp
