#pragma once

#include <cstddef>
#include <vector>

namespace mahp {

enum class KernelKind { exponential, gaussian };

const char* to_string(KernelKind kind);

struct GaussianBump {
  double center = 0.0;
  double bandwidth = 1.0;
};

// The L nonnegative decay kernels g_l(t) that the triggering functions are
// expanded on: phi_{cc'}(t) = sum_l a_{cc'l} g_l(t). Lags are measured from
// the triggering event; every kernel is zero for negative lags.
//
//   exponential: g(t) = exp(-w t)
//   gaussian:    g(t) = exp(-(t - center)^2 / (2 bandwidth^2))
class KernelBasis {
 public:
  KernelBasis() = default;

  static KernelBasis exponential(std::vector<double> rates);
  static KernelBasis gaussian(std::vector<GaussianBump> bumps);

  KernelKind kind() const { return kind_; }
  std::size_t size() const;

  const std::vector<double>& rates() const { return rates_; }
  const std::vector<GaussianBump>& bumps() const { return bumps_; }

  double value(std::size_t l, double lag) const;

  // Integral of g_l over lags in [from, to], 0 <= from <= to.
  double integral(std::size_t l, double from, double to) const;

  double total_mass(std::size_t l) const;

  // G = max_l sup_{t>=0} g_l(t)^2.
  double energy_bound() const;

  // Inverse CDF of g_l restricted to [0, horizon]; u in [0, 1).
  double sample_lag(std::size_t l, double horizon, double u) const;

  bool operator==(const KernelBasis& other) const;

 private:
  KernelKind kind_ = KernelKind::exponential;
  std::vector<double> rates_;
  std::vector<GaussianBump> bumps_;
};

}  // namespace mahp
