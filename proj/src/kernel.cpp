#include "mahp/kernel.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "mahp/error.hpp"

namespace mahp {

namespace {

double gaussian_antiderivative(const GaussianBump& b, double t) {
  return b.bandwidth * std::sqrt(std::numbers::pi / 2.0) *
         std::erf((t - b.center) / (b.bandwidth * std::numbers::sqrt2));
}

}  // namespace

const char* to_string(KernelKind kind) {
  return kind == KernelKind::exponential ? "exponential" : "gaussian";
}

KernelBasis KernelBasis::exponential(std::vector<double> rates) {
  require(!rates.empty(), ErrorCode::invalid_argument, "kernel basis needs at least one kernel");
  for (double w : rates) {
    require(std::isfinite(w) && w > 0.0, ErrorCode::invalid_argument,
            "exponential decay rate must be positive, got " + std::to_string(w));
  }
  KernelBasis basis;
  basis.kind_ = KernelKind::exponential;
  basis.rates_ = std::move(rates);
  return basis;
}

KernelBasis KernelBasis::gaussian(std::vector<GaussianBump> bumps) {
  require(!bumps.empty(), ErrorCode::invalid_argument, "kernel basis needs at least one kernel");
  for (const auto& b : bumps) {
    require(std::isfinite(b.center) && std::isfinite(b.bandwidth) && b.bandwidth > 0.0,
            ErrorCode::invalid_argument, "gaussian kernel needs finite center and positive bandwidth");
  }
  KernelBasis basis;
  basis.kind_ = KernelKind::gaussian;
  basis.bumps_ = std::move(bumps);
  return basis;
}

std::size_t KernelBasis::size() const {
  return kind_ == KernelKind::exponential ? rates_.size() : bumps_.size();
}

double KernelBasis::value(std::size_t l, double lag) const {
  if (lag < 0.0) return 0.0;
  if (kind_ == KernelKind::exponential) return std::exp(-rates_[l] * lag);
  const auto& b = bumps_[l];
  const double z = (lag - b.center) / b.bandwidth;
  return std::exp(-0.5 * z * z);
}

double KernelBasis::integral(std::size_t l, double from, double to) const {
  if (to <= from) return 0.0;
  if (from < 0.0) from = 0.0;
  if (kind_ == KernelKind::exponential) {
    const double w = rates_[l];
    // exp(-w a) (1 - exp(-w (b - a))) / w, stable for short intervals
    return std::exp(-w * from) * -std::expm1(-w * (to - from)) / w;
  }
  const auto& b = bumps_[l];
  return gaussian_antiderivative(b, to) - gaussian_antiderivative(b, from);
}

double KernelBasis::total_mass(std::size_t l) const {
  if (kind_ == KernelKind::exponential) return 1.0 / rates_[l];
  const auto& b = bumps_[l];
  return b.bandwidth * std::sqrt(std::numbers::pi / 2.0) *
         std::erfc(-b.center / (b.bandwidth * std::numbers::sqrt2));
}

double KernelBasis::energy_bound() const {
  if (kind_ == KernelKind::exponential) return 1.0;
  double g = 0.0;
  for (const auto& b : bumps_) {
    const double peak = b.center >= 0.0 ? 1.0 : std::exp(-0.5 * (b.center / b.bandwidth) * (b.center / b.bandwidth));
    g = std::max(g, peak * peak);
  }
  return g;
}

double KernelBasis::sample_lag(std::size_t l, double horizon, double u) const {
  if (horizon <= 0.0) return 0.0;
  if (kind_ == KernelKind::exponential) {
    const double w = rates_[l];
    // invert (1 - exp(-w s)) / (1 - exp(-w h)) = u
    const double mass = -std::expm1(-w * horizon);
    return std::min(horizon, -std::log1p(-u * mass) / w);
  }
  const double target = u * integral(l, 0.0, horizon);
  double lo = 0.0;
  double hi = horizon;
  for (int it = 0; it < 200 && hi - lo > 1e-13 * std::max(1.0, horizon); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (integral(l, 0.0, mid) < target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

bool KernelBasis::operator==(const KernelBasis& other) const {
  if (kind_ != other.kind_ || size() != other.size()) return false;
  if (kind_ == KernelKind::exponential) return rates_ == other.rates_;
  for (std::size_t l = 0; l < bumps_.size(); ++l) {
    if (bumps_[l].center != other.bumps_[l].center || bumps_[l].bandwidth != other.bumps_[l].bandwidth) {
      return false;
    }
  }
  return true;
}

}  // namespace mahp
