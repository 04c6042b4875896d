#include "mahp/metrics.hpp"

#include <cmath>
#include <span>

#include "mahp/error.hpp"

namespace mahp {

namespace {

double ratio(std::span<const double> est, std::span<const double> truth, const char* what) {
  double num = 0.0;
  double den = 0.0;
  for (std::size_t k = 0; k < truth.size(); ++k) {
    const double d = truth[k] - est[k];
    num += d * d;
    den += truth[k] * truth[k];
  }
  require(den > 0.0, ErrorCode::invalid_argument, std::string("ground-truth ") + what + " has zero norm");
  return std::sqrt(num / den);
}

}  // namespace

RelativeErrors relative_errors(const ModelParams& estimate, const ModelParams& truth) {
  require(estimate.same_shape(truth), ErrorCode::dimension, "estimate and truth have different shapes");
  RelativeErrors r;
  r.exogenous = ratio(estimate.exogenous(), truth.exogenous(), "U");
  r.impact = ratio(estimate.impacts(), truth.impacts(), "A");
  r.overall = ratio(estimate.theta(), truth.theta(), "theta");
  return r;
}

}  // namespace mahp
