#pragma once

#include "mahp/model.hpp"

namespace mahp {

struct RelativeErrors {
  double exogenous = 0.0;  // ||U* - U||_F / ||U*||_F
  double impact = 0.0;     // ||A* - A||_F / ||A*||_F
  double overall = 0.0;    // ||theta* - theta||_2 / ||theta*||_2
};

// Throws on shape mismatch or when a truth block has zero norm.
RelativeErrors relative_errors(const ModelParams& estimate, const ModelParams& truth);

}  // namespace mahp
