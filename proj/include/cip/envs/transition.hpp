#pragma once

#include "cip/numkit/linalg.hpp"

namespace cip {

struct Transition {
  Vector s;
  Vector a;
  double r = 0.0;
  Vector s_next;
  bool done = false;
  bool synthetic = false;  // produced by a counterfactual swap
};

}  // namespace cip
