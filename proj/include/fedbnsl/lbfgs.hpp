#pragma once

#include <functional>
#include <vector>

namespace fedbnsl {

struct LbfgsOptions {
  int max_iterations = 500;
  int memory = 10;
  // Stop when ||grad|| <= gradient_tolerance * max(1, |f|).
  double gradient_tolerance = 1e-6;
  double wolfe_c1 = 1e-4;
  double wolfe_c2 = 0.9;
};

struct LbfgsResult {
  std::vector<double> x;
  double f = 0.0;
  double gradient_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Returns f(x) and fills grad (resized by the callback's caller). Returning
// +infinity rejects the point; the line search backs off.
using LbfgsObjective = std::function<double(const std::vector<double>& x, std::vector<double>& grad)>;

// Limited-memory BFGS with a strong Wolfe line search. Monotone: the returned
// point never has a higher objective than the starting point.
LbfgsResult lbfgs_minimize(const LbfgsObjective& objective, std::vector<double> x0,
                           const LbfgsOptions& opts = {});

}  // namespace fedbnsl
