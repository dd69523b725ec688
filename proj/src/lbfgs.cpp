#include "fedbnsl/lbfgs.hpp"

#include <cmath>
#include <deque>
#include <limits>

namespace fedbnsl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

// phi(alpha) = f(x0 + alpha * dir) along the current search ray.
struct LineSearchEval {
  const LbfgsObjective* objective;
  const std::vector<double>* x0;
  const std::vector<double>* dir;
  std::vector<double> xt, gt;

  double operator()(double alpha, double* dphi) {
    for (std::size_t i = 0; i < x0->size(); ++i) xt[i] = (*x0)[i] + alpha * (*dir)[i];
    const double f = (*objective)(xt, gt);
    *dphi = std::isfinite(f) ? dot(gt, *dir) : kInf;
    return f;
  }
};

struct LineSearchResult {
  double alpha = 0.0;
  double f = kInf;
  bool ok = false;
};

// Strong Wolfe search: bracket by expansion, then bisect. An infinite trial
// objective counts as "went too far" and shrinks the bracket.
LineSearchResult wolfe_search(LineSearchEval& eval, double f0, double dphi0, double alpha_init,
                              double c1, double c2) {
  LineSearchResult best;  // best sufficient-decrease point seen (fallback)

  auto zoom = [&](double lo, double flo, double hi) -> LineSearchResult {
    for (int it = 0; it < 40; ++it) {
      const double alpha = lo + 0.5 * (hi - lo);
      double dphi;
      const double f = eval(alpha, &dphi);
      if (!std::isfinite(f) || f > f0 + c1 * alpha * dphi0 || f >= flo) {
        hi = alpha;
      } else {
        if (std::abs(dphi) <= -c2 * dphi0) return {alpha, f, true};
        if (f < best.f) best = {alpha, f, true};
        if (dphi * (hi - lo) >= 0.0) hi = lo;
        lo = alpha;
        flo = f;
      }
      if (std::abs(hi - lo) < 1e-16 * std::max(1.0, std::abs(lo))) break;
    }
    return best;
  };

  double alpha_prev = 0.0, f_prev = f0;
  double alpha = alpha_init;
  for (int it = 1; it <= 30; ++it) {
    double dphi;
    const double f = eval(alpha, &dphi);
    if (!std::isfinite(f) || f > f0 + c1 * alpha * dphi0 || (it > 1 && f >= f_prev)) {
      return zoom(alpha_prev, f_prev, alpha);
    }
    if (f < best.f) best = {alpha, f, true};
    if (std::abs(dphi) <= -c2 * dphi0) return {alpha, f, true};
    if (dphi >= 0.0) return zoom(alpha, f, alpha_prev);
    alpha_prev = alpha;
    f_prev = f;
    alpha *= 2.0;
  }
  return best;
}

}  // namespace

LbfgsResult lbfgs_minimize(const LbfgsObjective& objective, std::vector<double> x0,
                           const LbfgsOptions& opts) {
  const std::size_t n = x0.size();
  std::vector<double> grad(n, 0.0);
  const double f0 = objective(x0, grad);

  LbfgsResult out;
  out.x = std::move(x0);
  out.f = f0;
  out.gradient_norm = norm2(grad);
  if (!std::isfinite(f0)) return out;  // caller decides how to treat a bad start

  std::deque<std::vector<double>> s_hist, y_hist;
  std::deque<double> rho_hist;
  std::vector<double> dir(n), x_new(n), grad_new(n);

  LineSearchEval eval{&objective, &out.x, &dir, std::vector<double>(n), std::vector<double>(n)};

  for (int iter = 1; iter <= opts.max_iterations; ++iter) {
    if (out.gradient_norm <= opts.gradient_tolerance * std::max(1.0, std::abs(out.f))) {
      out.converged = true;
      return out;
    }

    // Two-loop recursion for the quasi-Newton direction.
    dir = grad;
    std::vector<double> alpha_mem(s_hist.size());
    for (std::size_t k = s_hist.size(); k-- > 0;) {
      alpha_mem[k] = rho_hist[k] * dot(s_hist[k], dir);
      for (std::size_t i = 0; i < n; ++i) dir[i] -= alpha_mem[k] * y_hist[k][i];
    }
    if (!s_hist.empty()) {
      const double scale = dot(s_hist.back(), y_hist.back()) / dot(y_hist.back(), y_hist.back());
      for (double& v : dir) v *= scale;
    }
    for (std::size_t k = 0; k < s_hist.size(); ++k) {
      const double beta = rho_hist[k] * dot(y_hist[k], dir);
      for (std::size_t i = 0; i < n; ++i) dir[i] += (alpha_mem[k] - beta) * s_hist[k][i];
    }
    for (double& v : dir) v = -v;

    double dphi0 = dot(grad, dir);
    if (dphi0 >= 0.0) {  // not a descent direction; restart from steepest descent
      for (std::size_t i = 0; i < n; ++i) dir[i] = -grad[i];
      dphi0 = -dot(grad, grad);
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
    }

    const double alpha_init =
        s_hist.empty() ? std::min(1.0, 1.0 / std::max(1e-12, out.gradient_norm)) : 1.0;
    const auto ls = wolfe_search(eval, out.f, dphi0, alpha_init, opts.wolfe_c1, opts.wolfe_c2);
    out.iterations = iter;
    if (!ls.ok || !(ls.f < out.f)) return out;  // no further progress possible

    for (std::size_t i = 0; i < n; ++i) x_new[i] = out.x[i] + ls.alpha * dir[i];
    const double f_new = objective(x_new, grad_new);

    std::vector<double> s(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = x_new[i] - out.x[i];
      y[i] = grad_new[i] - grad[i];
    }
    const double sy = dot(s, y);
    if (sy > 1e-10 * norm2(s) * norm2(y)) {  // curvature guard
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(y));
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > opts.memory) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }

    out.x = x_new;
    out.f = f_new;
    grad = grad_new;
    out.gradient_norm = norm2(grad);
  }
  return out;
}

}  // namespace fedbnsl
