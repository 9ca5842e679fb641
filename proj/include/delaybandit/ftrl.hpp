#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

// Exact FTRL solves over the probability simplex for the hybrid
// regularizer
//
//   F(x) = sum_i ( -2 eta^{-1} sqrt(x_i) + gamma_i^{-1} x_i (log x_i - 1) )
//
// The minimizer of <L,x> + F(x) on the simplex is computed by dual
// root-finding: find the multiplier nu with
// sum_i x_i(nu) = 1 where f_i'(x_i(nu)) = nu - L_i.

namespace delaybandit {

// Inverse learning rates defining the regularizer. gamma_inv is per-arm;
// all entries equal in the symmetric default.
struct RegularizerWeights {
  double eta_inv = 0.0;
  std::vector<double> gamma_inv;

  static RegularizerWeights symmetric(std::size_t k, double eta_inv,
                                      double gamma_inv) {
    return RegularizerWeights{eta_inv, std::vector<double>(k, gamma_inv)};
  }

  std::size_t arms() const { return gamma_inv.size(); }
};

struct FtrlSolution {
  std::vector<double> x;
  double nu = 0.0;
  int outer_iterations = 0;
  // true if any coordinate fell below 1e-300; never clamped.
  bool underflow = false;

  double min_prob() const {
    double m = std::numeric_limits<double>::infinity();
    for (double v : x) m = std::min(m, v);
    return m;
  }
};

namespace detail {

inline void check_weights(const RegularizerWeights& w) {
  if (w.eta_inv < 0.0 || !std::isfinite(w.eta_inv))
    throw std::invalid_argument("eta_inv must be finite and >= 0");
  for (double g : w.gamma_inv) {
    if (g < 0.0 || !std::isfinite(g))
      throw std::invalid_argument("gamma_inv entries must be finite and >= 0");
    if (w.eta_inv == 0.0 && g == 0.0)
      throw std::invalid_argument("degenerate regularizer: eta_inv and "
                                  "gamma_inv both zero for some arm");
  }
}

}  // namespace detail

// f'(x) = -eta_inv * x^{-1/2} + gamma_inv * log x, strictly increasing in x.
inline double marginal_derivative(double x, double eta_inv, double gamma_inv) {
  if (!(x > 0.0))
    throw std::domain_error("marginal_derivative: x must be positive");
  return -eta_inv / std::sqrt(x) + gamma_inv * std::log(x);
}

inline double marginal_derivative(double x, const RegularizerWeights& w,
                                  std::size_t i) {
  return marginal_derivative(x, w.eta_inv, w.gamma_inv.at(i));
}

// f''(x) = (eta_inv/2) x^{-3/2} + gamma_inv / x.
inline double marginal_second_derivative(double x, double eta_inv,
                                         double gamma_inv) {
  return 0.5 * eta_inv / (x * std::sqrt(x)) + gamma_inv / x;
}

namespace detail {

// Solves f'(x) = target for x > 0. Works in u = log x, where
// g(u) = -eta_inv exp(-u/2) + gamma_inv u - target is increasing and
// concave, so Newton converges globally once started at or below the
// root (and a step from above lands below it).
//
// Returns +inf if the target is unreachable (gamma_inv == 0 and
// target >= 0); callers that require a solution must check.
inline double invert_marginal_capped(double target, double eta_inv,
                                     double gamma_inv, double warm_start_u,
                                     int max_iter = 100) {
  const double inf = std::numeric_limits<double>::infinity();
  if (gamma_inv == 0.0) {
    // pure Tsallis closed form: x = (eta_inv / (-target))^2
    if (target >= 0.0) return inf;
    double r = eta_inv / (-target);
    return r * r;
  }
  if (eta_inv == 0.0) return std::exp(target / gamma_inv);

  const double tol = 1e-12 * (1.0 + std::abs(target));
  // g(u_neg) < 0, so u_neg is always left of the root.
  const double u_neg = target / gamma_inv;
  double u0 = u_neg;
  if (target < 0.0) {
    // Tsallis-only candidate; g there equals gamma_inv * u_t, which is
    // negative exactly when u_t < 0.
    double u_t = 2.0 * std::log(eta_inv / (-target));
    if (u_t < 0.0) u0 = std::max(u0, u_t);
  }
  auto g = [&](double u) {
    double h = -0.5 * u;
    if (h > 700.0) return -inf;  // Tsallis term astronomically dominates
    return -eta_inv * std::exp(h) + gamma_inv * u - target;
  };
  if (std::isfinite(warm_start_u) && std::isfinite(g(warm_start_u)))
    u0 = warm_start_u;
  else if (!std::isfinite(g(u0)))
    u0 = u_neg;  // warm start and u_t both unusable

  double u = u0;
  for (int it = 0; it < max_iter; ++it) {
    double gu = g(u);
    if (!std::isfinite(gu)) {
      // stepped into the overflow region; the Newton step from above is
      // bounded below by u_neg, so this only happens for a bad warm start
      u = u_neg;
      continue;
    }
    if (std::abs(gu) <= tol) return std::exp(u);
    double gp = 0.5 * eta_inv * std::exp(-0.5 * u) + gamma_inv;
    double step = gu / gp;
    u -= step;
    if (std::abs(step) < 1e-16 * (1.0 + std::abs(u))) return std::exp(u);
  }
  throw std::runtime_error("invert_marginal: no convergence after " +
                           std::to_string(max_iter) + " iterations");
}

}  // namespace detail

// Unique x > 0 with marginal_derivative(x, w, i) == target.
inline double invert_marginal(double target, const RegularizerWeights& w,
                              std::size_t i) {
  detail::check_weights(w);
  double gi = w.gamma_inv.at(i);
  if (gi == 0.0 && target >= 0.0)
    throw std::domain_error(
        "invert_marginal: target unreachable for pure Tsallis coordinate");
  double nan = std::numeric_limits<double>::quiet_NaN();
  return detail::invert_marginal_capped(target, w.eta_inv, gi, nan);
}

// <L,x> + F(x), evaluated term by term as written.
inline double objective_value(const std::vector<double>& x,
                              const std::vector<double>& L,
                              const RegularizerWeights& w) {
  if (x.size() != L.size() || x.size() != w.gamma_inv.size())
    throw std::invalid_argument("objective_value: dimension mismatch");
  double v = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0))
      throw std::domain_error("objective_value: x must be interior");
    v += L[i] * x[i];
    v += -2.0 * w.eta_inv * std::sqrt(x[i]) +
         w.gamma_inv[i] * x[i] * (std::log(x[i]) - 1.0);
  }
  return v;
}

// argmin_{x in simplex} <L,x> + F(x).
//
// Dual formulation: sum_i invert_marginal(nu - L_i) is increasing in nu,
// bracketed below by forcing every coordinate <= 1/K and above by forcing
// the max coordinate to 1. Safeguarded Newton on nu inside the bracket.
inline FtrlSolution solve_ftrl(const std::vector<double>& L,
                               const RegularizerWeights& w,
                               int max_outer = 200) {
  detail::check_weights(w);
  const std::size_t k = L.size();
  if (k == 0) throw std::invalid_argument("solve_ftrl: empty loss vector");
  if (k != w.gamma_inv.size())
    throw std::invalid_argument("solve_ftrl: dimension mismatch");
  for (double v : L)
    if (!std::isfinite(v))
      throw std::invalid_argument("solve_ftrl: non-finite loss entry");

  FtrlSolution sol;
  sol.x.assign(k, 0.0);
  if (k == 1) {
    sol.x[0] = 1.0;
    sol.nu = L[0] + marginal_derivative(1.0, w, 0);
    return sol;
  }

  const double inf = std::numeric_limits<double>::infinity();
  double nu_lo = inf, nu_hi = -inf;
  for (std::size_t i = 0; i < k; ++i) {
    nu_lo = std::min(nu_lo, L[i] + marginal_derivative(1.0 / double(k), w, i));
    nu_hi = std::max(nu_hi, L[i] + marginal_derivative(1.0, w, i));
  }

  // warm-started log-coordinates across outer iterations
  std::vector<double> u(k, std::numeric_limits<double>::quiet_NaN());

  auto eval = [&](double nu, double& sum, double& dsum) {
    sum = 0.0;
    dsum = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      double xi = detail::invert_marginal_capped(nu - L[i], w.eta_inv,
                                                 w.gamma_inv[i], u[i]);
      sol.x[i] = xi;
      if (!std::isfinite(xi)) {
        sum = inf;
        dsum = inf;
        return;
      }
      u[i] = std::log(xi);
      sum += xi;
      dsum += 1.0 / marginal_second_derivative(xi, w.eta_inv, w.gamma_inv[i]);
    }
  };

  double nu = 0.5 * (nu_lo + nu_hi);
  double sum = 0.0, dsum = 0.0;
  bool converged = false;
  for (int it = 0; it < max_outer; ++it) {
    sol.outer_iterations = it + 1;
    eval(nu, sum, dsum);
    double resid = sum - 1.0;
    if (std::isfinite(resid) && std::abs(resid) <= 1e-11) {
      converged = true;
      break;
    }
    if (std::isfinite(resid)) {
      if (resid > 0.0)
        nu_hi = std::min(nu_hi, nu);
      else
        nu_lo = std::max(nu_lo, nu);
      // Newton creeps when the exponential branch dominates far from the
      // root; bisect until the residual is small, then let Newton finish.
      double nu_newton = nu - resid / dsum;
      if (std::abs(resid) < 0.5 && std::isfinite(nu_newton) &&
          nu_newton > nu_lo && nu_newton < nu_hi)
        nu = nu_newton;
      else
        nu = 0.5 * (nu_lo + nu_hi);
    } else {
      nu_hi = std::min(nu_hi, nu);
      nu = 0.5 * (nu_lo + nu_hi);
    }
    if (!(nu_hi - nu_lo > 0.0)) break;  // bracket exhausted at double precision
  }
  if (!converged) {
    // final evaluation at the bracket midpoint before giving up
    eval(nu, sum, dsum);
    if (!(std::abs(sum - 1.0) <= 1e-10))
      throw std::runtime_error("solve_ftrl: dual root-finding failed, |sum-1|=" +
                               std::to_string(std::abs(sum - 1.0)));
  }
  sol.nu = nu;
  for (double xi : sol.x)
    if (xi < 1e-300) sol.underflow = true;
  return sol;
}

}  // namespace delaybandit
