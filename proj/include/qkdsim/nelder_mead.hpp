#pragma once
// Downhill-simplex minimizer (Nelder-Mead) over an unconstrained vector.

#include <algorithm>
#include <functional>
#include <vector>

namespace qkdsim {

struct NelderMeadOptions {
  int max_evals = 2000;
  double rel_tol = 1e-3;     // stop when the simplex value spread is this small
  double initial_step = 0.6; // per-coordinate displacement of the start simplex
};

struct NelderMeadResult {
  std::vector<double> x;
  double f = 0.0;
  int evaluations = 0;
  bool converged = false;
};

inline NelderMeadResult nelder_mead(
    const std::function<double(const std::vector<double>&)>& f,
    std::vector<double> x0, const NelderMeadOptions& opt = {}) {
  const std::size_t n = x0.size();
  const double alpha = 1.0, gamma = 2.0, rho = 0.5, sigma = 0.5;

  NelderMeadResult res;
  std::vector<std::vector<double>> x(n + 1, x0);
  std::vector<double> fx(n + 1);
  for (std::size_t j = 1; j <= n; ++j) x[j][j - 1] += opt.initial_step;
  for (std::size_t j = 0; j <= n; ++j) fx[j] = f(x[j]);
  res.evaluations = static_cast<int>(n) + 1;

  auto order = [&]() {
    std::vector<std::size_t> idx(n + 1);
    for (std::size_t i = 0; i <= n; ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return fx[a] < fx[b]; });
    std::vector<std::vector<double>> x2(n + 1);
    std::vector<double> f2(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
      x2[i] = x[idx[i]];
      f2[i] = fx[idx[i]];
    }
    x.swap(x2);
    fx.swap(f2);
  };

  while (res.evaluations < opt.max_evals) {
    order();
    double spread = std::fabs(fx[n] - fx[0]);
    if (spread <= opt.rel_tol * (std::fabs(fx[0]) + 1e-300)) {
      res.converged = true;
      break;
    }
    std::vector<double> centroid(n, 0.0);
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t i = 0; i < n; ++i) centroid[i] += x[j][i] / n;

    auto along = [&](double t) {
      std::vector<double> p(n);
      for (std::size_t i = 0; i < n; ++i) p[i] = centroid[i] + t * (centroid[i] - x[n][i]);
      return p;
    };

    std::vector<double> xr = along(alpha);
    double fr = f(xr);
    ++res.evaluations;
    if (fr < fx[0]) {
      std::vector<double> xe = along(gamma);
      double fe = f(xe);
      ++res.evaluations;
      if (fe < fr) {
        x[n] = std::move(xe);
        fx[n] = fe;
      } else {
        x[n] = std::move(xr);
        fx[n] = fr;
      }
    } else if (fr < fx[n - 1]) {
      x[n] = std::move(xr);
      fx[n] = fr;
    } else {
      bool outside = fr < fx[n];
      std::vector<double> xc = along(outside ? rho : -rho);
      double fc = f(xc);
      ++res.evaluations;
      if (fc < (outside ? fr : fx[n])) {
        x[n] = std::move(xc);
        fx[n] = fc;
      } else {
        for (std::size_t j = 1; j <= n; ++j) {
          for (std::size_t i = 0; i < n; ++i)
            x[j][i] = x[0][i] + sigma * (x[j][i] - x[0][i]);
          fx[j] = f(x[j]);
        }
        res.evaluations += static_cast<int>(n);
      }
    }
  }
  order();
  res.x = x[0];
  res.f = fx[0];
  return res;
}

} // namespace qkdsim
