#pragma once
// Single-photon yield and error bounds from four-intensity decoy statistics.
//
// Two independent routes are provided:
//  - estimate_bounds: closed-form elimination. With a_n = P(n|nu), b_n =
//    P(n|mu) and the vacuum-subtracted combinations
//      H_nu = Q_nunu - e^-nu (Q_nu0 + Q_0nu) + e^-2nu Q_00
//      H_mu = Q_mumu - e^-mu (Q_mu0 + Q_0mu) + e^-2mu Q_00
//    every term of exp(2x) H_x is x^(n+m) Y_nm / (n! m!), so the combination
//    mu^3 exp(2nu) H_nu - nu^3 exp(2mu) H_mu cancels all photon-number orders
//    except (1,1) with non-positive residuals, giving
//      Y11 >= [mu^3 e^{2nu} H_nu - nu^3 e^{2mu} H_mu] / [mu^2 nu^2 (mu - nu)].
//    The error bound keeps only the (1,1) term of the nu-pair error gain:
//      e11 Y11 <= e^{2nu} [EQ_nunu - 2 e^-nu EQ_nu0 + e^-2nu EQ_00] / nu^2.
//  - lp_bounds: a truncated linear program over the yield matrix, used as the
//    oracle that certifies the closed form.

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "qkdsim/core.hpp"
#include "qkdsim/lp.hpp"
#include "qkdsim/statistics.hpp"
#include "qkdsim/system_model.hpp"

namespace qkdsim {

class InfeasibleStatistics : public std::runtime_error {
 public:
  explicit InfeasibleStatistics(const std::string& what)
      : std::runtime_error("InfeasibleStatistics: " + what) {}
};

struct DecoyAudit {
  // fluctuated per-pulse gains as consumed by the yield estimator
  double q_mumu = 0, q_nunu = 0, q_mu0 = 0, q_nu0 = 0;
  double q_00_nu = 0, q_00_mu = 0; // identical under joint constraints
  double eq_nunu = 0, eq_nu0 = 0, eq_00 = 0;
  double h_nu = 0, h_mu = 0;
  double y11_raw = 0;       // before clamping
  double e11y11_upper = 0;
};

struct DecoyBounds {
  double y11_lower = 0.0;
  double e11_upper = 1.0;
  bool clamped = false; // a negative intermediate estimate was clamped to 0
  DecoyAudit audit;
};

namespace detail {

/// One class of observations reduced to (count, trials); counts may be
/// fractional when they are expected values.
struct ClassSample {
  double total = 0.0;
  std::optional<double> errors;
  double trials = 0.0;
};

using ClassSamples = std::array<ClassSample, 6>;

inline const ClassSample& sample(const ClassSamples& s, PairClass c) {
  return s[static_cast<int>(c)];
}

inline ClassSamples samples_from_counts(const ObservedStatistics& obs,
                                        const ProtocolParams& params) {
  obs.validate();
  ClassSamples out;
  for (PairClass c : kAllClasses) {
    ClassSample& s = out[static_cast<int>(c)];
    s.total = static_cast<double>(obs.at(c).total);
    if (obs.at(c).errors) s.errors = static_cast<double>(*obs.at(c).errors);
    s.trials = static_cast<double>(obs.n_pairs) * class_probability(params, c);
  }
  return out;
}

inline ClassSamples samples_from_gains(const GainTable& gains, double n_pairs,
                                       const ProtocolParams& params) {
  ClassSamples out;
  for (PairClass c : kAllClasses) {
    ClassSample& s = out[static_cast<int>(c)];
    s.trials = n_pairs * class_probability(params, c);
    s.total = gains.at(c).gain * s.trials;
    s.errors = gains.at(c).gain * gains.at(c).error_fraction * s.trials;
  }
  return out;
}

inline void require_symmetric_intensities(const ProtocolParams& params) {
  if (params.alice.intensities.mu != params.bob.intensities.mu ||
      params.alice.intensities.nu != params.bob.intensities.nu)
    throw std::invalid_argument(
        "decoy analysis requires equal decoy intensities on both parties");
}

inline double fluct_total(const ClassSample& s, const FluctuationConfig& cfg,
                          BoundDirection d) {
  if (s.trials <= 0.0) return 0.0;
  return fluctuate_gain(std::min(s.total, s.trials), s.trials, cfg, d);
}

inline double fluct_errors(const ClassSample& s, const FluctuationConfig& cfg,
                           BoundDirection d, PairClass c) {
  if (!s.errors)
    throw std::invalid_argument(std::string("decoy analysis needs error counts for class ") +
                                class_label(c));
  if (s.trials <= 0.0) return 0.0;
  return fluctuate_gain(std::min(*s.errors, s.trials), s.trials, cfg, d);
}

inline DecoyBounds estimate_bounds_from_samples(const ClassSamples& s,
                                                double mu, double nu,
                                                const FluctuationConfig& cfg) {
  if (!(mu > nu && nu > 0.0))
    throw std::invalid_argument("estimate_bounds: require mu > nu > 0");
  cfg.validate();
  const double a0 = std::exp(-nu);
  const double b0 = std::exp(-mu);
  const auto lower = BoundDirection::Lower;
  const auto upper = BoundDirection::Upper;

  DecoyAudit audit;
  audit.q_nunu = fluct_total(sample(s, PairClass::NuNu), cfg, lower);
  audit.q_nu0 = fluct_total(sample(s, PairClass::Nu0), cfg, upper);
  audit.q_mumu = fluct_total(sample(s, PairClass::MuMu), cfg, upper);
  audit.q_mu0 = fluct_total(sample(s, PairClass::Mu0), cfg, lower);
  // Q_00 enters H_nu with +mu^3 and H_mu with -nu^3; under joint constraints
  // it is one observable fluctuated once, in the direction of the net
  // coefficient mu^3 - nu^3 > 0.
  const double q00_dn = fluct_total(sample(s, PairClass::OO), cfg, lower);
  const double q00_up = fluct_total(sample(s, PairClass::OO), cfg, upper);
  const bool joint = cfg.model != FluctuationModel::GaussianIndependent;
  audit.q_00_nu = q00_dn;
  audit.q_00_mu = joint ? q00_dn : q00_up;

  // feasibility: the most favorable fluctuations must leave the directly
  // observable yield combinations non-negative
  const double h_nu_max = fluct_total(sample(s, PairClass::NuNu), cfg, upper) -
                          2.0 * a0 * fluct_total(sample(s, PairClass::Nu0), cfg, lower) +
                          a0 * a0 * q00_up;
  const double h_mu_max = fluct_total(sample(s, PairClass::MuMu), cfg, upper) -
                          2.0 * b0 * fluct_total(sample(s, PairClass::Mu0), cfg, lower) +
                          b0 * b0 * q00_up;
  if (h_nu_max < 0.0)
    throw InfeasibleStatistics("nu-pair gains below their vacuum contribution");
  if (h_mu_max < 0.0)
    throw InfeasibleStatistics("mu-pair gains below their vacuum contribution");

  audit.h_nu = audit.q_nunu - 2.0 * a0 * audit.q_nu0 + a0 * a0 * audit.q_00_nu;
  audit.h_mu = audit.q_mumu - 2.0 * b0 * audit.q_mu0 + b0 * b0 * audit.q_00_mu;

  const double mu2 = mu * mu, nu2 = nu * nu;
  audit.y11_raw = (mu * mu2 * std::exp(2.0 * nu) * audit.h_nu -
                   nu * nu2 * std::exp(2.0 * mu) * audit.h_mu) /
                  (mu2 * nu2 * (mu - nu));

  DecoyBounds out;
  out.y11_lower = std::max(audit.y11_raw, 0.0);
  out.clamped = audit.y11_raw < 0.0;

  audit.eq_nunu = fluct_errors(sample(s, PairClass::NuNu), cfg, upper, PairClass::NuNu);
  audit.eq_nu0 = fluct_errors(sample(s, PairClass::Nu0), cfg, lower, PairClass::Nu0);
  audit.eq_00 = fluct_errors(sample(s, PairClass::OO), cfg, upper, PairClass::OO);
  double num = audit.eq_nunu - 2.0 * a0 * audit.eq_nu0 + a0 * a0 * audit.eq_00;
  audit.e11y11_upper = std::max(std::exp(2.0 * nu) * num / nu2, 0.0);

  if (out.y11_lower > 0.0)
    out.e11_upper = std::min(audit.e11y11_upper / out.y11_lower, 1.0);
  else
    out.e11_upper = 1.0;
  out.audit = audit;
  return out;
}

} // namespace detail

/// Analytic four-intensity decoy bounds from observed counts.
inline DecoyBounds estimate_bounds(const ObservedStatistics& obs,
                                   const ProtocolParams& params,
                                   const FluctuationConfig& cfg) {
  params.validate();
  detail::require_symmetric_intensities(params);
  auto s = detail::samples_from_counts(obs, params);
  return detail::estimate_bounds_from_samples(s, params.alice.intensities.mu,
                                              params.alice.intensities.nu, cfg);
}

/// Analytic bounds from expected statistics (the optimizer's noise-free path).
inline DecoyBounds estimate_bounds_expected(const GainTable& gains, double n_pairs,
                                            const ProtocolParams& params,
                                            const FluctuationConfig& cfg) {
  params.validate();
  detail::require_symmetric_intensities(params);
  auto s = detail::samples_from_gains(gains, n_pairs, params);
  return detail::estimate_bounds_from_samples(s, params.alice.intensities.mu,
                                              params.alice.intensities.nu, cfg);
}

namespace detail {

/// Shared constraint-matrix builder for the truncated yield LP. Variables are
/// the yields Y_nm, n,m in [0, n_cut], flattened row-major; with_errors adds
/// a second block B_nm = e_nm Y_nm constrained by the error gains and by
/// B <= Y.
struct YieldLpProblem {
  std::vector<std::vector<double>> a;
  std::vector<double> b;
  int n = 0;      // n_cut + 1
  int n_vars = 0; // structural variables

  int yidx(int nn, int mm) const { return nn * n + mm; }
  int bidx(int nn, int mm) const { return n * n + nn * n + mm; }
};

inline YieldLpProblem build_yield_lp(const ClassSamples& s, double mu, double nu,
                                     const FluctuationConfig& cfg, int n_cut,
                                     bool with_errors) {
  YieldLpProblem lp;
  lp.n = n_cut + 1;
  const int ny = lp.n * lp.n;
  lp.n_vars = with_errors ? 2 * ny : ny;

  // per-class Poisson coefficient rows over the truncated yield matrix
  auto class_row = [&](PairClass c) {
    std::vector<double> row(ny, 0.0);
    switch (c) {
      case PairClass::MuMu:
      case PairClass::NuNu: {
        double x = (c == PairClass::MuMu) ? mu : nu;
        for (int nn = 0; nn < lp.n; ++nn)
          for (int mm = 0; mm < lp.n; ++mm)
            row[lp.yidx(nn, mm)] = poisson_weight(x, nn) * poisson_weight(x, mm);
        break;
      }
      case PairClass::Mu0:
      case PairClass::Nu0: {
        double x = (c == PairClass::Mu0) ? mu : nu;
        for (int k = 0; k < lp.n; ++k) {
          row[lp.yidx(k, 0)] += 0.5 * poisson_weight(x, k);
          row[lp.yidx(0, k)] += 0.5 * poisson_weight(x, k);
        }
        break;
      }
      case PairClass::OO:
        row[lp.yidx(0, 0)] = 1.0;
        break;
      case PairClass::SS:
        throw std::logic_error("signal class has no X-basis yield row");
    }
    return row;
  };

  // append lo <= row.x <= hi as two rows, scaled so the largest coefficient
  // is 1; rows narrower than n_vars are zero-padded
  auto add_interval = [&](const std::vector<double>& row, double lo, double hi) {
    double scale = 0.0;
    for (double v : row) scale = std::max(scale, std::fabs(v));
    if (scale <= 0.0) return;
    std::vector<double> up(lp.n_vars, 0.0), dn(lp.n_vars, 0.0);
    for (int j = 0; j < static_cast<int>(row.size()); ++j) {
      up[j] = row[j] / scale;
      dn[j] = -row[j] / scale;
    }
    lp.a.push_back(std::move(up));
    lp.b.push_back(hi / scale);
    lp.a.push_back(std::move(dn));
    lp.b.push_back(-lo / scale);
  };

  const std::array<PairClass, 5> x_classes = {PairClass::MuMu, PairClass::NuNu,
                                              PairClass::Mu0, PairClass::Nu0,
                                              PairClass::OO};
  for (PairClass c : x_classes) {
    const ClassSample& cs = sample(s, c);
    if (cs.trials <= 0.0) continue;
    std::vector<double> row = class_row(c);
    double mass = 0.0;
    for (double v : row) mass += v;
    const double tail = std::max(1.0 - mass, 0.0); // truncated Poisson mass
    double lo = fluct_total(cs, cfg, BoundDirection::Lower);
    double hi = fluct_total(cs, cfg, BoundDirection::Upper);
    // yields beyond the truncation can contribute up to the tail mass
    add_interval(row, std::max(lo - tail, 0.0), hi);

    if (with_errors && cs.errors) {
      std::vector<double> erow(lp.n_vars, 0.0);
      for (int j = 0; j < ny; ++j) erow[ny + j] = row[j];
      double elo = fluct_errors(cs, cfg, BoundDirection::Lower, c);
      double ehi = fluct_errors(cs, cfg, BoundDirection::Upper, c);
      add_interval(erow, std::max(elo - tail, 0.0), ehi);
    }
  }

  // box: every yield is a probability
  for (int j = 0; j < ny; ++j) {
    std::vector<double> row(lp.n_vars, 0.0);
    row[j] = 1.0;
    lp.a.push_back(row);
    lp.b.push_back(1.0);
  }
  if (with_errors) {
    // B_nm <= Y_nm
    for (int j = 0; j < ny; ++j) {
      std::vector<double> row(lp.n_vars, 0.0);
      row[ny + j] = 1.0;
      row[j] = -1.0;
      lp.a.push_back(row);
      lp.b.push_back(0.0);
    }
  }
  return lp;
}

} // namespace detail

/// Linear-program bounds on Y11 and e11 over the truncated yield matrix:
/// min Y11, and max (e11 Y11) divided by the certified Y11 minimum. Serves as
/// the brute-force oracle for the closed-form estimator.
inline DecoyBounds lp_bounds(const ObservedStatistics& obs,
                             const ProtocolParams& params,
                             const FluctuationConfig& cfg, int n_cut) {
  params.validate();
  detail::require_symmetric_intensities(params);
  if (n_cut < 5) throw std::invalid_argument("lp_bounds: n_cut must be >= 5");
  auto s = detail::samples_from_counts(obs, params);
  const double mu = params.alice.intensities.mu;
  const double nu = params.alice.intensities.nu;

  // lower bound on Y11
  auto low = detail::build_yield_lp(s, mu, nu, cfg, n_cut, false);
  std::vector<double> c_min(low.n_vars, 0.0);
  c_min[low.yidx(1, 1)] = 1.0;
  LpResult rl = solve_lp(low.a, low.b, c_min);
  if (rl.status == LpStatus::Infeasible)
    throw InfeasibleStatistics("yield LP infeasible");
  if (rl.status != LpStatus::Optimal)
    throw std::runtime_error("lp_bounds: unexpected LP status");

  DecoyBounds out;
  out.y11_lower = std::max(rl.objective, 0.0);
  out.audit.y11_raw = rl.objective;

  // upper bound on e11 Y11
  auto up = detail::build_yield_lp(s, mu, nu, cfg, n_cut, true);
  std::vector<double> c_max(up.n_vars, 0.0);
  c_max[up.bidx(1, 1)] = -1.0; // maximize B_11
  LpResult ru = solve_lp(up.a, up.b, c_max);
  if (ru.status == LpStatus::Infeasible)
    throw InfeasibleStatistics("error-yield LP infeasible");
  if (ru.status != LpStatus::Optimal)
    throw std::runtime_error("lp_bounds: unexpected LP status");
  out.audit.e11y11_upper = std::max(-ru.objective, 0.0);

  out.e11_upper = out.y11_lower > 0.0
                      ? std::min(out.audit.e11y11_upper / out.y11_lower, 1.0)
                      : 1.0;
  return out;
}

} // namespace qkdsim
