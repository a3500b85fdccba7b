#pragma once
// Full optimization of the six implementation parameters
// [s, mu, nu, P_s, P_mu, P_nu] (symmetric parties, P_omega implicit) against
// the finite-key rate of the expected statistics. Multi-start downhill
// simplex over a transformed space: intensities on a log/ratio scale so the
// ordering s > mu > nu > 0 holds by construction, probabilities through a
// stick-breaking map so they stay on the simplex.

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include "qkdsim/keyrate.hpp"
#include "qkdsim/nelder_mead.hpp"
#include "qkdsim/system_model.hpp"

namespace qkdsim {

class NoPositiveRate : public std::runtime_error {
 public:
  explicit NoPositiveRate(const std::string& what)
      : std::runtime_error("NoPositiveRate: " + what) {}
};

struct OptimizationResult {
  ProtocolParams best;
  KeyRateResult rate;
  int evaluations = 0;
  bool converged = false;
};

struct OptimizeOptions {
  int restarts = 8;
  int max_evals_per_start = 2000;
  double rel_tol = 1e-3;
  std::uint64_t seed = 1;
};

namespace detail {

inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline ProtocolParams decode_point(const std::vector<double>& x) {
  const double s = std::exp(x[0]);
  const double mu = s * logistic(x[1]);
  const double nu = mu * logistic(x[2]);
  EmissionProbabilities p;
  p.p_s = logistic(x[3]);
  p.p_mu = (1.0 - p.p_s) * logistic(x[4]);
  p.p_nu = (1.0 - p.p_s - p.p_mu) * logistic(x[5]);
  p.p_omega = 1.0 - p.p_s - p.p_mu - p.p_nu;
  return ProtocolParams::make_symmetric({s, mu, nu, 0.0}, p);
}

inline bool point_usable(const ProtocolParams& params) {
  const auto& i = params.alice.intensities;
  const auto& p = params.alice.probs;
  return i.s < 9.9 && i.nu > 1e-5 && p.p_omega > 1e-6 && p.p_s > 1e-6 &&
         p.p_mu > 1e-9 && p.p_nu > 1e-9;
}

/// Latin hypercube start points over a box that covers the working regime of
/// the protocol, deterministic in the seed.
inline std::vector<std::vector<double>> latin_hypercube_starts(
    int count, std::uint64_t seed) {
  const double lo[6] = {std::log(0.1), -1.5, -3.5, -1.0, -3.5, -1.0};
  const double hi[6] = {std::log(1.2), 1.5, 0.5, 2.5, 0.5, 2.0};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::vector<double>> starts(count, std::vector<double>(6));
  for (int dim = 0; dim < 6; ++dim) {
    std::vector<int> strata(count);
    for (int k = 0; k < count; ++k) strata[k] = k;
    std::shuffle(strata.begin(), strata.end(), rng);
    for (int k = 0; k < count; ++k) {
      double t = (strata[k] + u(rng)) / count;
      starts[k][dim] = lo[dim] + t * (hi[dim] - lo[dim]);
    }
  }
  return starts;
}

/// Fixed coarse lattice over the same transformed box. The positive-rate
/// region is a thin island at deep loss; screening lattice points with the
/// objective and seeding the descents from the best of them keeps the
/// multi-start search reliable there.
inline std::vector<std::vector<double>> screening_lattice() {
  auto logit = [](double v) { return std::log(v / (1.0 - v)); };
  std::vector<std::vector<double>> pts;
  for (double s : {0.25, 0.4, 0.6})
    for (double mu_frac : {0.3, 0.55})
      for (double nu_frac : {0.1, 0.25})
        for (double ps : {0.45, 0.65, 0.85})
          for (double pmu_frac : {0.05, 0.15})
            for (double pnu_frac : {0.5, 0.75})
              pts.push_back({std::log(s), logit(mu_frac), logit(nu_frac),
                             logit(ps), logit(pmu_frac), logit(pnu_frac)});
  return pts;
}

} // namespace detail

/// Maximize the finite-key rate of the expected statistics at the given
/// channel and pulse budget. Deterministic in options.seed.
inline OptimizationResult optimize(const SystemParams& sys,
                                   const ChannelPair& channel, double n_pairs,
                                   const FluctuationConfig& cfg,
                                   const OptimizeOptions& opt = {},
                                   const ProtocolParams* warm_start = nullptr) {
  sys.validate();
  channel.validate();
  cfg.validate();
  if (n_pairs < 1e9)
    throw std::invalid_argument("optimize: n_pairs below 1e9 gives a numerically zero rate");

  auto objective = [&](const std::vector<double>& x) {
    ProtocolParams params = detail::decode_point(x);
    if (!detail::point_usable(params)) return 0.0;
    try {
      GainTable gains = expected_gains(sys, params, channel);
      KeyRateResult r = analyze_expected(gains, n_pairs, params, sys, cfg);
      return -r.rate_per_pulse;
    } catch (const InfeasibleStatistics&) {
      return 0.0;
    } catch (const std::domain_error&) {
      return 0.0;
    }
  };

  OptimizationResult out;

  // candidate starts: Latin hypercube plus the screening lattice, ranked by
  // the objective; the best opt.restarts of them seed the descents
  auto candidates = detail::latin_hypercube_starts(opt.restarts, opt.seed);
  auto lattice = detail::screening_lattice();
  candidates.insert(candidates.end(), lattice.begin(), lattice.end());
  std::vector<std::pair<double, std::size_t>> ranked;
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    ranked.emplace_back(objective(candidates[k]), k);
    ++out.evaluations;
  }
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<std::vector<double>> starts;
  for (int k = 0; k < opt.restarts && k < static_cast<int>(ranked.size()); ++k)
    starts.push_back(candidates[ranked[k].second]);
  if (warm_start) {
    // encode the previous optimum back into the search space
    const auto& i = warm_start->alice.intensities;
    const auto& p = warm_start->alice.probs;
    auto logit = [](double v) { return std::log(v / (1.0 - v)); };
    starts.push_back({std::log(i.s), logit(i.mu / i.s), logit(i.nu / i.mu),
                      logit(p.p_s), logit(p.p_mu / (1.0 - p.p_s)),
                      logit(p.p_nu / (1.0 - p.p_s - p.p_mu))});
  }

  NelderMeadOptions nm;
  nm.max_evals = opt.max_evals_per_start;
  nm.rel_tol = opt.rel_tol;

  double best_f = 0.0;
  std::vector<double> best_x;
  bool any_converged = false;
  for (const auto& start : starts) {
    NelderMeadResult r = nelder_mead(objective, start, nm);
    out.evaluations += r.evaluations;
    if (r.f < best_f) {
      best_f = r.f;
      best_x = r.x;
      any_converged = r.converged;
    }
  }
  if (best_f >= 0.0 || best_x.empty())
    throw NoPositiveRate("no start reached a positive key rate");

  out.best = detail::decode_point(best_x);
  GainTable gains = expected_gains(sys, out.best, channel);
  out.rate = analyze_expected(gains, n_pairs, out.best, sys, cfg);
  out.converged = any_converged;
  return out;
}

struct CurvePoint {
  double loss_db = 0.0;
  double rate_per_pulse = 0.0;
  double rate_bps = 0.0;
  bool positive = false;
  ProtocolParams params;
};

/// One optimization per grid point, warm-started from the previous loss.
/// Zero-rate points are emitted with rate 0.
inline std::vector<CurvePoint> rate_curve(const SystemParams& sys,
                                          const std::vector<double>& loss_grid_db,
                                          double n_pairs,
                                          const FluctuationConfig& cfg,
                                          const OptimizeOptions& opt = {}) {
  if (loss_grid_db.empty())
    throw std::invalid_argument("rate_curve: empty loss grid");
  for (std::size_t i = 1; i < loss_grid_db.size(); ++i)
    if (loss_grid_db[i] < loss_grid_db[i - 1])
      throw std::invalid_argument("rate_curve: loss grid must be ascending");

  std::vector<CurvePoint> out;
  const ProtocolParams* warm = nullptr;
  ProtocolParams last;
  for (std::size_t i = 0; i < loss_grid_db.size(); ++i) {
    CurvePoint pt;
    pt.loss_db = loss_grid_db[i];
    OptimizeOptions o = opt;
    o.seed = opt.seed + 1000 * i;
    try {
      auto r = optimize(sys, ChannelPair::symmetric_total(pt.loss_db), n_pairs,
                        cfg, o, warm);
      pt.rate_per_pulse = r.rate.rate_per_pulse;
      pt.rate_bps = r.rate.rate_bps;
      pt.positive = pt.rate_per_pulse > 0.0;
      pt.params = r.best;
      last = r.best;
      warm = &last;
    } catch (const NoPositiveRate&) {
      pt.positive = false;
      warm = nullptr;
    }
    out.push_back(pt);
  }
  return out;
}

} // namespace qkdsim
