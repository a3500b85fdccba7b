#pragma once
// Secret key rate of the four-intensity protocol:
//   R = P_sA P_sB { (sA e^-sA)(sB e^-sB) Y11 [1 - h(e11)] - f_e Q_ss h(E_ss) }
// with Q_ss and E_ss conditioned on both parties choosing the signal
// intensity. Negative rates clamp to zero.

#include <cmath>
#include <stdexcept>

#include "qkdsim/core.hpp"
#include "qkdsim/decoy.hpp"
#include "qkdsim/statistics.hpp"
#include "qkdsim/system_model.hpp"

namespace qkdsim {

struct KeyRateResult {
  double rate_per_pulse = 0.0; // secret bits per pulse pair
  double rate_bps = 0.0;       // at the system clock rate
  double q_ss = 0.0;           // per-pulse Z gain, conditioned on (s,s)
  double e_ss = 0.0;           // Z-basis QBER
  DecoyBounds bounds;
  bool clamped = false;
};

inline KeyRateResult secret_key_rate(const ProtocolParams& params,
                                     const DecoyBounds& bounds, double q_ss,
                                     double e_ss, double f_e,
                                     double clock_rate) {
  params.validate();
  if (!(q_ss >= 0.0 && q_ss <= 1.0))
    throw std::domain_error("secret_key_rate: q_ss outside [0,1]");
  if (!(e_ss >= 0.0 && e_ss <= 1.0))
    throw std::domain_error("secret_key_rate: e_ss outside [0,1]");
  if (!(bounds.y11_lower >= 0.0 && bounds.y11_lower <= 1.0 &&
        bounds.e11_upper >= 0.0 && bounds.e11_upper <= 1.0))
    throw std::domain_error("secret_key_rate: bounds outside [0,1]");
  if (f_e < 1.0) throw std::domain_error("secret_key_rate: f_e < 1");
  if (q_ss == 0.0 && e_ss != 0.0)
    throw std::domain_error("secret_key_rate: e_ss defined with zero gain");

  const double sa = params.alice.intensities.s;
  const double sb = params.bob.intensities.s;
  const double psa = params.alice.probs.p_s;
  const double psb = params.bob.probs.p_s;

  const double single = (sa * std::exp(-sa)) * (sb * std::exp(-sb)) *
                        bounds.y11_lower * (1.0 - binary_entropy(bounds.e11_upper));
  const double correction = f_e * q_ss * binary_entropy(e_ss);
  double r = psa * psb * (single - correction);

  KeyRateResult out;
  out.clamped = r < 0.0;
  out.rate_per_pulse = std::max(r, 0.0);
  out.rate_bps = out.rate_per_pulse * clock_rate;
  out.q_ss = q_ss;
  out.e_ss = e_ss;
  out.bounds = bounds;
  return out;
}

/// Full pipeline on observed counts: decoy bounds from the X-basis classes,
/// Z observables from the signal class, then the rate formula.
inline KeyRateResult analyze(const ObservedStatistics& obs,
                             const ProtocolParams& params,
                             const SystemParams& sys,
                             const FluctuationConfig& cfg) {
  obs.validate();
  sys.validate();
  DecoyBounds bounds = estimate_bounds(obs, params, cfg);

  const auto& ss = obs.at(PairClass::SS);
  if (!ss.errors)
    throw std::invalid_argument("analyze: signal class has no error counts");
  const double trials = static_cast<double>(obs.n_pairs) *
                        params.alice.probs.p_s * params.bob.probs.p_s;
  if (trials <= 0.0)
    throw std::invalid_argument("analyze: zero signal emission probability");
  double q_ss = static_cast<double>(ss.total) / trials;
  if (q_ss > 1.0)
    throw std::invalid_argument("analyze: signal gain exceeds 1; inconsistent P_s");
  double e_ss = ss.total > 0
                    ? static_cast<double>(*ss.errors) / static_cast<double>(ss.total)
                    : 0.0;
  return secret_key_rate(params, bounds, q_ss, e_ss,
                         sys.error_correction_efficiency, sys.clock_rate);
}

/// Same pipeline on expected statistics (no sampling noise); the objective
/// used by the parameter optimizer.
inline KeyRateResult analyze_expected(const GainTable& gains, double n_pairs,
                                      const ProtocolParams& params,
                                      const SystemParams& sys,
                                      const FluctuationConfig& cfg) {
  sys.validate();
  DecoyBounds bounds = estimate_bounds_expected(gains, n_pairs, params, cfg);
  const ClassGain& ss = gains.at(PairClass::SS);
  return secret_key_rate(params, bounds, ss.gain, ss.error_fraction,
                         sys.error_correction_efficiency, sys.clock_rate);
}

} // namespace qkdsim
