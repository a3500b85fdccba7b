#pragma once
// Forward model of the physical link: weak coherent pulses from both parties,
// lossy channels, interference at the relay beam splitter, threshold
// detection with dark counts, and Bell-state pattern classification.
//
// Coherent states stay coherent through linear optics, so each detector sees
// a coherent state whose intensity depends on the (uniformly random) relative
// phase between the two pulses. Click probabilities are independent given the
// phase; gains are the phase average of the click-pattern probabilities.

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>

#include "qkdsim/core.hpp"
#include "qkdsim/jones.hpp"
#include "qkdsim/statistics.hpp"

namespace qkdsim {

struct ChannelPair {
  double loss_alice_db = 0.0;
  double loss_bob_db = 0.0;

  static ChannelPair symmetric_total(double total_db) {
    return {total_db / 2.0, total_db / 2.0};
  }

  static ChannelPair from_fiber(double distance_alice_km, double distance_bob_km,
                                double coeff_db_per_km) {
    return {km_to_loss(distance_alice_km, coeff_db_per_km),
            km_to_loss(distance_bob_km, coeff_db_per_km)};
  }

  double total_db() const { return loss_alice_db + loss_bob_db; }

  void validate() const {
    if (loss_alice_db < 0.0 || loss_bob_db < 0.0)
      throw std::domain_error("ChannelPair: negative loss");
  }
};

struct ClassGain {
  double gain = 0.0;           // per-pulse-pair probability of a psi+- coincidence
  double error_fraction = 0.0; // fraction of those coincidences with wrong bits
};

struct GainTable {
  std::array<ClassGain, 6> classes{};
  ClassGain& at(PairClass c) { return classes[static_cast<int>(c)]; }
  const ClassGain& at(PairClass c) const { return classes[static_cast<int>(c)]; }
};

namespace detail {

struct PatternProbs {
  double psi_plus = 0.0;
  double psi_minus = 0.0;
};

/// Click-pattern probabilities for one pulse pair. lambda_a/b are the mean
/// photon numbers arriving at the beam splitter; eta is applied at the
/// detectors. Partial mode overlap routes part of Bob's pulse into a second
/// temporal mode that does not interfere.
inline PatternProbs bsm_pattern_probs(double lambda_a, double lambda_b,
                                      const JonesVector& state_a,
                                      const JonesVector& state_b,
                                      const SystemParams& sys) {
  const double eta = sys.detector_efficiency;
  const double p_dark = sys.dark_prob_per_window();
  const double xi = sys.hom_mode_overlap;
  // misalignment as a relative frame rotation applied to Alice
  const double beta = std::asin(std::sqrt(sys.misalignment));
  const JonesVector sa = JonesMatrix::rotation(beta) * state_a;

  const double amp_a = std::sqrt(lambda_a);
  const double amp_b0 = std::sqrt(lambda_b * xi);
  // non-interfering part of Bob's pulse, split evenly between the ports
  const double t1_h = 0.5 * lambda_b * (1.0 - xi) * std::norm(state_b.h);
  const double t1_v = 0.5 * lambda_b * (1.0 - xi) * std::norm(state_b.v);

  // phase grid; the integrand's Fourier content grows with the beat amplitude
  const double beat = 2.0 * std::sqrt(lambda_a * lambda_b);
  const int n_phase = (lambda_a == 0.0 || lambda_b == 0.0) ? 1 : (beat > 10.0 ? 256 : 64);

  PatternProbs acc;
  for (int k = 0; k < n_phase; ++k) {
    const double delta = 2.0 * M_PI * k / n_phase;
    const complexd ph = std::exp(complexd(0.0, delta));
    const complexd ah = amp_a * sa.h, av = amp_a * sa.v;
    const complexd bh = amp_b0 * ph * state_b.h, bv = amp_b0 * ph * state_b.v;
    // 50/50 splitter: port1 = (a - b)/sqrt2, port2 = (a + b)/sqrt2
    const double inten[4] = {
        eta * (0.5 * std::norm(ah - bh) + t1_h), // 1H
        eta * (0.5 * std::norm(av - bv) + t1_v), // 1V
        eta * (0.5 * std::norm(ah + bh) + t1_h), // 2H
        eta * (0.5 * std::norm(av + bv) + t1_v), // 2V
    };
    double click[4], silent[4];
    for (int d = 0; d < 4; ++d) {
      click[d] = 1.0 - (1.0 - p_dark) * std::exp(-inten[d]);
      silent[d] = 1.0 - click[d];
    }
    for (int mask = 0; mask < 16; ++mask) {
      const bool d1h = mask & 1, d1v = mask & 2, d2h = mask & 4, d2v = mask & 8;
      BellOutcome out = classify_clicks(d1h, d1v, d2h, d2v);
      if (out != BellOutcome::PsiPlus && out != BellOutcome::PsiMinus) continue;
      double p = (d1h ? click[0] : silent[0]) * (d1v ? click[1] : silent[1]) *
                 (d2h ? click[2] : silent[2]) * (d2v ? click[3] : silent[3]);
      if (out == BellOutcome::PsiPlus)
        acc.psi_plus += p;
      else
        acc.psi_minus += p;
    }
  }
  acc.psi_plus /= n_phase;
  acc.psi_minus /= n_phase;
  return acc;
}

/// Gain and error fraction for a class where both parties send light in the
/// given basis. Bit bookkeeping: a psi- projection implies anticorrelated
/// bits in either basis; psi+ implies anticorrelated bits in Z but
/// correlated bits in X.
inline ClassGain two_party_gain(Basis basis, double lambda_a, double lambda_b,
                                const SystemParams& sys) {
  double q = 0.0, e = 0.0;
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      PatternProbs p = bsm_pattern_probs(lambda_a, lambda_b,
                                         protocol_state(basis, a),
                                         protocol_state(basis, b), sys);
      q += 0.25 * (p.psi_plus + p.psi_minus);
      if (basis == Basis::Z)
        e += 0.25 * (a == b ? p.psi_plus + p.psi_minus : 0.0);
      else
        e += 0.25 * (a == b ? p.psi_minus : p.psi_plus);
    }
  }
  return {q, q > 0.0 ? e / q : 0.0};
}

/// Gain when one party sends vacuum: only the lit party's states matter and
/// the vacuum party's bit is uncorrelated, so half the coincidences are
/// errors.
inline ClassGain one_party_gain(double lambda_lit, bool lit_is_alice,
                                const SystemParams& sys) {
  double q = 0.0;
  const JonesVector vac{0.0, 0.0};
  for (int b = 0; b < 2; ++b) {
    JonesVector st = protocol_state(Basis::X, b);
    PatternProbs p = lit_is_alice
                         ? bsm_pattern_probs(lambda_lit, 0.0, st, vac, sys)
                         : bsm_pattern_probs(0.0, lambda_lit, vac, st, sys);
    q += 0.5 * (p.psi_plus + p.psi_minus);
  }
  return {q, 0.5};
}

} // namespace detail

/// Expected per-pulse gains and error fractions for every intensity-pair
/// class of the protocol at the given channel.
inline GainTable expected_gains(const SystemParams& sys,
                                const ProtocolParams& params,
                                const ChannelPair& channel) {
  sys.validate();
  params.validate();
  channel.validate();
  const double ta = loss_to_transmittance(channel.loss_alice_db + sys.relay_insertion_loss);
  const double tb = loss_to_transmittance(channel.loss_bob_db + sys.relay_insertion_loss);
  const auto& ia = params.alice.intensities;
  const auto& ib = params.bob.intensities;

  GainTable out;
  out.at(PairClass::SS) = detail::two_party_gain(Basis::Z, ia.s * ta, ib.s * tb, sys);
  out.at(PairClass::MuMu) = detail::two_party_gain(Basis::X, ia.mu * ta, ib.mu * tb, sys);
  out.at(PairClass::NuNu) = detail::two_party_gain(Basis::X, ia.nu * ta, ib.nu * tb, sys);

  // complex sources: both orderings, weighted by their emission probabilities
  auto complex_gain = [&](double int_a, double int_b, double w_a0, double w_0b) {
    ClassGain ga = detail::one_party_gain(int_a * ta, true, sys);
    ClassGain gb = detail::one_party_gain(int_b * tb, false, sys);
    double w = w_a0 + w_0b;
    double q = w > 0.0 ? (w_a0 * ga.gain + w_0b * gb.gain) / w
                       : 0.5 * (ga.gain + gb.gain);
    return ClassGain{q, 0.5};
  };
  const auto& pa = params.alice.probs;
  const auto& pb = params.bob.probs;
  out.at(PairClass::Mu0) = complex_gain(ia.mu, ib.mu, pa.p_mu * pb.p_omega, pa.p_omega * pb.p_mu);
  out.at(PairClass::Nu0) = complex_gain(ia.nu, ib.nu, pa.p_nu * pb.p_omega, pa.p_omega * pb.p_nu);

  detail::PatternProbs p00 = detail::bsm_pattern_probs(0.0, 0.0, {0.0, 0.0}, {0.0, 0.0}, sys);
  out.at(PairClass::OO) = {p00.psi_plus + p00.psi_minus, 0.5};
  return out;
}

/// Draw a count record from the expected gains. Deterministic for a given
/// seed. Batches with disjoint seeds can be combined with merge().
inline ObservedStatistics simulate_counts(const SystemParams& sys,
                                          const ProtocolParams& params,
                                          const ChannelPair& channel,
                                          std::uint64_t n_pairs,
                                          std::uint64_t seed) {
  if (n_pairs == 0) throw std::domain_error("simulate_counts: n_pairs must be >= 1");
  GainTable gains = expected_gains(sys, params, channel);
  std::mt19937_64 rng(seed);
  ObservedStatistics out;
  out.n_pairs = n_pairs;
  for (PairClass c : kAllClasses) {
    const ClassGain& g = gains.at(c);
    double p = class_probability(params, c) * g.gain;
    std::uint64_t total = 0;
    if (p > 0.0) {
      std::binomial_distribution<std::uint64_t> dist(n_pairs, p);
      total = dist(rng);
    }
    std::uint64_t errors = 0;
    if (total > 0 && g.error_fraction > 0.0) {
      std::binomial_distribution<std::uint64_t> edist(total, g.error_fraction);
      errors = edist(rng);
    }
    out.at(c) = {total, errors};
  }
  return out;
}

/// Hong-Ou-Mandel dip visibility for two phase-randomized weak coherent
/// pulses of the given mean photon numbers, with the system's mode overlap.
/// Both pulses are co-polarized; the coincidence is between the two splitter
/// output ports. The reference (outside the dip) is the fully distinguishable
/// case.
inline double hom_visibility(const SystemParams& sys, double mu_a, double mu_b) {
  if (mu_a < 0.0 || mu_b < 0.0)
    throw std::domain_error("hom_visibility: negative mean photon number");
  sys.validate();
  const double eta = sys.detector_efficiency;
  const double p_dark = sys.dark_prob_per_window();

  auto coincidence = [&](double overlap) {
    const double beat = 2.0 * std::sqrt(mu_a * mu_b * overlap);
    const int n_phase = (beat == 0.0) ? 1 : (beat > 10.0 ? 256 : 64);
    const double t1 = 0.5 * mu_b * (1.0 - overlap);
    double acc = 0.0;
    for (int k = 0; k < n_phase; ++k) {
      const double delta = 2.0 * M_PI * k / n_phase;
      const complexd a{std::sqrt(mu_a), 0.0};
      const complexd b = std::sqrt(mu_b * overlap) * std::exp(complexd(0.0, delta));
      const double i1 = eta * (0.5 * std::norm(a - b) + t1);
      const double i2 = eta * (0.5 * std::norm(a + b) + t1);
      const double c1 = 1.0 - (1.0 - p_dark) * std::exp(-i1);
      const double c2 = 1.0 - (1.0 - p_dark) * std::exp(-i2);
      acc += c1 * c2;
    }
    return acc / n_phase;
  };

  const double dip = coincidence(sys.hom_mode_overlap);
  const double reference = coincidence(0.0);
  if (reference <= 0.0) return 0.0;
  return 1.0 - dip / reference;
}

/// The model's own single-photon pair yield and error rate in the X basis,
/// extracted from the coherent-state gains by photon-number expansion.
/// A phase-randomized coherent pulse is a Poisson mixture of Fock states, so
/// G(a,b) = exp(a+b) Q(a,b) has Taylor coefficients Y_nm / (n! m!); the mixed
/// second derivative at zero intensity is Y_11. Evaluated by finite
/// differences with one Richardson step.
struct SinglePhotonTruth {
  double y11 = 0.0;
  double e11 = 0.0;
};

inline SinglePhotonTruth single_photon_pair_yield(const SystemParams& sys,
                                                  const ChannelPair& channel) {
  const double ta = loss_to_transmittance(channel.loss_alice_db + sys.relay_insertion_loss);
  const double tb = loss_to_transmittance(channel.loss_bob_db + sys.relay_insertion_loss);
  auto qx = [&](double a, double b) {
    ClassGain g = detail::two_party_gain(Basis::X, a * ta, b * tb, sys);
    return std::pair<double, double>{g.gain, g.gain * g.error_fraction};
  };
  auto mixed_diff = [&](double h, bool error_gain) {
    auto g = [&](double a, double b) {
      auto [q, eq] = qx(a, b);
      return std::exp(a + b) * (error_gain ? eq : q);
    };
    return (g(h, h) - g(h, 0.0) - g(0.0, h) + g(0.0, 0.0)) / (h * h);
  };
  const double h = 0.02;
  double y11 = 2.0 * mixed_diff(h / 2.0, false) - mixed_diff(h, false);
  double ey11 = 2.0 * mixed_diff(h / 2.0, true) - mixed_diff(h, true);
  SinglePhotonTruth out;
  out.y11 = y11;
  out.e11 = y11 > 0.0 ? ey11 / y11 : 0.0;
  return out;
}

} // namespace qkdsim
