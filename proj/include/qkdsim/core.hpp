#pragma once
// Domain types and math primitives for four-intensity decoy-state MDI-QKD.

#include <cmath>
#include <stdexcept>
#include <string>

namespace qkdsim {

// ---------------------------------------------------------------------------
// Math primitives

/// Binary Shannon entropy in bits, with the 0*log0 = 0 convention.
inline double binary_entropy(double e) {
  if (!(e >= 0.0 && e <= 1.0))
    throw std::domain_error("binary_entropy: argument outside [0,1]");
  if (e == 0.0 || e == 1.0) return 0.0;
  return -e * std::log2(e) - (1.0 - e) * std::log2(1.0 - e);
}

/// Poisson probability of emitting n photons from a pulse of mean photon
/// number mu.
inline double poisson_weight(double mu, int n) {
  if (mu < 0.0) throw std::domain_error("poisson_weight: negative mean");
  if (n < 0) throw std::domain_error("poisson_weight: negative photon number");
  if (mu == 0.0) return n == 0 ? 1.0 : 0.0;
  return std::exp(-mu + n * std::log(mu) - std::lgamma(n + 1.0));
}

inline double loss_to_transmittance(double loss_db) {
  if (loss_db < 0.0)
    throw std::domain_error("loss_to_transmittance: negative loss");
  return std::pow(10.0, -loss_db / 10.0);
}

inline double km_to_loss(double distance_km, double coeff_db_per_km) {
  if (distance_km < 0.0 || coeff_db_per_km < 0.0)
    throw std::domain_error("km_to_loss: negative input");
  return distance_km * coeff_db_per_km;
}

// ---------------------------------------------------------------------------
// Protocol parameters

/// Source intensities: one signal s (Z basis) and the decoy triple
/// mu > nu > omega in the X basis. omega is the vacuum state, pinned to 0.
struct PulseIntensities {
  double s = 0.4;
  double mu = 0.2;
  double nu = 0.05;
  double omega = 0.0;

  void validate() const {
    if (!(s > mu && mu > nu && nu > omega && omega >= 0.0))
      throw std::domain_error("PulseIntensities: require s > mu > nu > omega >= 0");
    if (omega != 0.0)
      throw std::domain_error("PulseIntensities: omega must be exactly 0");
    if (!(std::isfinite(s) && s < 10.0))
      throw std::domain_error("PulseIntensities: s out of range");
  }
};

struct EmissionProbabilities {
  double p_s = 0.5;
  double p_mu = 0.1;
  double p_nu = 0.25;
  double p_omega = 0.15;

  void validate() const {
    for (double p : {p_s, p_mu, p_nu, p_omega})
      if (!(p >= 0.0 && p <= 1.0))
        throw std::domain_error("EmissionProbabilities: probability outside [0,1]");
    double sum = p_s + p_mu + p_nu + p_omega;
    if (std::fabs(sum - 1.0) > 1e-12)
      throw std::domain_error("EmissionProbabilities: probabilities must sum to 1");
  }
};

struct PartyParams {
  PulseIntensities intensities;
  EmissionProbabilities probs;
};

/// The six optimizable implementation parameters per party,
/// [s, mu, nu, P_s, P_mu, P_nu], with P_omega implicit.
struct ProtocolParams {
  PartyParams alice;
  PartyParams bob;
  bool symmetric = true;

  static ProtocolParams make_symmetric(const PulseIntensities& i,
                                       const EmissionProbabilities& p) {
    ProtocolParams out;
    out.alice = {i, p};
    out.bob = {i, p};
    out.symmetric = true;
    return out;
  }

  void validate() const {
    alice.intensities.validate();
    alice.probs.validate();
    bob.intensities.validate();
    bob.probs.validate();
    if (symmetric) {
      auto same = [](double a, double b) { return a == b; };
      bool ok = same(alice.intensities.s, bob.intensities.s) &&
                same(alice.intensities.mu, bob.intensities.mu) &&
                same(alice.intensities.nu, bob.intensities.nu) &&
                same(alice.probs.p_s, bob.probs.p_s) &&
                same(alice.probs.p_mu, bob.probs.p_mu) &&
                same(alice.probs.p_nu, bob.probs.p_nu);
      if (!ok)
        throw std::domain_error("ProtocolParams: symmetric flag set but parties differ");
    }
  }
};

// ---------------------------------------------------------------------------
// Physical system model parameters

struct SystemParams {
  double detector_efficiency = 0.53;         // per SNSPD
  double dark_count_rate = 50.0;             // Hz per detector
  double clock_rate = 1.25e9;                // pulse pairs per second
  double coincidence_window = 600e-12;       // seconds
  double misalignment = 0.015;               // e_d
  double fiber_loss_coeff = 0.2;             // dB/km
  double relay_insertion_loss = 1.75;        // dB per arm inside the relay
  double error_correction_efficiency = 1.16; // f_e
  double hom_mode_overlap = 0.968;           // temporal/spectral mode overlap

  void validate() const {
    if (!(detector_efficiency >= 0.0 && detector_efficiency <= 1.0))
      throw std::domain_error("SystemParams: detector_efficiency outside [0,1]");
    if (dark_count_rate < 0.0)
      throw std::domain_error("SystemParams: negative dark_count_rate");
    if (error_correction_efficiency < 1.0)
      throw std::domain_error("SystemParams: error_correction_efficiency < 1");
    if (!(coincidence_window >= 0.0 && clock_rate > 0.0 &&
          coincidence_window * clock_rate <= 1.0))
      throw std::domain_error("SystemParams: coincidence window exceeds clock period");
    if (!(misalignment >= 0.0 && misalignment <= 1.0))
      throw std::domain_error("SystemParams: misalignment outside [0,1]");
    if (!(hom_mode_overlap >= 0.0 && hom_mode_overlap <= 1.0))
      throw std::domain_error("SystemParams: hom_mode_overlap outside [0,1]");
    if (fiber_loss_coeff < 0.0 || relay_insertion_loss < 0.0)
      throw std::domain_error("SystemParams: negative loss parameter");
  }

  /// Probability of at least one dark count in a coincidence window.
  double dark_prob_per_window() const {
    return -std::expm1(-dark_count_rate * coincidence_window);
  }
};

// ---------------------------------------------------------------------------
// Bell-state measurement outcomes

enum class BellOutcome { PsiPlus, PsiMinus, NoClick, Ambiguous };

/// Classify a four-detector click pattern into a BSM outcome. Detectors are
/// (port 1 H, port 1 V, port 2 H, port 2 V) after the 50/50 beam splitter and
/// the two PBSs. A valid projection is exactly two clicks: same-port H&V for
/// psi+, cross-port H&V for psi-. Anything else with >= 2 clicks is discarded
/// as ambiguous.
inline BellOutcome classify_clicks(bool d1h, bool d1v, bool d2h, bool d2v) {
  int clicks = int(d1h) + int(d1v) + int(d2h) + int(d2v);
  if (clicks < 2) return BellOutcome::NoClick;
  if (clicks > 2) return BellOutcome::Ambiguous;
  if ((d1h && d1v) || (d2h && d2v)) return BellOutcome::PsiPlus;
  if ((d1h && d2v) || (d1v && d2h)) return BellOutcome::PsiMinus;
  return BellOutcome::Ambiguous; // two clicks of the same polarization
}

} // namespace qkdsim
