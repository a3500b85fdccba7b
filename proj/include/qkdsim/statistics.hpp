#pragma once
// Coincidence count records per intensity-pair class, and the Gaussian
// standard-error treatment of finite-size fluctuations.

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

#include "qkdsim/core.hpp"

namespace qkdsim {

// ---------------------------------------------------------------------------
// Pair classes

/// Intensity-pair classes of the protocol. Mu0 and Nu0 are complex sources
/// combining both orderings (Alice decoy / Bob vacuum and vice versa), so
/// their emission probability is 2 P_i P_omega.
enum class PairClass { SS, MuMu, NuNu, Mu0, Nu0, OO };

inline constexpr std::array<PairClass, 6> kAllClasses = {
    PairClass::SS, PairClass::MuMu, PairClass::NuNu,
    PairClass::Mu0, PairClass::Nu0, PairClass::OO};

inline const char* class_label(PairClass c) {
  switch (c) {
    case PairClass::SS:   return "ss";
    case PairClass::MuMu: return "mumu";
    case PairClass::NuNu: return "nunu";
    case PairClass::Mu0:  return "mu0";
    case PairClass::Nu0:  return "nu0";
    case PairClass::OO:   return "00";
  }
  throw std::logic_error("class_label: bad PairClass");
}

/// Probability that a random pulse pair falls in the given class.
inline double class_probability(const ProtocolParams& params, PairClass c) {
  const auto& pa = params.alice.probs;
  const auto& pb = params.bob.probs;
  switch (c) {
    case PairClass::SS:   return pa.p_s * pb.p_s;
    case PairClass::MuMu: return pa.p_mu * pb.p_mu;
    case PairClass::NuNu: return pa.p_nu * pb.p_nu;
    case PairClass::Mu0:  return pa.p_mu * pb.p_omega + pa.p_omega * pb.p_mu;
    case PairClass::Nu0:  return pa.p_nu * pb.p_omega + pa.p_omega * pb.p_nu;
    case PairClass::OO:   return pa.p_omega * pb.p_omega;
  }
  throw std::logic_error("class_probability: bad PairClass");
}

// ---------------------------------------------------------------------------
// Observed statistics (the shape of a coincidence count table)

struct ClassCounts {
  std::uint64_t total = 0;
  std::optional<std::uint64_t> errors; // absent when the record omits them
};

struct ObservedStatistics {
  std::uint64_t n_pairs = 0;
  std::array<ClassCounts, 6> classes{};

  ClassCounts& at(PairClass c) { return classes[static_cast<int>(c)]; }
  const ClassCounts& at(PairClass c) const { return classes[static_cast<int>(c)]; }

  void validate() const {
    if (n_pairs == 0) throw std::domain_error("ObservedStatistics: n_pairs must be positive");
    for (PairClass c : kAllClasses) {
      const auto& cc = at(c);
      if (cc.total > n_pairs)
        throw std::domain_error(std::string("ObservedStatistics: class ") +
                                class_label(c) + " total exceeds n_pairs");
      if (cc.errors && *cc.errors > cc.total)
        throw std::domain_error(std::string("ObservedStatistics: class ") +
                                class_label(c) + " errors exceed total");
    }
  }
};

/// Sum of two count records, e.g. to merge independently seeded batches.
inline ObservedStatistics merge(const ObservedStatistics& a, const ObservedStatistics& b) {
  ObservedStatistics out;
  out.n_pairs = a.n_pairs + b.n_pairs;
  for (PairClass c : kAllClasses) {
    out.at(c).total = a.at(c).total + b.at(c).total;
    if (a.at(c).errors && b.at(c).errors)
      out.at(c).errors = *a.at(c).errors + *b.at(c).errors;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Fluctuation model

/// One-sided tail quantile of the standard normal: the z with
/// P(X > z) = epsilon. Solved by bisection on erfc.
inline double inverse_normal_tail(double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0))
    throw std::domain_error("inverse_normal_tail: epsilon outside (0,1)");
  auto tail = [](double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); };
  double lo = -40.0, hi = 40.0;
  for (int i = 0; i < 200; ++i) {
    double mid = 0.5 * (lo + hi);
    if (tail(mid) > epsilon)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

enum class FluctuationModel {
  None,                // asymptotic: use the raw ratio
  GaussianJoint,       // fluctuate each distinct observable once, reuse it
  GaussianIndependent, // fluctuate per constraint
};

struct FluctuationConfig {
  double epsilon = 1e-10;
  FluctuationModel model = FluctuationModel::GaussianJoint;

  static FluctuationConfig asymptotic() {
    return {1e-10, FluctuationModel::None};
  }

  /// Number of standard deviations corresponding to the failure probability.
  double n_std() const {
    if (model == FluctuationModel::None) return 0.0;
    return inverse_normal_tail(epsilon);
  }

  void validate() const {
    if (!(epsilon > 0.0 && epsilon < 1.0))
      throw std::domain_error("FluctuationConfig: epsilon outside (0,1)");
  }
};

enum class BoundDirection { Lower, Upper };

/// Per-pulse gain bound from a count: (count +/- n_std sqrt(count)) / n_trials,
/// clamped to [0,1]. Counts may be fractional (expected counts).
inline double fluctuate_gain(double count, double n_trials,
                             const FluctuationConfig& config,
                             BoundDirection direction) {
  if (!(n_trials > 0.0)) throw std::domain_error("fluctuate_gain: n_trials must be positive");
  if (count < 0.0) throw std::domain_error("fluctuate_gain: negative count");
  if (count > n_trials) throw std::domain_error("fluctuate_gain: count exceeds n_trials");
  double dev = 0.0;
  if (config.model != FluctuationModel::None)
    dev = config.n_std() * std::sqrt(count);
  double v = (direction == BoundDirection::Lower) ? count - dev : count + dev;
  v /= n_trials;
  if (v < 0.0) v = 0.0;
  if (v > 1.0) v = 1.0;
  return v;
}

} // namespace qkdsim
