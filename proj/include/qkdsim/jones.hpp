#pragma once
// Jones calculus on the {H, V} mode pair: states, retarders, rotations.

#include <array>
#include <cmath>
#include <complex>
#include <stdexcept>

namespace qkdsim {

using complexd = std::complex<double>;

struct JonesVector {
  complexd h{0.0, 0.0};
  complexd v{0.0, 0.0};

  double norm2() const { return std::norm(h) + std::norm(v); }

  JonesVector normalized() const {
    double n = std::sqrt(norm2());
    if (n == 0.0) throw std::domain_error("JonesVector: cannot normalize zero vector");
    return {h / n, v / n};
  }

  void validate() const {
    if (std::fabs(norm2() - 1.0) > 1e-9)
      throw std::domain_error("JonesVector: state is not normalized");
  }
};

/// Polarization qubit state as a normalized Jones vector.
using PolarizationState = JonesVector;

inline complexd inner(const JonesVector& a, const JonesVector& b) {
  return std::conj(a.h) * b.h + std::conj(a.v) * b.v;
}

/// |<a|b>|^2
inline double projection_prob(const JonesVector& a, const JonesVector& b) {
  return std::norm(inner(a, b));
}

struct JonesMatrix {
  // row-major 2x2
  complexd m00{1.0, 0.0}, m01{0.0, 0.0};
  complexd m10{0.0, 0.0}, m11{1.0, 0.0};

  static JonesMatrix identity() { return {}; }

  /// Real rotation of the H/V frame by theta.
  static JonesMatrix rotation(double theta) {
    double c = std::cos(theta), s = std::sin(theta);
    return {complexd(c), complexd(-s), complexd(s), complexd(c)};
  }

  /// Linear retarder with retardance delta, fast axis at angle theta.
  static JonesMatrix waveplate(double theta, double delta) {
    JonesMatrix r = rotation(theta);
    JonesMatrix rt = rotation(-theta);
    JonesMatrix d{complexd(1.0), complexd(0.0), complexd(0.0),
                  std::exp(complexd(0.0, delta))};
    return r * d * rt;
  }

  JonesVector operator*(const JonesVector& x) const {
    return {m00 * x.h + m01 * x.v, m10 * x.h + m11 * x.v};
  }

  JonesMatrix operator*(const JonesMatrix& o) const {
    return {m00 * o.m00 + m01 * o.m10, m00 * o.m01 + m01 * o.m11,
            m10 * o.m00 + m11 * o.m10, m10 * o.m01 + m11 * o.m11};
  }
};

// Protocol states in the relay-aligned frame: the key basis coincides with
// the PBS eigenmodes and the decoy basis is its diagonal conjugate.
enum class Basis { Z, X };

inline PolarizationState protocol_state(Basis basis, int bit) {
  if (bit != 0 && bit != 1) throw std::domain_error("protocol_state: bit must be 0 or 1");
  static const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  if (basis == Basis::Z)
    return bit == 0 ? JonesVector{1.0, 0.0} : JonesVector{0.0, 1.0};
  return bit == 0 ? JonesVector{inv_sqrt2, inv_sqrt2}
                  : JonesVector{inv_sqrt2, -inv_sqrt2};
}

} // namespace qkdsim
