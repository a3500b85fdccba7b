#pragma once
// Desk-scale simulation of the automatic polarization alignment loop.
//
// Geometry: Alice's pulses pass her controller EPC-A and her fiber, Bob's
// pass his fiber; both meet at the relay beam splitter, whose output ports
// run through EPC-1 to PBS 1 and EPC-2 to PBS 2. Alignment proceeds in three
// steps: (1) Bob's reference states are locked to both PBSs by adjusting
// EPC-1 and EPC-2, (2) Alice locks her frame with EPC-A against PBS 1,
// (3) EPC-2 is touched up so PBS 2 matches the key basis for both parties.
// Each step runs coordinate descent with step halving on the three wave-plate
// angles of the named controller, minimizing the wrong-detector count
// fraction of that step's reference states. Channel drift is a Gaussian
// random walk on the fiber unitary angles, one step per feedback iteration.

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "qkdsim/core.hpp"
#include "qkdsim/jones.hpp"

namespace qkdsim {

/// Three concatenated wave plates (quarter, half, quarter) parameterized by
/// their axis angles; covers every polarization rotation.
struct EpcAngles {
  std::array<double, 3> angles{0.0, 0.0, 0.0};

  JonesMatrix unitary() const {
    return JonesMatrix::waveplate(angles[2], M_PI / 2.0) *
           JonesMatrix::waveplate(angles[1], M_PI) *
           JonesMatrix::waveplate(angles[0], M_PI / 2.0);
  }

  void wrap() {
    for (double& a : angles) {
      a = std::fmod(a, 2.0 * M_PI);
      if (a < 0.0) a += 2.0 * M_PI;
    }
  }
};

struct AlignmentState {
  EpcAngles epc_a, epc_1, epc_2;
  EpcAngles channel_alice, channel_bob; // drifting fiber unitaries
  double drift = 0.0;                   // radians per iteration, random walk
  double qber_z = 0.0, qber_x = 0.0;    // last evaluated observables
};

struct AlignmentReport {
  std::array<int, 3> iterations_per_step{0, 0, 0};
  double final_qber_z = 0.0;
  double final_qber_x = 0.0;
  bool converged = false;
  std::vector<double> trace;       // accepted objective value per iteration
  std::vector<int> segment_starts; // trace index where each descent run begins
};

namespace detail {

enum class Party { Alice, Bob };
enum class Port { One, Two };

inline JonesMatrix path_unitary(const AlignmentState& st, Party p, Port r) {
  JonesMatrix u = p == Party::Alice
                      ? st.channel_alice.unitary() * st.epc_a.unitary()
                      : st.channel_bob.unitary();
  return r == Port::One ? st.epc_1.unitary() * u : st.epc_2.unitary() * u;
}

/// Mean wrong-projection probability of one party's reference states (both
/// bases) at one PBS; the count ratio each alignment step feeds back on.
/// Referencing both bases pins the whole rotation, not just the key axis.
inline double wrong_fraction(const AlignmentState& st, Party p, Port r) {
  JonesMatrix u = path_unitary(st, p, r);
  double w = 0.0;
  for (Basis basis : {Basis::Z, Basis::X}) {
    for (int bit = 0; bit < 2; ++bit) {
      JonesVector out = u * protocol_state(basis, bit);
      w += 0.25 * projection_prob(protocol_state(basis, 1 - bit), out);
    }
  }
  return w;
}

} // namespace detail

/// Simulated QBER of the current geometry. A coincidence compares Alice's
/// and Bob's bits, so the pair is wrong when exactly one photon misprojects:
/// with per-party wrong-projection fractions wa, wb the pair error is
/// wa + wb - 2 wa wb. Averaged over both PBS paths, blended with the
/// residual misalignment floor e_d; the X basis adds the intrinsic
/// multi-photon floor of weak coherent interference.
inline std::pair<double, double> qber_of_state(const AlignmentState& st,
                                               const SystemParams& sys) {
  using detail::Party;
  using detail::Port;
  double wz = 0.0, wx = 0.0;
  for (Port r : {Port::One, Port::Two}) {
    double wa_z = 0.0, wb_z = 0.0, wa_x = 0.0, wb_x = 0.0;
    for (Party p : {Party::Alice, Party::Bob}) {
      JonesMatrix u = detail::path_unitary(st, p, r);
      double vz = 0.0, vx = 0.0;
      for (int bit = 0; bit < 2; ++bit) {
        vz += 0.5 * projection_prob(protocol_state(Basis::Z, 1 - bit),
                                    u * protocol_state(Basis::Z, bit));
        vx += 0.5 * projection_prob(protocol_state(Basis::X, 1 - bit),
                                    u * protocol_state(Basis::X, bit));
      }
      (p == Party::Alice ? wa_z : wb_z) = vz;
      (p == Party::Alice ? wa_x : wb_x) = vx;
    }
    wz += 0.5 * (wa_z + wb_z - 2.0 * wa_z * wb_z);
    wx += 0.5 * (wa_x + wb_x - 2.0 * wa_x * wb_x);
  }
  const double ed = sys.misalignment;
  const double pz = ed + (1.0 - 2.0 * ed) * wz;
  const double px = ed + (1.0 - 2.0 * ed) * wx;
  const double x_floor = 0.25;
  return {pz, x_floor + (1.0 - 2.0 * x_floor) * px};
}

/// Advance the channel random walk without feedback (free-running drift).
inline void inject_drift(AlignmentState& st, int iterations, std::uint64_t seed) {
  if (st.drift <= 0.0 || iterations <= 0) return;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> step(0.0, st.drift);
  for (int i = 0; i < iterations; ++i) {
    for (double& a : st.channel_alice.angles) a += step(rng);
    for (double& a : st.channel_bob.angles) a += step(rng);
  }
  st.channel_alice.wrap();
  st.channel_bob.wrap();
}

/// Run the three-step alignment until the Z QBER reaches the target or the
/// iteration budget is exhausted. One iteration = one feedback evaluation;
/// drift advances on every iteration.
inline AlignmentReport run_alignment(AlignmentState& st, const SystemParams& sys,
                                     double target_qber, int max_iter,
                                     std::uint64_t seed) {
  if (!(target_qber > 0.0 && target_qber < 0.1))
    throw std::domain_error("run_alignment: target_qber outside (0, 0.1)");
  if (max_iter < 1) throw std::domain_error("run_alignment: max_iter must be >= 1");

  using detail::Party;
  using detail::Port;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> drift_step(0.0, st.drift);
  AlignmentReport report;
  int iter = 0;

  // evaluate a step objective; advances drift, counts the iteration
  auto evaluate = [&](int step_index, auto&& objective) {
    if (st.drift > 0.0) {
      for (double& a : st.channel_alice.angles) a += drift_step(rng);
      for (double& a : st.channel_bob.angles) a += drift_step(rng);
    }
    ++iter;
    ++report.iterations_per_step[step_index];
    return objective();
  };

  // coordinate descent with a coarse scan then step halving on one angle set
  auto descend = [&](EpcAngles& epc, int step_index, auto&& objective) {
    if (iter >= max_iter) return;
    report.segment_starts.push_back(static_cast<int>(report.trace.size()));
    double current = evaluate(step_index, objective);
    report.trace.push_back(current);
    for (int sweep = 0; sweep < 4 && iter < max_iter; ++sweep) {
      double sweep_start = current;
      for (double& angle : epc.angles) {
        const double original = angle;
        // coarse scan over a full turn
        double best_angle = original, best = current;
        for (int k = 0; k < 16 && iter < max_iter; ++k) {
          angle = original + k * (2.0 * M_PI / 16.0);
          double v = evaluate(step_index, objective);
          if (v < best) {
            best = v;
            best_angle = angle;
          }
          report.trace.push_back(std::min(best, current));
        }
        angle = best_angle;
        current = std::min(best, current);
        // halve the step around the best point
        for (double step = 2.0 * M_PI / 16.0; step > 1e-7 && iter < max_iter;
             step *= 0.5) {
          for (double sign : {1.0, -1.0}) {
            angle = best_angle + sign * step;
            double v = evaluate(step_index, objective);
            if (v < current) {
              current = v;
              best_angle = angle;
            }
            report.trace.push_back(current);
          }
          angle = best_angle;
        }
        if (iter >= max_iter) break;
      }
      if (sweep_start - current < 1e-10) break;
    }
    epc.wrap();
  };

  auto step1a = [&]() { return detail::wrong_fraction(st, Party::Bob, Port::One); };
  auto step1b = [&]() { return detail::wrong_fraction(st, Party::Bob, Port::Two); };
  auto step2 = [&]() { return detail::wrong_fraction(st, Party::Alice, Port::One); };
  auto step3 = [&]() {
    return 0.5 * (detail::wrong_fraction(st, Party::Alice, Port::Two) +
                  detail::wrong_fraction(st, Party::Bob, Port::Two));
  };

  while (iter < max_iter) {
    auto [qz, qx] = qber_of_state(st, sys);
    st.qber_z = qz;
    st.qber_x = qx;
    if (qz <= target_qber) {
      report.converged = true;
      break;
    }
    descend(st.epc_1, 0, step1a);
    descend(st.epc_2, 0, step1b);
    descend(st.epc_a, 1, step2);
    descend(st.epc_2, 2, step3);
  }
  auto [qz, qx] = qber_of_state(st, sys);
  st.qber_z = qz;
  st.qber_x = qx;
  report.final_qber_z = qz;
  report.final_qber_x = qx;
  report.converged = qz <= target_qber;
  return report;
}

} // namespace qkdsim
