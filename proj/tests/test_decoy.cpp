#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "fixtures.hpp"
#include "qkdsim/decoy.hpp"
#include "qkdsim/system_model.hpp"

using namespace qkdsim;

namespace {

// Independent forward-mixing oracle: per-pulse gains of every class from a
// full yield/error matrix (truncated far beyond the analysis cut).
struct YieldModel {
  int n = 0;
  std::vector<double> y; // yields
  std::vector<double> e; // error rates per photon-number pair
  double at(int a, int b) const { return y[a * n + b]; }
  double err(int a, int b) const { return e[a * n + b]; }
};

double mix_gain(const YieldModel& m, double ia, double ib, bool error_part) {
  double q = 0.0;
  for (int a = 0; a < m.n; ++a)
    for (int b = 0; b < m.n; ++b) {
      double w = poisson_weight(ia, a) * poisson_weight(ib, b);
      q += w * m.at(a, b) * (error_part ? m.err(a, b) : 1.0);
    }
  return q;
}

ObservedStatistics observe_model(const YieldModel& m, const ProtocolParams& p,
                                 double n_pairs) {
  const double mu = p.alice.intensities.mu;
  const double nu = p.alice.intensities.nu;
  const double s = p.alice.intensities.s;
  ObservedStatistics o;
  o.n_pairs = static_cast<std::uint64_t>(n_pairs);
  auto fill = [&](PairClass c, double ia, double ib) {
    double trials = n_pairs * class_probability(p, c);
    double q = 0.5 * (mix_gain(m, ia, ib, false) + mix_gain(m, ib, ia, false));
    double eq = 0.5 * (mix_gain(m, ia, ib, true) + mix_gain(m, ib, ia, true));
    o.at(c).total = static_cast<std::uint64_t>(std::llround(q * trials));
    o.at(c).errors = static_cast<std::uint64_t>(std::llround(eq * trials));
  };
  fill(PairClass::SS, s, s);
  fill(PairClass::MuMu, mu, mu);
  fill(PairClass::NuNu, nu, nu);
  fill(PairClass::Mu0, mu, 0.0);
  fill(PairClass::Nu0, nu, 0.0);
  fill(PairClass::OO, 0.0, 0.0);
  return o;
}

YieldModel random_model(std::mt19937_64& rng) {
  YieldModel m;
  m.n = 14;
  m.y.resize(m.n * m.n);
  m.e.resize(m.n * m.n);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  // yields grow with photon number, as any physical detector model does,
  // but random scales keep the oracle adversarial
  double base = std::pow(10.0, -4.0 * u(rng));
  for (int a = 0; a < m.n; ++a)
    for (int b = 0; b < m.n; ++b) {
      double v = base * (0.2 + u(rng)) * (a + b + u(rng));
      m.y[a * m.n + b] = std::min(v, 1.0);
      m.e[a * m.n + b] = (a == 0 || b == 0) ? 0.5 : 0.5 * u(rng);
    }
  m.y[0] = std::min(m.y[0], 1e-8); // vacuum-vacuum stays dark-count sized
  return m;
}

} // namespace

TEST_CASE("published 28 dB column reproduces its yield and error rows") {
  auto obs = fixtures::table_counts_28db();
  auto params = fixtures::assumed_params_28db();
  FluctuationConfig cfg{1e-10, FluctuationModel::GaussianJoint};
  auto b = estimate_bounds(obs, params, cfg);
  CHECK(b.y11_lower == Catch::Approx(8.98e-5).epsilon(0.15));
  CHECK(b.e11_upper == Catch::Approx(0.068).epsilon(0.15));
  CHECK_FALSE(b.clamped);
}

TEST_CASE("published 36 dB column reproduces its yield and error rows") {
  auto obs = fixtures::table_counts_36db();
  auto params = fixtures::assumed_params_36db();
  FluctuationConfig cfg{1e-10, FluctuationModel::GaussianJoint};
  auto b = estimate_bounds(obs, params, cfg);
  CHECK(b.y11_lower == Catch::Approx(2.43e-5).epsilon(0.15));
  CHECK(b.e11_upper == Catch::Approx(0.089).epsilon(0.15));
}

TEST_CASE("LP certifies the analytic bound on the published data") {
  auto obs = fixtures::table_counts_28db();
  auto params = fixtures::assumed_params_28db();
  FluctuationConfig cfg{1e-10, FluctuationModel::GaussianJoint};
  auto analytic = estimate_bounds(obs, params, cfg);
  auto lp = lp_bounds(obs, params, cfg, 10);
  CHECK(lp.y11_lower >= analytic.y11_lower - 1e-12);
  CHECK(lp.e11_upper <= analytic.e11_upper + 1e-12);
}

TEST_CASE("bounds are sound against the forward-mixing oracle") {
  std::mt19937_64 rng(2024);
  FluctuationConfig cfg = FluctuationConfig::asymptotic();
  auto params = ProtocolParams::make_symmetric({0.5, 0.25, 0.08, 0.0},
                                               {0.4, 0.15, 0.25, 0.2});
  int clamped = 0;
  for (int trial = 0; trial < 30; ++trial) {
    YieldModel m = random_model(rng);
    auto obs = observe_model(m, params, 1e15);
    auto analytic = estimate_bounds(obs, params, cfg);
    auto lp = lp_bounds(obs, params, cfg, 8);
    double true_y11 = m.at(1, 1);
    double true_e11 = m.err(1, 1);
    CHECK(analytic.y11_lower <= lp.y11_lower + 1e-9);
    CHECK(lp.y11_lower <= true_y11 * (1.0 + 1e-6) + 1e-9);
    CHECK(lp.e11_upper >= std::min(true_e11, 1.0) - 1e-6);
    CHECK(analytic.e11_upper >= lp.e11_upper - 1e-9);
    if (analytic.clamped) ++clamped;
  }
  CHECK(clamped < 30); // the suite must exercise non-degenerate cases
}

TEST_CASE("stronger confidence never tightens the claims") {
  auto obs = fixtures::table_counts_28db();
  auto params = fixtures::assumed_params_28db();
  double prev_y = 2.0, prev_e = -1.0;
  for (double eps : {1e-3, 1e-6, 1e-10, 1e-14}) {
    FluctuationConfig cfg{eps, FluctuationModel::GaussianJoint};
    auto b = estimate_bounds(obs, params, cfg);
    CHECK(b.y11_lower <= prev_y + 1e-15);
    CHECK(b.e11_upper >= prev_e - 1e-15);
    prev_y = b.y11_lower;
    prev_e = b.e11_upper;
  }
}

TEST_CASE("asymptotic analysis recovers the forward model's yield") {
  SystemParams sys = fixtures::system_28db();
  auto params = ProtocolParams::make_symmetric({0.4, 0.2, 0.06, 0.0},
                                               {0.4, 0.1, 0.3, 0.2});
  auto channel = ChannelPair::symmetric_total(28.0);
  auto gains = expected_gains(sys, params, channel);
  auto truth = single_photon_pair_yield(sys, channel);
  auto b = estimate_bounds_expected(gains, 1.0, params, FluctuationConfig::asymptotic());
  CHECK(b.y11_lower <= truth.y11 * (1.0 + 1e-9));
  CHECK(b.y11_lower == Catch::Approx(truth.y11).epsilon(0.05));
  CHECK(b.e11_upper >= truth.e11);
}

TEST_CASE("joint constraints dominate independent ones") {
  FluctuationConfig joint{1e-10, FluctuationModel::GaussianJoint};
  FluctuationConfig indep{1e-10, FluctuationModel::GaussianIndependent};
  for (bool deep : {false, true}) {
    auto obs = deep ? fixtures::table_counts_36db() : fixtures::table_counts_28db();
    auto params = deep ? fixtures::assumed_params_36db() : fixtures::assumed_params_28db();
    auto bj = estimate_bounds(obs, params, joint);
    auto bi = estimate_bounds(obs, params, indep);
    CHECK(bj.y11_lower >= bi.y11_lower - 1e-15);
    CHECK(bj.e11_upper <= bi.e11_upper + 1e-15);
  }
}

TEST_CASE("no counts means no single-photon claim") {
  ObservedStatistics o;
  o.n_pairs = 1000000000ull;
  for (PairClass c : kAllClasses) o.at(c) = {0ull, 0ull};
  auto params = fixtures::assumed_params_28db();
  FluctuationConfig cfg = FluctuationConfig::asymptotic();
  auto analytic = estimate_bounds(o, params, cfg);
  CHECK(analytic.y11_lower == 0.0);
  auto lp = lp_bounds(o, params, cfg, 8);
  CHECK(lp.y11_lower == 0.0);
}

TEST_CASE("inconsistent gains are rejected") {
  auto params = fixtures::assumed_params_28db();
  ObservedStatistics o;
  o.n_pairs = 1000000000000ull;
  // enormous one-sided gains with zero pair gains cannot come from any
  // non-negative yield matrix
  o.at(PairClass::SS) = {1000ull, 10ull};
  o.at(PairClass::MuMu) = {0ull, 0ull};
  o.at(PairClass::NuNu) = {0ull, 0ull};
  o.at(PairClass::Mu0) = {200000000ull, 100000000ull};
  o.at(PairClass::Nu0) = {200000000ull, 100000000ull};
  o.at(PairClass::OO) = {0ull, 0ull};
  FluctuationConfig cfg = FluctuationConfig::asymptotic();
  CHECK_THROWS_AS(estimate_bounds(o, params, cfg), InfeasibleStatistics);
  CHECK_THROWS_AS(lp_bounds(o, params, cfg, 8), InfeasibleStatistics);
}

TEST_CASE("simulated data keeps the bounds sound") {
  SystemParams sys = fixtures::system_28db();
  auto params = ProtocolParams::make_symmetric({0.4, 0.2, 0.06, 0.0},
                                               {0.4, 0.1, 0.3, 0.2});
  auto channel = ChannelPair::symmetric_total(24.0);
  auto truth = single_photon_pair_yield(sys, channel);
  FluctuationConfig cfg{1e-10, FluctuationModel::GaussianJoint};
  int ok = 0;
  const int trials = 40;
  for (int i = 0; i < trials; ++i) {
    auto obs = simulate_counts(sys, params, channel, 10000000000ull, 1000 + i);
    auto b = estimate_bounds(obs, params, cfg);
    if (b.y11_lower <= truth.y11 && b.e11_upper >= truth.e11) ++ok;
  }
  CHECK(ok == trials);
}
