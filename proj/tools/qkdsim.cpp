// Command-line front end: analyze counts, simulate the link, optimize
// implementation parameters, sweep rate curves, and run the polarization
// alignment loop. Human-readable summaries go to stdout; machine-readable
// results go to the configured CSV/text output path.

#include <cstdio>
#include <random>
#include <string>

#include <CLI11.hpp>

#include "qkdsim/alignment.hpp"
#include "qkdsim/io.hpp"
#include "qkdsim/keyrate.hpp"
#include "qkdsim/optimizer.hpp"
#include "qkdsim/system_model.hpp"

using namespace qkdsim;

namespace {

struct CommonFlags {
  std::string output;
  std::uint64_t seed = 0;
  bool seed_set = false;
  double epsilon = 0.0;
  bool epsilon_set = false;
  bool asymptotic = false;
};

void add_common(CLI::App* cmd, CommonFlags& flags, bool with_seed) {
  cmd->add_option("--output", flags.output, "output file path (overrides output.path)");
  if (with_seed)
    cmd->add_option("--seed", flags.seed, "random seed (overrides run.seed)")
        ->each([&flags](const std::string&) { flags.seed_set = true; });
  cmd->add_option("--epsilon", flags.epsilon, "failure probability (overrides fluctuation.epsilon)")
      ->each([&flags](const std::string&) { flags.epsilon_set = true; });
  cmd->add_flag("--asymptotic", flags.asymptotic, "disable finite-size fluctuations");
}

void apply_common(RunConfig& cfg, const CommonFlags& flags) {
  if (!flags.output.empty()) cfg.output_path = flags.output;
  if (flags.seed_set) cfg.seed = flags.seed;
  if (flags.epsilon_set) cfg.fluctuation.epsilon = flags.epsilon;
  if (flags.asymptotic) cfg.fluctuation.model = FluctuationModel::None;
}

const ProtocolParams& require_protocol(const RunConfig& cfg) {
  if (!cfg.protocol)
    throw std::invalid_argument("config has no protocol block (protocol.s, ...)");
  return *cfg.protocol;
}

std::uint64_t integral_pairs(double n_pairs) {
  if (!(n_pairs >= 1.0 && n_pairs <= 9.0e18))
    throw std::invalid_argument("run.n_pairs out of range");
  return static_cast<std::uint64_t>(n_pairs);
}

std::string bool_str(bool v) { return v ? "1" : "0"; }

void params_columns(CsvTable& t, const ProtocolParams& p) {
  t.header.insert(t.header.end(), {"s", "mu", "nu", "p_s", "p_mu", "p_nu"});
  (void)p;
}

std::vector<std::string> params_cells(const ProtocolParams& p) {
  const auto& i = p.alice.intensities;
  const auto& pr = p.alice.probs;
  return {format_double(i.s),    format_double(i.mu),   format_double(i.nu),
          format_double(pr.p_s), format_double(pr.p_mu), format_double(pr.p_nu)};
}

int cmd_analyze(const std::string& counts_path, RunConfig cfg) {
  ObservedStatistics obs = parse_counts(counts_path);
  const ProtocolParams& params = require_protocol(cfg);
  KeyRateResult r = analyze(obs, params, cfg.system, cfg.fluctuation);

  std::printf("analyze %s\n", counts_path.c_str());
  std::printf("  n_pairs           %llu\n", static_cast<unsigned long long>(obs.n_pairs));
  std::printf("  y11_lower         %.6e\n", r.bounds.y11_lower);
  std::printf("  e11_upper         %.6f\n", r.bounds.e11_upper);
  std::printf("  q_ss              %.6e\n", r.q_ss);
  std::printf("  e_ss              %.6f\n", r.e_ss);
  std::printf("  rate              %.6e per pulse,  %.3f bps%s\n", r.rate_per_pulse,
              r.rate_bps, r.clamped ? "  (clamped)" : "");

  if (!cfg.output_path.empty()) {
    CsvTable t;
    t.header = {"y11_lower", "e11_upper", "q_ss", "e_ss",
                "rate_per_pulse", "rate_bps", "clamped"};
    t.rows.push_back({format_double(r.bounds.y11_lower),
                      format_double(r.bounds.e11_upper), format_double(r.q_ss),
                      format_double(r.e_ss), format_double(r.rate_per_pulse),
                      format_double(r.rate_bps), bool_str(r.clamped)});
    t.write(cfg.output_path);
  }
  return 0;
}

int cmd_simulate(RunConfig cfg) {
  const ProtocolParams& params = require_protocol(cfg);
  auto channel = ChannelPair::symmetric_total(cfg.total_loss_db());
  GainTable gains = expected_gains(cfg.system, params, channel);
  ObservedStatistics counts =
      simulate_counts(cfg.system, params, channel, integral_pairs(cfg.n_pairs), cfg.seed);

  std::printf("simulate: %.1f dB total, %llu pairs, seed %llu\n", cfg.total_loss_db(),
              static_cast<unsigned long long>(counts.n_pairs),
              static_cast<unsigned long long>(cfg.seed));
  std::printf("  %-6s %-14s %-12s %-12s %s\n", "class", "gain", "err_frac", "total", "errors");
  for (PairClass c : kAllClasses) {
    const auto& g = gains.at(c);
    const auto& cc = counts.at(c);
    std::printf("  %-6s %-14.6e %-12.6f %-12llu %llu\n", class_label(c), g.gain,
                g.error_fraction, static_cast<unsigned long long>(cc.total),
                static_cast<unsigned long long>(cc.errors.value_or(0)));
  }
  if (!cfg.output_path.empty()) write_counts(cfg.output_path, counts);
  return 0;
}

int cmd_optimize(RunConfig cfg) {
  auto channel = ChannelPair::symmetric_total(cfg.total_loss_db());
  OptimizeOptions opt;
  opt.seed = cfg.seed;
  CsvTable t;
  t.header = {"loss_db", "n_pairs", "rate_per_pulse", "rate_bps", "converged",
              "evaluations"};
  params_columns(t, ProtocolParams{});
  try {
    OptimizationResult r = optimize(cfg.system, channel, cfg.n_pairs, cfg.fluctuation, opt);
    const auto& i = r.best.alice.intensities;
    const auto& p = r.best.alice.probs;
    std::printf("optimize: %.1f dB total, N = %.3e, %s\n", cfg.total_loss_db(),
                cfg.n_pairs,
                cfg.fluctuation.model == FluctuationModel::None ? "asymptotic"
                                                                : "finite-key");
    std::printf("  best: s=%.4f mu=%.4f nu=%.4f  P_s=%.4f P_mu=%.4f P_nu=%.4f\n",
                i.s, i.mu, i.nu, p.p_s, p.p_mu, p.p_nu);
    std::printf("  rate %.6e per pulse,  %.3f bps  (%d evaluations)\n",
                r.rate.rate_per_pulse, r.rate.rate_bps, r.evaluations);
    std::vector<std::string> row = {
        format_double(cfg.total_loss_db()), format_double(cfg.n_pairs),
        format_double(r.rate.rate_per_pulse), format_double(r.rate.rate_bps),
        bool_str(r.converged), std::to_string(r.evaluations)};
    auto pc = params_cells(r.best);
    row.insert(row.end(), pc.begin(), pc.end());
    t.rows.push_back(row);
  } catch (const NoPositiveRate& e) {
    std::fprintf(stderr, "qkdsim: warning: %s\n", e.what());
    std::printf("optimize: %.1f dB total: rate 0\n", cfg.total_loss_db());
    t.rows.push_back({format_double(cfg.total_loss_db()), format_double(cfg.n_pairs),
                      "0", "0", "0", "0", "-", "-", "-", "-", "-", "-"});
  }
  if (!cfg.output_path.empty()) t.write(cfg.output_path);
  return 0;
}

int cmd_curve(RunConfig cfg) {
  if (cfg.loss_grid_db.empty())
    throw std::invalid_argument("config has no channel.loss_grid_db");
  OptimizeOptions opt;
  opt.seed = cfg.seed;
  auto curve = rate_curve(cfg.system, cfg.loss_grid_db, cfg.n_pairs, cfg.fluctuation, opt);
  std::printf("curve: %zu points, N = %.3e\n", curve.size(), cfg.n_pairs);
  CsvTable t;
  t.header = {"loss_db", "rate_per_pulse", "rate_bps", "positive"};
  params_columns(t, ProtocolParams{});
  for (const auto& p : curve) {
    std::printf("  %6.2f dB  %.6e /pulse  %12.4f bps\n", p.loss_db,
                p.rate_per_pulse, p.rate_bps);
    std::vector<std::string> row = {format_double(p.loss_db),
                                    format_double(p.rate_per_pulse),
                                    format_double(p.rate_bps), bool_str(p.positive)};
    if (p.positive) {
      auto pc = params_cells(p.params);
      row.insert(row.end(), pc.begin(), pc.end());
    } else {
      row.insert(row.end(), {"-", "-", "-", "-", "-", "-"});
    }
    t.rows.push_back(row);
  }
  if (!cfg.output_path.empty()) t.write(cfg.output_path);
  return 0;
}

int cmd_align(RunConfig cfg) {
  AlignmentState st;
  st.drift = cfg.align_drift;
  if (cfg.align_initial_seed != 0) {
    std::mt19937_64 rng(cfg.align_initial_seed);
    std::uniform_real_distribution<double> u(0.0, 2.0 * M_PI);
    for (double& a : st.channel_alice.angles) a = u(rng);
    for (double& a : st.channel_bob.angles) a = u(rng);
    for (double& a : st.epc_a.angles) a = u(rng);
    for (double& a : st.epc_1.angles) a = u(rng);
    for (double& a : st.epc_2.angles) a = u(rng);
  }
  AlignmentReport rep = run_alignment(st, cfg.system, cfg.align_target_qber,
                                      cfg.align_max_iter, cfg.seed);
  std::printf("align: %s after %d iterations (steps %d/%d/%d)\n",
              rep.converged ? "converged" : "NOT converged",
              rep.iterations_per_step[0] + rep.iterations_per_step[1] +
                  rep.iterations_per_step[2],
              rep.iterations_per_step[0], rep.iterations_per_step[1],
              rep.iterations_per_step[2]);
  std::printf("  qber_z %.6f   qber_x %.6f\n", rep.final_qber_z, rep.final_qber_x);
  if (!cfg.output_path.empty()) {
    CsvTable t;
    t.header = {"iteration", "objective"};
    for (std::size_t i = 0; i < rep.trace.size(); ++i)
      t.rows.push_back({std::to_string(i), format_double(rep.trace[i])});
    t.write(cfg.output_path);
  }
  return rep.converged ? 0 : 2;
}

std::string error_class(const std::exception& e) {
  // our own exception types already prefix their class name
  const std::string what = e.what();
  if (what.find(':') != std::string::npos &&
      (what.rfind("ParseError", 0) == 0 || what.rfind("InfeasibleStatistics", 0) == 0 ||
       what.rfind("NoPositiveRate", 0) == 0))
    return what;
  if (dynamic_cast<const std::domain_error*>(&e)) return "DomainError: " + what;
  if (dynamic_cast<const std::invalid_argument*>(&e)) return "InvalidArgument: " + what;
  return "RuntimeError: " + what;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"four-intensity decoy-state MDI-QKD engine"};
  app.require_subcommand(1);

  std::string counts_path, config_path;
  CommonFlags flags;

  auto* analyze_cmd = app.add_subcommand("analyze", "key rate and decoy bounds from a counts file");
  analyze_cmd->add_option("counts", counts_path, "counts file")->required();
  analyze_cmd->add_option("config", config_path, "run configuration")->required();
  add_common(analyze_cmd, flags, false);

  auto* simulate_cmd = app.add_subcommand("simulate", "draw a counts table from the physical model");
  simulate_cmd->add_option("config", config_path, "run configuration")->required();
  add_common(simulate_cmd, flags, true);

  auto* optimize_cmd = app.add_subcommand("optimize", "optimize the six implementation parameters");
  optimize_cmd->add_option("config", config_path, "run configuration")->required();
  add_common(optimize_cmd, flags, true);

  auto* curve_cmd = app.add_subcommand("curve", "optimized rate across a loss grid");
  curve_cmd->add_option("config", config_path, "run configuration")->required();
  add_common(curve_cmd, flags, true);

  auto* align_cmd = app.add_subcommand("align", "run the polarization alignment loop");
  align_cmd->add_option("config", config_path, "run configuration")->required();
  add_common(align_cmd, flags, true);

  CLI11_PARSE(app, argc, argv);

  try {
    RunConfig cfg = parse_config(config_path);
    apply_common(cfg, flags);
    if (analyze_cmd->parsed()) return cmd_analyze(counts_path, cfg);
    if (simulate_cmd->parsed()) return cmd_simulate(cfg);
    if (optimize_cmd->parsed()) return cmd_optimize(cfg);
    if (curve_cmd->parsed()) return cmd_curve(cfg);
    if (align_cmd->parsed()) return cmd_align(cfg);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "qkdsim: error: %s\n", error_class(e).c_str());
    return 1;
  }
  return 0;
}
