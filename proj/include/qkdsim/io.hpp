#pragma once
// File formats and configuration: the coincidence count table, the run
// configuration, and CSV emission. Both input formats are line-based
// `key = value` text; '#' starts a comment. Floating-point output uses
// shortest round-trip formatting so re-ingesting a file reproduces the exact
// values.

#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "qkdsim/core.hpp"
#include "qkdsim/statistics.hpp"
#include "qkdsim/system_model.hpp"

namespace qkdsim {

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& file, int line, const std::string& what)
      : std::runtime_error("ParseError: " + file + ":" + std::to_string(line) +
                           ": " + what) {}
  explicit ParseError(const std::string& what)
      : std::runtime_error("ParseError: " + what) {}
};

// ---------------------------------------------------------------------------
// number formatting

inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::string format_u64(std::uint64_t v) { return std::to_string(v); }

namespace detail {

struct KeyValueLine {
  int line_no = 0;
  std::string key;
  std::string value;
};

inline std::string strip(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

inline std::vector<KeyValueLine> read_key_values(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open file: " + path);
  std::vector<KeyValueLine> out;
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = raw;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = strip(line);
    if (line.empty()) continue;
    std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError(path, line_no, "expected 'key = value'");
    KeyValueLine kv;
    kv.line_no = line_no;
    kv.key = strip(line.substr(0, eq));
    kv.value = strip(line.substr(eq + 1));
    if (kv.key.empty()) throw ParseError(path, line_no, "empty key");
    if (kv.value.empty()) throw ParseError(path, line_no, "empty value");
    out.push_back(kv);
  }
  return out;
}

inline std::uint64_t parse_u64(const std::string& path, int line,
                               const std::string& text) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw ParseError(path, line, "expected a non-negative integer, got '" + text + "'");
  return v;
}

inline double parse_double(const std::string& path, int line,
                           const std::string& text) {
  try {
    std::size_t pos = 0;
    double v = std::stod(text, &pos);
    if (pos != text.size()) throw std::invalid_argument("trailing junk");
    return v;
  } catch (const std::exception&) {
    throw ParseError(path, line, "expected a number, got '" + text + "'");
  }
}

} // namespace detail

// ---------------------------------------------------------------------------
// counts file

/// Parse a coincidence count table. Schema: one `n_pairs = N` line and one
/// line per class label in {ss, mumu, nunu, mu0, nu0, 00} holding
/// `total errors`, where errors may be '-' when unreported.
inline ObservedStatistics parse_counts(const std::string& path) {
  auto lines = detail::read_key_values(path);
  ObservedStatistics out;
  bool have_n = false;
  std::array<bool, 6> have_class{};
  for (const auto& kv : lines) {
    if (kv.key == "n_pairs") {
      if (have_n) throw ParseError(path, kv.line_no, "duplicate n_pairs");
      out.n_pairs = detail::parse_u64(path, kv.line_no, kv.value);
      have_n = true;
      continue;
    }
    bool matched = false;
    for (PairClass c : kAllClasses) {
      if (kv.key != class_label(c)) continue;
      matched = true;
      int idx = static_cast<int>(c);
      if (have_class[idx])
        throw ParseError(path, kv.line_no, "duplicate class '" + kv.key + "'");
      have_class[idx] = true;
      std::istringstream fields(kv.value);
      std::string total_s, errors_s, extra;
      fields >> total_s >> errors_s;
      if (total_s.empty() || errors_s.empty() || (fields >> extra))
        throw ParseError(path, kv.line_no,
                         "class line must hold 'total errors' (errors may be '-')");
      out.at(c).total = detail::parse_u64(path, kv.line_no, total_s);
      if (errors_s != "-")
        out.at(c).errors = detail::parse_u64(path, kv.line_no, errors_s);
      break;
    }
    if (!matched)
      throw ParseError(path, kv.line_no, "unknown key '" + kv.key + "'");
  }
  if (!have_n) throw ParseError("missing n_pairs in " + path);
  for (PairClass c : kAllClasses)
    if (!have_class[static_cast<int>(c)])
      throw ParseError("missing class '" + std::string(class_label(c)) + "' in " + path);
  try {
    out.validate();
  } catch (const std::domain_error& e) {
    throw ParseError(std::string(e.what()) + " in " + path);
  }
  return out;
}

/// Canonical text form; parse(emit(x)) is the identity and emit(parse(f)) is
/// byte-identical for canonical files.
inline std::string emit_counts(const ObservedStatistics& obs) {
  std::string out;
  out += "n_pairs = " + format_u64(obs.n_pairs) + "\n";
  for (PairClass c : kAllClasses) {
    const auto& cc = obs.at(c);
    out += std::string(class_label(c)) + " = " + format_u64(cc.total) + " " +
           (cc.errors ? format_u64(*cc.errors) : std::string("-")) + "\n";
  }
  return out;
}

inline void write_counts(const std::string& path, const ObservedStatistics& obs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write file: " + path);
  out << emit_counts(obs);
}

// ---------------------------------------------------------------------------
// run configuration

struct RunConfig {
  SystemParams system;
  std::optional<ProtocolParams> protocol;
  FluctuationConfig fluctuation{1e-10, FluctuationModel::GaussianJoint};
  std::optional<double> channel_loss_db;     // total loss, split over both arms
  std::optional<double> channel_distance_km; // alternative channel spec
  std::vector<double> loss_grid_db;          // for rate curves
  double n_pairs = 0.0;
  std::uint64_t seed = 1;
  std::string output_path;
  int align_max_iter = 20000;
  double align_target_qber = 0.01;
  double align_drift = 0.0;
  std::uint64_t align_initial_seed = 0;

  double total_loss_db() const {
    if (channel_loss_db) return *channel_loss_db;
    if (channel_distance_km)
      return km_to_loss(*channel_distance_km, system.fiber_loss_coeff);
    throw std::invalid_argument("config specifies no channel");
  }
};

/// Parse and schema-validate a run configuration. Every key must be known;
/// protocol parameters are all-or-nothing.
inline RunConfig parse_config(const std::string& path) {
  auto lines = detail::read_key_values(path);
  RunConfig cfg;
  std::map<std::string, std::string> seen;

  struct ProtocolDraft {
    std::optional<double> s, mu, nu, p_s, p_mu, p_nu;
  } proto;

  for (const auto& kv : lines) {
    if (seen.count(kv.key))
      throw ParseError(path, kv.line_no, "duplicate key '" + kv.key + "'");
    seen[kv.key] = kv.value;
    const int n = kv.line_no;
    const std::string& v = kv.value;
    auto num = [&]() { return detail::parse_double(path, n, v); };

    if (kv.key == "system.detector_efficiency") cfg.system.detector_efficiency = num();
    else if (kv.key == "system.dark_count_rate_hz") cfg.system.dark_count_rate = num();
    else if (kv.key == "system.clock_rate_hz") cfg.system.clock_rate = num();
    else if (kv.key == "system.coincidence_window_s") cfg.system.coincidence_window = num();
    else if (kv.key == "system.misalignment") cfg.system.misalignment = num();
    else if (kv.key == "system.fiber_loss_db_per_km") cfg.system.fiber_loss_coeff = num();
    else if (kv.key == "system.relay_insertion_loss_db") cfg.system.relay_insertion_loss = num();
    else if (kv.key == "system.error_correction_efficiency") cfg.system.error_correction_efficiency = num();
    else if (kv.key == "system.hom_mode_overlap") cfg.system.hom_mode_overlap = num();
    else if (kv.key == "protocol.s") proto.s = num();
    else if (kv.key == "protocol.mu") proto.mu = num();
    else if (kv.key == "protocol.nu") proto.nu = num();
    else if (kv.key == "protocol.p_s") proto.p_s = num();
    else if (kv.key == "protocol.p_mu") proto.p_mu = num();
    else if (kv.key == "protocol.p_nu") proto.p_nu = num();
    else if (kv.key == "channel.loss_db") cfg.channel_loss_db = num();
    else if (kv.key == "channel.distance_km") cfg.channel_distance_km = num();
    else if (kv.key == "channel.loss_grid_db") {
      std::istringstream ss(v);
      std::string item;
      while (std::getline(ss, item, ','))
        cfg.loss_grid_db.push_back(detail::parse_double(path, n, detail::strip(item)));
      if (cfg.loss_grid_db.empty())
        throw ParseError(path, n, "empty loss grid");
    }
    else if (kv.key == "fluctuation.epsilon") cfg.fluctuation.epsilon = num();
    else if (kv.key == "fluctuation.model") {
      if (v == "none") cfg.fluctuation.model = FluctuationModel::None;
      else if (v == "joint") cfg.fluctuation.model = FluctuationModel::GaussianJoint;
      else if (v == "independent") cfg.fluctuation.model = FluctuationModel::GaussianIndependent;
      else throw ParseError(path, n, "fluctuation.model must be none|joint|independent");
    }
    else if (kv.key == "run.n_pairs") cfg.n_pairs = num();
    else if (kv.key == "run.seed") cfg.seed = detail::parse_u64(path, n, v);
    else if (kv.key == "output.path") cfg.output_path = v;
    else if (kv.key == "align.max_iter") cfg.align_max_iter = static_cast<int>(detail::parse_u64(path, n, v));
    else if (kv.key == "align.target_qber") cfg.align_target_qber = num();
    else if (kv.key == "align.drift") cfg.align_drift = num();
    else if (kv.key == "align.initial_seed") cfg.align_initial_seed = detail::parse_u64(path, n, v);
    else throw ParseError(path, kv.line_no, "unknown key '" + kv.key + "'");
  }

  const bool any_proto = proto.s || proto.mu || proto.nu || proto.p_s ||
                         proto.p_mu || proto.p_nu;
  if (any_proto) {
    if (!(proto.s && proto.mu && proto.nu && proto.p_s && proto.p_mu && proto.p_nu))
      throw ParseError("incomplete protocol block in " + path +
                       " (need s, mu, nu, p_s, p_mu, p_nu)");
    EmissionProbabilities p;
    p.p_s = *proto.p_s;
    p.p_mu = *proto.p_mu;
    p.p_nu = *proto.p_nu;
    p.p_omega = 1.0 - p.p_s - p.p_mu - p.p_nu;
    if (p.p_omega < 0.0)
      throw ParseError("protocol probabilities exceed 1 in " + path);
    PulseIntensities i{*proto.s, *proto.mu, *proto.nu, 0.0};
    ProtocolParams params = ProtocolParams::make_symmetric(i, p);
    try {
      params.validate();
    } catch (const std::domain_error& e) {
      throw ParseError(std::string(e.what()) + " in " + path);
    }
    cfg.protocol = params;
  }
  try {
    cfg.system.validate();
    cfg.fluctuation.validate();
  } catch (const std::domain_error& e) {
    throw ParseError(std::string(e.what()) + " in " + path);
  }
  return cfg;
}

// ---------------------------------------------------------------------------
// CSV emission

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::string str() const {
    std::string out;
    for (std::size_t i = 0; i < header.size(); ++i)
      out += header[i] + (i + 1 < header.size() ? "," : "");
    out += "\n";
    for (const auto& row : rows) {
      for (std::size_t i = 0; i < row.size(); ++i)
        out += row[i] + (i + 1 < row.size() ? "," : "");
      out += "\n";
    }
    return out;
  }

  void write(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot write file: " + path);
    out << str();
  }
};

/// Minimal CSV reader for re-ingesting emitted tables.
inline CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open file: " + path);
  CsvTable t;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::istringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (first) {
      t.header = cells;
      first = false;
    } else {
      t.rows.push_back(cells);
    }
  }
  return t;
}

} // namespace qkdsim
