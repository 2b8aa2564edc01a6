#pragma once

#include <array>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pcsft/core_types.hpp"
#include "pcsft/detector.hpp"
#include "pcsft/error.hpp"
#include "pcsft/experiment.hpp"
#include "pcsft/matrix.hpp"
#include "pcsft/mode_dynamics.hpp"
#include "pcsft/oracle.hpp"

namespace pcsft {

using nlohmann::json;

/// Shortest round-trip decimal form; identical across runs, so output files
/// can be compared byte for byte.
inline std::string format_double(double v) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

inline json matrix_to_json(const Matrix& m) {
  return json{{"dim", m.dim()}, {"entries", m.a}};
}

namespace detail {

template <class T>
T require_field(const json& j, const std::string& field) {
  if (!j.contains(field))
    throw Error(ErrorCode::BadConfig, "config field '" + field + "' is missing");
  try {
    return j.at(field).get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::BadConfig, "config field '" + field + "' has the wrong type");
  }
}

template <class T>
T field_or(const json& j, const std::string& field, T fallback) {
  if (!j.contains(field)) return fallback;
  try {
    return j.at(field).get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::BadConfig, "config field '" + field + "' has the wrong type");
  }
}

}  // namespace detail

inline Matrix matrix_from_json(const json& j, const std::string& field) {
  if (!j.is_object())
    throw Error(ErrorCode::BadConfig, "config field '" + field + "' must be an object");
  if (!j.contains("dim") || !j.contains("entries"))
    throw Error(ErrorCode::BadConfig,
                "config field '" + field + "' needs 'dim' and 'entries'");
  int dim = 0;
  std::vector<double> entries;
  try {
    dim = j.at("dim").get<int>();
    entries = j.at("entries").get<std::vector<double>>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::BadConfig, "config field '" + field + "' has the wrong shape");
  }
  if (dim <= 0 || static_cast<std::size_t>(dim) * dim != entries.size())
    throw Error(ErrorCode::BadConfig,
                "config field '" + field + ".entries' must hold dim*dim numbers");
  return Matrix(dim, entries);
}

inline DetectorConfig detector_from_json(const json& j) {
  DetectorConfig d;
  d.threshold = detail::require_field<double>(j, "threshold");
  d.dead_time = detail::field_or<double>(j, "dead_time", 0.0);
  const auto rule = detail::field_or<std::string>(j, "crossing_rule", "interpolated");
  if (rule == "grid") d.crossing_rule = CrossingRule::grid;
  else if (rule == "interpolated") d.crossing_rule = CrossingRule::interpolated;
  else throw Error(ErrorCode::BadConfig,
                   "config field 'detector.crossing_rule' must be 'grid' or 'interpolated'");
  const auto mode = detail::field_or<std::string>(j, "mode", "renewal");
  if (mode == "renewal") d.mode = DetectionMode::renewal;
  else if (mode == "windowed") d.mode = DetectionMode::windowed;
  else throw Error(ErrorCode::BadConfig,
                   "config field 'detector.mode' must be 'renewal' or 'windowed'");
  d.global_reset = detail::field_or<bool>(j, "global_reset", false);
  return d;
}

inline json detector_to_json(const DetectorConfig& d) {
  return json{
      {"threshold", d.threshold},
      {"dead_time", d.dead_time},
      {"crossing_rule", d.crossing_rule == CrossingRule::grid ? "grid" : "interpolated"},
      {"mode", d.mode == DetectionMode::renewal ? "renewal" : "windowed"},
      {"global_reset", d.global_reset},
  };
}

/// Builds an ExperimentConfig from its JSON form. A seed must come from the
/// file's master_seed or from fallback_seed (CLI flag or PCSFT_SEED).
inline ExperimentConfig experiment_config_from_json(
    const json& j, std::optional<std::uint64_t> fallback_seed = std::nullopt) {
  if (!j.is_object()) throw Error(ErrorCode::BadConfig, "config root must be a JSON object");
  if (!j.contains("B")) throw Error(ErrorCode::BadConfig, "config field 'B' is missing");

  ExperimentConfig cfg{CovarianceOperator(matrix_from_json(j.at("B"), "B"))};
  if (!j.contains("detector"))
    throw Error(ErrorCode::BadConfig, "config field 'detector' is missing");
  cfg.detector = detector_from_json(j.at("detector"));
  cfg.dt = detail::require_field<double>(j, "dt");
  cfg.T = detail::require_field<double>(j, "T");
  cfg.n_trials = detail::field_or<long>(j, "n_trials", 1);
  if (j.contains("master_seed"))
    cfg.master_seed = detail::require_field<std::uint64_t>(j, "master_seed");
  else if (fallback_seed)
    cfg.master_seed = *fallback_seed;
  else
    throw Error(ErrorCode::BadConfig,
                "config field 'master_seed' is missing (set it, pass --seed, or export PCSFT_SEED)");
  if (j.contains("measurement_basis"))
    cfg.measurement_basis = matrix_from_json(j.at("measurement_basis"), "measurement_basis");
  cfg.coincidence_window = detail::field_or<double>(j, "coincidence_window", -1.0);
  if (j.contains("channels")) {
    ChannelAssignment a;
    a.components = detail::require_field<std::vector<std::vector<int>>>(j, "channels");
    cfg.channels = a;
  }
  cfg.n_chunks = detail::field_or<int>(j, "n_chunks", 1);
  cfg.threads = detail::field_or<int>(j, "threads", 1);
  if (j.contains("pair")) {
    const auto pair = detail::require_field<std::vector<int>>(j, "pair");
    if (pair.size() != 2)
      throw Error(ErrorCode::BadConfig, "config field 'pair' must hold two channel indices");
    cfg.pair_a = pair[0];
    cfg.pair_b = pair[1];
  }
  return cfg;
}

/// Resolved-config echo embedded in every output file. Deliberately excludes
/// the thread count: scheduling must not change result bytes.
inline json experiment_config_to_json(const ExperimentConfig& cfg) {
  json j{
      {"B", matrix_to_json(cfg.B.entries())},
      {"detector", detector_to_json(cfg.detector)},
      {"dt", cfg.dt},
      {"T", cfg.T},
      {"n_trials", cfg.n_trials},
      {"master_seed", cfg.master_seed},
      {"coincidence_window", cfg.window()},
      {"channels", cfg.assignment().components},
      {"n_chunks", cfg.n_chunks},
      {"pair", {cfg.pair_a, cfg.pair_b}},
  };
  if (cfg.measurement_basis) j["measurement_basis"] = matrix_to_json(*cfg.measurement_basis);
  return j;
}

inline json channel_stats_to_json(const ChannelStats& ch) {
  json j{{"channel", ch.channel}, {"count", ch.count},       {"p", ch.p},
         {"ci_low", ch.ci_low},   {"ci_high", ch.ci_high}};
  if (ch.has_reference) {
    j["reference"] = ch.reference;
    j["pass"] = ch.pass;
  }
  if (ch.tau_count > 0) {
    j["mean_tau"] = ch.mean_tau;
    j["tau_count"] = ch.tau_count;
  }
  return j;
}

inline json stats_to_json(const ExperimentStats& s) {
  json channels = json::array();
  for (const auto& ch : s.channels) channels.push_back(channel_stats_to_json(ch));
  json j{{"kind", s.kind},
         {"detection_mode", s.detection_mode},
         {"total_clicks", s.total_clicks},
         {"steps", s.steps},
         {"channels", channels},
         {"notes", s.notes}};
  if (s.n_trials > 0) j["n_trials"] = s.n_trials;
  if (s.pair) {
    json p{{"p1", s.pair->p1}, {"p2", s.pair->p2}, {"p12", s.pair->p12}};
    if (s.pair->g2_defined) {
      p["g2"] = s.pair->g2;
      p["g2_low"] = s.pair->g2_low;
      p["g2_high"] = s.pair->g2_high;
    } else {
      p["g2"] = nullptr;
    }
    j["pair"] = p;
  }
  return j;
}

inline json sweep_to_json(const SweepResult& r) {
  json rows = json::array();
  for (const auto& row : r.rows) {
    json jr{{"threshold", row.threshold}, {"stats", stats_to_json(row.stats)}};
    rows.push_back(jr);
  }
  json j{{"rows", rows}};
  if (r.trend_defined) {
    j["kendall_tau"] = r.kendall;
    j["kendall_p"] = r.kendall_p;
  }
  return j;
}

inline json born_to_json(const BornReport& r) {
  json rows = json::array();
  for (const auto& row : r.rows)
    rows.push_back(json{{"channel", row.channel},
                        {"p", row.p},
                        {"ci_low", row.ci_low},
                        {"ci_high", row.ci_high},
                        {"rho_jj", row.rho_jj},
                        {"abs_err", row.abs_err},
                        {"pass", row.pass}});
  return json{{"rows", rows}, {"all_pass", r.all_pass}, {"stats", stats_to_json(r.stats)}};
}

inline json tau_to_json(const TauReport& r) {
  json rows = json::array();
  for (const auto& row : r.rows)
    rows.push_back(json{{"channel", row.channel},
                        {"clicks", row.clicks},
                        {"mean_tau", row.mean_tau},
                        {"expected_tau", row.expected_tau},
                        {"rel_err", row.rel_err},
                        {"pass", row.pass}});
  return json{{"rows", rows}, {"all_pass", r.all_pass}, {"stats", stats_to_json(r.stats)}};
}

inline json oracle_to_json(const OracleResult& r) {
  json inputs = json::object();
  for (const auto& [k, v] : r.inputs) inputs[k] = v;
  return json{{"formula_id", r.formula_id}, {"value", r.value}, {"inputs", inputs}};
}

// ---------------------------------------------------------------------------
// CSV emission. Every file starts with comment lines carrying the resolved
// config and seed, then a header row.

inline void csv_preamble(std::ostream& os, const ExperimentConfig& cfg) {
  os << "# config " << experiment_config_to_json(cfg).dump() << "\n";
  os << "# master_seed " << cfg.master_seed << "\n";
}

inline void singles_to_csv(std::ostream& os, const ExperimentConfig& cfg,
                           const ExperimentStats& s) {
  csv_preamble(os, cfg);
  os << "channel,count,p,ci_low,ci_high\n";
  for (const auto& ch : s.channels)
    os << ch.channel << "," << ch.count << "," << format_double(ch.p) << ","
       << format_double(ch.ci_low) << "," << format_double(ch.ci_high) << "\n";
}

inline void coincidence_to_csv(std::ostream& os, const ExperimentConfig& cfg,
                               const ExperimentStats& s) {
  csv_preamble(os, cfg);
  os << "p1,p2,p12,g2,g2_low,g2_high\n";
  const auto& p = *s.pair;
  os << format_double(p.p1) << "," << format_double(p.p2) << "," << format_double(p.p12) << ",";
  if (p.g2_defined)
    os << format_double(p.g2) << "," << format_double(p.g2_low) << ","
       << format_double(p.g2_high);
  else
    os << ",,";
  os << "\n";
}

inline void sweep_to_csv(std::ostream& os, const ExperimentConfig& cfg, const SweepResult& r) {
  csv_preamble(os, cfg);
  if (r.trend_defined)
    os << "# kendall_tau " << format_double(r.kendall) << " kendall_p "
       << format_double(r.kendall_p) << "\n";
  os << "threshold,p1,p2,p12,g2,g2_low,g2_high\n";
  for (const auto& row : r.rows) {
    const auto& p = *row.stats.pair;
    os << format_double(row.threshold) << "," << format_double(p.p1) << ","
       << format_double(p.p2) << "," << format_double(p.p12) << ",";
    if (p.g2_defined)
      os << format_double(p.g2) << "," << format_double(p.g2_low) << ","
         << format_double(p.g2_high);
    else
      os << ",,";
    os << "\n";
  }
}

inline void born_to_csv(std::ostream& os, const ExperimentConfig& cfg, const BornReport& r) {
  csv_preamble(os, cfg);
  os << "channel,count,p,ci_low,ci_high,rho_jj,abs_err,pass\n";
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    const auto& row = r.rows[i];
    const auto& ch = r.stats.channels[i];
    os << row.channel << "," << ch.count << "," << format_double(row.p) << ","
       << format_double(row.ci_low) << "," << format_double(row.ci_high) << ","
       << format_double(row.rho_jj) << "," << format_double(row.abs_err) << ","
       << (row.pass ? "pass" : "fail") << "\n";
  }
}

inline void tau_to_csv(std::ostream& os, const ExperimentConfig& cfg, const TauReport& r) {
  csv_preamble(os, cfg);
  os << "channel,clicks,mean_tau,expected_tau,rel_err,pass\n";
  for (const auto& row : r.rows)
    os << row.channel << "," << row.clicks << "," << format_double(row.mean_tau) << ","
       << format_double(row.expected_tau) << "," << format_double(row.rel_err) << ","
       << (row.pass ? "pass" : "fail") << "\n";
}

inline void clicks_to_csv(std::ostream& os, const std::vector<std::vector<ClickRecord>>& clicks) {
  os << "channel,time\n";
  for (const auto& ch : clicks)
    for (const auto& c : ch) os << c.channel << "," << format_double(c.time) << "\n";
}

/// Write-then-rename so readers never observe a half-written file.
inline void atomic_write(const std::filesystem::path& path, const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::BadArgs, "cannot open output file " + tmp.string());
    out << content;
    if (!out.good()) throw Error(ErrorCode::BadArgs, "failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace pcsft
