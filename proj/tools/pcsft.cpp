// Command-line front end: parse a JSON experiment config, dispatch the run,
// emit CSV or JSON results suitable for scripted reproduction.

#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pcsft/pcsft.hpp"

namespace {

using pcsft::json;

struct CommonOptions {
  std::string config_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int threads = 0;
  double dt = 0.0;
  std::string out;
  std::string format = "csv";
};

void add_common(CLI::App* cmd, CommonOptions& opt, bool needs_config = true) {
  auto* config = cmd->add_option("--config", opt.config_path, "JSON experiment config");
  if (needs_config) config->required();
  cmd->add_option("--seed", opt.seed, "master seed (overrides config and PCSFT_SEED)")
      ->each([&opt](const std::string&) { opt.seed_set = true; });
  cmd->add_option("--threads", opt.threads, "worker threads (results do not depend on it)");
  cmd->add_option("--dt", opt.dt, "time step override");
  cmd->add_option("--out", opt.out, "output file (written atomically); default stdout");
  cmd->add_option("--format", opt.format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}));
}

std::optional<std::uint64_t> env_seed() {
  const char* env = std::getenv("PCSFT_SEED");
  if (!env || !*env) return std::nullopt;
  char* end = nullptr;
  const std::uint64_t v = std::strtoull(env, &end, 10);
  if (end == env || *end != '\0')
    throw pcsft::Error(pcsft::ErrorCode::BadConfig, "PCSFT_SEED is not a valid integer");
  return v;
}

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw pcsft::Error(pcsft::ErrorCode::BadConfig, "cannot open config file " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw pcsft::Error(pcsft::ErrorCode::BadConfig,
                       "config file " + path + " is not valid JSON: " + e.what());
  }
  return j;
}

pcsft::ExperimentConfig load_experiment(const CommonOptions& opt, json* raw_out = nullptr) {
  const json raw = load_json(opt.config_path);
  std::optional<std::uint64_t> fallback;
  if (opt.seed_set) fallback = opt.seed;
  else fallback = env_seed();
  auto cfg = pcsft::experiment_config_from_json(raw, fallback);
  if (opt.seed_set) cfg.master_seed = opt.seed;  // CLI flag beats the file
  if (opt.dt > 0.0) cfg.dt = opt.dt;
  if (opt.threads > 0) cfg.threads = opt.threads;
  if (raw_out) *raw_out = raw;
  return cfg;
}

void emit(const CommonOptions& opt, const std::string& content) {
  if (opt.out.empty()) {
    std::cout << content;
    return;
  }
  pcsft::atomic_write(opt.out, content);
}

std::string json_document(const pcsft::ExperimentConfig& cfg, const json& results) {
  const json doc{{"config", pcsft::experiment_config_to_json(cfg)},
                 {"master_seed", cfg.master_seed},
                 {"results", results}};
  return doc.dump(2) + "\n";
}

void log_run(const pcsft::ExperimentStats& stats) {
  std::cerr << "steps " << stats.steps << ", wall " << stats.wall_ms << " ms\n";
}

std::vector<double> parse_threshold_list(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw pcsft::Error(pcsft::ErrorCode::BadConfig,
                         "--thresholds entry '" + item + "' is not a number");
    }
  }
  if (out.empty())
    throw pcsft::Error(pcsft::ErrorCode::BadConfig, "--thresholds list is empty");
  return out;
}

int run_simulate(const CommonOptions& opt, bool coincidence_flag) {
  json raw;
  const auto cfg = load_experiment(opt, &raw);
  const bool coincidence =
      coincidence_flag || pcsft::detail::field_or<std::string>(raw, "experiment", "singles") ==
                              "coincidence";
  if (coincidence) {
    const auto stats = pcsft::run_coincidence(cfg);
    log_run(stats);
    if (opt.format == "json") {
      emit(opt, json_document(cfg, pcsft::stats_to_json(stats)));
    } else {
      std::ostringstream os;
      pcsft::coincidence_to_csv(os, cfg, stats);
      emit(opt, os.str());
    }
    if (!stats.pair->g2_defined)
      throw pcsft::Error(pcsft::ErrorCode::DegenerateRate,
                         "a singles probability is zero; g2 is undefined");
  } else {
    const auto stats = pcsft::run_singles(cfg);
    log_run(stats);
    if (opt.format == "json") {
      emit(opt, json_document(cfg, pcsft::stats_to_json(stats)));
    } else {
      std::ostringstream os;
      pcsft::singles_to_csv(os, cfg, stats);
      emit(opt, os.str());
    }
  }
  return 0;
}

int run_sweep(const CommonOptions& opt, const std::string& thresholds_flag) {
  json raw;
  const auto cfg = load_experiment(opt, &raw);
  std::vector<double> thresholds;
  if (!thresholds_flag.empty()) {
    thresholds = parse_threshold_list(thresholds_flag);
  } else if (raw.contains("thresholds")) {
    thresholds = pcsft::detail::require_field<std::vector<double>>(raw, "thresholds");
  } else {
    throw pcsft::Error(pcsft::ErrorCode::BadConfig,
                       "config field 'thresholds' is missing (or pass --thresholds)");
  }
  const auto sweep = pcsft::sweep_threshold(cfg, thresholds);
  if (opt.format == "json") {
    emit(opt, json_document(cfg, pcsft::sweep_to_json(sweep)));
  } else {
    std::ostringstream os;
    pcsft::sweep_to_csv(os, cfg, sweep);
    emit(opt, os.str());
  }
  return 0;
}

int run_born(const CommonOptions& opt) {
  const auto cfg = load_experiment(opt);
  const auto report = pcsft::born_report(cfg);
  log_run(report.stats);
  if (opt.format == "json") {
    emit(opt, json_document(cfg, pcsft::born_to_json(report)));
  } else {
    std::ostringstream os;
    pcsft::born_to_csv(os, cfg, report);
    emit(opt, os.str());
  }
  return 0;
}

int run_tau(const CommonOptions& opt) {
  const auto cfg = load_experiment(opt);
  const auto report = pcsft::mean_tau_report(cfg);
  log_run(report.stats);
  if (opt.format == "json") {
    emit(opt, json_document(cfg, pcsft::tau_to_json(report)));
  } else {
    std::ostringstream os;
    pcsft::tau_to_csv(os, cfg, report);
    emit(opt, os.str());
  }
  return 0;
}

int run_modes(const CommonOptions& opt) {
  const json raw = load_json(opt.config_path);
  if (!raw.contains("system"))
    throw pcsft::Error(pcsft::ErrorCode::BadConfig, "config field 'system' is missing");
  const json& sys_json = raw.at("system");
  const pcsft::Matrix generator = pcsft::matrix_from_json(
      sys_json.contains("generator") ? sys_json.at("generator") : json{}, "system.generator");
  const auto mode_name =
      pcsft::detail::field_or<std::string>(sys_json, "mode", "plain");
  pcsft::EvolutionMode mode;
  if (mode_name == "plain") mode = pcsft::EvolutionMode::plain;
  else if (mode_name == "unitary") mode = pcsft::EvolutionMode::unitary;
  else
    throw pcsft::Error(pcsft::ErrorCode::BadConfig,
                       "config field 'system.mode' must be 'plain' or 'unitary'");

  const auto phi0_vec = pcsft::detail::require_field<std::vector<double>>(raw, "phi0");
  const auto times = pcsft::detail::require_field<std::vector<double>>(raw, "times");
  const pcsft::FieldVector phi0(phi0_vec);

  const pcsft::ModeSystem system(generator, mode);
  const auto& basis = system.decomposition().eigenvectors;
  const auto energies = pcsft::relative_energies(phi0, basis);
  const auto mixture = pcsft::decoherent_mixture(phi0, basis);

  json rows = json::array();
  std::ostringstream csv;
  csv << "# config " << raw.dump() << "\n";
  csv << "t,norm";
  for (int k = 0; k < system.dim(); ++k) {
    if (mode == pcsft::EvolutionMode::plain) csv << ",c_" << k;
    else csv << ",c_" << k << "_re,c_" << k << "_im";
  }
  csv << "\n";
  for (double t : times) {
    const auto ev = pcsft::evolve(system, phi0, t);
    json row{{"t", t}, {"norm", ev.norm()}, {"coef_re", ev.coef_re}};
    if (mode == pcsft::EvolutionMode::unitary) row["coef_im"] = ev.coef_im;
    row["field"] = ev.field.c;
    rows.push_back(row);
    csv << pcsft::format_double(t) << "," << pcsft::format_double(ev.norm());
    for (int k = 0; k < system.dim(); ++k) {
      csv << "," << pcsft::format_double(ev.coef_re[static_cast<std::size_t>(k)]);
      if (mode == pcsft::EvolutionMode::unitary)
        csv << "," << pcsft::format_double(ev.coef_im[static_cast<std::size_t>(k)]);
    }
    csv << "\n";
  }

  if (opt.format == "json") {
    std::vector<double> mixture_diag(static_cast<std::size_t>(system.dim()));
    for (int i = 0; i < system.dim(); ++i) mixture_diag[static_cast<std::size_t>(i)] = mixture(i, i);
    const json doc{{"config", raw},
                   {"eigenvalues", system.decomposition().eigenvalues},
                   {"relative_energies", energies},
                   {"mixture", pcsft::matrix_to_json(mixture.entries())},
                   {"mixture_diag", mixture_diag},
                   {"rows", rows}};
    emit(opt, doc.dump(2) + "\n");
  } else {
    emit(opt, csv.str());
  }
  return 0;
}

int run_oracle(const CommonOptions& opt, const std::string& formula, double threshold,
               double power, double t, double duration, int terms) {
  pcsft::OracleResult result;
  result.formula_id = formula;
  if (formula == "mean_tau") {
    result.value = pcsft::expected_hitting_time(threshold, power);
    result.inputs = {{"threshold", threshold}, {"power", power}};
  } else if (formula == "click_rate") {
    result.value = pcsft::click_rate(power, threshold);
    result.inputs = {{"threshold", threshold}, {"power", power}};
  } else if (formula == "survival_1d") {
    result.value = pcsft::survival_1d(t, threshold, power, terms);
    result.inputs = {{"t", t},
                     {"threshold", threshold},
                     {"power", power},
                     {"terms", static_cast<double>(terms)}};
  } else if (formula == "born") {
    if (opt.config_path.empty())
      throw pcsft::Error(pcsft::ErrorCode::BadConfig,
                         "born oracle needs --config with 'rho' and 'projector'");
    const json raw = load_json(opt.config_path);
    if (!raw.contains("rho") || !raw.contains("projector"))
      throw pcsft::Error(pcsft::ErrorCode::BadConfig,
                         "config fields 'rho' and 'projector' are required");
    const pcsft::DensityMatrix rho(pcsft::matrix_from_json(raw.at("rho"), "rho"));
    const pcsft::Projector proj(pcsft::matrix_from_json(raw.at("projector"), "projector"));
    result.value = pcsft::born_probability(rho, proj);
    result.inputs = {};
  } else {
    throw pcsft::Error(pcsft::ErrorCode::BadConfig,
                       "--formula must be mean_tau, click_rate, survival_1d, or born");
  }

  json doc = pcsft::oracle_to_json(result);
  if (formula == "click_rate" && duration > 0.0)
    doc["expected_count"] = pcsft::expected_count(power, threshold, duration);
  emit(opt, doc.dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Threshold-detection Monte Carlo for random classical fields"};
  app.require_subcommand(1);

  CommonOptions sim_opt, sweep_opt, born_opt, tau_opt, modes_opt, oracle_opt;
  bool coincidence_flag = false;
  std::string thresholds_flag;
  std::string formula = "mean_tau";
  double o_threshold = 1.0, o_power = 1.0, o_t = 0.0, o_duration = 0.0;
  int o_terms = 4096;

  auto* simulate = app.add_subcommand("simulate", "singles or coincidence run");
  add_common(simulate, sim_opt);
  simulate->add_flag("--coincidence", coincidence_flag, "coincidence statistics for the pair");

  auto* sweep = app.add_subcommand("sweep", "coincidence run per threshold");
  add_common(sweep, sweep_opt);
  sweep->add_option("--thresholds", thresholds_flag, "comma-separated ascending thresholds");

  auto* born = app.add_subcommand("born", "click shares against the state's diagonal");
  add_common(born, born_opt);

  auto* tau = app.add_subcommand("tau", "mean hitting times against E_d / power");
  add_common(tau, tau_opt);

  auto* modes = app.add_subcommand("modes", "linear mode evolution table");
  add_common(modes, modes_opt);

  auto* oracle = app.add_subcommand("oracle", "closed-form reference values as JSON");
  add_common(oracle, oracle_opt, false);
  oracle->add_option("--formula", formula, "mean_tau | click_rate | survival_1d | born");
  oracle->add_option("--threshold", o_threshold, "energy threshold");
  oracle->add_option("--power", o_power, "channel power");
  oracle->add_option("--t", o_t, "time argument for survival_1d");
  oracle->add_option("--T", o_duration, "duration for expected click count");
  oracle->add_option("--terms", o_terms, "series term cap for survival_1d");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? 0 : 1;
  }

  try {
    if (simulate->parsed()) return run_simulate(sim_opt, coincidence_flag);
    if (sweep->parsed()) return run_sweep(sweep_opt, thresholds_flag);
    if (born->parsed()) return run_born(born_opt);
    if (tau->parsed()) return run_tau(tau_opt);
    if (modes->parsed()) return run_modes(modes_opt);
    if (oracle->parsed())
      return run_oracle(oracle_opt, formula, o_threshold, o_power, o_t, o_duration, o_terms);
  } catch (const pcsft::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.is_validation() ? 1 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
