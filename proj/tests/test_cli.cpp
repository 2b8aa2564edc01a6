#include <catch2/catch.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

const std::string kCli = PCSFT_CLI_PATH;

struct CommandResult {
  int exit_code = -1;
  std::string stderr_text;
};

CommandResult run_command(const std::string& args, const fs::path& dir) {
  const fs::path err = dir / "stderr.txt";
  const std::string cmd = kCli + " " + args + " 2>" + err.string();
  const int rc = std::system(cmd.c_str());
  CommandResult r;
  r.exit_code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  std::ifstream in(err);
  std::stringstream ss;
  ss << in.rdbuf();
  r.stderr_text = ss.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path make_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("pcsft_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream out(p);
  out << content;
}

const char* kB13Config = R"({
  "B": {"dim": 2, "entries": [1.0, 0.0, 0.0, 3.0]},
  "detector": {"threshold": 1.0, "mode": "renewal"},
  "dt": 1e-3,
  "T": 300.0,
  "master_seed": 42
})";

std::vector<std::string> data_lines(const std::string& csv) {
  std::vector<std::string> lines;
  std::stringstream ss(csv);
  std::string line;
  while (std::getline(ss, line))
    if (!line.empty() && line[0] != '#') lines.push_back(line);
  return lines;
}

}  // namespace

TEST_CASE("born subcommand emits pass rows", "[cli]") {
  const auto dir = make_dir("born");
  write_file(dir / "b13.json", kB13Config);
  const auto out = (dir / "born.csv").string();
  const auto r = run_command("born --config " + (dir / "b13.json").string() + " --out " + out, dir);
  REQUIRE(r.exit_code == 0);

  const auto lines = data_lines(slurp(out));
  REQUIRE(lines.size() == 3);  // header + two channels
  CHECK(lines[0] == "channel,count,p,ci_low,ci_high,rho_jj,abs_err,pass");
  CHECK(lines[1].find("0.25") != std::string::npos);
  CHECK(lines[1].find("pass") != std::string::npos);
  CHECK(lines[2].find("0.75") != std::string::npos);
  CHECK(lines[2].find("pass") != std::string::npos);

  const std::string full = slurp(out);
  CHECK(full.find("# master_seed 42") != std::string::npos);
}

TEST_CASE("same seed gives byte-identical output, any thread count", "[cli]") {
  const auto dir = make_dir("determinism");
  write_file(dir / "b13.json", kB13Config);
  const std::string cfg = (dir / "b13.json").string();

  auto run_to = [&](const std::string& name, const std::string& extra) {
    const auto r = run_command("born --config " + cfg + " --out " + (dir / name).string() + extra, dir);
    REQUIRE(r.exit_code == 0);
    return slurp(dir / name);
  };
  const auto a = run_to("a.csv", "");
  const auto b = run_to("b.csv", "");
  CHECK(a == b);
  const auto t1 = run_to("t1.csv", " --threads 1");
  const auto t3 = run_to("t3.csv", " --threads 3");
  CHECK(t1 == t3);
  CHECK(a == t1);

  const auto j1 = run_to("a.json", " --format json");
  const auto j2 = run_to("b.json", " --format json");
  CHECK(j1 == j2);
}

TEST_CASE("seed overrides change the outcome deterministically", "[cli]") {
  const auto dir = make_dir("seeds");
  write_file(dir / "b13.json", kB13Config);
  const std::string cfg = (dir / "b13.json").string();
  const auto base = run_command("born --config " + cfg + " --out " + (dir / "a.csv").string(), dir);
  REQUIRE(base.exit_code == 0);
  const auto other =
      run_command("born --config " + cfg + " --seed 77 --out " + (dir / "b.csv").string(), dir);
  REQUIRE(other.exit_code == 0);
  CHECK(slurp(dir / "a.csv") != slurp(dir / "b.csv"));
  CHECK(slurp(dir / "b.csv").find("# master_seed 77") != std::string::npos);
}

TEST_CASE("missing config file exits 1 and names the path", "[cli]") {
  const auto dir = make_dir("missing");
  const auto r = run_command("born --config " + (dir / "nope.json").string(), dir);
  CHECK(r.exit_code == 1);
  CHECK(r.stderr_text.find("nope.json") != std::string::npos);
}

TEST_CASE("unknown flags are rejected with exit 1", "[cli]") {
  const auto dir = make_dir("unknownflag");
  write_file(dir / "b13.json", kB13Config);
  const auto r =
      run_command("born --config " + (dir / "b13.json").string() + " --frobnicate 3", dir);
  CHECK(r.exit_code == 1);
}

TEST_CASE("json output embeds the resolved config and seed", "[cli]") {
  const auto dir = make_dir("jsonout");
  write_file(dir / "b13.json", kB13Config);
  const auto out = (dir / "born.json").string();
  const auto r = run_command(
      "born --config " + (dir / "b13.json").string() + " --format json --out " + out, dir);
  REQUIRE(r.exit_code == 0);
  const auto doc = nlohmann::json::parse(slurp(dir / "born.json"));
  CHECK(doc.at("master_seed").get<std::uint64_t>() == 42);
  CHECK(doc.at("config").contains("B"));
  CHECK(doc.at("config").contains("detector"));
  CHECK(doc.at("results").at("all_pass").is_boolean());
}

TEST_CASE("invalid config field exits 1 and names the field", "[cli]") {
  const auto dir = make_dir("badfield");
  write_file(dir / "bad.json", R"({
    "B": {"dim": 1, "entries": [1.0]},
    "detector": {"threshold": 1.0},
    "dt": -0.5,
    "T": 10.0,
    "master_seed": 1
  })");
  const auto r = run_command("born --config " + (dir / "bad.json").string(), dir);
  CHECK(r.exit_code == 1);
  CHECK(r.stderr_text.find("dt") != std::string::npos);
}

TEST_CASE("missing seed everywhere exits 1 naming master_seed", "[cli]") {
  const auto dir = make_dir("noseed");
  write_file(dir / "cfg.json", R"({
    "B": {"dim": 1, "entries": [1.0]},
    "detector": {"threshold": 1.0},
    "dt": 1e-3,
    "T": 10.0
  })");
  const auto r = run_command("born --config " + (dir / "cfg.json").string(), dir);
  CHECK(r.exit_code == 1);
  CHECK(r.stderr_text.find("master_seed") != std::string::npos);
}

TEST_CASE("PCSFT_SEED provides the fallback seed", "[cli]") {
  const auto dir = make_dir("envseed");
  write_file(dir / "cfg.json", R"({
    "B": {"dim": 1, "entries": [1.0]},
    "detector": {"threshold": 1.0},
    "dt": 1e-3,
    "T": 250.0
  })");
  const fs::path err = dir / "stderr.txt";
  const std::string cmd = "PCSFT_SEED=9 " + kCli + " tau --config " + (dir / "cfg.json").string() +
                          " --out " + (dir / "tau.csv").string() + " 2>" + err.string();
  const int rc = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(rc));
  REQUIRE(WEXITSTATUS(rc) == 0);
  CHECK(slurp(dir / "tau.csv").find("# master_seed 9") != std::string::npos);
}

TEST_CASE("degenerate coincidence rate exits 2", "[cli]") {
  const auto dir = make_dir("degenerate");
  write_file(dir / "cfg.json", R"({
    "B": {"dim": 2, "entries": [1.0, 0.0, 0.0, 1.0]},
    "detector": {"threshold": 1e9, "mode": "windowed"},
    "dt": 1e-2,
    "T": 1.0,
    "n_trials": 20,
    "master_seed": 5
  })");
  const auto r = run_command("simulate --coincidence --config " + (dir / "cfg.json").string() +
                                 " --out " + (dir / "out.csv").string(),
                             dir);
  CHECK(r.exit_code == 2);
}

TEST_CASE("oracle subcommand prints formula results as json", "[cli]") {
  const auto dir = make_dir("oracle");
  const auto out = (dir / "oracle.json").string();
  auto r = run_command("oracle --formula mean_tau --threshold 2 --power 4 --out " + out, dir);
  REQUIRE(r.exit_code == 0);
  auto doc = nlohmann::json::parse(slurp(dir / "oracle.json"));
  CHECK(doc.at("formula_id") == "mean_tau");
  CHECK(doc.at("value").get<double>() == 0.5);

  r = run_command("oracle --formula click_rate --threshold 1 --power 1 --T 100 --out " + out, dir);
  REQUIRE(r.exit_code == 0);
  doc = nlohmann::json::parse(slurp(dir / "oracle.json"));
  CHECK(doc.at("value").get<double>() == 1.0);
  CHECK(doc.at("expected_count").get<double>() == 100.0);

  r = run_command("oracle --formula survival_1d --threshold 1 --power 1 --t 0 --out " + out, dir);
  REQUIRE(r.exit_code == 0);
  doc = nlohmann::json::parse(slurp(dir / "oracle.json"));
  CHECK(doc.at("value").get<double>() == 1.0);

  write_file(dir / "born.json", R"({
    "rho": {"dim": 2, "entries": [0.25, 0.0, 0.0, 0.75]},
    "projector": {"dim": 2, "entries": [1.0, 0.0, 0.0, 0.0]}
  })");
  r = run_command("oracle --formula born --config " + (dir / "born.json").string() + " --out " + out,
                  dir);
  REQUIRE(r.exit_code == 0);
  doc = nlohmann::json::parse(slurp(dir / "oracle.json"));
  CHECK(doc.at("value").get<double>() == 0.25);
}

TEST_CASE("sweep subcommand emits one row per threshold", "[cli]") {
  const auto dir = make_dir("sweep");
  write_file(dir / "cfg.json", R"({
    "B": {"dim": 2, "entries": [1.0, 0.0, 0.0, 1.0]},
    "detector": {"threshold": 2.0, "mode": "windowed"},
    "dt": 2e-3,
    "T": 1.0,
    "n_trials": 1000,
    "master_seed": 3
  })");
  const auto out = (dir / "sweep.csv").string();
  const auto r = run_command("sweep --config " + (dir / "cfg.json").string() +
                                 " --thresholds 2,2,3 --out " + out,
                             dir);
  REQUIRE(r.exit_code == 0);
  const auto lines = data_lines(slurp(out));
  REQUIRE(lines.size() == 4);  // header + three rows
  CHECK(lines[0] == "threshold,p1,p2,p12,g2,g2_low,g2_high");
  CHECK(lines[1] == lines[2]);  // duplicated threshold reproduces the row
}

TEST_CASE("modes subcommand tabulates coefficients", "[cli]") {
  const auto dir = make_dir("modes");
  write_file(dir / "modes.json", R"({
    "system": {"generator": {"dim": 2, "entries": [1.0, 0.0, 0.0, 2.0]}, "mode": "plain"},
    "phi0": [1.0, 1.0],
    "times": [0.0, 1.0]
  })");
  const auto out = (dir / "modes.csv").string();
  const auto r = run_command("modes --config " + (dir / "modes.json").string() + " --out " + out, dir);
  REQUIRE(r.exit_code == 0);
  const auto lines = data_lines(slurp(out));
  REQUIRE(lines.size() == 3);
  CHECK(lines[0] == "t,norm,c_0,c_1");
  CHECK(lines[2].find("2.71828") != std::string::npos);

  const auto jr = run_command("modes --config " + (dir / "modes.json").string() +
                                  " --format json --out " + (dir / "modes.out.json").string(),
                              dir);
  REQUIRE(jr.exit_code == 0);
  const auto doc = nlohmann::json::parse(slurp(dir / "modes.out.json"));
  CHECK(doc.contains("relative_energies"));
  CHECK(doc.at("relative_energies")[0].get<double>() == Approx(0.5));
}

TEST_CASE("simulate singles writes csv to stdout by default", "[cli]") {
  const auto dir = make_dir("stdout");
  write_file(dir / "b13.json", kB13Config);
  const fs::path captured = dir / "stdout.txt";
  const std::string cmd = kCli + " simulate --config " + (dir / "b13.json").string() + " >" +
                          captured.string() + " 2>/dev/null";
  const int rc = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(rc));
  REQUIRE(WEXITSTATUS(rc) == 0);
  const auto lines = data_lines(slurp(captured));
  REQUIRE(lines.size() >= 3);
  CHECK(lines[0] == "channel,count,p,ci_low,ci_high");
}
