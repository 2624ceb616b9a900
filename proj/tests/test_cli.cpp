#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct RunResult {
  int exit_code;
  std::string output;
};

RunResult run_cli(const std::string& args) {
  const std::string cmd = std::string(SEMCAST_CLI_PATH) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string out;
  char buf[4096];
  while (size_t n = fread(buf, 1, sizeof(buf), pipe)) out.append(buf, n);
  const int status = pclose(pipe);
  return {WEXITSTATUS(status), out};
}

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / name;
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p);
  return std::string((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("no arguments prints usage and exits 2") {
  const auto r = run_cli("");
  CHECK(r.exit_code == 2);
  CHECK(r.output.find("Usage") != std::string::npos);
}

TEST_CASE("unknown flags exit 2 with the offending name") {
  const auto r = run_cli("allocate --not-a-flag 3");
  CHECK(r.exit_code == 2);
  CHECK(r.output.find("not-a-flag") != std::string::npos);
}

TEST_CASE("allocate writes the manifest first and the fixed-header CSV") {
  const fs::path dir = fresh_dir("semcast_cli_alloc");
  const auto r = run_cli("allocate --variances 0.5,1.0 --d-grid 0.4:0.8:0.2 --p-kl 0.3 --out " +
                         dir.string());
  CHECK(r.exit_code == 0);
  CHECK(fs::exists(dir / "manifest.json"));
  const std::string csv = slurp(dir / "allocation.csv");
  CHECK(csv.rfind("D,P_kl,D_1,D_2,R_1,R_2,lambda_D,lambda_P,total_rate\n", 0) == 0);
  CHECK(slurp(dir / "manifest.json").find("allocate") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("region emits the alpha sweep CSV") {
  const fs::path dir = fresh_dir("semcast_cli_region");
  const auto r = run_cli("region --g1 1 --g2 0.5 --power 10 --noise1 gaussian:1.0 "
                         "--noise2 gaussian:1.0 --n-alpha 5 --out " + dir.string());
  CHECK(r.exit_code == 0);
  const std::string csv = slurp(dir / "region.csv");
  CHECK(csv.rfind("alpha,r1_inner,r1_outer,r2_inner,r2_outer,kl1_bits,kl2_bits\n", 0) == 0);
  // 5 grid points + header
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 6);
  fs::remove_all(dir);
}

TEST_CASE("region with swapped gains fails as a computation error") {
  const fs::path dir = fresh_dir("semcast_cli_region_bad");
  const auto r = run_cli("region --g1 0.5 --g2 1.0 --noise1 gaussian:1.0 --noise2 gaussian:1.0 "
                         "--out " + dir.string());
  CHECK(r.exit_code == 1);
  CHECK(r.output.find("swap") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("simulate reports empirical powers in JSON") {
  const fs::path dir = fresh_dir("semcast_cli_sim");
  const auto r = run_cli("simulate --alpha 0.3 --symbols 20000 --out " + dir.string());
  CHECK(r.exit_code == 0);
  const std::string j = slurp(dir / "simulate.json");
  CHECK(j.find("\"sinr\"") != std::string::npos);
  CHECK(j.find("\"empirical\"") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("config files are honored and unknown keys rejected") {
  const fs::path dir = fresh_dir("semcast_cli_cfg");
  fs::create_directories(dir);
  {
    std::ofstream os(dir / "good.toml");
    os << "[allocate]\nvariances=\"0.5,1.0\"\nd-grid=\"0.4:0.4:1\"\np-kl=0.3\n";
  }
  const auto ok = run_cli("allocate --config " + (dir / "good.toml").string() + " --out " +
                          (dir / "o1").string());
  CHECK(ok.exit_code == 0);
  {
    std::ofstream os(dir / "bad.toml");
    os << "[allocate]\nno-such-key=1\n";
  }
  const auto bad = run_cli("allocate --config " + (dir / "bad.toml").string() + " --out " +
                           (dir / "o2").string());
  CHECK(bad.exit_code == 2);
  fs::remove_all(dir);
}

TEST_CASE("train then eval round trip at a tiny scale") {
  const fs::path dir = fresh_dir("semcast_cli_train");
  const auto tr = run_cli("train --steps 30 --seed 5 --out " + dir.string());
  CHECK(tr.exit_code == 0);
  CHECK(fs::exists(dir / "model.smae"));
  CHECK(fs::exists(dir / "schema.json"));
  CHECK(fs::exists(dir / "history.csv"));
  const auto ev = run_cli("eval --checkpoint " + (dir / "model.smae").string() +
                          " --swap-pairs 20 --reps 2 --out " + (dir / "eval").string());
  CHECK(ev.exit_code == 0);
  CHECK(ev.output.find("swap_accuracy") != std::string::npos);
  fs::remove_all(dir);
}
