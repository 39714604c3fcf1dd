#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cplcalib/text.hpp"

namespace fs = std::filesystem;

namespace {

const std::string kCli = CPLCALIB_CLI_PATH;

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("cplcalib_cli_test_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  std::string file(const std::string& name) const {
    return (path / name).string();
  }
};

int run(const std::string& args) {
  const std::string cmd = kCli + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Manifest text with the timing line removed, for byte comparisons.
std::string strip_duration(const std::string& text) {
  std::string out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("duration_ms=", 0) == 0) continue;
    out += line;
    out += '\n';
  }
  return out;
}

}  // namespace

TEST_CASE("generate is deterministic and writes a manifest") {
  TempDir dir;
  const std::string a = dir.file("a.csv");
  const std::string b = dir.file("b.csv");
  CHECK(run("generate --preset cvgl --configs 5 --points 8 --seed 7 --out " + a) == 0);
  CHECK(run("generate --preset cvgl --configs 5 --points 8 --seed 7 --out " + b) == 0);
  CHECK(slurp(a) == slurp(b));
  CHECK(strip_duration(slurp(a + ".manifest")) ==
        strip_duration(slurp(b + ".manifest")));
  CHECK(slurp(a + ".manifest").find("subcommand=generate") != std::string::npos);

  const std::string c = dir.file("c.csv");
  CHECK(run("generate --preset cvgl --configs 5 --points 8 --seed 8 --out " + c) == 0);
  CHECK(slurp(a) != slurp(c));
}

TEST_CASE("generate validates flags and paths") {
  TempDir dir;
  CHECK(run("generate --preset nosuch --out " + dir.file("x.csv")) == 2);
  CHECK(run("generate --preset cvgl") == 2);                // missing --out
  CHECK(run("generate --preset cvgl --configs -3 --out " + dir.file("x.csv")) == 2);
  CHECK(run("generate --preset cvgl --out /nonexistent/dir/x.csv") == 3);
}

TEST_CASE("custom ranges file") {
  TempDir dir;
  const std::string ranges = dir.file("ranges.txt");
  {
    std::ofstream out(ranges);
    out << "fx_min=50\nfx_max=70\nfy_min=50\nfy_max=70\n"
        << "u0_min=56\nu0_max=56\nv0_min=56\nv0_max=56\n"
        << "b_min=-100\nb_max=-10\nd_min=2\nd_max=10\n"
        << "theta_p_deg_min=-5\ntheta_p_deg_max=5\n"
        << "tx_min=-10\ntx_max=0\nty_min=-1\nty_max=1\ntz_min=-1\ntz_max=0\n";
  }
  const std::string data = dir.file("custom.csv");
  CHECK(run("generate --ranges " + ranges + " --configs 3 --points 4 --seed 1 --out " + data) == 0);
  CHECK(slurp(data).find("config_id,fx,fy") == 0);

  {
    std::ofstream out(ranges, std::ios::app);
    out << "bogus_key=1\n";
  }
  CHECK(run("generate --ranges " + ranges + " --configs 3 --points 4 --out " +
            dir.file("bad.csv")) == 3);
}

TEST_CASE("project prints the chain result") {
  TempDir dir;
  const std::string out = dir.file("point.txt");
  CHECK(run("project --fx 2 --fy 7 --u0 10 --v0 20 --b 3 --d 6 "
            "--pitch-deg 0 --tx 0 --ty 0 --tz 0 --u 10 --v 20 --out " + out) == 0);
  const std::string text = slurp(out);
  CHECK(text.find("X=1") != std::string::npos);
  CHECK(text.find("Y=0") != std::string::npos);
  CHECK(text.find("Z=0") != std::string::npos);

  // d = 0 without an override is a numeric abort.
  CHECK(run("project --fx 2 --fy 7 --u0 10 --v0 20 --b 3 --d 0 "
            "--pitch-deg 0 --tx 0 --ty 0 --tz 0 --u 10 --v 20") == 4);
}

TEST_CASE("calibrate recovers a noiseless record from a ground-truth init") {
  TempDir dir;
  const std::string data = dir.file("data.csv");
  REQUIRE(run("generate --preset cvgl --configs 2 --points 8 --seed 3 --out " + data) == 0);

  const std::string out = dir.file("fit.csv");
  CHECK(run("calibrate --data " + data + " --out " + out +
            " --config-id 0 --init gt") == 0);
  const std::string text = slurp(out);
  // header + one row; converged at epoch 1
  std::istringstream in(text);
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  CHECK(header.rfind("config_id,converged,epochs,final_loss", 0) == 0);
  const auto cols = cplcalib::split(row, ',');
  CHECK(cols[0] == "0");
  CHECK(cols[1] == "1");
  CHECK(cols[2] == "1");
}

TEST_CASE("calibrate fails cleanly on corrupt input") {
  TempDir dir;
  const std::string data = dir.file("corrupt.csv");
  {
    std::ofstream out(data);
    out << "not,a,valid,header\n1,2,3,4\n";
  }
  CHECK(run("calibrate --data " + data + " --out " + dir.file("fit.csv")) == 3);
  CHECK(run("calibrate --data " + dir.file("missing.csv") + " --out " +
            dir.file("fit.csv")) == 3);
}

TEST_CASE("gradcheck passes at the default tolerance and honors --tolerance") {
  TempDir dir;
  const std::string report = dir.file("gradcheck.txt");
  CHECK(run("gradcheck --samples 100 --seed 1 --out " + report) == 0);
  CHECK(slurp(report).find("status=pass") != std::string::npos);
  // An impossible tolerance must trip the check-failure exit code.
  CHECK(run("gradcheck --samples 20 --seed 1 --tolerance 1e-30") == 5);
}

TEST_CASE("train and evaluate round trip") {
  TempDir dir;
  const std::string data = dir.file("train.csv");
  REQUIRE(run("generate --preset cvgl --configs 6 --points 6 --seed 5 --out " + data) == 0);

  const std::string ckpt = dir.file("model.ckpt");
  CHECK(run("train --data " + data + " --mode cpl-a --topology sn --trunk 8 "
            "--lr 0.05 --epochs 12 --batch 4 --seed 2 --out " + ckpt) == 0);
  CHECK(fs::exists(ckpt));
  CHECK(fs::exists(ckpt + ".log"));
  CHECK(fs::exists(ckpt + ".manifest"));

  // Adaptive-weight log rows each sum to 13.
  {
    std::istringstream log(slurp(ckpt + ".log"));
    std::string header;
    std::getline(log, header);
    CHECK(header.find(",alpha_fx") != std::string::npos);
    const auto header_cols = cplcalib::split(header, ',');
    std::size_t first_alpha = 0;
    for (std::size_t i = 0; i < header_cols.size(); ++i) {
      if (header_cols[i] == "alpha_fx") first_alpha = i;
    }
    std::string row;
    int rows = 0;
    while (std::getline(log, row)) {
      const auto cols = cplcalib::split(row, ',');
      REQUIRE(cols.size() == header_cols.size());
      double sum = 0.0;
      for (std::size_t i = first_alpha; i < cols.size(); ++i) {
        sum += cplcalib::parse_double(cols[i]);
      }
      CHECK(std::abs(sum - 13.0) < 1e-12);
      ++rows;
    }
    CHECK(rows > 0);
  }

  const std::string table = dir.file("eval.csv");
  CHECK(run("evaluate --data " + data + " --checkpoint " + ckpt +
            " --preset cvgl --out " + table + " --kv " + dir.file("eval.kv")) == 0);
  CHECK(slurp(table).rfind("metric,fx,fy,u0,v0,b,d,tx,ty,tz,theta_p", 0) == 0);
  CHECK(slurp(dir.file("eval.kv")).find("nmae.fx=") != std::string::npos);

  // Mean predictor needs no checkpoint.
  const std::string mean_table = dir.file("mean.csv");
  CHECK(run("evaluate --data " + data + " --predictor mean --preset cvgl --out " +
            mean_table) == 0);
  CHECK(slurp(mean_table).rfind("metric,", 0) == 0);

  // Width is mandatory without the cvgl preset.
  CHECK(run("evaluate --data " + data + " --predictor mean --out " +
            dir.file("nowidth.csv")) == 2);
}

TEST_CASE("usage errors exit with code 2") {
  CHECK(run("") == 2);
  CHECK(run("nosuchcommand") == 2);
  CHECK(run("evaluate --data x.csv") == 2);  // missing --out
}
