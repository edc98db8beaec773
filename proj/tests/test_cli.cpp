// Copyright 2026 The GBCD Detector Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct Workdir {
  fs::path dir;
  Workdir() {
    dir = fs::temp_directory_path() / ("gbcd_cli_test_" + std::to_string(::getpid()));
    fs::create_directories(dir);
  }
  ~Workdir() { fs::remove_all(dir); }
  fs::path write(const std::string& name, const std::string& text) const {
    std::ofstream(dir / name) << text;
    return dir / name;
  }
};

int run(const std::string& args) {
  const std::string cmd = std::string(GBCD_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string first_line(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  return line;
}

const char* kSim = R"({"scenario": {"B": 8, "U": 2, "order": 4}, "snr_db": [4], "seed": 9,
  "n_data": 24, "trials": 8, "detectors": ["gbcd-box", "lmmse"]})";

}  // namespace

TEST_CASE("cli exit codes and output schemas") {
  Workdir w;
  const fs::path sim = w.write("sim.json", kSim);
  const fs::path out = w.dir / "sweep.csv";
  const fs::path trace = w.dir / "trace.csv";
  CHECK(run("simulate --config " + sim.string() + " --out " + out.string() + " --trace " +
            trace.string()) == 0);
  CHECK(first_line(out) == "snr_db,detector,bler,ser,trials,block_errors");
  CHECK(first_line(trace).rfind("iteration,block,residual_norm,z0_re,z0_im", 0) == 0);
  CHECK(run("simulate --fixed-point --config " + sim.string() + " --out " + out.string()) == 0);

  const fs::path hw = w.dir / "hw.csv";
  CHECK(run("hwmodel --out " + hw.string()) == 0);
  CHECK(first_line(hw) ==
        "algorithm,B,U,K,T,pre_mults,eq_mults,total,theta_bps,eta,p_watts_fit");

  const fs::path params = w.dir / "params.json";
  const fs::path tr = w.write(
      "train.json",
      R"({"scenario": {"B": 8, "U": 2, "order": 4}, "snr_db": [8], "seed": 4,
          "training": {"train_samples": 50, "val_samples": 20, "max_epochs": 3, "batch_size": 25}})");
  CHECK(run("train --config " + tr.string() + " --out " + params.string()) == 0);
  CHECK(fs::exists(params));
  const fs::path pme = w.write(
      "pme.json", R"({"scenario": {"B": 8, "U": 2, "order": 4}, "snr_db": [8], "seed": 9,
        "n_data": 24, "trials": 4, "detectors": ["gbcd-pme"], "params": ")" +
                      params.string() + R"("})");
  CHECK(run("simulate --config " + pme.string() + " --out " + out.string()) == 0);

  // Configuration problems exit with 2, unresolved parameters with 3.
  CHECK(run("simulate") == 2);
  CHECK(run("simulate --config " + (w.dir / "missing.json").string()) == 2);
  CHECK(run("simulate --config " + w.write("bad.json", R"({"snr_db": [1], "seed": 1, "x": 0})").string()) == 2);
  CHECK(run("simulate --config " + w.write("noseed.json", R"({"snr_db": [1]})").string()) == 2);
  CHECK(run("simulate --config " +
            w.write("nop.json", R"({"snr_db": [8], "seed": 1, "detectors": ["gbcd-pme"],
                                    "params": "/nonexistent/params.json"})")
                .string()) == 3);
  CHECK(run("frobnicate") == 2);
}
