#include <doctest.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fedsim/commands.hpp"
#include "fedsim/config.hpp"

using namespace fedsim;
namespace fs = std::filesystem;

namespace {

const char* kTinyConfig = R"(
[experiment]
rounds = 2
seed = 5
aggregation = optagg
eval_batch_size = 16

[data]
kind = synthetic
num_nodes = 10
iid_fraction = 0.5
heterogeneity = 1
samples_per_node = 30
feature_dim = 6
num_classes = 3

[train]
epochs = 1
batch_size = 10
learning_rate = 0.05

[policy]
name = fedpns
fraction = 0.4
)";

fs::path make_workspace() {
  const fs::path dir =
      fs::temp_directory_path() /
      ("fedsim_cli_" +
       std::to_string(std::chrono::steady_clock::now().time_since_epoch().count()));
  fs::create_directories(dir);
  std::ofstream out(dir / "config.ini");
  out << kTinyConfig;
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

TEST_CASE("cmd_run writes metrics, manifest and checkpoint") {
  const fs::path dir = make_workspace();
  RunOptions opts;
  opts.config_path = dir / "config.ini";
  opts.out_dir = dir / "out";

  const auto started = std::chrono::steady_clock::now();
  CHECK(cmd_run(opts) == kExitOk);
  const auto elapsed = std::chrono::steady_clock::now() - started;
  CHECK(std::chrono::duration_cast<std::chrono::seconds>(elapsed).count() < 5);

  CHECK(fs::exists(dir / "out" / "metrics.csv"));
  CHECK(fs::exists(dir / "out" / "manifest.json"));
  CHECK(fs::exists(dir / "out" / "checkpoint.bin"));

  const std::string csv = slurp(dir / "out" / "metrics.csv");
  CHECK(csv.rfind("round,policy,seed,", 0) == 0);
  CHECK(csv.find("fedpns") != std::string::npos);

  SUBCASE("refuses to overwrite without force") {
    CHECK(cmd_run(opts) == kExitRuntime);
    opts.force = true;
    CHECK(cmd_run(opts) == kExitOk);
  }
  SUBCASE("reruns are byte-identical") {
    RunOptions again = opts;
    again.out_dir = dir / "out2";
    CHECK(cmd_run(again) == kExitOk);
    CHECK(slurp(dir / "out" / "metrics.csv") ==
          slurp(dir / "out2" / "metrics.csv"));
  }
  SUBCASE("seed and policy overrides change the output") {
    RunOptions other = opts;
    other.out_dir = dir / "out3";
    other.seed = 99;
    other.policy = "fedavg";
    CHECK(cmd_run(other) == kExitOk);
    const std::string other_csv = slurp(dir / "out3" / "metrics.csv");
    CHECK(other_csv.find("fedavg,99") != std::string::npos);
  }
}

TEST_CASE("cmd_run exits 2 on a missing or invalid config") {
  const fs::path dir = make_workspace();
  RunOptions opts;
  opts.config_path = dir / "nope.ini";
  opts.out_dir = dir / "out";
  CHECK(cmd_run(opts) == kExitUsage);

  std::ofstream bad(dir / "bad.ini");
  bad << "[policy]\nalpha = 0\n";
  bad.close();
  opts.config_path = dir / "bad.ini";
  CHECK(cmd_run(opts) == kExitUsage);

  opts.config_path = dir / "config.ini";
  opts.policy = "mystery";
  CHECK(cmd_run(opts) == kExitUsage);
}

TEST_CASE("cmd_compare runs the policy/seed grid") {
  const fs::path dir = make_workspace();
  CompareOptions opts;
  opts.config_path = dir / "config.ini";
  opts.out_dir = dir / "cmp";
  opts.policies = {"fedavg", "fedpns"};
  opts.seeds = {5, 6};
  CHECK(cmd_compare(opts) == kExitOk);

  for (const char* name :
       {"metrics_fedavg_seed5.csv", "metrics_fedavg_seed6.csv",
        "metrics_fedpns_seed5.csv", "metrics_fedpns_seed6.csv",
        "summary.csv", "compare_test_acc.svg"}) {
    CHECK(fs::exists(dir / "cmp" / name));
  }

  const std::string summary = slurp(dir / "cmp" / "summary.csv");
  CHECK(summary.rfind("policy,seed,last10_test_acc,last10_train_loss\n", 0) ==
        0);
  // One row per (policy, seed) cell plus the header.
  std::size_t rows = 0;
  for (char c : summary) {
    if (c == '\n') ++rows;
  }
  CHECK(rows == 1 + opts.policies.size() * opts.seeds.size());

  SUBCASE("cell outputs are independent of the thread count") {
    CompareOptions threaded = opts;
    threaded.out_dir = dir / "cmp_threads";
    threaded.threads = 4;
    CHECK(cmd_compare(threaded) == kExitOk);
    for (const char* name :
         {"metrics_fedavg_seed5.csv", "metrics_fedpns_seed6.csv",
          "summary.csv"}) {
      CHECK(slurp(dir / "cmp" / name) == slurp(dir / "cmp_threads" / name));
    }
  }
}

TEST_CASE("cmd_compare usage errors") {
  const fs::path dir = make_workspace();
  CompareOptions opts;
  opts.config_path = dir / "config.ini";
  opts.out_dir = dir / "cmp";
  opts.policies = {"fedavg"};  // one policy is not a comparison
  CHECK(cmd_compare(opts) == kExitUsage);
  opts.policies = {"fedavg", "warp"};
  CHECK(cmd_compare(opts) == kExitUsage);
}

TEST_CASE("thread resolution prefers the flag, then the environment") {
  unsetenv("FEDSIM_THREADS");
  CHECK(resolve_threads(std::nullopt, 3) == 3);
  CHECK(resolve_threads(8, 3) == 8);
  setenv("FEDSIM_THREADS", "6", 1);
  CHECK(resolve_threads(std::nullopt, 3) == 6);
  CHECK(resolve_threads(2, 3) == 2);
  unsetenv("FEDSIM_THREADS");
}

#ifdef FEDSIM_BIN
TEST_CASE("the installed binary maps usage errors to exit 2") {
  const fs::path dir = make_workspace();
  const std::string bin = FEDSIM_BIN;
  CHECK(std::system((bin + " run >/dev/null 2>&1").c_str()) != 0);
  const int code = std::system(
      (bin + " run --config " + (dir / "config.ini").string() + " --out " +
       (dir / "bin_out").string() + " >/dev/null 2>&1")
          .c_str());
  CHECK(WEXITSTATUS(code) == 0);
  CHECK(fs::exists(dir / "bin_out" / "metrics.csv"));
}
#endif
