#include <doctest.h>

#include <sys/wait.h>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "sodesn/bundle.hpp"
#include "sodesn/cli.hpp"

using namespace sodesn;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RunDir {
  fs::path path;
  RunDir() {
    static std::atomic<int> counter{0};
    path = fs::temp_directory_path() / ("sodesn_cli_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~RunDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result cli(const RunDir& dir, std::vector<std::string> args) {
  args.insert(args.begin(), {"--run-dir", dir.path.string()});
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json(const std::string& path) { return json::parse(slurp(path)); }

// Small data set and trained bundle shared by several cases.
const std::vector<std::string> kSmall = {"--set", "synth.length=3000", "--set", "train.rows=2000",
                                         "--set", "node.internal=10", "--set", "monitor.calibration_rows=1000"};

std::vector<std::string> with_small(std::vector<std::string> args) {
  args.insert(args.begin(), kSmall.begin(), kSmall.end());
  return args;
}

void make_data_and_bundle(const RunDir& dir) {
  REQUIRE(cli(dir, with_small({"--seed", "5", "synth-data", "--out", "data.csv"})).code == 0);
  const Result r = cli(dir, with_small({"--seed", "5", "train", "--data", dir.file("data.csv"), "--out", "bundle.json"}));
  INFO(r.err);
  REQUIRE(r.code == 0);
}

}  // namespace

TEST_CASE("synth-data writes the CSV and a manifest") {
  RunDir dir;
  const Result r = cli(dir, with_small({"--seed", "3", "synth-data"}));
  CHECK(r.code == 0);
  const std::string csv = slurp(dir.file("synthetic.csv"));
  CHECK(csv.rfind("timestamp,s000,s001,s002,s003,s004,s005,s006,s007\n", 0) == 0);
  const json m = read_json(dir.file("synth-data_manifest.json"));
  CHECK(m.at("command") == "synth-data");
  CHECK(m.at("seed") == 3);
  CHECK(m.at("version") == kToolVersion);
  CHECK(m.at("config").at("synth.length") == 3000);
  CHECK(m.at("outputs").size() == 1);
}

TEST_CASE("train writes a loadable bundle; retraining is byte-identical") {
  RunDir dir;
  make_data_and_bundle(dir);
  const ModelBundle b = load_bundle(dir.file("bundle.json"));
  CHECK(b.net.node_count() == 8);
  CHECK(b.net.spec().internal == 10);
  REQUIRE(b.sensors);
  CHECK(b.sensors->names.size() == 8);
  REQUIRE(b.thresholds);
  CHECK(b.thresholds->thresholds.size() == 8);
  CHECK(b.training->train_rows == 2000);
  CHECK(b.training->fingerprint.size() == 64);
  const json m = read_json(dir.file("train_manifest.json"));
  CHECK(m.at("inputs").at(dir.file("data.csv")) == fingerprint_file(dir.file("data.csv")));

  RunDir again;
  const Result r = cli(again, with_small({"--seed", "5", "train", "--data", dir.file("data.csv"), "--out", "b2.json"}));
  REQUIRE(r.code == 0);
  CHECK(slurp(again.file("b2.json")) == slurp(dir.file("bundle.json")));
}

TEST_CASE("monitor: fault-free data raises no flags, an injected fault is flagged and sticks") {
  RunDir dir;
  make_data_and_bundle(dir);
  const std::string bundle = dir.file("bundle.json"), data = dir.file("data.csv");

  Result r = cli(dir, {"monitor", "--bundle", bundle, "--data", data, "--name", "clean"});
  INFO(r.err);
  REQUIRE(r.code == 0);
  CHECK(r.out.find("flagged: none") != std::string::npos);
  json s = read_json(dir.file("clean_summary.json"));
  CHECK(s.at("flagged_count") == 0);
  CHECK(s.at("feedback") == "replace");

  // Passthrough keeps feeding the stuck reading, which can drag neighbours over their thresholds too.
  r = cli(dir, {"monitor", "--bundle", bundle, "--data", data, "--inject-fault", "s003:2500", "--feedback",
                "passthrough", "--name", "pass"});
  REQUIRE(r.code == 0);
  s = read_json(dir.file("pass_summary.json"));
  CHECK(s.at("sensors").at(3).at("flagged") == true);
  CHECK(read_json(dir.file("pass_manifest.json")).at("feedback") == "passthrough");

  r = cli(dir, {"monitor", "--bundle", bundle, "--data", data, "--inject-fault", "s003:2500", "--reset-flags",
                "--name", "faulty"});
  REQUIRE(r.code == 0);
  s = read_json(dir.file("faulty_summary.json"));
  CHECK(s.at("sensors").at(3).at("flagged") == true);
  CHECK(s.at("sensors").at(3).at("first_flag_step").get<int>() >= 2500);
  CHECK(s.at("flag_recall") == 1.0);
  CHECK(s.at("flag_precision") == 1.0);
  const json m = read_json(dir.file("faulty_manifest.json"));
  CHECK(m.at("feedback") == "replace");
  CHECK(m.at("injected_faults").at(0) == "s003:2500");
  CHECK(read_json(dir.file("flags.json")).at("flagged") == json::array({"s003"}));

  // The flag carries over into the next run from step 0.
  r = cli(dir, {"monitor", "--bundle", bundle, "--data", data, "--name", "carried"});
  REQUIRE(r.code == 0);
  s = read_json(dir.file("carried_summary.json"));
  CHECK(s.at("sensors").at(3).at("first_flag_step") == 0);

  r = cli(dir, {"monitor", "--bundle", bundle, "--data", data, "--reset-flags", "--name", "reset"});
  REQUIRE(r.code == 0);
  CHECK(read_json(dir.file("reset_summary.json")).at("flagged_count") == 0);

  const std::string trace = slurp(dir.file("reset_trace.csv"));
  CHECK(trace.rfind("step,sensor,truth,prediction,deviation,flagged\n", 0) == 0);
}

TEST_CASE("monitor: bad inputs map to the documented exit codes") {
  RunDir dir;
  make_data_and_bundle(dir);
  const std::string bundle = dir.file("bundle.json");
  CHECK(cli(dir, {"monitor", "--bundle", bundle, "--data", dir.file("missing.csv")}).code == 4);
  CHECK(cli(dir, {"monitor", "--bundle", bundle, "--data", dir.file("data.csv"), "--inject-fault", "nope"}).code == 2);
  CHECK(cli(dir, {"monitor", "--bundle", bundle, "--data", dir.file("data.csv"), "--feedback", "odd"}).code == 2);
  std::ofstream(dir.file("other.csv")) << "timestamp,x\n2008-01-01T00:00:00Z,1\n2008-01-01T00:15:00Z,2\n";
  const Result r = cli(dir, {"monitor", "--bundle", bundle, "--data", dir.file("other.csv")});
  CHECK(r.code == 3);
  CHECK(r.err.find("error: config:") == 0);
  std::ofstream(dir.file("broken.json")) << "{";
  CHECK(cli(dir, {"monitor", "--bundle", dir.file("broken.json"), "--data", dir.file("data.csv")}).code == 3);
}

TEST_CASE("experiment: requires a seed, rejects unknown scenarios, writes deterministic outputs") {
  RunDir dir;
  CHECK(cli(dir, {"experiment", "learning_curve"}).code == 2);
  const Result bad = cli(dir, {"--seed", "1", "experiment", "bogus"});
  CHECK(bad.code == 2);
  CHECK(bad.err.find("learning_curve") != std::string::npos);

  const std::vector<std::string> args = {"--seed", "4", "--set", "synth.length=3000", "--set", "node.internal=6",
                                         "--set", "learning_curve.train_sizes=[500]", "--set", "learning_curve.folds=2",
                                         "--set", "experiment.test_size=300", "experiment", "learning_curve"};
  const Result r = cli(dir, args);
  INFO(r.err);
  REQUIRE(r.code == 0);
  CHECK(r.out.rfind("train_size,sodesn\n500,", 0) == 0);
  const std::string records = slurp(dir.file("learning_curve_seed4_records.csv"));
  CHECK(slurp(dir.file("learning_curve_seed4_plot.csv")) == r.out);
  const json summary = read_json(dir.file("learning_curve_seed4_summary.json"));
  CHECK(summary.at("seeds") == json::array({4}));
  CHECK(read_json(dir.file("learning_curve_seed4_manifest.json")).at("command") == "experiment learning_curve");

  RunDir rerun;
  REQUIRE(cli(rerun, args).code == 0);
  CHECK(slurp(rerun.file("learning_curve_seed4_records.csv")) == records);
}

TEST_CASE("config: show, file merge, overrides and key errors") {
  RunDir dir;
  std::ofstream(dir.file("cfg.json")) << R"({"node": {"internal": 21}, "seed": 9})";
  Result r = cli(dir, {"--config", dir.file("cfg.json"), "--set", "init.taps=proxy", "config", "show"});
  REQUIRE(r.code == 0);
  const json shown = json::parse(r.out);
  CHECK(shown.at("node.internal") == 21);
  CHECK(shown.at("seed") == 9);
  CHECK(shown.at("init.taps") == "proxy");
  CHECK(shown.at("init.rho_target") == 0.66);

  CHECK(cli(dir, {"--set", "no.such.key=1", "config", "show"}).code == 3);
  CHECK(cli(dir, {"--set", "node.internal=\"many\"", "config", "show"}).code == 3);
  CHECK(cli(dir, {"--set", "missing-equals", "config", "show"}).code == 3);
  CHECK(cli(dir, {"--config", dir.file("absent.json"), "config", "show"}).code == 4);
}

TEST_CASE("help, version and usage errors") {
  RunDir dir;
  Result r = cli(dir, {"--help"});
  CHECK(r.code == 0);
  CHECK(r.out.find("experiment") != std::string::npos);
  r = cli(dir, {"--version"});
  CHECK(r.code == 0);
  CHECK(r.out.find(kToolVersion) != std::string::npos);
  CHECK(cli(dir, {}).code == 2);
  CHECK(cli(dir, {"frobnicate"}).code == 2);
  CHECK(cli(dir, {"--jobs", "0", "config", "show"}).code == 2);
}

TEST_CASE("the installed binary reports exit codes to the shell") {
  RunDir dir;
  auto run = [&](const std::string& args) {
    const std::string cmd = std::string("\"") + SODESN_CLI_PATH + "\" --run-dir \"" + dir.path.string() + "\" " + args +
                            " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    REQUIRE(WIFEXITED(status));
    return WEXITSTATUS(status);
  };
  CHECK(run("config show") == 0);
  CHECK(run("--seed 1 experiment unknown_scenario") == 2);
  CHECK(run("train --data /nonexistent/data.csv") == 4);
}
