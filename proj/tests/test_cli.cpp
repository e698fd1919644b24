#include <doctest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <map>
#include <set>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "fixtures.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

#ifndef MONOALIGN_CLI
#error "MONOALIGN_CLI must name the command-line binary"
#endif

namespace {

std::string quote(const std::string& s) { return "'" + s + "'"; }

// Runs the CLI with `args` and returns its exit status; output goes to `log`.
int run(const std::string& args, const fs::path& log) {
  const std::string cmd = quote(MONOALIGN_CLI) + " " + args + " > " + quote(log.string()) + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string p(const fs::path& path) { return quote(path.string()); }

std::map<std::string, std::string> tree_contents(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file() && e.path().filename() != "manifest.json")
      out[fs::relative(e.path(), root).string()] = fixture::slurp(e.path());
  return out;
}

}  // namespace

TEST_CASE("synth, train, audit, sweep and replay") {
  fixture::TempDir tmp;
  const auto log = tmp / "log.txt";
  const auto data = tmp / "data";
  REQUIRE(run("synth -o " + p(data) + " --seed 3 --rows 1500", log) == 0);
  for (const char* f : {"schema.json", "data.csv", "train.csv", "test.csv", "survey.csv", "manifest.json"})
    CHECK(fs::exists(data / f));
  const auto manifest = json::parse(fixture::slurp(data / "manifest.json"));
  CHECK(manifest["program"] == "monoalign");
  CHECK(manifest["command"] == "synth");
  CHECK(manifest["config"]["n"] == 1500);

  const std::string grid = " --learning-rates 0.1 --rounds 30 --depths 2 --folds 3";
  const auto model = tmp / "model";
  REQUIRE(run("train -o " + p(model) + " --schema " + p(data / "schema.json") + " --train " + p(data / "train.csv") +
                  " --constraints " + p(data / "survey.csv") + grid,
              log) == 0);
  const auto constraints = json::parse(fixture::slurp(model / "constraints.json"));
  CHECK(constraints.dump().find("stage") != std::string::npos);
  CHECK(fs::exists(model / "model.json"));
  CHECK(fs::exists(model / "cv_report.json"));

  const auto audit = tmp / "audit";
  REQUIRE(run("audit -o " + p(audit) + " --model " + p(model / "model.json") + " --schema " + p(data / "schema.json") +
                  " --test " + p(data / "test.csv") + " --full " + p(data / "data.csv") + " --feature stage --feature response",
              log) == 0);
  const auto violations = json::parse(fixture::slurp(audit / "violations.json"));
  CHECK(violations.dump().find("max_row_violation") != std::string::npos);
  for (const auto& [feature, entry] : violations.items()) CHECK(entry["pdp_violations"].empty());

  const auto sweep = tmp / "sweep";
  REQUIRE(run("sweep -o " + p(sweep) + " --schema " + p(data / "schema.json") + " --train " + p(data / "train.csv") +
                  " --test " + p(data / "test.csv") + " --constraints " + p(data / "survey.csv") +
                  " --sizes 100 200 --seeds 5 --workers 2" + grid,
              log) == 0);
  std::size_t models = 0;
  for (const auto& e : fs::directory_iterator(sweep / "models")) models += e.is_regular_file();
  CHECK(models == 20);
  for (const char* f : {"records.csv", "curve_auc_roc.csv", "curve_avg_precision.csv", "curve_distances.csv",
                        "curve_auc_roc.svg", "curve_avg_precision.svg", "curve_d_shap.svg"})
    CHECK(fs::exists(sweep / f));
  const auto records = fixture::slurp(sweep / "records.csv");
  CHECK(std::count(records.begin(), records.end(), '\n') == 21);

  const auto replayed = tmp / "replayed";
  REQUIRE(run("replay " + p(sweep / "manifest.json") + " -o " + p(replayed), log) == 0);
  const auto a = tree_contents(sweep);
  const auto b = tree_contents(replayed);
  CHECK(a.size() == b.size());
  for (const auto& [name, content] : a) {
    CAPTURE(name);
    REQUIRE(b.count(name));
    CHECK(b.at(name) == content);
  }
  const auto original = json::parse(fixture::slurp(sweep / "manifest.json"));
  const auto replay_manifest = json::parse(fixture::slurp(replayed / "manifest.json"));
  CHECK(replay_manifest["command"] == "sweep");
  CHECK(replay_manifest["config"]["sizes"] == original["config"]["sizes"]);

  // Experiment preparation and analysis on the same sweep.
  const auto bundle = tmp / "bundle";
  REQUIRE(run("exp-prepare -o " + p(bundle) + " --sweep " + p(sweep) + " --schema " + p(data / "schema.json") +
                  " --test " + p(data / "test.csv") +
                  " --runs 5 --pairs 2 --patients-per-pair 6 --raters a b c --patients-per-rater 4 --train-size 100",
              log) == 0);
  CHECK(fixture::slurp(log).find("token=") != std::string::npos);
  std::vector<json> tasks;
  {
    std::istringstream in(fixture::slurp(bundle / "tasks.jsonl"));
    std::string line;
    while (std::getline(in, line)) tasks.push_back(json::parse(line));
  }
  REQUIRE(tasks.size() == 12);
  std::string responses;
  std::map<int, int> seen;
  for (const auto& t : tasks) {
    // Alternate the preferred model within each pair so no pair is degenerate.
    const bool want_constrained = seen[t["pair_id"].get<int>()]++ % 2 == 0;
    const bool left_constrained = t["left_model"] == "constrained";
    const json r{{"task_id", t["task_id"]},
                 {"choice", want_constrained == left_constrained ? "left" : "right"},
                 {"confidence", 3},
                 {"timestamp", "2026-01-01T00:00:00Z"}};
    responses += r.dump() + "\n";
  }
  fixture::spit(tmp / "responses.jsonl", responses);
  const auto analysis = tmp / "analysis";
  const int code = run("exp-analyze -o " + p(analysis) + " --bundle " + p(bundle) + " --responses " +
                           p(tmp / "responses.jsonl"),
                       log);
  CHECK((code == 0 || code == 3));
  const auto summary = json::parse(fixture::slurp(analysis / "summary.json"));
  CHECK(summary["constrained_chosen_rate"]["estimate"] == 0.5);
  CHECK(fs::exists(analysis / "report.txt"));
}

TEST_CASE("usage errors exit with 64") {
  fixture::TempDir tmp;
  const auto log = tmp / "log.txt";
  CHECK(run("", log) == 64);
  CHECK(run("no-such-command", log) == 64);
  CHECK(run("train -o " + p(tmp / "t"), log) == 64);
  CHECK(run("synth -o " + p(tmp / "d") + " --monotone stage:2:1.0", log) == 64);
  CHECK(fixture::slurp(log).find("direction") != std::string::npos);
  CHECK(run("replay " + p(tmp / "log.txt"), log) != 0);
  CHECK(run("--help", log) == 0);
}
