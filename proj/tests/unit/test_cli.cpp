#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cli.hpp"
#include "fixtures.hpp"
#include "ucnn/archive.hpp"
#include "ucnn/branch_and_bound.hpp"
#include "ucnn/mps.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using ucnn::cli::run;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("ucnn_cli_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& leaf) const { return (path / leaf).string(); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string case_path() { return (fixtures::data_dir() / "desk6" / "case.json").string(); }
std::string sampler_path() { return (fixtures::data_dir() / "desk6" / "sampler.json").string(); }

int generate(const std::string& out, int count, std::vector<std::string> extra = {}) {
  std::vector<std::string> args{"generate", "--case", case_path(), "--sampler", sampler_path(), "--out", out,
                                "--count", std::to_string(count)};
  if (std::find(extra.begin(), extra.end(), "--workers") == extra.end()) extra.insert(extra.end(), {"--workers", "1"});
  args.insert(args.end(), extra.begin(), extra.end());
  return run(args);
}

std::vector<json> lines(const fs::path& p) {
  std::ifstream in(p);
  std::vector<json> out;
  for (std::string s; std::getline(in, s);) out.push_back(json::parse(s));
  return out;
}

}  // namespace

TEST_CASE("cli: usage errors") {
  CHECK(run({}) == ucnn::cli::kUsage);
  CHECK(run({"frobnicate"}) == ucnn::cli::kUsage);
  CHECK(run({"generate", "--count", "nope"}) == ucnn::cli::kUsage);
  CHECK(run({"--help"}) == ucnn::cli::kOk);
}

TEST_CASE("cli: generation is deterministic and resumable") {
  TempDir d("gen");
  REQUIRE(generate(d / "a.jsonl", 4) == 0);
  REQUIRE(generate(d / "b.jsonl", 4, {"--workers", "3"}) == 0);
  CHECK(slurp(d / "a.jsonl") == slurp(d / "b.jsonl"));
  CHECK(slurp(d / "a.jsonl.manifest.json") == slurp(d / "b.jsonl.manifest.json"));
  CHECK(lines(d / "a.jsonl").size() == 5);

  SUBCASE("extending a shorter run") {
    REQUIRE(generate(d / "c.jsonl", 2) == 0);
    REQUIRE(generate(d / "c.jsonl", 4) == 0);
    CHECK(slurp(d / "c.jsonl") == slurp(d / "a.jsonl"));
    CHECK(slurp(d / "c.jsonl.manifest.json") == slurp(d / "a.jsonl.manifest.json"));
  }
  SUBCASE("a torn final line is dropped and redone") {
    fs::copy_file(d / "a.jsonl", d / "c.jsonl");
    const auto size = fs::file_size(d / "c.jsonl");
    fs::resize_file(d / "c.jsonl", size - 40);
    REQUIRE(generate(d / "c.jsonl", 4) == 0);
    CHECK(slurp(d / "c.jsonl") == slurp(d / "a.jsonl"));
  }
  SUBCASE("a different configuration is refused") {
    CHECK(generate(d / "a.jsonl", 4, {"--seed", "12345"}) == ucnn::cli::kPrecondition);
    CHECK(generate(d / "a.jsonl", 4, {"--horizon", "12"}) == ucnn::cli::kPrecondition);
  }
  SUBCASE("config file keys override flags") {
    std::ofstream(d / "cfg.json") << R"({"count": 2, "first_id": 2})";
    REQUIRE(generate(d / "c.jsonl", 4, {"--config", d / "cfg.json"}) == 0);
    const auto a = lines(d / "a.jsonl"), c = lines(d / "c.jsonl");
    REQUIRE(c.size() == 3);
    CHECK(c[1]["id"] == 2);
    CHECK(c[1]["input"] == a[3]["input"]);
    CHECK(c[2]["solution"] == a[4]["solution"]);
    std::ofstream(d / "bad.json") << R"({"colour": "red"})";
    CHECK(generate(d / "e.jsonl", 1, {"--config", d / "bad.json"}) == ucnn::cli::kSchema);
    CHECK(generate(d / "e.jsonl", 1, {"--config", d / "absent.json"}) == ucnn::cli::kMissingArtifact);
  }
}

TEST_CASE("cli: index, predict, evaluate") {
  TempDir d("pipe");
  REQUIRE(generate(d / "train.jsonl", 6) == 0);
  REQUIRE(generate(d / "test.jsonl", 3, {"--first-id", "100"}) == 0);
  REQUIRE(run({"build-index", "--case", case_path(), "--train", d / "train.jsonl", "--out", d / "idx",
               "--backend", "kd-tree"}) == 0);

  // Querying a training scenario returns it at distance 0 with its cost.
  REQUIRE(run({"predict", "--case", case_path(), "--index", d / "idx", "--inputs", d / "train.jsonl", "--out",
               d / "pred.jsonl", "--workers", "2"}) == 0);
  const auto train = lines(d / "train.jsonl"), pred = lines(d / "pred.jsonl");
  REQUIRE(pred.size() == train.size());
  CHECK(pred[0]["format"] == "ucnn-predictions");
  for (std::size_t i = 1; i < pred.size(); ++i) {
    CHECK(pred[i]["neighbor"] == train[i]["id"]);
    CHECK(pred[i]["distance"].get<double>() == 0.0);
    CHECK(pred[i]["cost"].get<double>() == train[i]["solution"]["cost"].get<double>());
  }
  // A single scenario document works as input too.
  std::ofstream(d / "one.json") << train[2]["input"].dump();
  REQUIRE(run({"predict", "--case", case_path(), "--index", d / "idx", "--inputs", d / "one.json", "--out",
               d / "one_pred.jsonl"}) == 0);
  CHECK(lines(d / "one_pred.jsonl")[1]["neighbor"] == train[2]["id"]);

  REQUIRE(run({"evaluate", "--case", case_path(), "--index", d / "idx", "--test", d / "test.jsonl", "--out",
               d / "eval"}) == 0);
  CHECK(fs::exists(d / "eval/report.csv"));
  CHECK(fs::exists(d / "eval/timings.csv"));
  const auto first = slurp(d / "eval/report.csv");
  REQUIRE(run({"evaluate", "--case", case_path(), "--index", d / "idx", "--test", d / "test.jsonl", "--out",
               d / "eval", "--workers", "3"}) == 0);
  CHECK(slurp(d / "eval/report.csv") == first);

  CHECK(run({"evaluate", "--case", case_path(), "--index", d / "idx", "--test", d / "train.jsonl", "--out",
             d / "bad"}) == ucnn::cli::kDisjointness);
  CHECK(run({"evaluate", "--case", case_path(), "--index", d / "idx", "--test", d / "train.jsonl", "--out",
             d / "overlap", "--allow-overlap"}) == 0);
  CHECK(run({"predict", "--case", case_path(), "--index", d / "nowhere", "--inputs", d / "train.jsonl"}) ==
        ucnn::cli::kMissingArtifact);

  // The same index against a modified case.
  auto doc = json::parse(std::ifstream(case_path()));
  doc["prices"]["voll"] = doc["prices"]["voll"].get<double>() + 1.0;
  std::ofstream(d / "other.json") << doc.dump();
  CHECK(run({"predict", "--case", d / "other.json", "--index", d / "idx", "--inputs", d / "test.jsonl"}) ==
        ucnn::cli::kFingerprint);
  CHECK(run({"build-index", "--case", d / "other.json", "--train", d / "train.jsonl", "--out", d / "idx2"}) ==
        ucnn::cli::kFingerprint);

  REQUIRE(run({"sweep", "--case", case_path(), "--train", d / "train.jsonl", "--test", d / "test.jsonl", "--sizes",
               "2,4,6", "--out", d / "sweep"}) == 0);
  CHECK(fs::exists(d / "sweep/sweep.csv"));
  CHECK(run({"sweep", "--case", case_path(), "--train", d / "train.jsonl", "--test", d / "test.jsonl", "--sizes",
             "2,40", "--out", d / "sweep2"}) == ucnn::cli::kPrecondition);
}

TEST_CASE("cli: external solver exchange") {
  TempDir d("ext");
  REQUIRE(generate(d / "internal.jsonl", 2) == 0);
  CHECK(generate(d / "ext.jsonl", 2, {"--external-dir", d / "x"}) == ucnn::cli::kPending);
  CHECK(lines(d / "ext.jsonl").size() == 1);

  // Stand in for an outside solver: read each MPS, solve, write a solution.
  for (int id = 0; id < 2; ++id) {
    const auto stem = d / ("x/scenario_" + std::to_string(id));
    REQUIRE(fs::exists(stem + ".mps"));
    const auto model = ucnn::milp::import_standard(stem + ".mps");
    const auto res = ucnn::milp::solve_milp(model);
    REQUIRE(res.x.size() == model.num_variables());
    std::ofstream out(stem + ".sol");
    ucnn::milp::write_solution(out, model, std::span<const double>(res.x.data(), res.x.size()));
  }
  REQUIRE(generate(d / "ext.jsonl", 2, {"--external-dir", d / "x"}) == 0);
  const auto ext = lines(d / "ext.jsonl"), internal = lines(d / "internal.jsonl");
  REQUIRE(ext.size() == 3);
  for (int i = 1; i <= 2; ++i) {
    CHECK(ext[i]["status"] == "optimal");
    CHECK(ext[i]["input"] == internal[i]["input"]);
    const double a = ext[i]["solution"]["cost"], b = internal[i]["solution"]["cost"];
    CHECK(std::abs(a - b) <= 2e-6 * b);  // each within the default 1e-6 gap
  }
}
