#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

const fs::path kRoot = fs::temp_directory_path() / "dynembed_cli_tests";

int run(const std::string& args) {
  const std::string cmd = std::string(DYNEMBED_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t line_count(const fs::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  std::string line;
  while (std::getline(in, line)) ++n;
  return n;
}

fs::path dataset() {
  static const fs::path path = [] {
    fs::remove_all(kRoot);
    fs::create_directories(kRoot);
    const int rc = run("synth --n 60 --tau 5 --anomalies 1 --seed 2 --out " + (kRoot / "syn").string());
    REQUIRE(rc == 0);
    return kRoot / "syn" / "edges.txt";
  }();
  return path;
}

}  // namespace

TEST_CASE("cli synth is deterministic") {
  const auto data = dataset();
  REQUIRE(run("synth --n 60 --tau 5 --anomalies 1 --seed 2 --out " + (kRoot / "syn2").string()) == 0);
  CHECK(slurp(data) == slurp(kRoot / "syn2" / "edges.txt"));
  CHECK(slurp(kRoot / "syn" / "membership.csv") == slurp(kRoot / "syn2" / "membership.csv"));
  CHECK(run("synth --p-in 1.5 --out " + (kRoot / "bad").string()) == 2);
}

TEST_CASE("cli embed writes embedding and manifest") {
  const auto data = dataset();
  const auto out = kRoot / "embed";
  REQUIRE(run("embed --data " + data.string() + " -d 8 --reference-mode --out " + out.string()) == 0);
  CHECK(line_count(out / "embedding.csv") == 61);
  std::ifstream header(out / "embedding.csv");
  std::string first;
  std::getline(header, first);
  CHECK(std::count(first.begin(), first.end(), ',') == 8);
  const auto manifest = nlohmann::json::parse(slurp(out / "manifest.json"));
  CHECK(manifest["config"]["d"] == 8);
  CHECK(manifest["config"]["method"] == "dynacpd");
  CHECK(manifest["config"].contains("rel_tol"));
  CHECK(manifest["config"].contains("post_weights"));
  CHECK(manifest["embedding"].contains("sigma"));

  const auto again = kRoot / "embed2";
  REQUIRE(run("embed --data " + data.string() + " -d 8 --reference-mode --out " + again.string()) == 0);
  CHECK(slurp(out / "embedding.csv") == slurp(again / "embedding.csv"));
}

TEST_CASE("cli config file and overrides") {
  const auto data = dataset();
  const auto cfg = kRoot / "run.cfg";
  {
    std::ofstream c(cfg);
    c << "# flat config\nmethod = adj_last\nd = 4\nreference_mode = true\n";
  }
  const auto out = kRoot / "cfg";
  REQUIRE(run("embed --config " + cfg.string() + " --data " + data.string() + " -d 3 --out " + out.string()) == 0);
  const auto manifest = nlohmann::json::parse(slurp(out / "manifest.json"));
  CHECK(manifest["config"]["method"] == "adj_last");
  CHECK(manifest["config"]["d"] == 3);
  CHECK(manifest["config"]["reference_mode"] == true);
}

TEST_CASE("cli linkpred report") {
  const auto data = dataset();
  const auto out = kRoot / "lp";
  REQUIRE(run("linkpred --data " + data.string() + " -d 4 --reference-mode --scores --out " + out.string()) == 0);
  const auto report = nlohmann::json::parse(slurp(out / "report.json"));
  REQUIRE(report.is_array());
  CHECK(report.size() == 2);
  for (const auto& r : report) {
    for (const char* key : {"method", "metric", "d", "AP", "AUC", "seed", "timing_ms"}) CHECK(r.contains(key));
    CHECK(r["timing_ms"] == 0.0);
    CHECK(r["AUC"].get<double>() >= 0.0);
    CHECK(r["AUC"].get<double>() <= 1.0);
  }
  std::ifstream scores(out / "scores_l2.csv");
  std::string header;
  std::getline(scores, header);
  CHECK(header == "i,j,separation,probability,label");
  const auto again = kRoot / "lp2";
  REQUIRE(run("linkpred --data " + data.string() + " -d 4 --reference-mode --scores --out " + again.string()) == 0);
  CHECK(slurp(out / "report.json") == slurp(again / "report.json"));
}

TEST_CASE("cli cluster and anomaly") {
  const auto data = dataset();
  const auto out = kRoot / "cl";
  REQUIRE(run("cluster --data " + data.string() + " -d 4 --k 1 --out " + out.string()) == 0);
  CHECK(line_count(out / "clusters.csv") == 61);
  const auto an = kRoot / "an";
  REQUIRE(run("anomaly --embedding " + (out / "embedding.csv").string() + " --k 2 --out " + an.string()) == 0);
  std::ifstream in(an / "anomalies.csv");
  std::string line;
  std::getline(in, line);
  CHECK(line == "node,cluster,score,anomalous");
}

TEST_CASE("cli error exits") {
  const auto data = dataset();
  CHECK(run("embed --data " + (kRoot / "missing.txt").string() + " --out " + (kRoot / "x").string()) == 3);
  CHECK(run("embed --data " + data.string() + " --method nope --out " + (kRoot / "x").string()) == 2);
  CHECK(run("embed --data " + data.string() + " --adjacency katz --katz-omega 100 --out " + (kRoot / "x").string()) == 2);
  CHECK(run("embed --no-such-flag") == 2);
  const auto one = kRoot / "one.txt";
  {
    std::ofstream o(one);
    o << "1 a b\n1 b c\n";
  }
  CHECK(run("linkpred --data " + one.string() + " --out " + (kRoot / "x").string()) == 2);
  CHECK(run("embed --data " + one.string() + " --method adj_last -d 1 --out " + (kRoot / "tau1").string()) == 0);
  const auto bad = kRoot / "bad.txt";
  {
    std::ofstream o(bad);
    o << "2 a b\n1 a b\n";
  }
  CHECK(run("embed --data " + bad.string() + " --out " + (kRoot / "x").string()) == 3);
}
