// Apache License, Version 2.0, refer to LICENSE.txt

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"
#include "mixmc/io.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string output;
};

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "mixmc_cli_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

Run run(const fs::path& dir, const std::string& args) {
  const fs::path log = dir / "log.txt";
  const std::string cmd = std::string(MIXMC_CLI) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(log)};
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

// One user, 12 check-ins split over two ISO weeks.
std::string two_week_csv() {
  std::string csv = "userid,placeid,datetime,lat,lon,city,category\n";
  const char* cats[] = {"Food", "Home/Work", "Shops", "Travel", "Food", "Nightlife"};
  for (int week = 0; week < 2; ++week)
    for (int i = 0; i < 6; ++i)
      csv += "u1,p" + std::to_string(i) + ",2010-05-" + std::to_string(10 + 7 * week) + "T" +
             std::to_string(10 + i) + ":00:00,0,0,London," + cats[i] + "\n";
  return csv;
}

}  // namespace

TEST_CASE("ingest keeps both weeks of a single user") {
  const auto dir = scratch("ingest_two_weeks");
  write(dir / "in.csv", two_week_csv());
  const auto r = run(dir, "ingest -i " + (dir / "in.csv").string() + " -o " + (dir / "seqs.jsonl").string());
  REQUIRE(r.code == 0);
  std::ifstream in(dir / "seqs.jsonl");
  const auto data = mixmc::io::read_sequences(in);
  CHECK(data.size() == 2);
  const auto manifest = nlohmann::json::parse(slurp(dir / "seqs.manifest.json"));
  CHECK(manifest["command"] == "ingest");
  CHECK(r.output.find("Me") != std::string::npos);
}

TEST_CASE("ingest with every user below the threshold warns and succeeds") {
  const auto dir = scratch("ingest_sparse");
  std::string csv = "userid,placeid,datetime,lat,lon,city,category\n";
  for (int i = 0; i < 9; ++i) csv += "u1,p,2010-05-10T1" + std::to_string(i) + ":00:00,0,0,London,Food\n";
  write(dir / "in.csv", csv);
  const auto r = run(dir, "ingest -i " + (dir / "in.csv").string() + " -o " + (dir / "seqs.jsonl").string());
  CHECK(r.code == 0);
  CHECK(r.output.find("warning") != std::string::npos);
  std::ifstream in(dir / "seqs.jsonl");
  CHECK(mixmc::io::read_sequences(in).size() == 0);
}

TEST_CASE("ingest rejects empty and header-only files") {
  const auto dir = scratch("ingest_empty");
  write(dir / "empty.csv", "");
  write(dir / "header.csv", "userid,placeid,datetime,lat,lon,city,category\n");
  CHECK(run(dir, "ingest -i " + (dir / "empty.csv").string() + " -o " + (dir / "a.jsonl").string()).code == 2);
  const auto r = run(dir, "ingest -i " + (dir / "header.csv").string() + " -o " + (dir / "b.jsonl").string());
  CHECK(r.code == 2);
  CHECK(r.output.find("no records") != std::string::npos);
}

TEST_CASE("missing input file is an I/O error") {
  const auto dir = scratch("missing");
  CHECK(run(dir, "ingest -i " + (dir / "nope.csv").string() + " -o " + (dir / "a.jsonl").string()).code == 1);
}

TEST_CASE("fit with one cluster equals counting") {
  const auto dir = scratch("fit_k1");
  const auto sim = run(dir, "simulate -m " MIXMC_FIXTURES "/three_cluster_model.json -o " +
                                (dir / "seqs.jsonl").string() + " -n 200 --length 6 --seed 3");
  REQUIRE(sim.code == 0);
  REQUIRE(run(dir, "fit -i " + (dir / "seqs.jsonl").string() + " -o " + (dir / "m.json").string() +
                       " -K 1 --alpha 0")
              .code == 0);
  std::ifstream sin(dir / "seqs.jsonl");
  const auto data = mixmc::io::read_sequences(sin);
  std::ifstream min(dir / "m.json");
  const auto model = mixmc::io::read_model(min);
  std::vector<std::vector<mixmc::State>> seqs;
  for (const auto& s : data) seqs.push_back(s.states);
  const std::size_t c = data.categories().size();
  const auto expected = oracle::count_and_normalize(seqs, c);
  const auto& ch = model.cluster(0);
  for (std::size_t j = 0; j < c; ++j) {
    CHECK(std::abs(ch.initial()[j] - expected.f[j]) <= 1e-12);
    for (std::size_t k = 0; k < c; ++k) CHECK(std::abs(ch.transition()(j, k) - expected.t[j][k]) <= 1e-12);
  }
}

TEST_CASE("fit reports non-convergence and honours --strict") {
  const auto dir = scratch("fit_cap");
  REQUIRE(run(dir, "simulate -m " MIXMC_FIXTURES "/three_cluster_model.json -o " +
                       (dir / "seqs.jsonl").string() + " -n 300 --length 10 --seed 5")
              .code == 0);
  const std::string base = "fit -i " + (dir / "seqs.jsonl").string() + " -K 3 --epsilon 1e-12 --max-iters 5";
  REQUIRE(run(dir, base + " -o " + (dir / "m.json").string()).code == 0);
  std::ifstream trace(dir / "m.trace.csv");
  std::string line;
  int rows = -1;  // header
  while (std::getline(trace, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 5);
  const auto manifest = nlohmann::json::parse(slurp(dir / "m.manifest.json"));
  CHECK(manifest["results"]["converged"] == false);

  CHECK(run(dir, base + " --strict -o " + (dir / "s.json").string()).code == 3);
  CHECK(fs::exists(dir / "s.json"));
}

TEST_CASE("report rejects posteriors of the wrong shape") {
  const auto dir = scratch("report_shape");
  REQUIRE(run(dir, "simulate -m " MIXMC_FIXTURES "/three_cluster_model.json -o " +
                       (dir / "seqs.jsonl").string() + " -n 50 --length 4 --seed 1")
              .code == 0);
  write(dir / "post.csv", "g0,g1\n0.5,0.5\n");
  const auto r = run(dir, "report -m " MIXMC_FIXTURES "/three_cluster_model.json -s " +
                              (dir / "seqs.jsonl").string() + " -p " + (dir / "post.csv").string() +
                              " -o " + (dir / "r.json").string());
  CHECK(r.code == 2);
}

TEST_CASE("predict fails on a periodic cluster") {
  const auto dir = scratch("predict_periodic");
  write(dir / "m.json", R"({"categories":["a","b"],"K":1,"p":[1.0],
    "clusters":[{"f":[0.5,0.5],"T":[[0.0,1.0],[1.0,0.0]]}]})");
  write(dir / "seqs.jsonl",
        "{\"categories\":[\"a\",\"b\"]}\n"
        "{\"city\":\"c\",\"states\":[0,1,0],\"user\":\"u\",\"week\":\"2010-W01\"}\n");
  const auto r = run(dir, "predict -m " + (dir / "m.json").string() + " -s " + (dir / "seqs.jsonl").string() +
                              " -o " + (dir / "pred.json").string());
  CHECK(r.code == 4);
}

TEST_CASE("simulate is repeatable for a fixed seed") {
  const auto dir = scratch("simulate_seed");
  const std::string base = "simulate -m " MIXMC_FIXTURES "/three_cluster_model.json -n 100 --min-length 2 --max-length 9";
  REQUIRE(run(dir, base + " --seed 9 -o " + (dir / "a.jsonl").string()).code == 0);
  REQUIRE(run(dir, base + " --seed 9 -o " + (dir / "b.jsonl").string()).code == 0);
  REQUIRE(run(dir, base + " --seed 10 -o " + (dir / "c.jsonl").string()).code == 0);
  CHECK(slurp(dir / "a.jsonl") == slurp(dir / "b.jsonl"));
  CHECK(slurp(dir / "a.labels.txt") == slurp(dir / "b.labels.txt"));
  CHECK(slurp(dir / "a.jsonl") != slurp(dir / "c.jsonl"));
}
