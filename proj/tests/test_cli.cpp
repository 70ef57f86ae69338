#include <sstream>

#include "doctest.h"
#include "fwc/cli.hpp"
#include "support/tempdir.hpp"

using namespace fwc;

namespace {

struct Outcome {
  int code;
  std::string out, err;
};

Outcome call(std::vector<std::string> args) {
  std::ostringstream out, err;
  int code = main_with_args(args, out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

}  // namespace

TEST_CASE("cli: generate, then eval is deterministic") {
  testutil::TempDir dir;
  auto data = dir.file("d.csv").string();
  REQUIRE(call({"synth", "--n", "300", "--p", "2", "--seed", "1", "--out", data}).code == 0);
  auto cs = dir.file("c.csv").string();
  auto rep = dir.file("r.json").string();
  Outcome g = call({"generate", "--input", data, "--schema", "D=protected,Y=outcome", "--m", "12",
                    "--epsilon", "0.05", "--out-coreset", cs, "--out-report", rep});
  CHECK(g.code == 0);
  auto report = nlohmann::json::parse(testutil::slurp(rep));
  CHECK(report["report"]["success"] == true);
  CHECK(report["report"]["disparity_J"].get<double>() <= 0.05 + 1e-6);
  CHECK(report["coreset"]["hash"].get<std::string>().size() == 40);
  CHECK(lines(testutil::slurp(cs)).size() == 13);

  auto e1 = dir.file("e1.json").string(), e2 = dir.file("e2.json").string();
  std::vector<std::string> ev = {"eval", "--input", data, "--schema", "D=protected,Y=outcome", "--coreset", cs,
                                 "--out-report"};
  auto a1 = ev, a2 = ev;
  a1.push_back(e1);
  a2.push_back(e2);
  CHECK(call(a1).code == 0);
  CHECK(call(a2).code == 0);
  CHECK(testutil::slurp(e1) == testutil::slurp(e2));
  auto er = nlohmann::json::parse(testutil::slurp(e1));
  CHECK(er.dump().find("wall_seconds") == std::string::npos);
}

TEST_CASE("cli: errors exit 1 with one line") {
  testutil::TempDir dir;
  auto data = dir.file("d.csv").string();
  REQUIRE(call({"synth", "--n", "100", "--p", "2", "--out", data}).code == 0);

  Outcome small = call({"generate", "--input", data, "--schema", "D=protected,Y=outcome", "--m", "2",
                        "--out-coreset", dir.file("c.csv").string()});
  CHECK(small.code == 1);
  CHECK(small.err.find("minimum m=4") != std::string::npos);
  CHECK(lines(small.err).size() == 1);

  CHECK(call({"generate", "--input", dir.file("missing.csv").string(), "--schema", "D=protected,Y=outcome"}).code == 1);
  CHECK(call({"frobnicate"}).code == 1);
  CHECK(call({"generate", "--synthetic", "--n", "100", "--p", "2", "--metric", "l3"}).code == 1);

  // A coreset whose columns do not match the dataset.
  auto bad = dir.write("bad.csv", "D,x1,Y,weight\n0,1.0,0,1\n");
  Outcome mism = call({"eval", "--input", data, "--schema", "D=protected,Y=outcome", "--coreset", bad.string()});
  CHECK(mism.code == 1);
  CHECK(lines(mism.err).size() == 1);
}

TEST_CASE("cli: config file merges under explicit flags") {
  testutil::TempDir dir;
  auto cfg = dir.write("cfg.json", R"({"n": 200, "p": 2, "m": 10, "epsilon": 0.5, "synthetic": true})");
  auto rep = dir.file("r.json").string();
  Outcome o = call({"generate", "--config", cfg.string(), "--epsilon", "0.1", "--out-coreset",
                    dir.file("c.csv").string(), "--out-report", rep});
  CHECK(o.code == 0);
  auto j = nlohmann::json::parse(testutil::slurp(rep));
  CHECK(j["config"]["epsilon"] == 0.1);
  CHECK(j["config"]["m"] == 10);
  CHECK(j["config"]["synthetic"]["n"] == 200);
}

TEST_CASE("cli: bench CSV shape and baselines") {
  testutil::TempDir dir;
  auto out = dir.file("b.csv").string();
  Outcome o = call({"bench", "--sweep", "n", "--grid", "120,160,200", "--seeds", "10", "--p", "2", "--m", "10", "--baselines",
                    "uniform,kmeans", "--metrics", "--out", out});
  CHECK(o.code == 0);
  auto rows = lines(testutil::slurp(out));
  REQUIRE(!rows.empty());
  CHECK(rows[0] ==
        "row,method,sweep,value,n,m,p,seed,wall_seconds,iterations,converged,disparity_J,wasserstein,"
        "clustering_cost,auc,dd,tradeoff");
  std::size_t cells = 0, aggregates = 0, fwc_cells = 0, uniform_cells = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].rfind("cell,", 0) == 0) {
      ++cells;
      fwc_cells += rows[i].rfind("cell,fwc,", 0) == 0;
      uniform_cells += rows[i].rfind("cell,uniform,", 0) == 0;
    } else {
      ++aggregates;
    }
  }
  CHECK(fwc_cells == 30);
  CHECK(uniform_cells == 30);
  CHECK(cells == 90);
  CHECK(aggregates == 2 * 3 * 3);
}
