#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "fwc/eval.hpp"
#include "fwc/mm_driver.hpp"

namespace fwc {

struct RunConfig {
  std::string command;

  // Data: a CSV with a schema, or the synthetic generator.
  std::string input;
  std::string schema;
  bool synthetic = false;
  std::size_t n = 5000;
  std::size_t p = 25;
  double noise_sd = 1.0;

  std::size_t m = 250;
  double epsilon = 0.05;
  std::vector<double> target;  // outcome probabilities; empty: empirical
  std::string metric = "l1";
  std::string update;  // empty: median for l1, mean for sql2
  double cat_penalty = 1.0;
  std::uint64_t seed = 0;

  int max_outer_iters = 300;
  double tol_objective = 1e-8;
  double tol_x = 1e-9;
  double inner_tol = 1e-7;
  int max_cuts = 500;
  bool reseed_empty = false;

  std::string out_coreset = "coreset.csv";
  std::string out_report;  // empty: stdout
  std::string out;         // synth / bench output, empty: stdout

  // eval
  std::string coreset;
  std::string holdout;
  double train_fraction = 0.75;

  // bench
  std::string sweep = "n";
  std::vector<double> grid;
  int seeds = 10;
  std::vector<std::string> baselines;
  bool metrics = false;

  std::string config_path;

  // Throws InvalidSpecError.
  void validate() const;
  std::string resolved_update() const;
  MMConfig mm_config() const;
  SyntheticSpec synthetic_spec() const;
  // Empty config target means the empirical marginal of `dataset`.
  FairnessConfig fairness(const Dataset& dataset) const;
  nlohmann::json to_json() const;
};

struct BenchRow {
  std::string method;  // fwc, uniform, kmeans, kmedoids, unconstrained
  std::string sweep;
  double value = 0.0;
  std::size_t n = 0, m = 0, p = 0;
  std::uint64_t seed = 0;
  double wall_seconds = 0.0;
  int iterations = 0;
  bool converged = true;
  double disparity_J = 0.0;
  std::optional<EvalReport> eval;
};

// Runs every (grid value, seed, method) cell sequentially.
std::vector<BenchRow> run_bench(const RunConfig& config);
// Cell rows followed by mean and std rows per (method, grid value).
void write_bench_csv(const std::vector<BenchRow>& rows, std::ostream& out);

int cmd_generate(const RunConfig& config, std::ostream& out);
int cmd_cluster(const RunConfig& config, std::ostream& out);
int cmd_eval(const RunConfig& config, std::ostream& out);
int cmd_synth(const RunConfig& config, std::ostream& out);
int cmd_bench(const RunConfig& config, std::ostream& out);

// args excludes the program name. Library errors become exit 1 with one line
// on err.
int main_with_args(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fwc
