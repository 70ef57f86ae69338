#include "fwc/cli.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"

#include "fwc/clustering.hpp"
#include "fwc/errors.hpp"
#include "fwc/eval.hpp"
#include "fwc/parallel.hpp"
#include "fwc/report.hpp"

namespace fwc {

using nlohmann::json;

namespace {

const std::vector<std::string> kBaselines = {"uniform", "kmeans", "kmedoids", "unconstrained"};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::ostream& open_or(const std::string& path, std::ofstream& file, std::ostream& fallback) {
  if (path.empty()) return fallback;
  file.open(path, std::ios::binary);
  if (!file) throw IoError("cannot write '" + path + "'");
  return file;
}

struct LoadedData {
  Dataset dataset;
  json source;
};

LoadedData load_data(const RunConfig& c) {
  LoadedData out;
  if (c.synthetic) {
    SyntheticSpec spec = c.synthetic_spec();
    out.dataset = generate_synthetic(spec);
    std::ostringstream desc;
    desc << "synthetic n=" << spec.n << " p=" << spec.p << " seed=" << spec.seed
         << " noise_sd=" << spec.noise_sd;
    out.source = {{"kind", "synthetic"}, {"spec", desc.str()}, {"hash", blob_hash(desc.str())}};
  } else {
    out.dataset = load_csv(c.input, parse_schema(c.schema));
    out.source = {{"kind", "csv"}, {"path", c.input}, {"hash", file_blob_hash(c.input)}};
  }
  return out;
}

json allocation_json(const ComboAllocation& a, const Dataset& ds) {
  json arr = json::array();
  for (const auto& [combo, count] : a.counts)
    arr.push_back({{"d", ds.d_levels[static_cast<std::size_t>(combo.d)]},
                   {"y", ds.y_levels[static_cast<std::size_t>(combo.y)]},
                   {"count", count}});
  return arr;
}

int generate_impl(const RunConfig& c, std::ostream& out, bool constrained) {
  c.validate();
  LoadedData data = load_data(c);
  MMConfig mm = c.mm_config();
  std::optional<FairnessConfig> fairness;
  if (constrained) fairness = c.fairness(data.dataset);
  MMResult res = run(data.dataset, c.m, fairness, mm);

  write_coreset_csv(res.coreset, data.dataset, c.out_coreset);
  json doc{{"version", kVersion},
           {"command", c.command},
           {"config", c.to_json()},
           {"mm_config", to_json(mm)},
           {"input", data.source},
           {"allocation", allocation_json(res.allocation, data.dataset)},
           {"coreset", {{"path", c.out_coreset}, {"hash", file_blob_hash(c.out_coreset)}}},
           {"report", to_json(res.report)}};
  if (c.out_report.empty())
    out << doc.dump(2) << '\n';
  else
    write_json(doc, c.out_report);
  return res.report.success() ? 0 : 2;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

// JSON config entry -> command-line tokens.
void append_config_args(const json& cfg, std::vector<std::string>& args) {
  if (!cfg.is_object()) throw InvalidSpecError("config file must hold a JSON object");
  for (const auto& [key, value] : cfg.items()) {
    std::string flag = "--" + key;
    for (char& ch : flag)
      if (ch == '_') ch = '-';
    if (value.is_boolean()) {
      if (value.get<bool>()) args.push_back(flag);
    } else if (value.is_array()) {
      std::string joined;
      for (const auto& v : value) {
        if (!joined.empty()) joined += ',';
        joined += v.is_string() ? v.get<std::string>() : v.dump();
      }
      args.push_back(flag);
      args.push_back(joined);
    } else if (value.is_string()) {
      args.push_back(flag);
      args.push_back(value.get<std::string>());
    } else if (value.is_number()) {
      args.push_back(flag);
      args.push_back(value.dump());
    } else {
      throw InvalidSpecError("config key '" + key + "' has an unsupported value");
    }
  }
}

Coreset kmeans_baseline(const Dataset& ds, const RunConfig& c, std::uint64_t seed, bool medoid) {
  LloydConfig lc;
  lc.k = c.m;
  lc.seed = seed;
  if (medoid) {
    lc.metric = {parse_metric(c.metric), c.cat_penalty};
    lc.update = UpdateRule::Medoid;
  } else {
    lc.metric = {MetricKind::SqL2, c.cat_penalty};
    lc.update = UpdateRule::Mean;
  }
  return coreset_from_clusters(ds, lloyd(ds, lc));
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double std_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  double mu = mean_of(v), s = 0.0;
  for (double x : v) s += (x - mu) * (x - mu);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

std::string num(double v) {
  std::ostringstream ss;
  ss << std::setprecision(10) << v;
  return ss.str();
}

}  // namespace

void RunConfig::validate() const {
  if (!synthetic && input.empty()) throw InvalidSpecError("need --input or --synthetic");
  if (synthetic && n < 2) throw InvalidSpecError("--n must be at least 2");
  if (synthetic && p < 2) throw InvalidSpecError("--p must be at least 2");
  if (m < 1) throw InvalidSpecError("--m must be at least 1");
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) throw InvalidSpecError("--epsilon must be >= 0");
  if (!(cat_penalty >= 0.0)) throw InvalidSpecError("--cat-penalty must be >= 0");
  if (!(noise_sd >= 0.0)) throw InvalidSpecError("--noise-sd must be >= 0");
  if (seeds < 1) throw InvalidSpecError("--seeds must be at least 1");
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw InvalidSpecError("--train-fraction must lie in (0, 1)");
  if (sweep != "n" && sweep != "m" && sweep != "p")
    throw InvalidSpecError("--sweep must be one of n, m, p");
  for (double g : grid)
    if (!(g >= 1.0) || g != std::floor(g))
      throw InvalidSpecError("--grid values must be positive integers");
  for (const auto& b : baselines)
    if (std::find(kBaselines.begin(), kBaselines.end(), b) == kBaselines.end())
      throw InvalidSpecError("unknown baseline '" + b + "'");
  mm_config().validate();
}

std::string RunConfig::resolved_update() const {
  if (!update.empty()) return to_string(parse_update(update));
  return parse_metric(metric) == MetricKind::SqL2 ? "mean" : "median";
}

MMConfig RunConfig::mm_config() const {
  MMConfig mm;
  mm.metric = {parse_metric(metric), cat_penalty};
  mm.update = parse_update(resolved_update());
  mm.max_outer_iters = max_outer_iters;
  mm.tol_objective = tol_objective;
  mm.tol_x = tol_x;
  mm.seed = seed;
  mm.inner.tol = inner_tol;
  mm.inner.max_cuts = max_cuts;
  mm.reseed_empty = reseed_empty;
  return mm;
}

FairnessConfig RunConfig::fairness(const Dataset& dataset) const {
  FairnessConfig f;
  f.epsilon = epsilon;
  if (target.empty()) {
    f.target = TargetDistribution::empirical(dataset);
    return f;
  }
  if (target.size() != dataset.num_y())
    throw InvalidSpecError("--target has " + std::to_string(target.size()) +
                           " probabilities, the outcome has " + std::to_string(dataset.num_y()) +
                           " levels");
  double sum = 0.0;
  for (double v : target) {
    if (!(v >= 0.0)) throw InvalidSpecError("--target probabilities must be nonnegative");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-6) throw InvalidSpecError("--target probabilities must sum to 1");
  f.target.probs = target;
  for (double& v : f.target.probs) v /= sum;
  return f;
}

SyntheticSpec RunConfig::synthetic_spec() const {
  SyntheticSpec s;
  s.n = n;
  s.p = p;
  s.seed = seed;
  s.noise_sd = noise_sd;
  return s;
}

json RunConfig::to_json() const {
  json j{{"command", command},
         {"m", m},
         {"epsilon", epsilon},
         {"metric", metric},
         {"update", resolved_update()},
         {"cat_penalty", cat_penalty},
         {"seed", seed},
         {"max_outer_iters", max_outer_iters},
         {"tol_objective", tol_objective},
         {"tol_x", tol_x},
         {"inner_tol", inner_tol},
         {"max_cuts", max_cuts},
         {"reseed_empty", reseed_empty},
         {"target", target.empty() ? json("empirical") : json(target)},
         {"threads", worker_threads()}};
  if (synthetic)
    j["synthetic"] = {{"n", n}, {"p", p}, {"noise_sd", noise_sd}};
  else
    j["input"] = {{"path", input}, {"schema", schema}};
  if (command == "eval") {
    j["coreset"] = coreset;
    j["holdout"] = holdout.empty() ? json("split") : json(holdout);
    j["train_fraction"] = train_fraction;
  }
  if (command == "bench")
    j["bench"] = {{"sweep", sweep}, {"grid", grid}, {"seeds", seeds},
                  {"baselines", baselines}, {"metrics", metrics}};
  return j;
}

int cmd_generate(const RunConfig& c, std::ostream& out) { return generate_impl(c, out, true); }

int cmd_cluster(const RunConfig& c, std::ostream& out) { return generate_impl(c, out, false); }

int cmd_eval(const RunConfig& c, std::ostream& out) {
  c.validate();
  if (c.coreset.empty()) throw InvalidSpecError("eval needs --coreset");
  LoadedData data = load_data(c);
  Coreset cs = load_coreset_csv(c.coreset, data.dataset);
  if (cs.size() == 0) throw EmptyDatasetError("coreset '" + c.coreset + "' has no rows");

  Dataset holdout;
  json holdout_desc;
  if (!c.holdout.empty()) {
    holdout = load_csv_like(c.holdout, data.dataset);
    holdout_desc = {{"kind", "csv"}, {"path", c.holdout}, {"hash", file_blob_hash(c.holdout)}};
  } else {
    auto [train, test] = train_test_split(data.dataset.n(), c.train_fraction, c.seed);
    holdout = subset(data.dataset, test);
    holdout_desc = {{"kind", "split"}, {"train_fraction", c.train_fraction}, {"seed", c.seed},
                    {"rows", test.size()}};
  }

  EvalOptions opt;
  opt.metric = {parse_metric(c.metric), c.cat_penalty};
  EvalReport rep =
      evaluate_coreset(data.dataset, holdout, cs, TargetDistribution::empirical(data.dataset), opt);
  json doc{{"version", kVersion},
           {"command", "eval"},
           {"config", c.to_json()},
           {"input", data.source},
           {"coreset", {{"path", c.coreset}, {"hash", file_blob_hash(c.coreset)}}},
           {"holdout", holdout_desc},
           {"ground_cost", {{"metric", c.metric}, {"cat_penalty_per_mismatch", c.cat_penalty}}},
           {"eval", to_json(rep)}};
  std::ofstream file;
  open_or(c.out_report, file, out) << doc.dump(2) << '\n';
  return 0;
}

int cmd_synth(const RunConfig& c, std::ostream& out) {
  SyntheticSpec spec = c.synthetic_spec();
  Dataset ds = generate_synthetic(spec);
  if (c.out.empty()) throw InvalidSpecError("synth needs --out");
  write_dataset_csv(ds, c.out);
  out << "wrote " << ds.n() << " rows to " << c.out << '\n';
  return 0;
}

std::vector<BenchRow> run_bench(const RunConfig& base) {
  RunConfig c = base;
  c.synthetic = true;
  c.validate();
  std::vector<double> grid = c.grid;
  if (grid.empty()) {
    if (c.sweep == "n") grid = {2500, 5000, 10000};
    if (c.sweep == "m") grid = {125, 250, 500};
    if (c.sweep == "p") grid = {10, 25, 50};
  }

  std::vector<BenchRow> rows;
  for (double value : grid) {
    RunConfig cell = c;
    auto v = static_cast<std::size_t>(value);
    if (c.sweep == "n") cell.n = v;
    if (c.sweep == "m") cell.m = v;
    if (c.sweep == "p") cell.p = v;
    cell.validate();
    for (int s = 0; s < c.seeds; ++s) {
      cell.seed = c.seed + static_cast<std::uint64_t>(s);
      const Dataset full = generate_synthetic(cell.synthetic_spec());
      Dataset train = full, test;
      if (c.metrics) {
        auto [tr, te] = train_test_split(full.n(), c.train_fraction, cell.seed);
        train = subset(full, tr);
        test = subset(full, te);
      }
      const TargetDistribution target = cell.fairness(train).target;
      EvalOptions opt;
      opt.metric = {parse_metric(c.metric), c.cat_penalty};

      auto emit = [&](const std::string& method, const Coreset& cs, double wall, int iters,
                      bool converged) {
        BenchRow row;
        row.method = method;
        row.sweep = c.sweep;
        row.value = value;
        row.n = cell.n;
        row.m = cell.m;
        row.p = cell.p;
        row.seed = cell.seed;
        row.wall_seconds = wall;
        row.iterations = iters;
        row.converged = converged;
        row.disparity_J = disparity_J(cs, target).value;
        if (c.metrics) {
          try {
            row.eval = evaluate_coreset(train, test, cs, target, opt);
          } catch (const DegenerateModelError&) {
            // A coreset with one outcome level cannot train the classifier.
          } catch (const DegenerateGroupError&) {
          }
        }
        rows.push_back(std::move(row));
      };

      MMConfig mm = cell.mm_config();
      MMResult res = run(train, cell.m, cell.fairness(train), mm);
      emit("fwc", res.coreset, res.report.wall_seconds, res.report.iterations,
           res.report.success());

      for (const auto& b : c.baselines) {
        auto t0 = std::chrono::steady_clock::now();
        if (b == "unconstrained") {
          MMResult u = run(train, cell.m, std::nullopt, mm);
          emit(b, u.coreset, u.report.wall_seconds, u.report.iterations, u.report.success());
        } else if (b == "uniform") {
          Coreset cs = uniform_subsample(train, cell.m, cell.seed);
          emit(b, cs, seconds_since(t0), 0, true);
        } else {
          Coreset cs = kmeans_baseline(train, cell, cell.seed, b == "kmedoids");
          emit(b, cs, seconds_since(t0), 0, true);
        }
      }
    }
  }
  return rows;
}

void write_bench_csv(const std::vector<BenchRow>& rows, std::ostream& out) {
  out << "row,method,sweep,value,n,m,p,seed,wall_seconds,iterations,converged,disparity_J,"
         "wasserstein,clustering_cost,auc,dd,tradeoff\n";
  auto metrics = [](const std::optional<EvalReport>& e) -> std::vector<double> {
    if (!e) return {};
    return {e->wasserstein, e->clustering_cost, e->downstream_auc, e->downstream_dd, e->tradeoff};
  };
  for (const auto& r : rows) {
    out << "cell," << r.method << ',' << r.sweep << ',' << num(r.value) << ',' << r.n << ','
        << r.m << ',' << r.p << ',' << r.seed << ',' << num(r.wall_seconds) << ','
        << r.iterations << ',' << (r.converged ? 1 : 0) << ',' << num(r.disparity_J);
    auto mv = metrics(r.eval);
    for (std::size_t k = 0; k < 5; ++k) out << ',' << (k < mv.size() ? num(mv[k]) : "");
    out << '\n';
  }

  // Aggregates in first-appearance order of (method, value).
  std::vector<std::pair<std::string, double>> keys;
  for (const auto& r : rows)
    if (std::find(keys.begin(), keys.end(), std::make_pair(r.method, r.value)) == keys.end())
      keys.emplace_back(r.method, r.value);
  for (const auto& [method, value] : keys) {
    std::vector<std::vector<double>> cols(10);
    const BenchRow* first = nullptr;
    for (const auto& r : rows) {
      if (r.method != method || r.value != value) continue;
      if (!first) first = &r;
      cols[0].push_back(r.wall_seconds);
      cols[1].push_back(r.iterations);
      cols[2].push_back(r.converged ? 1.0 : 0.0);
      cols[3].push_back(r.disparity_J);
      auto mv = metrics(r.eval);
      for (std::size_t k = 0; k < mv.size(); ++k) cols[4 + k].push_back(mv[k]);
    }
    for (int agg = 0; agg < 2; ++agg) {
      out << (agg == 0 ? "mean," : "std,") << method << ',' << first->sweep << ',' << num(value)
          << ',' << first->n << ',' << first->m << ',' << first->p << ",";
      for (std::size_t k = 0; k < 9; ++k) {
        out << ',';
        if (!cols[k].empty()) out << num(agg == 0 ? mean_of(cols[k]) : std_of(cols[k]));
      }
      out << '\n';
    }
  }
}

int cmd_bench(const RunConfig& c, std::ostream& out) {
  std::vector<BenchRow> rows = run_bench(c);
  std::ofstream file;
  write_bench_csv(rows, open_or(c.out, file, out));
  for (const auto& r : rows)
    if (!r.converged) return 2;
  return 0;
}

int main_with_args(const std::vector<std::string>& raw_args, std::ostream& out,
                   std::ostream& err) {
  try {
    // A --config file contributes flags placed ahead of the real ones; with
    // take-last semantics the explicit flags win.
    std::vector<std::string> args;
    std::vector<std::string> rest;
    std::string config_path;
    for (std::size_t i = 0; i < raw_args.size(); ++i) {
      if (raw_args[i] == "--config" && i + 1 < raw_args.size()) {
        config_path = raw_args[++i];
      } else if (raw_args[i].rfind("--config=", 0) == 0) {
        config_path = raw_args[i].substr(9);
      } else {
        rest.push_back(raw_args[i]);
      }
    }
    if (!rest.empty()) args.push_back(rest.front());
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) throw IoError("cannot read config '" + config_path + "'");
      json cfg;
      try {
        cfg = json::parse(in);
      } catch (const json::exception& e) {
        throw ParseError("config '" + config_path + "': " + e.what());
      }
      append_config_args(cfg, args);
    }
    for (std::size_t i = 1; i < rest.size(); ++i) args.push_back(rest[i]);

    RunConfig c;
    c.config_path = config_path;
    std::string grid_text, baselines_text, target_text;

    CLI::App app{"Fair Wasserstein coresets"};
    app.require_subcommand(1);
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

    auto data_opts = [&](CLI::App* sub) {
      sub->add_option("--input", c.input, "dataset CSV");
      sub->add_option("--schema", c.schema, "column roles, e.g. sex=protected,income=outcome");
      sub->add_flag("--synthetic", c.synthetic, "use the synthetic generator");
      sub->add_option("--n", c.n, "synthetic record count");
      sub->add_option("--p", c.p, "synthetic feature count");
      sub->add_option("--noise-sd", c.noise_sd, "synthetic label noise");
      sub->add_option("--seed", c.seed, "seed");
      sub->add_option("--metric", c.metric, "l1 or sql2");
      sub->add_option("--cat-penalty", c.cat_penalty, "cost per mismatched label");
    };
    auto solver_opts = [&](CLI::App* sub) {
      sub->add_option("--m", c.m, "coreset size");
      sub->add_option("--epsilon", c.epsilon, "fairness tolerance");
      sub->add_option("--update", c.update, "mean, median or medoid");
      sub->add_option("--max-outer-iters", c.max_outer_iters);
      sub->add_option("--tol-objective", c.tol_objective);
      sub->add_option("--tol-x", c.tol_x);
      sub->add_option("--inner-tol", c.inner_tol);
      sub->add_option("--max-cuts", c.max_cuts);
      sub->add_option("--target", target_text, "outcome probabilities in level order");
      sub->add_flag("--reseed-empty", c.reseed_empty, "move zero-weight points");
    };

    CLI::App* gen = app.add_subcommand("generate", "build a fair coreset");
    CLI::App* clu = app.add_subcommand("cluster", "build an unconstrained coreset");
    for (CLI::App* sub : {gen, clu}) {
      data_opts(sub);
      solver_opts(sub);
      sub->add_option("--out-coreset", c.out_coreset, "coreset CSV path");
      sub->add_option("--out-report", c.out_report, "report JSON path (default stdout)");
    }

    CLI::App* ev = app.add_subcommand("eval", "evaluate a coreset against a dataset");
    data_opts(ev);
    ev->add_option("--coreset", c.coreset, "coreset CSV")->required();
    ev->add_option("--holdout", c.holdout, "holdout CSV (default: seeded split of the input)");
    ev->add_option("--train-fraction", c.train_fraction);
    ev->add_option("--out-report", c.out_report, "report JSON path (default stdout)");
    // Accepted so that one config file can drive generate and eval.
    ev->add_option("--m", c.m);
    ev->add_option("--epsilon", c.epsilon);

    CLI::App* syn = app.add_subcommand("synth", "write a synthetic dataset");
    syn->add_option("--n", c.n);
    syn->add_option("--p", c.p);
    syn->add_option("--noise-sd", c.noise_sd);
    syn->add_option("--seed", c.seed);
    syn->add_option("--out", c.out, "CSV path")->required();

    CLI::App* bench = app.add_subcommand("bench", "runtime and metric sweeps on synthetic data");
    bench->add_option("--n", c.n);
    bench->add_option("--p", c.p);
    bench->add_option("--noise-sd", c.noise_sd);
    bench->add_option("--seed", c.seed, "first seed");
    bench->add_option("--metric", c.metric);
    bench->add_option("--cat-penalty", c.cat_penalty);
    solver_opts(bench);
    bench->add_option("--sweep", c.sweep, "n, m or p");
    bench->add_option("--grid", grid_text, "comma-separated values");
    bench->add_option("--seeds", c.seeds, "seeds per cell");
    bench->add_option("--baselines", baselines_text, "uniform,kmeans,kmedoids,unconstrained");
    bench->add_flag("--metrics", c.metrics, "evaluate W, clustering cost and downstream metrics");
    bench->add_option("--train-fraction", c.train_fraction);
    bench->add_option("--out", c.out, "CSV path (default stdout)");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
      app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
      out << app.help();
      return 0;
    } catch (const CLI::ParseError& e) {
      err << "error: " << e.what() << '\n';
      return 1;
    }

    for (const auto& g : split_list(grid_text)) {
      try {
        c.grid.push_back(std::stod(g));
      } catch (...) {
        throw InvalidSpecError("--grid value '" + g + "' is not a number");
      }
    }
    c.baselines = split_list(baselines_text);
    for (const auto& t : split_list(target_text)) {
      try {
        c.target.push_back(std::stod(t));
      } catch (...) {
        throw InvalidSpecError("--target value '" + t + "' is not a number");
      }
    }

    CLI::App* chosen = app.get_subcommands().front();
    c.command = chosen->get_name();
    if (c.command == "generate") return cmd_generate(c, out);
    if (c.command == "cluster") return cmd_cluster(c, out);
    if (c.command == "eval") return cmd_eval(c, out);
    if (c.command == "synth") return cmd_synth(c, out);
    return cmd_bench(c, out);
  } catch (const std::exception& e) {
    std::string msg = e.what();
    for (char& ch : msg)
      if (ch == '\n') ch = ' ';
    err << "error: " << msg << '\n';
    return 1;
  }
}

}  // namespace fwc
