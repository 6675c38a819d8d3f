// greennas command-line driver. Every subcommand creates a run directory
// <out>/<UTC timestamp>-seed<seed>/ holding its outputs and manifest.json.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "greennas/greennas.hpp"
#include "greennas/ingest/https_transport.hpp"

namespace fs = std::filesystem;
using namespace greennas;

namespace {

struct Options {
  std::string data = "synthetic";
  std::string cities_path;
  std::uint64_t seed = 42;
  std::string out = "runs";
  std::string cache_dir;
  std::size_t hours = 8760;
  std::string start = "2019-01-01", end = "2024-12-31";
  std::size_t max_sources = 0, max_targets = 0;
  std::size_t workers = 1;

  // training
  std::string arch = "gru128x2";
  std::string model_path;
  int epochs = 50, patience = 10;
  std::size_t batch = 256;
  double lr = 1e-3;

  // search
  std::size_t pop = 20, gens = 10;
  double subsample = 0.1;

  // transfer
  std::vector<double> fractions{0.01, 0.10, 0.50, 1.00};
  std::size_t trials = 10;
  double finetune_lr = 1e-3;
  std::size_t frozen = 0;

  // robustness / bench
  double alpha = 0.05;
  std::size_t repeats = 5;
  std::size_t horizon = 12;
  std::size_t stride = 1;
  std::vector<std::string> models{"gru128x2", "cnn128", "cnn32", "lstm64x2"};
  std::size_t warmup = 100, iters = 1000;
};

nn::TrainConfig train_config(const Options& o) {
  nn::TrainConfig c;
  c.max_epochs = o.epochs;
  c.patience = o.patience;
  c.batch_size = o.batch;
  c.learning_rate = o.lr;
  c.seed = o.seed;
  return c;
}

ClimateProfile profile_for(const CityRecord& c) {
  if (!c.climate_zone.empty() && c.climate_zone[0] == 'A') return ClimateProfile::Tropical;
  if (!c.climate_zone.empty() && c.climate_zone[0] == 'B') return ClimateProfile::Arid;
  return ClimateProfile::Temperate;
}

class Run {
 public:
  Run(const Options& o, std::string command, int argc, char** argv) : opt_(o) {
    dir_ = fs::path(o.out) / (report::utc_stamp() + "-seed" + std::to_string(o.seed));
    for (int n = 1; fs::exists(dir_); ++n)
      dir_ = fs::path(o.out) / (report::utc_stamp() + "-seed" + std::to_string(o.seed) + "-" + std::to_string(n));
    fs::create_directories(dir_);
    manifest_.command = std::move(command);
    manifest_.argv.assign(argv, argv + argc);
    manifest_.seed = o.seed;
    manifest_.data_source = o.data;
    manifest_.config = options_json();
    save();
  }

  const fs::path& dir() const { return dir_; }
  report::RunManifest& manifest() { return manifest_; }

  fs::path output(const std::string& key, const std::string& file) {
    manifest_.outputs[key] = (dir_ / file).string();
    return dir_ / file;
  }

  void save() const { manifest_.write(dir_ / "manifest.json"); }

  void finish(const std::string& status, const std::string& error = {}) {
    manifest_.status = status;
    manifest_.error = error;
    save();
  }

 private:
  nlohmann::json options_json() const {
    const auto& o = opt_;
    return {{"data", o.data},         {"cities", o.cities_path},   {"hours", o.hours},
            {"start", o.start},       {"end", o.end},              {"max_sources", o.max_sources},
            {"max_targets", o.max_targets}, {"workers", o.workers}, {"arch", o.arch},
            {"model", o.model_path},  {"train", report::to_json(train_config(o))},
            {"pop", o.pop},           {"gens", o.gens},            {"subsample", o.subsample},
            {"fractions", o.fractions}, {"trials", o.trials},      {"finetune_lr", o.finetune_lr},
            {"frozen_layers", o.frozen}, {"alpha", o.alpha},       {"repeats", o.repeats},
            {"horizon", o.horizon},   {"stride", o.stride},        {"models", o.models},
            {"warmup", o.warmup},     {"iters", o.iters}};
  }

  Options opt_;
  fs::path dir_;
  report::RunManifest manifest_;
};

struct Data {
  std::vector<HourlySeries> sources, targets;
};

std::vector<CityRecord> city_list(const Options& o) {
  auto cities = o.cities_path.empty() ? default_cities() : load_cities(o.cities_path);
  validate_city_list(cities);
  return cities;
}

fs::path cache_dir(const Options& o) {
  if (!o.cache_dir.empty()) return o.cache_dir;
  if (const char* env = std::getenv("GREENNAS_CACHE_DIR"); env && *env) return env;
  if (const char* home = std::getenv("HOME"); home && *home) return fs::path(home) / ".cache" / "greennas";
  return ".greennas-cache";
}

Data load_data(const Options& o, Run& run) {
  auto cities = city_list(o);
  Data d;
  std::size_t ns = 0, nt = 0;
  std::optional<HttpsTransport> transport;
  std::optional<OpenMeteoArchive> archive;
  fs::path cache;
  if (o.data == "openmeteo") {
    cache = cache_dir(o);
    fs::create_directories(cache);
    transport.emplace();
    archive.emplace(*transport);
  } else if (o.data != "synthetic") {
    throw PreconditionError("--data must be 'synthetic' or 'openmeteo', got '" + o.data + "'");
  }
  for (const auto& c : cities) {
    const bool src = c.role == CityRole::Source;
    if (src && o.max_sources && ns >= o.max_sources) continue;
    if (!src && o.max_targets && nt >= o.max_targets) continue;
    HourlySeries s;
    if (archive) {
      std::clog << "[greennas] loading " << c.name << '\n';
      s = impute_short_gaps(cache_get_or_fetch(*archive, c, parse_date(o.start), parse_date(o.end), cache));
    } else {
      s = generate_synthetic_city(o.seed ^ nas::stable_hash(c.name), o.hours, profile_for(c));
    }
    s.city = c;
    (src ? d.sources : d.targets).push_back(std::move(s));
    ++(src ? ns : nt);
  }
  std::vector<HourlySeries> all = d.sources;
  all.insert(all.end(), d.targets.begin(), d.targets.end());
  run.manifest().data_fingerprint = report::data_fingerprint(all);
  run.manifest().config["source_cities"] = d.sources.size();
  run.manifest().config["target_cities"] = d.targets.size();
  run.save();
  return d;
}

struct Pools {
  std::vector<CityPartition> parts;
  WindowedDataset train, val, test;
  std::vector<TargetCity> targets;
};

Pools build_pools(const Data& d) {
  require(!d.sources.empty(), "no source cities selected");
  Pools p;
  for (const auto& s : d.sources) p.parts.push_back(partition_city(s));
  p.train = assemble_pooled(p.parts, Segment::Train);
  p.val = assemble_pooled(p.parts, Segment::Val);
  p.test = assemble_pooled(p.parts, Segment::Test);
  for (const auto& t : d.targets) p.targets.push_back(prepare_target(t));
  return p;
}

void note(const std::string& msg) { std::clog << "[greennas] " << msg << '\n'; }

// Loads --model when given, otherwise trains --arch on the pooled sources and
// saves the artifact in the run directory.
nn::TrainedModel obtain_model(const Options& o, Run& run, const Pools& p) {
  if (!o.model_path.empty()) {
    run.manifest().outputs["model_in"] = o.model_path;
    return nn::load_model(o.model_path);
  }
  const auto spec = report::resolve_arch(o.arch);
  note("training " + nn::to_descriptor(spec) + " (" + std::to_string(nn::count_params(spec)) + " params) on " +
       std::to_string(p.train.size()) + " windows");
  auto model = nn::train(spec, p.train, p.val, train_config(o));
  model.scaler_ids.clear();
  for (const auto& c : p.parts) model.scaler_ids.push_back(c.series.city.name);
  nn::save_model(model, run.output("model", "model.gnm"));
  return model;
}

WindowedDataset pooled_target(const Pools& p, WindowedDataset TargetCity::*seg) {
  if (p.targets.empty()) throw DataError("no target cities selected");
  return pooled_segment(p.targets, seg);
}

int cmd_fetch(const Options& o, Run& run) {
  const auto d = load_data(o, run);
  report::CsvTable t({"city", "role", "climate_zone", "rows", "missing_values", "start"});
  const fs::path series_dir = run.dir() / "series";
  fs::create_directories(series_dir);
  for (const auto* group : {&d.sources, &d.targets})
    for (const auto& s : *group) {
      t.add({s.city.name, s.city.role == CityRole::Source ? "source" : "target", s.city.climate_zone,
             std::to_string(s.rows()), std::to_string(s.missing.count()), format_hour(s.start_time)});
      write_cache_file(series_dir / (detail::sanitize_for_filename(s.city.name) + ".csv"), s);
    }
  run.manifest().outputs["series"] = series_dir.string();
  t.write(run.output("cities", "cities.csv"));
  return 0;
}

int cmd_prepare(const Options& o, Run& run) {
  const auto p = build_pools(load_data(o, run));
  save_prepared(run.output("sources", "sources.gnds"), {{"train", p.train}, {"val", p.val}, {"test", p.test}});
  if (!p.targets.empty())
    save_prepared(run.output("targets", "targets.gnds"),
                  {{"pool_windows", pooled_segment(p.targets, &TargetCity::test)},
                   {"calibration", pooled_target(p, &TargetCity::calibration)},
                   {"evaluation", pooled_target(p, &TargetCity::evaluation)}});
  report::CsvTable t({"segment", "windows"});
  t.add({"source_train", std::to_string(p.train.size())});
  t.add({"source_val", std::to_string(p.val.size())});
  t.add({"source_test", std::to_string(p.test.size())});
  if (!p.targets.empty()) t.add({"target_test", std::to_string(pooled_target(p, &TargetCity::test).size())});
  t.write(run.output("summary", "prepare.csv"));
  return 0;
}

int cmd_search(const Options& o, Run& run) {
  const auto p = build_pools(load_data(o, run));
  nas::SearchConfig cfg;
  cfg.population = o.pop;
  cfg.generations = o.gens;
  cfg.seed = o.seed;
  cfg.subsample = o.subsample;
  cfg.workers = o.workers;
  run.manifest().config["search"] = report::to_json(cfg);
  run.save();
  std::ofstream history(run.output("history", "history.jsonl"));
  const auto res = nas::evolve(p.train, p.val, cfg, [&](const nas::GenerationRecord& g) {
    history << nas::history_jsonl({g}) << std::flush;
    double best = nas::kSentinelRmse;
    for (const auto& ind : g.population) best = std::min(best, ind.objectives.val_rmse);
    note("generation " + std::to_string(g.generation) + ": best val RMSE " + report::fmt(best) + ", " +
         std::to_string(g.unique_evaluations) + " unique evaluations");
  });
  const auto front = nas::pareto_front(res.population);
  report::front_csv(front).write(run.output("front", "front.csv"));
  report::front_csv(front).write(run.output("pareto_csv", "pareto.csv"));
  report::pareto_svg(front).write(run.output("pareto_svg", "pareto.svg"));
  report::CsvTable evals({"arch", "val_rmse", "params", "depth"});
  for (const auto& [k, ob] : res.evaluated)
    evals.add({k, report::fmt(ob.val_rmse), std::to_string(ob.param_count), std::to_string(ob.depth)});
  evals.write(run.output("evaluations", "evaluations.csv"));
  const double persist = rmse(persistence_forecast(p.val), targets_of(p.val));
  run.manifest().config["result"] = {{"unique_evaluations", res.unique_evaluations},
                                     {"cache_hits", res.cache_hits},
                                     {"front_size", front.size()},
                                     {"best_val_rmse", front.front().objectives.val_rmse},
                                     {"persistence_val_rmse", persist}};
  note("front of " + std::to_string(front.size()) + ", best val RMSE " + report::fmt(front.front().objectives.val_rmse) +
       " (persistence " + report::fmt(persist) + ")");
  return 0;
}

// Persistence and per-city climatology (fit on each target pool) on the pooled target test windows.
std::vector<report::ComparisonRow> baseline_rows(const Pools& p, const WindowedDataset& test) {
  std::map<std::string, ClimatologyTable> tables;
  std::map<std::string, TimePoint> starts;
  for (const auto& t : p.targets) {
    tables[t.name()] = climatology_fit(t.scaled, t.series.start_time, t.layout.pool());
    starts[t.name()] = t.series.start_time;
  }
  const Predictions truth = targets_of(test);
  return {{"persistence", 0, rmse(persistence_forecast(test), truth)},
          {"climatology", 0, rmse(climatology_forecast(tables, test, starts), truth)}};
}

int cmd_train(const Options& o, Run& run) {
  const auto p = build_pools(load_data(o, run));
  const auto model = obtain_model(o, run, p);
  report::CsvTable curve({"epoch", "train_loss", "val_rmse"});
  for (const auto& e : model.meta.curve)
    curve.add({std::to_string(e.epoch), report::fmt(e.train_loss), report::fmt(e.val_rmse)});
  curve.write(run.output("curve", "curve.csv"));
  report::CsvTable t({"model", "params", "best_epoch", "source_val_rmse", "source_test_rmse", "target_test_rmse",
                      "target_persistence_rmse", "target_climatology_rmse"});
  std::string tgt = "", pers = "", clim = "";
  if (!p.targets.empty()) {
    const auto test = pooled_target(p, &TargetCity::test);
    const auto base = baseline_rows(p, test);
    tgt = report::fmt(nn::evaluate_rmse(model.net, test));
    pers = report::fmt(base[0].rmse);
    clim = report::fmt(base[1].rmse);
  }
  t.add({nn::to_descriptor(model.spec()), std::to_string(model.net.num_scalars()), std::to_string(model.meta.best_epoch),
         report::fmt(nn::evaluate_rmse(model.net, p.val)), report::fmt(nn::evaluate_rmse(model.net, p.test)), tgt, pers,
         clim});
  t.write(run.output("metrics", "metrics.csv"));
  note("target test RMSE " + (tgt.empty() ? std::string("n/a") : tgt));
  return 0;
}

int cmd_transfer(const Options& o, Run& run) {
  const auto p = build_pools(load_data(o, run));
  if (p.targets.empty()) throw DataError("transfer needs at least one target city");
  const auto pretrained = obtain_model(o, run, p);
  transfer::TransferConfig cfg;
  cfg.fractions = o.fractions;
  cfg.trials = o.trials;
  cfg.seed = o.seed;
  cfg.train = train_config(o);
  cfg.finetune = train_config(o);
  cfg.finetune.learning_rate = o.finetune_lr;
  cfg.finetune.frozen_layers = o.frozen;
  cfg.workers = o.workers;
  const auto rep = transfer::run_transfer_experiment(pretrained.spec(), pretrained, p.targets, cfg);
  report::transfer_csv(rep).write(run.output("transfer_csv", "transfer.csv"));
  report::transfer_svg(rep).write(run.output("transfer_svg", "transfer.svg"));
  for (const auto& r : rep.rows)
    note("fraction " + report::fmt(r.fraction) + ": scratch " + report::fmt(r.scratch_mean) + ", transfer " +
         report::fmt(r.transfer_mean) + " (" + report::fmt(r.improvement_pct) + "%, p=" + report::fmt(r.ttest.p_value) +
         ")");
  return 0;
}

int cmd_conformal(const Options& o, Run& run) {
  const auto p = build_pools(load_data(o, run));
  const auto model = obtain_model(o, run, p);
  const auto cal = robustness::conformal_calibrate(model.net, pooled_target(p, &TargetCity::calibration), o.alpha);
  const auto eval = pooled_target(p, &TargetCity::evaluation);
  const auto cov =
      robustness::empirical_coverage(robustness::conformal_interval(model.net, eval, cal), Predictions(targets_of(eval)));
  report::coverage_csv({{nn::to_descriptor(model.spec()), cal, cov}}).write(run.output("coverage", "coverage.csv"));
  note("macro coverage " + report::fmt(cov.macro) + ", mean width " + report::fmt(cov.mean_width));
  return 0;
}

int cmd_explain(const Options& o, Run& run) {
  const auto p = build_pools(load_data(o, run));
  const auto model = obtain_model(o, run, p);
  const auto rep = robustness::permutation_importance(model.net, pooled_target(p, &TargetCity::test), o.repeats, o.seed);
  report::importance_csv(rep).write(run.output("importance_csv", "importance.csv"));
  report::importance_svg(rep).write(run.output("importance_svg", "importance.svg"));
  return 0;
}

int cmd_horizon(const Options& o, Run& run) {
  const auto p = build_pools(load_data(o, run));
  if (p.targets.empty()) throw DataError("horizon needs at least one target city");
  const auto model = obtain_model(o, run, p);
  robustness::HorizonReport total;
  total.rmse.assign(o.horizon, 0.0);
  for (const auto& t : p.targets) {
    const auto r = robustness::horizon_rmse(model.net, t.scaled, t.layout.test(), o.horizon, kLookback, o.stride);
    for (std::size_t h = 0; h < o.horizon; ++h) total.rmse[h] += r.rmse[h] * r.rmse[h] * static_cast<double>(r.windows);
    total.windows += r.windows;
  }
  for (auto& v : total.rmse) v = std::sqrt(v / static_cast<double>(total.windows));
  report::horizon_csv(total).write(run.output("horizon_csv", "horizon.csv"));
  report::horizon_svg(total).write(run.output("horizon_svg", "horizon.svg"));
  note("RMSE h=1 " + report::fmt(total.rmse.front()) + ", h=" + std::to_string(o.horizon) + " " +
       report::fmt(total.rmse.back()));
  return 0;
}

report::BenchResult bench_one(const nn::TrainedModel& m, const std::string& id, const Options& o, Run& run) {
  const auto path = run.output("artifact_" + id, "bench_" + detail::sanitize_for_filename(id) + ".gnm");
  nn::save_model(m, path);
  return report::measure_latency(m, o.warmup, o.iters, path, id);
}

report::CsvTable bench_csv(const std::vector<report::BenchResult>& rs) {
  report::CsvTable t({"model", "params", "mean_ms", "median_ms", "p95_ms", "size_bytes", "iters"});
  for (const auto& r : rs)
    t.add({r.model_id, std::to_string(r.params), report::fmt(r.mean_ms), report::fmt(r.median_ms),
           report::fmt(r.p95_ms), std::to_string(r.size_bytes), std::to_string(r.iters)});
  return t;
}

// Latency depends only on the architecture, so untrained weights are timed
// unless --model is given.
int cmd_bench(const Options& o, Run& run) {
  std::vector<report::BenchResult> rs;
  if (!o.model_path.empty()) {
    const auto m = nn::load_model(o.model_path);
    rs.push_back(report::measure_latency(m, o.warmup, o.iters, o.model_path, nn::to_descriptor(m.spec())));
  } else {
    for (const auto& name : o.models) {
      nn::TrainedModel m;
      m.net = nn::init_weights<float>(report::resolve_arch(name), o.seed);
      rs.push_back(bench_one(m, name, o, run));
    }
  }
  bench_csv(rs).write(run.output("bench", "bench.csv"));
  for (const auto& r : rs) note(r.model_id + ": mean " + report::fmt(r.mean_ms) + " ms, " + std::to_string(r.size_bytes) + " bytes");
  return 0;
}

// Trains every model in --models on the sources, evaluates on the target
// test windows next to the baselines, benchmarks each, and writes the
// comparison table and chart.
int cmd_report(const Options& o, Run& run) {
  const auto p = build_pools(load_data(o, run));
  if (p.targets.empty()) throw DataError("report needs at least one target city");
  const auto test = pooled_target(p, &TargetCity::test);
  auto rows = baseline_rows(p, test);
  std::vector<report::BenchResult> bench;
  for (const auto& name : o.models) {
    const auto spec = report::resolve_arch(name);
    note("training " + name);
    const auto m = nn::train(spec, p.train, p.val, train_config(o));
    nn::save_model(m, run.output("model_" + name, "model_" + detail::sanitize_for_filename(name) + ".gnm"));
    auto b = bench_one(m, name, o, run);
    rows.push_back({name, b.params, nn::evaluate_rmse(m.net, test), b.mean_ms, b.size_bytes});
    bench.push_back(std::move(b));
  }
  report::comparison_csv(rows).write(run.output("comparison_csv", "comparison.csv"));
  report::comparison_svg(rows).write(run.output("comparison_svg", "comparison.svg"));
  bench_csv(bench).write(run.output("bench", "bench.csv"));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"greennas: multi-objective architecture search for hourly weather forecasting"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub, bool needs_data = true) {
    sub->add_option("--seed", o.seed, "run seed")->capture_default_str();
    sub->add_option("--out", o.out, "base directory for run directories")->capture_default_str();
    if (!needs_data) return;
    sub->add_option("--data", o.data, "data source")->check(CLI::IsMember({"synthetic", "openmeteo"}))->capture_default_str();
    sub->add_option("--cities", o.cities_path, "cities config (JSON); default: built-in 24 cities");
    sub->add_option("--cache-dir", o.cache_dir, "Open-Meteo cache directory (default $GREENNAS_CACHE_DIR)");
    sub->add_option("--hours", o.hours, "hours per synthetic city")->capture_default_str();
    sub->add_option("--start", o.start, "first day (Open-Meteo)")->capture_default_str();
    sub->add_option("--end", o.end, "last day (Open-Meteo)")->capture_default_str();
    sub->add_option("--max-sources", o.max_sources, "use at most N source cities (0 = all)");
    sub->add_option("--max-targets", o.max_targets, "use at most N target cities (0 = all)");
    sub->add_option("--workers", o.workers, "parallel workers for search/transfer")->capture_default_str();
  };
  auto training = [&](CLI::App* sub) {
    sub->add_option("--arch", o.arch, "alias (gru128x2, cnn128, cnn32, lstm64x2, gru32) or descriptor")
        ->capture_default_str();
    sub->add_option("--model", o.model_path, "use a saved model artifact instead of training");
    sub->add_option("--epochs", o.epochs, "max epochs")->capture_default_str();
    sub->add_option("--patience", o.patience, "early-stopping patience")->capture_default_str();
    sub->add_option("--batch-size", o.batch, "mini-batch size")->capture_default_str();
    sub->add_option("--lr", o.lr, "Adam learning rate")->capture_default_str();
  };

  std::map<CLI::App*, int (*)(const Options&, Run&)> handlers;
  auto add = [&](const char* name, const char* help, int (*fn)(const Options&, Run&)) {
    auto* sub = app.add_subcommand(name, help);
    handlers[sub] = fn;
    return sub;
  };

  common(add("fetch", "download (or generate) and cache city series", cmd_fetch));
  common(add("prepare", "scale, window and split into dataset containers", cmd_prepare));
  auto* search = add("search", "NSGA-II architecture search", cmd_search);
  common(search);
  search->add_option("--pop", o.pop, "population size (even)")->capture_default_str();
  search->add_option("--gens", o.gens, "generations")->capture_default_str();
  search->add_option("--subsample", o.subsample, "fraction of source windows per candidate")->capture_default_str();
  auto* train = add("train", "train a named or explicit architecture", cmd_train);
  common(train);
  training(train);
  auto* tr = add("transfer", "scratch vs fine-tune across data fractions", cmd_transfer);
  common(tr);
  training(tr);
  tr->add_option("--fractions", o.fractions, "target pool fractions")->delimiter(',');
  tr->add_option("--trials", o.trials, "trials per fraction")->capture_default_str();
  tr->add_option("--finetune-lr", o.finetune_lr, "fine-tuning learning rate")->capture_default_str();
  tr->add_option("--frozen-layers", o.frozen, "leading hidden layers kept fixed while fine-tuning");
  auto* conf = add("conformal", "split conformal calibration and coverage", cmd_conformal);
  common(conf);
  training(conf);
  conf->add_option("--alpha", o.alpha, "miscoverage level")->capture_default_str();
  auto* ex = add("explain", "permutation feature importance", cmd_explain);
  common(ex);
  training(ex);
  ex->add_option("--repeats", o.repeats, "permutations per feature")->capture_default_str();
  auto* hz = add("horizon", "recursive multi-step forecast evaluation", cmd_horizon);
  common(hz);
  training(hz);
  hz->add_option("--horizon", o.horizon, "steps ahead (1-48)")->capture_default_str();
  hz->add_option("--stride", o.stride, "use every k-th seed window")->capture_default_str();
  auto* bench = add("bench", "single-window latency and artifact size", cmd_bench);
  common(bench, false);
  bench->add_option("--models", o.models, "architectures to time")->delimiter(',');
  bench->add_option("--model", o.model_path, "time a saved artifact instead");
  bench->add_option("--warmup", o.warmup, "untimed calls")->capture_default_str();
  bench->add_option("--iters", o.iters, "timed calls")->capture_default_str();
  auto* rep = add("report", "train, evaluate and benchmark models; comparison table and chart", cmd_report);
  common(rep);
  training(rep);
  rep->add_option("--models", o.models, "architectures to compare")->delimiter(',');
  rep->add_option("--warmup", o.warmup, "untimed latency calls")->capture_default_str();
  rep->add_option("--iters", o.iters, "timed latency calls")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  for (const auto& [sub, fn] : handlers) {
    if (!sub->parsed()) continue;
    std::optional<Run> run;
    try {
      run.emplace(o, sub->get_name(), argc, argv);
      note("run directory " + run->dir().string());
      const int rc = fn(o, *run);
      run->finish("ok");
      return rc;
    } catch (const std::exception& e) {
      std::cerr << "greennas " << sub->get_name() << ": error: " << e.what() << '\n';
      if (run) {
        try {
          run->finish("failed", e.what());
        } catch (...) {
        }
      }
      return 1;
    }
  }
  return 2;
}
