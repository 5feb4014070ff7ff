#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "dslob/bench.hpp"
#include "dslob/config.hpp"
#include "dslob/dataset.hpp"
#include "dslob/market.hpp"
#include "dslob/scenario.hpp"

namespace {

void write_text(const dslob::fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deterministic limit-order-book simulator, dataset builder and classical benchmark"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "Simulate trading days into day CSVs and a manifest");
  std::string config_path, out_dir;
  std::optional<std::int64_t> days;
  std::optional<std::uint64_t> seed;
  unsigned parallel = 1;
  bool quiet = false;
  gen->add_option("--config", config_path, "Configuration JSON (defaults if omitted)")->check(CLI::ExistingFile);
  gen->add_option("--out", out_dir, "Output directory")->required();
  gen->add_option("--days", days, "Override the number of days");
  gen->add_option("--seed", seed, "Override the root seed");
  gen->add_option("--parallel", parallel, "Worker threads")->check(CLI::PositiveNumber);
  gen->add_flag("--quiet", quiet, "No per-day progress");

  // dataset
  auto* dsc = app.add_subcommand("dataset", "Build windows, normalization and splits from a generated directory");
  std::string in_dir, ds_out;
  dslob::DatasetOptions dopt;
  std::optional<double> trend_alpha;
  std::optional<std::uint64_t> split_seed;
  dsc->add_option("--in", in_dir, "Generated directory")->required()->check(CLI::ExistingDirectory);
  dsc->add_option("--out", ds_out, "Dataset directory")->required();
  dsc->add_option("--horizon", dopt.horizon, "Forecast horizon in records")->check(CLI::PositiveNumber);
  dsc->add_flag("--normalize,!--no-normalize", dopt.normalize, "Z-score features and labels (default on)");
  dsc->add_option("--trend-alpha", trend_alpha, "Threshold for up/stationary/down trend labels");
  dsc->add_option("--holdout-fraction", dopt.holdout_fraction, "Share of ordinary days held out for the IID test");
  dsc->add_option("--split-seed", split_seed, "Seed for the held-out day choice (default: root seed)");
  dsc->add_flag("--export-tensors", dopt.export_tensors, "Write the binary tensor export");
  dsc->add_option("--export-stride", dopt.export_stride, "Keep every n-th window in the export")
      ->check(CLI::PositiveNumber);
  dsc->add_option("--parallel", dopt.parallel, "Reader threads")->check(CLI::PositiveNumber);

  // bench
  auto* bench = app.add_subcommand("bench", "Fit a classical baseline and report RMSE per split");
  std::string dataset_dir, model = "ridge", report_path, plot_csv;
  double lambda = 1.0;
  unsigned bench_parallel = 1;
  bench->add_option("--dataset", dataset_dir, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  bench->add_option("--model", model, "Model")->check(CLI::IsMember({"persistence", "ridge"}));
  bench->add_option("--lambda", lambda, "Ridge penalty")->check(CLI::NonNegativeNumber);
  bench->add_option("--report", report_path, "Report JSON path")->required();
  bench->add_option("--plot-csv", plot_csv, "Per-day before/after shock RMSE CSV");
  bench->add_option("--parallel", bench_parallel, "Threads")->check(CLI::PositiveNumber);

  // trace
  auto* tr = app.add_subcommand("trace", "Run one day and print its event trace");
  std::string trace_config;
  std::int64_t trace_day = 0;
  std::string trace_scenario = "ordinary";
  double stop_at = 60.0;
  tr->add_option("--config", trace_config, "Configuration JSON")->check(CLI::ExistingFile);
  tr->add_option("--day", trace_day, "Day index");
  tr->add_option("--scenario", trace_scenario, "ordinary, small or large");
  tr->add_option("--seconds", stop_at, "Simulated seconds to trace")->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      dslob::ScenarioConfig cfg = config_path.empty() ? dslob::ScenarioConfig{} : dslob::load_config(config_path);
      if (days) cfg.n_days = *days;
      if (seed) cfg.root_seed = *seed;
      dslob::GenerateOptions opts;
      opts.parallel = parallel;
      if (!quiet) {
        opts.on_day = [](const dslob::DayRecord& r) {
          std::fprintf(stderr, "day %lld %s: %zu records%s\n", static_cast<long long>(r.day_index),
                       std::string(dslob::to_string(r.scenario)).c_str(), r.snapshots.size(),
                       r.failed ? " (failed)" : "");
        };
      }
      const auto m = dslob::generate_dataset(cfg, out_dir, opts);
      std::size_t failed = 0;
      for (const auto& d : m.days) failed += d.failed ? 1 : 0;
      std::printf("%lld days (%lld ordinary, %lld small, %lld large), %zu failed -> %s\n",
                  static_cast<long long>(m.n_days), static_cast<long long>(m.counts.ordinary),
                  static_cast<long long>(m.counts.small), static_cast<long long>(m.counts.large), failed,
                  out_dir.c_str());
    } else if (*dsc) {
      dopt.trend_alpha = trend_alpha;
      dopt.split_seed = split_seed;
      const auto desc = dslob::build_dataset(in_dir, ds_out, dopt);
      std::printf("%s\n", desc.at("counts").dump().c_str());
    } else if (*bench) {
      const dslob::Dataset ds = dslob::open_dataset(dataset_dir, bench_parallel);
      dslob::EvalReport rep;
      if (model == "persistence") {
        rep = dslob::evaluate(dslob::Persistence{}, ds, bench_parallel);
      } else {
        const auto m = dslob::fit_ridge(ds.splits.train, lambda);
        rep = dslob::evaluate(m, ds, bench_parallel);
      }
      const auto j = dslob::to_json(rep);
      dslob::validate_report(j);
      dslob::write_json_file(report_path, j);
      if (!plot_csv.empty()) write_text(plot_csv, dslob::per_day_csv(rep));
      std::printf("%s", dslob::render_table(rep).c_str());
    } else if (*tr) {
      const dslob::ScenarioConfig cfg =
          trace_config.empty() ? dslob::ScenarioConfig{} : dslob::load_config(trace_config);
      dslob::DayOptions o;
      o.record_trace = true;
      o.stop_at = dslob::seconds_to_ns(stop_at);
      const auto r = dslob::run_day(cfg, dslob::parse_scenario(trace_scenario), trace_day, o);
      dslob::write_trace(std::cout, r.trace);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
