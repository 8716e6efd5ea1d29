#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "bpref/harness.hpp"

namespace fs = std::filesystem;

namespace {

struct ConfigArgs {
  std::string config;
  std::vector<std::string> sets;
  std::string out;
};

void add_config_options(CLI::App* cmd, ConfigArgs& args) {
  cmd->add_option("-c,--config", args.config, "JSON experiment config")->check(CLI::ExistingFile);
  cmd->add_option("--set", args.sets, "Override a config key, e.g. --set sac.alpha=0.05")->take_all();
  cmd->add_option("-o,--out", args.out, "Output root (default: $BPREF_OUT, then ./runs)");
}

bpref::ExperimentConfig load(const ConfigArgs& args) {
  bpref::ExperimentConfig cfg = bpref::load_experiment(args.config, args.sets);
  if (!args.out.empty()) cfg.output_dir = args.out;
  return cfg;
}

void print_report(const bpref::AggregateReport& report) {
  for (const auto& c : report.cells) {
    std::cout << c.env << ' ' << c.algo << ' ' << c.teacher << " budget=" << c.budget << " runs=" << c.scores.size();
    if (c.iqm.value) std::cout << " iqm=" << *c.iqm.value << " [" << c.iqm.ci->lo << ", " << c.iqm.ci->hi << "]";
    if (c.mean.value) std::cout << " mean=" << *c.mean.value;
    std::cout << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Preference-based RL benchmark runner"};
  app.require_subcommand(1);

  ConfigArgs run_args;
  auto* run = app.add_subcommand("run", "Train one configuration over its seeds");
  add_config_options(run, run_args);

  ConfigArgs sweep_args;
  auto* sweep = app.add_subcommand("sweep", "Run every teacher preset (and the baseline), then aggregate");
  add_config_options(sweep, sweep_args);

  std::string eval_root;
  std::string eval_report;
  int eval_resamples = 2000;
  auto* eval = app.add_subcommand("eval", "Aggregate finished runs into report.json");
  eval->add_option("root", eval_root, "Directory holding runs")->required();
  eval->add_option("--report", eval_report, "Report path (default: <root>/report.json)");
  eval->add_option("--resamples", eval_resamples, "Bootstrap resamples")->check(CLI::Range(1000, 1000000));

  std::string labels_root;
  auto* labels = app.add_subcommand("label-stats", "Skip / equal / flip fractions from records.jsonl files");
  labels->add_option("root", labels_root, "Directory holding runs")->required();

  std::string plot_input;
  std::string plot_output;
  bool plot_curves = false;
  auto* plot = app.add_subcommand("plot-data", "Plot-ready CSV from a report.json or from run curves");
  plot->add_option("input", plot_input, "report.json, or a run directory with --curves")->required();
  plot->add_option("-o,--output", plot_output, "CSV path (default: stdout)");
  plot->add_flag("--curves", plot_curves, "Emit the long-format curve table of every run under input");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      const auto cfg = load(run_args);
      for (const auto& r : bpref::run_experiment(cfg)) {
        std::cout << r.dir.string() << " final_return=" << r.record.final_return()
                  << " final_success=" << r.record.final_success();
        if (r.reward_alignment) std::cout << " reward_alignment=" << *r.reward_alignment;
        std::cout << '\n';
      }
    } else if (sweep->parsed()) {
      print_report(bpref::sweep_robustness(load(sweep_args)));
    } else if (eval->parsed()) {
      const auto report = bpref::aggregate_directory(eval_root, eval_resamples);
      const fs::path path = eval_report.empty() ? fs::path(eval_root) / "report.json" : fs::path(eval_report);
      std::ofstream(path) << bpref::to_json(report).dump(2) << '\n';
      print_report(report);
    } else if (labels->parsed()) {
      nlohmann::json out = nlohmann::json::array();
      for (const auto& s : bpref::label_stats(labels_root)) out.push_back(bpref::to_json(s));
      std::cout << out.dump(2) << '\n';
    } else if (plot->parsed()) {
      std::ofstream file;
      if (!plot_output.empty()) file.open(plot_output);
      std::ostream& out = plot_output.empty() ? std::cout : file;
      if (plot_curves) {
        bpref::write_curve_table(out, plot_input);
      } else {
        std::ifstream in(plot_input);
        if (!in) throw std::runtime_error("cannot read " + plot_input);
        bpref::write_plot_csv(out, bpref::report_from_json(nlohmann::json::parse(in)));
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
