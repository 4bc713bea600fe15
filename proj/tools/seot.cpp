// seot command line: synthetic benchmark generation, pipeline runs, spectrum
// dumps and the source-only baseline.
//
// Exit codes: 0 success, 2 input errors, 3 numerical failures.

#include "seot/error.hpp"
#include "seot/graph.hpp"
#include "seot/io.hpp"
#include "seot/pipeline.hpp"
#include "seot/synth.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

constexpr int kExitInput = 2;
constexpr int kExitNumerical = 3;

int exit_code(seot::ErrorKind kind) {
  switch (kind) {
    case seot::ErrorKind::NumericalError:
    case seot::ErrorKind::IterativeSolverError:
    case seot::ErrorKind::DegenerateGraph:
      return kExitNumerical;
    default:
      return kExitInput;
  }
}

struct CommonArgs {
  std::vector<std::string> sources;
  std::string target;
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> k;
  std::optional<double> epsilon;
  std::string graph_out;
};

void add_common(CLI::App* cmd, CommonArgs& a) {
  cmd->add_option("--source", a.sources, "labeled source dataset (repeatable)")->required();
  cmd->add_option("--target", a.target, "target dataset")->required();
  cmd->add_option("--config", a.config, "key=value config file");
  cmd->add_option("--out", a.out, "output path")->required();
  cmd->add_option("--seed", a.seed, "random seed (overrides config)");
  cmd->add_option("--k", a.k, "embedding dimension, integer or 'auto'");
  cmd->add_option("--epsilon", a.epsilon, "entropic regularization");
}

seot::SeotConfig load_config(const CommonArgs& a, bool* skip_barycenter) {
  seot::SeotConfig cfg = a.config.empty() ? seot::SeotConfig{} : seot::io::read_config(a.config, skip_barycenter);
  if (a.seed) cfg.seed = *a.seed;
  if (a.k) seot::io::apply_config_key(cfg, "k", *a.k);
  if (a.epsilon) cfg.ot.epsilon = *a.epsilon;
  return cfg;
}

std::vector<seot::LabeledDomain> load_sources(const CommonArgs& a) {
  std::vector<seot::LabeledDomain> out;
  for (const auto& path : a.sources) {
    out.push_back(seot::io::read_dataset(path));
    if (!out.back().labeled())
      throw seot::Error(seot::ErrorKind::InvalidInput, path + ": source datasets must be labeled");
  }
  return out;
}

void write_predictions(const std::string& path, const seot::Labels& predictions) {
  std::string text = "index,prediction\n";
  for (std::size_t i = 0; i < predictions.size(); ++i)
    text += std::to_string(i) + "," + std::to_string(predictions[i]) + "\n";
  seot::io::write_text(path, text);
}

void finish_run(const seot::SeotRun& run, const seot::SeotConfig& cfg, const CommonArgs& a,
                const std::string& method, bool skip_barycenter) {
  auto report = seot::io::run_report(run, cfg, method, skip_barycenter);
  const std::string predictions = a.out + ".predictions.csv";
  report["predictions_file"] = std::filesystem::path(predictions).filename().string();
  write_predictions(predictions, run.predictions);
  seot::io::write_text(a.out, report.dump(2) + "\n");
  seot::io::write_text(a.out + ".timings.json", seot::io::timings_json(run).dump(2) + "\n");
  if (!a.graph_out.empty()) {
    std::ofstream g(a.graph_out);
    if (!g) throw seot::Error(seot::ErrorKind::IoError, "cannot write " + a.graph_out);
    seot::write_edge_list(run.graph, g);
  }
  if (run.report)
    std::cout << method << ": accuracy " << run.report->accuracy << " (k = " << run.chosen_k << ")\n";
  else
    std::cout << method << ": wrote predictions for " << run.predictions.size() << " samples (k = "
              << run.chosen_k << ")\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral embedding of optimal transport plans for domain adaptation"};
  app.require_subcommand(1);

  seot::SynthSpec synth;
  std::string synth_out, shift_text = "rotate:0";
  auto* synth_cmd = app.add_subcommand("synth", "generate a Gaussian-blob domain shift benchmark");
  synth_cmd->add_option("--out", synth_out, "output directory")->required();
  synth_cmd->add_option("--classes", synth.n_classes, "number of classes");
  synth_cmd->add_option("--samples-per-class", synth.samples_per_class, "samples per class and domain");
  synth_cmd->add_option("--dim", synth.d, "feature dimension");
  synth_cmd->add_option("--separation", synth.class_separation, "distance between adjacent class means");
  synth_cmd->add_option("--sources", synth.n_sources, "number of source domains");
  synth_cmd->add_option("--shift", shift_text, "rotate:<deg> | translate:<v1,..> | scale:<f> | noise:<sigma>");
  synth_cmd->add_option("--seed", synth.seed, "random seed");

  CommonArgs run_args, run2_args, spec_args, base_args;
  auto* run_cmd = app.add_subcommand("run", "multi-source pipeline through the barycenter");
  add_common(run_cmd, run_args);
  run_cmd->add_option("--graph-out", run_args.graph_out, "write the cross-domain graph as an edge list");

  bool skip_barycenter_flag = false;
  auto* run2_cmd = app.add_subcommand("run2", "two-domain pipeline");
  add_common(run2_cmd, run2_args);
  run2_cmd->add_option("--graph-out", run2_args.graph_out, "write the cross-domain graph as an edge list");
  run2_cmd->add_flag("--skip-barycenter", skip_barycenter_flag, "embed the direct source-target plan");

  std::size_t k_max = 0;
  auto* spec_cmd = app.add_subcommand("spectrum", "eigenvalues and eigengaps of the cross-domain graph");
  add_common(spec_cmd, spec_args);
  spec_cmd->add_option("--k-max", k_max, "largest j in the gap table")->required();

  auto* base_cmd = app.add_subcommand("baseline", "source-only classifier on raw features");
  add_common(base_cmd, base_args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }

  try {
    if (*synth_cmd) {
      synth.shift = seot::parse_shift(shift_text);
      seot::write_synth(synth, synth_out);
      std::cout << "wrote " << synth.n_sources << " sources and target to " << synth_out << "\n";
    } else if (*run_cmd) {
      const auto cfg = load_config(run_args, nullptr);
      const auto sources = load_sources(run_args);
      const auto target = seot::io::read_dataset(run_args.target);
      finish_run(seot::run_seot(sources, target, cfg), cfg, run_args, "seot", false);
    } else if (*run2_cmd) {
      bool skip = false;
      const auto cfg = load_config(run2_args, &skip);
      skip = skip || skip_barycenter_flag;
      const auto sources = load_sources(run2_args);
      if (sources.size() != 1)
        throw seot::Error(seot::ErrorKind::InvalidInput, "run2 takes exactly one --source");
      const auto target = seot::io::read_dataset(run2_args.target);
      finish_run(seot::run_two_domain(sources.front(), target, cfg, skip), cfg, run2_args,
                 skip ? "seot-bipartite" : "seot", skip);
    } else if (*spec_cmd) {
      auto cfg = load_config(spec_args, nullptr);
      cfg.k_mode.automatic = true;
      cfg.k_mode.k_max = k_max;
      if (cfg.k_mode.k_min > k_max)
        throw seot::Error(seot::ErrorKind::InvalidInput, "k_min exceeds --k-max");
      const auto sources = load_sources(spec_args);
      const auto target = seot::io::read_dataset(spec_args.target);
      const auto run = seot::run_seot(sources, target, cfg);
      seot::io::write_text(spec_args.out, seot::io::spectrum_text(run, k_max));
      std::cout << "selected k = " << run.chosen_k << "\n";
    } else if (*base_cmd) {
      const auto cfg = load_config(base_args, nullptr);
      const auto sources = load_sources(base_args);
      const auto target = seot::io::read_dataset(base_args.target);
      if (!target.labeled())
        throw seot::Error(seot::ErrorKind::InvalidInput, base_args.target + ": baseline needs target labels");
      const auto report = seot::source_only_baseline(sources, target, cfg.classifier, cfg.seed);
      seot::io::write_text(base_args.out, seot::io::baseline_report(report, cfg).dump(2) + "\n");
      std::cout << "source-only: accuracy " << report.accuracy << "\n";
    }
  } catch (const seot::Error& e) {
    std::cerr << "seot: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "seot: " << e.what() << "\n";
    return kExitInput;
  }
  return 0;
}
