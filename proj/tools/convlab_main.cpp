// convlab: run declarative convergence experiments from JSON scenarios.
//
//   convlab simulate <scenario.json> [--out PREFIX] [--seed N] [--t-max T] [--tol E]
//   convlab analyze <trajectory.csv> [--out PREFIX]
//   convlab gallery list
//   convlab gallery run <name> [--out PREFIX] [--t-max T] [--tol E]
//   convlab loja <scenario.json> [--seed N]
//   convlab stability <scenario.json>
//   convlab batch <directory> [--out DIR]
//
// Reports are printed to stdout as JSON; --out additionally writes
// <PREFIX>.report.json and <PREFIX>.trajectory.csv.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "convlab/scenario.hpp"

namespace {

struct CommonFlags {
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<double> t_max;
  std::optional<double> tol;
};

void add_run_flags(CLI::App* cmd, CommonFlags& flags, bool with_seed = true) {
  cmd->add_option("--out", flags.out, "output prefix for report + trajectory files");
  if (with_seed) {
    cmd->add_option_function<std::uint64_t>(
        "--seed", [&flags](std::uint64_t v) { flags.seed = v; },
        "random seed override");
  }
  cmd->add_option_function<double>(
      "--t-max", [&flags](double v) { flags.t_max = v; }, "integration horizon");
  cmd->add_option_function<double>(
      "--tol", [&flags](double v) { flags.tol = v; },
      "relative step tolerance (absolute = 1e-3 x relative)");
}

convlab::RunOverrides to_overrides(const CommonFlags& flags) {
  convlab::RunOverrides ov;
  ov.out_prefix = flags.out;
  ov.seed = flags.seed;
  ov.t_max = flags.t_max;
  ov.tol = flags.tol;
  return ov;
}

void emit(const nlohmann::json& doc) { std::cout << doc.dump(2) << std::endl; }

int run_simulate(const std::string& path, const CommonFlags& flags) {
  const convlab::RunReport rep = convlab::run_scenario_file(path, to_overrides(flags));
  emit(rep.document);
  return 0;
}

int run_analyze(const std::string& path, const CommonFlags& flags) {
  const convlab::Trajectory traj = convlab::read_trajectory_csv(path);
  const nlohmann::json doc = convlab::analyze_trajectory_document(traj);
  emit(doc);
  if (!flags.out.empty()) {
    std::ofstream out(flags.out + ".report.json");
    if (!out) throw convlab::BuildError("cannot write report to " + flags.out);
    out << doc.dump(2) << '\n';
  }
  return 0;
}

int run_gallery_list() {
  nlohmann::json list = nlohmann::json::array();
  for (const std::string& name : convlab::gallery_names()) {
    const convlab::GalleryEntry entry = convlab::gallery(name);
    list.push_back({{"name", entry.name},
                    {"description", entry.description},
                    {"dimension", entry.system.dimension}});
  }
  emit(list);
  return 0;
}

int run_gallery_run(const std::string& name, const CommonFlags& flags) {
  nlohmann::json doc;
  doc["schema_version"] = convlab::kSchemaVersion;
  doc["name"] = name;
  doc["system"] = {{"kind", "gallery"}, {"gallery", name}};
  const convlab::RunReport rep =
      convlab::run_scenario(convlab::parse_scenario(doc), to_overrides(flags));
  emit(rep.document);
  return 0;
}

// Focused subcommands: run the scenario with exactly one analysis enabled and
// print just that analysis block.
int run_single_analysis(const std::string& path, const CommonFlags& flags,
                        const std::string& which) {
  convlab::Scenario sc = convlab::load_scenario(path);
  sc.analyses = {which};
  if (which == "loja" && !sc.seed && !flags.seed)
    throw convlab::ParseError("loja requires a seed (scenario field or --seed)");
  const convlab::RunReport rep = convlab::run_scenario(sc, to_overrides(flags));
  if (rep.document.at("errors").contains(which)) {
    std::cerr << "error: " << rep.document["errors"][which].get<std::string>()
              << '\n';
    emit(rep.document["analyses"][which]);
    return 1;
  }
  emit(rep.document["analyses"][which]);
  return 0;
}

int run_batch(const std::string& dir, const CommonFlags& flags) {
  const convlab::BatchSummary summary = convlab::batch_run(dir, flags.out);
  emit(summary.document);
  return summary.all_ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"convergence laboratory for dissipative dynamical systems"};
  app.require_subcommand(1);

  std::string scenario_path, csv_path, gallery_name, batch_dir;
  CommonFlags flags;

  CLI::App* simulate = app.add_subcommand("simulate", "integrate a scenario and analyze it");
  simulate->add_option("scenario", scenario_path, "scenario JSON file")->required();
  add_run_flags(simulate, flags);

  CLI::App* analyze = app.add_subcommand("analyze", "analyze a stored trajectory CSV");
  analyze->add_option("trajectory", csv_path, "trajectory CSV file")->required();
  analyze->add_option("--out", flags.out, "output prefix for the report");

  CLI::App* gal = app.add_subcommand("gallery", "browse or run built-in systems");
  gal->require_subcommand(1);
  CLI::App* gal_list = gal->add_subcommand("list", "list built-in systems");
  CLI::App* gal_run = gal->add_subcommand("run", "simulate a built-in system");
  gal_run->add_option("name", gallery_name, "gallery entry name")->required();
  add_run_flags(gal_run, flags);

  CLI::App* loja = app.add_subcommand("loja", "estimate a scenario's gradient inequality exponent");
  loja->add_option("scenario", scenario_path, "scenario JSON file")->required();
  add_run_flags(loja, flags);

  CLI::App* stab = app.add_subcommand("stability", "classify a scenario's equilibria");
  stab->add_option("scenario", scenario_path, "scenario JSON file")->required();
  add_run_flags(stab, flags);

  CLI::App* batch = app.add_subcommand("batch", "run every scenario in a directory");
  batch->add_option("directory", batch_dir, "directory of scenario JSON files")->required();
  batch->add_option("--out", flags.out, "directory for per-scenario outputs");

  CLI11_PARSE(app, argc, argv);

  try {
    if (simulate->parsed()) return run_simulate(scenario_path, flags);
    if (analyze->parsed()) return run_analyze(csv_path, flags);
    if (gal_list->parsed()) return run_gallery_list();
    if (gal_run->parsed()) return run_gallery_run(gallery_name, flags);
    if (loja->parsed()) return run_single_analysis(scenario_path, flags, "loja");
    if (stab->parsed()) return run_single_analysis(scenario_path, flags, "stability");
    if (batch->parsed()) return run_batch(batch_dir, flags);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
