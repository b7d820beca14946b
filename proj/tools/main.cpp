#include "commands.hpp"

#include "CLI11.hpp"
#include "sgraphs/io.hpp"
#include "sgraphs/solver.hpp"

#include <iostream>

int main(int argc, char** argv) {
  using namespace sgraphs::cli;
  CLI::App app{"Situational graph SLAM on synthetic indoor scenes"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Generate a synthetic scene from a scene file");
  g->add_option("scene", gen.scene_file, "Scene description (JSON)")->required();
  g->add_option("--out", gen.out, "Output directory")->required();
  g->add_option("--seed", gen.seed, "Override the noise seed");

  RunArgs run;
  auto* r = app.add_subcommand("run", "Run the pipeline on a generated scene directory");
  r->add_option("scene_dir", run.scene_dir, "Directory written by `generate`")->required();
  r->add_option("--out", run.out, "Output directory")->required();
  r->add_option("--config", run.config, "Pipeline config (JSON)");
  r->add_option("--seed", run.seed, "Override the RANSAC seed");
  r->add_option("--optimize-every", run.optimize_every, "Optimize every N keyframes");

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Evaluate a run against ground truth");
  e->add_option("run_dir", ev.run_dir, "Directory written by `run`")->required();
  e->add_option("truth_dir", ev.truth_dir, "Directory written by `generate`")->required();
  e->add_option("--out", ev.out, "Output directory (default: run_dir)");

  ExportPlotArgs ex;
  auto* x = app.add_subcommand("export-plot", "Write plot-ready CSV series for a run");
  x->add_option("run_dir", ex.run_dir, "Directory written by `run`")->required();
  x->add_option("--out", ex.out, "Output directory (default: run_dir/plot)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& err) {
    return app.exit(err);
  } catch (const CLI::ParseError& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 2;
  }

  try {
    if (g->parsed()) return cmd_generate(gen);
    if (r->parsed()) return cmd_run(run);
    if (e->parsed()) return cmd_eval(ev);
    return cmd_export_plot(ex);
  } catch (const sgraphs::InputError& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 2;
  } catch (const sgraphs::SolverError& err) {
    std::cerr << "error: solver: " << err.what() << '\n';
    return 3;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 1;
  }
}
