#pragma once

#include <filesystem>
#include <optional>

namespace sgraphs::cli {

namespace fs = std::filesystem;

struct GenerateArgs {
  fs::path scene_file;
  fs::path out;
  std::optional<long long> seed;
};

struct RunArgs {
  fs::path scene_dir;
  fs::path out;
  std::optional<fs::path> config;
  std::optional<long long> seed;
  std::optional<int> optimize_every;
};

struct EvalArgs {
  fs::path run_dir;
  fs::path truth_dir;
  std::optional<fs::path> out;  // defaults to run_dir
};

struct ExportPlotArgs {
  fs::path run_dir;
  std::optional<fs::path> out;  // defaults to run_dir/plot
};

// Each returns the process exit code after writing its outputs. Errors
// propagate as exceptions and are mapped to exit codes by the caller.
int cmd_generate(const GenerateArgs& args);
int cmd_run(const RunArgs& args);
int cmd_eval(const EvalArgs& args);
int cmd_export_plot(const ExportPlotArgs& args);

}  // namespace sgraphs::cli
