#ifndef GSCALEI_EXPERIMENT_HPP_
#define GSCALEI_EXPERIMENT_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "gscalei/gscalei.hpp"

namespace gscalei {

/// Declarative description of one experiment grid cell: dimensions, replicate
/// count, the estimator, the optimizer configuration, and the master seed.
struct ExperimentConfig {
  int n = 5;
  int d = 25;
  int n_graphs = 10;
  int n_s = 100;
  double density = 0.5;
  bool coupled = true;
  /// Planted relabeling of the second intervention set (uncoupled runs only);
  /// empty means a random permutation per graph.
  std::vector<int> uncoupled_mismatch;
  bool allow_large_search = false;

  std::string estimator = "oracle";  // "oracle" or "noised"
  double tau = 0.0;                  // noise level for the noised estimator

  GscaleConfig gscale = GscaleConfig::defaults_for(5);
  bool gscale_explicit = false;  // when false, gscale follows defaults_for(n)

  std::string output_dir = "out";
  std::uint64_t master_seed = 1;
  bool save_artifacts = true;

  void validate() const;

  static ExperimentConfig from_json_file(const std::filesystem::path& path);
  std::string to_json() const;
};

struct GraphOutcome {
  std::uint64_t graph_seed = 0;
  bool ok = false;
  double l2_loss = 0.0;
  int shd = 0;
  double runtime_s = 0.0;
  std::string error;
};

struct AggregateReport {
  std::vector<GraphOutcome> per_graph;
  int n_failed = 0;
  double mean_l2 = 0.0, median_l2 = 0.0, std_l2 = 0.0;
  double mean_shd = 0.0, median_shd = 0.0, std_shd = 0.0;
  double total_runtime_s = 0.0;
};

/// Runs the full pipeline for every graph replicate, persisting per-graph
/// artifacts, results.csv, timings.csv, and aggregate.json under
/// cfg.output_dir. Per-graph failures are recorded and do not stop the run.
/// Everything except wall-clock timings is a pure function of the config.
AggregateReport run_experiment(const ExperimentConfig& cfg);

/// The per-graph pipeline used by run_experiment, exposed for tests and the
/// acceptance suite. Artifacts are written only when out_dir is non-empty.
GraphOutcome run_single_graph(const ExperimentConfig& cfg, int graph_index,
                              const std::filesystem::path& out_dir);

}  // namespace gscalei

#endif  // GSCALEI_EXPERIMENT_HPP_
