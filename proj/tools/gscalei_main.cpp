// Command-line driver for the GSCALE-I pipeline: data generation, score
// differences, encoder fitting, evaluation, experiment grids, and the
// gradient audit. Runtime errors exit with code 1 and a JSON object on
// stderr; usage errors exit with code 2.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "gscalei/errors.hpp"
#include "gscalei/experiment.hpp"
#include "gscalei/gscalei.hpp"
#include "gscalei/io.hpp"
#include "gscalei/metrics.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace gscalei;

namespace {

struct CommonArgs {
  std::optional<std::uint64_t> seed;
  std::string config_path;
  std::string out_dir;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--seed", args.seed, "Master seed override");
  cmd->add_option("--config", args.config_path, "Experiment config JSON");
  cmd->add_option("--out", args.out_dir, "Output directory");
}

/// Experiment config assembled from --config with --seed/--out overrides.
ExperimentConfig resolve_config(const CommonArgs& args) {
  ExperimentConfig cfg;
  if (!args.config_path.empty()) cfg = ExperimentConfig::from_json_file(args.config_path);
  if (args.seed) cfg.master_seed = *args.seed;
  if (!args.out_dir.empty()) cfg.output_dir = args.out_dir;
  return cfg;
}

int cmd_generate(const CommonArgs& common, const ExperimentConfig& cfg) {
  const fs::path out(cfg.output_dir);
  fs::create_directories(out);
  const std::uint64_t graph_seed = derive_stream(cfg.master_seed, stream_tag::kGraphBase);
  Rng dag_rng(derive_stream(graph_seed, stream_tag::kDag));
  Rng mech_rng(derive_stream(graph_seed, stream_tag::kMechanisms));
  Rng dec_rng(derive_stream(graph_seed, stream_tag::kDecoder));
  const Dag dag = sample_er_dag(cfg.n, cfg.density, dag_rng);
  QuadraticScm scm = sample_mechanisms(dag, mech_rng);
  if (!cfg.coupled && !cfg.uncoupled_mismatch.empty()) scm.targets_2 = cfg.uncoupled_mismatch;
  const DecoderGlm dec = sample_decoder(cfg.n, cfg.d, dec_rng);
  Rng z_rng(derive_stream(graph_seed, stream_tag::kLatentStreamBase));
  const Eigen::MatrixXd z = sample_latent(scm, EnvironmentId::observational(), cfg.n_s, z_rng);
  Eigen::MatrixXd x(z.rows(), cfg.d);
  for (Eigen::Index k = 0; k < z.rows(); ++k)
    x.row(k) = decode(dec, z.row(k).transpose()).transpose();

  write_scm_json(out / "scm.json", scm);
  write_matrix_csv(out / "decoder.csv", dec.matrix());
  write_samples_csv(out / "z_samples.csv", z, "z");
  write_samples_csv(out / "x_samples.csv", x, "x");
  json meta;
  meta["schema"] = "gscalei/dataset/1";
  meta["n"] = cfg.n;
  meta["d"] = cfg.d;
  meta["n_s"] = cfg.n_s;
  meta["seed"] = cfg.master_seed;
  meta["coupled"] = cfg.coupled;
  std::ofstream(out / "dataset.json") << meta.dump(2) << "\n";
  std::cout << "wrote dataset to " << out.string() << "\n";
  (void)common;
  return 0;
}

int cmd_scores(const CommonArgs& common, const ExperimentConfig& cfg,
               const std::string& data_dir) {
  const fs::path data(data_dir);
  const QuadraticScm scm = read_scm_json(data / "scm.json");
  const DecoderGlm dec{read_matrix_csv(data / "decoder.csv")};
  const Eigen::MatrixXd z = read_samples_csv(data / "z_samples.csv");
  const Eigen::MatrixXd x = read_samples_csv(data / "x_samples.csv");

  const OracleScoreDiffs oracle(scm, dec, z);
  ScoreDiffBatch batch;
  if (cfg.estimator == "noised") {
    NoisedScoreDiffs noised(oracle, cfg.tau,
                            derive_stream(cfg.master_seed, stream_tag::kEstimatorNoise));
    batch = build_score_diff_batch(x, z, scm.n(), noised);
  } else {
    batch = build_score_diff_batch(x, z, scm.n(), oracle);
  }
  write_batch_dir(fs::path(cfg.output_dir), batch, cfg.master_seed);
  std::cout << "wrote score-difference batch to " << cfg.output_dir << "\n";
  (void)common;
  return 0;
}

int cmd_fit(const CommonArgs& common, ExperimentConfig cfg, const std::string& batch_dir) {
  const ScoreDiffBatch batch = read_batch_dir(batch_dir);
  GscaleConfig gcfg = cfg.gscale_explicit ? cfg.gscale : GscaleConfig::defaults_for(batch.n());
  if (common.seed) gcfg.seed = derive_stream(*common.seed, stream_tag::kEncoderInit);
  const FitResult fit = gscale_i(batch, gcfg, cfg.coupled, cfg.allow_large_search);
  write_fit_dir(fs::path(cfg.output_dir), fit);
  std::cout << "wrote fit to " << cfg.output_dir << "\n";
  return 0;
}

int cmd_eval(const CommonArgs& common, const ExperimentConfig& cfg,
             const std::string& data_dir, const std::string& fit_dir,
             const std::string& csv_path) {
  const auto t0 = std::chrono::steady_clock::now();
  const fs::path data(data_dir);
  const QuadraticScm scm = read_scm_json(data / "scm.json");
  const Eigen::MatrixXd z = read_samples_csv(data / "z_samples.csv");
  const Eigen::MatrixXd x = read_samples_csv(data / "x_samples.csv");
  const FitResult fit = read_fit_dir(fit_dir);

  Eigen::MatrixXd zhat(z.rows(), z.cols());
  for (Eigen::Index k = 0; k < z.rows(); ++k)
    zhat.row(k) = encode(fit.h_star, x.row(k).transpose()).transpose();
  std::vector<int> identity(scm.n());
  std::iota(identity.begin(), identity.end(), 0);
  const NormalizedL2 l2 = normalized_l2(z, zhat, identity);
  const int shd_value = shd(scm.dag, fit.graph, identity);

  EvalReport report;
  report.l2_loss = l2.loss;
  report.shd = shd_value;
  report.perm_used = identity;
  report.scale_used = l2.scales;
  report.runtime_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const fs::path out(cfg.output_dir);
  fs::create_directories(out);
  write_eval_json(out / "eval.json", report);
  if (!csv_path.empty()) {
    const bool fresh = !fs::exists(csv_path);
    std::ofstream csv(csv_path, std::ios::app);
    if (fresh) csv << results_csv_header();
    csv << results_csv_row(scm.n(), static_cast<int>(x.cols()), cfg.master_seed, true,
                           l2.loss, shd_value, "");
  }
  std::cout << "l2_loss=" << format_double(l2.loss) << " shd=" << shd_value << "\n";
  (void)common;
  return 0;
}

int cmd_experiment(const ExperimentConfig& cfg, bool full) {
  ExperimentConfig run_cfg = cfg;
  if (full) run_cfg.n_graphs = 100;
  const AggregateReport agg = run_experiment(run_cfg);
  std::cout << "graphs=" << run_cfg.n_graphs << " failed=" << agg.n_failed
            << " mean_l2=" << format_double(agg.mean_l2)
            << " mean_shd=" << format_double(agg.mean_shd)
            << " runtime_s=" << format_double(agg.total_runtime_s) << "\n";
  return agg.n_failed > 0 ? 1 : 0;
}

int cmd_gradcheck(std::uint64_t seed, int instances) {
  const GradCheckResult result = gradient_audit(instances, seed);
  std::cout << "instances=" << result.instances
            << " max_rel_error=" << format_double(result.max_rel_error) << "\n";
  return result.max_rel_error < 1e-4 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GSCALE-I: score-based causal representation learning from paired hard interventions"};
  app.require_subcommand(1);

  CommonArgs gen_args, scores_args, fit_args, eval_args, exp_args;

  auto* gen = app.add_subcommand("generate", "Sample a DAG, SCM, decoder, and latent/observed samples");
  add_common(gen, gen_args);
  int gen_n = 0, gen_d = 0, gen_ns = 0;
  double gen_density = -1.0;
  gen->add_option("--n", gen_n, "Latent dimension");
  gen->add_option("--d", gen_d, "Observed dimension");
  gen->add_option("--n-s", gen_ns, "Samples per environment");
  gen->add_option("--density", gen_density, "Edge probability");

  auto* scores_cmd = app.add_subcommand("scores", "Compute a score-difference batch for a dataset");
  add_common(scores_cmd, scores_args);
  std::string scores_data;
  scores_cmd->add_option("--data", scores_data, "Dataset directory from `generate`")->required();
  std::string scores_estimator;
  double scores_tau = -1.0;
  scores_cmd->add_option("--estimator", scores_estimator, "oracle or noised");
  scores_cmd->add_option("--tau", scores_tau, "Noise level for the noised estimator");

  auto* fit = app.add_subcommand("fit", "Run GSCALE-I on a persisted batch");
  add_common(fit, fit_args);
  std::string fit_batch;
  fit->add_option("--batch", fit_batch, "Batch directory from `scores`")->required();
  bool fit_uncoupled = false;
  fit->add_flag("--uncoupled", fit_uncoupled, "Search over environment couplings");
  bool fit_allow_large = false;
  fit->add_flag("--allow-large-search", fit_allow_large, "Lift the n<=6 coupling-search guard");

  auto* eval = app.add_subcommand("eval", "Evaluate a fit against the generating dataset");
  add_common(eval, eval_args);
  std::string eval_data, eval_fit, eval_csv;
  eval->add_option("--data", eval_data, "Dataset directory")->required();
  eval->add_option("--fit", eval_fit, "Fit directory")->required();
  eval->add_option("--csv", eval_csv, "Append a results row to this CSV");

  auto* experiment = app.add_subcommand("experiment", "Run a replicated experiment grid cell");
  add_common(experiment, exp_args);
  bool full = false;
  experiment->add_flag("--full", full, "Use 100 graph replicates");

  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference audit of the objective gradient");
  std::uint64_t gc_seed = 7;
  int gc_instances = 20;
  gradcheck->add_option("--seed", gc_seed, "Audit seed");
  gradcheck->add_option("--instances", gc_instances, "Instance count");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  }

  try {
    if (gen->parsed()) {
      ExperimentConfig cfg = resolve_config(gen_args);
      if (gen_n > 0) cfg.n = gen_n;
      if (gen_d > 0) cfg.d = gen_d;
      if (gen_ns > 0) cfg.n_s = gen_ns;
      if (gen_density >= 0) cfg.density = gen_density;
      cfg.validate();
      return cmd_generate(gen_args, cfg);
    }
    if (scores_cmd->parsed()) {
      ExperimentConfig cfg = resolve_config(scores_args);
      if (!scores_estimator.empty()) cfg.estimator = scores_estimator;
      if (scores_tau >= 0) cfg.tau = scores_tau;
      if (cfg.estimator != "oracle" && cfg.estimator != "noised")
        throw std::invalid_argument("estimator must be 'oracle' or 'noised'");
      return cmd_scores(scores_args, cfg, scores_data);
    }
    if (fit->parsed()) {
      ExperimentConfig cfg = resolve_config(fit_args);
      if (fit_uncoupled) cfg.coupled = false;
      if (fit_allow_large) cfg.allow_large_search = true;
      return cmd_fit(fit_args, cfg, fit_batch);
    }
    if (eval->parsed()) {
      return cmd_eval(eval_args, resolve_config(eval_args), eval_data, eval_fit, eval_csv);
    }
    if (experiment->parsed()) {
      ExperimentConfig cfg = resolve_config(exp_args);
      cfg.validate();
      return cmd_experiment(cfg, full);
    }
    if (gradcheck->parsed()) {
      return cmd_gradcheck(gc_seed, gc_instances);
    }
  } catch (const Error& e) {
    json err;
    err["error"] = e.code();
    err["message"] = e.what();
    std::cerr << err.dump() << "\n";
    return 1;
  } catch (const std::exception& e) {
    json err;
    err["error"] = "InternalError";
    err["message"] = e.what();
    std::cerr << err.dump() << "\n";
    return 1;
  }
  return 2;
}
