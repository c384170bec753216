#include "gscalei/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "gscalei/errors.hpp"
#include "gscalei/io.hpp"
#include "gscalei/metrics.hpp"

namespace gscalei {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json gscale_to_json(const GscaleConfig& g) {
  json out;
  out["lambda1"] = g.lambda1;
  out["lambda2"] = g.lambda2;
  out["lr"] = g.lr;
  out["steps"] = g.steps;
  out["lambda_g"] = g.lambda_g;
  out["eps_support"] = g.eps_support;
  out["rmsprop_decay"] = g.rmsprop_decay;
  out["rmsprop_eps"] = g.rmsprop_eps;
  out["lr_decay"] = g.lr_decay;
  out["reweight_passes"] = g.reweight_passes;
  out["reweight_floor"] = g.reweight_floor;
  out["grad_check"] = g.grad_check;
  out["seed"] = g.seed;
  return out;
}

GscaleConfig gscale_from_json(const json& doc, GscaleConfig base) {
  auto get = [&doc](const char* key, auto fallback) {
    using T = decltype(fallback);
    return doc.contains(key) ? doc.at(key).get<T>() : fallback;
  };
  base.lambda1 = get("lambda1", base.lambda1);
  base.lambda2 = get("lambda2", base.lambda2);
  base.lr = get("lr", base.lr);
  base.steps = get("steps", base.steps);
  base.lambda_g = get("lambda_g", base.lambda_g);
  base.eps_support = get("eps_support", base.eps_support);
  base.rmsprop_decay = get("rmsprop_decay", base.rmsprop_decay);
  base.rmsprop_eps = get("rmsprop_eps", base.rmsprop_eps);
  base.lr_decay = get("lr_decay", base.lr_decay);
  base.reweight_passes = get("reweight_passes", base.reweight_passes);
  base.reweight_floor = get("reweight_floor", base.reweight_floor);
  base.grad_check = get("grad_check", base.grad_check);
  base.seed = get("seed", base.seed);
  return base;
}

std::vector<int> random_permutation(int n, Rng& rng) {
  std::vector<int> p(n);
  std::iota(p.begin(), p.end(), 0);
  // Fisher-Yates with draws from the documented stream.
  for (int i = n - 1; i > 0; --i) {
    const int j = static_cast<int>(rng.uniform() * (i + 1));
    std::swap(p[i], p[std::min(j, i)]);
  }
  return p;
}

double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / v.size();
}

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  return v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

double std_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double mu = mean_of(v);
  double acc = 0.0;
  for (double x : v) acc += (x - mu) * (x - mu);
  return std::sqrt(acc / (v.size() - 1));
}

}  // namespace

void ExperimentConfig::validate() const {
  if (n < 1 || d < n) throw std::invalid_argument("ExperimentConfig: requires 1 <= n <= d");
  if (n_graphs < 1) throw std::invalid_argument("ExperimentConfig: n_graphs must be >= 1");
  if (n_s < 1) throw std::invalid_argument("ExperimentConfig: n_s must be >= 1");
  if (density < 0 || density > 1)
    throw std::invalid_argument("ExperimentConfig: density must be in [0, 1]");
  if (estimator != "oracle" && estimator != "noised")
    throw std::invalid_argument("ExperimentConfig: estimator must be 'oracle' or 'noised'");
  if (tau < 0) throw std::invalid_argument("ExperimentConfig: tau must be >= 0");
  if (!coupled && n > 6 && !allow_large_search)
    throw std::invalid_argument(
        "ExperimentConfig: uncoupled runs require n <= 6 unless allow_large_search is set");
  if (!uncoupled_mismatch.empty()) {
    if (static_cast<int>(uncoupled_mismatch.size()) != n)
      throw std::invalid_argument("ExperimentConfig: uncoupled_mismatch size mismatch");
    std::vector<bool> seen(n, false);
    for (int v : uncoupled_mismatch) {
      if (v < 0 || v >= n || seen[v])
        throw std::invalid_argument("ExperimentConfig: uncoupled_mismatch is not a permutation");
      seen[v] = true;
    }
  }
  gscale.validate();
}

ExperimentConfig ExperimentConfig::from_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw IoError("invalid JSON in " + path.string() + ": " + e.what());
  }
  if (doc.value("schema", std::string()) != "gscalei/config/1")
    throw IoError("config " + path.string() + " missing schema 'gscalei/config/1'");

  ExperimentConfig cfg;
  cfg.n = doc.value("n", cfg.n);
  cfg.d = doc.value("d", cfg.d);
  cfg.n_graphs = doc.value("n_graphs", cfg.n_graphs);
  cfg.n_s = doc.value("n_s", cfg.n_s);
  cfg.density = doc.value("density", cfg.density);
  cfg.coupled = doc.value("coupled", cfg.coupled);
  if (doc.contains("uncoupled_mismatch") && !doc.at("uncoupled_mismatch").is_null())
    cfg.uncoupled_mismatch = doc.at("uncoupled_mismatch").get<std::vector<int>>();
  cfg.allow_large_search = doc.value("allow_large_search", cfg.allow_large_search);
  cfg.estimator = doc.value("estimator", cfg.estimator);
  cfg.tau = doc.value("tau", cfg.tau);
  cfg.gscale = GscaleConfig::defaults_for(cfg.n);
  if (doc.contains("gscale")) {
    cfg.gscale = gscale_from_json(doc.at("gscale"), cfg.gscale);
    cfg.gscale_explicit = true;
  }
  cfg.output_dir = doc.value("output_dir", cfg.output_dir);
  cfg.master_seed = doc.value("master_seed", cfg.master_seed);
  cfg.save_artifacts = doc.value("save_artifacts", cfg.save_artifacts);
  cfg.validate();
  return cfg;
}

std::string ExperimentConfig::to_json() const {
  json doc;
  doc["schema"] = "gscalei/config/1";
  doc["n"] = n;
  doc["d"] = d;
  doc["n_graphs"] = n_graphs;
  doc["n_s"] = n_s;
  doc["density"] = density;
  doc["coupled"] = coupled;
  if (!uncoupled_mismatch.empty()) doc["uncoupled_mismatch"] = uncoupled_mismatch;
  doc["allow_large_search"] = allow_large_search;
  doc["estimator"] = estimator;
  doc["tau"] = tau;
  doc["gscale"] = gscale_to_json(gscale);
  doc["output_dir"] = output_dir;
  doc["master_seed"] = master_seed;
  doc["save_artifacts"] = save_artifacts;
  return doc.dump(2) + "\n";
}

GraphOutcome run_single_graph(const ExperimentConfig& cfg, int graph_index,
                              const fs::path& out_dir) {
  const std::uint64_t graph_seed =
      derive_stream(cfg.master_seed, stream_tag::kGraphBase + graph_index);
  GraphOutcome outcome;
  outcome.graph_seed = graph_seed;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    Rng dag_rng(derive_stream(graph_seed, stream_tag::kDag));
    Rng mech_rng(derive_stream(graph_seed, stream_tag::kMechanisms));
    Rng dec_rng(derive_stream(graph_seed, stream_tag::kDecoder));
    const Dag dag = sample_er_dag(cfg.n, cfg.density, dag_rng);
    QuadraticScm scm = sample_mechanisms(dag, mech_rng);
    if (!cfg.coupled) {
      if (!cfg.uncoupled_mismatch.empty()) {
        scm.targets_2 = cfg.uncoupled_mismatch;
      } else {
        Rng mismatch_rng(derive_stream(graph_seed, stream_tag::kMismatch));
        scm.targets_2 = random_permutation(cfg.n, mismatch_rng);
      }
    }
    const DecoderGlm dec = sample_decoder(cfg.n, cfg.d, dec_rng);

    const auto obs = EnvironmentId::observational();
    Rng z_rng(derive_stream(graph_seed, stream_tag::kLatentStreamBase + obs.stream_code()));
    const Eigen::MatrixXd z = sample_latent(scm, obs, cfg.n_s, z_rng);

    const OracleScoreDiffs oracle(scm, dec, z);
    Eigen::MatrixXd x(z.rows(), cfg.d);
    for (Eigen::Index k = 0; k < z.rows(); ++k)
      x.row(k) = decode(dec, z.row(k).transpose()).transpose();
    ScoreDiffBatch batch;
    if (cfg.estimator == "noised") {
      NoisedScoreDiffs noised(oracle, cfg.tau,
                              derive_stream(graph_seed, stream_tag::kEstimatorNoise));
      batch = build_score_diff_batch(std::move(x), z, cfg.n, noised);
    } else {
      batch = build_score_diff_batch(std::move(x), z, cfg.n, oracle);
    }

    GscaleConfig gcfg = cfg.gscale_explicit ? cfg.gscale : GscaleConfig::defaults_for(cfg.n);
    gcfg.seed = derive_stream(graph_seed, stream_tag::kEncoderInit);
    const FitResult fit = gscale_i(batch, gcfg, cfg.coupled, cfg.allow_large_search);

    Eigen::MatrixXd zhat(z.rows(), cfg.n);
    for (Eigen::Index k = 0; k < z.rows(); ++k)
      zhat.row(k) = encode(fit.h_star, batch.x_samples.row(k).transpose()).transpose();

    // Targets follow generation order in this pipeline (and the uncoupled
    // search restores it), so metrics compare under the identity permutation.
    std::vector<int> identity(cfg.n);
    std::iota(identity.begin(), identity.end(), 0);
    const NormalizedL2 l2 = normalized_l2(z, zhat, identity);
    const int shd_value = shd(dag, fit.graph, identity);

    outcome.ok = true;
    outcome.l2_loss = l2.loss;
    outcome.shd = shd_value;

    if (!out_dir.empty()) {
      fs::create_directories(out_dir);
      write_scm_json(out_dir / "scm.json", scm);
      write_matrix_csv(out_dir / "decoder.csv", dec.matrix());
      write_samples_csv(out_dir / "z_samples.csv", z, "z");
      write_samples_csv(out_dir / "x_samples.csv", batch.x_samples, "x");
      write_fit_dir(out_dir / "fit", fit);
      EvalReport report;
      report.l2_loss = l2.loss;
      report.shd = shd_value;
      report.perm_used = identity;
      report.scale_used = l2.scales;
      report.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                             .count();
      write_eval_json(out_dir / "eval.json", report);
    }
  } catch (const Error& e) {
    outcome.ok = false;
    outcome.error = e.code();
  } catch (const std::exception& e) {
    outcome.ok = false;
    outcome.error = std::string("InternalError: ") + e.what();
  }
  outcome.runtime_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return outcome;
}

AggregateReport run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const fs::path out(cfg.output_dir);
  fs::create_directories(out);
  {
    std::ofstream cfg_out(out / "config.json", std::ios::trunc);
    if (!cfg_out) throw IoError("cannot write " + (out / "config.json").string());
    cfg_out << cfg.to_json();
  }

  std::ofstream results(out / "results.csv", std::ios::trunc);
  std::ofstream timings(out / "timings.csv", std::ios::trunc);
  if (!results || !timings) throw IoError("cannot open result files under " + out.string());
  results << results_csv_header();
  timings << "n,d,graph_seed,runtime_s\n";

  AggregateReport agg;
  const auto t0 = std::chrono::steady_clock::now();
  for (int g = 0; g < cfg.n_graphs; ++g) {
    char name[32];
    std::snprintf(name, sizeof(name), "graph_%03d", g);
    const fs::path graph_dir = cfg.save_artifacts ? out / name : fs::path();
    GraphOutcome outcome = run_single_graph(cfg, g, graph_dir);
    results << results_csv_row(cfg.n, cfg.d, outcome.graph_seed, outcome.ok, outcome.l2_loss,
                               outcome.shd, outcome.error);
    results.flush();
    timings << cfg.n << "," << cfg.d << "," << outcome.graph_seed << ","
            << format_double(outcome.runtime_s) << "\n";
    timings.flush();
    if (!outcome.ok) ++agg.n_failed;
    agg.per_graph.push_back(std::move(outcome));
  }
  agg.total_runtime_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  std::vector<double> l2s, shds;
  for (const auto& o : agg.per_graph)
    if (o.ok) {
      l2s.push_back(o.l2_loss);
      shds.push_back(static_cast<double>(o.shd));
    }
  agg.mean_l2 = mean_of(l2s);
  agg.median_l2 = median_of(l2s);
  agg.std_l2 = std_of(l2s);
  agg.mean_shd = mean_of(shds);
  agg.median_shd = median_of(shds);
  agg.std_shd = std_of(shds);

  json doc;
  doc["schema"] = "gscalei/aggregate/1";
  doc["config"] = json::parse(cfg.to_json());
  doc["n_graphs"] = cfg.n_graphs;
  doc["n_failed"] = agg.n_failed;
  doc["l2_loss"] = {{"mean", agg.mean_l2}, {"median", agg.median_l2}, {"std", agg.std_l2}};
  doc["shd"] = {{"mean", agg.mean_shd}, {"median", agg.median_shd}, {"std", agg.std_shd}};
  doc["total_runtime_s"] = agg.total_runtime_s;
  std::ofstream agg_out(out / "aggregate.json", std::ios::trunc);
  if (!agg_out) throw IoError("cannot write aggregate.json");
  agg_out << doc.dump(2) << "\n";
  return agg;
}

}  // namespace gscalei
