// Python bindings for the core pipeline: synthetic data generation, the
// exact score oracle, encoder fitting, and evaluation metrics. Sampling
// entry points take integer seeds and construct a fresh deterministic stream
// per call.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "gscalei/errors.hpp"
#include "gscalei/experiment.hpp"
#include "gscalei/gscalei.hpp"
#include "gscalei/metrics.hpp"

namespace py = pybind11;
using namespace gscalei;

namespace {

EnvironmentId env_from(const std::string& kind, int m) {
  if (kind == "obs") return EnvironmentId::observational();
  if (kind == "first") return EnvironmentId::first_intervention(m);
  if (kind == "second") return EnvironmentId::second_intervention(m);
  throw std::invalid_argument("environment kind must be obs, first, or second");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Score-based causal representation learning from paired hard interventions";

  py::register_exception<Error>(m, "GscaleiError");

  py::class_<Dag>(m, "Dag")
      .def(py::init<int, std::vector<std::vector<int>>, std::vector<int>>(), py::arg("n"),
           py::arg("parents"), py::arg("topo_order"))
      .def_readonly("n", &Dag::n)
      .def_readonly("parents", &Dag::parents)
      .def_readonly("topo_order", &Dag::topo_order)
      .def("edges", &Dag::edges)
      .def("edge_count", &Dag::edge_count)
      .def("has_edge", &Dag::has_edge);

  py::class_<EnvironmentId>(m, "EnvironmentId")
      .def_static("obs", &EnvironmentId::observational)
      .def_static("first", &EnvironmentId::first_intervention, py::arg("m"))
      .def_static("second", &EnvironmentId::second_intervention, py::arg("m"));

  py::class_<QuadraticScm>(m, "QuadraticScm")
      .def_readonly("dag", &QuadraticScm::dag)
      .def_readonly("quad", &QuadraticScm::quad)
      .def_readonly("noise_var", &QuadraticScm::noise_var)
      .def_readonly("int_var_1", &QuadraticScm::int_var_1)
      .def_readonly("int_var_2", &QuadraticScm::int_var_2)
      .def_readwrite("targets_1", &QuadraticScm::targets_1)
      .def_readwrite("targets_2", &QuadraticScm::targets_2);

  py::class_<DecoderGlm>(m, "DecoderGlm")
      .def(py::init<Eigen::MatrixXd>(), py::arg("matrix"))
      .def_property_readonly("matrix", &DecoderGlm::matrix);

  py::class_<EncoderLinear>(m, "EncoderLinear")
      .def(py::init<Eigen::MatrixXd>(), py::arg("matrix"))
      .def_property_readonly("matrix", &EncoderLinear::matrix);

  py::class_<ScoreDiffBatch>(m, "ScoreDiffBatch")
      .def_readonly("x_samples", &ScoreDiffBatch::x_samples)
      .def_readonly("z_samples", &ScoreDiffBatch::z_samples)
      .def_readonly("d_obs1", &ScoreDiffBatch::d_obs1)
      .def_readonly("d_obs2", &ScoreDiffBatch::d_obs2)
      .def_readonly("d_pair", &ScoreDiffBatch::d_pair);

  py::class_<ScoreChangeMatrices>(m, "ScoreChangeMatrices")
      .def_readonly("d_t", &ScoreChangeMatrices::d_t)
      .def_readonly("d", &ScoreChangeMatrices::d)
      .def_readonly("d_tilde", &ScoreChangeMatrices::d_tilde);

  py::class_<GscaleConfig>(m, "GscaleConfig")
      .def(py::init<>())
      .def_static("defaults_for", &GscaleConfig::defaults_for, py::arg("n"))
      .def_readwrite("lambda1", &GscaleConfig::lambda1)
      .def_readwrite("lambda2", &GscaleConfig::lambda2)
      .def_readwrite("lr", &GscaleConfig::lr)
      .def_readwrite("steps", &GscaleConfig::steps)
      .def_readwrite("lambda_g", &GscaleConfig::lambda_g)
      .def_readwrite("eps_support", &GscaleConfig::eps_support)
      .def_readwrite("rmsprop_decay", &GscaleConfig::rmsprop_decay)
      .def_readwrite("rmsprop_eps", &GscaleConfig::rmsprop_eps)
      .def_readwrite("lr_decay", &GscaleConfig::lr_decay)
      .def_readwrite("reweight_passes", &GscaleConfig::reweight_passes)
      .def_readwrite("reweight_floor", &GscaleConfig::reweight_floor)
      .def_readwrite("seed", &GscaleConfig::seed);

  py::class_<FitResult>(m, "FitResult")
      .def_readonly("h_star", &FitResult::h_star)
      .def_readonly("perm", &FitResult::perm)
      .def_readonly("d_matrices", &FitResult::d_matrices)
      .def_readonly("loss_trace", &FitResult::loss_trace)
      .def_readonly("graph", &FitResult::graph)
      .def_readonly("coupling", &FitResult::coupling)
      .def_readonly("coupling_uncertain", &FitResult::coupling_uncertain);

  m.def(
      "sample_er_dag",
      [](int n, double density, std::uint64_t seed) {
        Rng rng(seed);
        return sample_er_dag(n, density, rng);
      },
      py::arg("n"), py::arg("density"), py::arg("seed"));

  m.def(
      "sample_mechanisms",
      [](const Dag& dag, std::uint64_t seed) {
        Rng rng(seed);
        return sample_mechanisms(dag, rng);
      },
      py::arg("dag"), py::arg("seed"));

  m.def(
      "sample_latent",
      [](const QuadraticScm& scm, const std::string& env, int m, int n_s,
         std::uint64_t seed) {
        Rng rng(seed);
        return sample_latent(scm, env_from(env, m), n_s, rng);
      },
      py::arg("scm"), py::arg("env"), py::arg("m"), py::arg("n_s"), py::arg("seed"));

  m.def(
      "log_density",
      [](const QuadraticScm& scm, const std::string& env, int m, const Eigen::VectorXd& z) {
        return log_density(scm, env_from(env, m), z);
      },
      py::arg("scm"), py::arg("env"), py::arg("m"), py::arg("z"));

  m.def(
      "latent_score",
      [](const QuadraticScm& scm, const std::string& env, int m, const Eigen::VectorXd& z) {
        return latent_score(scm, env_from(env, m), z);
      },
      py::arg("scm"), py::arg("env"), py::arg("m"), py::arg("z"));

  m.def(
      "sample_decoder",
      [](int n, int d, std::uint64_t seed) {
        Rng rng(seed);
        return sample_decoder(n, d, rng);
      },
      py::arg("n"), py::arg("d"), py::arg("seed"));

  m.def("decode", &decode, py::arg("decoder"), py::arg("z"));
  m.def("decoder_jacobian", &decoder_jacobian, py::arg("decoder"), py::arg("z"));
  m.def("observed_score_diff", &observed_score_diff, py::arg("decoder"), py::arg("z"),
        py::arg("latent_diff"));
  m.def("encode", &encode, py::arg("encoder"), py::arg("x"));
  m.def("encoder_inverse", &encoder_inverse, py::arg("encoder"), py::arg("zhat"));
  m.def("pseudo_inverse", &pseudo_inverse, py::arg("matrix"));

  m.def("oracle_score_diffs", &oracle_score_diffs, py::arg("scm"), py::arg("decoder"),
        py::arg("z_samples"));
  m.def("score_change_matrices",
        py::overload_cast<const EncoderLinear&, const ScoreDiffBatch&>(
            &score_change_matrices),
        py::arg("encoder"), py::arg("batch"));

  m.def("objective", &objective, py::arg("encoder"), py::arg("batch"), py::arg("config"));
  m.def("objective_gradient", &objective_gradient, py::arg("encoder"), py::arg("batch"),
        py::arg("config"));
  m.def(
      "fit_encoder",
      [](const ScoreDiffBatch& batch, const GscaleConfig& cfg) {
        return fit_encoder(batch, cfg);
      },
      py::arg("batch"), py::arg("config"));
  m.def("gscale_i", &gscale_i, py::arg("batch"), py::arg("config"), py::arg("coupled"),
        py::arg("allow_large_search") = false);
  m.def("align_permutation", &align_permutation, py::arg("matrices"));
  m.def("recover_graph", &recover_graph, py::arg("matrices"), py::arg("perm"),
        py::arg("config"), py::arg("mode") = GraphMode::triangular);

  py::enum_<GraphMode>(m, "GraphMode")
      .value("triangular", GraphMode::triangular)
      .value("full", GraphMode::full);

  m.def(
      "normalized_l2",
      [](const Eigen::MatrixXd& z, const Eigen::MatrixXd& zhat, const std::vector<int>& perm) {
        const NormalizedL2 result = normalized_l2(z, zhat, perm);
        return py::make_tuple(result.loss, result.scales);
      },
      py::arg("z"), py::arg("zhat"), py::arg("perm"));
  m.def("shd", &shd, py::arg("truth"), py::arg("estimate"), py::arg("perm"));

  m.def(
      "gradient_audit",
      [](int instances, std::uint64_t seed) {
        const GradCheckResult result = gradient_audit(instances, seed);
        return py::make_tuple(result.max_rel_error, result.instances);
      },
      py::arg("instances") = 20, py::arg("seed") = 7);

  m.def("derive_stream", &derive_stream, py::arg("seed"), py::arg("tag"));
}
