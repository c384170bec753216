#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "gscalei/errors.hpp"
#include "gscalei/io.hpp"
#include "test_util.hpp"

using namespace gscalei;
using gscalei::testutil::make_instance;

namespace fs = std::filesystem;

namespace {
struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("gscalei_io_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static int& counter() {
    static int c = 0;
    return c;
  }
};
}  // namespace

TEST_CASE("matrix csv round trip is exact") {
  TempDir tmp;
  Rng rng(81);
  Eigen::MatrixXd m(4, 3);
  for (int i = 0; i < 12; ++i) m(i / 3, i % 3) = rng.normal(0.0, 1.0) * 1e-7;
  m(0, 0) = 1.0 / 3.0;
  write_matrix_csv(tmp.path / "m.csv", m);
  const Eigen::MatrixXd back = read_matrix_csv(tmp.path / "m.csv");
  CHECK(back.rows() == 4);
  CHECK(back.cols() == 3);
  CHECK((back - m).cwiseAbs().maxCoeff() == 0.0);  // 17 significant digits round-trip

  write_samples_csv(tmp.path / "s.csv", m, "z");
  const Eigen::MatrixXd samples = read_samples_csv(tmp.path / "s.csv");
  CHECK((samples - m).cwiseAbs().maxCoeff() == 0.0);
  std::ifstream header(tmp.path / "s.csv");
  std::string first;
  std::getline(header, first);
  CHECK(first == "z_1,z_2,z_3");
}

TEST_CASE("matrix csv rejects malformed input") {
  TempDir tmp;
  std::ofstream(tmp.path / "bad.csv") << "1,2\n3,4\n";
  CHECK_THROWS_AS(read_matrix_csv(tmp.path / "bad.csv"), IoError);
  std::ofstream(tmp.path / "ragged.csv") << "# 2 2\n1,2\n3\n";
  CHECK_THROWS_AS(read_matrix_csv(tmp.path / "ragged.csv"), IoError);
  CHECK_THROWS_AS(read_matrix_csv(tmp.path / "missing.csv"), IoError);
}

TEST_CASE("scm json round trip") {
  TempDir tmp;
  auto inst = make_instance(82, 5, 7, 1);
  inst.scm.targets_2 = {2, 0, 1, 4, 3};
  write_scm_json(tmp.path / "scm.json", inst.scm);
  const QuadraticScm back = read_scm_json(tmp.path / "scm.json");
  CHECK(back.n() == 5);
  CHECK(back.dag.edges() == inst.scm.dag.edges());
  CHECK((back.noise_var - inst.scm.noise_var).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.int_var_1 - inst.scm.int_var_1).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.int_var_2 - inst.scm.int_var_2).cwiseAbs().maxCoeff() == 0.0);
  CHECK(back.targets_1 == inst.scm.targets_1);
  CHECK(back.targets_2 == inst.scm.targets_2);
  for (int i = 0; i < 5; ++i)
    if (!inst.scm.dag.is_root(i))
      CHECK((back.quad[i] - inst.scm.quad[i]).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("dag json round trip") {
  TempDir tmp;
  const Dag dag(4, {{}, {0}, {0, 1}, {1}}, {0, 1, 2, 3});
  write_dag_json(tmp.path / "g.json", dag);
  const Dag back = read_dag_json(tmp.path / "g.json");
  CHECK(back.edges() == dag.edges());
  CHECK(back.topo_order == dag.topo_order);
}

TEST_CASE("batch directory round trip withholds latents") {
  TempDir tmp;
  const auto inst = make_instance(83, 3, 6, 15);
  const ScoreDiffBatch batch = oracle_score_diffs(inst.scm, inst.dec, inst.z);
  write_batch_dir(tmp.path / "batch", batch, 42);
  const ScoreDiffBatch back = read_batch_dir(tmp.path / "batch");
  CHECK(back.z_samples.size() == 0);
  CHECK((back.x_samples - batch.x_samples).cwiseAbs().maxCoeff() == 0.0);
  for (int m = 0; m < 3; ++m) {
    CHECK((back.d_obs1[m] - batch.d_obs1[m]).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.d_obs2[m] - batch.d_obs2[m]).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.d_pair[m] - batch.d_pair[m]).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("fit directory round trip") {
  TempDir tmp;
  const auto inst = make_instance(84, 3, 6, 30);
  const ScoreDiffBatch batch = oracle_score_diffs(inst.scm, inst.dec, inst.z);
  GscaleConfig cfg = GscaleConfig::defaults_for(3);
  cfg.steps = 500;
  cfg.reweight_passes = 1;
  const FitResult fit = gscale_i(batch, cfg, true);
  write_fit_dir(tmp.path / "fit", fit);
  const FitResult back = read_fit_dir(tmp.path / "fit");
  CHECK((back.h_star.matrix() - fit.h_star.matrix()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(back.perm == fit.perm);
  CHECK(back.coupling == fit.coupling);
  CHECK(back.coupling_uncertain == fit.coupling_uncertain);
  CHECK((back.d_matrices.d_t - fit.d_matrices.d_t).cwiseAbs().maxCoeff() == 0.0);
  CHECK(back.graph.edges() == fit.graph.edges());
  CHECK(back.loss_trace == fit.loss_trace);
}

TEST_CASE("eval json round trip and results csv rows") {
  TempDir tmp;
  EvalReport report;
  report.l2_loss = 0.034567;
  report.shd = 2;
  report.perm_used = {0, 1, 2};
  report.scale_used = Eigen::Vector3d(0.5, -1.25, 2.0);
  report.runtime_s = 1.5;
  write_eval_json(tmp.path / "eval.json", report);
  const EvalReport back = read_eval_json(tmp.path / "eval.json");
  CHECK(back.l2_loss == report.l2_loss);
  CHECK(back.shd == report.shd);
  CHECK(back.perm_used == report.perm_used);
  CHECK((back.scale_used - report.scale_used).cwiseAbs().maxCoeff() == 0.0);

  CHECK(results_csv_header() == "n,d,graph_seed,l2_loss,shd,error\n");
  CHECK(results_csv_row(5, 25, 7, true, 0.5, 1, "") == "5,25,7,0.5,1,\n");
  CHECK(results_csv_row(5, 25, 7, false, 0.0, 0, "RankCollapse") ==
        "5,25,7,,,RankCollapse\n");
}
