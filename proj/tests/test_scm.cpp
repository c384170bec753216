#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <numbers>

#include "gscalei/errors.hpp"
#include "gscalei/scm.hpp"
#include "test_util.hpp"

using namespace gscalei;
using gscalei::testutil::central_gradient;
using gscalei::testutil::make_instance;
using gscalei::testutil::safe_probe;

namespace {
QuadraticScm chain2_scm(double a = 1.0) {
  // 0 -> 1 with A_1 = [a], all variances 1 (intervention vars offset as usual).
  QuadraticScm scm;
  scm.dag = Dag(2, {{}, {0}}, {0, 1});
  scm.quad = {Eigen::MatrixXd(0, 0), Eigen::MatrixXd::Constant(1, 1, a)};
  scm.noise_var = Eigen::Vector2d(1.0, 1.0);
  scm.int_var_1 = Eigen::Vector2d(2.0, 2.0);
  scm.int_var_2 = Eigen::Vector2d(3.0, 3.0);
  scm.targets_1 = {0, 1};
  scm.targets_2 = {0, 1};
  return scm;
}

QuadraticScm single_node_scm(double noise_var = 1.0) {
  QuadraticScm scm;
  scm.dag = Dag(1, {{}}, {0});
  scm.quad = {Eigen::MatrixXd(0, 0)};
  scm.noise_var = Eigen::VectorXd::Constant(1, noise_var);
  scm.int_var_1 = Eigen::VectorXd::Constant(1, noise_var + 1.0);
  scm.int_var_2 = Eigen::VectorXd::Constant(1, noise_var + 2.0);
  scm.targets_1 = {0};
  scm.targets_2 = {0};
  return scm;
}
}  // namespace

TEST_CASE("sampled mechanisms satisfy the documented invariants") {
  Rng rng(91);
  for (int trial = 0; trial < 20; ++trial) {
    const Dag dag = sample_er_dag(5, 0.6, rng);
    Rng mech(rng.next_u64());
    const QuadraticScm scm = sample_mechanisms(dag, mech);
    scm.validate();
    for (int i = 0; i < 5; ++i) {
      if (dag.is_root(i)) {
        CHECK(scm.quad[i].size() == 0);
      } else {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(scm.quad[i]);
        CHECK(es.eigenvalues().minCoeff() > 0.0);
      }
      CHECK(scm.noise_var[i] >= 0.5);
      CHECK(scm.noise_var[i] <= 1.5);
      CHECK(scm.int_var_1[i] == scm.noise_var[i] + 1.0);
      CHECK(scm.int_var_2[i] == scm.noise_var[i] + 2.0);
    }
  }
}

TEST_CASE("edgeless dag yields mechanism-free scm") {
  Rng rng(3);
  const Dag dag = sample_er_dag(3, 0.0, rng);
  const QuadraticScm scm = sample_mechanisms(dag, rng);
  for (int i = 0; i < 3; ++i) CHECK(scm.quad[i].size() == 0);
}

TEST_CASE("observational sampling of a single root is standard normal") {
  const QuadraticScm scm = single_node_scm();
  Rng rng(11);
  const Eigen::MatrixXd z = sample_latent(scm, EnvironmentId::observational(), 100000, rng);
  CHECK(std::abs(z.col(0).mean()) < 0.05);
  const double var = z.col(0).array().square().mean();
  CHECK(std::abs(var - 1.0) < 0.05);
}

TEST_CASE("hard intervention severs the parent edge") {
  const QuadraticScm scm = chain2_scm();
  Rng rng(12);
  const Eigen::MatrixXd z =
      sample_latent(scm, EnvironmentId::first_intervention(1), 100000, rng);
  const Eigen::ArrayXd a = z.col(0).array() - z.col(0).mean();
  const Eigen::ArrayXd b = z.col(1).array() - z.col(1).mean();
  const double corr = (a * b).mean() / std::sqrt(a.square().mean() * b.square().mean());
  CHECK(std::abs(corr) < 0.02);
}

TEST_CASE("chain mechanism has half-normal mean") {
  const QuadraticScm scm = chain2_scm();
  Rng rng(13);
  const Eigen::MatrixXd z = sample_latent(scm, EnvironmentId::observational(), 100000, rng);
  // f_1(z_0) = |z_0|, so E[Z_1] = E|Z_0| = sqrt(2/pi).
  CHECK(std::abs(z.col(1).mean() - std::sqrt(2.0 / std::numbers::pi)) < 0.02);
}

TEST_CASE("log density closed-form values") {
  const QuadraticScm single = single_node_scm();
  CHECK(log_density(single, EnvironmentId::observational(), Eigen::VectorXd::Zero(1)) ==
        doctest::Approx(-0.5 * std::log(2.0 * std::numbers::pi)).epsilon(1e-12));

  const QuadraticScm chain = chain2_scm();
  CHECK(log_density(chain, EnvironmentId::observational(), Eigen::Vector2d(1.0, 2.0)) ==
        doctest::Approx(-std::log(2.0 * std::numbers::pi) - 1.0).epsilon(1e-12));
}

TEST_CASE("log density differs from interventional only through the target's term") {
  const auto inst = make_instance(21, 5, 5, 1);
  Rng rng(22);
  for (int m = 0; m < 5; ++m) {
    const auto env = EnvironmentId::first_intervention(m);
    const Eigen::VectorXd z = safe_probe(inst.scm, rng);
    const int target = inst.scm.targets_1[m];
    // Remove both environments' target terms by hand; the remainders agree.
    const double obs_term =
        log_density(inst.scm, EnvironmentId::observational(), z) -
        [&] {
          const double res = z[target] - inst.scm.mechanism(target, z);
          const double v = inst.scm.noise_var[target];
          return -0.5 * (std::log(2.0 * std::numbers::pi * v) + res * res / v);
        }();
    const double env_term = log_density(inst.scm, env, z) -
                            [&] {
                              const double v = inst.scm.int_var_1[target];
                              return -0.5 * (std::log(2.0 * std::numbers::pi * v) +
                                             z[target] * z[target] / v);
                            }();
    CHECK(obs_term == doctest::Approx(env_term).epsilon(1e-12));
  }
}

TEST_CASE("latent score closed-form values") {
  const QuadraticScm single = single_node_scm();
  Eigen::VectorXd z1(1);
  z1 << 1.5;
  CHECK(latent_score(single, EnvironmentId::observational(), z1)[0] ==
        doctest::Approx(-1.5).epsilon(1e-12));

  const QuadraticScm chain = chain2_scm();
  const Eigen::VectorXd s =
      latent_score(chain, EnvironmentId::observational(), Eigen::Vector2d(1.0, 2.0));
  CHECK(s[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(s[1] == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("latent score matches finite differences of log density") {
  Rng rng(31);
  double worst = 0.0;
  int checked = 0;
  for (int trial = 0; trial < 10; ++trial) {
    const auto inst = make_instance(100 + trial, 2 + trial % 5, 8, 1);
    for (int probe = 0; probe < 10; ++probe) {
      const int n = inst.scm.n();
      EnvironmentId env = EnvironmentId::observational();
      if (probe % 3 == 1) env = EnvironmentId::first_intervention(probe % n);
      if (probe % 3 == 2) env = EnvironmentId::second_intervention(probe % n);
      const Eigen::VectorXd z = safe_probe(inst.scm, rng);
      const Eigen::VectorXd analytic = latent_score(inst.scm, env, z);
      const Eigen::VectorXd numeric = central_gradient(
          [&](const Eigen::VectorXd& p) { return log_density(inst.scm, env, p); }, z, 1e-5);
      worst = std::max(worst, (analytic - numeric).cwiseAbs().maxCoeff());
      ++checked;
    }
  }
  CHECK(checked == 100);
  CHECK(worst < 1e-6);
}

TEST_CASE("score raises on the quadratic-form null set") {
  const QuadraticScm chain = chain2_scm();
  CHECK_THROWS_AS(
      latent_score(chain, EnvironmentId::observational(), Eigen::Vector2d(0.0, 1.0)),
      SingularQuadraticForm);
  // log_density stays finite there.
  CHECK(std::isfinite(
      log_density(chain, EnvironmentId::observational(), Eigen::Vector2d(0.0, 1.0))));
}

TEST_CASE("modularity: scores agree off the intervened closure") {
  Rng rng(41);
  const auto inst = make_instance(55, 6, 6, 1);
  for (int m = 0; m < 6; ++m) {
    const Eigen::VectorXd z = safe_probe(inst.scm, rng);
    const Eigen::VectorXd s_obs = latent_score(inst.scm, EnvironmentId::observational(), z);
    const Eigen::VectorXd s_env =
        latent_score(inst.scm, EnvironmentId::first_intervention(m), z);
    const int target = inst.scm.targets_1[m];
    for (int i = 0; i < 6; ++i) {
      const bool in_closure = i == target || inst.dag.has_edge(i, target);
      if (!in_closure) CHECK(s_obs[i] == s_env[i]);
    }
  }
}

namespace {
/// Empirical mean of |[s_a - s_b]_i| over observational samples.
Eigen::VectorXd mean_abs_score_diff(const QuadraticScm& scm, EnvironmentId env_a,
                                    EnvironmentId env_b, const Eigen::MatrixXd& z) {
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(scm.n());
  for (Eigen::Index k = 0; k < z.rows(); ++k) {
    const Eigen::VectorXd zk = z.row(k).transpose();
    acc += (latent_score(scm, env_a, zk) - latent_score(scm, env_b, zk)).cwiseAbs();
  }
  return acc / static_cast<double>(z.rows());
}
}  // namespace

TEST_CASE("score-change support matches the parent closure of the target") {
  for (int trial = 0; trial < 3; ++trial) {
    const auto inst = make_instance(200 + trial, 4 + trial, 8, 10000);
    const int n = inst.scm.n();
    for (int m = 0; m < n; ++m) {
      const Eigen::VectorXd diff = mean_abs_score_diff(
          inst.scm, EnvironmentId::observational(), EnvironmentId::first_intervention(m),
          inst.z);
      const int target = inst.scm.targets_1[m];
      for (int i = 0; i < n; ++i) {
        const bool in_closure = i == target || inst.dag.has_edge(i, target);
        if (in_closure)
          CHECK(diff[i] > 1e-3);
        else
          CHECK(diff[i] < 1e-10);
      }
    }
  }
}

TEST_CASE("coupled interventions differ exactly at the target coordinate") {
  const auto inst = make_instance(300, 5, 8, 10000);
  for (int m = 0; m < 5; ++m) {
    const Eigen::VectorXd diff =
        mean_abs_score_diff(inst.scm, EnvironmentId::first_intervention(m),
                            EnvironmentId::second_intervention(m), inst.z);
    for (int i = 0; i < 5; ++i) {
      if (i == inst.scm.targets_1[m])
        CHECK(diff[i] > 1e-3);
      else
        CHECK(diff[i] < 1e-10);
    }
  }
}

TEST_CASE("uncoupled interventions differ on the union of parent closures") {
  auto inst = make_instance(301, 5, 8, 10000);
  inst.scm.targets_2 = {1, 2, 3, 4, 0};  // mismatched second set
  for (int m = 0; m < 5; ++m) {
    const int t1 = inst.scm.targets_1[m];
    const int t2 = inst.scm.targets_2[m];
    REQUIRE(t1 != t2);
    const Eigen::VectorXd diff =
        mean_abs_score_diff(inst.scm, EnvironmentId::first_intervention(m),
                            EnvironmentId::second_intervention(m), inst.z);
    for (int i = 0; i < 5; ++i) {
      const bool in_union = i == t1 || i == t2 || inst.dag.has_edge(i, t1) ||
                            inst.dag.has_edge(i, t2);
      if (in_union)
        CHECK(diff[i] > 1e-3);
      else
        CHECK(diff[i] < 1e-10);
    }
  }
}

TEST_CASE("latent sampling is reproducible per stream") {
  const auto inst = make_instance(70, 4, 6, 1);
  Rng a(999), b(999);
  const Eigen::MatrixXd za = sample_latent(inst.scm, EnvironmentId::observational(), 50, a);
  const Eigen::MatrixXd zb = sample_latent(inst.scm, EnvironmentId::observational(), 50, b);
  CHECK((za - zb).cwiseAbs().maxCoeff() == 0.0);
}
