#include "gscalei/scm.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "gscalei/errors.hpp"

namespace gscalei {

namespace {
constexpr double kSingularTol = 1e-12;

double gaussian_log_pdf(double x, double variance) {
  return -0.5 * (std::log(2.0 * std::numbers::pi * variance) + x * x / variance);
}

Eigen::VectorXd gather(const Eigen::VectorXd& z, const std::vector<int>& idx) {
  Eigen::VectorXd out(idx.size());
  for (std::size_t t = 0; t < idx.size(); ++t) out[t] = z[idx[t]];
  return out;
}
}  // namespace

int QuadraticScm::intervened_node(EnvironmentId env) const {
  switch (env.kind) {
    case EnvironmentId::Kind::obs:
      return -1;
    case EnvironmentId::Kind::first:
      return targets_1.at(env.m);
    default:
      return targets_2.at(env.m);
  }
}

double QuadraticScm::node_variance(int i, EnvironmentId env) const {
  if (i != intervened_node(env)) return noise_var[i];
  return env.kind == EnvironmentId::Kind::first ? int_var_1[i] : int_var_2[i];
}

double QuadraticScm::mechanism(int i, const Eigen::VectorXd& z) const {
  const auto& pa = dag.parents[i];
  if (pa.empty()) return 0.0;
  const Eigen::VectorXd v = gather(z, pa);
  return std::sqrt(v.dot(quad[i] * v));
}

void QuadraticScm::validate() const {
  const int nn = dag.n;
  if (static_cast<int>(quad.size()) != nn || noise_var.size() != nn ||
      int_var_1.size() != nn || int_var_2.size() != nn)
    throw std::invalid_argument("QuadraticScm: per-node field size mismatch");
  auto check_perm = [nn](const std::vector<int>& t, const char* name) {
    if (static_cast<int>(t.size()) != nn)
      throw std::invalid_argument(std::string("QuadraticScm: ") + name + " size mismatch");
    std::vector<bool> seen(nn, false);
    for (int v : t) {
      if (v < 0 || v >= nn || seen[v])
        throw std::invalid_argument(std::string("QuadraticScm: ") + name +
                                    " is not a permutation of [n]");
      seen[v] = true;
    }
  };
  check_perm(targets_1, "targets_1");
  check_perm(targets_2, "targets_2");
  for (int i = 0; i < nn; ++i) {
    const int k = static_cast<int>(dag.parents[i].size());
    if (quad[i].rows() != k || quad[i].cols() != k)
      throw std::invalid_argument("QuadraticScm: quad[" + std::to_string(i) +
                                  "] shape does not match parent count");
    if (k > 0) {
      if (!quad[i].isApprox(quad[i].transpose(), 1e-12))
        throw std::invalid_argument("QuadraticScm: quad matrix not symmetric");
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(quad[i]);
      if (es.eigenvalues().minCoeff() <= 0.0)
        throw std::invalid_argument("QuadraticScm: quad matrix not positive definite");
    }
    if (noise_var[i] <= 0.0 || int_var_1[i] <= 0.0 || int_var_2[i] <= 0.0)
      throw std::invalid_argument("QuadraticScm: variances must be positive");
  }
}

QuadraticScm sample_mechanisms(const Dag& dag, Rng& rng) {
  QuadraticScm scm;
  scm.dag = dag;
  const int n = dag.n;
  scm.quad.resize(n);
  scm.noise_var.resize(n);
  scm.int_var_1.resize(n);
  scm.int_var_2.resize(n);
  for (int i = 0; i < n; ++i) {
    const int k = static_cast<int>(dag.parents[i].size());
    if (k == 0) {
      scm.quad[i] = Eigen::MatrixXd(0, 0);
    } else {
      for (;;) {
        Eigen::MatrixXd b(k, k);
        for (int r = 0; r < k; ++r)
          for (int c = 0; c < k; ++c) b(r, c) = rng.uniform();
        Eigen::MatrixXd a = b.transpose() * b;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
        if (es.eigenvalues().minCoeff() > kSingularTol) {
          scm.quad[i] = std::move(a);
          break;
        }
      }
    }
    scm.noise_var[i] = rng.uniform(0.5, 1.5);
    scm.int_var_1[i] = scm.noise_var[i] + 1.0;
    scm.int_var_2[i] = scm.noise_var[i] + 2.0;
  }
  scm.targets_1.resize(n);
  scm.targets_2.resize(n);
  for (int i = 0; i < n; ++i) scm.targets_1[i] = scm.targets_2[i] = i;
  return scm;
}

Eigen::MatrixXd sample_latent(const QuadraticScm& scm, EnvironmentId env, int n_s, Rng& rng) {
  if (n_s < 1) throw std::invalid_argument("sample_latent: n_s must be >= 1");
  const int n = scm.n();
  const int intervened = scm.intervened_node(env);
  Eigen::MatrixXd z(n_s, n);
  Eigen::VectorXd row(n);
  for (int k = 0; k < n_s; ++k) {
    for (int node : scm.dag.topo_order) {
      const double sd = std::sqrt(scm.node_variance(node, env));
      if (node == intervened || scm.dag.is_root(node)) {
        row[node] = rng.normal(0.0, sd);
      } else {
        row[node] = scm.mechanism(node, row) + rng.normal(0.0, sd);
      }
    }
    z.row(k) = row;
  }
  return z;
}

double log_density(const QuadraticScm& scm, EnvironmentId env, const Eigen::VectorXd& z) {
  const int intervened = scm.intervened_node(env);
  double total = 0.0;
  for (int i = 0; i < scm.n(); ++i) {
    const double residual = (i == intervened) ? z[i] : z[i] - scm.mechanism(i, z);
    total += gaussian_log_pdf(residual, scm.node_variance(i, env));
  }
  return total;
}

Eigen::VectorXd latent_score(const QuadraticScm& scm, EnvironmentId env,
                             const Eigen::VectorXd& z) {
  const int n = scm.n();
  const int intervened = scm.intervened_node(env);

  // Noise-score terms r_i = -residual_i / variance_i.
  Eigen::VectorXd r(n);
  Eigen::VectorXd score = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < n; ++i) {
    const double residual = (i == intervened) ? z[i] : z[i] - scm.mechanism(i, z);
    r[i] = -residual / scm.node_variance(i, env);
    score[i] = r[i];
  }

  // Chain-rule terms: each non-root, non-intervened node j pushes
  // -(d f_j / d z_i) * r_j onto every parent i.
  for (int j = 0; j < n; ++j) {
    const auto& pa = scm.dag.parents[j];
    if (pa.empty() || j == intervened) continue;
    Eigen::VectorXd v(pa.size());
    for (std::size_t t = 0; t < pa.size(); ++t) v[t] = z[pa[t]];
    const Eigen::VectorXd w = scm.quad[j] * v;
    const double f = std::sqrt(v.dot(w));
    if (f < 1e-12)
      throw SingularQuadraticForm("latent_score: mechanism of node " + std::to_string(j) +
                                  " vanishes at the requested point");
    for (std::size_t t = 0; t < pa.size(); ++t) score[pa[t]] -= (w[t] / f) * r[j];
  }
  return score;
}

}  // namespace gscalei
