#ifndef GSCALEI_SCM_HPP_
#define GSCALEI_SCM_HPP_

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "gscalei/dag.hpp"
#include "gscalei/rng.hpp"

namespace gscalei {

/// One of the 2n+1 data-generating environments: the observational one or the
/// m-th environment of the first/second interventional set.
struct EnvironmentId {
  enum class Kind { obs, first, second };
  Kind kind = Kind::obs;
  int m = -1;  // environment index in [0, n) for interventional kinds

  static EnvironmentId observational() { return {Kind::obs, -1}; }
  static EnvironmentId first_intervention(int m) { return {Kind::first, m}; }
  static EnvironmentId second_intervention(int m) { return {Kind::second, m}; }

  bool is_observational() const { return kind == Kind::obs; }

  /// Stable small integer used for sub-stream derivation.
  std::uint64_t stream_code() const {
    switch (kind) {
      case Kind::obs:
        return 0;
      case Kind::first:
        return 1 + 2 * static_cast<std::uint64_t>(m);
      default:
        return 2 + 2 * static_cast<std::uint64_t>(m);
    }
  }
};

/// Additive-noise SCM whose mechanisms are square roots of positive-definite
/// quadratic forms of the parents, with zero-mean Gaussian noise. Each node
/// carries an observational noise variance plus one variance for each of its
/// two hard intervention mechanisms. targets_1/targets_2 map environment
/// index m to the node intervened in the m-th environment of each set.
struct QuadraticScm {
  Dag dag;
  std::vector<Eigen::MatrixXd> quad;  // quad[i]: |Pa(i)| x |Pa(i)|; 0x0 for roots
  Eigen::VectorXd noise_var;          // sigma_i^2
  Eigen::VectorXd int_var_1;          // first hard intervention variance per node
  Eigen::VectorXd int_var_2;          // second hard intervention variance per node
  std::vector<int> targets_1;         // environment m -> intervened node
  std::vector<int> targets_2;

  int n() const { return dag.n; }

  /// Node intervened under `env`, or -1 for the observational environment.
  int intervened_node(EnvironmentId env) const;

  /// Variance governing node `i`'s exogenous term under `env`.
  double node_variance(int i, EnvironmentId env) const;

  /// Mechanism value f_i(z_Pa(i)) = sqrt(z_Pa^T A_i z_Pa); 0 for roots.
  double mechanism(int i, const Eigen::VectorXd& z) const;

  void validate() const;  // throws std::invalid_argument on broken invariants
};

/// Draws mechanisms for `dag`: per non-root node, A_i = B_i^T B_i with B_i
/// entries iid Unif[0,1] (redrawn if numerically singular); noise variances
/// Unif[0.5, 1.5]; intervention variances sigma^2+1 and sigma^2+2. Both target
/// maps default to the identity. Draw order per node: B_i row-major, then the
/// node's noise variance.
QuadraticScm sample_mechanisms(const Dag& dag, Rng& rng);

/// Ancestral sampling; returns n_s x n (rows are samples). Under an
/// interventional environment the intervened node is severed from its parents
/// and drawn from the corresponding intervention variance. Draw order: samples
/// outer, nodes in topo order inner.
Eigen::MatrixXd sample_latent(const QuadraticScm& scm, EnvironmentId env, int n_s, Rng& rng);

/// Exact log joint density of z under `env`.
double log_density(const QuadraticScm& scm, EnvironmentId env, const Eigen::VectorXd& z);

/// Exact score grad_z log p_env(z) in closed form. Throws
/// SingularQuadraticForm if a required mechanism value is below 1e-12 (the
/// square root is non-differentiable where the parent vector vanishes).
Eigen::VectorXd latent_score(const QuadraticScm& scm, EnvironmentId env,
                             const Eigen::VectorXd& z);

}  // namespace gscalei

#endif  // GSCALEI_SCM_HPP_
