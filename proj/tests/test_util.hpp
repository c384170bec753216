#ifndef GSCALEI_TESTS_TEST_UTIL_HPP_
#define GSCALEI_TESTS_TEST_UTIL_HPP_

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cstdint>
#include <limits>
#include <stdexcept>

#include "gscalei/scm.hpp"
#include "gscalei/scores.hpp"
#include "gscalei/transform.hpp"

namespace gscalei::testutil {

struct Instance {
  Dag dag;
  QuadraticScm scm;
  DecoderGlm dec;
  Eigen::MatrixXd z;  // observational samples, n_s x n
};

/// Fixture instance. Mechanism draws are redrawn until every quadratic form
/// has smallest eigenvalue >= 0.01: near-degenerate mechanisms put most of
/// the probability mass next to the score's null set and make null-set-aware
/// probing hopeless, which the scm test-fixture rules exclude.
inline Instance make_instance(std::uint64_t seed, int n, int d, int n_s,
                              double density = 0.5) {
  Rng dag_rng(derive_stream(seed, stream_tag::kDag));
  Rng dec_rng(derive_stream(seed, stream_tag::kDecoder));
  Rng z_rng(derive_stream(seed, stream_tag::kLatentStreamBase));
  Instance inst{sample_er_dag(n, density, dag_rng), QuadraticScm{}, sample_decoder(n, d, dec_rng),
                Eigen::MatrixXd{}};
  for (std::uint64_t attempt = 0;; ++attempt) {
    Rng mech_rng(derive_stream(derive_stream(seed, stream_tag::kMechanisms), attempt));
    inst.scm = sample_mechanisms(inst.dag, mech_rng);
    double min_eig = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i)
      if (!inst.dag.is_root(i))
        min_eig = std::min(min_eig,
                           Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(inst.scm.quad[i])
                               .eigenvalues()
                               .minCoeff());
    if (min_eig >= 0.01 || attempt >= 200) break;
  }
  inst.z = sample_latent(inst.scm, EnvironmentId::observational(), n_s, z_rng);
  return inst;
}

/// Smallest mechanism value over non-root nodes at z; +inf when all roots.
inline double min_mechanism(const QuadraticScm& scm, const Eigen::VectorXd& z) {
  double lo = std::numeric_limits<double>::infinity();
  for (int i = 0; i < scm.n(); ++i)
    if (!scm.dag.is_root(i)) lo = std::min(lo, scm.mechanism(i, z));
  return lo;
}

/// Probe point away from the quadratic-form null set (all non-root mechanism
/// values above 0.1), per the scm module's test-fixture rule.
inline Eigen::VectorXd safe_probe(const QuadraticScm& scm, Rng& rng, double scale = 1.5) {
  for (int attempt = 0; attempt < 1000; ++attempt) {
    Eigen::VectorXd z(scm.n());
    for (int i = 0; i < scm.n(); ++i) z[i] = rng.normal(0.0, scale);
    if (min_mechanism(scm, z) > 0.1) return z;
  }
  throw std::runtime_error("safe_probe: could not find a probe away from the null set");
}

/// Central finite difference of a scalar function of a vector.
template <typename F>
Eigen::VectorXd central_gradient(F&& f, const Eigen::VectorXd& z, double step) {
  Eigen::VectorXd grad(z.size());
  Eigen::VectorXd probe = z;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + step;
    const double up = f(probe);
    probe[i] = orig - step;
    const double dn = f(probe);
    probe[i] = orig;
    grad[i] = (up - dn) / (2.0 * step);
  }
  return grad;
}

inline std::vector<int> identity_perm(int n) {
  std::vector<int> p(n);
  for (int i = 0; i < n; ++i) p[i] = i;
  return p;
}

}  // namespace gscalei::testutil

#endif  // GSCALEI_TESTS_TEST_UTIL_HPP_
