#ifndef GSCALEI_SCORES_HPP_
#define GSCALEI_SCORES_HPP_

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <vector>

#include "gscalei/scm.hpp"
#include "gscalei/transform.hpp"

namespace gscalei {

/// Observed-space score differences for all three environment pairings,
/// evaluated at the same observational sample points. Matrices are n_s x d
/// with one row per sample; index m runs over environments.
///
/// z_samples holds the generating latents for oracle-side use (evaluation,
/// tests). The fitting code consumes only x_samples and the difference
/// families, and z_samples is excluded from batch serialization.
struct ScoreDiffBatch {
  Eigen::MatrixXd x_samples;  // n_s x d
  Eigen::MatrixXd z_samples;  // n_s x n; may be empty (0 x 0) for loaded batches
  std::vector<Eigen::MatrixXd> d_obs1;  // (s_X - s_X^m)(x_k)
  std::vector<Eigen::MatrixXd> d_obs2;  // (s_X - stilde_X^m)(x_k)
  std::vector<Eigen::MatrixXd> d_pair;  // (s_X^m - stilde_X^m)(x_k)

  int n() const { return static_cast<int>(d_obs1.size()); }
  int d() const { return static_cast<int>(x_samples.cols()); }
  int n_samples() const { return static_cast<int>(x_samples.rows()); }
};

/// The n x n score-change matrices: entrywise means of absolute transported
/// score differences under a candidate encoder. All entries nonnegative.
struct ScoreChangeMatrices {
  Eigen::MatrixXd d_t;      // from the between-interventions family
  Eigen::MatrixXd d;        // from the obs-vs-first family
  Eigen::MatrixXd d_tilde;  // from the obs-vs-second family
};

/// Transported difference families in candidate-latent space, n_s x n per
/// environment.
struct TransportedDiffs {
  std::vector<Eigen::MatrixXd> obs1;
  std::vector<Eigen::MatrixXd> obs2;
  std::vector<Eigen::MatrixXd> pair;
};

/// Pluggable source of observed-space score differences. Implementations must
/// be deterministic: repeated calls with the same arguments return identical
/// values.
class ScoreDiffEstimator {
 public:
  enum class Pair { obs_vs_first, obs_vs_second, first_vs_second };

  virtual ~ScoreDiffEstimator() = default;
  /// n_s x d difference of observed-space scores for the given pairing,
  /// evaluated at the batch's observational sample points.
  virtual Eigen::MatrixXd score_diffs(Pair pair, int m) const = 0;
};

/// Exact score differences from the known SCM and decoder: latent score
/// differences pushed through [J_g(z)^dagger]^T at each sample.
class OracleScoreDiffs : public ScoreDiffEstimator {
 public:
  OracleScoreDiffs(const QuadraticScm& scm, const DecoderGlm& dec,
                   Eigen::MatrixXd z_samples);

  Eigen::MatrixXd score_diffs(Pair pair, int m) const override;
  const Eigen::MatrixXd& z_samples() const { return z_; }

 private:
  const QuadraticScm& scm_;
  const DecoderGlm& dec_;
  Eigen::MatrixXd z_;
  std::vector<Eigen::MatrixXd> pinv_t_;  // [J_g(z_k)^dagger]^T per sample
};

/// Oracle plus iid Normal(0, tau^2) noise on the two observational families;
/// the between-interventions family is their difference, so the telescoping
/// identity holds for noised batches as well. Noise streams are derived from
/// (seed, pair, m), making every call reproducible.
class NoisedScoreDiffs : public ScoreDiffEstimator {
 public:
  NoisedScoreDiffs(const OracleScoreDiffs& oracle, double tau, std::uint64_t seed);

  Eigen::MatrixXd score_diffs(Pair pair, int m) const override;

 private:
  const OracleScoreDiffs& oracle_;
  double tau_;
  std::uint64_t seed_;
};

/// Assembles a batch by querying the estimator for every family and
/// environment. x_samples is decode(z_k) when z is supplied.
ScoreDiffBatch build_score_diff_batch(Eigen::MatrixXd x_samples, Eigen::MatrixXd z_samples,
                                      int n, const ScoreDiffEstimator& estimator);

/// Convenience path: exact oracle batch from (scm, decoder, latent samples).
ScoreDiffBatch oracle_score_diffs(const QuadraticScm& scm, const DecoderGlm& dec,
                                  const Eigen::MatrixXd& z_samples);

/// Transports all three families to candidate-latent space under `enc`
/// (left-multiplication by encoder_inverse_jacobian(enc, zhat_k)^T per sample).
TransportedDiffs transport_to_candidate(const EncoderLinear& enc,
                                        const ScoreDiffBatch& batch);

/// Entrywise means of absolute transported differences.
ScoreChangeMatrices score_change_matrices(const EncoderLinear& enc,
                                          const ScoreDiffBatch& batch);
ScoreChangeMatrices score_change_matrices(const TransportedDiffs& transported);

/// Relabels the second environment set by `pi` (the environment previously
/// indexed m becomes pi[m]) and rebuilds the between-interventions family via
/// the telescoping identity.
ScoreDiffBatch relabel_second_environments(const ScoreDiffBatch& batch,
                                           const std::vector<int>& pi);

}  // namespace gscalei

#endif  // GSCALEI_SCORES_HPP_
