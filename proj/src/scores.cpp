#include "gscalei/scores.hpp"

#include <Eigen/SVD>
#include <stdexcept>

#include "gscalei/errors.hpp"

namespace gscalei {

namespace {

Eigen::VectorXd latent_diff(const QuadraticScm& scm, ScoreDiffEstimator::Pair pair, int m,
                            const Eigen::VectorXd& z) {
  using Pair = ScoreDiffEstimator::Pair;
  const auto obs = EnvironmentId::observational();
  const auto first = EnvironmentId::first_intervention(m);
  const auto second = EnvironmentId::second_intervention(m);
  switch (pair) {
    case Pair::obs_vs_first:
      return latent_score(scm, obs, z) - latent_score(scm, first, z);
    case Pair::obs_vs_second:
      return latent_score(scm, obs, z) - latent_score(scm, second, z);
    default:
      return latent_score(scm, first, z) - latent_score(scm, second, z);
  }
}
}  // namespace

OracleScoreDiffs::OracleScoreDiffs(const QuadraticScm& scm, const DecoderGlm& dec,
                                   Eigen::MatrixXd z_samples)
    : scm_(scm), dec_(dec), z_(std::move(z_samples)) {
  if (z_.cols() != scm.n())
    throw std::invalid_argument("OracleScoreDiffs: z_samples column count != n");
  pinv_t_.reserve(z_.rows());
  for (Eigen::Index k = 0; k < z_.rows(); ++k) {
    const Eigen::MatrixXd jac = decoder_jacobian(dec_, z_.row(k).transpose());
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(jac, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.singularValues().minCoeff() < 1e-12 * svd.singularValues().maxCoeff())
      throw RankDeficientJacobian("oracle: decoder Jacobian is rank deficient at a sample");
    pinv_t_.push_back(svd.matrixU() * svd.singularValues().cwiseInverse().asDiagonal() *
                      svd.matrixV().transpose());
  }
}

Eigen::MatrixXd OracleScoreDiffs::score_diffs(Pair pair, int m) const {
  Eigen::MatrixXd out(z_.rows(), dec_.obs_dim());
  for (Eigen::Index k = 0; k < z_.rows(); ++k) {
    const Eigen::VectorXd diff = latent_diff(scm_, pair, m, z_.row(k).transpose());
    out.row(k) = (pinv_t_[k] * diff).transpose();
  }
  return out;
}

NoisedScoreDiffs::NoisedScoreDiffs(const OracleScoreDiffs& oracle, double tau,
                                   std::uint64_t seed)
    : oracle_(oracle), tau_(tau), seed_(seed) {
  if (tau < 0.0) throw std::invalid_argument("NoisedScoreDiffs: tau must be >= 0");
}

Eigen::MatrixXd NoisedScoreDiffs::score_diffs(Pair pair, int m) const {
  if (pair == Pair::first_vs_second)
    return score_diffs(Pair::obs_vs_second, m) - score_diffs(Pair::obs_vs_first, m);
  Eigen::MatrixXd out = oracle_.score_diffs(pair, m);
  const std::uint64_t kind = pair == Pair::obs_vs_first ? 1 : 2;
  Rng rng(derive_stream(derive_stream(seed_, kind), static_cast<std::uint64_t>(m)));
  for (Eigen::Index r = 0; r < out.rows(); ++r)
    for (Eigen::Index c = 0; c < out.cols(); ++c) out(r, c) += rng.normal(0.0, tau_);
  return out;
}

ScoreDiffBatch build_score_diff_batch(Eigen::MatrixXd x_samples, Eigen::MatrixXd z_samples,
                                      int n, const ScoreDiffEstimator& estimator) {
  ScoreDiffBatch batch;
  batch.x_samples = std::move(x_samples);
  batch.z_samples = std::move(z_samples);
  batch.d_obs1.reserve(n);
  batch.d_obs2.reserve(n);
  batch.d_pair.reserve(n);
  for (int m = 0; m < n; ++m) {
    batch.d_obs1.push_back(estimator.score_diffs(ScoreDiffEstimator::Pair::obs_vs_first, m));
    batch.d_obs2.push_back(estimator.score_diffs(ScoreDiffEstimator::Pair::obs_vs_second, m));
    batch.d_pair.push_back(
        estimator.score_diffs(ScoreDiffEstimator::Pair::first_vs_second, m));
  }
  return batch;
}

ScoreDiffBatch oracle_score_diffs(const QuadraticScm& scm, const DecoderGlm& dec,
                                  const Eigen::MatrixXd& z_samples) {
  OracleScoreDiffs oracle(scm, dec, z_samples);
  Eigen::MatrixXd x(z_samples.rows(), dec.obs_dim());
  for (Eigen::Index k = 0; k < z_samples.rows(); ++k)
    x.row(k) = decode(dec, z_samples.row(k).transpose()).transpose();
  return build_score_diff_batch(std::move(x), z_samples, scm.n(), oracle);
}

TransportedDiffs transport_to_candidate(const EncoderLinear& enc,
                                        const ScoreDiffBatch& batch) {
  const Eigen::MatrixXd pinv = detail::encoder_pinv(enc.matrix());

  Eigen::MatrixXd arctanh_x(batch.x_samples.rows(), batch.x_samples.cols());
  for (Eigen::Index k = 0; k < batch.x_samples.rows(); ++k)
    arctanh_x.row(k) =
        detail::guarded_atanh(batch.x_samples.row(k).transpose().array()).transpose();

  // Rows of `scale` are 1 - tanh^2(H^dagger zhat_k), the diagonal factor of
  // the inverse-encoder Jacobian at each sample.
  const Eigen::MatrixXd zhat = arctanh_x * enc.matrix().transpose();
  const Eigen::ArrayXXd scale =
      1.0 - (zhat * pinv.transpose()).array().tanh().square();

  TransportedDiffs out;
  auto transport_family = [&](const std::vector<Eigen::MatrixXd>& family) {
    std::vector<Eigen::MatrixXd> t;
    t.reserve(family.size());
    for (const auto& v : family) t.push_back((v.array() * scale).matrix() * pinv);
    return t;
  };
  out.obs1 = transport_family(batch.d_obs1);
  out.obs2 = transport_family(batch.d_obs2);
  out.pair = transport_family(batch.d_pair);
  return out;
}

ScoreChangeMatrices score_change_matrices(const TransportedDiffs& transported) {
  const int n = static_cast<int>(transported.pair.size());
  ScoreChangeMatrices mats;
  mats.d_t.resize(n, n);
  mats.d.resize(n, n);
  mats.d_tilde.resize(n, n);
  for (int m = 0; m < n; ++m)
    for (int i = 0; i < n; ++i) {
      mats.d_t(i, m) = transported.pair[m].col(i).cwiseAbs().mean();
      mats.d(i, m) = transported.obs1[m].col(i).cwiseAbs().mean();
      mats.d_tilde(i, m) = transported.obs2[m].col(i).cwiseAbs().mean();
    }
  return mats;
}

ScoreChangeMatrices score_change_matrices(const EncoderLinear& enc,
                                          const ScoreDiffBatch& batch) {
  return score_change_matrices(transport_to_candidate(enc, batch));
}

ScoreDiffBatch relabel_second_environments(const ScoreDiffBatch& batch,
                                           const std::vector<int>& pi) {
  const int n = batch.n();
  if (static_cast<int>(pi.size()) != n)
    throw std::invalid_argument("relabel_second_environments: permutation size mismatch");
  ScoreDiffBatch out;
  out.x_samples = batch.x_samples;
  out.z_samples = batch.z_samples;
  out.d_obs1 = batch.d_obs1;
  out.d_obs2.resize(n);
  out.d_pair.resize(n);
  for (int m = 0; m < n; ++m) out.d_obs2[pi[m]] = batch.d_obs2[m];
  for (int m = 0; m < n; ++m) out.d_pair[m] = out.d_obs2[m] - out.d_obs1[m];
  return out;
}

}  // namespace gscalei
