#include "gscalei/transform.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <stdexcept>

#include "gscalei/errors.hpp"

namespace gscalei {

namespace {
constexpr double kRankTol = 1e-10;
constexpr double kDomainMargin = 1e-12;
}  // namespace

namespace detail {

double smallest_singular_value(const Eigen::MatrixXd& m) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  return svd.singularValues().minCoeff();
}

Eigen::ArrayXd guarded_atanh(const Eigen::ArrayXd& x) {
  if ((x.abs() >= 1.0 - kDomainMargin).any())
    throw DomainViolation("encode: observation has a coordinate outside the arctanh domain");
  return x.atanh();
}

Eigen::MatrixXd encoder_pinv(const Eigen::MatrixXd& h) {
  if (smallest_singular_value(h) < kRankTol)
    throw RankDeficientEncoder("encoder matrix is not full row rank");
  return pseudo_inverse(h);
}

}  // namespace detail

DecoderGlm::DecoderGlm(Eigen::MatrixXd g) : g_(std::move(g)) {
  if (g_.rows() < g_.cols())
    throw std::invalid_argument("DecoderGlm: requires d >= n");
  if (detail::smallest_singular_value(g_) <= 1e-9)
    throw std::invalid_argument("DecoderGlm: matrix is not full column rank");
}

DecoderGlm sample_decoder(int n, int d, Rng& rng) {
  if (d < n) throw std::invalid_argument("sample_decoder: requires d >= n");
  const double sd = 1.0 / std::sqrt(static_cast<double>(d));
  for (;;) {
    Eigen::MatrixXd g(d, n);
    for (int r = 0; r < d; ++r)
      for (int c = 0; c < n; ++c) g(r, c) = rng.normal(0.0, sd);
    if (detail::smallest_singular_value(g) >= 1e-6) return DecoderGlm(std::move(g));
  }
}

Eigen::VectorXd decode(const DecoderGlm& dec, const Eigen::VectorXd& z) {
  return (dec.matrix() * z).array().tanh();
}

Eigen::MatrixXd decoder_jacobian(const DecoderGlm& dec, const Eigen::VectorXd& z) {
  const Eigen::ArrayXd t = (dec.matrix() * z).array().tanh();
  return (1.0 - t.square()).matrix().asDiagonal() * dec.matrix();
}

Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& m) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double cutoff = 1e-12 * sv.maxCoeff();
  Eigen::VectorXd inv_sv(sv.size());
  for (int i = 0; i < sv.size(); ++i) inv_sv[i] = sv[i] > cutoff ? 1.0 / sv[i] : 0.0;
  return svd.matrixV() * inv_sv.asDiagonal() * svd.matrixU().transpose();
}

Eigen::VectorXd observed_score_diff(const DecoderGlm& dec, const Eigen::VectorXd& z,
                                    const Eigen::VectorXd& latent_diff) {
  const Eigen::MatrixXd jac = decoder_jacobian(dec, z);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(jac, Eigen::ComputeThinU | Eigen::ComputeThinV);
  // Relative criterion: tanh saturation makes rows legitimately tiny, so an
  // absolute cutoff misfires on valid full-rank Jacobians.
  if (svd.singularValues().minCoeff() < 1e-12 * svd.singularValues().maxCoeff())
    throw RankDeficientJacobian("observed_score_diff: decoder Jacobian is rank deficient");
  // [J^dagger]^T = U diag(1/s) V^T for full column rank J = U diag(s) V^T.
  return svd.matrixU() *
         (svd.singularValues().cwiseInverse().asDiagonal() *
          (svd.matrixV().transpose() * latent_diff));
}

Eigen::VectorXd encode(const EncoderLinear& enc, const Eigen::VectorXd& x) {
  return enc.matrix() * detail::guarded_atanh(x.array()).matrix();
}

Eigen::VectorXd encoder_inverse(const EncoderLinear& enc, const Eigen::VectorXd& zhat) {
  return (detail::encoder_pinv(enc.matrix()) * zhat).array().tanh();
}

Eigen::MatrixXd encoder_inverse_jacobian(const EncoderLinear& enc,
                                         const Eigen::VectorXd& zhat) {
  const Eigen::MatrixXd pinv = detail::encoder_pinv(enc.matrix());
  const Eigen::ArrayXd t = (pinv * zhat).array().tanh();
  return (1.0 - t.square()).matrix().asDiagonal() * pinv;
}

}  // namespace gscalei
