#ifndef GSCALEI_TRANSFORM_HPP_
#define GSCALEI_TRANSFORM_HPP_

#include <Eigen/Dense>

#include "gscalei/rng.hpp"

namespace gscalei {

/// Generalized linear decoder x = tanh(G z) with full-column-rank G (d x n,
/// d >= n). Rank is verified at construction.
class DecoderGlm {
 public:
  explicit DecoderGlm(Eigen::MatrixXd g);

  const Eigen::MatrixXd& matrix() const { return g_; }
  int latent_dim() const { return static_cast<int>(g_.cols()); }
  int obs_dim() const { return static_cast<int>(g_.rows()); }

 private:
  Eigen::MatrixXd g_;
};

/// Linear-arctanh encoder zhat = H arctanh(x) with H of shape n x d. Full row
/// rank is required by the operations that need the pseudoinverse; it is
/// checked there, not at construction.
class EncoderLinear {
 public:
  EncoderLinear() = default;
  explicit EncoderLinear(Eigen::MatrixXd h) : h_(std::move(h)) {}

  const Eigen::MatrixXd& matrix() const { return h_; }
  int latent_dim() const { return static_cast<int>(h_.rows()); }
  int obs_dim() const { return static_cast<int>(h_.cols()); }

 private:
  Eigen::MatrixXd h_;
};

/// Decoder with iid Normal(0, 1/d) entries (row-major draw order), redrawn
/// until the smallest singular value exceeds 1e-6.
DecoderGlm sample_decoder(int n, int d, Rng& rng);

/// x = tanh(G z), componentwise; strictly inside (-1, 1)^d.
Eigen::VectorXd decode(const DecoderGlm& dec, const Eigen::VectorXd& z);

/// J_g(z) = diag(1 - tanh^2(G z)) * G, shape d x n.
Eigen::MatrixXd decoder_jacobian(const DecoderGlm& dec, const Eigen::VectorXd& z);

/// Moore-Penrose pseudoinverse via SVD with relative cutoff 1e-12 * sigma_max.
Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& m);

/// Transports a latent-space score difference to observed space at x =
/// decode(z): returns [J_g(z)^dagger]^T * latent_diff. Throws
/// RankDeficientJacobian if the Jacobian's smallest singular value is < 1e-10.
Eigen::VectorXd observed_score_diff(const DecoderGlm& dec, const Eigen::VectorXd& z,
                                    const Eigen::VectorXd& latent_diff);

/// zhat = H arctanh(x). Throws DomainViolation if any |x_j| >= 1 - 1e-12.
Eigen::VectorXd encode(const EncoderLinear& enc, const Eigen::VectorXd& x);

/// xhat = tanh(H^dagger zhat). Throws RankDeficientEncoder if H is not full
/// row rank (smallest singular value < 1e-10).
Eigen::VectorXd encoder_inverse(const EncoderLinear& enc, const Eigen::VectorXd& zhat);

/// J_{h^{-1}}(zhat) = diag(1 - tanh^2(H^dagger zhat)) * H^dagger, shape d x n.
Eigen::MatrixXd encoder_inverse_jacobian(const EncoderLinear& enc,
                                         const Eigen::VectorXd& zhat);

namespace detail {
/// Smallest singular value, for rank checks.
double smallest_singular_value(const Eigen::MatrixXd& m);
/// arctanh with the hard domain guard shared by encode paths.
Eigen::ArrayXd guarded_atanh(const Eigen::ArrayXd& x);
/// H^dagger with the full-row-rank check used by encoder operations.
Eigen::MatrixXd encoder_pinv(const Eigen::MatrixXd& h);
}  // namespace detail

}  // namespace gscalei

#endif  // GSCALEI_TRANSFORM_HPP_
