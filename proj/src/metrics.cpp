#include "gscalei/metrics.hpp"

#include <stdexcept>

namespace gscalei {

NormalizedL2 normalized_l2(const Eigen::MatrixXd& z, const Eigen::MatrixXd& zhat,
                           const std::vector<int>& perm) {
  if (z.rows() != zhat.rows() || z.cols() != zhat.cols())
    throw std::invalid_argument("normalized_l2: shape mismatch");
  const int n = static_cast<int>(z.cols());
  if (static_cast<int>(perm.size()) != n)
    throw std::invalid_argument("normalized_l2: permutation size mismatch");

  NormalizedL2 out;
  out.scales.resize(n);
  Eigen::MatrixXd permuted(z.rows(), n);
  for (int j = 0; j < n; ++j) permuted.col(j) = zhat.col(perm[j]);
  for (int j = 0; j < n; ++j) {
    const double denom = permuted.col(j).squaredNorm();
    out.scales[j] = denom > 0.0 ? z.col(j).dot(permuted.col(j)) / denom : 0.0;
    permuted.col(j) *= out.scales[j];
  }
  const double z_norm = z.norm();
  out.loss = z_norm > 0.0 ? (z - permuted).norm() / z_norm : (z - permuted).norm();
  return out;
}

int shd(const Dag& truth, const Dag& estimate, const std::vector<int>& perm) {
  if (truth.n != estimate.n) throw std::invalid_argument("shd: node count mismatch");
  const int n = truth.n;
  if (static_cast<int>(perm.size()) != n)
    throw std::invalid_argument("shd: permutation size mismatch");

  Eigen::MatrixXi t = Eigen::MatrixXi::Zero(n, n);
  Eigen::MatrixXi e = Eigen::MatrixXi::Zero(n, n);
  for (const auto& [from, to] : truth.edges()) t(from, to) = 1;
  for (const auto& [from, to] : estimate.edges()) e(perm[from], perm[to]) = 1;

  int distance = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const bool t_fwd = t(i, j), t_bwd = t(j, i);
      const bool e_fwd = e(i, j), e_bwd = e(j, i);
      if (t_fwd == e_fwd && t_bwd == e_bwd) continue;
      // Any disagreement on a pair costs 1: reversal, insertion, or deletion.
      distance += 1;
    }
  return distance;
}

}  // namespace gscalei
