#ifndef GSCALEI_METRICS_HPP_
#define GSCALEI_METRICS_HPP_

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "gscalei/dag.hpp"

namespace gscalei {

struct EvalReport {
  double l2_loss = 0.0;
  int shd = 0;
  std::vector<int> perm_used;
  Eigen::VectorXd scale_used;
  double runtime_s = 0.0;
};

struct NormalizedL2 {
  double loss = 0.0;
  Eigen::VectorXd scales;
};

/// Normalized l2 loss between true latents and estimates, after applying
/// `perm` to the estimate's columns (column j of the permuted estimate is
/// column perm[j] of zhat) and fitting the least-squares per-column scale
/// c_j = <Z_j, Zhat_j> / <Zhat_j, Zhat_j> (0 for a zero column). Returns
/// ||Z - Zhat diag(c)||_F / ||Z||_F and the scales.
NormalizedL2 normalized_l2(const Eigen::MatrixXd& z, const Eigen::MatrixXd& zhat,
                           const std::vector<int>& perm);

/// Structural Hamming distance after relabeling the estimate's nodes by
/// `perm` (estimate edge i->j counts as perm[i]->perm[j]). Missing and extra
/// edges cost 1 each; a reversed edge costs 1 total.
int shd(const Dag& truth, const Dag& estimate, const std::vector<int>& perm);

}  // namespace gscalei

#endif  // GSCALEI_METRICS_HPP_
