#ifndef GSCALEI_GSCALEI_HPP_
#define GSCALEI_GSCALEI_HPP_

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "gscalei/dag.hpp"
#include "gscalei/scores.hpp"
#include "gscalei/transform.hpp"

namespace gscalei {

/// Hyperparameters of the relaxed encoder objective, its optimizer, and the
/// post-processing thresholds.
struct GscaleConfig {
  // The reconstruction term vanishes identically on encoders that are
  // invertible on the data, so lambda1 acts as a barrier: it must dominate
  // the score-variation term or (for d > n) the optimizer escapes into
  // near-zero encoders whose rows are orthogonal to the data span.
  double lambda1 = 100.0;      // reconstruction weight
  double lambda2 = 1.0;        // zhat-norm weight
  double lr = 1e-3;            // RMSprop learning rate
  int steps = 30000;           // full-batch iterations
  double lambda_g = 0.1;       // graph threshold on the max-normalized D matrix
  double eps_support = 1e-3;   // support cutoff after max-normalization
  double rmsprop_decay = 0.9;
  double rmsprop_eps = 1e-8;
  bool lr_decay = true;        // cosine decay of lr over the steps of each pass
  // Reweighted-l1 refinement: passes >= 2 rerun the fit with entry weights
  // floor*max / (d_t + floor*max), pushing the l1 surrogate toward the l0
  // objective it stands in for.
  int reweight_passes = 3;
  double reweight_floor = 0.05;
  bool grad_check = false;     // audit the gradient against finite differences at step 0
  std::uint64_t seed = 0;      // encoder initialization stream

  /// Dimension-bucketed defaults: steps 3e4 / lambda_g 0.1 up to n=5,
  /// steps 4e4 / lambda_g 0.2 beyond.
  static GscaleConfig defaults_for(int n);

  void validate() const;
};

enum class GraphMode { triangular, full };

/// Output of the full pipeline: the aligned encoder, the row alignment used,
/// the score-change matrices at the aligned encoder, the optimization trace
/// (steps+1 objective values: initial iterate through final iterate), and the
/// recovered graph. `coupling` records the relabeling applied to the second
/// environment set (identity when environments were coupled).
struct FitResult {
  EncoderLinear h_star;
  std::vector<int> perm;  // aligned row i = raw row perm[i]
  ScoreChangeMatrices d_matrices;
  std::vector<double> loss_trace;
  Dag graph;
  std::vector<int> coupling;
  bool coupling_uncertain = false;
};

/// Relaxed objective: ||D_t(h)||_{1,1} + lambda1 E||h^{-1}(h(X)) - X||^2 +
/// lambda2 E||h(X)||^2, with empirical means over the batch samples.
double objective(const EncoderLinear& enc, const ScoreDiffBatch& batch,
                 const GscaleConfig& cfg);

/// Exact gradient of `objective` w.r.t. the encoder matrix (n x d),
/// reverse-mode through the full chain including the pseudoinverse; |.| is
/// differentiated as sign(.) with subgradient 0 at 0.
Eigen::MatrixXd objective_gradient(const EncoderLinear& enc, const ScoreDiffBatch& batch,
                                   const GscaleConfig& cfg);

/// Full-batch RMSprop for cfg.steps iterations from `init` (default: iid
/// Normal(0, 1/d) entries redrawn to full row rank, stream cfg.seed). Returns
/// the raw fitted encoder; appends steps+1 objective values to *loss_trace
/// when given. Throws RankCollapse if the iterate loses row rank.
EncoderLinear fit_encoder(const ScoreDiffBatch& batch, const GscaleConfig& cfg,
                          const std::optional<EncoderLinear>& init = std::nullopt,
                          std::vector<double>* loss_trace = nullptr);

/// Row permutation maximizing the diagonal sum of d_t after permutation,
/// computed by exact assignment; ties broken toward the lexicographically
/// smallest permutation.
std::vector<int> align_permutation(const ScoreChangeMatrices& mats);

/// Any permutation pi with A(pi[i], i) != 0 for all i, via bipartite matching
/// on the nonzero pattern. Throws NoPerfectMatching when none exists.
std::vector<int> permutation_for_nonzero_diagonal(const Eigen::MatrixXd& a);

/// Applies `perm` to the rows of all three matrices (row i of the output is
/// row perm[i] of the input), matching an encoder row permutation.
ScoreChangeMatrices apply_row_permutation(const ScoreChangeMatrices& mats,
                                          const std::vector<int>& perm);
EncoderLinear apply_row_permutation(const EncoderLinear& enc, const std::vector<int>& perm);

/// Thresholds the row-aligned, max-normalized D matrix into a graph.
/// Triangular mode: Pa(i) = { j < i : D(j,i) >= lambda_g }. Full mode admits
/// any j != i and resolves symmetric conflicts by keeping the larger entry;
/// it throws InvalidGraph if the surviving pattern is cyclic.
Dag recover_graph(const ScoreChangeMatrices& mats, const std::vector<int>& perm,
                  const GscaleConfig& cfg, GraphMode mode = GraphMode::triangular);

/// Thresholded verdict on the three constraints of the uncoupled-search
/// optimization problem: d_t has exactly the full diagonal as support, the
/// supports of d and d_tilde coincide, and d has a full diagonal with no
/// symmetric off-diagonal pair. Matrices are max-normalized before applying
/// cfg.eps_support.
struct FeasibilityReport {
  struct Violation {
    int constraint;  // 1: d_t diagonality, 2: support mismatch, 3: diagonal/2-cycle
    int i;
    int j;
    double value;  // off-pattern magnitude contributed to the mass
  };
  bool feasible = false;
  double violation_mass = 0.0;
  std::vector<Violation> violations;
};
FeasibilityReport feasibility_check(const ScoreChangeMatrices& mats,
                                    const GscaleConfig& cfg);

/// Iterates relabelings of the second environment set in lexicographic order,
/// fits an encoder for each, and returns the first relabeling whose aligned
/// solution passes feasibility_check, together with its FitResult. If none
/// passes, returns the minimum-violation-mass candidate flagged
/// coupling_uncertain. Guarded to n <= 6 unless allow_large is set.
std::pair<std::vector<int>, FitResult> uncoupled_search(const ScoreDiffBatch& batch,
                                                        const GscaleConfig& cfg,
                                                        bool allow_large = false);

/// The full pipeline on a prepared batch: encoder fit (with coupling search
/// when uncoupled), row alignment, and graph recovery.
FitResult gscale_i(const ScoreDiffBatch& batch, const GscaleConfig& cfg, bool coupled,
                   bool allow_large_search = false);

/// Finite-difference audit of objective_gradient on freshly sampled small
/// instances (n=3, d=5, n_s=20). Returns the worst Frobenius-relative error.
struct GradCheckResult {
  double max_rel_error = 0.0;
  int instances = 0;
};
GradCheckResult gradient_audit(int instances, std::uint64_t seed);

}  // namespace gscalei

#endif  // GSCALEI_GSCALEI_HPP_
