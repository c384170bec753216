#include "gscalei/gscalei.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "gscalei/errors.hpp"

namespace gscalei {

namespace {

constexpr double kRankTol = 1e-10;

/// Batch rearranged for the optimizer: samples as columns, the
/// between-interventions family stacked into one d x (n * n_s) block matrix.
struct FitData {
  Eigen::MatrixXd x;  // d x n_s
  Eigen::MatrixXd a;  // d x n_s, arctanh of x
  Eigen::MatrixXd v;  // d x (n * n_s)
  int n = 0;
  int d = 0;
  int n_s = 0;
};

FitData prepare_fit_data(const ScoreDiffBatch& batch) {
  FitData fd;
  fd.n = batch.n();
  fd.d = batch.d();
  fd.n_s = batch.n_samples();
  fd.x = batch.x_samples.transpose();
  fd.a.resize(fd.d, fd.n_s);
  for (int k = 0; k < fd.n_s; ++k)
    fd.a.col(k) = detail::guarded_atanh(fd.x.col(k).array()).matrix();
  fd.v.resize(fd.d, static_cast<Eigen::Index>(fd.n) * fd.n_s);
  for (int m = 0; m < fd.n; ++m)
    fd.v.middleCols(static_cast<Eigen::Index>(m) * fd.n_s, fd.n_s) =
        batch.d_pair[m].transpose();
  return fd;
}

struct Workspace {
  Eigen::MatrixXd hht, m_inv, p;
  Eigen::MatrixXd z, u, xh, c, r;
  Eigen::MatrixXd w, t, tbar, pbar, wbar, cbar, xhbar, ubar, zbar, cmat;
};

/// Objective value and (optionally) its exact gradient. The forward chain is
///   zhat = H a,  u = H^dagger zhat,  xhat = tanh(u),
///   t_m = [diag(1-xhat^2) H^dagger]^T v_m,
///   L = sum w |t| / n_s + lambda1 ||xhat - x||_F^2/n_s + lambda2 ||zhat||_F^2/n_s,
/// with H^dagger = H^T (H H^T)^{-1} for full-row-rank H. The pseudoinverse
/// pullback uses d(H^dagger) = -H^dagger dH H^dagger + (I - H^dagger H) dH^T M.
/// `weights` (n x n, or empty for all-ones) multiplies the score-variation
/// entries; reweighted passes use it to sharpen l1 toward l0.
double eval_objective(const Eigen::MatrixXd& h, const FitData& fd, const GscaleConfig& cfg,
                      const Eigen::MatrixXd& weights, Eigen::MatrixXd* grad,
                      Workspace& ws) {
  const int n = fd.n;
  const int n_s = fd.n_s;
  const double inv_ns = 1.0 / static_cast<double>(n_s);

  ws.hht.noalias() = h * h.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(ws.hht);
  const double min_eig = es.eigenvalues().minCoeff();
  if (!(min_eig > kRankTol * kRankTol))
    throw RankDeficientEncoder("encoder matrix lost full row rank");
  ws.m_inv.noalias() = es.eigenvectors() *
                       es.eigenvalues().cwiseInverse().asDiagonal() *
                       es.eigenvectors().transpose();
  ws.p.noalias() = h.transpose() * ws.m_inv;  // H^dagger, d x n

  ws.z.noalias() = h * fd.a;
  ws.u.noalias() = ws.p * ws.z;
  ws.xh = ws.u.array().tanh();
  ws.c = 1.0 - ws.xh.array().square();
  ws.r = ws.xh - fd.x;

  ws.w.resizeLike(fd.v);
  for (int m = 0; m < n; ++m)
    ws.w.middleCols(static_cast<Eigen::Index>(m) * n_s, n_s) =
        fd.v.middleCols(static_cast<Eigen::Index>(m) * n_s, n_s).array() * ws.c.array();
  ws.t.noalias() = ws.p.transpose() * ws.w;

  const bool weighted = weights.size() > 0;
  double variation = 0.0;
  if (weighted) {
    for (int m = 0; m < n; ++m)
      variation += (weights.col(m).asDiagonal() *
                    ws.t.middleCols(static_cast<Eigen::Index>(m) * n_s, n_s))
                       .cwiseAbs()
                       .sum();
  } else {
    variation = ws.t.cwiseAbs().sum();
  }
  const double loss = variation * inv_ns + cfg.lambda1 * ws.r.squaredNorm() * inv_ns +
                      cfg.lambda2 * ws.z.squaredNorm() * inv_ns;
  if (grad == nullptr) return loss;

  ws.tbar = ws.t.array().sign() * inv_ns;
  if (weighted)
    for (int m = 0; m < n; ++m)
      ws.tbar.middleCols(static_cast<Eigen::Index>(m) * n_s, n_s) =
          weights.col(m).asDiagonal() *
          ws.tbar.middleCols(static_cast<Eigen::Index>(m) * n_s, n_s);
  ws.pbar.noalias() = ws.w * ws.tbar.transpose();
  ws.wbar.noalias() = ws.p * ws.tbar;
  ws.cbar.resize(fd.d, n_s);
  ws.cbar.setZero();
  for (int m = 0; m < n; ++m)
    ws.cbar.array() += fd.v.middleCols(static_cast<Eigen::Index>(m) * n_s, n_s).array() *
                       ws.wbar.middleCols(static_cast<Eigen::Index>(m) * n_s, n_s).array();
  ws.xhbar = (2.0 * cfg.lambda1 * inv_ns) * ws.r -
             2.0 * (ws.xh.array() * ws.cbar.array()).matrix();
  ws.ubar = ws.c.array() * ws.xhbar.array();
  ws.pbar.noalias() += ws.ubar * ws.z.transpose();
  ws.zbar.noalias() = ws.p.transpose() * ws.ubar;
  ws.zbar += (2.0 * cfg.lambda2 * inv_ns) * ws.z;

  grad->noalias() = ws.zbar * fd.a.transpose();
  ws.cmat.noalias() = h * ws.pbar;
  grad->noalias() += ws.m_inv * ws.pbar.transpose();
  grad->noalias() -= ws.m_inv * ws.cmat * ws.m_inv * h;
  grad->noalias() -= ws.m_inv * ws.cmat.transpose() * ws.m_inv * h;
  return loss;
}

Eigen::MatrixXd draw_initial_encoder(int n, int d, std::uint64_t seed) {
  Rng rng(seed);
  const double sd = 1.0 / std::sqrt(static_cast<double>(d));
  for (;;) {
    Eigen::MatrixXd h(n, d);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < d; ++c) h(r, c) = rng.normal(0.0, sd);
    if (detail::smallest_singular_value(h) >= 1e-6) return h;
  }
}

std::vector<int> identity_permutation(int n) {
  std::vector<int> p(n);
  std::iota(p.begin(), p.end(), 0);
  return p;
}

/// Align, canonicalize, threshold; shared tail of the coupled and uncoupled
/// paths. The aligned encoder's rows are rescaled to unit empirical second
/// moments of zhat: per-coordinate scale is unidentifiable, and a canonical
/// scale keeps the rows of the final D matrices comparable for thresholding.
FitResult finish_fit(const EncoderLinear& h_raw, const ScoreDiffBatch& batch,
                     const GscaleConfig& cfg, std::vector<double> trace,
                     std::vector<int> coupling, bool uncertain) {
  const ScoreChangeMatrices raw = score_change_matrices(h_raw, batch);
  std::vector<int> perm = align_permutation(raw);

  Eigen::MatrixXd h = apply_row_permutation(h_raw, perm).matrix();
  Eigen::ArrayXXd arctanh_x = batch.x_samples.array().atanh();
  const Eigen::MatrixXd zhat = arctanh_x.matrix() * h.transpose();
  for (int i = 0; i < h.rows(); ++i) {
    const double rms = std::sqrt(zhat.col(i).squaredNorm() / zhat.rows());
    if (rms > 0.0) h.row(i) /= rms;
  }

  FitResult out;
  out.h_star = EncoderLinear(std::move(h));
  out.d_matrices = score_change_matrices(out.h_star, batch);
  out.graph = recover_graph(out.d_matrices, identity_permutation(batch.n()), cfg);
  out.perm = std::move(perm);
  out.loss_trace = std::move(trace);
  out.coupling = std::move(coupling);
  out.coupling_uncertain = uncertain;
  return out;
}

}  // namespace

GscaleConfig GscaleConfig::defaults_for(int n) {
  GscaleConfig cfg;
  if (n > 5) {
    cfg.steps = 40000;
    cfg.lambda_g = 0.2;
  }
  return cfg;
}

void GscaleConfig::validate() const {
  if (lambda1 < 0 || lambda2 < 0 || lambda_g < 0 || eps_support < 0)
    throw std::invalid_argument("GscaleConfig: weights and thresholds must be >= 0");
  if (lr <= 0) throw std::invalid_argument("GscaleConfig: lr must be > 0");
  if (steps < 0) throw std::invalid_argument("GscaleConfig: steps must be >= 0");
  if (rmsprop_decay < 0 || rmsprop_decay >= 1)
    throw std::invalid_argument("GscaleConfig: rmsprop_decay must be in [0, 1)");
  if (rmsprop_eps <= 0) throw std::invalid_argument("GscaleConfig: rmsprop_eps must be > 0");
  if (reweight_passes < 1)
    throw std::invalid_argument("GscaleConfig: reweight_passes must be >= 1");
  if (reweight_floor <= 0 || reweight_floor > 1)
    throw std::invalid_argument("GscaleConfig: reweight_floor must be in (0, 1]");
}

double objective(const EncoderLinear& enc, const ScoreDiffBatch& batch,
                 const GscaleConfig& cfg) {
  const FitData fd = prepare_fit_data(batch);
  Workspace ws;
  return eval_objective(enc.matrix(), fd, cfg, Eigen::MatrixXd(), nullptr, ws);
}

Eigen::MatrixXd objective_gradient(const EncoderLinear& enc, const ScoreDiffBatch& batch,
                                   const GscaleConfig& cfg) {
  const FitData fd = prepare_fit_data(batch);
  Workspace ws;
  Eigen::MatrixXd grad(enc.matrix().rows(), enc.matrix().cols());
  eval_objective(enc.matrix(), fd, cfg, Eigen::MatrixXd(), &grad, ws);
  return grad;
}

namespace {

/// RMSprop loop shared by the public op and the reweighted refinement passes.
Eigen::MatrixXd fit_impl(const FitData& fd, const GscaleConfig& cfg, Eigen::MatrixXd h,
                         const Eigen::MatrixXd& weights, std::vector<double>* loss_trace) {
  Workspace ws;
  Eigen::MatrixXd grad(fd.n, fd.d);
  Eigen::MatrixXd sq_avg = Eigen::MatrixXd::Zero(fd.n, fd.d);
  for (int step = 0; step < cfg.steps; ++step) {
    double loss;
    try {
      loss = eval_objective(h, fd, cfg, weights, &grad, ws);
    } catch (const RankDeficientEncoder&) {
      throw RankCollapse("fit_encoder: iterate lost row rank at step " +
                         std::to_string(step));
    }
    if (loss_trace) loss_trace->push_back(loss);
    if (cfg.grad_check && step == 0) {
      // One-shot audit of the analytic gradient at the initial iterate.
      Eigen::MatrixXd fd_grad(fd.n, fd.d);
      const double eps = 1e-6;
      Eigen::MatrixXd hp = h;
      for (int r = 0; r < fd.n; ++r)
        for (int c = 0; c < fd.d; ++c) {
          const double orig = hp(r, c);
          hp(r, c) = orig + eps;
          const double up = eval_objective(hp, fd, cfg, weights, nullptr, ws);
          hp(r, c) = orig - eps;
          const double dn = eval_objective(hp, fd, cfg, weights, nullptr, ws);
          hp(r, c) = orig;
          fd_grad(r, c) = (up - dn) / (2.0 * eps);
        }
      const double rel = (fd_grad - grad).norm() / std::max(grad.norm(), 1e-12);
      if (rel > 1e-4)
        throw std::runtime_error("fit_encoder: gradient check failed, relative error " +
                                 std::to_string(rel));
    }
    // Cosine learning-rate decay: the l1 term makes minima nonsmooth, and a
    // constant step keeps the iterate wandering around them.
    const double lr = cfg.lr_decay
                          ? cfg.lr * 0.5 *
                                (1.0 + std::cos(std::numbers::pi * step / cfg.steps))
                          : cfg.lr;
    sq_avg = cfg.rmsprop_decay * sq_avg.array() +
             (1.0 - cfg.rmsprop_decay) * grad.array().square();
    h.array() -= lr * grad.array() / (sq_avg.array().sqrt() + cfg.rmsprop_eps);
  }
  if (loss_trace) {
    Workspace ws_final;
    try {
      loss_trace->push_back(
          eval_objective(h, fd, cfg, weights, nullptr, ws_final));
    } catch (const RankDeficientEncoder&) {
      throw RankCollapse("fit_encoder: final iterate lost row rank");
    }
  }
  return h;
}

Eigen::MatrixXd initial_encoder(const FitData& fd, const GscaleConfig& cfg,
                                const std::optional<EncoderLinear>& init) {
  if (init.has_value()) {
    if (init->matrix().rows() != fd.n || init->matrix().cols() != fd.d)
      throw std::invalid_argument("fit_encoder: init shape mismatch");
    return init->matrix();
  }
  return draw_initial_encoder(fd.n, fd.d, cfg.seed);
}

}  // namespace

EncoderLinear fit_encoder(const ScoreDiffBatch& batch, const GscaleConfig& cfg,
                          const std::optional<EncoderLinear>& init,
                          std::vector<double>* loss_trace) {
  cfg.validate();
  const FitData fd = prepare_fit_data(batch);
  return EncoderLinear(
      fit_impl(fd, cfg, initial_encoder(fd, cfg, init), Eigen::MatrixXd(), loss_trace));
}

std::vector<int> align_permutation(const ScoreChangeMatrices& mats) {
  const Eigen::MatrixXd& d_t = mats.d_t;
  const int n = static_cast<int>(d_t.rows());
  if (d_t.cols() != n) throw std::invalid_argument("align_permutation: d_t must be square");
  if (n > 20) throw std::invalid_argument("align_permutation: n too large for exact search");
  if ((d_t.array() < 0).any())
    throw std::invalid_argument("align_permutation: d_t must be nonnegative");

  // best[mask] = max diagonal sum over columns popcount(mask)..n-1 with the
  // rows in `mask` already used.
  const int full = (1 << n) - 1;
  std::vector<double> best(static_cast<std::size_t>(full) + 1, 0.0);
  for (int mask = full - 1; mask >= 0; --mask) {
    const int col = __builtin_popcount(static_cast<unsigned>(mask));
    double v = -std::numeric_limits<double>::infinity();
    for (int r = 0; r < n; ++r)
      if (!(mask & (1 << r))) v = std::max(v, d_t(r, col) + best[mask | (1 << r)]);
    best[mask] = v;
  }
  // Walk columns choosing the smallest row that attains the optimum; this is
  // the lexicographically smallest maximizer.
  std::vector<int> perm(n);
  int mask = 0;
  for (int col = 0; col < n; ++col) {
    for (int r = 0; r < n; ++r) {
      if (mask & (1 << r)) continue;
      if (d_t(r, col) + best[mask | (1 << r)] == best[mask]) {
        perm[col] = r;
        mask |= 1 << r;
        break;
      }
    }
  }
  return perm;
}

std::vector<int> permutation_for_nonzero_diagonal(const Eigen::MatrixXd& a) {
  const int n = static_cast<int>(a.rows());
  if (a.cols() != n)
    throw std::invalid_argument("permutation_for_nonzero_diagonal: matrix must be square");
  std::vector<int> match_row(n, -1);  // row -> column matched to it
  std::vector<char> visited(n, 0);
  // Kuhn's augmenting paths on the nonzero pattern.
  std::function<bool(int)> augment = [&](int col) -> bool {
    for (int r = 0; r < n; ++r) {
      if (visited[r] || a(r, col) == 0.0) continue;
      visited[r] = 1;
      if (match_row[r] < 0 || augment(match_row[r])) {
        match_row[r] = col;
        return true;
      }
    }
    return false;
  };
  for (int col = 0; col < n; ++col) {
    std::fill(visited.begin(), visited.end(), 0);
    if (!augment(col))
      throw NoPerfectMatching(
          "permutation_for_nonzero_diagonal: nonzero pattern admits no perfect matching");
  }
  std::vector<int> perm(n);
  for (int r = 0; r < n; ++r) perm[match_row[r]] = r;
  return perm;
}

ScoreChangeMatrices apply_row_permutation(const ScoreChangeMatrices& mats,
                                          const std::vector<int>& perm) {
  const int n = static_cast<int>(perm.size());
  ScoreChangeMatrices out;
  out.d_t.resize(n, n);
  out.d.resize(n, n);
  out.d_tilde.resize(n, n);
  for (int i = 0; i < n; ++i) {
    out.d_t.row(i) = mats.d_t.row(perm[i]);
    out.d.row(i) = mats.d.row(perm[i]);
    out.d_tilde.row(i) = mats.d_tilde.row(perm[i]);
  }
  return out;
}

EncoderLinear apply_row_permutation(const EncoderLinear& enc, const std::vector<int>& perm) {
  Eigen::MatrixXd h(enc.matrix().rows(), enc.matrix().cols());
  for (int i = 0; i < static_cast<int>(perm.size()); ++i)
    h.row(i) = enc.matrix().row(perm[i]);
  return EncoderLinear(std::move(h));
}

Dag recover_graph(const ScoreChangeMatrices& mats, const std::vector<int>& perm,
                  const GscaleConfig& cfg, GraphMode mode) {
  const int n = static_cast<int>(mats.d.rows());
  Eigen::MatrixXd aligned(n, n);
  for (int i = 0; i < n; ++i) aligned.row(i) = mats.d.row(perm.at(i));
  // Row j is normalized by its diagonal entry: candidate-latent coordinate
  // scales multiply whole rows of D, and the diagonal (the coordinate's
  // response to its own intervention) carries the same factor, so the ratio
  // is scale-free. A global max normalization buries weak rows at n=8.
  for (int j = 0; j < n; ++j) {
    const double diag = aligned(j, j);
    if (diag > 0)
      aligned.row(j) /= diag;
    else
      aligned.row(j).setZero();
  }

  std::vector<std::vector<int>> parents(n);
  if (mode == GraphMode::triangular) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < i; ++j)
        if (aligned(j, i) >= cfg.lambda_g) parents[i].push_back(j);
    return Dag(n, std::move(parents), identity_permutation(n));
  }

  // Full mode: keep the larger direction of symmetric conflicts, then demand
  // an acyclic result.
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j || aligned(j, i) < cfg.lambda_g) continue;
      if (aligned(i, j) >= cfg.lambda_g) {
        if (aligned(j, i) < aligned(i, j)) continue;
        if (aligned(j, i) == aligned(i, j) && j > i) continue;
      }
      parents[i].push_back(j);
    }
  // Kahn's algorithm for a topological order.
  std::vector<int> indegree(n, 0);
  for (int i = 0; i < n; ++i) indegree[i] = static_cast<int>(parents[i].size());
  std::vector<std::vector<int>> children(n);
  for (int i = 0; i < n; ++i)
    for (int j : parents[i]) children[j].push_back(i);
  std::vector<int> topo;
  std::vector<int> queue;
  for (int i = 0; i < n; ++i)
    if (indegree[i] == 0) queue.push_back(i);
  while (!queue.empty()) {
    const int node = queue.front();
    queue.erase(queue.begin());
    topo.push_back(node);
    for (int c : children[node])
      if (--indegree[c] == 0) queue.push_back(c);
  }
  if (static_cast<int>(topo.size()) != n)
    throw InvalidGraph("recover_graph: thresholded pattern is cyclic in full mode");
  return Dag(n, std::move(parents), std::move(topo));
}

FeasibilityReport feasibility_check(const ScoreChangeMatrices& mats,
                                    const GscaleConfig& cfg) {
  const int n = static_cast<int>(mats.d_t.rows());
  const double eps = cfg.eps_support;
  auto normalized = [](const Eigen::MatrixXd& m) {
    const double mx = m.maxCoeff();
    return mx > 0 ? Eigen::MatrixXd(m / mx) : m;
  };
  const Eigen::MatrixXd dt = normalized(mats.d_t);
  const Eigen::MatrixXd dd = normalized(mats.d);
  const Eigen::MatrixXd dtl = normalized(mats.d_tilde);

  FeasibilityReport report;
  auto add = [&report](int constraint, int i, int j, double value) {
    report.violations.push_back({constraint, i, j, value});
    report.violation_mass += value;
  };

  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const bool on = dt(i, j) > eps;
      if (i == j && !on) add(1, i, j, eps - dt(i, j));
      if (i != j && on) add(1, i, j, dt(i, j));
    }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if ((dd(i, j) > eps) != (dtl(i, j) > eps)) add(2, i, j, std::abs(dd(i, j) - dtl(i, j)));
  for (int i = 0; i < n; ++i)
    if (!(dd(i, i) > eps)) add(3, i, i, eps - dd(i, i));
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (dd(i, j) > eps && dd(j, i) > eps) add(3, i, j, std::min(dd(i, j), dd(j, i)));

  report.feasible = report.violations.empty();
  return report;
}

namespace {

/// Base fit plus refinement passes that enforce the diagonality constraint:
/// after aligning the current iterate, off-diagonal score variations keep
/// full weight while the aligned diagonal (the signal that must stay nonzero)
/// is relieved to reweight_floor. Shared by the coupled path and every
/// coupling candidate of the uncoupled search.
EncoderLinear run_encoder_pipeline(const ScoreDiffBatch& batch, const GscaleConfig& cfg,
                                   std::vector<double>* trace) {
  cfg.validate();
  const FitData fd = prepare_fit_data(batch);
  Eigen::MatrixXd h =
      fit_impl(fd, cfg, initial_encoder(fd, cfg, std::nullopt), Eigen::MatrixXd(), trace);
  for (int pass = 1; pass < cfg.reweight_passes; ++pass) {
    const ScoreChangeMatrices mats = score_change_matrices(EncoderLinear(h), batch);
    const std::vector<int> perm = align_permutation(mats);
    Eigen::MatrixXd weights = Eigen::MatrixXd::Ones(fd.n, fd.n);
    for (int m = 0; m < fd.n; ++m) weights(perm[m], m) = cfg.reweight_floor;
    h = fit_impl(fd, cfg, std::move(h), weights, trace);
  }
  return EncoderLinear(std::move(h));
}

}  // namespace

std::pair<std::vector<int>, FitResult> uncoupled_search(const ScoreDiffBatch& batch,
                                                        const GscaleConfig& cfg,
                                                        bool allow_large) {
  const int n = batch.n();
  if (n > 6 && !allow_large)
    throw BudgetExceeded("uncoupled_search: n = " + std::to_string(n) +
                         " exceeds the n! search guard (n <= 6); pass allow_large to override");

  std::vector<int> pi = identity_permutation(n);
  double best_mass = std::numeric_limits<double>::infinity();
  std::vector<int> best_pi;
  std::optional<FitResult> best_result;
  do {
    const ScoreDiffBatch relabeled = relabel_second_environments(batch, pi);
    std::vector<double> trace;
    const EncoderLinear h_raw = run_encoder_pipeline(relabeled, cfg, &trace);
    FitResult candidate = finish_fit(h_raw, relabeled, cfg, std::move(trace), pi, false);
    const FeasibilityReport report = feasibility_check(candidate.d_matrices, cfg);
    if (report.feasible) return {pi, std::move(candidate)};
    if (report.violation_mass < best_mass) {
      best_mass = report.violation_mass;
      best_pi = pi;
      best_result = std::move(candidate);
    }
  } while (std::next_permutation(pi.begin(), pi.end()));

  best_result->coupling_uncertain = true;
  return {best_pi, std::move(*best_result)};
}

FitResult gscale_i(const ScoreDiffBatch& batch, const GscaleConfig& cfg, bool coupled,
                   bool allow_large_search) {
  if (!coupled) return uncoupled_search(batch, cfg, allow_large_search).second;
  std::vector<double> trace;
  const EncoderLinear h_raw = run_encoder_pipeline(batch, cfg, &trace);
  return finish_fit(h_raw, batch, cfg, std::move(trace),
                    identity_permutation(batch.n()), false);
}

GradCheckResult gradient_audit(int instances, std::uint64_t seed) {
  GradCheckResult result;
  result.instances = instances;
  const int n = 3, d = 5, n_s = 20;
  for (int t = 0; t < instances; ++t) {
    const std::uint64_t s = derive_stream(seed, static_cast<std::uint64_t>(t));
    Rng dag_rng(derive_stream(s, stream_tag::kDag));
    Rng mech_rng(derive_stream(s, stream_tag::kMechanisms));
    Rng dec_rng(derive_stream(s, stream_tag::kDecoder));
    Rng z_rng(derive_stream(s, stream_tag::kLatentStreamBase));
    const Dag dag = sample_er_dag(n, 0.5, dag_rng);
    const QuadraticScm scm = sample_mechanisms(dag, mech_rng);
    const DecoderGlm dec = sample_decoder(n, d, dec_rng);
    const Eigen::MatrixXd z = sample_latent(scm, EnvironmentId::observational(), n_s, z_rng);
    const ScoreDiffBatch batch = oracle_score_diffs(scm, dec, z);

    Eigen::MatrixXd h(n, d);
    Rng h_rng(derive_stream(s, stream_tag::kEncoderInit));
    const double sd = 1.0 / std::sqrt(static_cast<double>(d));
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < d; ++c) h(r, c) = h_rng.normal(0.0, sd);
    const EncoderLinear enc{h};

    const GscaleConfig cfg = GscaleConfig::defaults_for(n);
    const Eigen::MatrixXd analytic = objective_gradient(enc, batch, cfg);
    Eigen::MatrixXd numeric(n, d);
    const double eps = 1e-6;
    Eigen::MatrixXd hp = h;
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < d; ++c) {
        const double orig = hp(r, c);
        hp(r, c) = orig + eps;
        const double up = objective(EncoderLinear{hp}, batch, cfg);
        hp(r, c) = orig - eps;
        const double dn = objective(EncoderLinear{hp}, batch, cfg);
        hp(r, c) = orig;
        numeric(r, c) = (up - dn) / (2.0 * eps);
      }
    const double rel = (numeric - analytic).norm() / std::max(analytic.norm(), 1e-12);
    result.max_rel_error = std::max(result.max_rel_error, rel);
  }
  return result;
}

}  // namespace gscalei
