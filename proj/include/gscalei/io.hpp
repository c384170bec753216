#ifndef GSCALEI_IO_HPP_
#define GSCALEI_IO_HPP_

#include <Eigen/Dense>
#include <filesystem>
#include <string>
#include <vector>

#include "gscalei/gscalei.hpp"
#include "gscalei/metrics.hpp"
#include "gscalei/scm.hpp"
#include "gscalei/scores.hpp"
#include "gscalei/transform.hpp"

namespace gscalei {

// All numeric output uses 17 significant digits, so doubles round-trip
// exactly. Matrix CSVs start with a "# rows cols" comment line; sample CSVs
// (z_samples, x_samples) instead carry a header row naming columns z_1..z_n /
// x_1..x_d with one sample per row.

std::string format_double(double value);

void write_matrix_csv(const std::filesystem::path& path, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_matrix_csv(const std::filesystem::path& path);

void write_samples_csv(const std::filesystem::path& path, const Eigen::MatrixXd& m,
                       const std::string& column_prefix);
Eigen::MatrixXd read_samples_csv(const std::filesystem::path& path);

/// SCM as a JSON document: edge list, per-node quadratic forms (row-major),
/// the three variance vectors, and both target maps. Node indices 0-based.
void write_scm_json(const std::filesystem::path& path, const QuadraticScm& scm);
QuadraticScm read_scm_json(const std::filesystem::path& path);

std::string dag_to_json(const Dag& dag);
void write_dag_json(const std::filesystem::path& path, const Dag& dag);
Dag read_dag_json(const std::filesystem::path& path);

/// Batch directory: x_samples.csv, one CSV per (family, m), and manifest.json
/// recording shapes and the generating seed. The latent samples are withheld.
void write_batch_dir(const std::filesystem::path& dir, const ScoreDiffBatch& batch,
                     std::uint64_t seed);
ScoreDiffBatch read_batch_dir(const std::filesystem::path& dir);

/// Fit directory: h_star.csv, perm.json, d_t.csv, d.csv, d_tilde.csv,
/// graph.json, loss_trace.csv.
void write_fit_dir(const std::filesystem::path& dir, const FitResult& fit);
FitResult read_fit_dir(const std::filesystem::path& dir);

void write_eval_json(const std::filesystem::path& path, const EvalReport& report);
EvalReport read_eval_json(const std::filesystem::path& path);

/// One results.csv row. l2_loss/shd are empty on failure, `error` carries the
/// error code. Runtime is deliberately kept out of this file so reruns are
/// byte-identical; see timings.csv.
std::string results_csv_header();
std::string results_csv_row(int n, int d, std::uint64_t graph_seed, bool ok, double l2_loss,
                            int shd_value, const std::string& error);

}  // namespace gscalei

#endif  // GSCALEI_IO_HPP_
