#include "gscalei/io.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "gscalei/errors.hpp"

namespace gscalei {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << content;
  if (!out) throw IoError("write failed for " + path.string());
}

json load_json(const fs::path& path) {
  try {
    return json::parse(slurp(path));
  } catch (const json::parse_error& e) {
    throw IoError("invalid JSON in " + path.string() + ": " + e.what());
  }
}

std::vector<double> parse_csv_line(const std::string& line, const fs::path& path) {
  std::vector<double> values;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      values.push_back(std::stod(cell));
    } catch (const std::exception&) {
      throw IoError("bad numeric cell '" + cell + "' in " + path.string());
    }
  }
  return values;
}

Eigen::MatrixXd rows_to_matrix(const std::vector<std::vector<double>>& rows,
                               const fs::path& path) {
  const Eigen::Index r = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index c = r > 0 ? static_cast<Eigen::Index>(rows[0].size()) : 0;
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    if (static_cast<Eigen::Index>(rows[i].size()) != c)
      throw IoError("ragged CSV rows in " + path.string());
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = rows[i][j];
  }
  return m;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& rows) {
  const Eigen::Index r = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index c = r > 0 ? static_cast<Eigen::Index>(rows[0].size()) : 0;
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = rows[i][j].get<double>();
  return m;
}

}  // namespace

std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

void write_matrix_csv(const fs::path& path, const Eigen::MatrixXd& m) {
  std::ostringstream out;
  out << "# " << m.rows() << " " << m.cols() << "\n";
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ",";
      out << format_double(m(i, j));
    }
    out << "\n";
  }
  spit(path, out.str());
}

Eigen::MatrixXd read_matrix_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line.rfind("# ", 0) != 0)
    throw IoError("missing '# rows cols' header in " + path.string());
  Eigen::Index r = 0, c = 0;
  {
    std::stringstream ss(line.substr(2));
    if (!(ss >> r >> c)) throw IoError("bad matrix header in " + path.string());
  }
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    rows.push_back(parse_csv_line(line, path));
  }
  Eigen::MatrixXd m = rows_to_matrix(rows, path);
  if (m.rows() != r || (r > 0 && m.cols() != c))
    throw IoError("matrix shape does not match header in " + path.string());
  if (r == 0) m.resize(0, c);
  return m;
}

void write_samples_csv(const fs::path& path, const Eigen::MatrixXd& m,
                       const std::string& column_prefix) {
  std::ostringstream out;
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    if (j) out << ",";
    out << column_prefix << "_" << (j + 1);
  }
  out << "\n";
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ",";
      out << format_double(m(i, j));
    }
    out << "\n";
  }
  spit(path, out.str());
}

Eigen::MatrixXd read_samples_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty samples CSV " + path.string());
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    rows.push_back(parse_csv_line(line, path));
  }
  return rows_to_matrix(rows, path);
}

void write_scm_json(const fs::path& path, const QuadraticScm& scm) {
  json doc;
  doc["schema"] = "gscalei/scm/1";
  doc["n"] = scm.n();
  json edges = json::array();
  for (const auto& [from, to] : scm.dag.edges()) edges.push_back({from, to});
  doc["edges"] = std::move(edges);
  doc["topo_order"] = scm.dag.topo_order;
  json quads = json::object();
  for (int i = 0; i < scm.n(); ++i) {
    if (scm.dag.is_root(i)) continue;
    json entry;
    entry["size"] = scm.quad[i].rows();
    json values = json::array();
    for (Eigen::Index r = 0; r < scm.quad[i].rows(); ++r)
      for (Eigen::Index c = 0; c < scm.quad[i].cols(); ++c)
        values.push_back(scm.quad[i](r, c));
    entry["values"] = std::move(values);
    quads[std::to_string(i)] = std::move(entry);
  }
  doc["quad"] = std::move(quads);
  doc["noise_var"] = std::vector<double>(scm.noise_var.data(),
                                         scm.noise_var.data() + scm.noise_var.size());
  doc["int_var_1"] = std::vector<double>(scm.int_var_1.data(),
                                         scm.int_var_1.data() + scm.int_var_1.size());
  doc["int_var_2"] = std::vector<double>(scm.int_var_2.data(),
                                         scm.int_var_2.data() + scm.int_var_2.size());
  doc["targets_1"] = scm.targets_1;
  doc["targets_2"] = scm.targets_2;
  spit(path, doc.dump(2) + "\n");
}

QuadraticScm read_scm_json(const fs::path& path) {
  const json doc = load_json(path);
  const int n = doc.at("n").get<int>();
  std::vector<std::vector<int>> parents(n);
  for (const auto& edge : doc.at("edges"))
    parents.at(edge.at(1).get<int>()).push_back(edge.at(0).get<int>());
  QuadraticScm scm;
  scm.dag = Dag(n, std::move(parents), doc.at("topo_order").get<std::vector<int>>());
  scm.quad.resize(n);
  for (int i = 0; i < n; ++i) {
    const int k = static_cast<int>(scm.dag.parents[i].size());
    scm.quad[i] = Eigen::MatrixXd(k, k);
    if (k == 0) continue;
    const auto& entry = doc.at("quad").at(std::to_string(i));
    if (entry.at("size").get<int>() != k) throw IoError("quad size mismatch in " + path.string());
    const auto& values = entry.at("values");
    for (int r = 0; r < k; ++r)
      for (int c = 0; c < k; ++c) scm.quad[i](r, c) = values.at(r * k + c).get<double>();
  }
  auto to_vec = [&doc](const char* key) {
    const auto v = doc.at(key).get<std::vector<double>>();
    return Eigen::Map<const Eigen::VectorXd>(v.data(), v.size()).eval();
  };
  scm.noise_var = to_vec("noise_var");
  scm.int_var_1 = to_vec("int_var_1");
  scm.int_var_2 = to_vec("int_var_2");
  scm.targets_1 = doc.at("targets_1").get<std::vector<int>>();
  scm.targets_2 = doc.at("targets_2").get<std::vector<int>>();
  scm.validate();
  return scm;
}

std::string dag_to_json(const Dag& dag) {
  json doc;
  doc["schema"] = "gscalei/graph/1";
  doc["n"] = dag.n;
  json edges = json::array();
  for (const auto& [from, to] : dag.edges()) edges.push_back({from, to});
  doc["edges"] = std::move(edges);
  doc["topo_order"] = dag.topo_order;
  return doc.dump(2) + "\n";
}

void write_dag_json(const fs::path& path, const Dag& dag) { spit(path, dag_to_json(dag)); }

Dag read_dag_json(const fs::path& path) {
  const json doc = load_json(path);
  const int n = doc.at("n").get<int>();
  std::vector<std::vector<int>> parents(n);
  for (const auto& edge : doc.at("edges"))
    parents.at(edge.at(1).get<int>()).push_back(edge.at(0).get<int>());
  return Dag(n, std::move(parents), doc.at("topo_order").get<std::vector<int>>());
}

void write_batch_dir(const fs::path& dir, const ScoreDiffBatch& batch, std::uint64_t seed) {
  fs::create_directories(dir);
  write_samples_csv(dir / "x_samples.csv", batch.x_samples, "x");
  const char* families[] = {"d_obs1", "d_obs2", "d_pair"};
  const std::vector<Eigen::MatrixXd>* data[] = {&batch.d_obs1, &batch.d_obs2, &batch.d_pair};
  for (int f = 0; f < 3; ++f)
    for (int m = 0; m < batch.n(); ++m)
      write_matrix_csv(dir / (std::string(families[f]) + "_m" + std::to_string(m) + ".csv"),
                       (*data[f])[m]);
  json manifest;
  manifest["schema"] = "gscalei/batch/1";
  manifest["n"] = batch.n();
  manifest["d"] = batch.d();
  manifest["n_s"] = batch.n_samples();
  manifest["seed"] = seed;
  manifest["families"] = {"d_obs1", "d_obs2", "d_pair"};
  spit(dir / "manifest.json", manifest.dump(2) + "\n");
}

ScoreDiffBatch read_batch_dir(const fs::path& dir) {
  const json manifest = load_json(dir / "manifest.json");
  const int n = manifest.at("n").get<int>();
  ScoreDiffBatch batch;
  batch.x_samples = read_samples_csv(dir / "x_samples.csv");
  batch.z_samples = Eigen::MatrixXd(0, 0);
  const char* families[] = {"d_obs1", "d_obs2", "d_pair"};
  std::vector<Eigen::MatrixXd>* data[] = {&batch.d_obs1, &batch.d_obs2, &batch.d_pair};
  for (int f = 0; f < 3; ++f)
    for (int m = 0; m < n; ++m)
      data[f]->push_back(read_matrix_csv(
          dir / (std::string(families[f]) + "_m" + std::to_string(m) + ".csv")));
  return batch;
}

void write_fit_dir(const fs::path& dir, const FitResult& fit) {
  fs::create_directories(dir);
  write_matrix_csv(dir / "h_star.csv", fit.h_star.matrix());
  json perm;
  perm["schema"] = "gscalei/perm/1";
  perm["perm"] = fit.perm;
  perm["coupling"] = fit.coupling;
  perm["coupling_uncertain"] = fit.coupling_uncertain;
  spit(dir / "perm.json", perm.dump(2) + "\n");
  write_matrix_csv(dir / "d_t.csv", fit.d_matrices.d_t);
  write_matrix_csv(dir / "d.csv", fit.d_matrices.d);
  write_matrix_csv(dir / "d_tilde.csv", fit.d_matrices.d_tilde);
  write_dag_json(dir / "graph.json", fit.graph);
  Eigen::MatrixXd trace(fit.loss_trace.size(), 1);
  for (std::size_t i = 0; i < fit.loss_trace.size(); ++i) trace(i, 0) = fit.loss_trace[i];
  write_matrix_csv(dir / "loss_trace.csv", trace);
}

FitResult read_fit_dir(const fs::path& dir) {
  FitResult fit;
  fit.h_star = EncoderLinear(read_matrix_csv(dir / "h_star.csv"));
  const json perm = load_json(dir / "perm.json");
  fit.perm = perm.at("perm").get<std::vector<int>>();
  fit.coupling = perm.at("coupling").get<std::vector<int>>();
  fit.coupling_uncertain = perm.at("coupling_uncertain").get<bool>();
  fit.d_matrices.d_t = read_matrix_csv(dir / "d_t.csv");
  fit.d_matrices.d = read_matrix_csv(dir / "d.csv");
  fit.d_matrices.d_tilde = read_matrix_csv(dir / "d_tilde.csv");
  fit.graph = read_dag_json(dir / "graph.json");
  const Eigen::MatrixXd trace = read_matrix_csv(dir / "loss_trace.csv");
  fit.loss_trace.assign(trace.data(), trace.data() + trace.rows());
  return fit;
}

void write_eval_json(const fs::path& path, const EvalReport& report) {
  json doc;
  doc["schema"] = "gscalei/eval/1";
  doc["l2_loss"] = report.l2_loss;
  doc["shd"] = report.shd;
  doc["perm_used"] = report.perm_used;
  doc["scale_used"] = std::vector<double>(report.scale_used.data(),
                                          report.scale_used.data() + report.scale_used.size());
  doc["runtime_s"] = report.runtime_s;
  spit(path, doc.dump(2) + "\n");
}

EvalReport read_eval_json(const fs::path& path) {
  const json doc = load_json(path);
  EvalReport report;
  report.l2_loss = doc.at("l2_loss").get<double>();
  report.shd = doc.at("shd").get<int>();
  report.perm_used = doc.at("perm_used").get<std::vector<int>>();
  const auto scales = doc.at("scale_used").get<std::vector<double>>();
  report.scale_used = Eigen::Map<const Eigen::VectorXd>(scales.data(), scales.size());
  report.runtime_s = doc.at("runtime_s").get<double>();
  return report;
}

std::string results_csv_header() { return "n,d,graph_seed,l2_loss,shd,error\n"; }

std::string results_csv_row(int n, int d, std::uint64_t graph_seed, bool ok, double l2_loss,
                            int shd_value, const std::string& error) {
  char seed_buf[24];
  std::snprintf(seed_buf, sizeof(seed_buf), "%" PRIu64, graph_seed);
  std::string row = std::to_string(n) + "," + std::to_string(d) + "," + seed_buf + ",";
  if (ok) {
    row += format_double(l2_loss) + "," + std::to_string(shd_value) + ",";
  } else {
    row += ",,";
    row += error;
  }
  row += "\n";
  return row;
}

}  // namespace gscalei
