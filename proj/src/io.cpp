#include "seot/io.hpp"

#include "seot/error.hpp"
#include "seot/format.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

namespace seot::io {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

bool parse_double(const std::string& s, double& out) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (first != last && *first == '+') ++first;
  const auto res = std::from_chars(first, last, out);
  return res.ec == std::errc() && res.ptr == last;
}

template <class Int>
bool parse_int(const std::string& s, Int& out) {
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  return in;
}

}  // namespace

LabeledDomain parse_dataset(std::istream& in, const std::string& name) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::InvalidInput, name + ":1: missing header line");
  std::size_t line_no = 1;
  std::vector<double> values;
  Labels labels;
  std::size_t cols = 0, rows = 0, unlabeled = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = name + ":" + std::to_string(line_no) + ": ";
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
    if (line.back() == ',') cells.emplace_back();
    if (cells.size() < 2) throw Error(ErrorKind::InvalidInput, where + "expected label and at least one feature");
    if (cols == 0) cols = cells.size() - 1;
    if (cells.size() - 1 != cols)
      throw Error(ErrorKind::InvalidInput, where + "expected " + std::to_string(cols) + " features, found " +
                                               std::to_string(cells.size() - 1));
    if (cells[0] == "?") {
      ++unlabeled;
      labels.push_back(-1);
    } else {
      int y = 0;
      if (!parse_int(cells[0], y) || y < 0)
        throw Error(ErrorKind::InvalidInput, where + "bad label '" + cells[0] + "'");
      labels.push_back(y);
    }
    for (std::size_t c = 1; c < cells.size(); ++c) {
      double v = 0.0;
      if (!parse_double(cells[c], v) || !std::isfinite(v))
        throw Error(ErrorKind::InvalidInput, where + "bad number '" + cells[c] + "'");
      values.push_back(v);
    }
    ++rows;
  }
  if (rows == 0) throw Error(ErrorKind::InvalidInput, name + ": no samples");
  if (unlabeled != 0 && unlabeled != rows)
    throw Error(ErrorKind::InvalidInput, name + ": mixes labeled and unlabeled ('?') rows");
  DataMatrix x(rows, cols, values);
  std::optional<Labels> y;
  if (unlabeled == 0) y = std::move(labels);
  return LabeledDomain(uniform_measure(x), std::move(y));
}

LabeledDomain read_dataset(const std::filesystem::path& path) {
  auto in = open_in(path);
  return parse_dataset(in, path.string());
}

void write_dataset(const std::filesystem::path& path, const LabeledDomain& domain) {
  std::string text = "label";
  const auto& x = domain.measure.points().values();
  for (Eigen::Index j = 0; j < x.cols(); ++j) text += ",f" + std::to_string(j + 1);
  text += '\n';
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    text += domain.labels ? std::to_string((*domain.labels)[static_cast<std::size_t>(i)]) : std::string("?");
    for (Eigen::Index j = 0; j < x.cols(); ++j) text += "," + format_double(x(i, j));
    text += '\n';
  }
  write_text(path, text);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorKind::IoError, "write failed for " + path.string());
}

// ---- config ----

namespace {

double as_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  if (!parse_double(v, out)) throw Error(ErrorKind::InvalidInput, "key '" + key + "': bad number '" + v + "'");
  return out;
}

long long as_int(const std::string& key, const std::string& v) {
  long long out = 0;
  if (!parse_int(v, out)) throw Error(ErrorKind::InvalidInput, "key '" + key + "': bad integer '" + v + "'");
  return out;
}

std::size_t as_count(const std::string& key, const std::string& v) {
  const long long n = as_int(key, v);
  if (n < 0) throw Error(ErrorKind::InvalidInput, "key '" + key + "': must be >= 0");
  return static_cast<std::size_t>(n);
}

bool as_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw Error(ErrorKind::InvalidInput, "key '" + key + "': expected true/false, got '" + v + "'");
}

using Setter = std::function<void(SeotConfig&, bool*, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"epsilon", [](auto& c, bool*, auto& k, auto& v) { c.ot.epsilon = as_double(k, v); }},
      {"max_iter", [](auto& c, bool*, auto& k, auto& v) { c.ot.max_iter = static_cast<int>(as_int(k, v)); }},
      {"tol", [](auto& c, bool*, auto& k, auto& v) { c.ot.tol = as_double(k, v); }},
      {"log_domain", [](auto& c, bool*, auto& k, auto& v) { c.ot.log_domain = as_bool(k, v); }},
      {"epsilon_scaling", [](auto& c, bool*, auto& k, auto& v) { c.ot.epsilon_scaling = as_bool(k, v); }},
      {"n_atoms", [](auto& c, bool*, auto& k, auto& v) { c.bary.n_atoms = static_cast<int>(as_count(k, v)); }},
      {"source_weights",
       [](auto& c, bool*, auto& k, auto& v) {
         c.bary.source_weights.clear();
         if (v.empty()) return;
         std::stringstream ss(v);
         std::string item;
         while (std::getline(ss, item, ',')) c.bary.source_weights.push_back(as_double(k, trim(item)));
       }},
      {"max_outer_iter", [](auto& c, bool*, auto& k, auto& v) { c.bary.max_outer_iter = static_cast<int>(as_int(k, v)); }},
      {"support_tol", [](auto& c, bool*, auto& k, auto& v) { c.bary.support_tol = as_double(k, v); }},
      {"init",
       [](auto& c, bool*, auto& k, auto& v) {
         if (v == "kmeans++") c.bary.init = BarycenterInit::KMeansPlusPlus;
         else if (v == "random") c.bary.init = BarycenterInit::RandomSubset;
         else throw Error(ErrorKind::InvalidInput, "key '" + k + "': expected kmeans++ or random");
       }},
      {"prune_threshold", [](auto& c, bool*, auto& k, auto& v) { c.prune_threshold = as_double(k, v); }},
      {"k",
       [](auto& c, bool*, auto& k, auto& v) {
         if (v == "auto") {
           c.k_mode.automatic = true;
         } else {
           c.k_mode.automatic = false;
           c.k_mode.k = as_count(k, v);
           if (c.k_mode.k < 1) throw Error(ErrorKind::InvalidInput, "key 'k': must be >= 1 or auto");
         }
       }},
      {"k_min", [](auto& c, bool*, auto& k, auto& v) { c.k_mode.k_min = as_count(k, v); }},
      {"k_max", [](auto& c, bool*, auto& k, auto& v) { c.k_mode.k_max = as_count(k, v); }},
      {"row_normalize", [](auto& c, bool*, auto& k, auto& v) { c.row_normalize = as_bool(k, v); }},
      {"classifier",
       [](auto& c, bool*, auto& k, auto& v) {
         if (v == "knn") c.classifier.kind = ClassifierKind::Knn;
         else if (v == "softmax") c.classifier.kind = ClassifierKind::Softmax;
         else throw Error(ErrorKind::InvalidInput, "key '" + k + "': expected knn or softmax");
       }},
      {"k_neighbors", [](auto& c, bool*, auto& k, auto& v) { c.classifier.k_neighbors = as_count(k, v); }},
      {"l2", [](auto& c, bool*, auto& k, auto& v) { c.classifier.l2 = as_double(k, v); }},
      {"lr", [](auto& c, bool*, auto& k, auto& v) { c.classifier.lr = as_double(k, v); }},
      {"epochs", [](auto& c, bool*, auto& k, auto& v) { c.classifier.epochs = static_cast<int>(as_int(k, v)); }},
      {"n_classes", [](auto& c, bool*, auto& k, auto& v) { c.n_classes = static_cast<int>(as_count(k, v)); }},
      {"seed", [](auto& c, bool*, auto& k, auto& v) { c.seed = static_cast<std::uint64_t>(as_count(k, v)); }},
      {"standardize", [](auto& c, bool*, auto& k, auto& v) { c.standardize = as_bool(k, v); }},
      {"cost_p", [](auto& c, bool*, auto& k, auto& v) { c.cost_p = as_double(k, v); }},
      {"isolated_policy",
       [](auto& c, bool*, auto& k, auto& v) {
         if (v == "selfloop") c.isolated_policy = IsolatedPolicy::SelfLoop;
         else if (v == "drop") c.isolated_policy = IsolatedPolicy::Drop;
         else throw Error(ErrorKind::InvalidInput, "key '" + k + "': expected selfloop or drop");
       }},
      {"eig_tol", [](auto& c, bool*, auto& k, auto& v) { c.solver.tol = as_double(k, v); }},
      {"eig_max_restarts", [](auto& c, bool*, auto& k, auto& v) { c.solver.max_restarts = static_cast<int>(as_int(k, v)); }},
      {"krylov_dim", [](auto& c, bool*, auto& k, auto& v) { c.solver.krylov_dim = static_cast<int>(as_count(k, v)); }},
      {"gap_margin", [](auto& c, bool*, auto& k, auto& v) { c.gap_margin = as_count(k, v); }},
      {"train_on_sources_too", [](auto& c, bool*, auto& k, auto& v) { c.train_on_sources_too = as_bool(k, v); }},
      {"skip_barycenter",
       [](auto&, bool* skip, auto& k, auto& v) {
         const bool b = as_bool(k, v);
         if (skip) *skip = b;
       }},
  };
  return table;
}

}  // namespace

void apply_config_key(SeotConfig& cfg, const std::string& key, const std::string& value, bool* skip_barycenter) {
  const auto& table = setters();
  const auto it = table.find(key);
  if (it == table.end()) throw Error(ErrorKind::InvalidInput, "unknown config key '" + key + "'");
  it->second(cfg, skip_barycenter, key, value);
}

SeotConfig parse_config(std::istream& in, const std::string& name, bool* skip_barycenter) {
  SeotConfig cfg;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = name + ":" + std::to_string(line_no) + ": ";
    if (eq == std::string::npos) throw Error(ErrorKind::InvalidInput, where + "expected key = value");
    try {
      apply_config_key(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)), skip_barycenter);
    } catch (const Error& e) {
      throw Error(e.kind(), where + e.message());
    }
  }
  return cfg;
}

SeotConfig read_config(const std::filesystem::path& path, bool* skip_barycenter) {
  auto in = open_in(path);
  return parse_config(in, path.string(), skip_barycenter);
}

std::map<std::string, std::string> config_echo(const SeotConfig& c, bool skip_barycenter) {
  auto b = [](bool v) { return std::string(v ? "true" : "false"); };
  auto d = [](double v) { return format_double(v); };
  std::string weights;
  for (std::size_t i = 0; i < c.bary.source_weights.size(); ++i)
    weights += (i ? "," : "") + format_double(c.bary.source_weights[i]);
  return {
      {"epsilon", d(c.ot.epsilon)},
      {"max_iter", std::to_string(c.ot.max_iter)},
      {"tol", d(c.ot.tol)},
      {"log_domain", b(c.ot.log_domain)},
      {"epsilon_scaling", b(c.ot.epsilon_scaling)},
      {"n_atoms", std::to_string(c.bary.n_atoms)},
      {"source_weights", weights},
      {"max_outer_iter", std::to_string(c.bary.max_outer_iter)},
      {"support_tol", d(c.bary.support_tol)},
      {"init", c.bary.init == BarycenterInit::KMeansPlusPlus ? "kmeans++" : "random"},
      {"prune_threshold", d(c.prune_threshold)},
      {"k", c.k_mode.automatic ? "auto" : std::to_string(c.k_mode.k)},
      {"k_min", std::to_string(c.k_mode.k_min)},
      {"k_max", std::to_string(c.k_mode.k_max)},
      {"row_normalize", b(c.row_normalize)},
      {"classifier", c.classifier.kind == ClassifierKind::Knn ? "knn" : "softmax"},
      {"k_neighbors", std::to_string(c.classifier.k_neighbors)},
      {"l2", d(c.classifier.l2)},
      {"lr", d(c.classifier.lr)},
      {"epochs", std::to_string(c.classifier.epochs)},
      {"n_classes", std::to_string(c.n_classes)},
      {"seed", std::to_string(c.seed)},
      {"standardize", b(c.standardize)},
      {"cost_p", d(c.cost_p)},
      {"isolated_policy", c.isolated_policy == IsolatedPolicy::SelfLoop ? "selfloop" : "drop"},
      {"eig_tol", d(c.solver.tol)},
      {"eig_max_restarts", std::to_string(c.solver.max_restarts)},
      {"krylov_dim", std::to_string(c.solver.krylov_dim)},
      {"gap_margin", std::to_string(c.gap_margin)},
      {"train_on_sources_too", b(c.train_on_sources_too)},
      {"skip_barycenter", b(skip_barycenter)},
  };
}

// ---- reports ----

nlohmann::ordered_json eval_to_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["accuracy"] = r.accuracy;
  j["per_class_accuracy"] = r.per_class_accuracy;  // NaN serializes as null
  j["confusion"] = r.confusion;
  return j;
}

namespace {

nlohmann::ordered_json config_json(const SeotConfig& cfg, bool skip_barycenter) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& [k, v] : config_echo(cfg, skip_barycenter)) j[k] = v;
  return j;
}

}  // namespace

nlohmann::ordered_json run_report(const SeotRun& run, const SeotConfig& cfg, const std::string& method,
                                  bool skip_barycenter) {
  nlohmann::ordered_json j;
  j["schema_version"] = kReportSchemaVersion;
  j["method"] = method;
  j["seed"] = cfg.seed;
  j["n_classes"] = run.n_classes;
  j["K"] = run.graph.size();
  j["n_test"] = run.predictions.size();
  if (run.report) {
    const auto e = eval_to_json(*run.report);
    for (const auto& [k, v] : e.items()) j[k] = v;
  }
  j["chosen_k"] = run.chosen_k;
  j["k_range"] = {run.k_min, run.k_max};
  j["eigenvalues"] = std::vector<double>(run.embedding.eigenvalues.data(),
                                         run.embedding.eigenvalues.data() + run.embedding.eigenvalues.size());
  j["gaps"] = run.gaps.gaps;
  j["gap_at_n_classes"] = run.gaps.gap_at_n_classes;

  const auto& dg = run.diagnostics;
  nlohmann::ordered_json diag;
  diag["unconverged_plans"] = dg.unconverged_plans;
  diag["isolated_nodes"] = dg.isolated_nodes;
  diag["graph_edges"] = run.graph.nnz();
  diag["barycenter_converged"] = dg.barycenter_converged;
  diag["barycenter_iterations"] = dg.barycenter_iterations;
  diag["fallback_labeled_atoms"] = dg.fallback_labeled_atoms;
  diag["eigensolver_restarts"] = dg.eigensolver_restarts;
  diag["matvecs"] = dg.matvecs;
  diag["max_eigen_residual"] = dg.max_eigen_residual;
  j["diagnostics"] = diag;
  j["config"] = config_json(cfg, skip_barycenter);
  return j;
}

nlohmann::ordered_json baseline_report(const EvalReport& report, const SeotConfig& cfg) {
  nlohmann::ordered_json j;
  j["schema_version"] = kReportSchemaVersion;
  j["method"] = "source-only";
  j["seed"] = cfg.seed;
  j["n_classes"] = report.confusion.size();
  j["n_test"] = report.n_test;
  const auto e = eval_to_json(report);
  for (const auto& [k, v] : e.items()) j[k] = v;
  j["config"] = config_json(cfg, false);
  return j;
}

nlohmann::ordered_json timings_json(const SeotRun& run) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& [stage, seconds] : run.timings) j[stage] = seconds;
  return j;
}

std::string spectrum_text(const SeotRun& run, std::size_t k_max) {
  const Vector& ev = run.embedding.eigenvalues;
  std::ostringstream out;
  out << "# K=" << run.graph.size() << " n_classes=" << run.n_classes << " selected_k=" << run.chosen_k << '\n';
  out << "# index\teigenvalue\n";
  const auto count = std::min<std::size_t>(k_max + 1, static_cast<std::size_t>(ev.size()));
  for (std::size_t i = 0; i < count; ++i)
    out << i + 1 << '\t' << format_double(ev[static_cast<Eigen::Index>(i)]) << '\n';
  out << "# gaps: j\tlambda_{j+1}-lambda_j\n";
  for (std::size_t j = 1; j + 1 <= count; ++j)
    out << "gap\t" << j << '\t'
        << format_double(ev[static_cast<Eigen::Index>(j)] - ev[static_cast<Eigen::Index>(j - 1)]) << '\n';
  out << "selected_k\t" << run.chosen_k << '\n';
  out << "gap_at_n_classes\t" << format_double(run.gaps.gap_at_n_classes) << '\n';
  return out.str();
}

}  // namespace seot::io
