#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <set>

namespace oracle {

double golden_section(const std::function<double(double)>& f, double lo, double hi, double tol) {
  const double r = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - r * (b - a), d = a + r * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - r * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + r * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

double two_point_entropic_a(double eps) {
  auto xlogx = [](double x) { return x > 0.0 ? x * std::log(x) : 0.0; };
  auto objective = [&](double a) {
    const double h = -(2.0 * xlogx(a) + 2.0 * xlogx(0.5 - a));
    return 2.0 * (0.5 - a) - eps * h;
  };
  return golden_section(objective, 0.0, 0.5);
}

Eigen::MatrixXd dense_laplacian(const seot::CrossDomainGraph& graph) {
  const auto k = static_cast<Eigen::Index>(graph.size());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(k, k);
  for (const auto& e : graph.edges()) {
    a(static_cast<Eigen::Index>(e.i), static_cast<Eigen::Index>(e.j)) = e.w;
    a(static_cast<Eigen::Index>(e.j), static_cast<Eigen::Index>(e.i)) = e.w;
  }
  for (Eigen::Index i = 0; i < k; ++i)
    if (a.row(i).sum() == 0.0) a(i, i) = 1.0;
  const Eigen::VectorXd s = a.rowwise().sum().cwiseSqrt().cwiseInverse();
  return Eigen::MatrixXd::Identity(k, k) - s.asDiagonal() * a * s.asDiagonal();
}

Eigen::VectorXd dense_eigenvalues(const Eigen::MatrixXd& symmetric) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetric, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

std::size_t bfs_components(const seot::CrossDomainGraph& graph) {
  const std::size_t k = graph.size();
  std::vector<std::vector<std::size_t>> adj(k);
  for (const auto& e : graph.edges()) {
    adj[e.i].push_back(e.j);
    adj[e.j].push_back(e.i);
  }
  std::vector<bool> seen(k, false);
  std::size_t count = 0;
  for (std::size_t s = 0; s < k; ++s) {
    if (seen[s]) continue;
    ++count;
    std::queue<std::size_t> q;
    q.push(s);
    seen[s] = true;
    while (!q.empty()) {
      const auto u = q.front();
      q.pop();
      for (auto v : adj[u])
        if (!seen[v]) {
          seen[v] = true;
          q.push(v);
        }
    }
  }
  return count;
}

double max_principal_sine(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const Eigen::MatrixXd qa = Eigen::HouseholderQR<Eigen::MatrixXd>(a).householderQ() *
                             Eigen::MatrixXd::Identity(a.rows(), a.cols());
  const Eigen::MatrixXd qb = Eigen::HouseholderQR<Eigen::MatrixXd>(b).householderQ() *
                             Eigen::MatrixXd::Identity(b.rows(), b.cols());
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(qa.transpose() * qb);
  const double smallest_cos = std::min(1.0, svd.singularValues().minCoeff());
  return std::sqrt(std::max(0.0, 1.0 - smallest_cos * smallest_cos));
}

Eigen::VectorXd numeric_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                 const Eigen::VectorXd& x, double h) {
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    xp(i) = x(i) + h;
    const double up = f(xp);
    xp(i) = x(i) - h;
    const double down = f(xp);
    xp(i) = x(i);
    g(i) = (up - down) / (2.0 * h);
  }
  return g;
}

double matched_distance(const seot::RowMatrix& a, const seot::RowMatrix& b) {
  auto directed = [](const seot::RowMatrix& p, const seot::RowMatrix& q) {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (Eigen::Index j = 0; j < q.rows(); ++j) best = std::min(best, (p.row(i) - q.row(j)).norm());
      worst = std::max(worst, best);
    }
    return worst;
  };
  return std::max(directed(a, b), directed(b, a));
}

std::vector<int> kmeans(const Eigen::MatrixXd& rows, int k, int iters) {
  const Eigen::Index n = rows.rows();
  Eigen::MatrixXd centers(k, rows.cols());
  centers.row(0) = rows.row(0);
  Eigen::VectorXd dist = Eigen::VectorXd::Constant(n, std::numeric_limits<double>::infinity());
  for (int c = 1; c < k; ++c) {
    for (Eigen::Index i = 0; i < n; ++i)
      dist(i) = std::min(dist(i), (rows.row(i) - centers.row(c - 1)).squaredNorm());
    Eigen::Index far = 0;
    dist.maxCoeff(&far);
    centers.row(c) = rows.row(far);
  }
  std::vector<int> label(static_cast<std::size_t>(n), 0);
  for (int it = 0; it < iters; ++it) {
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      int best = 0;
      double bd = std::numeric_limits<double>::infinity();
      for (int c = 0; c < k; ++c) {
        const double d = (rows.row(i) - centers.row(c)).squaredNorm();
        if (d < bd) {
          bd = d;
          best = c;
        }
      }
      if (label[static_cast<std::size_t>(i)] != best) changed = true;
      label[static_cast<std::size_t>(i)] = best;
    }
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(k, rows.cols());
    std::vector<int> count(static_cast<std::size_t>(k), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      sum.row(label[static_cast<std::size_t>(i)]) += rows.row(i);
      ++count[static_cast<std::size_t>(label[static_cast<std::size_t>(i)])];
    }
    for (int c = 0; c < k; ++c)
      if (count[static_cast<std::size_t>(c)] > 0) centers.row(c) = sum.row(c) / count[static_cast<std::size_t>(c)];
    if (!changed && it > 0) break;
  }
  return label;
}

bool same_partition(const std::vector<int>& a, const std::vector<std::size_t>& b) {
  if (a.size() != b.size()) return false;
  std::set<std::pair<int, std::size_t>> pairs;
  std::set<int> la;
  std::set<std::size_t> lb;
  for (std::size_t i = 0; i < a.size(); ++i) {
    pairs.emplace(a[i], b[i]);
    la.insert(a[i]);
    lb.insert(b[i]);
  }
  return pairs.size() == la.size() && pairs.size() == lb.size();
}

namespace {

seot::CrossDomainGraph make_graph(std::size_t k, const std::set<std::pair<std::size_t, std::size_t>>& pairs,
                                  std::mt19937_64& rng) {
  std::uniform_real_distribution<double> weight(0.05, 1.0);
  std::vector<seot::Edge> edges;
  for (const auto& [i, j] : pairs) edges.push_back({i, j, weight(rng)});
  return seot::CrossDomainGraph(k, {}, std::move(edges));
}

}  // namespace

seot::CrossDomainGraph random_block_graph(std::size_t k, std::size_t parts, std::size_t extra,
                                          std::mt19937_64& rng) {
  std::vector<std::size_t> perm(k);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::set<std::pair<std::size_t, std::size_t>> pairs;
  auto add = [&](std::size_t a, std::size_t b) {
    if (a == b) return;
    pairs.emplace(std::min(a, b), std::max(a, b));
  };
  for (std::size_t p = 0; p < parts; ++p) {
    const std::size_t lo = p * k / parts, hi = (p + 1) * k / parts;
    for (std::size_t i = lo + 1; i < hi; ++i) {
      std::uniform_int_distribution<std::size_t> pick(lo, i - 1);
      add(perm[i], perm[pick(rng)]);
    }
    if (hi - lo > 1) {
      std::uniform_int_distribution<std::size_t> pick(lo, hi - 1);
      for (std::size_t e = 0; e < extra * (hi - lo) / k; ++e) add(perm[pick(rng)], perm[pick(rng)]);
    }
  }
  return make_graph(k, pairs, rng);
}

seot::CrossDomainGraph random_sparse_graph(std::size_t k, double degree, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, k - 1);
  std::set<std::pair<std::size_t, std::size_t>> pairs;
  const auto target = static_cast<std::size_t>(degree * static_cast<double>(k) / 2.0);
  for (std::size_t e = 0; e < target; ++e) {
    const auto a = pick(rng), b = pick(rng);
    if (a != b) pairs.emplace(std::min(a, b), std::max(a, b));
  }
  return make_graph(k, pairs, rng);
}

seot::DiscreteMeasure random_uniform_measure(std::size_t n, std::size_t d, std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> normal(0.0, scale);
  seot::RowMatrix x(n, d);
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) = normal(rng);
  return seot::uniform_measure(seot::DataMatrix(x));
}

seot::DiscreteMeasure random_measure(std::size_t n, std::size_t d, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.1, 1.0);
  seot::RowMatrix x(n, d);
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) = normal(rng);
  seot::Vector w(n);
  for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = unif(rng);
  w /= w.sum();
  return seot::DiscreteMeasure(seot::DataMatrix(x), w);
}

}  // namespace oracle
