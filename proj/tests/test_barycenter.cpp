#include "oracles.hpp"

#include "seot/barycenter.hpp"
#include "seot/error.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace seot;

namespace {

LabeledDomain dirac(std::initializer_list<double> at, int label = 0) {
  RowMatrix x(1, static_cast<Eigen::Index>(at.size()));
  Eigen::Index j = 0;
  for (double v : at) x(0, j++) = v;
  return LabeledDomain(uniform_measure(DataMatrix(x)), Labels{label});
}

LabeledDomain labeled_blobs(std::size_t per_class, double sep, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  RowMatrix x(static_cast<Eigen::Index>(2 * per_class), 2);
  Labels y;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const int c = i < static_cast<Eigen::Index>(per_class) ? 0 : 1;
    x(i, 0) = n(rng) + c * sep;
    x(i, 1) = n(rng);
    y.push_back(c);
  }
  return LabeledDomain(uniform_measure(DataMatrix(x)), y);
}

Barycenter hand_barycenter(RowMatrix support, std::vector<RowMatrix> gammas) {
  std::vector<TransportPlan> plans;
  for (auto& g : gammas) {
    TransportPlan p;
    p.gamma = std::move(g);
    plans.push_back(std::move(p));
  }
  const auto n = support.rows();
  return Barycenter{.support = DataMatrix(std::move(support)),
                    .weights = Vector::Constant(n, 1.0 / static_cast<double>(n)),
                    .plans_to_sources = std::move(plans)};
}

}  // namespace

TEST_CASE("barycenter of two Diracs is their midpoint") {
  BarycenterConfig cfg;
  cfg.n_atoms = 1;
  const auto b = fit_barycenter({dirac({0.0}), dirac({2.0})}, cfg, SinkhornConfig{});
  CHECK(std::abs(b.support.values()(0, 0) - 1.0) <= 1e-6);
}

TEST_CASE("barycenter of three Diracs is their mean") {
  BarycenterConfig cfg;
  cfg.n_atoms = 1;
  const auto b = fit_barycenter({dirac({0, 0}), dirac({3, 0}), dirac({0, 3})}, cfg, SinkhornConfig{});
  CHECK(std::abs(b.support.values()(0, 0) - 1.0) <= 1e-6);
  CHECK(std::abs(b.support.values()(0, 1) - 1.0) <= 1e-6);
}

TEST_CASE("weighted Dirac barycenter follows the weights") {
  BarycenterConfig cfg;
  cfg.n_atoms = 1;
  cfg.source_weights = {0.25, 0.75};
  const auto b = fit_barycenter({dirac({0.0}), dirac({4.0})}, cfg, SinkhornConfig{});
  CHECK(std::abs(b.support.values()(0, 0) - 3.0) <= 1e-6);
}

TEST_CASE("self-barycenter of identical copies recovers the points") {
  std::mt19937_64 rng(7);
  const auto m = oracle::random_uniform_measure(5, 2, rng, 3.0);
  const LabeledDomain d(m, Labels(5, 0));
  BarycenterConfig cfg;
  cfg.n_atoms = 5;
  cfg.seed = 1;
  SinkhornConfig ot;
  ot.epsilon = 1e-3;
  const auto b = fit_barycenter({d, d}, cfg, ot);
  CHECK(oracle::matched_distance(b.support.values(), m.points().values()) <= 1e-3);
}

TEST_CASE("objective trace is non-increasing and plans have the atom marginal") {
  std::mt19937_64 rng(8);
  std::vector<LabeledDomain> src{labeled_blobs(15, 4.0, rng), labeled_blobs(20, 4.0, rng)};
  BarycenterConfig cfg;
  cfg.max_outer_iter = 15;
  for (auto init : {BarycenterInit::KMeansPlusPlus, BarycenterInit::RandomSubset}) {
    cfg.init = init;
    const auto b = fit_barycenter(src, cfg, SinkhornConfig{});
    CHECK(b.n_atoms() == 30);
    for (std::size_t i = 1; i < b.objective_trace.size(); ++i)
      CHECK(b.objective_trace[i] <= b.objective_trace[i - 1] + 1e-9);
    for (const auto& p : b.plans_to_sources) {
      CHECK((p.gamma.rowwise().sum() - b.weights).cwiseAbs().sum() <= 1e-8);
    }
    CHECK(b.atom_labels.size() == 30);
    CHECK(!b.has_target());
  }
}

TEST_CASE("translating every source translates the support") {
  std::mt19937_64 rng(9);
  std::vector<LabeledDomain> src{labeled_blobs(10, 4.0, rng), labeled_blobs(10, 4.0, rng)};
  std::vector<LabeledDomain> moved;
  Eigen::RowVector2d v(3.0, -2.0);
  for (const auto& s : src) {
    RowMatrix x = s.measure.points().values();
    x.rowwise() += v;
    moved.emplace_back(uniform_measure(DataMatrix(x)), s.labels);
  }
  BarycenterConfig cfg;
  cfg.seed = 4;
  cfg.max_outer_iter = 20;
  const auto a = fit_barycenter(src, cfg, SinkhornConfig{});
  const auto b = fit_barycenter(moved, cfg, SinkhornConfig{});
  RowMatrix shifted = a.support.values();
  shifted.rowwise() += v;
  CHECK((shifted - b.support.values()).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("atom labels by transported class mass") {
  RowMatrix support(2, 1);
  support << 0.0, 1.0;
  RowMatrix src_x(3, 1);
  src_x << 0.0, 1.0, 2.0;
  const LabeledDomain src(uniform_measure(DataMatrix(src_x)), Labels{2, 1, 0});

  SUBCASE("unanimous and majority mass") {
    RowMatrix g(2, 3);
    g << 0.0, 0.5, 0.0, 0.1, 0.0, 0.4;
    auto b = hand_barycenter(support, {g});
    CHECK(assign_atom_labels(b, {src}) == Labels{1, 0});
  }
  SUBCASE("exact tie goes to the smaller id") {
    RowMatrix g(2, 3);
    g << 0.25, 0.0, 0.25, 0.0, 0.5, 0.0;
    auto b = hand_barycenter(support, {g});
    CHECK(assign_atom_labels(b, {src})[0] == 0);
  }
  SUBCASE("argmax is invariant to scaling the plans") {
    RowMatrix g(2, 3);
    g << 0.1, 0.3, 0.1, 0.2, 0.0, 0.3;
    const auto base = assign_atom_labels(hand_barycenter(support, {g}), {src});
    for (double s : {1e-6, 3.0, 1e6}) CHECK(assign_atom_labels(hand_barycenter(support, {RowMatrix(g * s)}), {src}) == base);
  }
  SUBCASE("massless atoms fall back to the nearest source sample") {
    RowMatrix g(2, 3);
    g << 0.0, 0.0, 0.0, 0.3, 0.3, 0.4;
    std::vector<int> fallback;
    const auto labels = assign_atom_labels(hand_barycenter(support, {g}), {src}, &fallback);
    CHECK(labels[0] == 2);
    CHECK(fallback == std::vector<int>{0});
  }
}

TEST_CASE("attach target") {
  std::mt19937_64 rng(10);
  const auto m = oracle::random_uniform_measure(6, 2, rng, 3.0);
  const LabeledDomain d(m, Labels(6, 0));
  BarycenterConfig cfg;
  cfg.n_atoms = 6;
  SinkhornConfig ot;
  ot.epsilon = 1e-3;
  const auto b = fit_barycenter({d}, cfg, ot);

  SUBCASE("identical target gives a near-diagonal plan") {
    const LabeledDomain t(uniform_measure(b.support));
    const auto with = attach_target(b, t, ot);
    const auto exact = exact_ot_oracle(uniform_measure(b.support), t.measure,
                                       cost_matrix(b.support, t.measure.points()));
    CHECK((with.plan_to_target.gamma - exact.gamma).cwiseAbs().maxCoeff() <= 1e-3);
    CHECK(with.plans_to_sources.size() == b.plans_to_sources.size());
  }
  SUBCASE("single target point takes all mass") {
    const auto with = attach_target(b, dirac({0.0, 0.0}), ot);
    CHECK((with.plan_to_target.gamma.col(0) - b.weights).cwiseAbs().maxCoeff() <= 1e-9);
  }
  SUBCASE("attaching twice overwrites and leaves source plans alone") {
    const auto once = attach_target(b, dirac({0.0, 0.0}), ot);
    const auto twice = attach_target(once, LabeledDomain(uniform_measure(b.support)), ot);
    CHECK(twice.plan_to_target.cols() == 6);
    CHECK(twice.plans_to_sources[0].gamma == b.plans_to_sources[0].gamma);
  }
  CHECK_THROWS_AS(attach_target(b, dirac({0.0}), ot), Error);
}

TEST_CASE("barycenter input errors") {
  std::mt19937_64 rng(11);
  BarycenterConfig cfg;
  CHECK_THROWS_AS(fit_barycenter({}, cfg, SinkhornConfig{}), Error);
  const auto src = labeled_blobs(3, 4.0, rng);
  cfg.n_atoms = 100;
  CHECK_THROWS_AS(fit_barycenter({src}, cfg, SinkhornConfig{}), Error);
  cfg.n_atoms = 0;
  CHECK_THROWS_AS(fit_barycenter({src}, cfg, SinkhornConfig{}, 1.0), Error);
  cfg.source_weights = {0.5, 0.6};
  CHECK_THROWS_AS(fit_barycenter({src, src}, cfg, SinkhornConfig{}), Error);
  CHECK_THROWS_AS(fit_barycenter({LabeledDomain(src.measure)}, BarycenterConfig{}, SinkhornConfig{}), Error);
}
