#include "seot/error.hpp"
#include "seot/pipeline.hpp"
#include "seot/synth.hpp"

#include <doctest.h>

#include <set>

using namespace seot;

namespace {

SynthData small_synth(double degrees, std::uint64_t seed, int per_class = 30, int sources = 2) {
  SynthSpec spec;
  spec.samples_per_class = per_class;
  spec.n_sources = sources;
  spec.shift = Shift::rotate(degrees);
  spec.seed = seed;
  return generate_synth(spec);
}

}  // namespace

TEST_CASE("multi-source run on unshifted data") {
  const auto data = small_synth(0.0, 1);
  SeotConfig cfg;
  cfg.seed = 3;
  const auto run = run_seot(data.sources, data.target, cfg);
  REQUIRE(run.report);
  CHECK(run.predictions.size() == data.target.size());
  CHECK(run.report->accuracy >= 0.9);
  CHECK(run.n_classes == 2);
  CHECK(run.k_min == 2);
  CHECK(run.k_max == 7);
  CHECK(run.chosen_k >= 2);
  CHECK(run.chosen_k <= 7);
  CHECK(run.graph.size() == 60 + 2 * 60 + 60);
  for (const auto& e : run.graph.edges()) CHECK(std::min(e.i, e.j) < 60);
  std::set<std::string> stages;
  for (const auto& [name, s] : run.timings) stages.insert(name);
  for (const char* s : {"standardize", "barycenter", "attach_target", "graph", "laplacian", "eigensolver", "embed", "classify"})
    CHECK(stages.count(s) == 1);
  CHECK(run.diagnostics.max_eigen_residual <= cfg.solver.tol * 10);
}

TEST_CASE("runs are deterministic for a fixed seed") {
  const auto data = small_synth(30.0, 2);
  SeotConfig cfg;
  cfg.seed = 5;
  const auto a = run_seot(data.sources, data.target, cfg);
  const auto b = run_seot(data.sources, data.target, cfg);
  CHECK(a.predictions == b.predictions);
  CHECK(a.embedding.vectors == b.embedding.vectors);
  CHECK(a.barycenter->support.values() == b.barycenter->support.values());
}

TEST_CASE("fixed k and the softmax head") {
  const auto data = small_synth(0.0, 3);
  SeotConfig cfg;
  cfg.k_mode = KMode::fixed(3);
  cfg.classifier.kind = ClassifierKind::Softmax;
  const auto run = run_seot(data.sources, data.target, cfg);
  CHECK(run.chosen_k == 3);
  CHECK(run.embedding.vectors.cols() == 3);
  CHECK(run.report->accuracy >= 0.85);
}

TEST_CASE("unlabeled target gives predictions without a report") {
  const auto data = small_synth(0.0, 4);
  const LabeledDomain target(data.target.measure);
  const auto run = run_seot(data.sources, target, SeotConfig{});
  CHECK(!run.report);
  CHECK(run.predictions.size() == target.size());
}

TEST_CASE("two-domain twin matching: the direct plan pairs each point with its twin") {
  const auto data = small_synth(0.0, 5, 20, 1);
  const auto& s = data.sources[0];
  SeotConfig cfg;
  cfg.ot.epsilon = 1e-3;
  cfg.k_mode = KMode::fixed(4);
  cfg.classifier.k_neighbors = 1;
  cfg.standardize = false;
  const auto run = run_two_domain(s, s, cfg, true);
  REQUIRE(run.report);
  CHECK(!run.barycenter);
  CHECK(run.graph.size() == 2 * s.size());
  CHECK(run.report->accuracy == 1.0);
}

TEST_CASE("two-domain through a one-source barycenter") {
  const auto data = small_synth(0.0, 6, 20, 1);
  const auto run = run_two_domain(data.sources[0], data.target, SeotConfig{}, false);
  CHECK(run.barycenter);
  CHECK(run.report->accuracy >= 0.85);
}

TEST_CASE("pipeline input errors name the problem") {
  const auto data = small_synth(0.0, 7, 10, 1);
  CHECK_THROWS_AS(run_seot({}, data.target, SeotConfig{}), Error);
  CHECK_THROWS_AS(run_seot({LabeledDomain(data.sources[0].measure)}, data.target, SeotConfig{}), Error);
  SeotConfig cfg;
  cfg.k_mode = KMode::auto_gap(2, 200);
  try {
    run_seot(data.sources, data.target, cfg);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::InvalidInput);
  }
  cfg = {};
  cfg.ot.epsilon = -1.0;
  try {
    run_seot(data.sources, data.target, cfg);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("stage") != std::string::npos);
  }
}
