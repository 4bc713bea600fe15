// Drives the seot binary end to end: exit codes, messages, determinism and
// report schema conformance.

#include <doctest.h>

#include <json.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path kWork = SEOT_WORK_DIR;

struct Result {
  int code;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Result cli(const std::string& args) {
  fs::create_directories(kWork);
  const auto out = kWork / "stdout.txt", err = kWork / "stderr.txt";
  const std::string cmd = std::string(SEOT_CLI_PATH) + " " + args + " >" + out.string() + " 2>" + err.string();
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
}

std::string p(const fs::path& path) { return path.string(); }

std::string sources_args(const fs::path& dir, int n) {
  std::string s;
  for (int i = 0; i < n; ++i) s += " --source " + p(dir / ("source_" + std::to_string(i) + ".csv"));
  return s;
}

// Subset of JSON Schema used by the shipped report schema.
bool type_ok(const json& v, const std::string& t) {
  if (t == "object") return v.is_object();
  if (t == "array") return v.is_array();
  if (t == "string") return v.is_string();
  if (t == "integer") return v.is_number_integer();
  if (t == "number") return v.is_number();
  if (t == "boolean") return v.is_boolean();
  if (t == "null") return v.is_null();
  return false;
}

void validate(const json& v, const json& schema, const std::string& path, std::vector<std::string>& errs) {
  if (schema.contains("type")) {
    bool ok = false;
    if (schema["type"].is_array()) {
      for (const auto& t : schema["type"]) ok = ok || type_ok(v, t.get<std::string>());
    } else {
      ok = type_ok(v, schema["type"].get<std::string>());
    }
    if (!ok) {
      errs.push_back(path + ": wrong type");
      return;
    }
  }
  if (schema.contains("const") && v != schema["const"]) errs.push_back(path + ": const mismatch");
  if (schema.contains("enum")) {
    bool found = false;
    for (const auto& e : schema["enum"]) found = found || e == v;
    if (!found) errs.push_back(path + ": not in enum");
  }
  if (v.is_number()) {
    if (schema.contains("minimum") && v.get<double>() < schema["minimum"].get<double>()) errs.push_back(path + ": below minimum");
    if (schema.contains("maximum") && v.get<double>() > schema["maximum"].get<double>()) errs.push_back(path + ": above maximum");
  }
  if (v.is_object()) {
    if (schema.contains("required"))
      for (const auto& r : schema["required"])
        if (!v.contains(r.get<std::string>())) errs.push_back(path + ": missing " + r.get<std::string>());
    for (const auto& [k, item] : v.items()) {
      if (schema.contains("properties") && schema["properties"].contains(k))
        validate(item, schema["properties"][k], path + "." + k, errs);
      else if (schema.contains("additionalProperties") && schema["additionalProperties"].is_object())
        validate(item, schema["additionalProperties"], path + "." + k, errs);
    }
  }
  if (v.is_array()) {
    if (schema.contains("minItems") && v.size() < schema["minItems"].get<std::size_t>()) errs.push_back(path + ": too short");
    if (schema.contains("maxItems") && v.size() > schema["maxItems"].get<std::size_t>()) errs.push_back(path + ": too long");
    if (schema.contains("items"))
      for (std::size_t i = 0; i < v.size(); ++i) validate(v[i], schema["items"], path + "[" + std::to_string(i) + "]", errs);
  }
  if (schema.contains("allOf"))
    for (const auto& sub : schema["allOf"]) {
      if (sub.contains("if")) {
        std::vector<std::string> probe;
        validate(v, sub["if"], path, probe);
        validate(v, probe.empty() ? sub["then"] : sub["else"], path, errs);
      } else {
        validate(v, sub, path, errs);
      }
    }
}

std::vector<std::string> schema_errors(const json& report) {
  const auto schema = json::parse(slurp(SEOT_SCHEMA_PATH));
  std::vector<std::string> errs;
  validate(report, schema, "$", errs);
  return errs;
}

const fs::path& small_synth() {
  static const fs::path dir = [] {
    const auto d = kWork / "synth_small";
    fs::remove_all(d);
    const auto r = cli("synth --out " + p(d) + " --samples-per-class 30 --sources 2 --shift rotate:20 --seed 3");
    REQUIRE(r.code == 0);
    return d;
  }();
  return dir;
}

}  // namespace

TEST_CASE("synth output is byte-identical across runs") {
  const auto a = kWork / "det_a", b = kWork / "det_b";
  fs::remove_all(a);
  fs::remove_all(b);
  REQUIRE(cli("synth --out " + p(a) + " --samples-per-class 20 --seed 11 --shift rotate:45").code == 0);
  REQUIRE(cli("synth --out " + p(b) + " --samples-per-class 20 --seed 11 --shift rotate:45").code == 0);
  for (const char* f : {"source_0.csv", "source_1.csv", "source_2.csv", "target.csv", "manifest.json"})
    CHECK(slurp(a / f) == slurp(b / f));
  const auto m = json::parse(slurp(a / "manifest.json"));
  CHECK(m["seed"] == 11);
  CHECK(m["shift"] == "rotate:45");
}

TEST_CASE("run writes a schema-valid, reproducible report") {
  const auto& d = small_synth();
  // Same file name in two directories: the report names its predictions file.
  fs::create_directories(kWork / "rep1");
  fs::create_directories(kWork / "rep2");
  const auto out1 = kWork / "rep1" / "run.json", out2 = kWork / "rep2" / "run.json";
  const std::string base = "run" + sources_args(d, 2) + " --target " + p(d / "target.csv") + " --seed 4 --out ";
  const auto r1 = cli(base + p(out1));
  REQUIRE_MESSAGE(r1.code == 0, r1.err);
  REQUIRE(cli(base + p(out2)).code == 0);
  CHECK(slurp(out1) == slurp(out2));
  const auto report = json::parse(slurp(out1));
  const auto errs = schema_errors(report);
  CHECK_MESSAGE(errs.empty(), (errs.empty() ? "" : errs.front()));
  CHECK(report["method"] == "seot");
  CHECK(report.contains("accuracy"));
  CHECK(report["config"]["seed"] == "4");
  CHECK(fs::exists(kWork / "rep1" / "run.json.predictions.csv"));
  const auto timings = json::parse(slurp(kWork / "rep1" / "run.json.timings.json"));
  CHECK(timings.contains("eigensolver"));
}

TEST_CASE("k and epsilon overrides reach the config echo") {
  const auto& d = small_synth();
  const auto out = kWork / "override.json";
  const auto r = cli("run" + sources_args(d, 2) + " --target " + p(d / "target.csv") + " --k 3 --epsilon 0.05 --out " + p(out));
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto report = json::parse(slurp(out));
  CHECK(report["chosen_k"] == 3);
  CHECK(report["config"]["epsilon"] == "0.050000000000000003");
}

TEST_CASE("baseline report matches the schema") {
  const auto& d = small_synth();
  const auto out = kWork / "base.json";
  const auto r = cli("baseline" + sources_args(d, 2) + " --target " + p(d / "target.csv") + " --out " + p(out));
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto report = json::parse(slurp(out));
  CHECK(schema_errors(report).empty());
  CHECK(report["method"] == "source-only");
}

TEST_CASE("two-domain runs") {
  const auto& d = small_synth();
  for (const char* flag : {"", " --skip-barycenter"}) {
    const auto out = kWork / "two.json";
    const auto r = cli("run2 --source " + p(d / "source_0.csv") + " --target " + p(d / "target.csv") + flag + " --out " + p(out));
    REQUIRE_MESSAGE(r.code == 0, r.err);
    CHECK(schema_errors(json::parse(slurp(out))).empty());
  }
  CHECK(cli("run2" + sources_args(d, 2) + " --target " + p(d / "target.csv") + " --out " + p(kWork / "x.json")).code == 2);
}

TEST_CASE("unlabeled target: report without accuracy plus predictions") {
  const auto& d = small_synth();
  std::ifstream in(d / "target.csv");
  std::ofstream un(kWork / "unlabeled.csv");
  std::string line;
  std::getline(in, line);
  un << line << '\n';
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    un << '?' << line.substr(line.find(',')) << '\n';
    ++rows;
  }
  un.close();
  const auto out = kWork / "unlabeled.json";
  const auto r = cli("run" + sources_args(d, 2) + " --target " + p(kWork / "unlabeled.csv") + " --out " + p(out));
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto report = json::parse(slurp(out));
  CHECK(!report.contains("accuracy"));
  CHECK(schema_errors(report).empty());
  const auto preds = slurp(kWork / "unlabeled.json.predictions.csv");
  CHECK(static_cast<std::size_t>(std::count(preds.begin(), preds.end(), '\n')) == rows + 1);

  SUBCASE("baseline refuses an unlabeled target") {
    const auto b = cli("baseline" + sources_args(d, 2) + " --target " + p(kWork / "unlabeled.csv") + " --out " + p(kWork / "b.json"));
    CHECK(b.code == 2);
    CHECK(b.err.find("target labels") != std::string::npos);
  }
}

TEST_CASE("malformed row exits 2 with file:line") {
  const auto bad = kWork / "bad.csv";
  std::ofstream(bad) << "label,f1,f2\n0,1,2\n1,3\n";
  const auto& d = small_synth();
  const auto r = cli("run --source " + p(bad) + " --target " + p(d / "target.csv") + " --out " + p(kWork / "x.json"));
  CHECK(r.code == 2);
  CHECK(r.err.find(p(bad) + ":3:") != std::string::npos);
}

TEST_CASE("input errors exit 2") {
  const auto& d = small_synth();
  const std::string io = sources_args(d, 2) + " --target " + p(d / "target.csv");
  CHECK(cli("run" + io).code == 2);  // missing --out
  CHECK(cli("bogus").code == 2);
  CHECK(cli("run --source /nonexistent.csv --target " + p(d / "target.csv") + " --out " + p(kWork / "x.json")).code == 2);
  CHECK(cli("spectrum" + io + " --k-max 1000 --out " + p(kWork / "s.txt")).code == 2);

  const auto cfg = kWork / "typo.cfg";
  std::ofstream(cfg) << "epsilon = 0.1\nepsilno = 0.2\n";
  const auto r = cli("run" + io + " --config " + p(cfg) + " --out " + p(kWork / "x.json"));
  CHECK(r.code == 2);
  CHECK(r.err.find("typo.cfg:2") != std::string::npos);
}

TEST_CASE("numerical failures exit 3") {
  const auto& d = small_synth();
  const auto cfg = kWork / "plain.cfg";
  std::ofstream(cfg) << "log_domain = false\nepsilon = 0.0001\nstandardize = false\n";
  const auto r = cli("run" + sources_args(d, 2) + " --target " + p(d / "target.csv") + " --config " + p(cfg) +
                     " --out " + p(kWork / "x.json"));
  CHECK(r.code == 3);
  CHECK(r.err.find("NumericalError") != std::string::npos);
}

TEST_CASE("spectrum of a three-component graph") {
  // Three clusters far apart: the plans never connect them, so the
  // cross-domain graph splits into three components.
  const auto dir = kWork / "three";
  fs::create_directories(dir);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 1.0);
  for (const char* name : {"source_0.csv", "target.csv"}) {
    std::ofstream f(dir / name);
    f << "label,f1,f2\n";
    for (int c = 0; c < 3; ++c)
      for (int i = 0; i < 12; ++i) f << c << ',' << 1000.0 * c + n(rng) << ',' << n(rng) << '\n';
  }
  const auto cfg = dir / "c.cfg";
  std::ofstream(cfg) << "standardize = false\nepsilon = 0.5\n";
  const auto out = dir / "spectrum.txt";
  const std::string args = "spectrum --source " + p(dir / "source_0.csv") + " --target " + p(dir / "target.csv") +
                           " --config " + p(cfg) + " --k-max 6 --seed 2 --out ";
  const auto r = cli(args + p(out));
  REQUIRE_MESSAGE(r.code == 0, r.err);
  std::istringstream text(slurp(out));
  std::string line;
  std::vector<double> ev;
  std::size_t best_j = 0, selected = 0;
  double best_gap = -1.0;
  while (std::getline(text, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string head;
    ls >> head;
    if (head == "gap") {
      std::size_t j;
      double g;
      ls >> j >> g;
      if (g > best_gap) {
        best_gap = g;
        best_j = j;
      }
    } else if (head == "selected_k") {
      ls >> selected;
    } else if (head != "gap_at_n_classes") {
      double v;
      ls >> v;
      ev.push_back(v);
    }
  }
  REQUIRE(ev.size() == 7);
  for (int i = 0; i < 3; ++i) CHECK(ev[static_cast<std::size_t>(i)] < 1e-8);
  CHECK(ev[3] > 1e-3);
  CHECK(best_j == 3);
  CHECK(selected == 3);
  const auto out2 = dir / "spectrum2.txt";
  REQUIRE(cli(args + p(out2)).code == 0);
  CHECK(slurp(out) == slurp(out2));
}
