#include "seot/synth.hpp"

#include "seot/error.hpp"
#include "seot/format.hpp"
#include "seot/io.hpp"
#include "seot/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

namespace seot {

Shift parse_shift(const std::string& text) {
  const auto colon = text.find(':');
  const std::string kind = text.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : text.substr(colon + 1);
  auto number = [&](const std::string& s) {
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw Error(ErrorKind::InvalidInput, "bad number '" + s + "' in shift '" + text + "'");
    }
  };
  if (arg.empty()) throw Error(ErrorKind::InvalidInput, "shift '" + text + "' needs an argument after ':'");
  if (kind == "rotate") return Shift::rotate(number(arg));
  if (kind == "scale") return Shift::scale(number(arg));
  if (kind == "noise") return Shift::noise(number(arg));
  if (kind == "translate") {
    std::vector<double> v;
    std::stringstream ss(arg);
    std::string item;
    while (std::getline(ss, item, ',')) v.push_back(number(item));
    return Shift::translate(std::move(v));
  }
  throw Error(ErrorKind::InvalidInput, "unknown shift kind '" + kind + "' (rotate|translate|scale|noise)");
}

std::string to_string(const Shift& shift) {
  switch (shift.kind) {
    case ShiftKind::Rotate: return "rotate:" + format_double(shift.amount);
    case ShiftKind::Scale: return "scale:" + format_double(shift.amount);
    case ShiftKind::Noise: return "noise:" + format_double(shift.amount);
    case ShiftKind::Translate: {
      std::string s = "translate:";
      for (std::size_t i = 0; i < shift.offset.size(); ++i) s += (i ? "," : "") + format_double(shift.offset[i]);
      return s;
    }
  }
  return "";
}

void SynthSpec::validate() const {
  if (n_classes < 1 || samples_per_class < 1 || d < 1 || n_sources < 1)
    throw Error(ErrorKind::InvalidInput, "synth counts must all be >= 1");
  if (!(class_separation >= 0.0)) throw Error(ErrorKind::InvalidInput, "class_separation must be >= 0");
  if (shift.kind == ShiftKind::Rotate && d < 2)
    throw Error(ErrorKind::InvalidInput, "rotate shift needs d >= 2");
  if (shift.kind == ShiftKind::Translate && shift.offset.size() != 1 &&
      shift.offset.size() != static_cast<std::size_t>(d))
    throw Error(ErrorKind::InvalidInput, "translate vector must have 1 or d entries");
  if (shift.kind == ShiftKind::Noise && !(shift.amount >= 0.0))
    throw Error(ErrorKind::InvalidInput, "noise sigma must be >= 0");
}

namespace {

RowMatrix class_means(const SynthSpec& spec) {
  RowMatrix means = RowMatrix::Zero(spec.n_classes, spec.d);
  if (spec.n_classes == 1) return means;
  if (spec.d == 1) {
    for (int c = 0; c < spec.n_classes; ++c)
      means(c, 0) = spec.class_separation * (c - 0.5 * (spec.n_classes - 1));
    return means;
  }
  const double step = std::numbers::pi / spec.n_classes;
  const double radius = spec.class_separation / (2.0 * std::sin(step / 2.0));
  for (int c = 0; c < spec.n_classes; ++c) {
    means(c, 0) = radius * std::cos(step * c);
    means(c, 1) = radius * std::sin(step * c);
  }
  return means;
}

LabeledDomain draw_domain(const SynthSpec& spec, const RowMatrix& means, std::mt19937_64& rng) {
  const int n = spec.n_classes * spec.samples_per_class;
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::normal_distribution<double> normal(0.0, 1.0);
  RowMatrix x(n, spec.d);
  Labels y(static_cast<std::size_t>(n));
  for (int r = 0; r < n; ++r) {
    const int c = order[static_cast<std::size_t>(r)] / spec.samples_per_class;
    y[static_cast<std::size_t>(r)] = c;
    for (int j = 0; j < spec.d; ++j) x(r, j) = means(c, j) + normal(rng);
  }
  return LabeledDomain(uniform_measure(DataMatrix(std::move(x))), std::move(y));
}

RowMatrix apply_shift(RowMatrix x, const Shift& shift, std::mt19937_64& rng) {
  switch (shift.kind) {
    case ShiftKind::Rotate: {
      const double a = shift.amount * std::numbers::pi / 180.0;
      const double c = std::cos(a), s = std::sin(a);
      for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const double u = x(i, 0), v = x(i, 1);
        x(i, 0) = c * u - s * v;
        x(i, 1) = s * u + c * v;
      }
      break;
    }
    case ShiftKind::Translate:
      for (Eigen::Index j = 0; j < x.cols(); ++j)
        x.col(j).array() += shift.offset.size() == 1 ? shift.offset[0] : shift.offset[static_cast<std::size_t>(j)];
      break;
    case ShiftKind::Scale: x *= shift.amount; break;
    case ShiftKind::Noise: {
      std::normal_distribution<double> normal(0.0, 1.0);
      for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] += shift.amount * normal(rng);
      break;
    }
  }
  return x;
}

}  // namespace

SynthData generate_synth(const SynthSpec& spec) {
  spec.validate();
  auto rng = make_rng(spec.seed, "synth");
  const RowMatrix means = class_means(spec);
  std::vector<LabeledDomain> sources;
  for (int i = 0; i < spec.n_sources; ++i) sources.push_back(draw_domain(spec, means, rng));
  LabeledDomain raw_target = draw_domain(spec, means, rng);
  RowMatrix shifted = apply_shift(raw_target.measure.points().values(), spec.shift, rng);
  LabeledDomain target(uniform_measure(DataMatrix(std::move(shifted))), raw_target.labels);
  return SynthData{std::move(sources), std::move(target)};
}

nlohmann::ordered_json synth_manifest(const SynthSpec& spec) {
  nlohmann::ordered_json j;
  j["generator"] = "seot synth";
  j["n_classes"] = spec.n_classes;
  j["samples_per_class"] = spec.samples_per_class;
  j["d"] = spec.d;
  j["class_separation"] = spec.class_separation;
  j["n_sources"] = spec.n_sources;
  j["shift"] = to_string(spec.shift);
  j["seed"] = spec.seed;
  nlohmann::ordered_json files = nlohmann::ordered_json::array();
  for (int i = 0; i < spec.n_sources; ++i) files.push_back("source_" + std::to_string(i) + ".csv");
  j["sources"] = files;
  j["target"] = "target.csv";
  return j;
}

void write_synth(const SynthSpec& spec, const std::filesystem::path& out_dir) {
  const SynthData data = generate_synth(spec);
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorKind::IoError, "cannot create directory " + out_dir.string() + ": " + ec.message());
  for (std::size_t i = 0; i < data.sources.size(); ++i)
    io::write_dataset(out_dir / ("source_" + std::to_string(i) + ".csv"), data.sources[i]);
  io::write_dataset(out_dir / "target.csv", data.target);
  io::write_text(out_dir / "manifest.json", synth_manifest(spec).dump(2) + "\n");
}

}  // namespace seot
