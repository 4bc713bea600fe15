#pragma once

#include "seot/measures.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace seot {

enum class ShiftKind { Rotate, Translate, Scale, Noise };

struct Shift {
  ShiftKind kind = ShiftKind::Rotate;
  double amount = 0.0;  // degrees, scale factor or noise sigma
  std::vector<double> offset;  // Translate: length d, or one value broadcast

  static Shift rotate(double degrees) { return {ShiftKind::Rotate, degrees, {}}; }
  static Shift translate(std::vector<double> v) { return {ShiftKind::Translate, 0.0, std::move(v)}; }
  static Shift scale(double f) { return {ShiftKind::Scale, f, {}}; }
  static Shift noise(double sigma) { return {ShiftKind::Noise, sigma, {}}; }
};

/// Parses `rotate:30`, `translate:1,0`, `scale:2`, `noise:0.5`.
Shift parse_shift(const std::string& text);
std::string to_string(const Shift& shift);

/// Gaussian-blob domain shift benchmark. Class means sit at evenly spaced
/// angles over a half circle in the first two coordinates, adjacent means
/// class_separation apart; samples have unit isotropic covariance.
struct SynthSpec {
  int n_classes = 2;
  int samples_per_class = 200;
  int d = 2;
  double class_separation = 4.0;
  int n_sources = 3;
  Shift shift = Shift::rotate(0.0);
  std::uint64_t seed = 0;

  void validate() const;
};

struct SynthData {
  std::vector<LabeledDomain> sources;
  LabeledDomain target;
};

SynthData generate_synth(const SynthSpec& spec);

/// Writes source_<i>.csv, target.csv and manifest.json into out_dir.
void write_synth(const SynthSpec& spec, const std::filesystem::path& out_dir);

nlohmann::ordered_json synth_manifest(const SynthSpec& spec);

}  // namespace seot
