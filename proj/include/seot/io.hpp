#pragma once

#include "seot/classify.hpp"
#include "seot/measures.hpp"
#include "seot/pipeline.hpp"

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>

#include <json.hpp>

namespace seot::io {

/// CSV dataset: a header line, then `label,f1,...,fd` per sample. The label
/// is an integer class id, or `?` on every row of an unlabeled file.
LabeledDomain read_dataset(const std::filesystem::path& path);
LabeledDomain parse_dataset(std::istream& in, const std::string& name);
void write_dataset(const std::filesystem::path& path, const LabeledDomain& domain);

/// Flat `key = value` config. `#` starts a comment. Unknown keys and
/// malformed values throw InvalidInput naming the line.
SeotConfig parse_config(std::istream& in, const std::string& name, bool* skip_barycenter = nullptr);
SeotConfig read_config(const std::filesystem::path& path, bool* skip_barycenter = nullptr);

/// Applies one key/value pair; shared by the config file and CLI overrides.
void apply_config_key(SeotConfig& cfg, const std::string& key, const std::string& value,
                      bool* skip_barycenter = nullptr);

/// Every config key with its current value, in a stable order.
std::map<std::string, std::string> config_echo(const SeotConfig& cfg, bool skip_barycenter = false);

inline constexpr const char* kReportSchemaVersion = "1.0";

nlohmann::ordered_json eval_to_json(const EvalReport& report);
nlohmann::ordered_json run_report(const SeotRun& run, const SeotConfig& cfg, const std::string& method,
                                  bool skip_barycenter = false);
nlohmann::ordered_json baseline_report(const EvalReport& report, const SeotConfig& cfg);
nlohmann::ordered_json timings_json(const SeotRun& run);

void write_text(const std::filesystem::path& path, const std::string& text);

/// Plot-ready spectrum: (index, eigenvalue) rows, gap table, selected k.
std::string spectrum_text(const SeotRun& run, std::size_t k_max);

}  // namespace seot::io
