#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pgate/experiments.hpp"

namespace pgate {

struct GoldilocksSettings {
  std::vector<double> g_values{1, 2, 3, 5, 7, 10, 15, 20, 30, 40, 50};
  std::vector<double> alphas{0.6, 1.0, 1.41, 2.0};
  double lambda = 0.5;
};

struct MisspecSettings {
  std::vector<double> alphas{0.5, 0.7, 0.8, 0.9, 1.0, 1.1, 1.2, 1.5};
  std::vector<double> betas{0.5, 0.7, 0.8, 0.9, 1.0, 1.1, 1.2, 1.5};
};

struct ScarcitySettings {
  std::vector<double> lengths{40, 50, 75, 100, 150, 200, 300};
  std::vector<double> probs{0.0, 0.05, 0.10, 0.15, 0.20, 0.25, 0.30};
};

struct NgripSettings {
  std::string record;  // empty: synthetic fixture
  std::string events;
  std::size_t segment_length = 226;
  std::vector<double> strides{1, 2, 3, 4, 5};
  std::vector<double> fracs{0.0, 0.02, 0.05, 0.10, 0.15};
  double fixture_gamma = -0.109;
  std::size_t bootstrap = 10000;
};

/// Everything a CLI run can be configured with. Values come from built-in
/// defaults, then the config file, then --set overrides, then flags.
struct RunConfig {
  SimConfig sim;
  FilterConfig filter;
  // Unset: the filters assume the simulated parameters.
  std::optional<double> assumed_alpha;
  std::optional<double> assumed_beta;
  std::optional<double> assumed_gamma;
  std::vector<FilterKind> kinds{std::begin(kAllFilterKinds), std::end(kAllFilterKinds)};
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> reps;
  std::size_t threads = 1;
  GoldilocksSettings goldilocks;
  MisspecSettings misspec;
  KramersArmSettings kramers;
  ScarcitySettings scarcity;
  NgripSettings ngrip;

  /// Experiment settings with the seed, replication count (fallback
  /// default_reps) and assumed parameters resolved.
  ExperimentSettings settings(std::size_t default_reps) const;
  PotentialParams assumed_params() const;
};

/// Parsed `section.key -> raw value text` pairs of the config format: `[section]`
/// headers, `key = value` lines, `#` comments; values are numbers, booleans,
/// double-quoted strings or flat `[a, b, ...]` lists. Throws ConfigError with
/// the line number on malformed input.
std::map<std::string, std::string> parse_config_text(const std::string& text);

/// Applies one override. `key` is `section.key`, or a bare key resolved to the
/// first section (in schema order) that defines it. Throws ConfigError on unknown keys or bad values.
void apply_setting(RunConfig& cfg, const std::string& key, const std::string& raw);

/// Loads a config file onto cfg (file values replace defaults).
void apply_config_file(RunConfig& cfg, const std::filesystem::path& path);

struct SchemaEntry {
  std::string key;
  std::string help;
};
const std::vector<SchemaEntry>& config_schema();

/// Resolved configuration as nested JSON, one object per section.
nlohmann::ordered_json config_to_json(const RunConfig& cfg);

/// Splits `key=value`.
std::pair<std::string, std::string> split_override(const std::string& kv);

}  // namespace pgate
