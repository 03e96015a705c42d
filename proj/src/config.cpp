#include "pgate/config.hpp"

#include <cmath>
#include <functional>
#include <sstream>

#include "pgate/errors.hpp"
#include "pgate/io.hpp"

namespace pgate {

namespace {

using json = nlohmann::ordered_json;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string unquote(const std::string& raw) {
  const std::string t = trim(raw);
  if (t.size() >= 2 && t.front() == '"' && t.back() == '"') return t.substr(1, t.size() - 2);
  return t;
}

double to_num(const std::string& raw, const std::string& key) {
  try {
    return parse_double(unquote(raw), key);
  } catch (const IoError&) {
    throw ConfigError("'" + key + "' expects a number, got '" + trim(raw) + "'");
  }
}

std::size_t to_count(const std::string& raw, const std::string& key) {
  const double v = to_num(raw, key);
  if (!(v >= 0.0) || v != std::floor(v) || v > 1e15) {
    throw ConfigError("'" + key + "' expects a nonnegative integer, got '" + trim(raw) + "'");
  }
  return static_cast<std::size_t>(v);
}

std::uint64_t to_seed(const std::string& raw, const std::string& key) {
  const std::string t = unquote(raw);
  std::size_t pos = 0;
  std::uint64_t v = 0;
  try {
    v = std::stoull(t, &pos, 0);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != t.size() || t.empty() || t[0] == '-') {
    throw ConfigError("'" + key + "' expects an unsigned 64-bit integer, got '" + t + "'");
  }
  return v;
}

std::vector<std::string> to_items(const std::string& raw) {
  std::string t = trim(raw);
  if (t.size() >= 2 && t.front() == '[' && t.back() == ']') t = t.substr(1, t.size() - 2);
  std::vector<std::string> out;
  if (trim(t).empty()) return out;
  std::stringstream ss(t);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(unquote(item));
  return out;
}

std::vector<double> to_nums(const std::string& raw, const std::string& key) {
  std::vector<double> out;
  for (const auto& s : to_items(raw)) out.push_back(to_num(s, key));
  return out;
}

std::vector<double> to_counts(const std::string& raw, const std::string& key) {
  std::vector<double> out;
  for (const auto& s : to_items(raw)) out.push_back(static_cast<double>(to_count(s, key)));
  return out;
}

struct Entry {
  std::string key;
  std::string help;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<json(const RunConfig&)> get;
};

#define NUM(k, field, help)                                                              \
  Entry {                                                                                \
    k, help, [](RunConfig& c, const std::string& r) { c.field = to_num(r, k); },         \
        [](const RunConfig& c) { return json(c.field); }                                 \
  }
#define COUNT(k, field, help)                                                            \
  Entry {                                                                                \
    k, help, [](RunConfig& c, const std::string& r) { c.field = to_count(r, k); },       \
        [](const RunConfig& c) { return json(c.field); }                                 \
  }
#define NUMS(k, field, help)                                                             \
  Entry {                                                                                \
    k, help, [](RunConfig& c, const std::string& r) { c.field = to_nums(r, k); },        \
        [](const RunConfig& c) { return json(c.field); }                                 \
  }
#define COUNTS(k, field, help)                                                           \
  Entry {                                                                                \
    k, help, [](RunConfig& c, const std::string& r) { c.field = to_counts(r, k); },      \
        [](const RunConfig& c) { return json(c.field); }                                 \
  }
#define OPTNUM(k, field, help)                                                           \
  Entry {                                                                                \
    k, help, [](RunConfig& c, const std::string& r) { c.field = to_num(r, k); },         \
        [](const RunConfig& c) { return c.field ? json(*c.field) : json(nullptr); }      \
  }
#define STR(k, field, help)                                                              \
  Entry {                                                                                \
    k, help, [](RunConfig& c, const std::string& r) { c.field = unquote(r); },           \
        [](const RunConfig& c) { return json(c.field); }                                 \
  }

const std::vector<Entry>& entries() {
  static const std::vector<Entry> e = {
      NUM("filter.g", filter.gp.g, "gating sensitivity g"),
      NUM("filter.lambda", filter.gp.lambda, "potential penalty strength"),
      NUM("filter.r0", filter.gp.r0, "nominal observation variance assumed by the filters"),
      NUM("filter.q", filter.q, "process noise variance per step"),
      COUNT("filter.n_particles", filter.n_particles, "particle count"),
      COUNT("filter.n_ensemble", filter.n_ensemble, "ensemble size"),
      NUM("filter.x0_var", filter.x0_var, "initial variance"),
      Entry{"filter.x0_mean", "initial mean, or \"first\" for the first observation",
            [](RunConfig& c, const std::string& r) {
              if (unquote(r) == "first") {
                c.filter.x0_mean.reset();
              } else {
                c.filter.x0_mean = to_num(r, "filter.x0_mean");
              }
            },
            [](const RunConfig& c) { return c.filter.x0_mean ? json(*c.filter.x0_mean) : json("first"); }},
      COUNT("filter.model_substeps", filter.model_substeps, "Euler sub-steps of the filter model per dt"),
      NUM("filter.state_bound_factor", filter.state_bound_factor, "propagated-state clamp, in outer-well units"),
      OPTNUM("filter.assumed_alpha", assumed_alpha, "alpha assumed by the filters (default: sim.alpha)"),
      OPTNUM("filter.assumed_beta", assumed_beta, "beta assumed by the filters (default: sim.beta)"),
      OPTNUM("filter.assumed_gamma", assumed_gamma, "gamma assumed by the filters (default: sim.gamma)"),
      Entry{"filter.kinds", "filter list, tokens such as ekf_std or pg_pf, or \"all\"",
            [](RunConfig& c, const std::string& r) {
              std::vector<FilterKind> ks;
              for (const auto& t : to_items(r)) {
                if (t == "all") {
                  ks.assign(std::begin(kAllFilterKinds), std::end(kAllFilterKinds));
                } else {
                  ks.push_back(filter_kind_from_string(t));
                }
              }
              if (ks.empty()) throw ConfigError("'filter.kinds' must name at least one filter");
              c.kinds = ks;
            },
            [](const RunConfig& c) {
              json a = json::array();
              for (auto k : c.kinds) a.push_back(token(k));
              return a;
            }},
      NUM("sim.alpha", sim.params.alpha, "true alpha"),
      NUM("sim.beta", sim.params.beta, "true beta"),
      NUM("sim.gamma", sim.params.gamma, "true gamma"),
      NUM("sim.sigma", sim.sigma, "process noise intensity"),
      NUM("sim.dt", sim.dt, "observation interval"),
      COUNT("sim.n_steps", sim.n_steps, "trajectory length T"),
      NUM("sim.x0", sim.x0, "initial state"),
      Entry{"sim.mode", "forced or kramers",
            [](RunConfig& c, const std::string& r) { c.sim.mode = sim_mode_from_string(unquote(r)); },
            [](const RunConfig& c) { return json(to_string(c.sim.mode)); }},
      NUM("sim.outlier_prob", sim.outlier_prob, "outlier probability p"),
      NUM("sim.outlier_scale", sim.outlier_scale, "outlier variance in units of r0"),
      NUM("sim.r0", sim.r0, "clean observation variance"),
      COUNT("sim.substeps", sim.substeps, "Euler-Maruyama sub-steps per dt, 0 = automatic"),
      Entry{"sim.forcing_epochs", "forcing start steps, empty = T/3 and 2T/3",
            [](RunConfig& c, const std::string& r) {
              c.sim.forcing.epochs.clear();
              for (double v : to_counts(r, "sim.forcing_epochs")) c.sim.forcing.epochs.push_back(static_cast<std::size_t>(v));
            },
            [](const RunConfig& c) { return json(c.sim.forcing.epochs); }},
      COUNT("sim.forcing_duration", sim.forcing.duration, "steps per forcing pulse"),
      NUM("sim.forcing_amplitude", sim.forcing.amplitude_factor, "forcing drift in units of barrier / well span"),
      Entry{"run.seed", "base seed (generated and recorded when absent)",
            [](RunConfig& c, const std::string& r) { c.seed = to_seed(r, "run.seed"); },
            [](const RunConfig& c) { return c.seed ? json(*c.seed) : json(nullptr); }},
      Entry{"run.reps", "replications (per-command default when absent)",
            [](RunConfig& c, const std::string& r) { c.reps = to_count(r, "run.reps"); },
            [](const RunConfig& c) { return c.reps ? json(*c.reps) : json(nullptr); }},
      COUNT("run.threads", threads, "worker threads, 0 = hardware concurrency"),
      NUMS("goldilocks.g_values", goldilocks.g_values, "g axis"),
      NUMS("goldilocks.alphas", goldilocks.alphas, "alpha values"),
      NUM("goldilocks.lambda", goldilocks.lambda, "fixed lambda"),
      NUMS("misspec.alphas", misspec.alphas, "assumed alpha axis"),
      NUMS("misspec.betas", misspec.betas, "assumed beta axis"),
      COUNT("kramers.forced_n_steps", kramers.forced_n_steps, "forced-arm T"),
      COUNT("kramers.forced_reps", kramers.forced_reps, "forced-arm replications"),
      NUM("kramers.sigma", kramers.kramers_sigma, "spontaneous-arm noise"),
      COUNT("kramers.n_steps", kramers.kramers_n_steps, "spontaneous-arm T"),
      COUNT("kramers.reps", kramers.kramers_reps, "spontaneous-arm seeds attempted"),
      COUNT("kramers.min_crossings", kramers.min_crossings, "zero crossings needed to keep a seed"),
      COUNT("kramers.min_accepted", kramers.min_accepted, "accepted seeds required"),
      COUNT("kramers.oversampling", kramers.oversampling, "attempt cap as a multiple of kramers.reps"),
      COUNTS("scarcity.lengths", scarcity.lengths, "record lengths N"),
      NUMS("scarcity.probs", scarcity.probs, "outlier probabilities"),
      STR("ngrip.record", ngrip.record, "age,value CSV; empty = synthetic fixture"),
      STR("ngrip.events", ngrip.events, "event_id,onset_age CSV (required with ngrip.record)"),
      COUNT("ngrip.segment_length", ngrip.segment_length, "samples per event window"),
      COUNTS("ngrip.strides", ngrip.strides, "sub-sampling strides"),
      NUMS("ngrip.fracs", ngrip.fracs, "injected outlier fractions"),
      NUM("ngrip.fixture_gamma", ngrip.fixture_gamma, "gamma of the synthetic fixture"),
      COUNT("ngrip.bootstrap", ngrip.bootstrap, "bootstrap resamples for the median CI"),
  };
  return e;
}

#undef NUM
#undef COUNT
#undef NUMS
#undef COUNTS
#undef OPTNUM
#undef STR

const Entry& find_entry(const std::string& key) {
  for (const auto& e : entries()) {
    if (e.key == key) return e;
  }
  if (key.find('.') == std::string::npos) {
    for (const auto& e : entries()) {
      if (e.key.substr(e.key.find('.') + 1) == key) return e;
    }
  }
  throw ConfigError("unknown config key '" + key + "'");
}

}  // namespace

std::map<std::string, std::string> parse_config_text(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  std::string section;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    // Strip comments outside quotes.
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') quoted = !quoted;
      if (line[i] == '#' && !quoted) {
        line.resize(i);
        break;
      }
    }
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) {
        throw ConfigError("line " + std::to_string(lineno) + ": malformed section header");
      }
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key or value");
    const std::string full = section.empty() ? key : section + "." + key;
    if (out.count(full)) throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" + full + "'");
    out[full] = value;
  }
  return out;
}

void apply_setting(RunConfig& cfg, const std::string& key, const std::string& raw) {
  find_entry(key).set(cfg, raw);
}

void apply_config_file(RunConfig& cfg, const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ConfigError("config file not found: " + path.string());
  for (const auto& [k, v] : parse_config_text(read_text(path))) {
    if (k.find('.') == std::string::npos) throw ConfigError("key '" + k + "' must live in a [section]");
    apply_setting(cfg, k, v);
  }
}

const std::vector<SchemaEntry>& config_schema() {
  static const std::vector<SchemaEntry> s = [] {
    std::vector<SchemaEntry> v;
    for (const auto& e : entries()) v.push_back({e.key, e.help});
    return v;
  }();
  return s;
}

json config_to_json(const RunConfig& cfg) {
  json out = json::object();
  for (const auto& e : entries()) {
    const auto dot = e.key.find('.');
    out[e.key.substr(0, dot)][e.key.substr(dot + 1)] = e.get(cfg);
  }
  return out;
}

std::pair<std::string, std::string> split_override(const std::string& kv) {
  const auto eq = kv.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + kv + "' is not key=value");
  return {trim(kv.substr(0, eq)), trim(kv.substr(eq + 1))};
}

PotentialParams RunConfig::assumed_params() const {
  return {assumed_alpha.value_or(sim.params.alpha), assumed_beta.value_or(sim.params.beta),
          assumed_gamma.value_or(sim.params.gamma)};
}

ExperimentSettings RunConfig::settings(std::size_t default_reps) const {
  ExperimentSettings s;
  s.sim = sim;
  s.filter = filter;
  s.filter.assumed_params = assumed_params();
  s.kinds = kinds;
  s.n_reps = reps.value_or(default_reps);
  s.base_seed = seed.value_or(0);
  s.threads = threads;
  return s;
}

}  // namespace pgate
