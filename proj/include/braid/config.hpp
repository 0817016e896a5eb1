#pragma once

// Experiment configuration: a sectioned key-value text format that can
// declare alphabets, causal models, utility tables and solver settings.
// The grammar (documented in the README):
//
//   # comment to end of line
//   key = value                  top-level entry
//   [section.name]               section header; dotted names nest
//   row = tok tok : v1, v2       repeated keys accumulate (table rows)
//
// Values are comma-separated scalars or symbol tokens; 'eps' denotes the
// empty history. parse_config validates everything it can at load time:
// unknown keys are rejected with the list of valid keys, non-normalized
// rows are rejected naming the table and row.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "braid/envs.hpp"
#include "braid/gvp.hpp"
#include "braid/solvers.hpp"

namespace braid::config {

enum class ExperimentKind { Control, Estimate, Bcr, Gvp, Verify };
enum class LogBase { Two, E };

std::string kind_name(ExperimentKind kind);

// ---------------------------------------------------------------------------
// Raw document

struct RawEntry {
  std::string key;
  std::string value;
  int line = 0;
};

struct RawSection {
  std::string name;
  int line = 0;
  std::vector<RawEntry> entries;
};

struct RawDoc {
  std::vector<RawEntry> top;
  std::vector<RawSection> sections;

  const RawSection* find(const std::string& name) const;
};

RawDoc parse_raw(const std::string& text);

// --set key or --set section.key; replaces scalar entries.
void apply_override(RawDoc& doc, const std::string& path, const std::string& value);

// ---------------------------------------------------------------------------
// Typed specs

struct ControlSpec {
  solvers::ControlProblem problem;  // alpha inside is a placeholder; sweeps override
};

struct EstimateSpec {
  std::vector<std::string> param_names;
  std::vector<double> prior;
  size_t num_symbols = 0;

  struct SourceTable {
    std::optional<std::vector<double>> fallback;          // 'default' row
    std::map<std::vector<size_t>, std::vector<double>> rows;  // history-specific
  };
  std::vector<SourceTable> sources;

  solvers::EstimationProblem problem(size_t horizon) const;
};

struct BcrSpec {
  envs::Environment environment;
  std::vector<std::function<std::vector<double>(std::span<const envs::Interaction>)>>
      controllers;
  std::vector<std::string> param_names;
};

struct GvpSpec {
  prob::CausalModel reference;
  gvp::UtilityTable target_utility;
};

struct VerifySpec {
  std::vector<std::string> suites;  // empty = all
  bool quick = false;               // reduced trial counts for smoke runs
  std::string mutation;             // "" or a named fault injection
};

struct ExperimentConfig {
  int config_version = 1;
  ExperimentKind kind = ExperimentKind::Verify;
  std::string id;
  std::string out = "results.csv";
  std::vector<double> alphas{1.0};
  std::vector<uint64_t> seeds{0};
  size_t horizon = 1;
  LogBase log_base = LogBase::Two;
  int jobs = 1;

  std::optional<ControlSpec> control;
  std::optional<EstimateSpec> estimate;
  std::optional<BcrSpec> bcr;
  std::optional<GvpSpec> gvp;
  std::optional<VerifySpec> verify;
};

// Loads and validates a config file. Throws ConfigError with line/field
// diagnostics.
ExperimentConfig parse_config(const std::string& path,
                              const std::vector<std::pair<std::string, std::string>>&
                                  overrides = {});

// Same, from already-loaded text (used by tests and the reproducibility
// suite). `origin` names the source in diagnostics; `base_dir` anchors
// file-referenced tables.
ExperimentConfig parse_config_text(const std::string& text, const std::string& origin,
                                   const std::vector<std::pair<std::string, std::string>>&
                                       overrides = {},
                                   const std::string& base_dir = "");

}  // namespace braid::config
