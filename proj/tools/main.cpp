// braid: bounded-rational decision-making over finite sequential
// probability spaces.
//
// Subcommands mirror the experiment kinds: solve-control, estimate, bcr,
// gvp, verify. Each loads a config file, applies flag overrides, runs the
// experiment, writes CSV and prints a summary. verify also runs without a
// config and sets a nonzero exit code on any violated invariant.

#include <CLI11.hpp>
#include <cstdio>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include "braid/config.hpp"
#include "braid/runner.hpp"
#include "braid/verify.hpp"

namespace {

struct CommonFlags {
  std::string config_path;
  std::string alpha;
  std::string seeds;
  std::string horizon;
  std::string out;
  std::string log_base;
  std::string jobs;
  std::vector<std::string> sets;
  bool summary = false;
  bool timing = false;
};

void add_common(CLI::App* cmd, CommonFlags& flags, bool config_required) {
  auto* opt = cmd->add_option("--config", flags.config_path, "experiment config file");
  if (config_required) opt->required();
  cmd->add_option("--alpha", flags.alpha, "override alpha (single value or comma sweep)");
  cmd->add_option("--seed", flags.seeds, "override seeds (list or ranges, e.g. 1..100)");
  cmd->add_option("--horizon", flags.horizon, "override the horizon");
  cmd->add_option("--out", flags.out, "override the output CSV path");
  cmd->add_option("--log-base", flags.log_base, "report logs in base 2 or e")
      ->check(CLI::IsMember({"2", "e"}));
  cmd->add_option("--jobs", flags.jobs, "parallel (alpha, seed) cells; default 1");
  cmd->add_option("--set", flags.sets, "override any config key, e.g. --set control.actions=acts");
  cmd->add_flag("--summary", flags.summary, "print the aligned result table");
  cmd->add_flag("--timing", flags.timing,
                "record wall-clock per cell in the CSV (breaks byte-identical reruns)");
}

std::vector<std::pair<std::string, std::string>> overrides_from(const CommonFlags& flags) {
  std::vector<std::pair<std::string, std::string>> overrides;
  for (const auto& kv : flags.sets) {
    const size_t eq = kv.find('=');
    if (eq == std::string::npos)
      throw braid::ConfigError("--set needs key=value, got '" + kv + "'");
    overrides.emplace_back(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (!flags.alpha.empty()) overrides.emplace_back("alpha", flags.alpha);
  if (!flags.seeds.empty()) overrides.emplace_back("seeds", flags.seeds);
  if (!flags.horizon.empty()) overrides.emplace_back("horizon", flags.horizon);
  if (!flags.out.empty()) overrides.emplace_back("out", flags.out);
  if (!flags.log_base.empty()) overrides.emplace_back("log_base", flags.log_base);
  if (!flags.jobs.empty()) overrides.emplace_back("jobs", flags.jobs);
  return overrides;
}

int run_kind(const CommonFlags& flags, braid::config::ExperimentKind expected) {
  const auto cfg = braid::config::parse_config(flags.config_path, overrides_from(flags));
  if (cfg.kind != expected)
    throw braid::ConfigError("config kind is '" + braid::config::kind_name(cfg.kind) +
                             "' but this subcommand runs '" +
                             braid::config::kind_name(expected) + "'");
  braid::runner::RunOptions options;
  options.timing = flags.timing;
  const auto output = braid::runner::run_experiment(cfg, options);
  braid::runner::write_csv(cfg.out, output.rows, cfg.log_base);
  if (flags.summary || cfg.kind == braid::config::ExperimentKind::Verify)
    std::cout << output.summary;
  std::cout << output.rows.size() << " rows -> " << cfg.out << "\n";
  return output.exit_code;
}

int run_verify_standalone(const CommonFlags& flags, const std::string& suites,
                          bool quick, const std::string& mutation) {
  braid::verify::VerifyOptions options;
  options.quick = quick;
  options.mutation = mutation == "none" ? "" : mutation;
  std::vector<std::string> selection;
  if (!suites.empty() && suites != "all") {
    std::string current;
    for (char c : suites + ",") {
      if (c == ',') {
        if (!current.empty()) selection.push_back(current);
        current.clear();
      } else if (!isspace(static_cast<unsigned char>(c))) {
        current.push_back(c);
      }
    }
  }
  const auto results = braid::verify::run_suites(options, selection);
  int exit_code = 0;
  std::printf("suite                       status   max_violation  tolerance  seconds\n");
  for (const auto& r : results) {
    std::printf("%-27s %-8s %13.3e  %9.0e  %7.2f\n", r.name.c_str(), r.pass ? "pass" : "FAIL",
                r.max_violation, r.tolerance, r.wall_seconds);
    if (!r.pass) exit_code = 1;
  }
  for (const auto& r : results)
    if (!r.pass) std::printf("FAIL %s: %s\n", r.name.c_str(), r.detail.c_str());

  if (!flags.out.empty()) {
    std::vector<braid::runner::ResultRow> rows;
    for (const auto& r : results)
      rows.push_back({"verify", "verify", 1.0, 0, r.name + "_max_violation", r.max_violation, 0});
    braid::runner::write_csv(flags.out, rows, braid::config::LogBase::Two);
  }
  return exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bounded-rational decision making over finite sequential probability spaces"};
  app.require_subcommand(1);

  CommonFlags control_flags, estimate_flags, bcr_flags, gvp_flags, verify_flags;
  std::string verify_suites = "all";
  std::string verify_mutation = "none";
  bool verify_quick = false;

  auto* solve_control =
      app.add_subcommand("solve-control", "solve a soft optimal control problem");
  add_common(solve_control, control_flags, true);
  auto* estimate = app.add_subcommand("estimate", "run adaptive estimation trials");
  add_common(estimate, estimate_flags, true);
  auto* bcr = app.add_subcommand("bcr", "run Bayesian-control-rule trials");
  add_common(bcr, bcr_flags, true);
  auto* gvp = app.add_subcommand("gvp", "solve a sequence-level variational problem");
  add_common(gvp, gvp_flags, true);
  auto* verify = app.add_subcommand("verify", "run the seeded oracle suites");
  add_common(verify, verify_flags, false);
  verify->add_option("--suites", verify_suites, "comma list of suites, or 'all'");
  verify->add_flag("--quick", verify_quick, "reduced trial counts (smoke only)");
  verify->add_option("--mutate", verify_mutation,
                     "fault injection self-check: none or corrupt-gibbs")
      ->check(CLI::IsMember({"none", "corrupt-gibbs"}));

  CLI11_PARSE(app, argc, argv);

  try {
    if (solve_control->parsed())
      return run_kind(control_flags, braid::config::ExperimentKind::Control);
    if (estimate->parsed())
      return run_kind(estimate_flags, braid::config::ExperimentKind::Estimate);
    if (bcr->parsed()) return run_kind(bcr_flags, braid::config::ExperimentKind::Bcr);
    if (gvp->parsed()) return run_kind(gvp_flags, braid::config::ExperimentKind::Gvp);
    if (verify->parsed()) {
      if (!verify_flags.config_path.empty())
        return run_kind(verify_flags, braid::config::ExperimentKind::Verify);
      return run_verify_standalone(verify_flags, verify_suites, verify_quick, verify_mutation);
    }
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 2;
  }
  return 0;
}
