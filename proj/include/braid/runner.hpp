#pragma once

// Experiment runner: dispatches a parsed config to the solvers, collects
// one ResultRow per (alpha, seed, metric), and renders CSV plus a
// human-readable summary. Row order is normalized (alpha, then seed, then
// metric) so identical configs produce byte-identical CSV. wall_ms is 0
// unless timing is requested, for the same reason.

#include <cstdint>
#include <string>
#include <vector>

#include "braid/config.hpp"

namespace braid::runner {

struct ResultRow {
  std::string experiment_id;
  std::string kind;
  double alpha = 0.0;
  uint64_t seed = 0;
  std::string metric;
  double value = 0.0;
  int64_t wall_ms = 0;
};

struct RunOptions {
  bool timing = false;  // measure wall_ms per cell; breaks byte-identity
};

struct RunOutput {
  std::vector<ResultRow> rows;
  std::string summary;
  int exit_code = 0;  // nonzero when a verify suite fails
};

RunOutput run_experiment(const config::ExperimentConfig& cfg, const RunOptions& options = {});

// CSV with the fixed column order:
// experiment_id,kind,alpha,seed,metric,value,wall_ms
// log_base e converts bit-valued metrics (kl_cost, log_loss) to nats.
std::string render_csv(const std::vector<ResultRow>& rows, config::LogBase log_base);

void write_csv(const std::string& path, const std::vector<ResultRow>& rows,
               config::LogBase log_base);

}  // namespace braid::runner
