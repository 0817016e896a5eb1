#include "braid/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

#include "braid/verify.hpp"

namespace braid::runner {

namespace {

using config::ExperimentConfig;
using config::ExperimentKind;
using config::LogBase;

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

bool metric_in_bits(const std::string& metric) {
  return metric == "kl_cost" || metric == "log_loss";
}

void sort_rows(std::vector<ResultRow>& rows) {
  std::stable_sort(rows.begin(), rows.end(), [](const ResultRow& a, const ResultRow& b) {
    if (a.alpha != b.alpha) return a.alpha < b.alpha;
    if (a.seed != b.seed) return a.seed < b.seed;
    return a.metric < b.metric;
  });
}

// One experiment cell: everything computed for a fixed (alpha, seed).
struct Cell {
  double alpha;
  uint64_t seed;
  std::vector<std::pair<std::string, double>> metrics;
  int64_t wall_ms = 0;
};

template <typename Fn>
std::vector<Cell> run_cells(const ExperimentConfig& cfg, bool timing, Fn&& body) {
  std::vector<Cell> cells;
  for (double alpha : cfg.alphas)
    for (uint64_t seed : cfg.seeds) cells.push_back({alpha, seed, {}, 0});

  const int jobs = std::max(1, cfg.jobs);
  auto work = [&](size_t begin, size_t end) {
    for (size_t i = begin; i < end; ++i) {
      const auto start = std::chrono::steady_clock::now();
      cells[i].metrics = body(cells[i].alpha, cells[i].seed);
      if (timing) {
        const auto stop = std::chrono::steady_clock::now();
        cells[i].wall_ms =
            std::chrono::duration_cast<std::chrono::milliseconds>(stop - start).count();
      }
    }
  };
  if (jobs == 1 || cells.size() <= 1) {
    work(0, cells.size());
  } else {
    std::vector<std::thread> pool;
    const size_t per = (cells.size() + jobs - 1) / jobs;
    for (int j = 0; j < jobs; ++j) {
      const size_t begin = std::min(cells.size(), j * per);
      const size_t end = std::min(cells.size(), begin + per);
      if (begin < end) pool.emplace_back(work, begin, end);
    }
    for (auto& t : pool) t.join();
  }
  return cells;
}

std::vector<ResultRow> rows_from_cells(const ExperimentConfig& cfg,
                                       const std::vector<Cell>& cells) {
  std::vector<ResultRow> rows;
  for (const auto& cell : cells)
    for (const auto& [metric, value] : cell.metrics)
      rows.push_back({cfg.id, config::kind_name(cfg.kind), cell.alpha, cell.seed, metric, value,
                      cell.wall_ms});
  sort_rows(rows);
  return rows;
}

// ---------------------------------------------------------------------------
// Per-kind drivers

std::vector<std::pair<std::string, double>> control_metrics(const ExperimentConfig& cfg,
                                                            double alpha) {
  const auto& problem = cfg.control->problem;
  const auto policy = solvers::solve_optimal_control(problem, solvers::Temperature(alpha));
  const double expected_utility = solvers::policy_expected_reward(problem, policy.action);
  const double objective = alpha * policy.value[0][0];

  // Action resource cost under the induced interaction measure: the agent's
  // observation model equals the environment's, so only actions contribute.
  double kl = 0.0;
  std::vector<double> weights{1.0};
  for (size_t t = 0; t < problem.horizon; ++t) {
    const size_t nA = problem.num_actions;
    const size_t nO = problem.num_observations;
    std::vector<double> next(weights.size() * nA * nO, 0.0);
    for (size_t h = 0; h < weights.size(); ++h) {
      if (weights[h] == 0.0) continue;
      for (size_t a = 0; a < nA; ++a) {
        const double pa = policy.action[t][h * nA + a];
        if (pa == 0.0) continue;
        const double ra = problem.reference[t][h * nA + a];
        kl += weights[h] * pa * std::log2(pa / ra);
        for (size_t o = 0; o < nO; ++o)
          next[(h * nA + a) * nO + o] =
              weights[h] * pa * problem.environment[t][(h * nA + a) * nO + o];
      }
    }
    weights = std::move(next);
  }
  return {{"expected_utility", expected_utility}, {"kl_cost", kl}, {"objective", objective}};
}

std::vector<std::pair<std::string, double>> estimate_metrics(const ExperimentConfig& cfg,
                                                             uint64_t seed) {
  const auto problem = cfg.estimate->problem(cfg.horizon);
  Rng root(seed);
  Rng theta_rng = root.child(0);
  Rng env_rng = root.child(2);
  const size_t theta = theta_rng.sample(problem.prior);

  solvers::PredictiveTracker tracker(problem);
  double log_loss = 0.0;
  std::vector<size_t> history;
  for (size_t n = 0; n < cfg.horizon; ++n) {
    const auto source = problem.likelihood(theta, history);
    const size_t symbol = env_rng.sample(source);
    const auto predictive = tracker.predictive();
    log_loss -= log2_safe(predictive[symbol]);
    tracker.observe(symbol);
    history.push_back(symbol);
  }
  return {{"log_loss", log_loss},
          {"posterior_truth_mass", tracker.posterior()[theta]}};
}

std::vector<std::pair<std::string, double>> bcr_metrics(const ExperimentConfig& cfg,
                                                        uint64_t seed) {
  const auto& spec = *cfg.bcr;
  const auto agent = envs::agent_for_environment(spec.environment, spec.controllers);
  const auto record = envs::run_interaction(agent, spec.environment, cfg.horizon, seed);
  const double truth_mass =
      record.steps.empty() ? agent.posterior()[record.true_param]
                           : record.steps.back().posterior[record.true_param];
  return {{"cum_regret", record.regret}, {"posterior_truth_mass", truth_mass}};
}

std::vector<std::pair<std::string, double>> gvp_metrics(const ExperimentConfig& cfg,
                                                        double alpha) {
  gvp::GvpProblem problem(cfg.gvp->reference, std::nullopt, cfg.gvp->target_utility,
                          solvers::Temperature(alpha));
  const auto candidate = gvp::gvp_solve(problem);
  const auto parts = gvp::gvp_objective_parts(problem, candidate);
  return {{"expected_utility", parts.expected_utility},
          {"kl_cost", parts.kl_bits},
          {"objective", parts.objective}};
}

}  // namespace

RunOutput run_experiment(const ExperimentConfig& cfg, const RunOptions& options) {
  RunOutput out;
  std::ostringstream summary;

  switch (cfg.kind) {
    case ExperimentKind::Control: {
      const auto cells = run_cells(cfg, options.timing, [&](double alpha, uint64_t) {
        return control_metrics(cfg, alpha);
      });
      out.rows = rows_from_cells(cfg, cells);
      break;
    }
    case ExperimentKind::Estimate: {
      const auto cells = run_cells(cfg, options.timing, [&](double, uint64_t seed) {
        return estimate_metrics(cfg, seed);
      });
      out.rows = rows_from_cells(cfg, cells);
      break;
    }
    case ExperimentKind::Bcr: {
      const auto cells = run_cells(cfg, options.timing, [&](double, uint64_t seed) {
        return bcr_metrics(cfg, seed);
      });
      out.rows = rows_from_cells(cfg, cells);
      break;
    }
    case ExperimentKind::Gvp: {
      const auto cells = run_cells(cfg, options.timing, [&](double alpha, uint64_t) {
        return gvp_metrics(cfg, alpha);
      });
      out.rows = rows_from_cells(cfg, cells);
      break;
    }
    case ExperimentKind::Verify: {
      verify::VerifyOptions vopts;
      vopts.quick = cfg.verify->quick;
      vopts.mutation = cfg.verify->mutation;
      const auto results = verify::run_suites(vopts, cfg.verify->suites);
      summary << "suite                       status   max_violation  tolerance  seconds\n";
      for (const auto& r : results) {
        out.rows.push_back({cfg.id, "verify", cfg.alphas.front(), cfg.seeds.front(),
                            r.name + "_max_violation", r.max_violation, 0});
        char line[160];
        std::snprintf(line, sizeof(line), "%-27s %-8s %13.3e  %9.0e  %7.2f\n", r.name.c_str(),
                      r.pass ? "pass" : "FAIL", r.max_violation, r.tolerance, r.wall_seconds);
        summary << line;
        if (!r.pass) out.exit_code = 1;
      }
      sort_rows(out.rows);
      break;
    }
  }

  if (cfg.kind != ExperimentKind::Verify) {
    summary << "experiment " << cfg.id << " (" << config::kind_name(cfg.kind) << "): "
            << out.rows.size() << " result rows\n";
    summary << "alpha        seed     metric                    value\n";
    for (const auto& row : out.rows) {
      char line[160];
      std::snprintf(line, sizeof(line), "%-12.6g %-8llu %-25s %s\n", row.alpha,
                    static_cast<unsigned long long>(row.seed), row.metric.c_str(),
                    format_number(row.value).c_str());
      summary << line;
    }
  }
  out.summary = summary.str();
  return out;
}

std::string render_csv(const std::vector<ResultRow>& rows, LogBase log_base) {
  std::ostringstream os;
  os << "experiment_id,kind,alpha,seed,metric,value,wall_ms\n";
  const double scale = log_base == LogBase::E ? std::log(2.0) : 1.0;
  for (const auto& row : rows) {
    double value = row.value;
    if (log_base == LogBase::E && metric_in_bits(row.metric)) value *= scale;
    os << row.experiment_id << ',' << row.kind << ',' << format_number(row.alpha) << ','
       << row.seed << ',' << row.metric << ',' << format_number(value) << ',' << row.wall_ms
       << '\n';
  }
  return os.str();
}

void write_csv(const std::string& path, const std::vector<ResultRow>& rows, LogBase log_base) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write CSV file '" + path + "'");
  out << render_csv(rows, log_base);
}

}  // namespace braid::runner
