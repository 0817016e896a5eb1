#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "braid/gvp.hpp"
#include "braid/rng.hpp"
#include "braid/transform.hpp"
#include "helpers.hpp"

using namespace braid;
using namespace braid::gvp;
using namespace braid::prob;
using braid::testing::binary_var;
using braid::testing::random_model;
using conjugate::Temperature;
using conjugate::UtilityVector;

namespace {

CausalModel with_modes(const CausalModel& base, const std::vector<VpMode>& modes,
                       const std::vector<IoType>& io = {}) {
  std::vector<VariableSpec> vars;
  std::vector<DistTable> tables;
  for (size_t t = 0; t < base.num_variables(); ++t) {
    VariableSpec v = base.variable(t);
    v.vp_mode = modes[t];
    if (!io.empty()) v.io_type = io[t];
    vars.push_back(v);
    tables.push_back(base.conditional(t));
  }
  return CausalModel(vars, tables);
}

}  // namespace

TEST_CASE("auxiliary measures split by variable mode") {
  Rng rng(301);
  const CausalModel base = random_model(rng, 2);
  const CausalModel cand_base = random_model(rng, 2);

  SUBCASE("all controlled: G is the candidate, R the reference") {
    const CausalModel ref = with_modes(base, {VpMode::Controlled, VpMode::Controlled});
    const CausalModel cand = with_modes(cand_base, {VpMode::Controlled, VpMode::Controlled});
    GvpProblem problem(ref, cand, UtilityTable::zeros(ref), Temperature(1.0));
    const auto [g, r] = build_auxiliary(problem);
    for (size_t t = 0; t < 2; ++t)
      for (size_t h = 0; h < ref.num_histories(t); ++h)
        for (size_t x = 0; x < 2; ++x) {
          CHECK(g.conditional(t).prob(h, x) == cand.conditional(t).prob(h, x));
          CHECK(r.conditional(t).prob(h, x) == ref.conditional(t).prob(h, x));
        }
  }

  SUBCASE("all estimated: the roles swap") {
    const CausalModel ref = with_modes(base, {VpMode::Estimated, VpMode::Estimated});
    const CausalModel cand = with_modes(cand_base, {VpMode::Estimated, VpMode::Estimated});
    GvpProblem problem(ref, cand, UtilityTable::zeros(ref), Temperature(1.0));
    const auto [g, r] = build_auxiliary(problem);
    for (size_t t = 0; t < 2; ++t)
      for (size_t h = 0; h < ref.num_histories(t); ++h)
        for (size_t x = 0; x < 2; ++x) {
          CHECK(g.conditional(t).prob(h, x) == ref.conditional(t).prob(h, x));
          CHECK(r.conditional(t).prob(h, x) == cand.conditional(t).prob(h, x));
        }
  }

  SUBCASE("candidate equal to reference collapses G onto R") {
    const CausalModel ref = with_modes(base, {VpMode::Controlled, VpMode::Estimated});
    GvpProblem problem(ref, ref, UtilityTable::zeros(ref), Temperature(1.0));
    const auto [g, r] = build_auxiliary(problem);
    g.for_each_sequence([&](const History& s, double p) {
      CHECK(p == doctest::Approx(joint_probability(r, s)).epsilon(1e-12));
    });
  }
}

TEST_CASE("objective reductions") {
  Rng rng(302);

  SUBCASE("candidate = reference with zero utility scores zero") {
    const CausalModel ref =
        with_modes(random_model(rng, 3), {VpMode::Controlled, VpMode::Estimated,
                                          VpMode::Controlled});
    GvpProblem problem(ref, ref, UtilityTable::zeros(ref), Temperature(2.0));
    CHECK(gvp_objective(problem) == doctest::Approx(0.0).epsilon(1e-12));
  }

  SUBCASE("a single controlled variable reduces to the one-shot difference") {
    const CausalModel ref = with_modes(random_model(rng, 1), {VpMode::Controlled});
    const CausalModel cand = with_modes(random_model(rng, 1), {VpMode::Controlled});
    std::vector<std::vector<double>> blocks{{1.3, -0.4}};
    GvpProblem problem(ref, cand, UtilityTable(ref, blocks), Temperature(0.7));

    std::vector<double> p_i{ref.conditional(0).prob(0, 0), ref.conditional(0).prob(0, 1)};
    std::vector<double> p_f{cand.conditional(0).prob(0, 0), cand.conditional(0).prob(0, 1)};
    const double expected = transform::free_utility_difference(
        p_i, p_f, UtilityVector({1.3, -0.4}, 0.0), Temperature(0.7));
    CHECK(gvp_objective(problem) == doctest::Approx(expected).epsilon(1e-12));
  }

  SUBCASE("a single estimated variable with zero utility is a reversed KL") {
    const CausalModel ref = with_modes(random_model(rng, 1), {VpMode::Estimated});
    const CausalModel cand = with_modes(random_model(rng, 1), {VpMode::Estimated});
    GvpProblem problem(ref, cand, UtilityTable::zeros(ref), Temperature(1.9));

    std::vector<double> r{ref.conditional(0).prob(0, 0), ref.conditional(0).prob(0, 1)};
    std::vector<double> c{cand.conditional(0).prob(0, 0), cand.conditional(0).prob(0, 1)};
    CHECK(gvp_objective(problem) == doctest::Approx(-1.9 * kl_bits(r, c)).epsilon(1e-12));
  }
}

TEST_CASE("objective decomposes into per-variable terms") {
  Rng rng(303);
  for (int trial = 0; trial < 10; ++trial) {
    const size_t T = 2 + rng.uniform_below(2);
    std::vector<VpMode> modes(T);
    for (auto& m : modes)
      m = rng.uniform01() < 0.5 ? VpMode::Controlled : VpMode::Estimated;
    const CausalModel ref = with_modes(random_model(rng, T), modes);
    const CausalModel cand = with_modes(random_model(rng, T), modes);
    std::vector<std::vector<double>> blocks(T);
    for (size_t t = 0; t < T; ++t) {
      blocks[t].resize(ref.num_histories(t) * 2);
      for (double& v : blocks[t]) v = rng.uniform(-1.0, 1.0);
    }
    const UtilityTable util(ref, blocks);
    GvpProblem problem(ref, cand, util, Temperature(1.3));

    // Independent route: per-variable expected utility and KL terms under
    // the G-measure prefix weights.
    std::vector<double> weights{1.0};
    double total = 0.0;
    for (size_t t = 0; t < T; ++t) {
      for (size_t h = 0; h < weights.size(); ++h) {
        for (size_t x = 0; x < 2; ++x) {
          const bool controlled = modes[t] == VpMode::Controlled;
          const double pc = cand.conditional(t).prob(h, x);
          const double pr = ref.conditional(t).prob(h, x);
          const double g_factor = controlled ? pc : pr;
          const double r_factor = controlled ? pr : pc;
          if (g_factor == 0.0) continue;
          total += weights[h] * g_factor *
                   (util.value(t, h, x) - 1.3 * std::log2(g_factor / r_factor));
        }
      }
      std::vector<double> next(weights.size() * 2);
      for (size_t h = 0; h < weights.size(); ++h)
        for (size_t x = 0; x < 2; ++x) {
          const bool controlled = modes[t] == VpMode::Controlled;
          next[h * 2 + x] = weights[h] * (controlled ? cand.conditional(t).prob(h, x)
                                                     : ref.conditional(t).prob(h, x));
        }
      weights = std::move(next);
    }
    CHECK(gvp_objective(problem) == doctest::Approx(total).epsilon(1e-9));
  }
}

TEST_CASE("solver reductions") {
  Rng rng(304);

  SUBCASE("one controlled variable reproduces the one-shot control solution") {
    const CausalModel ref = with_modes(random_model(rng, 1), {VpMode::Controlled});
    std::vector<std::vector<double>> blocks{{0.9, -0.3}};
    GvpProblem problem(ref, std::nullopt, UtilityTable(ref, blocks), Temperature(0.8));
    const CausalModel solved = gvp_solve(problem);

    std::vector<double> prior{ref.conditional(0).prob(0, 0), ref.conditional(0).prob(0, 1)};
    const auto expected = transform::control_solution(
        transform::TransformProblem(prior, UtilityVector({0.9, -0.3}, 0.0), Temperature(0.8)));
    for (size_t x = 0; x < 2; ++x)
      CHECK(solved.conditional(0).prob(0, x) == doctest::Approx(expected[x]).epsilon(1e-9));
  }

  SUBCASE("one estimated fully observed variable reproduces the reference") {
    const CausalModel ref = with_modes(random_model(rng, 1), {VpMode::Estimated});
    GvpProblem problem(ref, std::nullopt, UtilityTable::zeros(ref), Temperature(1.0));
    const CausalModel solved = gvp_solve(problem);
    for (size_t x = 0; x < 2; ++x)
      CHECK(solved.conditional(0).prob(0, x) ==
            doctest::Approx(ref.conditional(0).prob(0, x)).epsilon(1e-12));
  }

  SUBCASE("fully observed all-estimated model with zero utility returns the reference") {
    const CausalModel ref = with_modes(random_model(rng, 3),
                                       {VpMode::Estimated, VpMode::Estimated, VpMode::Estimated});
    GvpProblem problem(ref, std::nullopt, UtilityTable::zeros(ref), Temperature(1.0));
    const CausalModel solved = gvp_solve(problem);
    for (size_t t = 0; t < 3; ++t)
      for (size_t h = 0; h < ref.num_histories(t); ++h)
        for (size_t x = 0; x < 2; ++x)
          CHECK(solved.conditional(t).prob(h, x) ==
                doctest::Approx(ref.conditional(t).prob(h, x)).epsilon(1e-12));
  }
}

TEST_CASE("estimation protocol: the solved conditionals are Bayesian predictives") {
  // theta undisclosed, two disclosed observations; the candidate cannot
  // see theta, so its conditionals are the posterior mixtures.
  const std::vector<double> prior{0.35, 0.65};
  const std::vector<std::vector<double>> lik{{0.9, 0.1}, {0.25, 0.75}};
  CausalModel ref(
      {binary_var("theta", IoType::UndisclosedInput, VpMode::Estimated),
       binary_var("d1", IoType::DisclosedInput, VpMode::Estimated),
       binary_var("d2", IoType::DisclosedInput, VpMode::Estimated)},
      {DistTable({}, 2, {{prior[0], prior[1]}}),
       DistTable({2}, 2, {lik[0], lik[1]}),
       DistTable({2, 2}, 2, {lik[0], lik[0], lik[1], lik[1]})});

  GvpProblem problem(ref, std::nullopt, UtilityTable::zeros(ref), Temperature(1.0));
  const CausalModel solved = gvp_solve(problem);

  // The hypothesis keeps its prior.
  CHECK(solved.conditional(0).prob(0, 0) == doctest::Approx(prior[0]).epsilon(1e-12));

  // First observation: prior mixture, identical across theta.
  const double mix0 = prior[0] * lik[0][0] + prior[1] * lik[1][0];
  CHECK(solved.conditional(1).prob(0, 0) == doctest::Approx(mix0).epsilon(1e-12));
  CHECK(solved.conditional(1).prob(1, 0) == doctest::Approx(mix0).epsilon(1e-12));

  // Second observation after d1: posterior mixture.
  for (size_t d1 = 0; d1 < 2; ++d1) {
    const double w0 = prior[0] * lik[0][d1] /
                      (prior[0] * lik[0][d1] + prior[1] * lik[1][d1]);
    const double pred = w0 * lik[0][0] + (1.0 - w0) * lik[1][0];
    for (size_t theta = 0; theta < 2; ++theta)
      CHECK(solved.conditional(2).prob(theta * 2 + d1, 0) ==
            doctest::Approx(pred).epsilon(1e-12));
  }
}

TEST_CASE("solver beats random candidates on small instances") {
  Rng rng(305);
  for (int trial = 0; trial < 5; ++trial) {
    const size_t T = 2 + rng.uniform_below(2);
    std::vector<VpMode> modes(T);
    for (auto& m : modes)
      m = rng.uniform01() < 0.5 ? VpMode::Controlled : VpMode::Estimated;
    const CausalModel ref = with_modes(random_model(rng, T), modes);
    std::vector<std::vector<double>> blocks(T);
    for (size_t t = 0; t < T; ++t) {
      blocks[t].resize(ref.num_histories(t) * 2);
      for (double& v : blocks[t]) v = rng.uniform(0.0, 2.0);
    }
    GvpProblem problem(ref, std::nullopt, UtilityTable(ref, blocks),
                       Temperature(rng.uniform(0.3, 3.0)));
    const CausalModel solved = gvp_solve(problem);
    const double best = gvp_objective_for(problem, solved);

    for (int c = 0; c < 3000; ++c) {
      const CausalModel candidate = with_modes(random_model(rng, T), modes);
      CHECK(gvp_objective_for(problem, candidate) <= best + 1e-9);
    }
  }
}
