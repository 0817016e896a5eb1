#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "braid/prob.hpp"
#include "braid/rng.hpp"
#include "helpers.hpp"

using namespace braid;
using namespace braid::prob;
using braid::testing::binary_var;
using braid::testing::chain_model;
using braid::testing::fair_coins;
using braid::testing::random_model;
using braid::testing::seq;

TEST_CASE("joint probability is the product of conditionals") {
  CHECK(joint_probability(fair_coins(), seq({0, 1})) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(joint_probability(chain_model(), seq({1, 0})) == doctest::Approx(0.18).epsilon(1e-12));

  // Empty model: the empty product is 1.
  CausalModel empty({}, {});
  CHECK(joint_probability(empty, History()) == 1.0);

  CHECK_THROWS_AS(joint_probability(chain_model(), seq({1})), ValidationError);
  CHECK_THROWS_AS(joint_probability(chain_model(), seq({1, 2})), ValidationError);
}

TEST_CASE("construction renormalizes within 1e-9 and rejects beyond") {
  // Slightly off is repaired.
  DistTable ok({}, 2, {{0.5 + 4e-10, 0.5}});
  CHECK(ok.prob(0, 0) + ok.prob(0, 1) == doctest::Approx(1.0).epsilon(1e-13));
  CHECK_THROWS_AS(DistTable({}, 2, {{0.6, 0.5}}), ValidationError);
  CHECK_THROWS_AS(DistTable({}, 2, {{-0.1, 1.1}}), ValidationError);
}

TEST_CASE("marginal by enumeration") {
  CHECK(marginal(fair_coins(), 0)[0] == doctest::Approx(0.5));
  CHECK(marginal(chain_model(), 1)[0] == doctest::Approx(0.58).epsilon(1e-12));

  CausalModel deterministic({binary_var("x")}, {DistTable({}, 2, {{1.0, 0.0}})});
  const auto m = marginal(deterministic, 0);
  CHECK(m[0] == 1.0);
  CHECK(m[1] == 0.0);
}

TEST_CASE("condition propagates evidence to the past") {
  // Independence: conditioning x2 leaves x1 alone.
  const CausalModel coins = condition(fair_coins(), 1, 1);
  CHECK(marginal(coins, 0)[0] == doctest::Approx(0.5).epsilon(1e-12));

  // Chain: Bayes by hand, P(x1=1 | x2=0) = 0.18 / 0.58.
  const CausalModel chained = condition(chain_model(), 1, 0);
  CHECK(marginal(chained, 0)[1] == doctest::Approx(0.18 / 0.58).epsilon(1e-12));

  // Zero-probability event.
  CausalModel dead({binary_var("x1"), binary_var("x2")},
                   {DistTable({}, 2, {{1.0, 0.0}}),
                    DistTable({2}, 2, {{1.0, 0.0}, {0.5, 0.5}})});
  CHECK_THROWS_AS(condition(dead, 1, 1), ZeroProbabilityError);
}

TEST_CASE("intervene pins the present and spares the past") {
  const CausalModel did = intervene(chain_model(), 1, 0);
  CHECK(marginal(did, 1)[0] == doctest::Approx(1.0));
  CHECK(marginal(did, 0)[1] == doctest::Approx(0.2).epsilon(1e-13));

  // Clause (iii): downstream conditionals untouched.
  Rng rng(7);
  const CausalModel model = random_model(rng, 3);
  const CausalModel did3 = intervene(model, 1, 1);
  for (size_t h = 0; h < model.num_histories(2); ++h)
    for (size_t x = 0; x < 2; ++x)
      CHECK(did3.conditional(2).prob(h, x) == model.conditional(2).prob(h, x));

  CHECK_THROWS_AS(intervene(chain_model(), 2, 0), ValidationError);
  CHECK_THROWS_AS(intervene(chain_model(), 1, 5), ValidationError);
}

TEST_CASE("interventions compose left to right; repeats replace") {
  Rng rng(31);
  const CausalModel model = random_model(rng, 3);
  const CausalModel twice = intervene(intervene(model, 1, 0), 1, 1);
  const CausalModel once = intervene(model, 1, 1);
  once.for_each_sequence([&](const History& s, double p) {
    CHECK(joint_probability(twice, s) == doctest::Approx(p).epsilon(1e-12));
  });

  // Two interventions at different indices commute.
  const CausalModel ab = intervene(intervene(model, 0, 1), 2, 0);
  const CausalModel ba = intervene(intervene(model, 2, 0), 0, 1);
  ab.for_each_sequence([&](const History& s, double p) {
    CHECK(joint_probability(ba, s) == doctest::Approx(p).epsilon(1e-12));
  });
}

TEST_CASE("condition vs intervene: the chain regression") {
  const double base = marginal(chain_model(), 0)[1];
  const double conditioned = marginal(condition(chain_model(), 1, 0), 0)[1];
  const double intervened = marginal(intervene(chain_model(), 1, 0), 0)[1];
  CHECK(std::abs(conditioned - base) >= 0.05);
  CHECK(std::abs(intervened - base) < 1e-12);
}

TEST_CASE("obs flags typed updates and drops latent variables") {
  CausalModel model(
      {binary_var("theta", IoType::UndisclosedInput), binary_var("a", IoType::Output),
       binary_var("o", IoType::DisclosedInput)},
      {DistTable({}, 2, {{0.5, 0.5}}),
       DistTable::constant({2}, {0.5, 0.5}),
       DistTable::constant({2, 2}, {0.5, 0.5})});

  const auto record = obs(model, seq({1, 0, 1}));
  REQUIRE(record.size() == 2);
  CHECK(record[0] == ObsStep{1, 0, UpdateKind::Causal});
  CHECK(record[1] == ObsStep{2, 1, UpdateKind::Logical});

  CHECK(obs(model, History()).empty());

  CausalModel latent_only(
      {binary_var("t1", IoType::UndisclosedInput), binary_var("t2", IoType::UndisclosedInput)},
      {DistTable({}, 2, {{0.5, 0.5}}), DistTable::constant({2}, {0.5, 0.5})});
  CHECK(obs(latent_only, seq({0, 1})).empty());
}

TEST_CASE("obs depends on types and values only") {
  Rng rng(11);
  const std::vector<IoType> io{IoType::Output, IoType::DisclosedInput, IoType::Output};
  auto build = [&](Rng& r) {
    CausalModel base = random_model(r, 3);
    std::vector<VariableSpec> vars;
    for (size_t t = 0; t < 3; ++t) {
      VariableSpec v = base.variable(t);
      v.io_type = io[t];
      vars.push_back(v);
    }
    std::vector<DistTable> tables;
    for (size_t t = 0; t < 3; ++t) tables.push_back(base.conditional(t));
    return CausalModel(vars, tables);
  };
  const CausalModel a = build(rng);
  const CausalModel b = build(rng);  // different probabilities
  CHECK(obs(a, seq({1, 0, 1})) == obs(b, seq({1, 0, 1})));
}

TEST_CASE("behavior_from_beliefs reduces to the model without latents or outputs") {
  Rng rng(13);
  const CausalModel model = random_model(rng, 3);
  const CausalModel behavior = behavior_from_beliefs(model);
  for (size_t t = 0; t < 3; ++t)
    for (size_t h = 0; h < model.num_histories(t); ++h)
      for (size_t x = 0; x < 2; ++x)
        CHECK(behavior.conditional(t).prob(h, x) ==
              doctest::Approx(model.conditional(t).prob(h, x)).epsilon(1e-12));
}

TEST_CASE("behavior_from_beliefs embeds the Bayesian estimator") {
  // theta latent, two disclosed data points; the derived behavior is the
  // posterior-mixture predictive.
  const std::vector<double> prior{0.3, 0.7};
  const std::vector<std::vector<double>> lik{{0.9, 0.1}, {0.2, 0.8}};  // per theta, iid
  CausalModel model(
      {binary_var("theta", IoType::UndisclosedInput), binary_var("d1"), binary_var("d2")},
      {DistTable({}, 2, {{prior[0], prior[1]}}),
       DistTable({2}, 2, {lik[0], lik[1]}),
       DistTable({2, 2}, 2, {lik[0], lik[0], lik[1], lik[1]})});

  const CausalModel behavior = behavior_from_beliefs(model);

  // First data point: prior mixture.
  const double mix0 = prior[0] * lik[0][0] + prior[1] * lik[1][0];
  CHECK(behavior.conditional(1).prob(0, 0) == doctest::Approx(mix0).epsilon(1e-12));
  // theta coordinate is latent, so rows agree across it.
  CHECK(behavior.conditional(1).prob(1, 0) == doctest::Approx(mix0).epsilon(1e-12));

  // Second data point given d1 = 0: posterior mixture.
  const double w0 = prior[0] * lik[0][0] / mix0;
  const double pred = w0 * lik[0][0] + (1 - w0) * lik[1][0];
  // history (theta=0, d1=0) has rank 0 at level 2
  CHECK(behavior.conditional(2).prob(0, 0) == doctest::Approx(pred).epsilon(1e-12));
  CHECK(behavior.conditional(2).prob(2, 0) == doctest::Approx(pred).epsilon(1e-12));

  // Degenerate parameter set: the mixture is the single likelihood.
  CausalModel single(
      {binary_var("theta", IoType::UndisclosedInput), binary_var("d1")},
      {DistTable({}, 2, {{1.0, 0.0}}), DistTable({2}, 2, {lik[0], lik[1]})});
  const CausalModel single_behavior = behavior_from_beliefs(single);
  CHECK(single_behavior.conditional(1).prob(0, 0) == doctest::Approx(lik[0][0]));
}

TEST_CASE("behavior_from_beliefs has the joint of the model when nothing is hidden") {
  Rng rng(17);
  for (int trial = 0; trial < 5; ++trial) {
    CausalModel base = random_model(rng, 3);
    // Mark variables as outputs/disclosed inputs in some pattern; with no
    // undisclosed inputs obs() reduces to plain conditioning semantics.
    std::vector<VariableSpec> vars;
    for (size_t t = 0; t < 3; ++t) {
      VariableSpec v = base.variable(t);
      v.io_type = t % 2 == 0 ? IoType::Output : IoType::DisclosedInput;
      vars.push_back(v);
    }
    std::vector<DistTable> tables;
    for (size_t t = 0; t < 3; ++t) tables.push_back(base.conditional(t));
    const CausalModel model(vars, tables);
    const CausalModel behavior = behavior_from_beliefs(model);
    model.for_each_sequence([&](const History& s, double p) {
      CHECK(joint_probability(behavior, s) == doctest::Approx(p).epsilon(1e-9));
    });
  }
}

TEST_CASE("full sequences sum to one") {
  Rng rng(19);
  for (int trial = 0; trial < 20; ++trial) {
    const CausalModel model = random_model(rng, 1 + rng.uniform_below(4));
    double total = 0.0;
    model.for_each_sequence([&](const History&, double p) { total += p; });
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("intervention leaves all past marginals untouched") {
  Rng rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    const size_t T = 2 + rng.uniform_below(3);
    const CausalModel model = random_model(rng, T);
    for (size_t t = 0; t < T; ++t)
      for (size_t v = 0; v < 2; ++v) {
        const CausalModel did = intervene(model, t, v);
        for (size_t s = 0; s < t; ++s) {
          const auto before = marginal(model, s);
          const auto after = marginal(did, s);
          for (size_t x = 0; x < 2; ++x) CHECK(std::abs(after[x] - before[x]) < 1e-12);
        }
      }
  }
}

TEST_CASE("intervene then condition commutes with joint-level surgery") {
  Rng rng(29);
  for (int trial = 0; trial < 10; ++trial) {
    const size_t T = 3 + rng.uniform_below(2);  // 3..4
    const CausalModel model = random_model(rng, T);
    const size_t t = rng.uniform_below(T - 1);
    const size_t s = t + 1 + rng.uniform_below(T - t - 1);
    const size_t v = rng.uniform_below(2), w = rng.uniform_below(2);

    CausalModel via_model = condition(intervene(model, t, v), s, w);

    // Joint-level route: delta-splice the joint, then restrict and
    // normalize.
    std::vector<double> joint(model.num_sequences(), 0.0);
    double mass = 0.0;
    model.for_each_sequence([&](const History& full, double) {
      if (full[t] != v || full[s] != w) return;
      double p = 1.0;
      size_t prefix = 0;
      for (size_t k = 0; k < T; ++k) {
        if (k != t) p *= model.conditional(k).prob(prefix, full[k]);
        prefix = prefix * 2 + full[k];
      }
      joint[model.rank_of(full)] = p;
      mass += p;
    });
    REQUIRE(mass > 0.0);

    via_model.for_each_sequence([&](const History& full, double p) {
      CHECK(p == doctest::Approx(joint[model.rank_of(full)] / mass).epsilon(1e-9));
    });
  }
}
