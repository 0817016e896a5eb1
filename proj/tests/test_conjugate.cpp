#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "braid/conjugate.hpp"
#include "braid/rng.hpp"

using namespace braid;
using namespace braid::conjugate;

namespace {
const double kLog2_3 = std::log2(3.0);
}

TEST_CASE("utility_from_measure applies the conversion law") {
  const UtilityVector uniform = utility_from_measure(std::vector<double>{0.5, 0.5},
                                                     Temperature(1.0), 0.0);
  CHECK(uniform.values[0] == doctest::Approx(-1.0));
  CHECK(uniform.values[1] == doctest::Approx(-1.0));

  const UtilityVector degenerate =
      utility_from_measure(std::vector<double>{1.0, 0.0}, Temperature(1.0), 5.0);
  CHECK(degenerate.values[0] == doctest::Approx(5.0));  // U(Omega) = beta
  CHECK(degenerate.values[1] == kNegInf);

  // alpha = 2, beta = 1 on (0.8, 0.2): hand evaluation of 2*log2(p) + 1.
  const UtilityVector skewed =
      utility_from_measure(std::vector<double>{0.8, 0.2}, Temperature(2.0), 1.0);
  CHECK(skewed.values[0] == doctest::Approx(0.3561438102252753).epsilon(1e-12));
  CHECK(skewed.values[1] == doctest::Approx(-3.6438561897747244).epsilon(1e-12));

  CHECK_THROWS_AS(Temperature(0.0), ParameterError);
  CHECK_THROWS_AS(Temperature(-1.0), ParameterError);
}

TEST_CASE("measure_from_utility is the Gibbs measure") {
  const auto symmetric = measure_from_utility(UtilityVector({0.0, 0.0, 0.0}, 0.0),
                                              Temperature(3.7));
  for (double p : symmetric.p) CHECK(p == doctest::Approx(1.0 / 3).epsilon(1e-12));
  CHECK(symmetric.beta == doctest::Approx(3.7 * kLog2_3).epsilon(1e-12));

  const auto two = measure_from_utility(UtilityVector({1.0, 0.0}, 0.0), Temperature(1.0));
  CHECK(two.p[0] == doctest::Approx(2.0 / 3).epsilon(1e-12));
  CHECK(two.p[1] == doctest::Approx(1.0 / 3).epsilon(1e-12));

  const auto gap = measure_from_utility(UtilityVector({4.2, kNegInf}, 0.0), Temperature(0.3));
  CHECK(gap.p[0] == 1.0);
  CHECK(gap.p[1] == 0.0);

  CHECK_THROWS_AS(UtilityVector({kNegInf, kNegInf}, 0.0), ValidationError);
}

TEST_CASE("free utility: expected utility plus scaled entropy") {
  const auto pure_entropy =
      free_utility(std::vector<double>{0.5, 0.5}, UtilityVector({0.0, 0.0}, 0.0),
                   Temperature(1.0));
  CHECK(pure_entropy.total == doctest::Approx(1.0).epsilon(1e-12));

  // At the conjugate pair the free utility is beta = alpha log2 Z.
  const UtilityVector u({1.0, 0.0}, 0.0);
  const auto gibbs = measure_from_utility(u, Temperature(1.0));
  const auto at_gibbs = free_utility(gibbs.p, u, Temperature(1.0));
  CHECK(at_gibbs.total == doctest::Approx(kLog2_3).epsilon(1e-12));
  CHECK(at_gibbs.total == doctest::Approx(gibbs.beta).epsilon(1e-12));

  // The delta on the argmax scores strictly less.
  const auto at_delta =
      free_utility(std::vector<double>{1.0, 0.0}, u, Temperature(1.0));
  CHECK(at_delta.total == doctest::Approx(1.0));
  CHECK(at_delta.total < at_gibbs.total);

  // Mass on a -inf utility is a -inf total, not an error.
  const auto starved = free_utility(std::vector<double>{0.5, 0.5},
                                    UtilityVector({0.0, kNegInf}, 0.0), Temperature(1.0));
  CHECK(starved.total == kNegInf);
}

TEST_CASE("verify_conjugacy checks the constant gap") {
  Rng rng(101);
  const std::vector<double> p{0.8, 0.2};
  const UtilityVector u = utility_from_measure(p, Temperature(2.0), 1.0);
  const auto check = verify_conjugacy(p, u, Temperature(2.0));
  CHECK(check.conjugate);
  CHECK(check.max_deviation < 1e-12);

  const auto wrong =
      verify_conjugacy(std::vector<double>{0.5, 0.5}, UtilityVector({1.0, 0.0}, 0.0),
                       Temperature(1.0));
  CHECK_FALSE(wrong.conjugate);

  const auto back = measure_from_utility(UtilityVector({0.3, -1.2, 0.9}, 0.0),
                                         Temperature(0.7));
  CHECK(verify_conjugacy(back.p, UtilityVector({0.3, -1.2, 0.9}, 0.0), Temperature(0.7))
            .conjugate);
}

TEST_CASE("round trip over random measures") {
  Rng rng(102);
  for (int trial = 0; trial < 300; ++trial) {
    const size_t n = 2 + rng.uniform_below(7);
    std::vector<double> p = rng.simplex_point(n);
    for (double& v : p) v = std::max(v, 1e-9);
    double s = sum(p);
    for (double& v : p) v /= s;
    const Temperature alpha(rng.uniform(0.1, 10.0));
    const double beta = rng.uniform(-5.0, 5.0);

    const auto round = measure_from_utility(utility_from_measure(p, alpha, beta), alpha);
    for (size_t x = 0; x < n; ++x) CHECK(std::abs(round.p[x] - p[x]) < 1e-9);
    CHECK(std::abs(round.beta - beta) < 1e-9);
  }
}

TEST_CASE("zero-probability symbols survive the round trip") {
  const std::vector<double> p{0.25, 0.0, 0.75};
  const UtilityVector u = utility_from_measure(p, Temperature(1.5), 2.0);
  CHECK(u.values[1] == kNegInf);
  const auto round = measure_from_utility(u, Temperature(1.5));
  CHECK(round.p[1] == 0.0);
  CHECK(round.p[0] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(round.beta == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("gibbs measure maximizes free utility over random candidates") {
  Rng rng(103);
  for (int trial = 0; trial < 30; ++trial) {
    const size_t n = 2 + rng.uniform_below(5);
    std::vector<double> values(n);
    for (double& v : values) v = rng.uniform(-5.0, 5.0);
    const Temperature alpha(rng.uniform(0.1, 10.0));
    const UtilityVector u(values, 0.0);
    const auto gibbs = measure_from_utility(u, alpha);
    const double best = free_utility(gibbs.p, u, alpha).total;
    CHECK(best == doctest::Approx(gibbs.beta).epsilon(1e-9));
    for (int c = 0; c < 500; ++c) {
      const auto q = rng.simplex_point(n);
      const double f = free_utility(q, u, alpha).total;
      CHECK(f <= best + 1e-9);
      // Near-misses only happen next to the maximizer itself.
      if (f >= best - 1e-9) CHECK(tv_distance(q, gibbs.p) < 1e-6);
    }
  }
}

TEST_CASE("monotonicity: conjugate pairs order probabilities and utilities alike") {
  Rng rng(104);
  for (int trial = 0; trial < 50; ++trial) {
    const size_t n = 2 + rng.uniform_below(5);
    std::vector<double> p = rng.simplex_point(n);
    for (double& v : p) v = std::max(v, 1e-9);
    double s = sum(p);
    for (double& v : p) v /= s;
    const UtilityVector u = utility_from_measure(p, Temperature(rng.uniform(0.1, 5.0)),
                                                 rng.uniform(-2.0, 2.0));
    for (size_t x = 0; x < n; ++x)
      for (size_t y = 0; y < n; ++y)
        CHECK((p[x] > p[y]) == (u.values[x] > u.values[y]));
  }
}

TEST_CASE("additivity on a product space") {
  // U(A and B) = U(A) + U(B | A) - beta, realized through the joint,
  // marginal and conditional of a two-variable measure.
  Rng rng(105);
  for (int trial = 0; trial < 20; ++trial) {
    const Temperature alpha(rng.uniform(0.2, 4.0));
    const double beta = rng.uniform(-2.0, 2.0);
    std::vector<double> px = rng.simplex_point(3);
    std::vector<std::vector<double>> py(3);
    for (auto& row : py) row = rng.simplex_point(2);

    std::vector<double> joint;
    for (size_t x = 0; x < 3; ++x)
      for (size_t y = 0; y < 2; ++y) joint.push_back(px[x] * py[x][y]);

    const UtilityVector u_joint = utility_from_measure(joint, alpha, beta);
    const UtilityVector u_x = utility_from_measure(px, alpha, beta);
    for (size_t x = 0; x < 3; ++x) {
      const UtilityVector u_cond = utility_from_measure(py[x], alpha, beta);
      for (size_t y = 0; y < 2; ++y) {
        if (joint[x * 2 + y] == 0.0) continue;
        CHECK(u_joint.values[x * 2 + y] ==
              doctest::Approx(u_x.values[x] + u_cond.values[y] - beta).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("temperature limits of the Gibbs measure") {
  Rng rng(106);
  for (int trial = 0; trial < 20; ++trial) {
    const size_t n = 2 + rng.uniform_below(5);
    std::vector<double> values(n);
    for (double& v : values) v = rng.uniform(-3.0, 3.0);
    // Ensure a unique max with a visible gap.
    size_t best = 0;
    for (size_t x = 1; x < n; ++x)
      if (values[x] > values[best]) best = x;
    values[best] += 0.5;
    const UtilityVector u(values, 0.0);

    const auto cold = measure_from_utility(u, Temperature(1e-6));
    std::vector<double> one_hot(n, 0.0);
    one_hot[best] = 1.0;
    CHECK(tv_distance(cold.p, one_hot) < 1e-3);

    const auto hot = measure_from_utility(u, Temperature(1e6));
    std::vector<double> uniform(n, 1.0 / n);
    CHECK(tv_distance(hot.p, uniform) < 1e-3);
  }
}
