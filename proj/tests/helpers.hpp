#pragma once

// Shared fixtures for the test suites.

#include <string>
#include <vector>

#include "braid/prob.hpp"
#include "braid/rng.hpp"

namespace braid::testing {

inline prob::Alphabet binary_alphabet() { return prob::Alphabet({"0", "1"}); }

inline prob::VariableSpec binary_var(const std::string& name,
                                     prob::IoType io = prob::IoType::DisclosedInput,
                                     prob::VpMode mode = prob::VpMode::Estimated) {
  return {name, binary_alphabet(), io, mode};
}

// Two independent fair coins.
inline prob::CausalModel fair_coins() {
  using namespace prob;
  return CausalModel({testing::binary_var("x1"), testing::binary_var("x2")},
                     {DistTable({}, 2, {{0.5, 0.5}}),
                      DistTable({2}, 2, {{0.5, 0.5}, {0.5, 0.5}})});
}

// The two-variable chain P(x1) = (0.8, 0.2), P(x2=0 | x1=0) = 0.5,
// P(x2=0 | x1=1) = 0.9. Conditioning on x2 moves x1; intervening does not.
inline prob::CausalModel chain_model() {
  using namespace prob;
  return CausalModel({testing::binary_var("x1"), testing::binary_var("x2")},
                     {DistTable({}, 2, {{0.8, 0.2}}),
                      DistTable({2}, 2, {{0.5, 0.5}, {0.9, 0.1}})});
}

// Random full-support model over binary variables.
inline prob::CausalModel random_model(Rng& rng, size_t T) {
  using namespace prob;
  std::vector<VariableSpec> variables;
  std::vector<DistTable> tables;
  for (size_t t = 0; t < T; ++t) {
    variables.push_back(binary_var("x" + std::to_string(t + 1)));
    size_t nh = size_t{1} << t;
    std::vector<std::vector<double>> rows(nh);
    for (auto& row : rows) {
      row = rng.simplex_point(2);
      for (double& v : row) v = 0.9 * v + 0.05;
    }
    tables.emplace_back(std::vector<size_t>(t, 2), 2, std::move(rows));
  }
  return prob::CausalModel(std::move(variables), std::move(tables));
}

inline prob::History seq(std::initializer_list<size_t> values) {
  return prob::History(std::vector<size_t>(values));
}

}  // namespace braid::testing
