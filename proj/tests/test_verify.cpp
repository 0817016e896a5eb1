#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "braid/errors.hpp"
#include "braid/verify.hpp"

using namespace braid;

TEST_CASE("quick suites pass on a healthy build") {
  verify::VerifyOptions options;
  options.quick = true;
  const auto results = verify::run_suites(options);
  CHECK(results.size() == verify::suite_names().size());
  for (const auto& suite : results) {
    INFO(suite.name, ": ", suite.detail);
    CHECK(suite.pass);
    CHECK(suite.wall_seconds < 60.0);
  }
}

TEST_CASE("a corrupted Gibbs normalizer is caught") {
  verify::VerifyOptions options;
  options.quick = true;
  options.mutation = "corrupt-gibbs";
  const auto results =
      verify::run_suites(options, {"conjugacy_roundtrip", "variational_maximum"});
  for (const auto& suite : results) {
    INFO(suite.name);
    CHECK_FALSE(suite.pass);
  }
}

TEST_CASE("unknown suite names are rejected") {
  verify::VerifyOptions options;
  CHECK_THROWS_AS(verify::run_suites(options, {"nonsense"}), ValidationError);
}
