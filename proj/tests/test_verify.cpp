#include "doctest.h"

#include "spp/verify.hpp"
#include "test_support.hpp"

using namespace spp;

TEST_CASE("every verify suite passes and reports samples") {
  VerifyOptions o;
  o.trials = 200;
  o.seed = 17;
  const auto report = run_verify_suite("all", o);
  CHECK(report.passed());
  CHECK(report.results.size() >= 10);
  for (const auto& r : report.results) {
    CAPTURE(r.name);
    CHECK(r.passed);
    CHECK(r.samples > 0);
    CHECK(r.worst_violation <= r.tolerance);
  }
  const auto doc = to_json(report);
  CHECK(doc.at("suite") == "all");
  CHECK(doc.at("invariants").size() == report.results.size());
}

TEST_CASE("verify suite dispatch") {
  VerifyOptions o;
  o.trials = 30;
  for (const auto& name : verify_suite_names()) CHECK_NOTHROW(run_verify_suite(name, o));
  const auto prox = run_verify_suite("prox", o);
  bool has_nonexpansive = false;
  for (const auto& r : prox.results) has_nonexpansive |= r.name.find("nonexpansive") != std::string::npos;
  CHECK(has_nonexpansive);
  CHECK(testing::code_of([&] { run_verify_suite("missing", o); }) == ErrorCode::config);
}
