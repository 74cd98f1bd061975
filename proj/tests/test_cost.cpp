#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "fixtures.hpp"
#include "flock/cost.hpp"

using namespace flock;
using Catch::Matchers::WithinULP;

TEST_CASE("cost state initialization validates and broadcasts parameters", "[cost]") {
  cost::Params p;
  auto s = cost::State::init(3, p);
  CHECK(s.R == std::vector<double>{0.0, 0.0, 0.0});
  CHECK(s.beta == std::vector<double>{0.9, 0.9, 0.9});
  CHECK(s.coeff == std::vector<double>{10.0, 10.0, 10.0});

  p.beta_per_vm = {0.5, 0.9};
  CHECK_THROWS_AS(cost::State::init(3, p), std::invalid_argument);
  p.beta_per_vm = {0.5, 0.9, 1.0};
  p.coeff_per_vm = {0.0, 1.0, 2.0};
  auto s2 = cost::State::init(3, p);
  CHECK(s2.beta == p.beta_per_vm);
  CHECK(s2.coeff == p.coeff_per_vm);

  p.beta_per_vm = {0.5, 0.9, 1.5};
  CHECK_THROWS_AS(cost::State::init(3, p), std::invalid_argument);
  p.beta_per_vm.clear();
  p.coeff_per_vm = {0.0, -1.0, 2.0};
  CHECK_THROWS_AS(cost::State::init(3, p), std::invalid_argument);
}

TEST_CASE("recency is an exponentially forgotten migration indicator", "[cost]") {
  cost::Params p;
  p.beta = 0.5;
  auto s = cost::State::init(2, p);

  cost::update_recency(s, {1, 0});
  CHECK(s.R[0] == 0.5);
  CHECK(s.R[1] == 0.0);
  cost::update_recency(s, {1, 0});
  CHECK(s.R[0] == 0.75);
  cost::update_recency(s, {0, 0});
  CHECK(s.R[0] == 0.375);

  CHECK_THROWS_AS(cost::update_recency(s, {1}), std::invalid_argument);
}

TEST_CASE("recency stays in the unit interval under any indicator stream", "[cost]") {
  cost::Params p;
  p.beta = 0.9;
  auto s = cost::State::init(1, p);
  Rng rng(5);
  double lo = 1.0, hi = 0.0;
  for (int k = 0; k < 2000; ++k) {
    cost::update_recency(s, {static_cast<std::uint8_t>(rng.bernoulli(0.7) ? 1 : 0)});
    REQUIRE(s.R[0] >= 0.0);
    REQUIRE(s.R[0] <= 1.0);
    lo = std::min(lo, s.R[0]);
    hi = std::max(hi, s.R[0]);
  }
  CHECK(hi > 0.8);  // long migration streaks push R toward 1
  CHECK(lo < 0.6);
}

TEST_CASE("migration cost is linear in recency", "[cost]") {
  auto s = cost::State::init(2, {});
  s.R = {0.1, 0.25};
  CHECK(cost::migration_cost(s, 0) == 10.0 * 0.1);
  CHECK(cost::migration_cost(s, 1) == 2.5);
  s.coeff = {0.0, 0.0};
  CHECK(cost::migration_cost(s, 0) == 0.0);
}

TEST_CASE("adaptive threshold is exp(-R) within [exp(-1), 1]", "[cost]") {
  auto s = cost::State::init(3, {});
  s.R = {0.0, 0.5, 1.0};
  CHECK(cost::adaptive_eta(s, 0) == 1.0);
  CHECK_THAT(cost::adaptive_eta(s, 1), WithinULP(fixtures::kExpNegHalf, 4));
  CHECK_THAT(cost::adaptive_eta(s, 2), WithinULP(fixtures::kExpNegOne, 4));
  for (int i = 0; i < 3; ++i) {
    CHECK(cost::adaptive_eta(s, i) >= fixtures::kExpNegOne);
    CHECK(cost::adaptive_eta(s, i) <= 1.0);
  }
}

TEST_CASE("penalized latency surcharges both endpoints' costs", "[cost]") {
  const auto inst = fixtures::pair_instance();
  auto s = cost::State::init(2, {});
  s.R = {0.0, 0.1};

  // Co-located outcome: evaluating the stay-put pair latency just adds the
  // mover's cost (10 * 0.1) to l(0,0); the peer's cost is zero.
  const Outcome col{{0, 0}};
  CHECK(cost::penalized_latency(inst, col, s, 1, 0, 0) == fixtures::kPenalizedL00);

  // From the split outcome, moving VM 1 to cloud 0 produces the same loads,
  // hence the same surcharged latency.
  const Outcome split{{0, 1}};
  CHECK(cost::penalized_latency(inst, split, s, 1, 0, 0) == fixtures::kPenalizedL00);

  // Zero coefficients collapse the surcharge to +0.0 exactly.
  s.coeff = {0.0, 0.0};
  CHECK(cost::penalized_latency(inst, col, s, 1, 0, 0) == fixtures::kLat00Col);
}
