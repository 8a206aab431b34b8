#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include <fracforms/special_functions.hpp>

#include "generators.hpp"

using namespace fracforms;
using Catch::Matchers::WithinRel;
using Catch::Matchers::WithinAbs;

TEST_CASE("gamma reference values") {
  // mpmath, 30 digits
  CHECK_THAT(fracforms::gamma(0.5), WithinRel(1.77245385090551602729816748334, 1e-14));
  CHECK_THAT(fracforms::gamma(-0.5), WithinRel(-3.54490770181103205459633496668, 1e-14));
  CHECK_THAT(fracforms::gamma(1.5), WithinRel(0.886226925452758013649083741671, 1e-14));
  CHECK_THAT(fracforms::gamma(7.3), WithinRel(1271.42363366390883991787432614, 1e-13));
  CHECK_THAT(fracforms::gamma(-3.7), WithinRel(0.251643995902422681285849356151, 1e-13));
  CHECK_THAT(fracforms::gamma(0.001), WithinRel(999.423772484595445298321040722, 1e-13));
  CHECK_THAT(fracforms::gamma(100.25), WithinRel(2.94846628183876997000984521107e+156, 1e-12));
  CHECK_THAT(fracforms::gamma(170.5), WithinRel(5.56209241455999961070580965936e+305, 1e-12));
  CHECK_THAT(fracforms::gamma(-169.5), WithinRel(5.64822088422332547175131268098e-306, 1e-12));
  CHECK(fracforms::gamma(5.0) == 24.0);
}

TEST_CASE("gamma throws at poles, rgamma vanishes there") {
  for (double x : {0.0, -1.0, -2.0, -7.0, -3.0 + 1e-13}) {
    CHECK_THROWS_AS(fracforms::gamma(x), DomainError);
    CHECK(rgamma(x) == 0.0);
  }
  CHECK_THAT(rgamma(0.5), WithinRel(0.564189583547756286948079451561, 1e-14));
  CHECK(rgamma(-2.5) != 0.0);
  CHECK(std::isfinite(rgamma(200.5)));
  CHECK(rgamma(200.5) >= 0.0);
}

TEST_CASE("gamma_ratio") {
  CHECK_THAT(gamma_ratio(2.0, 1.5), WithinRel(1.12837916709551257389615890312, 1e-14));
  CHECK_THAT(gamma_ratio(2.0, 2.5), WithinRel(0.752252778063675049264105935414, 1e-14));
  CHECK_THAT(gamma_ratio(6.0, 5.5), WithinRel(2.29257989505120015013822761269, 1e-14));
  CHECK_THAT(gamma_ratio(3.0, 2.5), WithinRel(1.50450555612735009852821187083, 1e-14));
  // numerator finite, denominator at a pole
  CHECK(gamma_ratio(3.0, 0.0) == 0.0);
  CHECK(gamma_ratio(3.0, -2.0) == 0.0);
  // beyond the overflow range of tgamma
  CHECK_THAT(gamma_ratio(200.5, 200.0), WithinRel(std::exp(std::lgamma(200.5) - std::lgamma(200.0)), 1e-12));
}

TEST_CASE("gen_binomial") {
  CHECK(gen_binomial(0.5, 2) == -0.125);
  CHECK(gen_binomial(5.0, 2) == 10.0);
  CHECK(gen_binomial(2.0, 3) == 0.0);
  CHECK(gen_binomial(3.0, 7) == 0.0);
  CHECK_THAT(gen_binomial(-0.5, 3), WithinAbs(-0.3125, 1e-15));
}

TEST_CASE("whole_ceiling and pole detection") {
  CHECK(whole_ceiling(0.5) == 1);
  CHECK(whole_ceiling(1.0) == 1);
  CHECK(whole_ceiling(1.0 + 1e-12) == 1);
  CHECK(whole_ceiling(1.6) == 2);
  CHECK(whole_ceiling(2.7) == 3);
  CHECK(is_gamma_pole(-3.0));
  CHECK_FALSE(is_gamma_pole(-3.0 + 1e-6));
  CHECK_FALSE(is_gamma_pole(1.0));
}

TEST_CASE("property: gamma recurrence") {
  std::mt19937_64 rng(11);
  for (int n = 0; n < 1000; ++n) {
    const double x = gen::uniform(rng, 1e-3, 50.0);
    REQUIRE_THAT(fracforms::gamma(x + 1.0), WithinRel(x * fracforms::gamma(x), 1e-12));
  }
}

TEST_CASE("property: rgamma is the reciprocal away from poles") {
  std::mt19937_64 rng(12);
  int tested = 0;
  while (tested < 1000) {
    const double x = gen::uniform(rng, -20.0, 50.0);
    if (x <= 0.0 && std::abs(x - std::round(x)) < 0.01) continue;
    ++tested;
    REQUIRE_THAT(rgamma(x) * fracforms::gamma(x), WithinRel(1.0, 1e-12));
  }
}

TEST_CASE("property: binomial identities") {
  std::mt19937_64 rng(13);
  for (int n = 0; n < 200; ++n) {
    const double a = gen::uniform(rng, -5.0, 5.0);
    const double b = gen::uniform(rng, -5.0, 5.0);
    REQUIRE(gen_binomial(a, 0) == 1.0);
    for (unsigned k = 0; k <= 6; ++k) {
      double s = 0.0;
      for (unsigned j = 0; j <= k; ++j) s += gen_binomial(a, j) * gen_binomial(b, k - j);
      const double want = gen_binomial(a + b, k);
      REQUIRE_THAT(s, WithinAbs(want, 1e-10 * std::max(1.0, std::abs(want))));
    }
  }
}
