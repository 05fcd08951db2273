#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "qcm/rng.hpp"

using namespace qcm;

TEST_CASE("engines with the same seed produce the same stream") {
  rng::Engine a(123), b(123), c(124);
  bool all_equal = true;
  bool any_diff = false;
  for (int i = 0; i < 100; ++i) {
    const auto va = a.next_u64();
    all_equal = all_equal && va == b.next_u64();
    any_diff = any_diff || va != c.next_u64();
  }
  CHECK(all_equal);
  CHECK(any_diff);
}

TEST_CASE("derive splits independent labeled streams") {
  CHECK(rng::derive(1, "player") != rng::derive(1, "session"));
  CHECK(rng::derive(1, std::uint64_t{5}) != rng::derive(2, std::uint64_t{5}));
  CHECK(rng::derive(1, "x") == rng::derive(1, "x"));
}

TEST_CASE("bounded draws stay in range") {
  rng::Engine eng(9);
  for (int i = 0; i < 5000; ++i) {
    const auto v = eng.below(7);
    CHECK(v < 7);
    const auto r = eng.range(-3, 4);
    CHECK(r >= -3);
    CHECK(r <= 4);
    const double u = eng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("normal draws have roughly standard moments") {
  rng::Engine eng(77);
  double sum = 0, sumsq = 0;
  constexpr int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double z = eng.normal();
    sum += z;
    sumsq += z * z;
  }
  const double mean = sum / n;
  const double var = sumsq / n - mean * mean;
  CHECK(std::fabs(mean) < 0.03);
  CHECK(std::fabs(var - 1.0) < 0.05);
}

TEST_CASE("inverse normal CDF hits known quantiles") {
  CHECK(std::fabs(rng::Engine::inverse_normal_cdf(0.5)) < 1e-9);
  CHECK(rng::Engine::inverse_normal_cdf(0.975) == doctest::Approx(1.959963985).epsilon(1e-7));
  CHECK(rng::Engine::inverse_normal_cdf(0.025) == doctest::Approx(-1.959963985).epsilon(1e-7));
}

TEST_CASE("log-normal draws have the configured median") {
  rng::Engine eng(4242);
  constexpr int n = 20001;
  std::vector<double> draws;
  draws.reserve(n);
  for (int i = 0; i < n; ++i) draws.push_back(eng.log_normal(15.0, 0.5));
  std::sort(draws.begin(), draws.end());
  CHECK(draws[n / 2] == doctest::Approx(15.0).epsilon(0.03));
}
