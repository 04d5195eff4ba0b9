#include <cmath>

#include "doctest.h"
#include "wmlab/hashing.hpp"
#include "wmlab/stats.hpp"

using namespace wmlab;

namespace {

// Direct enumeration with integer binomial coefficients.
long double enumerate_p_right(int trials, int green, long double gamma) {
  long double total = 0.0L;
  for (int k = green; k <= trials; ++k) {
    long double c = 1.0L;
    for (int j = 1; j <= k; ++j) c = c * (trials - k + j) / j;
    total += c * std::pow(gamma, k) * std::pow(1.0L - gamma, trials - k);
  }
  return total;
}

}  // namespace

TEST_CASE("hand-computed tail: T=10, N_g=7, gamma=0.25") {
  // (120 * 27 + 45 * 9 + 10 * 3 + 1) / 4^10
  const double expected = 3676.0 / 1048576.0;
  CHECK(binom_p_right(10, 7, 0.25) == doctest::Approx(expected).epsilon(1e-13));
  CHECK(expected == doctest::Approx(3.5057e-3).epsilon(1e-4));
}

TEST_CASE("enumeration oracle for small T") {
  for (double gamma : {0.1, 0.25, 0.5, 0.75})
    for (int t = 0; t <= 20; ++t)
      for (int g = 0; g <= t; ++g)
        CHECK(std::abs(binom_p_right(t, g, gamma) - double(enumerate_p_right(t, g, gamma))) <= 1e-12);
}

TEST_CASE("boundary counts") {
  CHECK(binom_p_right(50, 0, 0.3) == 1.0);
  CHECK(binom_p_right(0, 0, 0.3) == 1.0);
  CHECK(binom_p_right(10, 10, 0.5) == doctest::Approx(std::pow(0.5, 10)));
  CHECK(binom_log_p_right(100000, 100000, 0.25) == doctest::Approx(100000 * std::log(0.25)).epsilon(1e-12));
  CHECK_THROWS_AS(binom_p_right(10, 11, 0.5), ParameterError);
  CHECK_THROWS_AS(binom_p_right(10, 3, 1.0), ParameterError);
}

TEST_CASE("exact and incomplete-beta paths agree for large T") {
  SplitMix64 rng(17);
  for (int i = 0; i < 40; ++i) {
    const std::int64_t t = 5000 + static_cast<std::int64_t>(uniform_index(rng, 5001));
    const double gamma = std::vector<double>{0.1, 0.25, 0.5, 0.75}[i % 4];
    const double mean = double(t) * gamma;
    const double sd = std::sqrt(mean * (1 - gamma));
    const auto g = static_cast<std::int64_t>(std::clamp(mean + (uniform01(rng) * 10 - 2) * sd, 1.0, double(t)));
    const double exact = binom_log_p_right_exact(t, g, gamma);
    const double beta = binom_log_p_right_beta(t, g, gamma);
    CHECK(std::abs(std::expm1(beta - exact)) < 1e-9);
  }
}

TEST_CASE("tail is monotone in N_g") {
  double prev = 1.0;
  for (int g = 0; g <= 200; ++g) {
    const double p = binom_p_right(200, g, 0.25);
    CHECK(p <= prev);
    prev = p;
  }
}

TEST_CASE("z-score and detection report") {
  CHECK(zscore(100, 25, 0.25) == 0.0);
  CHECK(zscore(100, 40, 0.25) == doctest::Approx(15.0 / std::sqrt(18.75)));
  const std::vector<double> levels{0.01, 0.001};
  const DetectionReport r = make_detection_report(10, 7, 0.25, levels);
  CHECK(r.detected_at.at(0.01));
  CHECK_FALSE(r.detected_at.at(0.001));
  CHECK(r.log10_p == doctest::Approx(std::log10(r.p)));
}

TEST_CASE("log10 p stays finite where p underflows") {
  const DetectionReport r = make_detection_report(20000, 20000, 0.25);
  CHECK(r.p == 0.0);
  CHECK(std::isfinite(r.log10_p));
  CHECK(r.log10_p == doctest::Approx(20000 * std::log10(0.25)));
}

TEST_CASE("TPR, median and empirical thresholds") {
  const std::vector<double> pos{0.001, 0.005, 0.02, 0.5};
  CHECK(tpr_at_fpr(pos, 0.01) == 0.5);
  CHECK(median({3.0, 1.0, 2.0}) == 2.0);
  CHECK(median({4.0, 1.0, 2.0, 3.0}) == 2.5);
  std::vector<double> neg;
  for (int i = 1; i <= 100; ++i) neg.push_back(i / 100.0);
  const double emp = tpr_at_fpr(pos, 0.05, ThresholdMode::Empirical, neg);
  CHECK(emp == 0.75);
  const RocSummary s = summarize_detection(pos, neg, std::vector<double>{0.01});
  CHECK(s.tpr_at_fpr.at(0.01) == 0.5);
}
