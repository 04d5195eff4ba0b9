#include "wmlab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace wmlab {
namespace {

void check_binomial_args(std::int64_t trials, std::int64_t green, double gamma) {
  if (trials < 0 || green < 0 || green > trials) throw ParameterError("binomial test: need 0 <= N_g <= T");
  if (!(gamma > 0.0 && gamma < 1.0)) throw ParameterError("binomial test: gamma must lie in (0,1)");
}

double log_pmf(std::int64_t n, std::int64_t k, double log_p, double log_q) {
  return std::lgamma(double(n) + 1.0) - std::lgamma(double(k) + 1.0) - std::lgamma(double(n - k) + 1.0) +
         double(k) * log_p + double(n - k) * log_q;
}

// Continued fraction for I_x(a,b) (modified Lentz).
double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIterations = 200000;
  constexpr double kEps = 1e-15;
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIterations; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) return h;
  }
  throw ConstructionError("incomplete beta continued fraction did not converge");
}

double log_beta_prefactor(double a, double b, double x) {
  return std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
}

}  // namespace

double log_incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return -std::numeric_limits<double>::infinity();
  if (x >= 1.0) return 0.0;
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return log_beta_prefactor(a, b, x) + std::log(beta_continued_fraction(a, b, x)) - std::log(a);
  }
  // Symmetry: I_x(a,b) = 1 - I_{1-x}(b,a); here the complement is the small tail.
  const double complement = std::exp(log_beta_prefactor(a, b, x)) * beta_continued_fraction(b, a, 1.0 - x) / b;
  return std::log1p(-complement);
}

double binom_log_p_right_exact(std::int64_t trials, std::int64_t green, double gamma) {
  check_binomial_args(trials, green, gamma);
  if (green == 0) return 0.0;
  const double log_p = std::log(gamma);
  const double log_q = std::log1p(-gamma);
  // Terms are unimodal in k; sum relative to the largest.
  const auto mode = std::max<std::int64_t>(green, static_cast<std::int64_t>(std::floor((trials + 1) * gamma)));
  const std::int64_t start = std::min(mode, trials);
  const double peak = log_pmf(trials, start, log_p, log_q);
  double acc = 0.0;
  for (std::int64_t k = green; k <= trials; ++k) acc += std::exp(log_pmf(trials, k, log_p, log_q) - peak);
  return std::min(0.0, peak + std::log(acc));
}

double binom_log_p_right_beta(std::int64_t trials, std::int64_t green, double gamma) {
  check_binomial_args(trials, green, gamma);
  if (green == 0) return 0.0;
  return std::min(0.0, log_incomplete_beta(double(green), double(trials - green + 1), gamma));
}

double binom_log_p_right(std::int64_t trials, std::int64_t green, double gamma) {
  return trials <= kExactBinomialLimit ? binom_log_p_right_exact(trials, green, gamma)
                                       : binom_log_p_right_beta(trials, green, gamma);
}

double binom_p_right(std::int64_t trials, std::int64_t green, double gamma) {
  return std::exp(binom_log_p_right(trials, green, gamma));
}

double zscore(std::int64_t trials, std::int64_t green, double gamma) {
  if (trials <= 0) return 0.0;
  const double t = double(trials);
  return (double(green) - t * gamma) / std::sqrt(t * gamma * (1.0 - gamma));
}

DetectionReport make_detection_report(std::int64_t trials, std::int64_t green, double gamma,
                                      std::span<const double> fpr_levels) {
  DetectionReport r;
  r.trials = trials;
  r.green = green;
  r.gamma = gamma;
  r.z = zscore(trials, green, gamma);
  const double log_p = binom_log_p_right(trials, green, gamma);
  r.p = std::exp(log_p);
  r.log10_p = log_p / std::log(10.0);
  for (const double level : fpr_levels) r.detected_at[level] = r.p < level;
  return r;
}

double tpr_at_fpr(std::span<const double> positive_p, double fpr_level, ThresholdMode mode,
                  std::span<const double> negative_p) {
  if (positive_p.empty()) throw ParameterError("tpr_at_fpr: no positives");
  if (!(fpr_level > 0.0 && fpr_level < 1.0)) throw ParameterError("tpr_at_fpr: level must lie in (0,1)");
  double threshold = fpr_level;
  if (mode == ThresholdMode::Empirical) {
    if (negative_p.empty()) throw ParameterError("tpr_at_fpr: empirical mode needs negatives");
    std::vector<double> neg(negative_p.begin(), negative_p.end());
    std::sort(neg.begin(), neg.end());
    // Largest threshold with at most floor(level * n) negatives strictly below it.
    const auto allowed = static_cast<std::size_t>(std::floor(fpr_level * double(neg.size())));
    threshold = allowed < neg.size() ? neg[allowed] : std::numeric_limits<double>::infinity();
  }
  const auto hits = std::count_if(positive_p.begin(), positive_p.end(), [&](double p) { return p < threshold; });
  return double(hits) / double(positive_p.size());
}

double median(std::vector<double> values) {
  if (values.empty()) throw ParameterError("median of empty set");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

RocSummary summarize_detection(std::vector<double> positive_p, std::vector<double> negative_p,
                               std::span<const double> fpr_levels, ThresholdMode mode) {
  RocSummary s;
  s.positive_p = std::move(positive_p);
  s.negative_p = std::move(negative_p);
  for (const double level : fpr_levels) s.tpr_at_fpr[level] = tpr_at_fpr(s.positive_p, level, mode, s.negative_p);
  s.median_p = median(s.positive_p);
  return s;
}

}  // namespace wmlab
