#pragma once

// Binomial hypothesis test and detection-rate summaries.

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "wmlab/types.hpp"

namespace wmlab {

/// Largest T evaluated by exact log-space summation; above it the
/// regularized incomplete beta function is used.
inline constexpr std::int64_t kExactBinomialLimit = 10000;

/// Natural log of Pr(X >= green) for X ~ Binomial(trials, gamma).
double binom_log_p_right(std::int64_t trials, std::int64_t green, double gamma);

/// Pr(X >= green) for X ~ Binomial(trials, gamma). May underflow to 0 for
/// extreme counts; use binom_log_p_right when the magnitude matters.
double binom_p_right(std::int64_t trials, std::int64_t green, double gamma);

/// Exact path: log-sum-exp over k = green..trials of the log pmf.
double binom_log_p_right_exact(std::int64_t trials, std::int64_t green, double gamma);

/// Incomplete-beta path: log I_gamma(green, trials - green + 1), evaluated by
/// Lentz's continued fraction to relative tolerance 1e-15 (results are good
/// to about 1e-12 relative).
double binom_log_p_right_beta(std::int64_t trials, std::int64_t green, double gamma);

/// log of the regularized incomplete beta I_x(a, b).
double log_incomplete_beta(double a, double b, double x);

/// (green - T*gamma) / sqrt(T*gamma*(1-gamma)); no continuity correction.
double zscore(std::int64_t trials, std::int64_t green, double gamma);

/// Default FPR levels used when none are given.
inline const std::vector<double> kDefaultFprLevels{0.01};

/// Fills z, p and detected_at (p < level) for a count.
DetectionReport make_detection_report(std::int64_t trials, std::int64_t green, double gamma,
                                      std::span<const double> fpr_levels = kDefaultFprLevels);

enum class ThresholdMode { Analytic, Empirical };

/// Fraction of positives flagged at the given FPR level. Analytic mode flags
/// p < level; empirical mode uses the level-quantile of `negative_p` as the
/// threshold.
double tpr_at_fpr(std::span<const double> positive_p, double fpr_level, ThresholdMode mode = ThresholdMode::Analytic,
                  std::span<const double> negative_p = {});

double median(std::vector<double> values);

struct RocSummary {
  std::vector<double> positive_p;
  std::vector<double> negative_p;
  std::map<double, double> tpr_at_fpr;
  double median_p = 1.0;
};

RocSummary summarize_detection(std::vector<double> positive_p, std::vector<double> negative_p,
                               std::span<const double> fpr_levels, ThresholdMode mode = ThresholdMode::Analytic);

}  // namespace wmlab
