#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

namespace headroles {

enum class Decision { RejectNull, Inconclusive };

struct HypothesisResult {
    std::size_t n = 0;
    double mean = 0.0;
    double std = 0.0; // sample standard deviation, n - 1 denominator
    double tau = 0.0;
    double z = 0.0;   // +/-inf when std == 0 and mean != tau, 0 when mean == tau
    double p_value = 1.0;
    Decision decision = Decision::Inconclusive;

    bool rejected() const { return decision == Decision::RejectNull; }
};

inline constexpr double kDefaultAlpha = 0.05;

// Upper tail of the standard normal, P(Z >= z) = erfc(z / sqrt(2)) / 2.
double normal_sf(double z);

double sample_mean(std::span<const double> xs);
double sample_std(std::span<const double> xs); // n - 1 denominator; 0 for n < 2

// One-tailed z-test of H0: population mean <= tau. Zero-variance samples are
// decided by strict comparison of the mean against tau (p = 0 or 1).
// Throws Error(InsufficientSample) for an empty sample.
HypothesisResult ztest_mean_gt(std::span<const double> samples, double tau, double alpha = kDefaultAlpha);
// Same test from summary statistics.
HypothesisResult ztest_from_summary(std::size_t n, double mean, double std, double tau,
                                    double alpha = kDefaultAlpha);

// Average ranks (1-based) with ties sharing the mean of their rank range.
void average_ranks(std::span<const double> xs, std::span<double> ranks);
// Spearman rank correlation. Throws Error(DegenerateInput) for a constant
// series or fewer than two pairs.
double spearman(std::span<const double> x, std::span<const double> y);

// Smallest integer strictly greater than the mean.
std::int64_t suggest_tau(std::span<const double> scores);

} // namespace headroles
