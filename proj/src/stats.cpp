#include "headroles/stats.hpp"

#include "headroles/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace headroles {

double normal_sf(double z) {
    // erfc keeps full relative precision in the upper tail, where 1 - Phi(z)
    // would cancel.
    return 0.5 * std::erfc(z / std::numbers::sqrt2);
}

double sample_mean(std::span<const double> xs) {
    if (xs.empty()) return 0.0;
    // Extended-precision accumulation in input order.
    long double sum = 0.0L;
    for (double x : xs) sum += x;
    return static_cast<double>(sum / static_cast<long double>(xs.size()));
}

double sample_std(std::span<const double> xs) {
    if (xs.size() < 2) return 0.0;
    const long double mean = sample_mean(xs);
    long double ss = 0.0L;
    for (double x : xs) ss += (x - mean) * (x - mean);
    return static_cast<double>(std::sqrt(ss / static_cast<long double>(xs.size() - 1)));
}

HypothesisResult ztest_from_summary(std::size_t n, double mean, double std, double tau, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
    if (n == 0) throw Error(ErrorKind::InsufficientSample, "empty sample");
    HypothesisResult r;
    r.n = n;
    r.mean = mean;
    r.std = std;
    r.tau = tau;
    if (std > 0.0) {
        r.z = (mean - tau) / (std / std::sqrt(static_cast<double>(n)));
        r.p_value = normal_sf(r.z);
    } else {
        constexpr double inf = std::numeric_limits<double>::infinity();
        r.z = mean > tau ? inf : (mean < tau ? -inf : 0.0);
        r.p_value = mean > tau ? 0.0 : 1.0;
    }
    r.decision = r.p_value < alpha ? Decision::RejectNull : Decision::Inconclusive;
    return r;
}

HypothesisResult ztest_mean_gt(std::span<const double> samples, double tau, double alpha) {
    // A single observation has no spread estimate and falls under the
    // zero-variance rule.
    if (samples.empty()) throw Error(ErrorKind::InsufficientSample, "empty sample");
    return ztest_from_summary(samples.size(), sample_mean(samples), sample_std(samples), tau, alpha);
}

void average_ranks(std::span<const double> xs, std::span<double> ranks) {
    std::vector<std::size_t> order(xs.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return xs[a] < xs[b]; });
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && xs[order[j + 1]] == xs[order[i]]) ++j;
        const double rank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
        for (auto k = i; k <= j; ++k) ranks[order[k]] = rank;
        i = j + 1;
    }
}

double spearman(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw std::invalid_argument("spearman: series differ in length");
    if (x.size() < 2) throw Error(ErrorKind::DegenerateInput, "spearman needs at least two pairs");
    const auto n = x.size();
    std::vector<double> rx(n), ry(n);
    average_ranks(x, rx);
    average_ranks(y, ry);
    const double mx = sample_mean(rx), my = sample_mean(ry);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) throw Error(ErrorKind::DegenerateInput, "spearman on a constant series");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::int64_t suggest_tau(std::span<const double> scores) {
    if (scores.empty()) throw std::invalid_argument("suggest_tau: empty score list");
    return static_cast<std::int64_t>(std::floor(sample_mean(scores))) + 1;
}

} // namespace headroles
