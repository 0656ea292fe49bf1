#include "headroles/score.hpp"

#include "headroles/error.hpp"
#include "headroles/parallel.hpp"

#include <stdexcept>

namespace headroles {

namespace {

template <typename V>
double bias_impl(std::span<const V> row, std::span<const std::size_t> targets, double row_sum) {
    if (targets.empty()) throw Error(ErrorKind::EmptySieve, "token_bias called on an ineligible token");
    if (!(row_sum > 0.0)) throw std::invalid_argument("token_bias: row sum must be positive");
    double in_sieve = 0.0;
    for (auto s : targets) in_sieve += row[s];
    const double sieve_mean = in_sieve / static_cast<double>(targets.size());
    const double overall_mean = row_sum / static_cast<double>(row.size());
    return sieve_mean / overall_mean;
}

template <typename V>
double sum_of(std::span<const V> row) {
    double sum = 0.0;
    for (V v : row) sum += v;
    return sum;
}

} // namespace

double token_bias(std::span<const float> row, std::span<const std::size_t> targets, double row_sum) {
    return bias_impl(row, targets, row_sum);
}

double token_bias(std::span<const float> row, std::span<const std::size_t> targets) {
    return bias_impl(row, targets, sum_of(row));
}

double token_bias(std::span<const double> row, std::span<const std::size_t> targets, double row_sum) {
    return bias_impl(row, targets, row_sum);
}

double token_bias(std::span<const double> row, std::span<const std::size_t> targets) {
    return bias_impl(row, targets, sum_of(row));
}

std::optional<double> sequence_bias(std::span<const float> head_matrix, const Sieve& sieve) {
    const auto T = sieve.size();
    double total = 0.0;
    std::size_t eligible = 0;
    for (std::size_t t = 0; t < T; ++t) {
        if (!sieve.eligible(t)) continue;
        total += token_bias(head_matrix.subspan(t * T, T), sieve.targets[t]);
        ++eligible;
    }
    if (eligible == 0) return std::nullopt;
    return total / static_cast<double>(eligible);
}

namespace {

// Per-sequence scores for all heads; empty when the sequence is ineligible.
std::vector<double> score_sequence(const Bundle& bundle, const SequenceRecord& rec, const RoleId& role) {
    const auto align = align_wordpieces(rec.tokens, rec.parse);
    const auto sieve = build_sieve(role, rec.tokens, rec.parse, align);
    if (sieve.eligible_count() == 0) return {};
    std::vector<double> out;
    out.reserve(bundle.layers * bundle.heads);
    for (std::size_t l = 0; l < bundle.layers; ++l)
        for (std::size_t h = 0; h < bundle.heads; ++h) out.push_back(*sequence_bias(rec.attention.head(l, h), sieve));
    return out;
}

} // namespace

HeadSamples head_samples(const Bundle& bundle, const RoleId& role, unsigned threads) {
    std::vector<std::vector<double>> per_sequence(bundle.sequences.size());
    parallel_for(bundle.sequences.size(), threads,
                 [&](std::size_t i) { per_sequence[i] = score_sequence(bundle, bundle.sequences[i], role); });

    HeadSamples out{role, bundle.layers, bundle.heads, {}};
    out.samples.resize(bundle.layers * bundle.heads);
    for (std::size_t l = 0; l < bundle.layers; ++l)
        for (std::size_t h = 0; h < bundle.heads; ++h) {
            auto& s = out.samples[l * bundle.heads + h];
            s.head = {l, h};
            s.role = role;
        }

    bool any = false;
    for (std::size_t i = 0; i < per_sequence.size(); ++i) {
        if (per_sequence[i].empty()) continue;
        any = true;
        for (std::size_t k = 0; k < per_sequence[i].size(); ++k) {
            out.samples[k].scores.push_back(per_sequence[i][k]);
            out.samples[k].sequence_ids.push_back(bundle.sequences[i].id);
        }
    }
    if (!any) throw Error(ErrorKind::NoEligibleSequence, "role " + to_string(role) + " has no eligible sequence");
    return out;
}

std::vector<RoleSamples> all_head_samples(const Bundle& bundle, std::span<const RoleId> roles, unsigned threads) {
    std::vector<RoleSamples> out;
    for (const auto& role : roles) {
        try {
            out.push_back({role, head_samples(bundle, role, threads)});
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::NoEligibleSequence) throw;
            out.push_back({role, std::nullopt});
        }
    }
    return out;
}

} // namespace headroles
