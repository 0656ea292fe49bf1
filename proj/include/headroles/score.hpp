#pragma once

#include "headroles/bundle.hpp"
#include "headroles/role.hpp"
#include "headroles/sieve.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace headroles {

struct HeadCoord {
    std::size_t layer = 0;
    std::size_t head = 0;

    auto operator<=>(const HeadCoord&) const = default;
};

struct SieveBiasSamples {
    HeadCoord head;
    RoleId role;
    std::vector<double> scores;
    std::vector<std::string> sequence_ids;

    std::size_t size() const { return scores.size(); }
};

// Samples for every head of a bundle under one role, indexed layer * H + head.
struct HeadSamples {
    RoleId role;
    std::size_t layers = 0;
    std::size_t heads = 0;
    std::vector<SieveBiasSamples> samples;

    const SieveBiasSamples& at(HeadCoord c) const { return samples[c.layer * heads + c.head]; }
};

// Mean attention on the sieve relative to mean attention overall:
//   (sum_{s in targets} row[s] / |targets|) / (row_sum / T)
// Throws Error(EmptySieve) if targets is empty.
double token_bias(std::span<const float> row, std::span<const std::size_t> targets, double row_sum);
double token_bias(std::span<const float> row, std::span<const std::size_t> targets);
// Same, for rows held in double precision.
double token_bias(std::span<const double> row, std::span<const std::size_t> targets, double row_sum);
double token_bias(std::span<const double> row, std::span<const std::size_t> targets);

// Mean token bias over eligible source tokens; nullopt when none is eligible.
// `head_matrix` is the T x T block of one head.
std::optional<double> sequence_bias(std::span<const float> head_matrix, const Sieve& sieve);

HeadSamples head_samples(const Bundle& bundle, const RoleId& role, unsigned threads = 1);

struct RoleSamples {
    RoleId role;
    std::optional<HeadSamples> samples; // nullopt when no sequence is eligible
};

// head_samples for each role; roles without eligible sequences are kept with
// an empty entry instead of raising NoEligibleSequence.
std::vector<RoleSamples> all_head_samples(const Bundle& bundle, std::span<const RoleId> roles,
                                          unsigned threads = 1);

} // namespace headroles
