#pragma once

#include "headroles/bundle.hpp"
#include "headroles/role.hpp"
#include "headroles/score.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace headroles {

// Generator for every synthetic draw. std::mt19937_64's output sequence is
// fixed by the C++ standard; doubles are taken from the top 53 bits, so runs
// are reproducible across compilers and platforms. The standard library
// distributions are deliberately not used (their algorithms are unspecified).
class SynthRng {
public:
    explicit SynthRng(std::uint64_t seed) : engine_(seed) {}

    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

private:
    std::mt19937_64 engine_;
};

// SplitMix64 finalizer applied to (seed, stream); used to give every
// sequence its own independent generator.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

struct PlantSpec {
    HeadCoord head;
    RoleId role;
    // Either a fixed in-sieve fraction, or a target bias from which the
    // fraction is derived per row as min(1, bias * |S| / T).
    std::optional<double> mass;
    std::optional<double> bias;
    double noise = 0.05;
};

// Attention row of length T with `mass` split uniformly over targets and the
// rest uniformly over the other positions. Each weight is then multiplied by
// exp(noise * (2u - 1)), u ~ U[0,1), and the row renormalized.
std::vector<float> plant_row(std::span<const std::size_t> targets, std::size_t T, double mass, double noise,
                             SynthRng& rng);
std::vector<float> plant_row(std::span<const std::size_t> targets, std::size_t T, double mass, double noise,
                             std::uint64_t rng_seed);

struct SynthLayout {
    std::size_t layers = 12;
    std::size_t heads = 12;
    std::size_t tokens = 32; // T, including CLS and both SEPs; at least 5
    std::size_t sequences = 200;
    double background_noise = 0.05;
};

// Token layout and toy parse shared by every synthetic sequence:
// [CLS] sentence-0 [SEP] sentence-1 [SEP], each sentence filled with
// five-word clauses carrying nsubj, dobj, amod, and advmod arcs.
TokenSequence synth_tokens(std::size_t T);
DependencyParse synth_parse(const TokenSequence& seq);

Bundle generate_bundle(const SynthLayout& layout, std::span<const PlantSpec> plants, std::uint64_t seed,
                       unsigned threads = 1);

std::vector<PlantSpec> parse_plants(std::string_view json_text);

} // namespace headroles
