#include "headroles/error.hpp"
#include "headroles/score.hpp"
#include "headroles/sieve.hpp"

#include "test_util.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace headroles;

namespace {

const std::vector<float> kRow{0.4f, 0.3f, 0.2f, 0.1f};

// Hand evaluation of the bias formula in double, independent of token_bias.
double oracle_bias(const std::vector<double>& row, const std::vector<std::size_t>& targets) {
    double in = 0.0, all = 0.0;
    for (auto s : targets) in += row[s];
    for (double v : row) all += v;
    return (in / static_cast<double>(targets.size())) / (all / static_cast<double>(row.size()));
}

std::vector<std::size_t> random_targets(std::mt19937_64& rng, std::size_t T) {
    std::vector<std::size_t> t;
    for (std::size_t p = 0; p < T; ++p)
        if (rng() % 3 == 0) t.push_back(p);
    if (t.empty()) t.push_back(rng() % T);
    return t;
}

Bundle pair_bundle(std::size_t n_sequences) {
    Bundle b;
    b.model_id = "toy";
    b.layers = 2;
    b.heads = 3;
    for (std::size_t i = 0; i < n_sequences; ++i) {
        SequenceRecord rec;
        rec.id = "s" + std::to_string(i);
        rec.tokens = fixtures::dogs_chase_cats_tokens();
        rec.parse = fixtures::dogs_chase_cats_parse();
        rec.attention = fixtures::uniform_attention(2, 3, rec.tokens.size());
        b.sequences.push_back(rec);
    }
    return b;
}

} // namespace

TEST(TokenBias, hand_oracle_values) {
    const std::vector<std::size_t> first3{0, 1, 2}, last{3};
    EXPECT_NEAR(token_bias(kRow, first3, 1.0), (0.9 / 3) / (1.0 / 4), 1e-6);
    EXPECT_NEAR(token_bias(kRow, last, 1.0), 0.4, 1e-6);
    // Double-precision rows: agreement to 1e-12.
    const std::vector<double> row{0.4, 0.3, 0.2, 0.1};
    EXPECT_NEAR(token_bias(row, first3, 1.0), 1.2, 1e-12);
    EXPECT_NEAR(token_bias(row, last, 1.0), 0.4, 1e-12);
    EXPECT_NEAR(token_bias(row, first3), 1.2, 1e-12);
    const std::vector<float> quarter(4, 0.25f);
    EXPECT_DOUBLE_EQ(token_bias(quarter, first3), 1.0);
}

TEST(TokenBias, empty_sieve_is_an_error) {
    try {
        token_bias(kRow, std::vector<std::size_t>{}, 1.0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::EmptySieve);
    }
}

TEST(TokenBias, uses_actual_row_sum) {
    const std::vector<float> row{0.2f, 0.2f, 0.2f, 0.2f}; // sums to 0.8
    EXPECT_NEAR(token_bias(row, std::vector<std::size_t>{0}), 1.0, 1e-7);
}

TEST(SequenceBias, identity_attention_local_window_one) {
    const std::vector<float> identity{1, 0, 0, 0, 1, 0, 0, 0, 1};
    const auto sieve = local_sieve(fixtures::plain_tokens(3), 1);
    const auto b = sequence_bias(identity, sieve);
    ASSERT_TRUE(b.has_value());
    EXPECT_NEAR(*b, 4.0 / 3.0, 1e-12);
}

TEST(SequenceBias, uniform_attention_is_neutral_and_ineligible_is_absent) {
    const auto seq = fixtures::dogs_chase_cats_tokens();
    const auto parse = fixtures::dogs_chase_cats_parse();
    const auto att = fixtures::uniform_attention(1, 1, seq.size());
    const auto align = align_wordpieces(seq, parse);
    EXPECT_NEAR(*sequence_bias(att.head(0, 0), build_sieve(RoleId::syntactic(), seq, parse, align)), 1.0, 1e-6);
    EXPECT_FALSE(sequence_bias(att.head(0, 0), build_sieve(RoleId::relation("amod"), seq, parse, align)));
}

TEST(TokenBiasProperties, closed_form_range_scale_and_monotonicity) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int trial = 0; trial < 2000; ++trial) {
        const std::size_t T = 2 + rng() % 60;
        // Rows built from dyadic weights so float storage is exact and the row
        // sums to exactly 1.
        std::vector<std::uint32_t> w(T);
        std::uint64_t total = 0;
        for (auto& x : w) total += (x = 1 + static_cast<std::uint32_t>(rng() % 64));
        const std::uint64_t pad = (std::uint64_t{1} << 12) - total % (std::uint64_t{1} << 12);
        w[0] += static_cast<std::uint32_t>(pad);
        total += pad;
        std::vector<float> row(T);
        std::vector<double> row_d(T);
        for (std::size_t i = 0; i < T; ++i) row_d[i] = row[i] = static_cast<float>(static_cast<double>(w[i]) / static_cast<double>(total));
        const auto targets = random_targets(rng, T);

        const double beta = token_bias(row, targets);
        double in = 0.0;
        for (auto s : targets) in += row_d[s];
        // Closed form under exact row-stochasticity.
        double sum = 0.0;
        for (double v : row_d) sum += v;
        if (sum == 1.0) EXPECT_NEAR(beta, static_cast<double>(T) / static_cast<double>(targets.size()) * in, 1e-12);
        EXPECT_NEAR(beta, oracle_bias(row_d, targets), 1e-12);

        // Range.
        EXPECT_GE(beta, 0.0);
        EXPECT_LE(beta, static_cast<double>(T) / static_cast<double>(targets.size()) + 1e-12);

        // Scale invariance.
        const double c = 0.25 + 4.0 * unit(rng);
        std::vector<float> scaled(T);
        for (std::size_t i = 0; i < T; ++i) scaled[i] = static_cast<float>(row_d[i] * c);
        EXPECT_NEAR(token_bias(scaled, targets), beta, 1e-6 * beta + 1e-9);

        // Moving mass from outside the sieve into it never lowers the score.
        std::vector<bool> in_sieve(T, false);
        for (auto s : targets) in_sieve[s] = true;
        for (std::size_t i = 0; i < T; ++i) {
            if (in_sieve[i] || row[i] == 0.0f) continue;
            auto moved = row;
            const float delta = moved[i] * static_cast<float>(unit(rng));
            moved[i] -= delta;
            moved[targets[0]] += delta;
            EXPECT_GE(token_bias(moved, targets), beta - 1e-6);
            break;
        }
    }
}

TEST(TokenBiasProperties, full_sieve_mass_hits_upper_bound) {
    const std::vector<float> row{0.0f, 0.5f, 0.5f, 0.0f};
    EXPECT_DOUBLE_EQ(token_bias(row, std::vector<std::size_t>{1, 2}), 2.0);
}

TEST(HeadSamples, every_head_gets_one_score_per_eligible_sequence) {
    const auto b = pair_bundle(2);
    const auto hs = head_samples(b, RoleId::syntactic());
    ASSERT_EQ(hs.samples.size(), 6u);
    for (const auto& s : hs.samples) {
        EXPECT_EQ(s.size(), 2u);
        EXPECT_EQ(s.sequence_ids, (std::vector<std::string>{"s0", "s1"}));
    }
    EXPECT_EQ(hs.at({1, 2}).head, (HeadCoord{1, 2}));
}

TEST(HeadSamples, sequences_lacking_relation_are_dropped) {
    auto b = pair_bundle(2);
    b.sequences[1].parse.relations[0] = "csubj";
    const auto hs = head_samples(b, RoleId::relation("nsubj"));
    for (const auto& s : hs.samples) {
        EXPECT_EQ(s.size(), 1u);
        EXPECT_EQ(s.sequence_ids, std::vector<std::string>{"s0"});
    }
}

TEST(HeadSamples, single_segment_block_role_has_no_eligible_sequence) {
    try {
        head_samples(pair_bundle(3), RoleId::block());
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::NoEligibleSequence);
    }
    const auto all = all_head_samples(pair_bundle(3), default_roles());
    for (const auto& rs : all) EXPECT_EQ(rs.samples.has_value(), !(rs.role == RoleId::block()) && !(rs.role == RoleId::relation("amod")) && !(rs.role == RoleId::relation("advmod"))) << to_string(rs.role);
}

TEST(HeadSamples, deterministic_across_thread_counts) {
    auto b = pair_bundle(9);
    std::mt19937_64 rng(5);
    for (auto& rec : b.sequences)
        for (std::size_t l = 0; l < 2; ++l)
            for (std::size_t h = 0; h < 3; ++h)
                for (std::size_t t = 0; t < rec.tokens.size(); ++t) {
                    auto row = rec.attention.row(l, h, t);
                    float sum = 0.0f;
                    for (auto& v : row) sum += (v = static_cast<float>(rng() % 100 + 1));
                    for (auto& v : row) v /= sum;
                }
    const auto ref = head_samples(b, RoleId::syntactic(), 1);
    for (unsigned threads : {2u, 3u, 16u}) {
        const auto other = head_samples(b, RoleId::syntactic(), threads);
        for (std::size_t k = 0; k < ref.samples.size(); ++k) {
            EXPECT_EQ(ref.samples[k].scores, other.samples[k].scores);
            EXPECT_EQ(ref.samples[k].sequence_ids, other.samples[k].sequence_ids);
        }
    }
}
