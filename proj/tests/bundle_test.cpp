#include "headroles/bundle.hpp"
#include "headroles/error.hpp"

#include "test_util.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <random>

using namespace headroles;
using headroles::fixtures::TempDir;

namespace {

ErrorKind kind_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "expected a headroles::Error";
    return ErrorKind::UnknownRole;
}

Bundle two_sequence_bundle() {
    Bundle b;
    b.model_id = "toy";
    b.layers = 2;
    b.heads = 2;
    for (int i = 0; i < 2; ++i) {
        SequenceRecord rec;
        rec.id = "s" + std::to_string(i);
        rec.tokens = fixtures::dogs_chase_cats_tokens();
        rec.parse = fixtures::dogs_chase_cats_parse();
        rec.attention = fixtures::uniform_attention(2, 2, rec.tokens.size());
        // Make the tensors distinguishable.
        auto row = rec.attention.row(1, 1, 2);
        std::fill(row.begin(), row.end(), 0.0f);
        row[0] = 0.5f;
        row[static_cast<std::size_t>(i) + 1] = 0.5f;
        b.sequences.push_back(std::move(rec));
    }
    return b;
}

} // namespace

TEST(Conllu, parses_three_word_sentence) {
    const auto text = "# text = dogs chase cats\n"
                      "1\tdogs\tdog\tNOUN\t_\t_\t2\tnsubj\t_\t_\n"
                      "2\tchase\tchase\tVERB\t_\t_\t0\tROOT\t_\t_\n"
                      "3\tcats\tcat\tNOUN\t_\t_\t2\tdobj\t_\t_\n\n";
    const auto parses = parse_conllu(text);
    ASSERT_EQ(parses.size(), 1u);
    const auto& p = parses[0];
    EXPECT_EQ(p.words, (std::vector<std::string>{"dogs", "chase", "cats"}));
    EXPECT_EQ(p.heads, (std::vector<std::optional<int>>{1, std::nullopt, 1}));
    EXPECT_EQ(p.relations, (std::vector<std::string>{"nsubj", "root", "dobj"}));
}

TEST(Conllu, empty_document_gives_no_sentences) {
    EXPECT_TRUE(parse_conllu("").empty());
    EXPECT_TRUE(parse_conllu("# only a comment\n\n").empty());
}

TEST(Conllu, reports_malformed_line_number) {
    const auto text = "1\tdogs\t_\t_\t_\t_\t0\troot\t_\t_\n2\tchase\t_\t_\t_\t_\t1\tdep\t_\n";
    try {
        parse_conllu(text);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::MalformedLine);
        EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
    }
}

TEST(Conllu, head_errors) {
    EXPECT_EQ(kind_of([] { parse_conllu("1\ta\t_\t_\t_\t_\tx\troot\t_\t_\n"); }), ErrorKind::NonIntegerHead);
    EXPECT_EQ(kind_of([] { parse_conllu("1\ta\t_\t_\t_\t_\t0\troot\t_\t_\n2\tb\t_\t_\t_\t_\t5\tdep\t_\t_\n"); }),
              ErrorKind::HeadOutOfRange);
}

TEST(Conllu, skips_multiword_ranges_and_keeps_subtypes_lowercased) {
    const auto text = "1-2\tdon't\t_\t_\t_\t_\t_\t_\t_\t_\n"
                      "1\tdo\t_\t_\t_\t_\t0\tROOT\t_\t_\n"
                      "2\tn't\t_\t_\t_\t_\t1\tadvmod:NEG\t_\t_\n";
    const auto parses = parse_conllu(text);
    ASSERT_EQ(parses.size(), 1u);
    EXPECT_EQ(parses[0].relations[1], "advmod:neg");
}

TEST(Conllu, pair_sentences_merge_into_forest_and_split_back) {
    const auto text = "1\ta\t_\t_\t_\t_\t0\troot\t_\t_\n\n1\tb\t_\t_\t_\t_\t2\tnsubj\t_\t_\n2\tc\t_\t_\t_\t_\t0\troot\t_\t_\n";
    const auto merged = merge_sentences(parse_conllu(text));
    EXPECT_EQ(merged.heads, (std::vector<std::optional<int>>{std::nullopt, 2, std::nullopt}));
    EXPECT_EQ(merged.sentence_starts, (std::vector<std::size_t>{0, 1}));
    EXPECT_NO_THROW(validate_parse(merged));
    EXPECT_EQ(write_conllu(split_sentences(merged)), write_conllu(parse_conllu(text)));
}

TEST(Align, wordpieces_group_by_word_id) {
    const auto align = align_wordpieces(fixtures::dogs_chase_cats_tokens(), fixtures::dogs_chase_cats_parse());
    EXPECT_EQ(align, (WordAlignment{{1, 2}, {3}, {4}}));
}

TEST(Align, single_piece_words_are_singletons) {
    const auto align = align_wordpieces(fixtures::plain_tokens(4), fixtures::chain_parse(4));
    for (std::size_t w = 0; w < 4; ++w) EXPECT_EQ(align[w], std::vector<std::size_t>{w});
}

TEST(Align, word_count_mismatch_and_gap) {
    auto parse = fixtures::dogs_chase_cats_parse();
    parse.words.push_back("extra");
    parse.heads.push_back(1);
    parse.relations.push_back("dep");
    EXPECT_EQ(kind_of([&] { align_wordpieces(fixtures::dogs_chase_cats_tokens(), parse); }),
              ErrorKind::WordCountMismatch);

    auto tokens = fixtures::dogs_chase_cats_tokens();
    tokens.word_ids = {std::nullopt, 0, 0, 2, 2, std::nullopt}; // word 1 has no pieces
    EXPECT_EQ(kind_of([&] { align_wordpieces(tokens, fixtures::dogs_chase_cats_parse()); }),
              ErrorKind::GapInAlignment);
}

TEST(Align, property_alignment_is_ordered_cover_of_content_positions) {
    std::mt19937_64 rng(42);
    for (int trial = 0; trial < 200; ++trial) {
        TokenSequence s;
        s.tokens.push_back("[CLS]");
        s.special_flags.push_back(SpecialFlag::Cls);
        s.segment_ids.push_back(0);
        s.word_ids.push_back(std::nullopt);
        int word = -1;
        const auto n = 1 + rng() % 30;
        for (std::size_t i = 0; i < n; ++i) {
            if (word < 0 || rng() % 3 != 0) ++word;
            s.tokens.push_back("x");
            s.special_flags.push_back(SpecialFlag::None);
            s.segment_ids.push_back(0);
            s.word_ids.push_back(word);
        }
        const auto align = align_wordpieces(s, fixtures::chain_parse(static_cast<std::size_t>(word + 1)));
        std::vector<std::size_t> flat;
        for (const auto& w : align) flat.insert(flat.end(), w.begin(), w.end());
        std::vector<std::size_t> expected;
        for (std::size_t p = 1; p <= n; ++p) expected.push_back(p);
        EXPECT_EQ(flat, expected);
    }
}

TEST(Bundle, write_then_load_round_trips_bit_exactly) {
    TempDir dir("roundtrip");
    std::mt19937_64 rng(7);
    Bundle b = two_sequence_bundle();
    // Random stochastic rows, including values that are not short decimals.
    for (auto& rec : b.sequences) {
        for (std::size_t l = 0; l < 2; ++l)
            for (std::size_t h = 0; h < 2; ++h)
                for (std::size_t t = 0; t < rec.tokens.size(); ++t) {
                    auto row = rec.attention.row(l, h, t);
                    double sum = 0.0;
                    std::vector<double> w(row.size());
                    for (auto& x : w) sum += (x = static_cast<double>(rng() % 1000 + 1));
                    for (std::size_t k = 0; k < row.size(); ++k) row[k] = static_cast<float>(w[k] / sum);
                }
    }
    b.roles = {RoleId::local(RoleVariant::Prev, 3), RoleId::relation("nmod")};
    write_bundle(b, dir.path());
    const auto loaded = load_bundle(dir.path());

    EXPECT_EQ(loaded.model_id, "toy");
    EXPECT_EQ(loaded.layers, 2u);
    EXPECT_EQ(loaded.heads, 2u);
    EXPECT_EQ(loaded.roles, b.roles);
    ASSERT_EQ(loaded.sequences.size(), 2u);
    for (std::size_t i = 0; i < 2; ++i) {
        const auto& x = b.sequences[i];
        const auto& y = loaded.sequences[i];
        EXPECT_EQ(x.id, y.id);
        EXPECT_EQ(x.tokens.tokens, y.tokens.tokens);
        EXPECT_EQ(x.tokens.special_flags, y.tokens.special_flags);
        EXPECT_EQ(x.tokens.segment_ids, y.tokens.segment_ids);
        EXPECT_EQ(x.tokens.word_ids, y.tokens.word_ids);
        EXPECT_EQ(x.parse.words, y.parse.words);
        EXPECT_EQ(x.parse.heads, y.parse.heads);
        EXPECT_EQ(x.parse.relations, y.parse.relations);
        EXPECT_EQ(x.attention, y.attention);
    }
}

TEST(Bundle, attn_file_is_little_endian_row_major) {
    TempDir dir("layout");
    Bundle b = two_sequence_bundle();
    write_bundle(b, dir.path());
    std::ifstream in(dir.path() / "seq_0" / "attn.bin", std::ios::binary);
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    ASSERT_EQ(bytes.size(), 4u * 2 * 2 * 6 * 6);
    // First float is 1/6 in IEEE-754 binary32 = 0x3E2AAAAB.
    EXPECT_EQ(bytes[0], 0xAB);
    EXPECT_EQ(bytes[1], 0xAA);
    EXPECT_EQ(bytes[2], 0x2A);
    EXPECT_EQ(bytes[3], 0x3E);
}

TEST(Bundle, missing_file) {
    TempDir dir("missing");
    EXPECT_EQ(kind_of([&] { load_bundle(dir.path()); }), ErrorKind::MissingFile);
    write_bundle(two_sequence_bundle(), dir.path());
    std::filesystem::remove(dir.path() / "seq_1" / "parse.conllu");
    EXPECT_EQ(kind_of([&] { load_bundle(dir.path()); }), ErrorKind::MissingFile);
}

TEST(Bundle, truncated_tensor_is_shape_mismatch) {
    TempDir dir("shape");
    write_bundle(two_sequence_bundle(), dir.path());
    std::filesystem::resize_file(dir.path() / "seq_0" / "attn.bin", 4u * 2 * 2 * 6 * 6 - 4);
    EXPECT_EQ(kind_of([&] { load_bundle(dir.path()); }), ErrorKind::ShapeMismatch);
}

TEST(Bundle, row_sum_violation_names_layer_head_token) {
    Bundle b = two_sequence_bundle();
    auto row = b.sequences[1].attention.row(1, 0, 3);
    for (auto& v : row) v *= 0.8f;
    try {
        validate_bundle(b);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::RowSumViolation);
        EXPECT_NE(std::string(e.what()).find("sequence s1 layer 1 head 0 token 3"), std::string::npos) << e.what();
    }
}

TEST(Bundle, reports_first_offender_in_manifest_order_under_threads) {
    Bundle b = two_sequence_bundle();
    for (auto& v : b.sequences[0].attention.row(0, 1, 2)) v *= 0.5f;
    for (auto& v : b.sequences[1].attention.row(0, 0, 0)) v *= 0.5f;
    for (unsigned threads : {1u, 2u, 8u}) {
        try {
            validate_bundle(b, threads);
            FAIL();
        } catch (const Error& e) {
            EXPECT_NE(std::string(e.what()).find("sequence s0"), std::string::npos);
        }
    }
}

TEST(Bundle, row_sum_within_tolerance_is_accepted) {
    Bundle b = two_sequence_bundle();
    auto row = b.sequences[0].attention.row(0, 0, 0);
    row[0] += 5e-5f;
    EXPECT_NO_THROW(validate_bundle(b));
}

TEST(Bundle, annotation_mismatch_for_nonexistent_word) {
    Bundle b = two_sequence_bundle();
    b.sequences[0].tokens.word_ids[4] = 7;
    EXPECT_EQ(kind_of([&] { validate_bundle(b); }), ErrorKind::AnnotationMismatch);
}

TEST(Bundle, token_invariants) {
    auto s = fixtures::dogs_chase_cats_tokens();
    s.segment_ids = {0, 1, 1, 0, 0, 0};
    EXPECT_EQ(kind_of([&] { validate_tokens(s); }), ErrorKind::AnnotationMismatch);
    s = fixtures::dogs_chase_cats_tokens();
    s.special_flags[3] = SpecialFlag::Cls;
    s.word_ids[3] = std::nullopt;
    EXPECT_EQ(kind_of([&] { validate_tokens(s); }), ErrorKind::AnnotationMismatch);
}

TEST(Bundle, parse_needs_one_root_per_sentence) {
    auto p = fixtures::dogs_chase_cats_parse();
    p.heads[0] = std::nullopt;
    EXPECT_EQ(kind_of([&] { validate_parse(p); }), ErrorKind::AnnotationMismatch);
    p = fixtures::dogs_chase_cats_parse();
    p.heads = {2, std::nullopt, 0}; // 0 -> 2 -> 0 cycle, root is word 1
    EXPECT_EQ(kind_of([&] { validate_parse(p); }), ErrorKind::AnnotationMismatch);
}
