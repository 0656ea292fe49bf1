#pragma once

#include "headroles/role.hpp"

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace headroles {

enum class SpecialFlag { None, Cls, Sep };

struct TokenSequence {
    std::vector<std::string> tokens;
    std::vector<SpecialFlag> special_flags;
    std::vector<int> segment_ids;
    std::vector<std::optional<int>> word_ids; // absent for special tokens

    std::size_t size() const { return tokens.size(); }
    bool is_special(std::size_t pos) const { return special_flags[pos] != SpecialFlag::None; }
};

// Dependency parse over the words of one input sequence. A sequence holding a
// sentence pair carries both sentences here, concatenated, so the arcs form a
// forest with one root per sentence.
struct DependencyParse {
    std::vector<std::string> words;
    std::vector<std::optional<int>> heads; // absent = root
    std::vector<std::string> relations;    // lowercase, subtype kept verbatim
    std::vector<std::size_t> sentence_starts{0}; // first word of each sentence

    std::size_t size() const { return words.size(); }
};

// Attention weights for every (layer, head) of one sequence, stored as
// [layer][head][source][target] float32.
class AttentionTensor {
public:
    AttentionTensor() = default;
    AttentionTensor(std::size_t layers, std::size_t heads, std::size_t tokens);
    AttentionTensor(std::size_t layers, std::size_t heads, std::size_t tokens, std::vector<float> values);

    std::size_t layers() const { return layers_; }
    std::size_t heads() const { return heads_; }
    std::size_t tokens() const { return tokens_; }

    // T x T block for one head.
    std::span<const float> head(std::size_t layer, std::size_t head) const;
    std::span<float> head(std::size_t layer, std::size_t head);
    std::span<const float> row(std::size_t layer, std::size_t head, std::size_t source) const;
    std::span<float> row(std::size_t layer, std::size_t head, std::size_t source);

    const std::vector<float>& values() const { return values_; }

    bool operator==(const AttentionTensor&) const = default;

private:
    std::size_t offset(std::size_t layer, std::size_t head) const;

    std::size_t layers_ = 0;
    std::size_t heads_ = 0;
    std::size_t tokens_ = 0;
    std::vector<float> values_;
};

struct SequenceRecord {
    std::string id;
    TokenSequence tokens;
    DependencyParse parse;
    AttentionTensor attention;
};

struct Bundle {
    std::string model_id;
    std::size_t layers = 0;
    std::size_t heads = 0;
    std::vector<RoleId> roles; // role configuration from the manifest; may be empty
    std::vector<SequenceRecord> sequences;
};

// Per word, the ordered wordpiece positions that make it up.
using WordAlignment = std::vector<std::vector<std::size_t>>;

inline constexpr double kRowSumTolerance = 1e-4;

std::vector<DependencyParse> parse_conllu(std::string_view text);
std::string write_conllu(std::span<const DependencyParse> sentences);

// Concatenate sentence parses into the forest used per sequence, offsetting heads.
DependencyParse merge_sentences(std::span<const DependencyParse> sentences);
std::vector<DependencyParse> split_sentences(const DependencyParse& parse);

WordAlignment align_wordpieces(const TokenSequence& seq, const DependencyParse& parse);

// Structural checks; throw Error with the first offender.
void validate_tokens(const TokenSequence& seq);
void validate_parse(const DependencyParse& parse);
void validate_attention(const AttentionTensor& att, std::string_view sequence_id);
void validate_bundle(const Bundle& bundle, unsigned threads = 1);

Bundle load_bundle(const std::filesystem::path& dir, unsigned threads = 1);
// Writes manifest.json plus one subdirectory per sequence.
void write_bundle(const Bundle& bundle, const std::filesystem::path& dir);

} // namespace headroles
