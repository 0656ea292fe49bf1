#pragma once

#include "headroles/bundle.hpp"

#include <filesystem>
#include <random>
#include <string>

namespace headroles::fixtures {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::mt19937_64 rng{std::random_device{}()};
        path_ = std::filesystem::temp_directory_path() / ("headroles-" + tag + "-" + std::to_string(rng()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

// [CLS] dog ##s chase cats [SEP] with a three-word parse.
inline TokenSequence dogs_chase_cats_tokens() {
    TokenSequence s;
    s.tokens = {"[CLS]", "dog", "##s", "chase", "cats", "[SEP]"};
    s.special_flags = {SpecialFlag::Cls, SpecialFlag::None, SpecialFlag::None,
                       SpecialFlag::None, SpecialFlag::None, SpecialFlag::Sep};
    s.segment_ids = {0, 0, 0, 0, 0, 0};
    s.word_ids = {std::nullopt, 0, 0, 1, 2, std::nullopt};
    return s;
}

inline DependencyParse dogs_chase_cats_parse() {
    DependencyParse p;
    p.words = {"dogs", "chase", "cats"};
    p.heads = {1, std::nullopt, 1};
    p.relations = {"nsubj", "root", "dobj"};
    return p;
}

// Sequence with no specials, one word per token, trivial chain parse.
inline TokenSequence plain_tokens(std::size_t T) {
    TokenSequence s;
    for (std::size_t i = 0; i < T; ++i) {
        s.tokens.push_back("t" + std::to_string(i));
        s.special_flags.push_back(SpecialFlag::None);
        s.segment_ids.push_back(0);
        s.word_ids.push_back(static_cast<int>(i));
    }
    return s;
}

inline DependencyParse chain_parse(std::size_t words) {
    DependencyParse p;
    for (std::size_t i = 0; i < words; ++i) {
        p.words.push_back("w" + std::to_string(i));
        p.heads.push_back(i == 0 ? std::nullopt : std::optional<int>(static_cast<int>(i) - 1));
        p.relations.push_back(i == 0 ? "root" : "dep");
    }
    return p;
}

inline AttentionTensor uniform_attention(std::size_t L, std::size_t H, std::size_t T) {
    AttentionTensor a(L, H, T);
    for (std::size_t l = 0; l < L; ++l)
        for (std::size_t h = 0; h < H; ++h)
            for (std::size_t t = 0; t < T; ++t)
                for (auto& v : a.row(l, h, t)) v = 1.0f / static_cast<float>(T);
    return a;
}

} // namespace headroles::fixtures
