#include "headroles/synth.hpp"

#include "headroles/error.hpp"
#include "headroles/parallel.hpp"
#include "headroles/sieve.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>

namespace headroles {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::vector<float> plant_row(std::span<const std::size_t> targets, std::size_t T, double mass, double noise,
                             SynthRng& rng) {
    if (targets.empty()) throw std::invalid_argument("plant_row: empty target set");
    if (!(mass >= 0.0 && mass <= 1.0)) throw std::invalid_argument("plant_row: mass outside [0, 1]");
    if (!(noise >= 0.0)) throw std::invalid_argument("plant_row: negative noise");

    std::vector<double> row(T, 0.0);
    const auto inside = targets.size();
    const auto outside = T - inside;
    if (outside == 0) {
        std::fill(row.begin(), row.end(), 1.0 / static_cast<double>(T));
    } else {
        std::fill(row.begin(), row.end(), (1.0 - mass) / static_cast<double>(outside));
        for (auto s : targets) row[s] = mass / static_cast<double>(inside);
    }

    // Draw one factor per position regardless of noise so the stream layout
    // does not depend on the noise level.
    double sum = 0.0;
    for (auto& v : row) {
        v *= std::exp(noise * (2.0 * rng.uniform() - 1.0));
        sum += v;
    }
    std::vector<float> out(T);
    for (std::size_t i = 0; i < T; ++i) out[i] = static_cast<float>(row[i] / sum);
    return out;
}

std::vector<float> plant_row(std::span<const std::size_t> targets, std::size_t T, double mass, double noise,
                             std::uint64_t rng_seed) {
    SynthRng rng(rng_seed);
    return plant_row(targets, T, mass, noise, rng);
}

namespace {

// Clause template: pieces per word and arcs, chosen so that every dependency
// spans at least three wordpieces and stays outside a window-2 neighbourhood.
//   word:    0       1           2           3        4
//   pieces:  1       2           2           1        1
//   arc:     nsubj>4 dobj>4      amod>0      advmod>0 root
constexpr std::array<std::size_t, 5> kClausePieces{1, 2, 2, 1, 1};
constexpr std::size_t kClauseLength = 7;
constexpr std::array<const char*, 5> kClauseWords{"dogs", "mice", "happy", "often", "chase"};
constexpr std::array<int, 5> kClauseHeads{4, 4, 0, 0, -1};
constexpr std::array<const char*, 5> kClauseRelations{"nsubj", "dobj", "amod", "advmod", "root"};

struct WordPlan {
    std::string text;
    std::size_t pieces = 1;
    int head = -1; // sentence-local word index, -1 = root
    std::string relation;
};

std::vector<WordPlan> plan_sentence(std::size_t pieces) {
    std::vector<WordPlan> words;
    const auto clauses = pieces / kClauseLength;
    const auto leftover = pieces % kClauseLength;
    if (clauses == 0) {
        for (std::size_t i = 0; i < pieces; ++i)
            words.push_back({"w" + std::to_string(i), 1, i == 0 ? -1 : 0, i == 0 ? "root" : "dep"});
        return words;
    }
    for (std::size_t c = 0; c < clauses; ++c) {
        const auto base = static_cast<int>(words.size());
        for (std::size_t w = 0; w < 5; ++w) {
            WordPlan plan{kClauseWords[w], kClausePieces[w], -1, kClauseRelations[w]};
            if (kClauseHeads[w] >= 0) plan.head = base + kClauseHeads[w];
            words.push_back(plan);
        }
        if (c > 0) {
            // Chain clause roots: root of clause c depends on root of clause c-1.
            words.back().head = base - 1;
            words.back().relation = "conj";
        }
    }
    if (leftover > 0) words.push_back({"and", leftover, 4, "dep"});
    return words;
}

std::vector<std::string> split_pieces(const std::string& word, std::size_t pieces) {
    if (pieces == 1) return {word};
    std::vector<std::string> out;
    const auto step = std::max<std::size_t>(1, word.size() / pieces);
    for (std::size_t i = 0; i < pieces; ++i) {
        const auto begin = std::min(word.size(), i * step);
        const auto len = i + 1 == pieces ? std::string::npos : step;
        auto piece = word.substr(begin, len);
        if (piece.empty()) piece = "x";
        out.push_back(i == 0 ? piece : "##" + piece);
    }
    return out;
}

} // namespace

TokenSequence synth_tokens(std::size_t T) {
    if (T < 5) throw std::invalid_argument("synthetic sequences need T >= 5");
    const auto content = T - 3;
    const std::array<std::size_t, 2> seg_pieces{content / 2, content - content / 2};

    TokenSequence seq;
    auto push = [&](std::string tok, SpecialFlag flag, int segment, std::optional<int> word) {
        seq.tokens.push_back(std::move(tok));
        seq.special_flags.push_back(flag);
        seq.segment_ids.push_back(segment);
        seq.word_ids.push_back(word);
    };
    push("[CLS]", SpecialFlag::Cls, 0, std::nullopt);
    int word_id = 0;
    for (int segment = 0; segment < 2; ++segment) {
        for (const auto& plan : plan_sentence(seg_pieces[static_cast<std::size_t>(segment)])) {
            for (auto& piece : split_pieces(plan.text, plan.pieces)) push(piece, SpecialFlag::None, segment, word_id);
            ++word_id;
        }
        push("[SEP]", SpecialFlag::Sep, segment, std::nullopt);
    }
    return seq;
}

DependencyParse synth_parse(const TokenSequence& seq) {
    std::array<std::size_t, 2> seg_pieces{0, 0};
    for (std::size_t p = 0; p < seq.size(); ++p)
        if (!seq.is_special(p)) ++seg_pieces[static_cast<std::size_t>(seq.segment_ids[p])];

    std::vector<DependencyParse> sentences;
    for (auto pieces : seg_pieces) {
        if (pieces == 0) continue;
        DependencyParse s;
        for (const auto& plan : plan_sentence(pieces)) {
            s.words.push_back(plan.text);
            s.heads.push_back(plan.head < 0 ? std::nullopt : std::optional<int>(plan.head));
            s.relations.push_back(plan.relation);
        }
        sentences.push_back(std::move(s));
    }
    return merge_sentences(sentences);
}

Bundle generate_bundle(const SynthLayout& layout, std::span<const PlantSpec> plants, std::uint64_t seed,
                       unsigned threads) {
    std::map<HeadCoord, const PlantSpec*> by_head;
    for (const auto& p : plants) {
        if (p.head.layer >= layout.layers || p.head.head >= layout.heads)
            throw std::invalid_argument("plant references a head outside the layout");
        validate(p.role);
        if (p.mass.has_value() == p.bias.has_value())
            throw std::invalid_argument("plant must give exactly one of mass or bias");
        if (!by_head.emplace(p.head, &p).second) throw std::invalid_argument("more than one plant on a head");
    }

    Bundle bundle;
    bundle.model_id = "synthetic";
    bundle.layers = layout.layers;
    bundle.heads = layout.heads;

    const auto tokens = synth_tokens(layout.tokens);
    const auto parse = synth_parse(tokens);
    const auto align = align_wordpieces(tokens, parse);
    const auto T = tokens.size();

    std::map<RoleId, Sieve> sieves;
    for (const auto& p : plants)
        if (!sieves.contains(p.role)) sieves.emplace(p.role, build_sieve(p.role, tokens, parse, align));

    std::vector<std::size_t> everything(T);
    for (std::size_t i = 0; i < T; ++i) everything[i] = i;

    const auto width = std::to_string(layout.sequences).size();
    bundle.sequences.resize(layout.sequences);
    parallel_for(layout.sequences, threads, [&](std::size_t i) {
        auto& rec = bundle.sequences[i];
        auto id = std::to_string(i);
        rec.id = "syn-" + std::string(width - id.size(), '0') + id;
        rec.tokens = tokens;
        rec.parse = parse;
        rec.attention = AttentionTensor(layout.layers, layout.heads, T);

        SynthRng rng(derive_seed(seed, i));
        for (std::size_t l = 0; l < layout.layers; ++l) {
            for (std::size_t h = 0; h < layout.heads; ++h) {
                const auto it = by_head.find({l, h});
                const PlantSpec* plant = it == by_head.end() ? nullptr : it->second;
                for (std::size_t t = 0; t < T; ++t) {
                    std::vector<float> row;
                    const Sieve* sieve = plant ? &sieves.at(plant->role) : nullptr;
                    if (sieve && sieve->eligible(t)) {
                        const auto& targets = sieve->targets[t];
                        const double mass =
                            plant->mass ? *plant->mass
                                        : std::min(1.0, *plant->bias * static_cast<double>(targets.size()) /
                                                            static_cast<double>(T));
                        row = plant_row(targets, T, mass, plant->noise, rng);
                    } else {
                        row = plant_row(everything, T, 1.0, layout.background_noise, rng);
                    }
                    std::copy(row.begin(), row.end(), rec.attention.row(l, h, t).begin());
                }
            }
        }
    });
    return bundle;
}

std::vector<PlantSpec> parse_plants(std::string_view json_text) {
    using json = nlohmann::json;
    std::vector<PlantSpec> plants;
    try {
        const auto doc = json::parse(json_text);
        for (const auto& p : doc) {
            PlantSpec spec;
            spec.head = {p.at("layer").get<std::size_t>(), p.at("head").get<std::size_t>()};
            spec.role = parse_role(p.at("role").get<std::string>());
            if (p.contains("mass")) spec.mass = p.at("mass").get<double>();
            if (p.contains("bias")) spec.bias = p.at("bias").get<double>();
            if (p.contains("noise")) spec.noise = p.at("noise").get<double>();
            plants.push_back(spec);
        }
    } catch (const json::exception& e) {
        throw Error(ErrorKind::MalformedFile, std::string("plant spec: ") + e.what());
    }
    return plants;
}

} // namespace headroles
