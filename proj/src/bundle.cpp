#include "headroles/bundle.hpp"

#include "headroles/error.hpp"
#include "headroles/parallel.hpp"

#include <nlohmann/json.hpp>

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace headroles {

namespace fs = std::filesystem;
using json = nlohmann::json;

// ---------------------------------------------------------------------------
// AttentionTensor

AttentionTensor::AttentionTensor(std::size_t layers, std::size_t heads, std::size_t tokens)
    : layers_(layers), heads_(heads), tokens_(tokens), values_(layers * heads * tokens * tokens, 0.0f) {}

AttentionTensor::AttentionTensor(std::size_t layers, std::size_t heads, std::size_t tokens,
                                 std::vector<float> values)
    : layers_(layers), heads_(heads), tokens_(tokens), values_(std::move(values)) {
    if (values_.size() != layers * heads * tokens * tokens)
        throw Error(ErrorKind::ShapeMismatch, "attention value count does not match L*H*T*T");
}

std::size_t AttentionTensor::offset(std::size_t layer, std::size_t head) const {
    return (layer * heads_ + head) * tokens_ * tokens_;
}

std::span<const float> AttentionTensor::head(std::size_t layer, std::size_t head) const {
    return std::span<const float>(values_).subspan(offset(layer, head), tokens_ * tokens_);
}

std::span<float> AttentionTensor::head(std::size_t layer, std::size_t head) {
    return std::span<float>(values_).subspan(offset(layer, head), tokens_ * tokens_);
}

std::span<const float> AttentionTensor::row(std::size_t layer, std::size_t head_index, std::size_t source) const {
    return this->head(layer, head_index).subspan(source * tokens_, tokens_);
}

std::span<float> AttentionTensor::row(std::size_t layer, std::size_t head_index, std::size_t source) {
    return this->head(layer, head_index).subspan(source * tokens_, tokens_);
}

// ---------------------------------------------------------------------------
// CoNLL-U

namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
    std::vector<std::string_view> cols;
    for (;;) {
        auto tab = line.find('\t');
        cols.push_back(line.substr(0, tab));
        if (tab == std::string_view::npos) break;
        line.remove_prefix(tab + 1);
    }
    return cols;
}

bool parse_int(std::string_view text, int& out) {
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
    return ec == std::errc{} && ptr == text.data() + text.size();
}

std::string lowercase(std::string_view text) {
    std::string out(text);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

void finish_sentence(DependencyParse& sentence, std::vector<std::size_t>& head_lines,
                     std::vector<DependencyParse>& out) {
    if (sentence.words.empty()) return;
    const auto n = static_cast<int>(sentence.words.size());
    for (std::size_t w = 0; w < sentence.heads.size(); ++w) {
        if (sentence.heads[w] && *sentence.heads[w] >= n)
            throw Error(ErrorKind::HeadOutOfRange,
                        "line " + std::to_string(head_lines[w]) + ": head " +
                            std::to_string(*sentence.heads[w] + 1) + " exceeds sentence length " +
                            std::to_string(n));
    }
    out.push_back(std::move(sentence));
    sentence = DependencyParse{};
    head_lines.clear();
}

} // namespace

std::vector<DependencyParse> parse_conllu(std::string_view text) {
    std::vector<DependencyParse> out;
    DependencyParse sentence;
    std::vector<std::size_t> head_lines;
    std::size_t line_no = 0;

    while (!text.empty()) {
        auto nl = text.find('\n');
        auto line = text.substr(0, nl);
        text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

        if (line.empty()) {
            finish_sentence(sentence, head_lines, out);
            continue;
        }
        if (line.front() == '#') continue;

        auto cols = split_tabs(line);
        if (cols.size() != 10)
            throw Error(ErrorKind::MalformedLine, "line " + std::to_string(line_no) + ": expected 10 columns, got " +
                                                      std::to_string(cols.size()));
        // Multiword token ranges and empty nodes are not syntactic words.
        if (cols[0].find_first_of("-.") != std::string_view::npos) continue;

        int id = 0;
        if (!parse_int(cols[0], id) || id != static_cast<int>(sentence.words.size()) + 1)
            throw Error(ErrorKind::MalformedLine, "line " + std::to_string(line_no) + ": bad word id '" +
                                                      std::string(cols[0]) + "'");
        int head = 0;
        if (!parse_int(cols[6], head))
            throw Error(ErrorKind::NonIntegerHead,
                        "line " + std::to_string(line_no) + ": head '" + std::string(cols[6]) + "'");
        if (head < 0)
            throw Error(ErrorKind::HeadOutOfRange, "line " + std::to_string(line_no) + ": negative head");

        sentence.words.emplace_back(cols[1]);
        sentence.heads.push_back(head == 0 ? std::nullopt : std::optional<int>(head - 1));
        sentence.relations.push_back(lowercase(cols[7]));
        head_lines.push_back(line_no);
    }
    finish_sentence(sentence, head_lines, out);
    return out;
}

std::string write_conllu(std::span<const DependencyParse> sentences) {
    std::ostringstream os;
    for (const auto& s : sentences) {
        for (std::size_t w = 0; w < s.words.size(); ++w) {
            os << (w + 1) << '\t' << s.words[w] << "\t_\t_\t_\t_\t" << (s.heads[w] ? *s.heads[w] + 1 : 0) << '\t'
               << s.relations[w] << "\t_\t_\n";
        }
        os << '\n';
    }
    return os.str();
}

DependencyParse merge_sentences(std::span<const DependencyParse> sentences) {
    DependencyParse merged;
    merged.sentence_starts.clear();
    for (const auto& s : sentences) {
        const auto base = static_cast<int>(merged.words.size());
        merged.sentence_starts.push_back(merged.words.size());
        for (std::size_t w = 0; w < s.words.size(); ++w) {
            merged.words.push_back(s.words[w]);
            merged.heads.push_back(s.heads[w] ? std::optional<int>(*s.heads[w] + base) : std::nullopt);
            merged.relations.push_back(s.relations[w]);
        }
    }
    if (merged.sentence_starts.empty()) merged.sentence_starts.push_back(0);
    return merged;
}

std::vector<DependencyParse> split_sentences(const DependencyParse& parse) {
    std::vector<DependencyParse> out;
    for (std::size_t s = 0; s < parse.sentence_starts.size(); ++s) {
        const auto begin = parse.sentence_starts[s];
        const auto end = s + 1 < parse.sentence_starts.size() ? parse.sentence_starts[s + 1] : parse.words.size();
        if (begin >= end) continue;
        DependencyParse sentence;
        for (auto w = begin; w < end; ++w) {
            sentence.words.push_back(parse.words[w]);
            sentence.heads.push_back(parse.heads[w] ? std::optional<int>(*parse.heads[w] - static_cast<int>(begin))
                                                    : std::nullopt);
            sentence.relations.push_back(parse.relations[w]);
        }
        out.push_back(std::move(sentence));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Validation

void validate_tokens(const TokenSequence& seq) {
    const auto n = seq.tokens.size();
    if (n == 0) throw Error(ErrorKind::AnnotationMismatch, "empty token sequence");
    if (seq.special_flags.size() != n || seq.segment_ids.size() != n || seq.word_ids.size() != n)
        throw Error(ErrorKind::AnnotationMismatch, "token annotation arrays differ in length");
    for (std::size_t p = 0; p < n; ++p) {
        if (seq.special_flags[p] == SpecialFlag::Cls && p != 0)
            throw Error(ErrorKind::AnnotationMismatch, "CLS token at position " + std::to_string(p));
        if (seq.segment_ids[p] != 0 && seq.segment_ids[p] != 1)
            throw Error(ErrorKind::AnnotationMismatch, "segment id out of {0,1} at position " + std::to_string(p));
        if (p > 0 && seq.segment_ids[p] < seq.segment_ids[p - 1])
            throw Error(ErrorKind::AnnotationMismatch, "segment ids decrease at position " + std::to_string(p));
        if (seq.is_special(p) && seq.word_ids[p])
            throw Error(ErrorKind::AnnotationMismatch, "special token with word id at position " + std::to_string(p));
        if (seq.word_ids[p] && *seq.word_ids[p] < 0)
            throw Error(ErrorKind::AnnotationMismatch, "negative word id at position " + std::to_string(p));
    }
    int last = -1;
    for (std::size_t p = 0; p < n; ++p) {
        if (!seq.word_ids[p]) continue;
        if (*seq.word_ids[p] < last)
            throw Error(ErrorKind::AnnotationMismatch, "word ids decrease at position " + std::to_string(p));
        last = *seq.word_ids[p];
    }
}

void validate_parse(const DependencyParse& parse) {
    const auto n = parse.words.size();
    if (parse.heads.size() != n || parse.relations.size() != n)
        throw Error(ErrorKind::AnnotationMismatch, "parse arrays differ in length");
    if (parse.sentence_starts.empty() || parse.sentence_starts.front() != 0)
        throw Error(ErrorKind::AnnotationMismatch, "sentence starts must begin at word 0");
    for (std::size_t s = 1; s < parse.sentence_starts.size(); ++s)
        if (parse.sentence_starts[s] <= parse.sentence_starts[s - 1] || parse.sentence_starts[s] >= n)
            throw Error(ErrorKind::AnnotationMismatch, "sentence starts not strictly increasing");

    for (std::size_t s = 0; s < parse.sentence_starts.size(); ++s) {
        const auto begin = parse.sentence_starts[s];
        const auto end = s + 1 < parse.sentence_starts.size() ? parse.sentence_starts[s + 1] : n;
        if (begin == end) continue;
        std::size_t roots = 0;
        for (auto w = begin; w < end; ++w) {
            if (!parse.heads[w]) {
                ++roots;
                continue;
            }
            const auto h = *parse.heads[w];
            if (h < static_cast<int>(begin) || h >= static_cast<int>(end) || h == static_cast<int>(w))
                throw Error(ErrorKind::HeadOutOfRange, "word " + std::to_string(w) + " has head " + std::to_string(h) +
                                                           " outside its sentence");
        }
        if (roots != 1)
            throw Error(ErrorKind::AnnotationMismatch,
                        "sentence " + std::to_string(s) + " has " + std::to_string(roots) + " roots");
        // Every word must reach the root within (end - begin) steps.
        for (auto w = begin; w < end; ++w) {
            auto cur = static_cast<int>(w);
            std::size_t steps = 0;
            while (parse.heads[cur] && steps <= end - begin) {
                cur = *parse.heads[cur];
                ++steps;
            }
            if (parse.heads[cur])
                throw Error(ErrorKind::AnnotationMismatch, "cycle through word " + std::to_string(w));
        }
    }
}

void validate_attention(const AttentionTensor& att, std::string_view sequence_id) {
    const auto T = att.tokens();
    double worst = -1.0;
    std::size_t wl = 0, wh = 0, wt = 0;
    for (std::size_t l = 0; l < att.layers(); ++l) {
        for (std::size_t h = 0; h < att.heads(); ++h) {
            for (std::size_t t = 0; t < T; ++t) {
                double sum = 0.0;
                for (float v : att.row(l, h, t)) {
                    if (!std::isfinite(v) || v < 0.0f)
                        throw Error(ErrorKind::RowSumViolation,
                                    "sequence " + std::string(sequence_id) + " layer " + std::to_string(l) + " head " +
                                        std::to_string(h) + " token " + std::to_string(t) +
                                        ": negative or non-finite weight");
                    sum += v;
                }
                const double dev = std::abs(sum - 1.0);
                if (dev > worst) {
                    worst = dev;
                    wl = l;
                    wh = h;
                    wt = t;
                }
            }
        }
    }
    if (worst > kRowSumTolerance) {
        std::ostringstream os;
        os << "sequence " << sequence_id << " layer " << wl << " head " << wh << " token " << wt
           << ": row sum deviates from 1 by " << worst;
        throw Error(ErrorKind::RowSumViolation, os.str());
    }
}

namespace {

void validate_record(const Bundle& bundle, const SequenceRecord& rec) {
    validate_tokens(rec.tokens);
    validate_parse(rec.parse);
    for (std::size_t p = 0; p < rec.tokens.size(); ++p) {
        if (rec.tokens.word_ids[p] && *rec.tokens.word_ids[p] >= static_cast<int>(rec.parse.size()))
            throw Error(ErrorKind::AnnotationMismatch, "sequence " + rec.id + ": token " + std::to_string(p) +
                                                           " references word " +
                                                           std::to_string(*rec.tokens.word_ids[p]) +
                                                           " but the parse has " + std::to_string(rec.parse.size()));
    }
    align_wordpieces(rec.tokens, rec.parse);
    const auto& att = rec.attention;
    if (att.layers() != bundle.layers || att.heads() != bundle.heads || att.tokens() != rec.tokens.size())
        throw Error(ErrorKind::ShapeMismatch, "sequence " + rec.id + ": tensor shape does not match manifest");
    validate_attention(att, rec.id);
}

} // namespace

void validate_bundle(const Bundle& bundle, unsigned threads) {
    for (const auto& role : bundle.roles) validate(role);
    parallel_for(bundle.sequences.size(), threads,
                 [&](std::size_t i) { validate_record(bundle, bundle.sequences[i]); });
}

// ---------------------------------------------------------------------------
// Alignment

WordAlignment align_wordpieces(const TokenSequence& seq, const DependencyParse& parse) {
    int max_word = -1;
    for (std::size_t p = 0; p < seq.size(); ++p) {
        if (seq.is_special(p)) continue;
        if (!seq.word_ids[p])
            throw Error(ErrorKind::GapInAlignment, "non-special token " + std::to_string(p) + " has no word id");
        max_word = std::max(max_word, *seq.word_ids[p]);
    }
    if (static_cast<std::size_t>(max_word + 1) != parse.size())
        throw Error(ErrorKind::WordCountMismatch, "tokens cover " + std::to_string(max_word + 1) +
                                                      " words, parse has " + std::to_string(parse.size()));
    WordAlignment align(parse.size());
    for (std::size_t p = 0; p < seq.size(); ++p)
        if (!seq.is_special(p)) align[static_cast<std::size_t>(*seq.word_ids[p])].push_back(p);
    for (std::size_t w = 0; w < align.size(); ++w)
        if (align[w].empty()) throw Error(ErrorKind::GapInAlignment, "word " + std::to_string(w) + " has no wordpieces");
    return align;
}

// ---------------------------------------------------------------------------
// Disk format

namespace {

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::MissingFile, path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

json read_json(const fs::path& path) {
    try {
        return json::parse(read_text(path));
    } catch (const json::exception& e) {
        throw Error(ErrorKind::MalformedFile, path.string() + ": " + e.what());
    }
}

void write_text(const fs::path& path, std::string_view text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::MissingFile, "cannot write " + path.string());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

SpecialFlag parse_flag(const std::string& s) {
    if (s == "CLS") return SpecialFlag::Cls;
    if (s == "SEP") return SpecialFlag::Sep;
    if (s == "NONE") return SpecialFlag::None;
    throw Error(ErrorKind::MalformedFile, "unknown special flag '" + s + "'");
}

const char* flag_name(SpecialFlag f) {
    switch (f) {
        case SpecialFlag::Cls: return "CLS";
        case SpecialFlag::Sep: return "SEP";
        case SpecialFlag::None: return "NONE";
    }
    return "NONE";
}

TokenSequence tokens_from_json(const json& j) {
    TokenSequence seq;
    seq.tokens = j.at("tokens").get<std::vector<std::string>>();
    for (const auto& f : j.at("special_flags")) seq.special_flags.push_back(parse_flag(f.get<std::string>()));
    seq.segment_ids = j.at("segment_ids").get<std::vector<int>>();
    for (const auto& w : j.at("word_ids"))
        seq.word_ids.push_back(w.is_null() ? std::nullopt : std::optional<int>(w.get<int>()));
    return seq;
}

json tokens_to_json(const TokenSequence& seq) {
    json flags = json::array(), words = json::array();
    for (auto f : seq.special_flags) flags.push_back(flag_name(f));
    for (const auto& w : seq.word_ids) words.push_back(w ? json(*w) : json(nullptr));
    return json{{"tokens", seq.tokens}, {"special_flags", flags}, {"segment_ids", seq.segment_ids}, {"word_ids", words}};
}

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

std::vector<float> read_floats(const fs::path& path, std::size_t expected_count) {
    std::error_code ec;
    const auto bytes = fs::file_size(path, ec);
    if (ec) throw Error(ErrorKind::MissingFile, path.string());
    if (bytes != expected_count * 4)
        throw Error(ErrorKind::ShapeMismatch, path.string() + ": " + std::to_string(bytes) + " bytes, expected " +
                                                  std::to_string(expected_count * 4));
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::MissingFile, path.string());
    std::vector<float> values(expected_count);
    in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(bytes));
    if constexpr (std::endian::native == std::endian::big) {
        for (auto& v : values) {
            auto u = std::bit_cast<std::uint32_t>(v);
            u = (u >> 24) | ((u >> 8) & 0xff00u) | ((u << 8) & 0xff0000u) | (u << 24);
            v = std::bit_cast<float>(u);
        }
    }
    return values;
}

void write_floats(const fs::path& path, const std::vector<float>& values) {
    std::string buf(values.size() * 4, '\0');
    for (std::size_t i = 0; i < values.size(); ++i) {
        const auto u = std::bit_cast<std::uint32_t>(values[i]);
        for (int b = 0; b < 4; ++b) buf[i * 4 + b] = static_cast<char>((u >> (8 * b)) & 0xffu);
    }
    write_text(path, buf);
}

} // namespace

Bundle load_bundle(const fs::path& dir, unsigned threads) {
    const auto manifest_path = dir / "manifest.json";
    if (!fs::exists(manifest_path)) throw Error(ErrorKind::MissingFile, manifest_path.string());
    const json manifest = read_json(manifest_path);

    Bundle bundle;
    json entries;
    try {
        bundle.model_id = manifest.at("model_id").get<std::string>();
        bundle.layers = manifest.at("L").get<std::size_t>();
        bundle.heads = manifest.at("H").get<std::size_t>();
        if (manifest.contains("roles")) {
            for (const auto& r : manifest.at("roles")) {
                if (r.is_string()) {
                    bundle.roles.push_back(parse_role(r.get<std::string>()));
                    continue;
                }
                auto role = parse_role(r.at("coarse").get<std::string>());
                if (r.contains("variant")) {
                    const auto v = r.at("variant").get<std::string>();
                    if (role.coarse == CoarseRole::Local)
                        role = parse_role(v == "symmetric" ? "local" : "local-" + v);
                    else if (role.coarse == CoarseRole::Syntactic)
                        role = v == "any" ? RoleId::syntactic() : RoleId::relation(v);
                    else if (role.coarse == CoarseRole::Delimiter)
                        role = parse_role(v == "both" ? "delimiter" : v);
                }
                if (r.contains("window")) role.window = r.at("window").get<int>();
                validate(role);
                bundle.roles.push_back(role);
            }
        }
        entries = manifest.at("sequences");
    } catch (const json::exception& e) {
        throw Error(ErrorKind::MalformedFile, manifest_path.string() + ": " + e.what());
    }

    bundle.sequences.resize(entries.size());
    parallel_for(entries.size(), threads, [&](std::size_t i) {
        const auto& e = entries[i];
        auto& rec = bundle.sequences[i];
        std::size_t T = 0;
        fs::path token_file, parse_file, tensor_file;
        try {
            rec.id = e.at("id").get<std::string>();
            token_file = dir / e.at("tokens").get<std::string>();
            parse_file = dir / e.at("parse").get<std::string>();
            tensor_file = dir / e.at("tensor").get<std::string>();
            T = e.at("T").get<std::size_t>();
        } catch (const json::exception& ex) {
            throw Error(ErrorKind::MalformedFile, "manifest sequence entry " + std::to_string(i) + ": " + ex.what());
        }
        try {
            rec.tokens = tokens_from_json(read_json(token_file));
        } catch (const json::exception& ex) {
            throw Error(ErrorKind::MalformedFile, token_file.string() + ": " + ex.what());
        }
        if (rec.tokens.size() != T)
            throw Error(ErrorKind::ShapeMismatch, "sequence " + rec.id + ": manifest T=" + std::to_string(T) +
                                                      " but tokens.json has " + std::to_string(rec.tokens.size()));
        rec.parse = merge_sentences(parse_conllu(read_text(parse_file)));
        rec.attention = AttentionTensor(bundle.layers, bundle.heads, T,
                                        read_floats(tensor_file, bundle.layers * bundle.heads * T * T));
        validate_record(bundle, rec);
    });
    return bundle;
}

void write_bundle(const Bundle& bundle, const fs::path& dir) {
    fs::create_directories(dir);
    json entries = json::array();
    for (std::size_t i = 0; i < bundle.sequences.size(); ++i) {
        const auto& rec = bundle.sequences[i];
        const std::string sub = "seq_" + std::to_string(i);
        fs::create_directories(dir / sub);
        write_text(dir / sub / "tokens.json", tokens_to_json(rec.tokens).dump(1) + "\n");
        write_text(dir / sub / "parse.conllu", write_conllu(split_sentences(rec.parse)));
        write_floats(dir / sub / "attn.bin", rec.attention.values());
        entries.push_back(json{{"id", rec.id},
                               {"tokens", sub + "/tokens.json"},
                               {"parse", sub + "/parse.conllu"},
                               {"tensor", sub + "/attn.bin"},
                               {"T", rec.tokens.size()}});
    }
    json roles = json::array();
    for (const auto& r : bundle.roles) roles.push_back(to_string(r));
    json manifest{{"model_id", bundle.model_id}, {"L", bundle.layers}, {"H", bundle.heads}, {"sequences", entries}};
    if (!bundle.roles.empty()) manifest["roles"] = roles;
    write_text(dir / "manifest.json", manifest.dump(1) + "\n");
}

} // namespace headroles
