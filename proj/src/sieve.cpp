#include "headroles/sieve.hpp"

#include "headroles/error.hpp"

#include <algorithm>
#include <stdexcept>

namespace headroles {

std::size_t Sieve::eligible_count() const {
    return static_cast<std::size_t>(
        std::count_if(targets.begin(), targets.end(), [](const auto& t) { return !t.empty(); }));
}

Sieve local_sieve(const TokenSequence& seq, int window, RoleVariant variant) {
    if (window < 1) throw std::invalid_argument("local_sieve: window must be >= 1");
    const auto T = static_cast<long>(seq.size());
    Sieve sieve{RoleId::local(variant, window), std::vector<std::vector<std::size_t>>(seq.size())};
    for (long t = 0; t < T; ++t) {
        if (seq.is_special(static_cast<std::size_t>(t))) continue;
        long lo = t - window, hi = t + window;
        if (variant == RoleVariant::Prev) hi = t - 1;
        if (variant == RoleVariant::Next) lo = t + 1;
        lo = std::max(lo, 0L);
        hi = std::min(hi, T - 1);
        auto& out = sieve.targets[static_cast<std::size_t>(t)];
        for (long p = lo; p <= hi; ++p)
            if (!seq.is_special(static_cast<std::size_t>(p))) out.push_back(static_cast<std::size_t>(p));
    }
    return sieve;
}

Sieve delimiter_sieve(const TokenSequence& seq, RoleVariant variant) {
    std::vector<std::size_t> delims;
    for (std::size_t p = 0; p < seq.size(); ++p) {
        const auto f = seq.special_flags[p];
        if ((f == SpecialFlag::Cls && variant != RoleVariant::Sep) ||
            (f == SpecialFlag::Sep && variant != RoleVariant::Cls))
            delims.push_back(p);
    }
    Sieve sieve{RoleId::delimiter(variant), std::vector<std::vector<std::size_t>>(seq.size())};
    for (std::size_t t = 0; t < seq.size(); ++t)
        if (!seq.is_special(t)) sieve.targets[t] = delims;
    return sieve;
}

Sieve block_sieve(const TokenSequence& seq) {
    Sieve sieve{RoleId::block(), std::vector<std::vector<std::size_t>>(seq.size())};
    std::vector<std::size_t> members[2];
    for (std::size_t p = 0; p < seq.size(); ++p)
        if (!seq.is_special(p)) members[seq.segment_ids[p]].push_back(p);
    for (std::size_t t = 0; t < seq.size(); ++t)
        if (!seq.is_special(t)) sieve.targets[t] = members[seq.segment_ids[t]];
    return sieve;
}

std::vector<std::size_t> related_words(const DependencyParse& parse, std::size_t word, const RoleId& role) {
    const bool any = role.variant == RoleVariant::Any;
    std::vector<std::size_t> out;
    if (parse.heads[word] && (any || bare_relation(parse.relations[word]) == role.label))
        out.push_back(static_cast<std::size_t>(*parse.heads[word]));
    for (std::size_t c = 0; c < parse.size(); ++c) {
        if (parse.heads[c] && static_cast<std::size_t>(*parse.heads[c]) == word &&
            (any || bare_relation(parse.relations[c]) == role.label))
            out.push_back(c);
    }
    std::sort(out.begin(), out.end());
    return out;
}

Sieve syntactic_sieve(const TokenSequence& seq, const DependencyParse& parse, const WordAlignment& align,
                      const RoleId& role) {
    if (role.coarse != CoarseRole::Syntactic) throw std::invalid_argument("syntactic_sieve: not a syntactic role");
    Sieve sieve{role, std::vector<std::vector<std::size_t>>(seq.size())};
    for (std::size_t w = 0; w < align.size(); ++w) {
        std::vector<std::size_t> pieces;
        for (auto r : related_words(parse, w, role))
            pieces.insert(pieces.end(), align[r].begin(), align[r].end());
        std::sort(pieces.begin(), pieces.end());
        for (auto p : align[w]) sieve.targets[p] = pieces;
    }
    return sieve;
}

Sieve build_sieve(const RoleId& role, const TokenSequence& seq, const DependencyParse& parse,
                  const WordAlignment& align) {
    validate(role);
    switch (role.coarse) {
        case CoarseRole::Local: {
            auto s = local_sieve(seq, role.window, role.variant);
            s.role = role;
            return s;
        }
        case CoarseRole::Syntactic: return syntactic_sieve(seq, parse, align, role);
        case CoarseRole::Block: {
            // Block attention needs a second segment to be distinguishable from
            // attending everywhere; single-segment sequences are ineligible.
            const bool two = std::any_of(seq.segment_ids.begin(), seq.segment_ids.end(), [](int s) { return s != 0; });
            if (!two) return Sieve{role, std::vector<std::vector<std::size_t>>(seq.size())};
            return block_sieve(seq);
        }
        case CoarseRole::Delimiter: return delimiter_sieve(seq, role.variant);
    }
    throw Error(ErrorKind::UnknownRole, to_string(role));
}

} // namespace headroles
