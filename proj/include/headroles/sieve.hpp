#pragma once

#include "headroles/bundle.hpp"
#include "headroles/role.hpp"

#include <cstddef>
#include <vector>

namespace headroles {

// Per source position, the sorted target positions a head of `role` should
// attend to. An empty set marks the source token as ineligible.
struct Sieve {
    RoleId role;
    std::vector<std::vector<std::size_t>> targets;

    std::size_t size() const { return targets.size(); }
    bool eligible(std::size_t source) const { return !targets[source].empty(); }
    std::size_t eligible_count() const;
};

// Every sieve leaves special (CLS/SEP) source rows empty. Only delimiter
// sieves ever target special positions.
Sieve local_sieve(const TokenSequence& seq, int window, RoleVariant variant = RoleVariant::Symmetric);
Sieve delimiter_sieve(const TokenSequence& seq, RoleVariant variant = RoleVariant::Both);
Sieve block_sieve(const TokenSequence& seq);
// variant Any uses head and children; a label keeps the head when the word's
// own arc carries it plus the children attached by it.
Sieve syntactic_sieve(const TokenSequence& seq, const DependencyParse& parse, const WordAlignment& align,
                      const RoleId& role);

// Word-level relatives used by syntactic_sieve, sorted.
std::vector<std::size_t> related_words(const DependencyParse& parse, std::size_t word, const RoleId& role);

// Dispatches on role. A block role on a single-segment sequence yields an
// all-empty sieve (the sequence is ineligible), unlike block_sieve itself.
Sieve build_sieve(const RoleId& role, const TokenSequence& seq, const DependencyParse& parse,
                  const WordAlignment& align);

} // namespace headroles
