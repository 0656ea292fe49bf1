#pragma once

#include <compare>
#include <string>
#include <string_view>
#include <vector>

namespace headroles {

enum class CoarseRole { Local, Syntactic, Block, Delimiter };

// Refinement of a coarse role. Each coarse role admits a subset:
//   Local     -> Symmetric, Prev, Next
//   Syntactic -> Any, Label (label carries the dependency relation)
//   Block     -> None
//   Delimiter -> Both, Cls, Sep
enum class RoleVariant { None, Symmetric, Prev, Next, Any, Label, Both, Cls, Sep };

inline constexpr int kDefaultWindow = 2;

struct RoleId {
    CoarseRole coarse = CoarseRole::Local;
    RoleVariant variant = RoleVariant::Symmetric;
    std::string label;          // only for Syntactic/Label, bare lowercase relation
    int window = kDefaultWindow; // only meaningful for Local

    auto operator<=>(const RoleId&) const = default;

    static RoleId local(RoleVariant v = RoleVariant::Symmetric, int window = kDefaultWindow);
    static RoleId syntactic();
    static RoleId relation(std::string_view label);
    static RoleId block();
    static RoleId delimiter(RoleVariant v = RoleVariant::Both);

    bool is_coarse() const;
};

// Throws Error(UnknownRole) on invalid combinations.
void validate(const RoleId& role);

// Canonical names: local, local-prev, local-next, syntactic, nsubj, dobj, amod,
// advmod, syntactic:<label>, block, delimiter, cls, sep. Local roles with a
// non-default window carry an "@<window>" suffix, e.g. "local-prev@3".
std::string to_string(const RoleId& role);
RoleId parse_role(std::string_view name);

// Comma-separated list of role names.
std::vector<RoleId> parse_role_list(std::string_view names);

// Strip a ":subtype" suffix and lowercase, e.g. "NSUBJ:pass" -> "nsubj".
std::string bare_relation(std::string_view label);

std::vector<RoleId> coarse_roles(int window = kDefaultWindow);
// The nine sub-roles drawn as subcells of a mosaic cell, in subcell order.
std::vector<RoleId> fine_roles(int window = kDefaultWindow);
// Four coarse roles followed by the nine fine-grained ones.
std::vector<RoleId> default_roles(int window = kDefaultWindow);

} // namespace headroles
