#include "headroles/role.hpp"

#include "headroles/error.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>

namespace headroles {

RoleId RoleId::local(RoleVariant v, int window) {
    return RoleId{CoarseRole::Local, v, {}, window};
}

RoleId RoleId::syntactic() {
    return RoleId{CoarseRole::Syntactic, RoleVariant::Any, {}, kDefaultWindow};
}

RoleId RoleId::relation(std::string_view label) {
    return RoleId{CoarseRole::Syntactic, RoleVariant::Label, bare_relation(label), kDefaultWindow};
}

RoleId RoleId::block() {
    return RoleId{CoarseRole::Block, RoleVariant::None, {}, kDefaultWindow};
}

RoleId RoleId::delimiter(RoleVariant v) {
    return RoleId{CoarseRole::Delimiter, v, {}, kDefaultWindow};
}

bool RoleId::is_coarse() const {
    switch (coarse) {
        case CoarseRole::Local: return variant == RoleVariant::Symmetric;
        case CoarseRole::Syntactic: return variant == RoleVariant::Any;
        case CoarseRole::Block: return true;
        case CoarseRole::Delimiter: return variant == RoleVariant::Both;
    }
    return false;
}

void validate(const RoleId& role) {
    bool ok = false;
    switch (role.coarse) {
        case CoarseRole::Local:
            ok = (role.variant == RoleVariant::Symmetric || role.variant == RoleVariant::Prev ||
                  role.variant == RoleVariant::Next) &&
                 role.window >= 1 && role.label.empty();
            break;
        case CoarseRole::Syntactic:
            ok = (role.variant == RoleVariant::Any && role.label.empty()) ||
                 (role.variant == RoleVariant::Label && !role.label.empty());
            break;
        case CoarseRole::Block:
            ok = role.variant == RoleVariant::None && role.label.empty();
            break;
        case CoarseRole::Delimiter:
            ok = (role.variant == RoleVariant::Both || role.variant == RoleVariant::Cls ||
                  role.variant == RoleVariant::Sep) &&
                 role.label.empty();
            break;
    }
    if (!ok) throw Error(ErrorKind::UnknownRole, "invalid role variant combination");
}

std::string to_string(const RoleId& role) {
    std::string name;
    switch (role.coarse) {
        case CoarseRole::Local:
            name = role.variant == RoleVariant::Prev   ? "local-prev"
                   : role.variant == RoleVariant::Next ? "local-next"
                                                       : "local";
            if (role.window != kDefaultWindow) name += "@" + std::to_string(role.window);
            return name;
        case CoarseRole::Syntactic:
            if (role.variant == RoleVariant::Any) return "syntactic";
            if (role.label == "nsubj" || role.label == "dobj" || role.label == "amod" ||
                role.label == "advmod")
                return role.label;
            return "syntactic:" + role.label;
        case CoarseRole::Block: return "block";
        case CoarseRole::Delimiter:
            return role.variant == RoleVariant::Cls   ? "cls"
                   : role.variant == RoleVariant::Sep ? "sep"
                                                      : "delimiter";
    }
    return "unknown";
}

std::string bare_relation(std::string_view label) {
    auto colon = label.find(':');
    std::string out(label.substr(0, colon));
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

RoleId parse_role(std::string_view name) {
    std::string_view base = name;
    int window = kDefaultWindow;
    if (auto at = name.find('@'); at != std::string_view::npos) {
        base = name.substr(0, at);
        auto digits = name.substr(at + 1);
        auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), window);
        if (ec != std::errc{} || ptr != digits.data() + digits.size() || window < 1)
            throw Error(ErrorKind::UnknownRole, "bad window in role '" + std::string(name) + "'");
        if (!base.starts_with("local"))
            throw Error(ErrorKind::UnknownRole, "window suffix on non-local role '" + std::string(name) + "'");
    }

    if (base == "local") return RoleId::local(RoleVariant::Symmetric, window);
    if (base == "local-prev") return RoleId::local(RoleVariant::Prev, window);
    if (base == "local-next") return RoleId::local(RoleVariant::Next, window);
    if (base == "syntactic") return RoleId::syntactic();
    if (base == "nsubj" || base == "dobj" || base == "amod" || base == "advmod")
        return RoleId::relation(base);
    if (base.starts_with("syntactic:") && base.size() > 10) return RoleId::relation(base.substr(10));
    if (base == "block") return RoleId::block();
    if (base == "delimiter") return RoleId::delimiter(RoleVariant::Both);
    if (base == "cls") return RoleId::delimiter(RoleVariant::Cls);
    if (base == "sep") return RoleId::delimiter(RoleVariant::Sep);
    throw Error(ErrorKind::UnknownRole, "unknown role '" + std::string(name) + "'");
}

std::vector<RoleId> parse_role_list(std::string_view names) {
    std::vector<RoleId> roles;
    while (!names.empty()) {
        auto comma = names.find(',');
        auto item = names.substr(0, comma);
        while (!item.empty() && std::isspace(static_cast<unsigned char>(item.front()))) item.remove_prefix(1);
        while (!item.empty() && std::isspace(static_cast<unsigned char>(item.back()))) item.remove_suffix(1);
        if (!item.empty()) {
            auto role = parse_role(item);
            if (std::find(roles.begin(), roles.end(), role) == roles.end()) roles.push_back(role);
        }
        if (comma == std::string_view::npos) break;
        names.remove_prefix(comma + 1);
    }
    return roles;
}

std::vector<RoleId> coarse_roles(int window) {
    return {RoleId::local(RoleVariant::Symmetric, window), RoleId::syntactic(), RoleId::block(),
            RoleId::delimiter()};
}

std::vector<RoleId> fine_roles(int window) {
    return {RoleId::delimiter(RoleVariant::Cls),
            RoleId::delimiter(RoleVariant::Sep),
            RoleId::block(),
            RoleId::local(RoleVariant::Prev, window),
            RoleId::local(RoleVariant::Next, window),
            RoleId::relation("nsubj"),
            RoleId::relation("dobj"),
            RoleId::relation("amod"),
            RoleId::relation("advmod")};
}

std::vector<RoleId> default_roles(int window) {
    auto roles = coarse_roles(window);
    for (auto& r : fine_roles(window))
        if (std::find(roles.begin(), roles.end(), r) == roles.end()) roles.push_back(r);
    return roles;
}

} // namespace headroles
