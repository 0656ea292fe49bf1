#include "headroles/report.hpp"

#include "headroles/error.hpp"
#include "headroles/stats.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace headroles {

using ojson = nlohmann::ordered_json;

std::string format_number(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    return fmt::format("{}", x);
}

namespace {

// JSON has no infinities; an infinite z (zero-variance sample) is written as null.
ojson number(double x) { return std::isfinite(x) ? ojson(x) : ojson(nullptr); }

std::string xml_escape(std::string_view text) {
    std::string out;
    for (char c : text) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

} // namespace

// ---------------------------------------------------------------------------
// Mosaic

std::string emit_mosaic_svg(const RoleAssignmentMatrix& m, std::span<const RoleId> roles, const MosaicStyle& style) {
    if (roles.size() != 9)
        throw Error(ErrorKind::RoleSetMismatch, "mosaic needs exactly 9 roles, got " + std::to_string(roles.size()));
    if (style.role_colors.size() < roles.size())
        throw Error(ErrorKind::RoleSetMismatch, "palette has fewer colors than roles");
    if (style.cell_px < 2 * style.cell_padding_px + 3 * style.subcell_px + 2 * style.subcell_gap_px)
        throw std::invalid_argument("mosaic cell too small for its subcells");

    const int label_w = 64;
    const int top = 28;
    const int pitch = style.cell_px + style.cell_gap_px;
    const int grid_w = static_cast<int>(m.heads) * pitch;
    const int grid_h = static_cast<int>(m.layers) * pitch;
    const int legend_rows = static_cast<int>((roles.size() + 2) / 3);
    const int legend_top = top + grid_h + 12;
    const int width = label_w + std::max(grid_w, 3 * 130) + 8;
    const int height = legend_top + legend_rows * 18 + 8;

    std::ostringstream os;
    os << R"(<?xml version="1.0" encoding="UTF-8"?>)" << '\n';
    os << R"(<svg xmlns="http://www.w3.org/2000/svg" width=")" << width << R"(" height=")" << height
       << R"(" viewBox="0 0 )" << width << ' ' << height << R"(">)" << '\n';
    os << R"(<rect x="0" y="0" width=")" << width << R"(" height=")" << height << R"(" fill="#ffffff"/>)" << '\n';
    os << R"(<text x="4" y="18" font-family="sans-serif" font-size="12">tau=)" << format_number(m.tau)
       << " alpha=" << format_number(m.alpha) << "</text>\n";

    for (std::size_t l = 0; l < m.layers; ++l) {
        const int y = top + static_cast<int>(l) * pitch;
        os << R"(<g id="layer-)" << l << R"(">)" << '\n';
        os << R"(<text x="4" y=")" << y + style.cell_px / 2 + 4
           << R"(" font-family="sans-serif" font-size="11">layer )" << l << "</text>\n";
        const auto order = sort_heads_by_roles(m, l, roles);
        for (std::size_t slot = 0; slot < order.size(); ++slot) {
            const auto h = order[slot];
            const auto& cell = m.cell(l, h);
            const int x = label_w + static_cast<int>(slot) * pitch;
            os << R"(<g id="L)" << l << 'H' << h << R"("><title>layer )" << l << " head " << h << "</title>";
            os << R"(<rect x=")" << x << R"(" y=")" << y << R"(" width=")" << style.cell_px << R"(" height=")"
               << style.cell_px << R"(" fill=")" << style.cell_color << R"("/>)";
            for (std::size_t r = 0; r < roles.size(); ++r) {
                const int sx = x + style.cell_padding_px +
                               static_cast<int>(r % 3) * (style.subcell_px + style.subcell_gap_px);
                const int sy = y + style.cell_padding_px +
                               static_cast<int>(r / 3) * (style.subcell_px + style.subcell_gap_px);
                const auto& fill = cell.has(roles[r]) ? style.role_colors[r] : style.empty_color;
                os << R"(<rect x=")" << sx << R"(" y=")" << sy << R"(" width=")" << style.subcell_px
                   << R"(" height=")" << style.subcell_px << R"(" fill=")" << fill << R"("/>)";
            }
            os << "</g>\n";
        }
        os << "</g>\n";
    }

    os << R"(<g id="legend">)" << '\n';
    for (std::size_t r = 0; r < roles.size(); ++r) {
        const int x = label_w + static_cast<int>(r % 3) * 130;
        const int y = legend_top + static_cast<int>(r / 3) * 18;
        os << R"(<rect x=")" << x << R"(" y=")" << y << R"(" width="12" height="12" fill=")" << style.role_colors[r]
           << R"("/>)";
        os << R"(<text x=")" << x + 16 << R"(" y=")" << y + 10 << R"(" font-family="sans-serif" font-size="11">)"
           << xml_escape(to_string(roles[r])) << "</text>\n";
    }
    os << "</g>\n</svg>\n";
    return os.str();
}

// ---------------------------------------------------------------------------
// Venn

VennCounts emit_venn_counts(const RoleAssignmentMatrix& m, std::span<const RoleId> roles) {
    if (roles.empty() || roles.size() > 8) throw std::invalid_argument("venn counts need 1 to 8 roles");
    for (std::size_t i = 0; i < roles.size(); ++i)
        for (std::size_t j = i + 1; j < roles.size(); ++j)
            if (roles[i] == roles[j]) throw std::invalid_argument("venn roles must be distinct");

    VennCounts v;
    v.roles.assign(roles.begin(), roles.end());
    const std::uint32_t regions = (1u << roles.size()) - 1;
    std::vector<std::size_t> counts(regions + 1, 0);
    for (const auto& cell : m.cells) {
        std::uint32_t mask = 0;
        for (std::size_t r = 0; r < roles.size(); ++r)
            if (cell.has(roles[r])) mask |= 1u << r;
        ++counts[mask];
    }
    for (std::uint32_t mask = 1; mask <= regions; ++mask) v.regions.push_back({mask, counts[mask]});
    v.unskilled = counts[0];
    v.total = m.cells.size();
    return v;
}

ojson venn_json(const VennCounts& v) {
    ojson regions = ojson::array();
    for (const auto& r : v.regions) {
        ojson members = ojson::array();
        for (std::size_t i = 0; i < v.roles.size(); ++i)
            if (r.mask & (1u << i)) members.push_back(to_string(v.roles[i]));
        regions.push_back(ojson{{"roles", members}, {"count", r.count}});
    }
    ojson roles = ojson::array();
    for (const auto& r : v.roles) roles.push_back(to_string(r));
    return ojson{{"roles", roles}, {"regions", regions}, {"unskilled", v.unskilled}, {"total", v.total}};
}

// ---------------------------------------------------------------------------
// Histograms

Histograms emit_histograms(std::span<const double> scores, std::span<const HypothesisResult> results,
                           std::size_t bins) {
    if (bins < 2) throw std::invalid_argument("histograms need at least 2 bins");
    Histograms h;

    if (!scores.empty()) {
        std::vector<double> sorted(scores.begin(), scores.end());
        std::sort(sorted.begin(), sorted.end());
        double lo = sorted.front(), hi = sorted.back();
        if (lo == hi) {
            lo -= 0.5;
            hi += 0.5;
        }
        for (std::size_t i = 0; i <= bins; ++i) {
            const double edge = i == bins ? hi : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(bins);
            const auto below = std::upper_bound(sorted.begin(), sorted.end(), edge) - sorted.begin();
            h.score_edges.push_back(edge);
            h.score_cdf.push_back(static_cast<double>(below) / static_cast<double>(sorted.size()));
        }
        h.score_mean = sample_mean(scores);
        h.suggested_tau = suggest_tau(scores);
    }

    h.p_counts.assign(bins, 0);
    for (std::size_t i = 0; i <= bins; ++i) h.p_edges.push_back(static_cast<double>(i) / static_cast<double>(bins));
    std::size_t between = 0;
    for (const auto& r : results) {
        const auto bin = std::min(bins - 1, static_cast<std::size_t>(r.p_value * static_cast<double>(bins)));
        ++h.p_counts[bin];
        between += r.p_value > 0.05 && r.p_value < 0.95;
    }
    h.p_between_fraction = results.empty() ? 0.0 : static_cast<double>(between) / static_cast<double>(results.size());
    return h;
}

ojson histograms_json(const Histograms& h) {
    return ojson{{"scores", {{"mean", h.score_mean},
                             {"suggested_tau", h.suggested_tau},
                             {"edges", h.score_edges},
                             {"cdf", h.score_cdf}}},
                 {"p_values", {{"edges", h.p_edges},
                               {"counts", h.p_counts},
                               {"fraction_between_0.05_0.95", h.p_between_fraction}}}};
}

std::vector<HypothesisResult> all_results(const RoleAssignmentMatrix& m) {
    std::vector<HypothesisResult> out;
    for (const auto& c : m.cells)
        for (const auto& t : c.tests) out.push_back(t.result);
    return out;
}

std::vector<double> pooled_scores(std::span<const RoleSamples> samples) {
    std::vector<double> out;
    for (const auto& rs : samples) {
        if (!rs.samples) continue;
        for (const auto& s : rs.samples->samples) out.insert(out.end(), s.scores.begin(), s.scores.end());
    }
    return out;
}

// ---------------------------------------------------------------------------
// Tabular reports

ojson assignments_json(const RoleAssignmentMatrix& m) {
    ojson rows = ojson::array();
    for (std::size_t l = 0; l < m.layers; ++l)
        for (std::size_t h = 0; h < m.heads; ++h)
            for (const auto& t : m.cell(l, h).tests) {
                const auto& r = t.result;
                rows.push_back(ojson{{"layer", l},
                                     {"head", h},
                                     {"role", to_string(t.role)},
                                     {"n", r.n},
                                     {"mean", number(r.mean)},
                                     {"std", number(r.std)},
                                     {"z", number(r.z)},
                                     {"p", number(r.p_value)},
                                     {"assigned", r.rejected()}});
            }
    return rows;
}

std::string assignments_csv(const RoleAssignmentMatrix& m) {
    std::string out = "layer,head,role,n,mean,std,z,p,assigned\n";
    for (std::size_t l = 0; l < m.layers; ++l)
        for (std::size_t h = 0; h < m.heads; ++h)
            for (const auto& t : m.cell(l, h).tests) {
                const auto& r = t.result;
                out += fmt::format("{},{},{},{},{},{},{},{},{}\n", l, h, to_string(t.role), r.n, format_number(r.mean),
                                   format_number(r.std), format_number(r.z), format_number(r.p_value),
                                   r.rejected() ? 1 : 0);
            }
    return out;
}

std::string scores_csv(std::span<const RoleSamples> samples) {
    std::string out = "layer,head,role,sequence_id,score\n";
    for (const auto& rs : samples) {
        if (!rs.samples) continue;
        const auto name = to_string(rs.role);
        for (const auto& s : rs.samples->samples)
            for (std::size_t i = 0; i < s.size(); ++i)
                out += fmt::format("{},{},{},{},{}\n", s.head.layer, s.head.head, name, s.sequence_ids[i],
                                   format_number(s.scores[i]));
    }
    return out;
}

ojson layers_json(const RoleAssignmentMatrix& m, std::span<const LayerReport> layers) {
    ojson out = ojson::array();
    for (const auto& rep : layers) {
        ojson counts = ojson::object();
        for (std::size_t r = 0; r < m.roles.size(); ++r) counts[to_string(m.roles[r])] = rep.role_counts[r];
        out.push_back(ojson{{"layer", rep.layer},
                            {"role_counts", counts},
                            {"role_count_histogram", rep.role_count_histogram},
                            {"multi_skilled", rep.multi_skilled},
                            {"unskilled", rep.unskilled},
                            {"sorted_heads", rep.sorted_heads}});
    }
    return out;
}

ojson overlap_json(std::span<const OverlapReport> overlaps) {
    ojson out = ojson::array();
    for (const auto& o : overlaps)
        out.push_back(ojson{{"role_a", to_string(o.role_a)},
                            {"role_b", to_string(o.role_b)},
                            {"size_a", o.size_a},
                            {"size_b", o.size_b},
                            {"intersection", o.intersection},
                            {"jaccard", o.jaccard},
                            {"pct_a_in_b", o.pct_a_in_b},
                            {"pct_b_in_a", o.pct_b_in_a}});
    return out;
}

ojson delta_json(const DeltaReport& d) {
    ojson bands = ojson::array();
    for (const auto& b : d.bands) bands.push_back(ojson{{"first_layer", b.first}, {"last_layer", b.last}});
    ojson entries = ojson::array();
    for (const auto& e : d.entries)
        entries.push_back(ojson{{"band", e.band},
                                {"role", to_string(e.role)},
                                {"before", e.before},
                                {"after", e.after},
                                {"difference", e.difference}});
    return ojson{{"bands", bands}, {"entries", entries}};
}

std::string delta_csv(const DeltaReport& d) {
    std::string out = "band,first_layer,last_layer,role,before,after,difference\n";
    for (const auto& e : d.entries) {
        const auto& b = d.bands[e.band];
        out += fmt::format("{},{},{},{},{},{},{}\n", e.band, b.first, b.last, to_string(e.role),
                           format_number(e.before), format_number(e.after), format_number(e.difference));
    }
    return out;
}

} // namespace headroles
