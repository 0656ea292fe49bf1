#pragma once

#include "headroles/analysis.hpp"
#include "headroles/role.hpp"
#include "headroles/score.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace headroles {

// Geometry and palette for the layer mosaic. One row per layer (layer 0 on
// top), one cell per head, each cell split into a 3x3 grid of role subcells.
// Role r occupies subcell row r / 3, column r % 3.
struct MosaicStyle {
    int cell_px = 30;
    int cell_gap_px = 4;
    int cell_padding_px = 2;
    int subcell_px = 8;
    int subcell_gap_px = 1;
    std::string cell_color = "#9e9e9e";
    std::string empty_color = "#e0e0e0";
    // Indexed like the role list; must have at least 9 entries.
    std::vector<std::string> role_colors = {"#e41a1c", "#377eb8", "#4daf4a", "#984ea3", "#ff7f00",
                                            "#a65628", "#f781bf", "#1b9e77", "#666600"};
};

std::string emit_mosaic_svg(const RoleAssignmentMatrix& m, std::span<const RoleId> roles,
                            const MosaicStyle& style = {});

struct VennRegion {
    std::uint32_t mask = 0; // bit i set = member of roles[i], no other listed role
    std::size_t count = 0;
};

struct VennCounts {
    std::vector<RoleId> roles;
    std::vector<VennRegion> regions; // 2^k - 1 entries, ascending mask
    std::size_t unskilled = 0;       // heads in none of the listed roles
    std::size_t total = 0;           // L * H
};

VennCounts emit_venn_counts(const RoleAssignmentMatrix& m, std::span<const RoleId> roles);
nlohmann::ordered_json venn_json(const VennCounts& v);

struct Histograms {
    std::vector<double> score_edges;
    std::vector<double> score_cdf; // fraction of scores <= edge
    double score_mean = 0.0;
    std::int64_t suggested_tau = 0;
    std::vector<double> p_edges;       // bins + 1 edges over [0, 1]
    std::vector<std::size_t> p_counts; // last bin closed on the right
    double p_between_fraction = 0.0;   // fraction of p in the open interval (0.05, 0.95)
};

Histograms emit_histograms(std::span<const double> scores, std::span<const HypothesisResult> results,
                           std::size_t bins);
nlohmann::ordered_json histograms_json(const Histograms& h);

// Flattened per-(head, role) results in matrix order.
std::vector<HypothesisResult> all_results(const RoleAssignmentMatrix& m);
std::vector<double> pooled_scores(std::span<const RoleSamples> samples);

nlohmann::ordered_json assignments_json(const RoleAssignmentMatrix& m);
std::string assignments_csv(const RoleAssignmentMatrix& m);
std::string scores_csv(std::span<const RoleSamples> samples);
nlohmann::ordered_json layers_json(const RoleAssignmentMatrix& m, std::span<const LayerReport> layers);
nlohmann::ordered_json overlap_json(std::span<const OverlapReport> overlaps);
nlohmann::ordered_json delta_json(const DeltaReport& d);
std::string delta_csv(const DeltaReport& d);

// Formatting helper: shortest round-trip representation.
std::string format_number(double x);

} // namespace headroles
