#pragma once

#include "headroles/role.hpp"
#include "headroles/score.hpp"
#include "headroles/stats.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace headroles {

struct RoleTest {
    RoleId role;
    HypothesisResult result;
};

struct HeadCell {
    std::vector<RoleTest> tests; // in role-configuration order; untestable roles omitted

    bool has(const RoleId& role) const;
    const RoleTest* find(const RoleId& role) const;
    std::vector<RoleId> assigned() const;
    std::size_t assigned_count(std::span<const RoleId> among) const;
};

struct RoleAssignmentMatrix {
    std::size_t layers = 0;
    std::size_t heads = 0;
    double tau = 0.0;
    double alpha = kDefaultAlpha;
    double effective_alpha = kDefaultAlpha; // alpha after optional Bonferroni correction
    std::vector<RoleId> roles;               // tested roles, configuration order
    std::vector<HeadCell> cells;             // layer-major

    const HeadCell& cell(std::size_t layer, std::size_t head) const { return cells[layer * heads + head]; }
    HeadCell& cell(std::size_t layer, std::size_t head) { return cells[layer * heads + head]; }
    std::vector<HeadCoord> heads_with(const RoleId& role) const;
};

struct ClassifyOptions {
    double tau = 3.0;
    double alpha = kDefaultAlpha;
    bool bonferroni = false;
};

RoleAssignmentMatrix classify_heads(std::span<const RoleSamples> samples, const ClassifyOptions& options);

struct OverlapReport {
    RoleId role_a;
    RoleId role_b;
    std::size_t size_a = 0;
    std::size_t size_b = 0;
    std::size_t intersection = 0;
    double jaccard = 0.0;
    double pct_a_in_b = 0.0;
    double pct_b_in_a = 0.0;
};

OverlapReport overlap_report(const RoleAssignmentMatrix& m, const RoleId& a, const RoleId& b);

// Spearman rho over the sequences both sample vectors share, matched by id.
double score_correlation(const SieveBiasSamples& a, const SieveBiasSamples& b);
// Task-level variant: (head, sequence) pairs pooled over all heads.
double pooled_score_correlation(const HeadSamples& a, const HeadSamples& b);

struct LayerReport {
    std::size_t layer = 0;
    std::vector<std::size_t> role_counts;         // parallel to RoleAssignmentMatrix::roles
    std::vector<std::size_t> role_count_histogram; // [k] = heads carrying exactly k roles
    std::size_t multi_skilled = 0;                 // heads with >= 2 roles
    std::size_t unskilled = 0;                     // heads with none of the coarse roles
    std::vector<std::size_t> sorted_heads;         // by role count descending, index tie-break
};

std::vector<LayerReport> layer_distribution(const RoleAssignmentMatrix& m);

// Heads of one layer ordered by the number of `among` roles assigned,
// descending, head index breaking ties.
std::vector<std::size_t> sort_heads_by_roles(const RoleAssignmentMatrix& m, std::size_t layer,
                                             std::span<const RoleId> among);

struct LayerBand {
    std::size_t first = 0; // inclusive
    std::size_t last = 0;  // inclusive
};

struct DeltaEntry {
    std::size_t band = 0;
    RoleId role;
    double before = 0.0;
    double after = 0.0;
    double difference = 0.0;
};

struct DeltaReport {
    std::vector<LayerBand> bands;
    std::vector<DeltaEntry> entries; // band-major, roles in configuration order
};

std::vector<LayerBand> layer_bands(std::size_t layers, std::size_t n_bands);

DeltaReport finetune_delta(std::span<const RoleSamples> before, std::span<const RoleSamples> after,
                           std::size_t n_bands);

} // namespace headroles
