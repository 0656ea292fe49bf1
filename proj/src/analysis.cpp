#include "headroles/analysis.hpp"

#include "headroles/error.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>

namespace headroles {

const RoleTest* HeadCell::find(const RoleId& role) const {
    for (const auto& t : tests)
        if (t.role == role) return &t;
    return nullptr;
}

bool HeadCell::has(const RoleId& role) const {
    const auto* t = find(role);
    return t != nullptr && t->result.rejected();
}

std::vector<RoleId> HeadCell::assigned() const {
    std::vector<RoleId> out;
    for (const auto& t : tests)
        if (t.result.rejected()) out.push_back(t.role);
    return out;
}

std::size_t HeadCell::assigned_count(std::span<const RoleId> among) const {
    return static_cast<std::size_t>(
        std::count_if(among.begin(), among.end(), [&](const RoleId& r) { return has(r); }));
}

std::vector<HeadCoord> RoleAssignmentMatrix::heads_with(const RoleId& role) const {
    std::vector<HeadCoord> out;
    for (std::size_t l = 0; l < layers; ++l)
        for (std::size_t h = 0; h < heads; ++h)
            if (cell(l, h).has(role)) out.push_back({l, h});
    return out;
}

RoleAssignmentMatrix classify_heads(std::span<const RoleSamples> samples, const ClassifyOptions& options) {
    if (!(options.tau > 0.0)) throw std::invalid_argument("tau must be positive");
    RoleAssignmentMatrix m;
    m.tau = options.tau;
    m.alpha = options.alpha;

    std::size_t tests = 0;
    for (const auto& rs : samples) {
        m.roles.push_back(rs.role);
        if (!rs.samples) continue;
        if (m.layers == 0 && m.heads == 0) {
            m.layers = rs.samples->layers;
            m.heads = rs.samples->heads;
        } else if (m.layers != rs.samples->layers || m.heads != rs.samples->heads) {
            throw Error(ErrorKind::ShapeMismatch, "role samples disagree on layer/head counts");
        }
        tests += rs.samples->samples.size();
    }
    m.effective_alpha = options.bonferroni && tests > 0 ? options.alpha / static_cast<double>(tests) : options.alpha;
    m.cells.resize(m.layers * m.heads);

    for (const auto& rs : samples) {
        if (!rs.samples) continue;
        for (const auto& s : rs.samples->samples) {
            auto result = ztest_mean_gt(s.scores, options.tau, m.effective_alpha);
            m.cell(s.head.layer, s.head.head).tests.push_back({rs.role, result});
        }
    }
    return m;
}

OverlapReport overlap_report(const RoleAssignmentMatrix& m, const RoleId& a, const RoleId& b) {
    OverlapReport r{a, b};
    for (const auto& c : m.cells) {
        const bool in_a = c.has(a), in_b = c.has(b);
        r.size_a += in_a;
        r.size_b += in_b;
        r.intersection += in_a && in_b;
    }
    const auto uni = r.size_a + r.size_b - r.intersection;
    r.jaccard = uni == 0 ? 0.0 : static_cast<double>(r.intersection) / static_cast<double>(uni);
    r.pct_a_in_b = r.size_a == 0 ? 0.0 : static_cast<double>(r.intersection) / static_cast<double>(r.size_a);
    r.pct_b_in_a = r.size_b == 0 ? 0.0 : static_cast<double>(r.intersection) / static_cast<double>(r.size_b);
    return r;
}

namespace {

void append_common(const SieveBiasSamples& a, const SieveBiasSamples& b, std::vector<double>& xa,
                   std::vector<double>& xb) {
    std::map<std::string, double> by_id;
    for (std::size_t i = 0; i < b.size(); ++i) by_id.emplace(b.sequence_ids[i], b.scores[i]);
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (auto it = by_id.find(a.sequence_ids[i]); it != by_id.end()) {
            xa.push_back(a.scores[i]);
            xb.push_back(it->second);
        }
    }
}

} // namespace

double score_correlation(const SieveBiasSamples& a, const SieveBiasSamples& b) {
    std::vector<double> xa, xb;
    append_common(a, b, xa, xb);
    if (xa.size() < 2) throw Error(ErrorKind::DegenerateInput, "fewer than two common sequences");
    return spearman(xa, xb);
}

double pooled_score_correlation(const HeadSamples& a, const HeadSamples& b) {
    if (a.samples.size() != b.samples.size())
        throw Error(ErrorKind::ShapeMismatch, "sample sets cover different head grids");
    std::vector<double> xa, xb;
    for (std::size_t k = 0; k < a.samples.size(); ++k) append_common(a.samples[k], b.samples[k], xa, xb);
    if (xa.size() < 2) throw Error(ErrorKind::DegenerateInput, "fewer than two common sequences");
    return spearman(xa, xb);
}

std::vector<std::size_t> sort_heads_by_roles(const RoleAssignmentMatrix& m, std::size_t layer,
                                             std::span<const RoleId> among) {
    std::vector<std::size_t> order(m.heads);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<std::size_t> counts(m.heads);
    for (std::size_t h = 0; h < m.heads; ++h) counts[h] = m.cell(layer, h).assigned_count(among);
    std::stable_sort(order.begin(), order.end(), [&](auto x, auto y) { return counts[x] > counts[y]; });
    return order;
}

std::vector<LayerReport> layer_distribution(const RoleAssignmentMatrix& m) {
    std::vector<RoleId> coarse;
    for (const auto& r : m.roles)
        if (r.is_coarse()) coarse.push_back(r);

    std::vector<LayerReport> out;
    for (std::size_t l = 0; l < m.layers; ++l) {
        LayerReport rep;
        rep.layer = l;
        rep.role_counts.assign(m.roles.size(), 0);
        rep.role_count_histogram.assign(m.roles.size() + 1, 0);
        for (std::size_t h = 0; h < m.heads; ++h) {
            const auto& c = m.cell(l, h);
            for (std::size_t r = 0; r < m.roles.size(); ++r) rep.role_counts[r] += c.has(m.roles[r]);
            const auto k = c.assigned_count(m.roles);
            ++rep.role_count_histogram[k];
            rep.multi_skilled += k >= 2;
            rep.unskilled += c.assigned_count(coarse) == 0;
        }
        rep.sorted_heads = sort_heads_by_roles(m, l, m.roles);
        out.push_back(std::move(rep));
    }
    return out;
}

std::vector<LayerBand> layer_bands(std::size_t layers, std::size_t n_bands) {
    if (n_bands == 0 || layers % n_bands != 0)
        throw std::invalid_argument("band count " + std::to_string(n_bands) + " does not divide " +
                                    std::to_string(layers) + " layers");
    const auto width = layers / n_bands;
    std::vector<LayerBand> bands;
    for (std::size_t b = 0; b < n_bands; ++b) bands.push_back({b * width, b * width + width - 1});
    return bands;
}

namespace {

double band_mean(const HeadSamples& hs, const LayerBand& band) {
    long double sum = 0.0L;
    std::size_t n = 0;
    for (auto l = band.first; l <= band.last; ++l)
        for (std::size_t h = 0; h < hs.heads; ++h)
            for (double s : hs.samples[l * hs.heads + h].scores) {
                sum += s;
                ++n;
            }
    return n == 0 ? 0.0 : static_cast<double>(sum / static_cast<long double>(n));
}

} // namespace

DeltaReport finetune_delta(std::span<const RoleSamples> before, std::span<const RoleSamples> after,
                           std::size_t n_bands) {
    if (before.size() != after.size())
        throw Error(ErrorKind::ShapeMismatch, "checkpoints were scored with different role sets");
    DeltaReport rep;
    std::size_t layers = 0, heads = 0;
    for (std::size_t r = 0; r < before.size(); ++r) {
        if (!(before[r].role == after[r].role))
            throw Error(ErrorKind::ShapeMismatch, "role order differs between checkpoints");
        for (const auto* s : {&before[r].samples, &after[r].samples}) {
            if (!*s) continue;
            if (layers == 0 && heads == 0) {
                layers = (*s)->layers;
                heads = (*s)->heads;
            } else if ((*s)->layers != layers || (*s)->heads != heads) {
                throw Error(ErrorKind::ShapeMismatch, "checkpoints differ in layer/head counts");
            }
        }
    }
    if (layers == 0) throw Error(ErrorKind::NoEligibleSequence, "no role was scored on both checkpoints");
    rep.bands = layer_bands(layers, n_bands);
    for (std::size_t b = 0; b < rep.bands.size(); ++b) {
        for (std::size_t r = 0; r < before.size(); ++r) {
            if (!before[r].samples || !after[r].samples) continue;
            DeltaEntry e;
            e.band = b;
            e.role = before[r].role;
            e.before = band_mean(*before[r].samples, rep.bands[b]);
            e.after = band_mean(*after[r].samples, rep.bands[b]);
            e.difference = e.after - e.before;
            rep.entries.push_back(e);
        }
    }
    return rep;
}

} // namespace headroles
