#include "headroles/cli.hpp"

#include "headroles/analysis.hpp"
#include "headroles/bundle.hpp"
#include "headroles/error.hpp"
#include "headroles/report.hpp"
#include "headroles/score.hpp"
#include "headroles/stats.hpp"
#include "headroles/synth.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

namespace headroles::cli {

namespace fs = std::filesystem;

namespace {

struct RunConfig {
    std::string bundle;
    std::string before;
    std::string after;
    std::string roles;
    int window = kDefaultWindow;
    std::optional<double> tau;
    double alpha = kDefaultAlpha;
    bool bonferroni = false;
    std::string out_dir = ".";
    std::uint64_t seed = 0;
    std::size_t bands = 3;
    std::size_t bins = 20;
    unsigned threads = std::max(1u, std::thread::hardware_concurrency());
    std::string role_a;
    std::string role_b;

    // synth
    std::size_t layers = 12;
    std::size_t heads = 12;
    std::size_t tokens = 32;
    std::size_t sequences = 200;
    double noise = 0.05;
    std::string plants;
};

void write_file(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error(ErrorKind::MissingFile, "cannot write " + path.string());
    os << text;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::MissingFile, path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

std::string dump(const nlohmann::ordered_json& j) { return j.dump(2) + "\n"; }

std::vector<RoleId> resolve_roles(const RunConfig& cfg, const Bundle& bundle) {
    std::vector<RoleId> roles;
    if (!cfg.roles.empty())
        roles = parse_role_list(cfg.roles);
    else if (!bundle.roles.empty())
        roles = bundle.roles;
    else
        roles = default_roles(cfg.window);
    for (auto& r : roles)
        if (r.coarse == CoarseRole::Local && r.window == kDefaultWindow) r.window = cfg.window;
    return roles;
}

RoleId resolve_role(const std::string& name, const RunConfig& cfg) {
    auto r = parse_role(name);
    if (r.coarse == CoarseRole::Local && r.window == kDefaultWindow) r.window = cfg.window;
    return r;
}

struct Classified {
    Bundle bundle;
    std::vector<RoleId> roles;
    std::vector<RoleSamples> samples;
    double tau = 0.0;
    bool tau_suggested = false;
    RoleAssignmentMatrix matrix;
};

Classified classify_bundle(const RunConfig& cfg, std::ostream& err) {
    Classified c;
    c.bundle = load_bundle(cfg.bundle, cfg.threads);
    c.roles = resolve_roles(cfg, c.bundle);
    c.samples = all_head_samples(c.bundle, c.roles, cfg.threads);
    for (const auto& rs : c.samples)
        if (!rs.samples) err << "note: role " << to_string(rs.role) << " has no eligible sequence; not tested\n";
    if (cfg.tau) {
        c.tau = *cfg.tau;
    } else {
        const auto pooled = pooled_scores(c.samples);
        if (pooled.empty()) throw Error(ErrorKind::NoEligibleSequence, "no scores to suggest a threshold from");
        c.tau = static_cast<double>(suggest_tau(pooled));
        c.tau_suggested = true;
    }
    c.matrix = classify_heads(c.samples, {c.tau, cfg.alpha, cfg.bonferroni});
    return c;
}

std::vector<RoleId> tested_coarse(const Classified& c) {
    std::vector<RoleId> out;
    for (const auto& rs : c.samples)
        if (rs.samples && rs.role.is_coarse()) out.push_back(rs.role);
    return out;
}

std::vector<OverlapReport> overlaps_for(const Classified& c, const RunConfig& cfg) {
    std::vector<OverlapReport> out;
    if (!cfg.role_a.empty() || !cfg.role_b.empty()) {
        if (cfg.role_a.empty() || cfg.role_b.empty())
            throw std::invalid_argument("--role-a and --role-b must be given together");
        out.push_back(overlap_report(c.matrix, resolve_role(cfg.role_a, cfg), resolve_role(cfg.role_b, cfg)));
        return out;
    }
    const auto coarse = tested_coarse(c);
    for (std::size_t i = 0; i < coarse.size(); ++i)
        for (std::size_t j = i + 1; j < coarse.size(); ++j) out.push_back(overlap_report(c.matrix, coarse[i], coarse[j]));
    return out;
}

const HeadSamples* find_samples(const Classified& c, const RoleId& role) {
    for (const auto& rs : c.samples)
        if (rs.role == role && rs.samples) return &*rs.samples;
    return nullptr;
}

nlohmann::ordered_json correlations_json(const Classified& c, const std::vector<OverlapReport>& overlaps) {
    nlohmann::ordered_json out = nlohmann::ordered_json::array();
    for (const auto& o : overlaps) {
        const auto* a = find_samples(c, o.role_a);
        const auto* b = find_samples(c, o.role_b);
        if (!a || !b) continue;
        nlohmann::ordered_json entry{{"role_a", to_string(o.role_a)}, {"role_b", to_string(o.role_b)}};
        try {
            entry["pooled_spearman"] = pooled_score_correlation(*a, *b);
        } catch (const Error&) {
            entry["pooled_spearman"] = nullptr;
        }
        nlohmann::ordered_json per_head = nlohmann::ordered_json::array();
        for (std::size_t k = 0; k < a->samples.size(); ++k) {
            try {
                per_head.push_back(score_correlation(a->samples[k], b->samples[k]));
            } catch (const Error&) {
                per_head.push_back(nullptr);
            }
        }
        entry["per_head_spearman"] = per_head;
        out.push_back(entry);
    }
    return out;
}

std::vector<RoleId> mosaic_roles(const RunConfig& cfg) { return fine_roles(cfg.window); }

// ---------------------------------------------------------------------------
// Subcommands

int cmd_validate(const RunConfig& cfg, std::ostream& out) {
    const auto b = load_bundle(cfg.bundle, cfg.threads);
    out << "ok: " << b.sequences.size() << " sequences, L=" << b.layers << ", H=" << b.heads << "\n";
    return kOk;
}

int cmd_scores(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    const auto b = load_bundle(cfg.bundle, cfg.threads);
    const auto roles = resolve_roles(cfg, b);
    const auto samples = all_head_samples(b, roles, cfg.threads);
    for (const auto& rs : samples)
        if (!rs.samples) err << "note: role " << to_string(rs.role) << " has no eligible sequence\n";
    const auto path = fs::path(cfg.out_dir) / "scores.csv";
    write_file(path, scores_csv(samples));
    out << path.string() << "\n";
    return kOk;
}

int cmd_suggest_tau(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    const auto b = load_bundle(cfg.bundle, cfg.threads);
    const auto samples = all_head_samples(b, resolve_roles(cfg, b), cfg.threads);
    const auto pooled = pooled_scores(samples);
    if (pooled.empty()) throw Error(ErrorKind::NoEligibleSequence, "no scores in bundle");
    err << "pooled mean sieve bias " << format_number(sample_mean(pooled)) << " over " << pooled.size()
        << " scores\n";
    out << suggest_tau(pooled) << "\n";
    return kOk;
}

void write_assignments(const Classified& c, const RunConfig& cfg) {
    write_file(fs::path(cfg.out_dir) / "assignments.json", dump(assignments_json(c.matrix)));
    write_file(fs::path(cfg.out_dir) / "assignments.csv", assignments_csv(c.matrix));
}

void print_summary(const Classified& c, std::ostream& out) {
    out << "tau=" << format_number(c.tau) << (c.tau_suggested ? " (suggested)" : "")
        << " alpha=" << format_number(c.matrix.alpha) << "\n";
    for (const auto& role : c.matrix.roles)
        out << fmt::format("{:<14} {} heads\n", to_string(role), c.matrix.heads_with(role).size());
}

int cmd_classify(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    const auto c = classify_bundle(cfg, err);
    write_assignments(c, cfg);
    print_summary(c, out);
    return kOk;
}

int cmd_overlap(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    const auto c = classify_bundle(cfg, err);
    const auto overlaps = overlaps_for(c, cfg);
    nlohmann::ordered_json doc{{"tau", c.tau},
                               {"alpha", cfg.alpha},
                               {"overlaps", overlap_json(overlaps)},
                               {"correlations", correlations_json(c, overlaps)}};
    write_file(fs::path(cfg.out_dir) / "overlap.json", dump(doc));
    const auto coarse = tested_coarse(c);
    if (!coarse.empty())
        write_file(fs::path(cfg.out_dir) / "venn.json", dump(venn_json(emit_venn_counts(c.matrix, coarse))));
    for (const auto& o : overlaps)
        out << fmt::format("{} ~ {}: |A|={} |B|={} |A&B|={} jaccard={}\n", to_string(o.role_a), to_string(o.role_b),
                           o.size_a, o.size_b, o.intersection, format_number(o.jaccard));
    return kOk;
}

int cmd_layers(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    const auto c = classify_bundle(cfg, err);
    const auto layers = layer_distribution(c.matrix);
    write_file(fs::path(cfg.out_dir) / "layers.json", dump(layers_json(c.matrix, layers)));
    write_file(fs::path(cfg.out_dir) / "mosaic.svg", emit_mosaic_svg(c.matrix, mosaic_roles(cfg)));
    for (const auto& rep : layers)
        out << fmt::format("layer {:>2}: multi-skilled {} unskilled {}\n", rep.layer, rep.multi_skilled,
                           rep.unskilled);
    return kOk;
}

int cmd_delta(const RunConfig& cfg, std::ostream& out) {
    if (cfg.before.empty() || cfg.after.empty()) throw std::invalid_argument("delta needs --before and --after");
    const auto before = load_bundle(cfg.before, cfg.threads);
    const auto after = load_bundle(cfg.after, cfg.threads);
    if (before.layers != after.layers || before.heads != after.heads)
        throw Error(ErrorKind::ShapeMismatch, "checkpoints differ in layer/head counts");
    const auto roles = resolve_roles(cfg, before);
    const auto report = finetune_delta(all_head_samples(before, roles, cfg.threads),
                                       all_head_samples(after, roles, cfg.threads), cfg.bands);
    write_file(fs::path(cfg.out_dir) / "delta.csv", delta_csv(report));
    write_file(fs::path(cfg.out_dir) / "delta.json", dump(delta_json(report)));
    for (const auto& e : report.entries)
        out << fmt::format("band {} {:<12} {}\n", e.band, to_string(e.role), format_number(e.difference));
    return kOk;
}

int cmd_synth(const RunConfig& cfg, std::ostream& out) {
    std::vector<PlantSpec> plants;
    if (!cfg.plants.empty()) plants = parse_plants(read_file(cfg.plants));
    SynthLayout layout{cfg.layers, cfg.heads, cfg.tokens, cfg.sequences, cfg.noise};
    const auto bundle = generate_bundle(layout, plants, cfg.seed, cfg.threads);
    write_bundle(bundle, cfg.out_dir);
    out << "wrote " << bundle.sequences.size() << " sequences to " << cfg.out_dir << "\n";
    return kOk;
}

int cmd_report(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    const auto c = classify_bundle(cfg, err);
    const fs::path dir(cfg.out_dir);
    write_assignments(c, cfg);
    write_file(dir / "mosaic.svg", emit_mosaic_svg(c.matrix, mosaic_roles(cfg)));
    const auto layers = layer_distribution(c.matrix);
    write_file(dir / "layers.json", dump(layers_json(c.matrix, layers)));
    const auto coarse = tested_coarse(c);
    if (!coarse.empty()) write_file(dir / "venn.json", dump(venn_json(emit_venn_counts(c.matrix, coarse))));
    const auto overlaps = overlaps_for(c, cfg);
    write_file(dir / "overlap.json", dump(nlohmann::ordered_json{{"tau", c.tau},
                                                                  {"alpha", cfg.alpha},
                                                                  {"overlaps", overlap_json(overlaps)},
                                                                  {"correlations", correlations_json(c, overlaps)}}));
    const auto results = all_results(c.matrix);
    write_file(dir / "histograms.json", dump(histograms_json(emit_histograms(pooled_scores(c.samples), results, cfg.bins))));
    print_summary(c, out);
    return kOk;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Classify attention heads into functional roles by sieve bias", "headroles"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_config("--config", "", "TOML config file; command-line flags take precedence");

    RunConfig cfg;
    std::optional<double> tau;

    app.add_option("--bundle", cfg.bundle, "Bundle directory");
    app.add_option("--before", cfg.before, "Bundle before fine-tuning (delta)");
    app.add_option("--after", cfg.after, "Bundle after fine-tuning (delta)");
    app.add_option("--roles", cfg.roles, "Comma-separated role list (default: 4 coarse + 9 fine-grained)");
    app.add_option("--window", cfg.window, "Local sieve half-width")->check(CLI::PositiveNumber);
    app.add_option("--tau", tau, "Threshold; suggested from the data when omitted")->check(CLI::PositiveNumber);
    app.add_option("--alpha", cfg.alpha, "Significance level, in (0, 1)")->check(CLI::Range(0.0, 1.0));
    app.add_flag("--bonferroni", cfg.bonferroni, "Divide alpha by the number of tests");
    app.add_option("--out", cfg.out_dir, "Output directory")->envname("HEADROLES_OUT");
    app.add_option("--seed", cfg.seed, "Random seed (synth)");
    app.add_option("--bands", cfg.bands, "Number of contiguous layer bands (delta)")->check(CLI::PositiveNumber);
    app.add_option("--bins", cfg.bins, "Histogram bins (report)")->check(CLI::Range(2, 100000));
    app.add_option("--threads", cfg.threads, "Worker threads; does not change outputs")->check(CLI::PositiveNumber);
    app.add_option("--role-a", cfg.role_a, "First role (overlap)");
    app.add_option("--role-b", cfg.role_b, "Second role (overlap)");
    app.add_option("--layers", cfg.layers, "Layers (synth)")->check(CLI::PositiveNumber);
    app.add_option("--heads", cfg.heads, "Heads per layer (synth)")->check(CLI::PositiveNumber);
    app.add_option("--tokens", cfg.tokens, "Sequence length T (synth)")->check(CLI::Range(5, 100000));
    app.add_option("--sequences,-n", cfg.sequences, "Number of sequences (synth)")->check(CLI::PositiveNumber);
    app.add_option("--noise", cfg.noise, "Background noise scale (synth)")->check(CLI::NonNegativeNumber);
    app.add_option("--plants", cfg.plants, "Plant spec JSON file (synth)");

    auto* validate_cmd = app.add_subcommand("validate", "Load and validate a bundle");
    auto* scores_cmd = app.add_subcommand("scores", "Write the raw per-sequence score matrix (scores.csv)");
    auto* suggest_cmd = app.add_subcommand("suggest-tau", "Print the smallest integer above the pooled mean score");
    auto* classify_cmd = app.add_subcommand("classify", "Test every (head, role) pair; write assignments.json");
    auto* overlap_cmd = app.add_subcommand("overlap", "Role overlap, Venn counts, and score correlations");
    auto* layers_cmd = app.add_subcommand("layers", "Per-layer role distribution and mosaic.svg");
    auto* delta_cmd = app.add_subcommand("delta", "Band-wise score change between two checkpoints");
    auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic bundle with planted roles");
    auto* report_cmd = app.add_subcommand("report", "Run the whole pipeline and write every report");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n" << app.help();
        return kUsageError;
    }
    cfg.tau = tau;
    if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) {
        err << "error: --alpha must lie strictly between 0 and 1\n";
        return kUsageError;
    }

    try {
        const bool needs_bundle = validate_cmd->parsed() || scores_cmd->parsed() || suggest_cmd->parsed() ||
                                  classify_cmd->parsed() || overlap_cmd->parsed() || layers_cmd->parsed() ||
                                  report_cmd->parsed();
        if (needs_bundle && cfg.bundle.empty()) {
            err << "error: --bundle is required\n";
            return kUsageError;
        }
        if (validate_cmd->parsed()) return cmd_validate(cfg, out);
        if (scores_cmd->parsed()) return cmd_scores(cfg, out, err);
        if (suggest_cmd->parsed()) return cmd_suggest_tau(cfg, out, err);
        if (classify_cmd->parsed()) return cmd_classify(cfg, out, err);
        if (overlap_cmd->parsed()) return cmd_overlap(cfg, out, err);
        if (layers_cmd->parsed()) return cmd_layers(cfg, out, err);
        if (delta_cmd->parsed()) return cmd_delta(cfg, out);
        if (synth_cmd->parsed()) return cmd_synth(cfg, out);
        if (report_cmd->parsed()) return cmd_report(cfg, out, err);
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kDataError;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << "\n";
        return kUsageError;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return kInternalError;
    }
    err << app.help();
    return kUsageError;
}

} // namespace headroles::cli
