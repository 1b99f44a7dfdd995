#pragma once

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "taprepair/catalog.hpp"
#include "taprepair/fixtures.hpp"
#include "taprepair/npr.hpp"
#include "taprepair/scenario.hpp"

namespace taprepair {

// Front-end plumbing shared by the command-line tool and its tests: run
// configuration, deployment loading, per-property execution in priority
// order, and report rendering as human-readable text or line-delimited
// records (one JSON object per line, diffable field by field).

struct RunConfig {
    std::string rules_path;
    std::string scenario_path;                     // optional
    std::vector<std::string> property_selection;   // ids (P.22) or tags (G1..G23)
    std::string channel_config_path;               // optional, built-ins otherwise
    int tick_sec = 300;
    std::uint64_t seed = 0;
    int iter_limit = 50;
    int round_limit = 15;
    std::size_t state_cap = 2'000'000;
    std::string output_path;  // optional, stdout otherwise

    void validate() const {
        if (rules_path.empty()) throw std::invalid_argument("rules path required");
        if (property_selection.empty())
            throw std::invalid_argument("property selection must be non-empty");
        if (tick_sec <= 0) throw std::invalid_argument("tick must be positive");
        if (iter_limit <= 0) throw std::invalid_argument("iter limit must be positive");
        if (round_limit <= 0) throw std::invalid_argument("round limit must be positive");
        if (state_cap == 0) throw std::invalid_argument("state cap must be positive");
    }
};

// Selection semantics: an explicit id names one catalog property and must
// apply to the deployment's attributes; a group tag expands to its applicable
// members. The resolved set is de-duplicated and priority-ordered.
inline std::vector<Property> select_properties(const std::vector<std::string>& selection,
                                               const AttributeTable& model_attrs,
                                               std::uint64_t seed) {
    const auto& catalog = load_catalog();
    const auto& reference = catalog_attributes();
    std::vector<Property> picked;
    auto add = [&](const Property& p) {
        for (const auto& q : picked)
            if (q.id == p.id) return;
        picked.push_back(p);
    };
    for (const auto& sel : selection) {
        if (sel.size() >= 2 && sel[0] == 'G') {
            bool any = false;
            for (const auto& p : catalog) {
                if (p.scenario_group != sel && p.capability_group != sel) continue;
                if (!in_scope(p, model_attrs, reference)) continue;
                add(p);
                any = true;
            }
            if (!any)
                throw std::invalid_argument("tag " + sel +
                                            " matches no property applicable here");
            continue;
        }
        bool found = false;
        for (const auto& p : catalog) {
            if (p.id != sel) continue;
            if (!in_scope(p, model_attrs, reference))
                throw std::invalid_argument("property " + sel +
                                            " references attributes this deployment lacks");
            add(p);
            found = true;
            break;
        }
        if (!found) throw std::invalid_argument("no catalog property " + sel);
    }
    const auto& [pre, post] = default_priorities();
    return prioritize(std::move(picked), pre, post, seed);
}

struct LoadedDeployment {
    RulesFile rules;
    Scenario scenario;
    ChannelTable channels;
    std::vector<Property> selected;  // priority-ordered
    ModelOptions mopt;
};

inline LoadedDeployment load_deployment(const RunConfig& cfg) {
    cfg.validate();
    LoadedDeployment d;
    d.rules = parse_rules_file(cfg.rules_path);
    if (!cfg.scenario_path.empty())
        d.scenario = parse_scenario_file(cfg.scenario_path, d.rules.attrs);
    d.channels = cfg.channel_config_path.empty()
                     ? builtin_channel_table()
                     : parse_channel_table_text(read_file_or_throw(cfg.channel_config_path),
                                                d.rules.attrs);
    d.selected = select_properties(cfg.property_selection, d.rules.attrs, cfg.seed);
    d.mopt.tick_sec = cfg.tick_sec;
    return d;
}

struct PropertyResult {
    std::string property_id;
    Verdict verdict = Verdict::Pass;         // detection verdict
    std::vector<std::string> patterns;       // V1..V8 instances, most specific first
    std::string cex_text;                    // rendered defect trace, empty when safe
    bool repaired = false;
    std::vector<std::string> edits_dsl;
    PatchReport patch;                       // repair-mode diagnostics
    double elapsed_ms = 0;
};

struct ReportSummary {
    int properties = 0;
    int safe = 0;
    int violations = 0;
    int fixed = 0;
    int unfixable = 0;  // zero in detection-only runs
    int patches = 0;
};

struct Report {
    bool repair_mode = false;
    std::vector<PropertyResult> entries;  // priority-ordered
    ReportSummary summary;
    std::string patched_rules_text;  // repair mode: full DSL after all patches

    // Summary counts recomputed from the entries must match what was tallied.
    bool consistent() const {
        ReportSummary s;
        s.properties = static_cast<int>(entries.size());
        for (const auto& e : entries) {
            if (e.verdict == Verdict::Pass) s.safe++;
            else s.violations++;
            if (e.repaired) s.fixed++;
            if (repair_mode && e.verdict != Verdict::Pass && !e.repaired) s.unfixable++;
            if (!e.edits_dsl.empty()) s.patches++;
        }
        return s.properties == summary.properties && s.safe == summary.safe &&
               s.violations == summary.violations && s.fixed == summary.fixed &&
               s.unfixable == summary.unfixable && s.patches == summary.patches;
    }

    // Exit-code policy: 0 when nothing is left violated, 1 otherwise.
    bool all_clear() const { return summary.violations == summary.fixed; }
};

namespace detail {

inline double ms_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
        .count();
}

inline void tally(Report& rep) {
    rep.summary = {};
    rep.summary.properties = static_cast<int>(rep.entries.size());
    for (const auto& e : rep.entries) {
        if (e.verdict == Verdict::Pass) rep.summary.safe++;
        else rep.summary.violations++;
        if (e.repaired) rep.summary.fixed++;
        if (rep.repair_mode && e.verdict != Verdict::Pass && !e.repaired)
            rep.summary.unfixable++;
        if (!e.edits_dsl.empty()) rep.summary.patches++;
    }
}

}  // namespace detail

// Detection only: one result per selected property, in priority order.
inline Report run_check(const RunConfig& cfg) {
    LoadedDeployment d = load_deployment(cfg);
    Report rep;
    for (const auto& phi : d.selected) {
        auto t0 = std::chrono::steady_clock::now();
        PropertyResult r;
        r.property_id = phi.id;
        Model m(d.rules.attrs, d.rules.rules, d.scenario, d.channels, {phi}, d.mopt);
        CheckResult cr = Checker(m, {cfg.state_cap}).check(phi);
        r.verdict = cr.verdict;
        if (cr.cex) {
            for (const auto& p : classify_pattern(*cr.cex, m))
                r.patterns.push_back(p.str());
            r.cex_text = cr.cex->render(m, phi.id);
        }
        r.elapsed_ms = detail::ms_since(t0);
        rep.entries.push_back(std::move(r));
    }
    detail::tally(rep);
    return rep;
}

// Detection plus repair. Patches accumulate: each property is examined
// against the rule set as already patched for its higher-priority peers, so
// a later repair can never silently undo an earlier one.
inline Report run_repair(const RunConfig& cfg) {
    LoadedDeployment d = load_deployment(cfg);
    Report rep;
    rep.repair_mode = true;
    std::vector<TapRule> current = d.rules.rules;
    NprOptions nopt;
    nopt.iter_limit = cfg.iter_limit;
    nopt.round_limit = cfg.round_limit;
    nopt.state_cap = cfg.state_cap;
    for (const auto& phi : d.selected) {
        auto t0 = std::chrono::steady_clock::now();
        PropertyResult r;
        r.property_id = phi.id;
        NprEngine eng(d.rules.attrs, current, d.scenario, d.channels, d.mopt, load_catalog(),
                      nopt);
        RepairOutcome out = eng.repair(phi);
        r.verdict = out.initial_verdict;
        for (const auto& p : out.patterns) r.patterns.push_back(p.str());
        r.patch = out.report;
        r.cex_text = out.report.cex_trace;
        if (out.edits) {
            r.repaired = true;
            r.edits_dsl = out.report.edits_dsl;
            current = out.patched_rules;
        }
        r.elapsed_ms = detail::ms_since(t0);
        rep.entries.push_back(std::move(r));
    }
    rep.patched_rules_text = print_rules_file({d.rules.attrs, current});
    detail::tally(rep);
    return rep;
}

// --- rendering ----------------------------------------------------------------

inline std::string render_text(const Report& rep) {
    std::string out;
    for (const auto& e : rep.entries) {
        out += "== " + e.property_id + ": ";
        if (e.verdict == Verdict::Pass) out += "safe";
        else if (e.repaired) out += "violation, fixed";
        else if (rep.repair_mode) out += "violation, unfixable";
        else out += "violation";
        if (!e.patterns.empty()) {
            out += "  [";
            for (std::size_t i = 0; i < e.patterns.size(); ++i)
                out += (i ? " " : "") + e.patterns[i];
            out += "]";
        }
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.1f", e.elapsed_ms);
        out += "  (" + std::string(buf) + " ms)\n";
        if (!e.cex_text.empty()) out += e.cex_text;
        for (const auto& ed : e.edits_dsl) out += "  patch: " + ed + "\n";
        if (rep.repair_mode && e.verdict != Verdict::Pass)
            out += "  (" + std::to_string(e.patch.iterations) + " iterations, " +
                   std::to_string(e.patch.round_count) + " rounds)\n";
    }
    out += "-- " + std::to_string(rep.summary.properties) + " properties: " +
           std::to_string(rep.summary.safe) + " safe, " +
           std::to_string(rep.summary.violations) + " violations, " +
           std::to_string(rep.summary.fixed) + " fixed, " +
           std::to_string(rep.summary.unfixable) + " unfixable, " +
           std::to_string(rep.summary.patches) + " patches\n";
    if (rep.repair_mode) out += "-- patched rules --\n" + rep.patched_rules_text;
    return out;
}

// One record per line: entries in report order, then the summary, then (in
// repair mode) the patched rule text.
inline std::string render_records(const Report& rep) {
    std::string out;
    for (const auto& e : rep.entries) {
        nlohmann::json j;
        j["record"] = "property";
        j["id"] = e.property_id;
        j["verdict"] = verdict_str(e.verdict);
        j["patterns"] = e.patterns;
        j["cex"] = e.cex_text;
        if (rep.repair_mode) {
            j["repaired"] = e.repaired;
            j["edits"] = e.edits_dsl;
            j["iterations"] = e.patch.iterations;
            j["rounds"] = e.patch.round_count;
            j["classes"] = e.patch.class_history;
        }
        j["ms"] = e.elapsed_ms;
        out += j.dump() + "\n";
    }
    nlohmann::json s;
    s["record"] = "summary";
    s["properties"] = rep.summary.properties;
    s["safe"] = rep.summary.safe;
    s["violations"] = rep.summary.violations;
    s["fixed"] = rep.summary.fixed;
    s["unfixable"] = rep.summary.unfixable;
    s["patches"] = rep.summary.patches;
    out += s.dump() + "\n";
    if (rep.repair_mode) {
        nlohmann::json p;
        p["record"] = "patched_rules";
        p["dsl"] = rep.patched_rules_text;
        out += p.dump() + "\n";
    }
    return out;
}

// --- benchmark harness ----------------------------------------------------------

struct BenchCase {
    std::string name;
    bool ok = false;
    std::string detail;  // first failed expectation, empty when ok
    int edit_count = 0;
    double elapsed_ms = 0;
};

// Runs every embedded deployment end to end: detect, classify, repair, then
// re-verify the patched rules against the target property.
inline std::vector<BenchCase> run_bench() {
    std::vector<BenchCase> out;
    for (const auto& f : benchmark_fixtures()) {
        auto t0 = std::chrono::steady_clock::now();
        BenchCase bc;
        bc.name = f.name;
        try {
            RepairOutcome r = run_fixture(f);
            if (r.initial_verdict != Verdict::Violation) {
                bc.detail = "expected a violation, got " +
                            std::string(verdict_str(r.initial_verdict));
            } else if (!f.primary_pattern.empty() &&
                       (r.patterns.empty() ||
                        "V" + std::to_string(r.patterns.front().tag) != f.primary_pattern)) {
                bc.detail = "expected primary pattern " + f.primary_pattern;
            } else if (!r.edits) {
                bc.detail = "no patch found";
            } else {
                bc.edit_count = static_cast<int>(r.edits->size());
                NprEngine eng = fixture_engine(f);
                const Property& phi = catalog_property(f.property_id);
                auto pm = eng.build_model(r.patched_rules, phi);
                if (Checker(*pm).check(phi).verdict != Verdict::Pass)
                    bc.detail = "patched rules do not verify";
                else
                    bc.ok = true;
            }
        } catch (const std::exception& e) {
            bc.detail = e.what();
        }
        bc.elapsed_ms = detail::ms_since(t0);
        out.push_back(std::move(bc));
    }
    return out;
}

inline std::string render_bench(const std::vector<BenchCase>& cases) {
    std::string out;
    int ok = 0;
    for (const auto& c : cases) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%8.1f", c.elapsed_ms);
        out += c.name + (c.name.size() < 3 ? "  " : " ") + (c.ok ? "repaired" : "FAILED  ") +
               "  edits=" + std::to_string(c.edit_count) + "  " + buf + " ms";
        if (!c.detail.empty()) out += "  (" + c.detail + ")";
        out += "\n";
        ok += c.ok;
    }
    out += std::to_string(ok) + "/" + std::to_string(cases.size()) + " cases repaired\n";
    return out;
}

}  // namespace taprepair
