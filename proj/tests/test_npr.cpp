#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "taprepair/fixtures.hpp"
#include "taprepair/npr.hpp"

using namespace taprepair;

namespace {

AttributeId id(const std::string& s) { return AttributeId::parse(s); }

// Candidate flags materialized the way the enumeration does it: synthetic
// rules owned by their move index.
FlagAssignment subset_flags(const AbstractModel& am, const std::vector<int>& subset) {
    FlagAssignment fa;
    for (int mi : subset)
        for (Predicate p : am.moves[static_cast<std::size_t>(mi)].flags.on) {
            if (p.rule_id.empty()) p.rule_id = "+" + std::to_string(mi);
            fa.on.push_back(p);
        }
    return fa;
}

}  // namespace

TEST_CASE("flag discipline rejects doubled status and trigger flags") {
    Predicate cold{PredicateKind::Status, "r1", id("temperature"), CmpOp::Lt, 16};
    Predicate hot{PredicateKind::Status, "r1", id("temperature"), CmpOp::Gt, 24};
    Predicate away{PredicateKind::Status, "r1", id("presence"), CmpOp::Eq, 0};
    Predicate trig1{PredicateKind::TriggerPred, "r1", id("presence"), CmpOp::Eq, 1};
    Predicate trig2{PredicateKind::TriggerPred, "r1", id("temperature"), CmpOp::Lt, 16};

    CHECK(flags_disciplined({{cold, away}}));
    CHECK(flags_disciplined({{cold, trig1}}));
    CHECK_FALSE(flags_disciplined({{cold, hot}}));       // same rule, same attribute
    CHECK_FALSE(flags_disciplined({{trig1, trig2}}));    // two triggers on one rule
    Predicate other = hot;
    other.rule_id = "r2";
    CHECK(flags_disciplined({{cold, other}}));
}

TEST_CASE("apply_edits validates targets and preserves untouched rules") {
    RulesFile rf = parse_rules_text(fixture_by_name("G1").rules_text);

    RuleEdit cond;
    cond.kind = RuleEdit::Kind::AddCondition;
    cond.rule_id = "r3";
    cond.constraint = {id("presence"), CmpOp::Eq, 1};
    auto patched = apply_edits(rf.rules, {cond});
    REQUIRE(patched.size() == 3);
    CHECK(patched[0].conditions.size() == 1);
    CHECK(patched[1] == rf.rules[1]);

    RuleEdit bad = cond;
    bad.rule_id = "r9";
    CHECK_THROWS_AS(apply_edits(rf.rules, {bad}), std::invalid_argument);

    RuleEdit wait;
    wait.kind = RuleEdit::Kind::ModifyLatency;
    wait.rule_id = "r3";  // immediate action: nothing to retime
    wait.constraint = {id("presence"), CmpOp::Eq, 1};
    CHECK_THROWS_AS(apply_edits(rf.rules, {wait}), std::invalid_argument);

    RuleEdit rm;
    rm.kind = RuleEdit::Kind::RemoveRule;
    rm.rule_id = "r4";
    auto removed = apply_edits(rf.rules, {rm});
    REQUIRE(removed.size() == 2);
    CHECK(removed[1].id == "r5");
}

TEST_CASE("emitted edits are presentation-ordered with additions first") {
    Patch p;
    RuleEdit cond;
    cond.kind = RuleEdit::Kind::AddCondition;
    cond.rule_id = "r3";
    RuleEdit add;
    add.kind = RuleEdit::Kind::AddRule;
    add.rule.id = "r6";
    p.edits = {cond, add};
    auto out = NprEngine::emit_rule_edits(p);
    REQUIRE(out.size() == 2);
    CHECK(out[0].kind == RuleEdit::Kind::AddRule);
    CHECK(out[1].kind == RuleEdit::Kind::AddCondition);
}

TEST_CASE("identity patch fails global verification with the original defect") {
    const Fixture& f = fixture_by_name("G3");
    NprEngine eng = fixture_engine(f);
    const Property& phi = catalog_property(f.property_id);
    auto m = eng.build_model(eng.rules(), phi);
    Checker ck(*m);
    CheckResult r = ck.check(phi);
    REQUIRE(r.verdict == Verdict::Violation);

    Patch identity;
    GlobalResult g = eng.verify_global_feasibility(phi, *m, eng.rules(), identity, {});
    REQUIRE_FALSE(g.ok());
    REQUIRE(g.phi_residual.has_value());
    CHECK(g.phi_residual->states == r.cex->states);
    CHECK(g.phi_residual->violating_index == r.cex->violating_index);
}

TEST_CASE("every enumerated candidate respects flag discipline") {
    const Fixture& f = fixture_by_name("G1");
    NprEngine eng = fixture_engine(f);
    const Property& phi = catalog_property(f.property_id);
    auto m = eng.build_model(eng.rules(), phi);
    Checker ck(*m);
    CheckResult r = ck.check(phi);
    REQUIRE(r.verdict == Verdict::Violation);
    int is_idx = NprEngine::search_spurious_indicator(ck, *r.cex, phi);

    AbstractModel am = eng.abstract_model({}, {}, phi, *m, eng.rules(), *r.cex, is_idx);
    REQUIRE_FALSE(am.aborted);
    REQUIRE_FALSE(am.subsets.empty());
    CHECK(am.universe.size() <= 64);
    for (const auto& subset : am.subsets) CHECK(flags_disciplined(subset_flags(am, subset)));

    // pairing the two conditions on the same rule and attribute is illegal
    for (const auto& subset : am.subsets) {
        if (subset.size() != 2) continue;
        std::set<std::pair<std::string, std::string>> seen;
        for (int mi : subset)
            for (const auto& e : am.moves[static_cast<std::size_t>(mi)].edits)
                if (e.kind == RuleEdit::Kind::AddCondition)
                    CHECK(seen.insert({e.rule_id, e.constraint.attr.str()}).second);
    }
}

TEST_CASE("local feasibility separates controllable, deviating, and recurring") {
    const Fixture& f = fixture_by_name("G1");
    NprEngine eng = fixture_engine(f);
    const Property& phi = catalog_property(f.property_id);
    auto m = eng.build_model(eng.rules(), phi);
    Checker ck(*m);
    CheckResult r = ck.check(phi);
    REQUIRE(r.verdict == Verdict::Violation);
    int is_idx = NprEngine::search_spurious_indicator(ck, *r.cex, phi);
    AbstractModel am = eng.abstract_model({}, {}, phi, *m, eng.rules(), *r.cex, is_idx);

    // the defect keeps the user away throughout its prefix
    for (int k = 0; k <= is_idx; ++k)
        REQUIRE(m->logical(r.cex->states[static_cast<std::size_t>(k)], id("presence")) == 0);

    Patch base;
    base.trace.states.resize(3);
    base.trace.labels = {{EdgeKind::PhysicalTick, "t"}, {EdgeKind::RuleFire, "r4"}};
    base.state_values = {{{id("presence"), 0}, {id("heater"), 1}},
                         {{id("presence"), 0}, {id("heater"), 1}},
                         {{id("presence"), 0}, {id("heater"), 0}}};
    base.state_sigs = {"a", "b", "c"};

    SECTION("rule-driven success over defect-consistent values is controllable") {
        CHECK(eng.check_local_feasibility(base, phi, am, *m) == PatchClass::P_C);
    }

    SECTION("success produced by an environment transition is uncontrollable") {
        Patch p = base;
        p.trace.labels[1].kind = EdgeKind::EnvChange;
        CHECK(eng.check_local_feasibility(p, phi, am, *m) == PatchClass::P_X);
    }

    SECTION("witness reusing the spurious indicator state is uncontrollable") {
        Patch p = base;
        std::vector<std::string> ids;
        for (const auto& rule : eng.rules()) ids.push_back(rule.id);
        p.state_sigs[1] = detail::exec_signature(
            *m, r.cex->states[static_cast<std::size_t>(is_idx)], ids, m->attr_order());
        CHECK(eng.check_local_feasibility(p, phi, am, *m) == PatchClass::P_X);
    }

    SECTION("deviation of a device-unaffected attribute is incompleteness") {
        Patch p = base;
        p.state_values[1][id("presence")] = 1;  // the defect never saw 'present'
        CHECK(eng.check_local_feasibility(p, phi, am, *m) == PatchClass::P_I);
    }
}

TEST_CASE("refinement is idempotent and escalates after one retry") {
    const Fixture& f = fixture_by_name("G1");
    NprEngine eng = fixture_engine(f);
    const Property& phi = catalog_property(f.property_id);
    auto m = eng.build_model(eng.rules(), phi);
    Checker ck(*m);
    CheckResult r = ck.check(phi);
    REQUIRE(r.verdict == Verdict::Violation);
    int is_idx = NprEngine::search_spurious_indicator(ck, *r.cex, phi);
    AbstractModel am = eng.abstract_model({}, {}, phi, *m, eng.rules(), *r.cex, is_idx);

    Patch pi;
    pi.cls = PatchClass::P_I;
    pi.move_key = "k1";
    pi.move_index = 0;
    eng.refine(am, pi);
    auto frozen_once = am.frozen;
    REQUIRE_FALSE(frozen_once.empty());
    CHECK(frozen_once.count(id("presence")) == 1);
    CHECK(am.invariants.empty());  // first refinement only freezes

    eng.refine(am, pi);
    CHECK(am.frozen == frozen_once);  // freezing twice adds nothing
    CHECK(am.invariants.count("k1") == 1);

    Patch px;
    px.cls = PatchClass::P_X;
    px.move_key = "k2";
    px.move_index = -1;
    eng.refine(am, px);
    eng.refine(am, px);
    CHECK(am.invariants.count("k2") == 1);
    CHECK(am.invariants.size() == 2);
}

TEST_CASE("frozen values pin the reasoning model's environment") {
    const Fixture& f = fixture_by_name("G3");
    NprEngine eng = fixture_engine(f);
    const Property& phi = catalog_property(f.property_id);
    std::map<AttributeId, Value> pins{{id("presence"), 0}};
    auto frozen = eng.build_model(eng.rules(), phi, pins);
    // with presence frozen to away, nothing ever switches the blanket on
    Checker ck(*frozen);
    CHECK(ck.check(phi).verdict == Verdict::Pass);
}

TEST_CASE("iteration budget of one gives up on the interaction defect") {
    NprOptions opt;
    opt.iter_limit = 1;
    RepairOutcome out = run_fixture(fixture_by_name("G1"), opt);
    REQUIRE(out.initial_verdict == Verdict::Violation);
    CHECK_FALSE(out.edits.has_value());
    CHECK(out.report.iterations <= 1 * out.report.round_count);
}

TEST_CASE("predicate cap aborts the abstraction") {
    NprOptions opt;
    opt.predicate_cap = 0;
    RepairOutcome out = run_fixture(fixture_by_name("G3"), opt);
    REQUIRE(out.initial_verdict == Verdict::Violation);
    CHECK_FALSE(out.edits.has_value());
    REQUIRE_FALSE(out.report.class_history.empty());
    CHECK(out.report.class_history.front() == "abort: predicate cap");
}

TEST_CASE("delayed-activation defect repairs with one blocking condition") {
    const Fixture& f = fixture_by_name("G3");
    RepairOutcome out = run_fixture(f);
    REQUIRE(out.initial_verdict == Verdict::Violation);
    REQUIRE(out.patterns.size() >= 1);
    CHECK(out.patterns.front().tag == 6);

    REQUIRE(out.edits.has_value());
    REQUIRE(out.edits->size() == 1);
    const RuleEdit& e = out.edits->front();
    CHECK(e.kind == RuleEdit::Kind::AddCondition);
    CHECK(e.rule_id == "r1");
    CHECK(e.constraint.attr == id("presence"));
    CHECK(e.constraint.op == CmpOp::Eq);
    CHECK(e.constraint.value == 1);

    // accommodation: r2 is untouched, still present, still the same rule
    RulesFile rf = parse_rules_text(f.rules_text);
    REQUIRE(out.patched_rules.size() == 2);
    CHECK(out.patched_rules[1] == rf.rules[1]);

    // validity: the patched rule set survives a print/parse round trip
    RulesFile round{rf.attrs, out.patched_rules};
    CHECK(parse_rules_text(print_rules_file(round)).rules == out.patched_rules);

    // the patched deployment satisfies the target property
    NprEngine eng = fixture_engine(f);
    const Property& phi = catalog_property(f.property_id);
    auto pm = eng.build_model(out.patched_rules, phi);
    CHECK(Checker(*pm).check(phi).verdict == Verdict::Pass);
}

TEST_CASE("rule-absence defect repairs with one direct rule") {
    const Fixture& f = fixture_by_name("NA1");
    RepairOutcome out = run_fixture(f);
    REQUIRE(out.initial_verdict == Verdict::Violation);
    CHECK(out.patterns.empty());  // nothing acted: no rule interaction

    REQUIRE(out.edits.has_value());
    REQUIRE(out.edits->size() == 1);
    const RuleEdit& e = out.edits->front();
    REQUIRE(e.kind == RuleEdit::Kind::AddRule);
    CHECK(e.rule.id == "r1");
    CHECK(e.rule.trigger == Constraint{id("smoke"), CmpOp::Eq, 1});
    REQUIRE(e.rule.action.assigns.size() == 1);
    CHECK(e.rule.action.assigns[0] == Assignment{id("alarm"), 1});
    CHECK(e.rule.action.kind == ActionKind::Immediate);
}

TEST_CASE("repair composes a blocking condition with a restoring rule") {
    const Fixture& f = fixture_by_name("G1");
    RepairOutcome out = run_fixture(f);
    REQUIRE(out.initial_verdict == Verdict::Violation);
    REQUIRE(out.patterns.size() >= 1);
    CHECK(out.patterns.front().tag == 4);

    REQUIRE(out.edits.has_value());
    REQUIRE(out.edits->size() == 2);
    CHECK(out.edits->at(0).kind == RuleEdit::Kind::AddRule);
    CHECK(out.edits->at(1).kind == RuleEdit::Kind::AddCondition);

    const TapRule& nr = out.edits->at(0).rule;
    CHECK(nr.trigger == Constraint{id("presence"), CmpOp::Eq, 0});
    REQUIRE(nr.action.assigns.size() == 1);
    CHECK(nr.action.assigns[0] == Assignment{id("heater"), 0});

    CHECK(out.edits->at(1).rule_id == "r3");
    CHECK(out.edits->at(1).constraint == Constraint{id("presence"), CmpOp::Eq, 1});

    // accommodation: rules outside the defect trace keep their text
    RulesFile rf = parse_rules_text(f.rules_text);
    bool r4_intact = false, r5_intact = false;
    for (const auto& r : out.patched_rules) {
        r4_intact |= r == rf.rules[1];
        r5_intact |= r == rf.rules[2];
    }
    CHECK(r4_intact);
    CHECK(r5_intact);

    NprEngine eng = fixture_engine(f);
    const Property& phi = catalog_property(f.property_id);
    auto pm = eng.build_model(out.patched_rules, phi);
    CHECK(Checker(*pm).check(phi).verdict == Verdict::Pass);
}

TEST_CASE("held actions repair with a collective release guard") {
    const Fixture& f = fixture_by_name("G4");
    RepairOutcome out = run_fixture(f);
    REQUIRE(out.initial_verdict == Verdict::Violation);
    REQUIRE(out.patterns.size() >= 1);
    CHECK(out.patterns.front().tag == 7);

    // both holding rules gain the same release guard, nothing else moves
    REQUIRE(out.edits.has_value());
    REQUIRE(out.edits->size() == 2);
    std::set<std::string> targets;
    for (const RuleEdit& e : *out.edits) {
        CHECK(e.kind == RuleEdit::Kind::ModifyLatency);
        CHECK(e.constraint == Constraint{id("co2"), CmpOp::Eq, 0});
        targets.insert(e.rule_id);
    }
    CHECK(targets == std::set<std::string>{"r1", "r2"});

    RulesFile rf = parse_rules_text(f.rules_text);
    REQUIRE(out.patched_rules.size() == 3);
    CHECK(out.patched_rules[2] == rf.rules[2]);  // r3 untouched

    NprEngine eng = fixture_engine(f);
    const Property& phi = catalog_property(f.property_id);
    auto pm = eng.build_model(out.patched_rules, phi);
    CHECK(Checker(*pm).check(phi).verdict == Verdict::Pass);
}

TEST_CASE("slow-channel override repairs with one counteracting rule") {
    const Fixture& f = fixture_by_name("G5");
    RepairOutcome out = run_fixture(f);
    REQUIRE(out.initial_verdict == Verdict::Violation);
    REQUIRE(out.patterns.size() >= 1);
    CHECK(out.patterns.front().tag == 8);

    REQUIRE(out.edits.has_value());
    REQUIRE(out.edits->size() == 1);
    const RuleEdit& e = out.edits->front();
    REQUIRE(e.kind == RuleEdit::Kind::AddRule);
    CHECK(e.rule.id == "r5");
    CHECK(e.rule.trigger == Constraint{id("temperature"), CmpOp::Gt, 24});
    REQUIRE(e.rule.action.assigns.size() == 1);
    CHECK(e.rule.action.assigns[0] == Assignment{id("heater"), 0});
    CHECK(e.rule.action.kind == ActionKind::Immediate);

    // all four original rules survive unchanged
    RulesFile rf = parse_rules_text(f.rules_text);
    REQUIRE(out.patched_rules.size() == 5);
    for (std::size_t i = 0; i < rf.rules.size(); ++i)
        CHECK(out.patched_rules[i] == rf.rules[i]);

    NprEngine eng = fixture_engine(f);
    const Property& phi = catalog_property(f.property_id);
    auto pm = eng.build_model(out.patched_rules, phi);
    CHECK(Checker(*pm).check(phi).verdict == Verdict::Pass);
}
