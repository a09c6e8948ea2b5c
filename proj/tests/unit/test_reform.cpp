#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "lcm/common/errors.hpp"
#include "lcm/common/rng.hpp"
#include "lcm/reform/reform.hpp"

using namespace lcm;
using namespace lcm::reform;

namespace {

const std::filesystem::path kParams = LCM_PARAMS_DIR;

const rules::RuleSet& base() {
    static const auto r = rules::load_ruleset_for_year(kParams / "rules", 2023);
    return r;
}

std::string dump(const rules::RuleSet& r) { return rules::to_json(r).dump(); }

ReformSpec one(const std::string& name, Json args = Json::object()) { return {"t", {{name, std::move(args)}}}; }

// Leaves of the serialized rule set that differ between a and b.
std::vector<std::string> changed_leaves(const rules::RuleSet& a, const rules::RuleSet& b) {
    const auto fa = rules::to_json(a).flatten(), fb = rules::to_json(b).flatten();
    std::vector<std::string> out;
    for (const auto& [k, v] : fa.items()) {
        if (!fb.contains(k) || fb[k] != v) out.push_back(k);
    }
    for (const auto& [k, v] : fb.items()) {
        if (!fa.contains(k)) out.push_back(k);
    }
    return out;
}

reform::Cells cells(double fte, double days) { return {{"fte_total", fte}, {"er_spell_mean_days", days}}; }

}  // namespace

TEST_CASE("empty spec leaves the rules unchanged") {
    const auto a = apply_reform(base(), {"noop", {}});
    CHECK(dump(a.rules) == dump(base()));
    CHECK(a.audit.empty());
}

TEST_CASE("grading delta") {
    const auto a = apply_reform(base(), one("ub_grading"));
    CHECK(rules::grading_multiplier(10, a.rules) == 1.0);
    CHECK(rules::grading_multiplier(100, a.rules) == 0.8);
    CHECK(rules::grading_multiplier(200, a.rules) == 0.75);
    const double basis = 5000.0;
    const double first = rules::unemployment_benefit(basis, 0, true, a.rules);
    CHECK(rules::unemployment_benefit(basis, 100, true, a.rules) == doctest::Approx(0.8 * first).epsilon(1e-12));
    CHECK(rules::unemployment_benefit(basis, 100, true, base()) == doctest::Approx(first).epsilon(1e-12));
    REQUIRE(a.audit.size() == 1);
    CHECK(a.audit[0].path == "/er_benefit/grading");
    CHECK(a.audit[0].before.is_null());
    for (const auto& leaf : changed_leaves(base(), a.rules)) CHECK(leaf.rfind("/er_benefit/grading", 0) == 0);

    const auto off = apply_reform(a.rules, one("ub_grading", {{"enabled", false}}));
    CHECK(dump(off.rules) == dump(base()));
}

TEST_CASE("employment condition, exemptions, disregards, child benefit") {
    CHECK(base().er.employment_condition_months == 6.0);
    const auto ec = apply_reform(base(), one("employment_condition", {{"months", 12}}));
    CHECK(ec.rules.er.employment_condition_months == 12.0);
    CHECK(changed_leaves(base(), ec.rules) == std::vector<std::string>{"/er_benefit/employment_condition_months"});

    const auto ex = apply_reform(base(), one("remove_age_exemptions"));
    CHECK_FALSE(ex.rules.er.extended_benefit);
    const auto dis = apply_reform(base(), one("remove_earnings_disregards"));
    CHECK(dis.rules.er.earnings_disregard_mo == 0.0);
    const auto cb = apply_reform(base(), one("child_benefit", {{"monthly", 111.0}}));
    CHECK(cb.rules.child_benefit_mo == 111.0);
}

TEST_CASE("income tax and housing schedule deltas") {
    const auto t = apply_reform(base(), one("income_tax", {{"threshold_scale", 1.1}, {"rate_delta", -0.01}}));
    REQUIRE(t.rules.tax_brackets.size() == base().tax_brackets.size());
    for (std::size_t i = 0; i < base().tax_brackets.size(); ++i) {
        CHECK(t.rules.tax_brackets[i].lower == doctest::Approx(1.1 * base().tax_brackets[i].lower));
        if (base().tax_brackets[i].rate > 0.0) {
            CHECK(t.rules.tax_brackets[i].rate == doctest::Approx(base().tax_brackets[i].rate - 0.01));
        }
    }
    const auto h = apply_reform(base(), one("housing_schedule", {{"general", {{"coverage", 0.7}}}}));
    CHECK(h.rules.housing.general.coverage == 0.7);
    CHECK(h.rules.housing.retiree.coverage == base().housing.retiree.coverage);
    CHECK_THROWS_AS(apply_reform(base(), one("housing_schedule", {{"general", {{"no_such_field", 1}}}})), ConfigError);
}

TEST_CASE("apply then revert restores the rules exactly") {
    Rng rng(17);
    const auto leaves = rules::to_json(base()).flatten();
    std::vector<std::string> numeric;
    for (const auto& [k, v] : leaves.items()) {
        if (v.is_number_float()) numeric.push_back(k);
    }
    REQUIRE(numeric.size() > 20);
    for (int trial = 0; trial < 200; ++trial) {
        ReformSpec spec{"random", {}};
        const int n = 1 + static_cast<int>(uniform01(rng) * 4);
        for (int k = 0; k < n; ++k) {
            const auto& path = numeric[static_cast<std::size_t>(uniform01(rng) * numeric.size())];
            const double v = leaves[path].get<double>() * (0.9 + 0.1 * uniform01(rng));
            spec.deltas.push_back({"set", {{"path", path}, {"value", v}}});
        }
        if (uniform01(rng) < 0.5) spec.deltas.push_back({"ub_grading", Json::object()});
        if (uniform01(rng) < 0.5) spec.deltas.push_back({"remove_age_exemptions", Json::object()});
        Applied a;
        try {
            a = apply_reform(base(), spec);
        } catch (const ConfigError&) {
            continue;  // a random scaling can break a validation rule (e.g. bracket order)
        }
        CHECK(dump(revert_reform(a.rules, a.audit)) == dump(base()));
    }
}

TEST_CASE("application is ordered") {
    const auto p = "/er_benefit/employment_condition_months";
    const ReformSpec ab{"ab", {{"set", {{"path", p}, {"value", 9}}}, {"set", {{"path", p}, {"value", 12}}}}};
    const ReformSpec ba{"ba", {{"set", {{"path", p}, {"value", 12}}}, {"set", {{"path", p}, {"value", 9}}}}};
    CHECK(apply_reform(base(), ab).rules.er.employment_condition_months == 12.0);
    CHECK(apply_reform(base(), ba).rules.er.employment_condition_months == 9.0);
    // Disjoint deltas commute.
    const ReformSpec x{"x", {{"ub_grading", {}}, {"child_benefit", {{"monthly", 120}}}}};
    const ReformSpec y{"y", {{"child_benefit", {{"monthly", 120}}}, {"ub_grading", {}}}};
    CHECK(dump(apply_reform(base(), x).rules) == dump(apply_reform(base(), y).rules));
}

TEST_CASE("rejections") {
    try {
        apply_reform(base(), one("set", {{"path", "/er_benefit/no_such_field"}, {"value", 1}}));
        FAIL("expected rejection");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("/er_benefit/no_such_field") != std::string::npos);
    }
    CHECK_THROWS_AS(apply_reform(base(), one("bogus")), ConfigError);
    for (const auto& name : reserved_names()) {
        CHECK_THROWS_AS(apply_reform(base(), one(name)), ConfigError);
        CHECK_THROWS_AS(reform_from_json({{"deltas", {{{"name", name}}}}}), ConfigError);
    }
    CHECK_THROWS_AS(apply_reform(base(), one("employment_condition", {{"months", 12}, {"extra", 1}})), ConfigError);
    CHECK_THROWS_AS(apply_reform(base(), one("set", {{"path", "/vat_rate"}, {"value", "high"}})), ConfigError);
    CHECK_THROWS_AS(apply_reform(base(), one("set", {{"path", "no-slash"}, {"value", 1}})), ConfigError);
    // Patched rule set must still validate.
    CHECK_THROWS_AS(apply_reform(base(), one("ub_grading", {{"steps", {{0, 0.8}, {40, 0.9}}}})), ConfigError);
    CHECK_THROWS_AS(reform_from_json(Json::array()), ConfigError);
    CHECK_THROWS_AS(reform_from_json({{"name", "x"}}), ConfigError);
}

TEST_CASE("shipped overlays load and apply") {
    for (const char* f : {"noop.json", "grading.json", "orpo.json"}) {
        INFO(f);
        const auto spec = load_reform(kParams / "reforms" / f);
        const auto a = apply_reform(base(), spec);
        CHECK(dump(revert_reform(a.rules, a.audit)) == dump(base()));
        CHECK(reform_from_json(to_json(spec)).deltas.size() == spec.deltas.size());
    }
    const auto orpo = apply_reform(base(), load_reform(kParams / "reforms" / "orpo.json")).rules;
    CHECK(orpo.er.grading.has_value());
    CHECK(orpo.er.employment_condition_months == 12.0);
    CHECK_FALSE(orpo.er.extended_benefit);
    CHECK(orpo.er.earnings_disregard_mo == 0.0);
}

TEST_CASE("significance threshold at full-study scale") {
    // sd 4,998 and 4,082 FTE, 50 repeats per arm, 99 % one-sided
    const double thr = significance_threshold(4998.0, 50, 4082.0, 50, 0.99);
    CHECK(std::abs(thr - 2123.0) / 2123.0 < 0.05);
    CHECK(thr == doctest::Approx(2.3263478740408408 * std::sqrt(4998.0 * 4998.0 / 50 + 4082.0 * 4082.0 / 50)));
}

TEST_CASE("compare identical runs") {
    const std::vector<reform::Cells> arm{cells(100, 50), cells(104, 52), cells(98, 49)};
    const auto c = compare_runs(arm, arm);
    for (const auto& x : c.cells) {
        CHECK(x.difference == 0.0);
        CHECK_FALSE(x.significant);
    }
}

TEST_CASE("shifted arms are flagged at the normal-theory threshold") {
    // Alternating mu +- s gives a sample sd of s * sqrt(n / (n - 1)).
    const int n = 50;
    const double s = 1000.0, z99 = 2.3263478740408408;
    const double sd = s * std::sqrt(n / (n - 1.0));
    const double thr = z99 * sd * std::sqrt(2.0 / n);
    for (double k : {0.99, 1.01}) {
        std::vector<reform::Cells> a, b;
        for (int i = 0; i < n; ++i) {
            const double v = 2e6 + (i % 2 ? s : -s);
            a.push_back(cells(v, 100));
            b.push_back(cells(v + k * thr, 100));
        }
        const auto c = compare_runs(a, b).cell("fte_total");
        CHECK(c.threshold == doctest::Approx(thr).epsilon(1e-9));
        CHECK(c.difference == doctest::Approx(k * thr).epsilon(1e-9));
        CHECK(c.significant == (k > 1.0));
    }
}

TEST_CASE("compare_runs preconditions") {
    const std::vector<reform::Cells> two{cells(1, 1), cells(2, 2)};
    CHECK_THROWS_AS(compare_runs({cells(1, 1)}, two), ContractViolation);
    const std::vector<reform::Cells> other{{{"x", 1.0}}, {{"x", 2.0}}};
    CHECK_THROWS_AS(compare_runs(two, other), ContractViolation);
}

TEST_CASE("paired test against a hand computation") {
    const std::vector<double> b{1, 2, 3, 4, 5}, r{1.5, 2.4, 3.6, 4.2, 5.8};
    const auto hi = paired_test(b, r, Direction::Higher);
    CHECK(hi.mean == doctest::Approx(0.5));
    CHECK(hi.sd == doctest::Approx(std::sqrt(0.05)));
    CHECK(hi.t == doctest::Approx(5.0));
    CHECK(hi.critical == doctest::Approx(2.131847).epsilon(1e-6));  // t table, 4 df, 95 %
    CHECK(hi.significant);
    CHECK_FALSE(paired_test(b, r, Direction::Lower).significant);
    CHECK_FALSE(paired_test(b, b, Direction::Higher).significant);
    CHECK_THROWS_AS(paired_test(b, {1.0}, Direction::Higher), ContractViolation);
}

TEST_CASE("pipeline with a no-op reform") {
    auto m = std::make_shared<const env::Model>(env::load_model(kParams, 2023));
    const solver::PolicyNetwork net(env::kFeatureCount, {16}, env::kActionCount, 5);
    simulate::RepeatConfig cfg;
    cfg.refit_steps = 0;
    cfg.repeats = 2;
    cfg.cohort_size = 12;
    cfg.seed = 9;
    const auto r = reform_pipeline(net, m, {"noop", {}}, cfg);
    for (const auto& c : r.comparison.cells) {
        CHECK(c.difference == 0.0);
        CHECK_FALSE(c.significant);
    }
    const auto dir = std::filesystem::temp_directory_path() / "lcm_test_reform";
    write_comparison(dir, r);
    for (const char* f : {"comparison.csv", "employment_comparison.csv", "finance_comparison.csv",
                          "duration_comparison.csv", "reform_audit.json"}) {
        CHECK(std::filesystem::exists(dir / f));
    }
    const auto dur = CsvTable::load(dir / "duration_comparison.csv");
    CHECK(dur.rows.size() == 2 * simulate::kDurationBands);

    // Grading changes the rules but leaves the population and utility alone.
    const auto g = reform_pipeline(net, m, load_reform(kParams / "reforms" / "grading.json"), cfg);
    CHECK(g.audit.size() == 1);
    CHECK(g.baseline.cells == r.baseline.cells);
}
