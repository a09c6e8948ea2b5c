#include "lcm/reform/reform.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "lcm/common/errors.hpp"

namespace lcm::reform {

const std::vector<std::string>& delta_names() {
    static const std::vector<std::string> n{"ub_grading",         "employment_condition", "remove_age_exemptions",
                                            "remove_earnings_disregards", "income_tax",   "housing_schedule",
                                            "child_benefit",      "set"};
    return n;
}

const std::vector<std::string>& reserved_names() {
    static const std::vector<std::string> n{"waiting_period",
                                            "holiday_compensation_periodization",
                                            "earnings_based_employment_condition",
                                            "pay_subsidy_work_requirement",
                                            "language_requirement",
                                            "job_alternation_leave_abolition",
                                            "adult_education_allowance_abolition",
                                            "kela_index_freeze"};
    return n;
}

std::vector<rules::GradingStep> default_grading() { return {{0, 1.0}, {40, 0.8}, {170, 0.75}}; }

namespace {

bool contains(const std::vector<std::string>& v, const std::string& s) {
    return std::find(v.begin(), v.end(), s) != v.end();
}

void check_name(const std::string& name) {
    if (contains(reserved_names(), name)) {
        throw ConfigError("reform delta '" + name + "' is reserved and not implemented");
    }
    if (!contains(delta_names(), name)) throw ConfigError("unknown reform delta '" + name + "'");
}

void allow_keys(const Delta& d, std::initializer_list<const char*> keys) {
    for (const auto& [k, v] : d.args.items()) {
        if (std::none_of(keys.begin(), keys.end(), [&](const char* a) { return k == a; })) {
            throw ConfigError("reform delta '" + d.name + "': unknown argument '" + k + "'");
        }
    }
}

struct Patch {
    std::string path;
    Json value;
};

// Expands a named delta into pointer patches against the serialized base.
std::vector<Patch> expand(const Delta& raw, const Json& doc) {
    check_name(raw.name);
    Delta d = raw;
    if (d.args.is_null()) d.args = Json::object();
    if (!d.args.is_object()) throw ConfigError("reform delta '" + d.name + "': arguments must be an object");
    std::vector<Patch> out;
    if (d.name == "ub_grading") {
        allow_keys(d, {"enabled", "steps"});
        const bool on = d.args.value("enabled", true);
        Json steps = Json::array();
        if (d.args.contains("steps")) {
            steps = d.args["steps"];
        } else {
            for (const auto& g : default_grading()) steps.push_back(Json::array({g.day_threshold, g.multiplier}));
        }
        out.push_back({"/er_benefit/grading", on ? steps : Json(nullptr)});
    } else if (d.name == "employment_condition") {
        allow_keys(d, {"months"});
        out.push_back({"/er_benefit/employment_condition_months", require_number(d.args, "months", d.name)});
    } else if (d.name == "remove_age_exemptions") {
        allow_keys(d, {});
        out.push_back({"/er_benefit/extended_benefit", false});
    } else if (d.name == "remove_earnings_disregards") {
        allow_keys(d, {});
        out.push_back({"/er_benefit/earnings_disregard_mo", 0.0});
    } else if (d.name == "income_tax") {
        allow_keys(d, {"threshold_scale", "rate_delta"});
        const double scale = d.args.value("threshold_scale", 1.0);
        const double delta = d.args.value("rate_delta", 0.0);
        if (!(scale > 0.0)) throw ConfigError("income_tax: threshold_scale must be > 0");
        Json b = doc.at("tax_brackets");
        for (auto& row : b) {
            const double lower = row.at(0).get<double>();
            const double rate = row.at(1).get<double>();
            row[0] = lower * scale;
            if (rate > 0.0) row[1] = rate + delta;
        }
        out.push_back({"/tax_brackets", b});
    } else if (d.name == "housing_schedule") {
        allow_keys(d, {"general", "retiree"});
        for (const char* which : {"general", "retiree"}) {
            if (!d.args.contains(which)) continue;
            for (const auto& [k, v] : d.args[which].items()) {
                out.push_back({std::string("/housing_benefit/") + which + "/" + k, v});
            }
        }
    } else if (d.name == "child_benefit") {
        allow_keys(d, {"monthly"});
        out.push_back({"/child_benefit_mo", require_number(d.args, "monthly", d.name)});
    } else {  // set
        allow_keys(d, {"path", "value"});
        if (!d.args.contains("path") || !d.args["path"].is_string() || !d.args.contains("value")) {
            throw ConfigError("reform delta 'set' needs a string 'path' and a 'value'");
        }
        out.push_back({d.args["path"].get<std::string>(), d.args["value"]});
    }
    return out;
}

Json::json_pointer pointer(const std::string& path) {
    try {
        return Json::json_pointer(path);
    } catch (const Json::exception&) {
        throw ConfigError("reform: malformed field path '" + path + "'");
    }
}

bool compatible(const Json& a, const Json& b) {
    if (a.is_null() || b.is_null()) return true;
    if (a.is_number() && b.is_number()) return true;
    return a.type() == b.type();
}

}  // namespace

ReformSpec reform_from_json(const Json& doc) {
    if (!doc.is_object()) throw ConfigError("reform: expected an object");
    ReformSpec s;
    s.name = doc.value("name", std::string("reform"));
    if (!doc.contains("deltas") || !doc["deltas"].is_array()) throw ConfigError("reform: missing 'deltas' array");
    for (const auto& d : doc["deltas"]) {
        if (!d.is_object() || !d.contains("name") || !d["name"].is_string()) {
            throw ConfigError("reform: each delta needs a 'name'");
        }
        Delta x;
        x.name = d["name"].get<std::string>();
        check_name(x.name);
        for (const auto& [k, v] : d.items()) {
            if (k != "name") x.args[k] = v;
        }
        s.deltas.push_back(std::move(x));
    }
    return s;
}

Json to_json(const ReformSpec& spec) {
    Json j;
    j["name"] = spec.name;
    j["deltas"] = Json::array();
    for (const auto& d : spec.deltas) {
        Json x = d.args;
        x["name"] = d.name;
        j["deltas"].push_back(std::move(x));
    }
    return j;
}

ReformSpec load_reform(const std::filesystem::path& path) { return reform_from_json(load_json_file(path)); }

Applied apply_reform(const rules::RuleSet& base, const ReformSpec& spec) {
    Json doc = rules::to_json(base);
    Applied out;
    for (const auto& d : spec.deltas) {
        for (auto& p : expand(d, doc)) {
            const auto ptr = pointer(p.path);
            if (!doc.contains(ptr)) throw ConfigError("reform '" + d.name + "': unknown field path " + p.path);
            Json& slot = doc[ptr];
            if (!compatible(slot, p.value)) {
                throw ConfigError("reform '" + d.name + "': type mismatch at " + p.path);
            }
            out.audit.push_back({d.name, p.path, slot, p.value});
            slot = std::move(p.value);
        }
    }
    out.rules = rules::ruleset_from_json(doc);
    return out;
}

rules::RuleSet revert_reform(const rules::RuleSet& patched, const std::vector<AuditEntry>& audit) {
    Json doc = rules::to_json(patched);
    for (auto it = audit.rbegin(); it != audit.rend(); ++it) {
        const auto ptr = pointer(it->path);
        if (!doc.contains(ptr)) throw ConfigError("revert: unknown field path " + it->path);
        doc[ptr] = it->before;
    }
    return rules::ruleset_from_json(doc);
}

const CellComparison& ComparisonReport::cell(std::string_view name) const {
    for (const auto& c : cells) {
        if (c.name == name) return c;
    }
    throw ContractViolation("comparison has no cell '" + std::string(name) + "'");
}

double significance_threshold(double sd_a, int n_a, double sd_b, int n_b, double confidence) {
    if (n_a < 1 || n_b < 1 || !(confidence > 0.0 && confidence < 1.0)) {
        throw ContractViolation("significance_threshold: bad arguments");
    }
    const double se = std::sqrt(sd_a * sd_a / n_a + sd_b * sd_b / n_b);
    return boost::math::quantile(boost::math::normal_distribution<double>(), confidence) * se;
}

namespace {
void check_shape(const std::vector<Cells>& arm, const Cells& ref) {
    for (const auto& rep : arm) {
        if (rep.size() != ref.size()) throw ContractViolation("compare_runs: mismatched report shapes");
        for (std::size_t i = 0; i < ref.size(); ++i) {
            if (rep[i].first != ref[i].first) throw ContractViolation("compare_runs: mismatched report shapes");
        }
    }
}
}  // namespace

ComparisonReport compare_runs(const std::vector<Cells>& baseline, const std::vector<Cells>& reform,
                              double confidence) {
    if (baseline.size() < 2 || reform.size() < 2) throw ContractViolation("compare_runs: need >= 2 repeats per arm");
    check_shape(baseline, baseline.front());
    check_shape(reform, baseline.front());
    const auto b = simulate::cell_stats(baseline);
    const auto r = simulate::cell_stats(reform);
    ComparisonReport out;
    out.confidence = confidence;
    out.baseline_repeats = static_cast<int>(baseline.size());
    out.reform_repeats = static_cast<int>(reform.size());
    const double z = boost::math::quantile(boost::math::normal_distribution<double>(), confidence);
    for (std::size_t i = 0; i < b.size(); ++i) {
        CellComparison c;
        c.name = b[i].name;
        c.baseline = b[i].mean;
        c.reform = r[i].mean;
        c.difference = c.reform - c.baseline;
        c.baseline_sd = b[i].sd;
        c.reform_sd = r[i].sd;
        c.std_error = std::sqrt(c.baseline_sd * c.baseline_sd / out.baseline_repeats +
                                c.reform_sd * c.reform_sd / out.reform_repeats);
        c.threshold = z * c.std_error;
        c.significant = std::abs(c.difference) > c.threshold;
        out.cells.push_back(std::move(c));
    }
    return out;
}

PairedTest paired_test(const std::vector<double>& baseline, const std::vector<double>& reform, Direction dir,
                       double confidence) {
    if (baseline.size() != reform.size() || baseline.size() < 2) {
        throw ContractViolation("paired_test: need equal arms of >= 2 repeats");
    }
    PairedTest t;
    t.n = static_cast<int>(baseline.size());
    for (int i = 0; i < t.n; ++i) t.mean += reform[static_cast<std::size_t>(i)] - baseline[static_cast<std::size_t>(i)];
    t.mean /= t.n;
    for (int i = 0; i < t.n; ++i) {
        const double d = reform[static_cast<std::size_t>(i)] - baseline[static_cast<std::size_t>(i)] - t.mean;
        t.sd += d * d;
    }
    t.sd = std::sqrt(t.sd / (t.n - 1));
    t.critical = boost::math::quantile(boost::math::students_t_distribution<double>(t.n - 1), confidence);
    if (t.sd > 0.0) {
        t.t = t.mean / (t.sd / std::sqrt(static_cast<double>(t.n)));
    } else {
        t.t = t.mean == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), t.mean);
    }
    t.significant = dir == Direction::Lower ? t.t < -t.critical : t.t > t.critical;
    return t;
}

std::vector<double> cell_series(const std::vector<Cells>& repeats, std::string_view name) {
    std::vector<double> v;
    for (const auto& rep : repeats) {
        const auto it = std::find_if(rep.begin(), rep.end(), [&](const auto& c) { return c.first == name; });
        if (it == rep.end()) throw ContractViolation("cell_series: no cell '" + std::string(name) + "'");
        v.push_back(it->second);
    }
    return v;
}

PipelineResult reform_pipeline(const solver::PolicyNetwork& base, std::shared_ptr<const env::Model> baseline_model,
                               const ReformSpec& spec, const simulate::RepeatConfig& cfg) {
    auto applied = apply_reform(baseline_model->rules, spec);
    auto reformed = std::make_shared<env::Model>(*baseline_model);
    reformed->rules = std::move(applied.rules);
    if (env::to_json(reformed->utility).dump() != env::to_json(baseline_model->utility).dump()) {
        throw ContractViolation("reform_pipeline: utility parameters differ between arms");
    }
    PipelineResult out;
    out.audit = std::move(applied.audit);
    // Paired seeds: both arms take the same per-repeat seeds.
    auto paired = cfg;
    if (paired.repeat_seeds.empty()) {
        for (int i = 0; i < cfg.repeats; ++i) paired.repeat_seeds.push_back(simulate::repeat_seed(cfg, i));
    }
    out.baseline = simulate::repeat_protocol(base, baseline_model, paired);
    out.reform = simulate::repeat_protocol(base, reformed, paired);
    out.comparison = compare_runs(out.baseline.cells, out.reform.cells);
    return out;
}

void write_comparison(const std::filesystem::path& dir, const PipelineResult& r) {
    std::filesystem::create_directories(dir);
    const auto fd = [](double v) { return format_double(v); };
    const auto& cmp = r.comparison;

    CsvTable all;
    all.header = {"cell", "reform", "baseline", "difference", "reform_sd", "baseline_sd", "std_error",
                  "threshold", "significant"};
    for (const auto& c : cmp.cells) {
        all.add_row({c.name, fd(c.reform), fd(c.baseline), fd(c.difference), fd(c.reform_sd), fd(c.baseline_sd),
                     fd(c.std_error), fd(c.threshold), c.significant ? "1" : "0"});
    }
    all.save(dir / "comparison.csv");

    const auto table = [&](const std::filesystem::path& file, const std::vector<std::string>& names) {
        CsvTable t;
        t.header = {"item", "reform", "baseline", "change"};
        for (const auto& n : names) {
            const auto& c = cmp.cell(n);
            t.add_row({n, fd(c.reform), fd(c.baseline), fd(c.difference)});
        }
        t.save(dir / file);
    };
    table("employment_comparison.csv", {"fte_total", "employed_total", "employed_full_time", "employed_part_time",
                                        "employment_rate_18_64", "unemployment_rate_18_64"});
    std::vector<std::string> fin;
    for (const auto& c : cmp.cells) {
        if (c.name.rfind("benefit_", 0) == 0) fin.push_back(c.name);
    }
    for (const char* n : {"benefits_total", "taxes_total", "contributions_total", "wages_total", "wages_ft", "wages_pt",
                          "consumption_total", "public_net"}) {
        fin.emplace_back(n);
    }
    table("finance_comparison.csv", fin);

    CsvTable dur;
    dur.header = {"age", "arm"};
    for (const char* n : simulate::kDurationBinNames) dur.header.emplace_back(n);
    for (int b = 0; b < simulate::kDurationBands; ++b) {
        for (const char* arm : {"baseline", "reform"}) {
            std::vector<std::string> row{simulate::kDurationBandNames[static_cast<std::size_t>(b)], arm};
            for (const char* bin : simulate::kDurationBinNames) {
                const auto& c = cmp.cell(std::string("duration_") + simulate::kDurationBandNames[static_cast<std::size_t>(b)] +
                                         "_" + bin);
                row.push_back(fd(std::string(arm) == "baseline" ? c.baseline : c.reform));
            }
            dur.add_row(std::move(row));
        }
    }
    dur.save(dir / "duration_comparison.csv");

    Json audit = Json::array();
    for (const auto& a : r.audit) audit.push_back({{"delta", a.delta}, {"path", a.path}, {"before", a.before}, {"after", a.after}});
    save_json_file(dir / "reform_audit.json", audit);
}

}  // namespace lcm::reform
