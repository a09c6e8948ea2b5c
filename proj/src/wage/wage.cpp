#include "lcm/wage/wage.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lcm/common/errors.hpp"

namespace lcm::wage {

using S = EmploymentState;

double AgeProfile::at(int group, double age) const {
    const double d = age - peak_age;
    const double shape = std::max(floor_share, 1.0 - curvature * d * d);
    return peak * group_scale[static_cast<std::size_t>(std::clamp(group, 0, kGroups - 1))] * shape;
}

double WageParams::rho(double dt) const { return std::pow(autocorr, dt); }
double WageParams::sigma_step(double dt) const { return sigma * std::sqrt(dt); }

WageParams default_wage_params() {
    WageParams p;
    p.profiles[0] = AgeProfile{46000.0, 47.0, 5.35e-4, 0.2, {0.72, 1.0, 1.45}};
    p.profiles[1] = AgeProfile{39000.0, 47.0, 5.0e-4, 0.2, {0.75, 1.0, 1.35}};
    auto set = [&p](S s, double red_pct, double rec_pct) {
        p.reduction[static_cast<std::size_t>(index_of(s))] = {red_pct / 100.0, rec_pct / 100.0};
    };
    set(S::FullTime, 0, 3);
    set(S::PartTime, 0, 2.5);
    set(S::MothersLeave, 0, 0);
    set(S::FathersLeave, 0, 0);
    set(S::ChildHomeCare, 2.5, 0);
    set(S::Disabled, 5, 0);
    set(S::Retired, 10, 0);
    set(S::RetiredPartTime, 5, 0);
    set(S::RetiredFullTime, 5, 0);
    set(S::EarningsRelatedUnemployed, 4.5, 0);
    set(S::ExtendedUnemployed, 4.5, 0);
    set(S::LaborMarketSupport, 5, 0);
    set(S::OutsideWorkforce, 5, 0);
    set(S::Student, 0, 2);
    set(S::SickLeave, 25, 0);
    set(S::Dead, 0, 0);
    return p;
}

double potential_wage_step(double prev, double a_prev, double a_next, double z, const WageParams& p, double dt) {
    const double s = p.sigma_step(dt);
    return a_next * std::exp(p.rho(dt) * std::log(prev / a_prev) + s * z - 0.5 * s * s);
}

double potential_wage_step(const WageState& st, Gender g, int group, double age_prev, double dt, double z,
                           const WageParams& p) {
    return potential_wage_step(st.potential, p.average_wage(g, group, age_prev), p.average_wage(g, group, age_prev + dt),
                               z, p, dt);
}

double paid_wage(double potential, double reduction, int hours) {
    if (!is_valid_hours(hours)) throw ContractViolation("paid_wage: hours must be one of 8,16,24,32,40,48");
    return (hours / 40.0) * potential * (1.0 - reduction);
}

double update_wage_reduction(double reduction, S s, double dt, const WageParams& p) {
    const auto& r = p.reduction[static_cast<std::size_t>(index_of(s))];
    return std::clamp(reduction + (r.reduction - r.recovery) * dt, 0.0, 1.0);
}

int FrictionTable::band(double age) const {
    int b = 0;
    for (int i = 0; i < kBands; ++i) {
        if (age >= band_lower[static_cast<std::size_t>(i)]) b = i;
    }
    return b;
}

double FrictionTable::probability(bool ft, Gender g, int group, double age) const {
    const auto& t = ft ? full_time : part_time;
    return t[static_cast<std::size_t>(band(age))][static_cast<std::size_t>(index_of(g) * 3 + group)];
}

FrictionTable default_friction_table() {
    FrictionTable f;
    f.full_time = {{{0.15, 0.10, 0.10, 0.15, 0.10, 0.10},
                    {0.20, 0.20, 0.20, 0.15, 0.15, 0.20},
                    {0.25, 0.25, 0.30, 0.30, 0.30, 0.30},
                    {0.20, 0.20, 0.25, 0.25, 0.25, 0.25},
                    {0.20, 0.20, 0.25, 0.20, 0.20, 0.20},
                    {0.10, 0.15, 0.20, 0.15, 0.20, 0.20},
                    {0.15, 0.15, 0.20, 0.10, 0.15, 0.20},
                    {0.05, 0.05, 0.05, 0.03, 0.03, 0.03}}};
    f.part_time = {{{0.70, 0.70, 0.70, 0.70, 0.70, 0.70},
                    {0.70, 0.70, 0.70, 0.70, 0.70, 0.70},
                    {0.60, 0.60, 0.60, 0.65, 0.65, 0.65},
                    {0.50, 0.50, 0.55, 0.55, 0.55, 0.55},
                    {0.45, 0.50, 0.50, 0.50, 0.50, 0.50},
                    {0.30, 0.35, 0.40, 0.30, 0.40, 0.45},
                    {0.25, 0.30, 0.30, 0.30, 0.30, 0.30},
                    {0.05, 0.10, 0.10, 0.10, 0.10, 0.10}}};
    return f;
}

namespace {

Json profile_to_json(const AgeProfile& a) {
    return Json{{"peak", a.peak},
                {"peak_age", a.peak_age},
                {"curvature", a.curvature},
                {"floor_share", a.floor_share},
                {"group_scale", a.group_scale}};
}

AgeProfile profile_from_json(const Json& j, const std::string& ctx) {
    AgeProfile a;
    a.peak = require_number(j, "peak", ctx);
    a.peak_age = require_number(j, "peak_age", ctx);
    a.curvature = require_number(j, "curvature", ctx);
    a.floor_share = require_number(j, "floor_share", ctx);
    const auto gs = require_number_array(j, "group_scale", ctx);
    if (gs.size() != kGroups) throw ConfigError(ctx + ".group_scale: expected 3 entries");
    std::copy(gs.begin(), gs.end(), a.group_scale.begin());
    if (!(a.peak > 0.0) || !(a.floor_share > 0.0)) throw ConfigError(ctx + ": profile must stay positive");
    for (double g : a.group_scale) {
        if (!(g > 0.0)) throw ConfigError(ctx + ".group_scale: must be positive");
    }
    return a;
}

std::array<std::array<double, 6>, FrictionTable::kBands> table_from_json(const Json& j, const std::string& ctx) {
    std::array<std::array<double, 6>, FrictionTable::kBands> t{};
    if (!j.is_array() || j.size() != FrictionTable::kBands) throw ConfigError(ctx + ": expected 8 age bands");
    for (std::size_t b = 0; b < t.size(); ++b) {
        if (!j[b].is_array() || j[b].size() != 6) throw ConfigError(ctx + ": expected 6 columns per band");
        for (std::size_t c = 0; c < 6; ++c) {
            const double v = j[b][c].get<double>();
            if (!(v >= 0.0 && v <= 1.0)) throw ConfigError(ctx + ": probability out of [0,1]");
            t[b][c] = v;
        }
    }
    return t;
}

}  // namespace

WageParams wage_params_from_json(const Json& doc) {
    WageParams p = default_wage_params();
    p.sigma = require_number(doc, "sigma", "wage");
    p.autocorr = require_number(doc, "autocorr", "wage");
    if (!(p.sigma >= 0.0)) throw ConfigError("wage.sigma: must be >= 0");
    if (!(p.autocorr > 0.0 && p.autocorr < 1.0)) throw ConfigError("wage.autocorr: must be in (0,1)");
    const auto& prof = doc.at("profiles");
    p.profiles[0] = profile_from_json(prof.at("male"), "wage.profiles.male");
    p.profiles[1] = profile_from_json(prof.at("female"), "wage.profiles.female");
    if (doc.contains("reduction")) {
        for (const auto& [key, val] : doc.at("reduction").items()) {
            const auto s = parse_employment_state(key);
            if (!s) throw ConfigError("wage.reduction: unknown state " + key);
            if (!val.is_array() || val.size() != 2) throw ConfigError("wage.reduction." + key + ": expected [reduction%, recovery%]");
            p.reduction[static_cast<std::size_t>(index_of(*s))] = {val[0].get<double>() / 100.0,
                                                                  val[1].get<double>() / 100.0};
        }
    }
    return p;
}

Json to_json(const WageParams& p) {
    Json red = Json::object();
    for (int i = 0; i < kEmploymentStateCount; ++i) {
        const auto& r = p.reduction[static_cast<std::size_t>(i)];
        red[std::string(short_name(static_cast<S>(i)))] = Json::array({r.reduction * 100.0, r.recovery * 100.0});
    }
    return Json{{"sigma", p.sigma},
                {"autocorr", p.autocorr},
                {"profiles", {{"male", profile_to_json(p.profiles[0])}, {"female", profile_to_json(p.profiles[1])}}},
                {"reduction", red}};
}

FrictionTable friction_from_json(const Json& doc) {
    FrictionTable f = default_friction_table();
    const double rmax = require_number(doc, "r_max", "friction");
    if (!(rmax > 65.0 && rmax < 75.0)) throw ConfigError("friction.r_max: must lie in (65, 75)");
    f.band_lower[7] = rmax;
    f.full_time = table_from_json(doc.at("full_time"), "friction.full_time");
    f.part_time = table_from_json(doc.at("part_time"), "friction.part_time");
    f.part_time_fallback = require_number(doc, "part_time_fallback", "friction");
    if (!(f.part_time_fallback >= 0.0 && f.part_time_fallback <= 1.0)) {
        throw ConfigError("friction.part_time_fallback: must be in [0,1]");
    }
    return f;
}

Json to_json(const FrictionTable& f) {
    return Json{{"r_max", f.band_lower[7]},
                {"full_time", f.full_time},
                {"part_time", f.part_time},
                {"part_time_fallback", f.part_time_fallback}};
}

WageModel load_wage_model(const std::filesystem::path& path) {
    const Json doc = load_json_file(path);
    try {
        return WageModel{wage_params_from_json(doc.at("process")), friction_from_json(doc.at("friction"))};
    } catch (const Json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

Json to_json(const WageModel& m) { return Json{{"process", to_json(m.params)}, {"friction", to_json(m.friction)}}; }

}  // namespace lcm::wage
