#pragma once

#include <array>
#include <filesystem>

#include "lcm/common/io.hpp"
#include "lcm/common/rng.hpp"
#include "lcm/common/types.hpp"

namespace lcm::wage {

inline constexpr int kGroups = 3;

// Mean potential wage by age for one gender, €/yr: quadratic around a peak age,
// scaled per socioeconomic group and floored at a share of the peak.
struct AgeProfile {
    double peak = 45000.0;
    double peak_age = 47.0;
    double curvature = 5.35e-4;
    double floor_share = 0.2;
    std::array<double, kGroups> group_scale{0.72, 1.0, 1.45};

    double at(int group, double age) const;
};

struct ReductionRate {
    double reduction = 0.0;  // fraction per year
    double recovery = 0.0;   // fraction per year
};

struct WageParams {
    double sigma = 0.05;     // annual shock sd
    double autocorr = 0.89;  // annual AR(1) coefficient of ln(w/A)
    std::array<AgeProfile, 2> profiles{};
    std::array<ReductionRate, kEmploymentStateCount> reduction{};

    double average_wage(Gender g, int group, double age) const {
        return profiles[static_cast<std::size_t>(index_of(g))].at(group, age);
    }
    // AR coefficient and shock sd for a step of dt years.
    double rho(double dt) const;
    double sigma_step(double dt) const;
};

struct WageState {
    double potential = 0.0;  // €/yr
    double reduction = 0.0;
};

WageParams default_wage_params();
WageParams wage_params_from_json(const Json& doc);
Json to_json(const WageParams& p);

// One step of the potential-wage process given the profile values at the
// previous and next age and a standard normal draw z.
double potential_wage_step(double prev, double a_prev, double a_next, double z, const WageParams& p, double dt);

double potential_wage_step(const WageState& s, Gender g, int group, double age_prev, double dt, double z,
                           const WageParams& p);

// (hours/40) x potential x (1 - reduction), €/yr. Throws ContractViolation for hours outside the allowed set.
double paid_wage(double potential, double reduction, int hours);

double update_wage_reduction(double reduction, EmploymentState s, double dt, const WageParams& p);

// Job-search success probability per quarter by age band, gender and group.
struct FrictionTable {
    static constexpr int kBands = 8;
    // Lower bounds of the bands; the last two are 65 and r_max.
    std::array<double, kBands> band_lower{18, 25, 30, 50, 55, 60, 65, 68};
    // [band][gender*3 + group]
    std::array<std::array<double, 6>, kBands> full_time{};
    std::array<std::array<double, 6>, kBands> part_time{};
    double part_time_fallback = 0.3;  // share of failed FT searches that still find PT work

    int band(double age) const;
    double probability(bool full_time, Gender g, int group, double age) const;
};

FrictionTable default_friction_table();
FrictionTable friction_from_json(const Json& doc);
Json to_json(const FrictionTable& f);

struct WageModel {
    WageParams params;
    FrictionTable friction;
};

WageModel load_wage_model(const std::filesystem::path& path);
Json to_json(const WageModel& m);

}  // namespace lcm::wage
