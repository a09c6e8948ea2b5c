#include "lcm/calibrate/calibrate.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "lcm/common/errors.hpp"

namespace lcm::calibrate {

namespace {
constexpr std::array<std::pair<Statistic, std::string_view>, 8> kStatNames{{
    {Statistic::EmploymentRate, "employment_rate"},
    {Statistic::UnemploymentRate, "unemployment_rate"},
    {Statistic::PartTimeShare, "part_time_share"},
    {Statistic::DisabilityRate, "disability_rate"},
    {Statistic::OutsideShare, "outside_share"},
    {Statistic::WagesTotal, "wages_total"},
    {Statistic::TaxesTotal, "taxes_total"},
    {Statistic::BenefitsTotal, "benefits_total"},
}};
constexpr std::array<const char*, 2> kGenders{"male", "female"};
constexpr std::array<const char*, 3> kUnempBands{"young", "middle", "elderly"};
constexpr std::array<int, 6> kHours{8, 16, 24, 32, 40, 48};
}  // namespace

std::string_view to_string(Statistic s) {
    for (const auto& [k, n] : kStatNames) {
        if (k == s) return n;
    }
    return "?";
}

Statistic statistic_from_string(std::string_view s) {
    for (const auto& [k, n] : kStatNames) {
        if (n == s) return k;
    }
    throw ConfigError("unknown calibration statistic '" + std::string(s) + "'");
}

bool is_rate(Statistic s) {
    return s != Statistic::WagesTotal && s != Statistic::TaxesTotal && s != Statistic::BenefitsTotal;
}

std::string Target::label() const {
    std::string g = gender < 0 ? "all" : kGenders[static_cast<std::size_t>(gender)];
    return std::string(to_string(stat)) + "_" + g + "_" + std::to_string(age_lo) + "_" + std::to_string(age_hi);
}

void CalibrationTargets::validate() const {
    for (const auto& t : targets) {
        if (!(t.weight >= 0.0)) throw ConfigError("target " + t.label() + ": weight must be >= 0");
        if (is_rate(t.stat) && !(t.value >= 0.0 && t.value <= 1.0)) {
            throw ConfigError("target " + t.label() + ": rate must be in [0, 1]");
        }
        if (t.weight > 0.0 && t.value == 0.0) throw ConfigError("target " + t.label() + ": zero target with weight");
        if (t.gender < -1 || t.gender > 1) throw ConfigError("target " + t.label() + ": bad gender");
        if (t.age_lo > t.age_hi) throw ConfigError("target " + t.label() + ": age_lo > age_hi");
    }
}

CalibrationTargets load_targets(const std::filesystem::path& csv) {
    const auto tab = CsvTable::load(csv);
    const auto cs = tab.column("statistic"), cg = tab.column("gender"), cl = tab.column("age_lo"),
               ch = tab.column("age_hi"), cv = tab.column("value"), cw = tab.column("weight");
    CalibrationTargets out;
    for (const auto& row : tab.rows) {
        Target t;
        t.stat = statistic_from_string(row.at(cs));
        const auto& g = row.at(cg);
        t.gender = g == "all" ? -1 : g == "male" ? 0 : g == "female" ? 1 : throw ConfigError("bad gender '" + g + "'");
        t.age_lo = std::stoi(row.at(cl));
        t.age_hi = std::stoi(row.at(ch));
        t.value = std::stod(row.at(cv));
        t.weight = std::stod(row.at(cw));
        out.targets.push_back(t);
    }
    out.validate();
    return out;
}

void save_targets(const std::filesystem::path& csv, const CalibrationTargets& t) {
    CsvTable tab;
    tab.header = {"statistic", "gender", "age_lo", "age_hi", "value", "weight"};
    for (const auto& x : t.targets) {
        tab.add_row({std::string(to_string(x.stat)), x.gender < 0 ? "all" : kGenders[static_cast<std::size_t>(x.gender)],
                     std::to_string(x.age_lo), std::to_string(x.age_hi), format_double(x.value),
                     format_double(x.weight)});
    }
    tab.save(csv);
}

double statistic_value(const simulate::AggregateReport& r, const Target& t) {
    using simulate::sum_ages;
    const auto ratio = [](double a, double b) { return b > 0.0 ? a / b : 0.0; };
    const double alive = sum_ages(r.alive, t.age_lo, t.age_hi, t.gender);
    switch (t.stat) {
        case Statistic::EmploymentRate: return r.employment_rate(t.age_lo, t.age_hi, t.gender);
        case Statistic::UnemploymentRate: return r.unemployment_rate(t.age_lo, t.age_hi, t.gender);
        case Statistic::PartTimeShare:
            return ratio(sum_ages(r.pt_employed, t.age_lo, t.age_hi, t.gender),
                         sum_ages(r.employed, t.age_lo, t.age_hi, t.gender));
        case Statistic::DisabilityRate: return ratio(sum_ages(r.disabled, t.age_lo, t.age_hi, t.gender), alive);
        case Statistic::OutsideShare: return ratio(sum_ages(r.outside, t.age_lo, t.age_hi, t.gender), alive);
        case Statistic::WagesTotal: return r.total_wages();
        case Statistic::TaxesTotal: return r.total_taxes();
        case Statistic::BenefitsTotal: return r.total_benefits();
    }
    return 0.0;
}

double loss(const simulate::AggregateReport& r, const CalibrationTargets& t) {
    double l = 0.0;
    for (const auto& x : t.targets) {
        if (x.weight == 0.0) continue;
        const double e = (statistic_value(r, x) - x.value) / x.value;
        l += x.weight * e * e;
    }
    return l;
}

namespace {

int gender_index(std::string_view s) {
    if (s == "male") return 0;
    if (s == "female") return 1;
    throw ConfigError("calibration block: bad gender '" + std::string(s) + "'");
}

std::vector<std::string> split(std::string_view s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto dot = s.find('.', start);
        out.emplace_back(s.substr(start, dot - start));
        if (dot == std::string_view::npos) break;
        start = dot + 1;
    }
    return out;
}

double& kappa_ref(env::UtilityParams& u, const std::vector<std::string>& p) {
    const std::string& k = p[0];
    if (k == "kappa_work" && p.size() == 3) {
        const int h = std::stoi(p[2]);
        const auto it = std::find(kHours.begin(), kHours.end(), h);
        if (it == kHours.end()) throw ConfigError("calibration block: bad hours " + p[2]);
        return u.kappa_work[static_cast<std::size_t>(gender_index(p[1]))][static_cast<std::size_t>(it - kHours.begin())];
    }
    if (k == "kappa_unemp" && p.size() == 3) {
        for (std::size_t i = 0; i < kUnempBands.size(); ++i) {
            if (p[2] == kUnempBands[i]) return u.kappa_unemp[static_cast<std::size_t>(gender_index(p[1]))][i];
        }
        throw ConfigError("calibration block: bad unemployment band " + p[2]);
    }
    if (p.size() == 2) {
        const auto g = static_cast<std::size_t>(gender_index(p[1]));
        if (k == "kappa_home_care") return u.kappa_home_care[g];
        if (k == "kappa_under3") return u.kappa_under3[g];
        if (k == "kappa_student") return u.kappa_student[g];
        if (k == "kappa_retired") return u.kappa_retired[g];
        if (k == "kappa_sick") return u.kappa_sick[g];
    }
    throw ConfigError("unknown calibration block");
}

struct FrictionCell {
    bool full_time = true;
    int band = 0;
    int gender = 0;
};

FrictionCell friction_cell(const std::vector<std::string>& p) {
    if (p.size() != 4 || (p[1] != "ft" && p[1] != "pt")) throw ConfigError("unknown calibration block");
    FrictionCell c{p[1] == "ft", std::stoi(p[2]), gender_index(p[3])};
    if (c.band < 0 || c.band >= wage::FrictionTable::kBands) throw ConfigError("calibration block: bad band");
    return c;
}

std::array<double, 6>& friction_row(wage::FrictionTable& f, const FrictionCell& c) {
    return (c.full_time ? f.full_time : f.part_time)[static_cast<std::size_t>(c.band)];
}

}  // namespace

std::vector<Block> all_blocks() {
    std::vector<Block> b;
    for (const char* g : kGenders) {
        for (int h : kHours) b.push_back({std::string("kappa_work.") + g + "." + std::to_string(h), Block::Kind::Kappa});
        for (const char* u : kUnempBands) b.push_back({std::string("kappa_unemp.") + g + "." + u, Block::Kind::Kappa});
        for (const char* k : {"kappa_home_care", "kappa_under3", "kappa_student", "kappa_retired", "kappa_sick"}) {
            b.push_back({std::string(k) + "." + g, Block::Kind::Kappa});
        }
    }
    for (const char* kind : {"ft", "pt"}) {
        for (int band = 0; band < wage::FrictionTable::kBands; ++band) {
            for (const char* g : kGenders) {
                b.push_back({std::string("friction.") + kind + "." + std::to_string(band) + "." + g, Block::Kind::Friction});
            }
        }
    }
    return b;
}

Block block_by_name(std::string_view name) {
    for (auto& b : all_blocks()) {
        if (b.name == name) return b;
    }
    throw ConfigError("unknown calibration block '" + std::string(name) + "'");
}

double block_value(const ModelParams& p, const Block& b) {
    auto copy = p;
    const auto parts = split(b.name);
    if (b.kind == Block::Kind::Kappa) return kappa_ref(copy.utility, parts);
    const auto c = friction_cell(parts);
    return friction_row(copy.friction, c)[static_cast<std::size_t>(c.gender * 3 + 1)];
}

ModelParams perturb(const ModelParams& p, const Block& b, double step) {
    ModelParams out = p;
    const auto parts = split(b.name);
    if (b.kind == Block::Kind::Kappa) {
        kappa_ref(out.utility, parts) += step;
    } else {
        const auto c = friction_cell(parts);
        auto& row = friction_row(out.friction, c);
        for (int grp = 0; grp < 3; ++grp) {
            auto& v = row[static_cast<std::size_t>(c.gender * 3 + grp)];
            v = std::clamp(v * (1.0 + step), 0.0, 1.0);
        }
    }
    return out;
}

Evaluator lifecycle_evaluator(std::shared_ptr<const env::Model> base, LifeCycleEvalConfig cfg) {
    return [base = std::move(base), cfg = std::move(cfg)](const ModelParams& p, const solver::PolicyNetwork* warm,
                                                          std::uint64_t seed) {
        auto m = std::make_shared<env::Model>(*base);
        m->utility = p.utility;
        m->wage.friction = p.friction;
        m->utility.validate();
        Evaluation e;
        auto tc = cfg.train;
        tc.total_steps = cfg.refit_steps;
        tc.seed = derive_seed(seed, 0x636174ULL);
        auto net = solver::train_actor_critic(solver::lifecycle_factory(m), tc, warm).net;
        const auto pop = env::make_cohort(cfg.cohort_size, *m, derive_seed(seed, 0x706f70ULL));
        auto run = simulate::run_cohort(net, pop, *m, derive_seed(seed, 0x73696dULL),
                                        {solver::ActMode::Sample, false, false});
        e.report = *run.report;
        if (!cfg.population.empty()) {
            e.report = simulate::scale_to_population(e.report, simulate::population_factors(e.report, cfg.population));
        }
        e.policy = std::move(net);
        return e;
    };
}

CalibrationResult calibrate(const ModelParams& initial, const CalibrationTargets& targets, const CalibrateConfig& cfg,
                            const Evaluator& eval, const solver::PolicyNetwork* warm) {
    if (cfg.budget < 1) throw ConfigError("calibrate: budget must be >= 1");
    if (!(cfg.kappa_step > 0.0) || !(cfg.friction_step > 0.0) || !(cfg.shrink > 0.0 && cfg.shrink < 1.0)) {
        throw ConfigError("calibrate: steps must be > 0 and shrink in (0, 1)");
    }
    targets.validate();
    std::vector<Block> blocks;
    if (cfg.blocks.empty()) {
        blocks = all_blocks();
    } else {
        for (const auto& n : cfg.blocks) blocks.push_back(block_by_name(n));
    }
    std::map<std::string, double> step;
    for (const auto& b : blocks) step[b.name] = b.kind == Block::Kind::Kappa ? cfg.kappa_step : cfg.friction_step;

    // One seed for every evaluation: candidates differ only in their parameters.
    const std::uint64_t crn = derive_seed(cfg.seed, 0x63726eULL);
    CalibrationResult res;
    res.params = initial;
    auto first = eval(initial, warm, crn);
    res.initial_loss = res.best_loss = loss(first.report, targets);
    res.policy = std::move(first.policy);

    for (int it = 0; it < cfg.budget; ++it) {
        const auto& b = blocks[static_cast<std::size_t>(it) % blocks.size()];
        TraceEntry e;
        e.iteration = it;
        e.block = b.name;
        e.step = step[b.name];
        e.value_before = block_value(res.params, b);
        e.best_candidate_loss = std::numeric_limits<double>::infinity();
        std::optional<Evaluation> best;
        ModelParams best_params;
        const solver::PolicyNetwork* w = res.policy ? &*res.policy : warm;
        for (double sign : {+1.0, -1.0}) {
            const auto cand = perturb(res.params, b, sign * e.step);
            auto ev = eval(cand, w, crn);
            const double l = loss(ev.report, targets);
            if (l < e.best_candidate_loss) {
                e.best_candidate_loss = l;
                best = std::move(ev);
                best_params = cand;
            }
        }
        if (e.best_candidate_loss < res.best_loss) {
            e.accepted = true;
            res.best_loss = e.best_candidate_loss;
            res.params = best_params;
            if (best->policy) res.policy = std::move(best->policy);
        } else {
            step[b.name] *= cfg.shrink;
        }
        e.best_loss = res.best_loss;
        res.trace.push_back(e);
    }
    return res;
}

void write_calibration(const std::filesystem::path& dir, const CalibrationResult& r, const wage::WageParams& wage) {
    std::filesystem::create_directories(dir);
    save_json_file(dir / "utility.json", env::to_json(r.params.utility));
    save_json_file(dir / "wages.json", wage::to_json(wage::WageModel{wage, r.params.friction}));
    CsvTable t;
    t.header = {"iteration", "block", "step", "value_before", "candidate_loss", "accepted", "best_loss"};
    for (const auto& e : r.trace) {
        t.add_row({std::to_string(e.iteration), e.block, format_double(e.step), format_double(e.value_before),
                   format_double(e.best_candidate_loss), e.accepted ? "1" : "0", format_double(e.best_loss)});
    }
    t.save(dir / "trace.csv");
}

}  // namespace lcm::calibrate
