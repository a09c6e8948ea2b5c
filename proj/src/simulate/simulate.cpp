#include "lcm/simulate/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "lcm/common/errors.hpp"
#include "lcm/env/features.hpp"

namespace lcm::simulate {

using S = EmploymentState;

int duration_band(double start_age) {
    int b = 0;
    for (int i = 0; i < kDurationBands; ++i) {
        if (start_age >= kDurationBandLower[static_cast<std::size_t>(i)]) b = i;
    }
    return b;
}

int duration_bin(int er_days) {
    int b = 0;
    while (b < kDurationBins - 1 && er_days >= kDurationEdges[static_cast<std::size_t>(b)]) ++b;
    return b;
}

int rate_bin(double rate) {
    if (rate < 0.0) return 0;
    if (rate >= 1.0) return kRateBins - 1;
    return 1 + std::min(9, static_cast<int>(rate * 10.0));
}

namespace {

int age_row(double age) { return std::clamp(static_cast<int>(std::floor(age)) - kFirstAge, 0, kReportAges - 1); }

// Open unemployment spell of one agent.
struct SpellTracker {
    bool open = false;
    double start_age = 0.0;
    int er_days = 0;

    void feed(const QuarterRecord& r, AggregateReport& rep) {
        if (is_unemployed(static_cast<S>(r.state))) {
            if (!open) {
                open = true;
                start_age = r.age();
                er_days = 0;
            }
            er_days += r.er_days;
        } else {
            close(rep);
        }
    }
    void close(AggregateReport& rep) {
        if (open && er_days > 0) rep.add_spell(start_age, er_days);
        open = false;
    }
};

int er_days_paid(const env::AgentState& a, const rules::Flows& f) {
    if (f[rules::Benefit::UnemploymentEarningsRelated] <= 0.0) return 0;
    if (a.state == S::ExtendedUnemployed) return kErDaysPerQuarter;
    return std::clamp(a.er_max_days - a.er_days_used, 0, kErDaysPerQuarter);
}

template <typename A, typename B>
void copy_floats(A& dst, const B& src) {
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = static_cast<float>(src[i]);
}

// Records for the living agents of one paid quarter.
void make_records(const env::HouseholdState& hh, const env::QuarterCash& cash, const env::Model& m, bool rates,
                  std::uint32_t id, std::array<QuarterRecord, 2>& out, int& n) {
    n = 0;
    std::array<bool, 2> owner{false, false};
    for (int u = 0; u < cash.units; ++u) {
        for (int i = 0; i < 2; ++i) {
            if (cash.unit_of[static_cast<std::size_t>(i)] == u && hh.agents[static_cast<std::size_t>(i)].alive()) {
                owner[static_cast<std::size_t>(i)] = true;
                break;
            }
        }
    }
    std::array<rules::HouseholdSnapshot, 2> snaps{};
    env::QuarterCash layout;
    const bool phase_static = hh.age() >= kDecisionEndAge;
    const bool want_rates = rates && !phase_static && hh.quarter % 4 == 0;
    if (want_rates) snaps = env::benefit_units(hh, m, layout);

    for (int i = 0; i < 2; ++i) {
        const auto& a = hh.agents[static_cast<std::size_t>(i)];
        if (!a.alive()) continue;
        const auto* f = cash.adult_flows(i);
        if (!f) continue;
        auto& r = out[static_cast<std::size_t>(n++)];
        r = QuarterRecord{};
        r.household = id;
        r.who = static_cast<std::uint8_t>(i);
        r.gender = static_cast<std::uint8_t>(index_of(a.gender));
        r.state = static_cast<std::uint8_t>(index_of(a.state));
        r.hours = static_cast<std::uint8_t>(is_working(a.state) ? a.hours : 0);
        r.quarter = static_cast<std::uint16_t>(hh.quarter);
        r.phase = phase_static ? 1 : 0;
        r.er_days = static_cast<std::uint8_t>(er_days_paid(a, *f));
        rules::Flows total = *f;
        const auto& unit = cash.unit[static_cast<std::size_t>(cash.unit_of[static_cast<std::size_t>(i)])];
        double vat = 0.0;
        if (owner[static_cast<std::size_t>(i)]) {
            total += unit.household;
            vat = unit.vat;
        }
        r.gross = static_cast<float>(total.gross);
        r.net = static_cast<float>(total.identity_net());
        r.consumption = static_cast<float>(cash.consumption[static_cast<std::size_t>(i)]);
        r.vat = static_cast<float>(vat);
        copy_floats(r.benefits, total.benefits);
        copy_floats(r.taxes, total.taxes);
        copy_floats(r.contributions, total.contributions);
        copy_floats(r.employer, total.employer);

        if (want_rates && a.age < 65.0 && is_working(a.state) && f->gross > 0.0) {
            const int u = layout.unit_of[static_cast<std::size_t>(i)];
            const int slot = layout.slot_of[static_cast<std::size_t>(i)];
            const auto& snap = snaps[static_cast<std::size_t>(u)];
            r.emtr = static_cast<float>(rules::emtr(snap, m.rules, 100.0, slot).total);
            auto out_of_work = snap;
            auto& ad = out_of_work.adults[static_cast<std::size_t>(slot)];
            ad.state = S::EarningsRelatedUnemployed;
            ad.benefit_basis_mo = ad.wage_q / 3.0;
            ad.wage_q = 0.0;
            ad.benefit_days_used = 0;
            try {
                r.ptr = static_cast<float>(rules::ptr(snap, out_of_work, m.rules));
            } catch (const ContractViolation&) {
                r.ptr = std::numeric_limits<float>::quiet_NaN();
            }
        }
    }
}

constexpr int kChunk = 64;

}  // namespace

CohortRun run_cohort(const solver::PolicyNetwork& policy, const population::CohortPopulation& pop,
                     const env::Model& m, std::uint64_t seed, const RunOptions& opt) {
    if (policy.input_dim() != env::kFeatureCount || policy.action_count() != env::kActionCount) {
        throw ConfigError("run_cohort: policy does not match the life-cycle environment");
    }
    const int N = pop.size();
    constexpr int F = env::kFeatureCount;
    constexpr int A = env::kActionCount;
    std::vector<env::HouseholdState> hh = pop.households;
    std::vector<Rng> act_rng;
    act_rng.reserve(static_cast<std::size_t>(N));
    for (int i = 0; i < N; ++i) act_rng.emplace_back(derive_seed(seed, 0x616374ULL, static_cast<std::uint64_t>(i)));
    std::vector<std::array<SpellTracker, 2>> spells(static_cast<std::size_t>(N));
    std::vector<std::vector<QuarterRecord>> logs(opt.keep_log ? static_cast<std::size_t>(N) : 0);
    const int chunks = (N + kChunk - 1) / kChunk;
    std::vector<AggregateReport> part(static_cast<std::size_t>(chunks));
    std::vector<env::TransitionAudit> audits(static_cast<std::size_t>(chunks));
    std::vector<std::uint8_t> done(static_cast<std::size_t>(N), 0);

    Eigen::MatrixXf X(F, 2 * static_cast<Eigen::Index>(N));
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(A) * 2 * static_cast<std::size_t>(N));
    Eigen::MatrixXf logits(A, 2 * static_cast<Eigen::Index>(N));
    constexpr int kBlock = 2048;

    auto consume = [&](int i, const env::HouseholdState& h, const env::QuarterCash& cash) {
        std::array<QuarterRecord, 2> rec;
        int n = 0;
        make_records(h, cash, m, opt.rates, static_cast<std::uint32_t>(i), rec, n);
        auto& rep = part[static_cast<std::size_t>(i / kChunk)];
        for (int k = 0; k < n; ++k) {
            const auto& r = rec[static_cast<std::size_t>(k)];
            rep.add(r);
            spells[static_cast<std::size_t>(i)][r.who].feed(r, rep);
            if (opt.keep_log) logs[static_cast<std::size_t>(i)].push_back(r);
        }
    };

    bool any = N > 0;
    while (any) {
#pragma omp parallel for schedule(static)
        for (int i = 0; i < N; ++i) {
            const auto& h = hh[static_cast<std::size_t>(i)];
            const auto ctx = m.context(h);
            for (int who = 0; who < 2; ++who) {
                const std::size_t col = static_cast<std::size_t>(2 * i + who);
                env::encode_features(h, who, m, std::span<float>(X.data() + col * F, F));
                const auto lm = env::legal_mask(h.agents[static_cast<std::size_t>(who)], ctx);
                for (int a = 0; a < A; ++a) mask[col * A + static_cast<std::size_t>(a)] = lm[static_cast<std::size_t>(a)];
            }
        }
        const int cols = 2 * N;
        const int blocks = (cols + kBlock - 1) / kBlock;
#pragma omp parallel for schedule(static)
        for (int b = 0; b < blocks; ++b) {
            const int c0 = b * kBlock;
            const int w = std::min(kBlock, cols - c0);
            solver::PolicyNetwork::Cache c;
            policy.forward(X.middleCols(c0, w), c);
            logits.middleCols(c0, w) = c.logits;
        }
#pragma omp parallel for schedule(static, 1)
        for (int ch = 0; ch < chunks; ++ch) {
            std::vector<float> p(A);
            for (int i = ch * kChunk; i < std::min(N, (ch + 1) * kChunk); ++i) {
                if (done[static_cast<std::size_t>(i)]) continue;
                std::array<env::Action, 2> act{};
                for (int who = 0; who < 2; ++who) {
                    const std::size_t col = static_cast<std::size_t>(2 * i + who);
                    solver::masked_softmax(&logits(0, static_cast<Eigen::Index>(col)), &mask[col * A], A, p.data());
                    act[static_cast<std::size_t>(who)] =
                        static_cast<env::Action>(solver::select_action(p, opt.mode, act_rng[static_cast<std::size_t>(i)]));
                }
                const auto r = env::step(hh[static_cast<std::size_t>(i)], act, m, &audits[static_cast<std::size_t>(ch)],
                                         [&](const env::HouseholdState& h, const env::QuarterCash& cash) { consume(i, h, cash); });
                if (r.done) {
                    done[static_cast<std::size_t>(i)] = 1;
                    for (auto& t : spells[static_cast<std::size_t>(i)]) t.close(part[static_cast<std::size_t>(ch)]);
                }
            }
        }
        any = std::any_of(done.begin(), done.end(), [](std::uint8_t d) { return d == 0; });
    }

    CohortRun out;
    out.report = std::make_unique<AggregateReport>();
    out.report->households = N;
    for (int c = 0; c < chunks; ++c) {
        *out.report += part[static_cast<std::size_t>(c)];
        out.audit += audits[static_cast<std::size_t>(c)];
    }
    out.report->households = N;
    if (opt.keep_log) {
        out.log.households = N;
        std::size_t total = 0;
        for (const auto& l : logs) total += l.size();
        out.log.records.reserve(total);
        for (auto& l : logs) out.log.records.insert(out.log.records.end(), l.begin(), l.end());
    }
    return out;
}

void AggregateReport::add(const QuarterRecord& r) {
    const auto a = static_cast<std::size_t>(age_row(r.age()));
    const auto g = static_cast<std::size_t>(r.gender);
    const auto s = static_cast<S>(r.state);
    constexpr double q = 0.25;
    alive[a][g] += q;
    occupancy[a][r.state] += q;
    if (is_working(s)) {
        employed[a][g] += q;
        fte[a][g] += q * std::min(40, static_cast<int>(r.hours)) / 40.0;
        (is_part_time_hours(r.hours) ? pt_employed : ft_employed)[a][g] += q;
        (is_part_time_hours(r.hours) ? wages_pt : wages_ft)[a] += r.gross;
    }
    if (is_unemployed(s)) unemployed[a][g] += q;
    if (is_pensioner(s)) pensioners[a][g] += q;
    if (s == S::Disabled) disabled[a][g] += q;
    if (s == S::OutsideWorkforce) outside[a][g] += q;
    hours[a][static_cast<std::size_t>(is_working(s) ? r.hours / 8 : 0)] += q;
    for (std::size_t k = 0; k < r.benefits.size(); ++k) benefits[a][k] += r.benefits[k];
    for (std::size_t k = 0; k < r.taxes.size(); ++k) taxes[a][k] += r.taxes[k];
    for (std::size_t k = 0; k < r.contributions.size(); ++k) contributions[a][k] += r.contributions[k];
    for (std::size_t k = 0; k < r.employer.size(); ++k) employer[a][k] += r.employer[k];
    wages[a] += r.gross;
    consumption[a] += r.consumption;
    vat[a] += r.vat;
    net[a] += r.net;
    if (std::isfinite(r.emtr)) emtr[a][static_cast<std::size_t>(rate_bin(r.emtr))] += 1.0;
    if (std::isfinite(r.ptr)) ptr[a][static_cast<std::size_t>(rate_bin(r.ptr))] += 1.0;
}

void AggregateReport::add_spell(double start_age, int er_days) {
    const auto a = static_cast<std::size_t>(age_row(start_age));
    er_spells[a][static_cast<std::size_t>(duration_bin(er_days))] += 1.0;
    er_spell_days[a] += er_days;
}

namespace {
template <typename T, std::size_t N>
void add_into(std::array<T, N>& a, const std::array<T, N>& b) {
    for (std::size_t i = 0; i < N; ++i) {
        if constexpr (std::is_arithmetic_v<T>) {
            a[i] += b[i];
        } else {
            add_into(a[i], b[i]);
        }
    }
}
template <typename T, std::size_t N>
void scale_into(std::array<T, N>& a, double k) {
    for (auto& v : a) {
        if constexpr (std::is_arithmetic_v<T>) {
            v *= k;
        } else {
            scale_into(v, k);
        }
    }
}

// Visits every age-indexed table of a report (or a pair of reports).
template <typename R, typename Fn>
void for_each_table(R& r, Fn&& fn) {
    fn(r.alive);
    fn(r.employed);
    fn(r.unemployed);
    fn(r.fte);
    fn(r.ft_employed);
    fn(r.pt_employed);
    fn(r.pensioners);
    fn(r.disabled);
    fn(r.outside);
    fn(r.occupancy);
    fn(r.benefits);
    fn(r.taxes);
    fn(r.contributions);
    fn(r.employer);
    fn(r.wages);
    fn(r.wages_ft);
    fn(r.wages_pt);
    fn(r.consumption);
    fn(r.vat);
    fn(r.net);
    fn(r.hours);
    fn(r.er_spells);
    fn(r.er_spell_days);
    fn(r.emtr);
    fn(r.ptr);
}

template <typename T>
double row_sum(const T& v) {
    if constexpr (std::is_arithmetic_v<T>) {
        return v;
    } else {
        double s = 0.0;
        for (const auto& x : v) s += row_sum(x);
        return s;
    }
}
}  // namespace

AggregateReport& AggregateReport::operator+=(const AggregateReport& o) {
    households += o.households;
    add_into(alive, o.alive);
    add_into(employed, o.employed);
    add_into(unemployed, o.unemployed);
    add_into(fte, o.fte);
    add_into(ft_employed, o.ft_employed);
    add_into(pt_employed, o.pt_employed);
    add_into(pensioners, o.pensioners);
    add_into(disabled, o.disabled);
    add_into(outside, o.outside);
    add_into(occupancy, o.occupancy);
    add_into(benefits, o.benefits);
    add_into(taxes, o.taxes);
    add_into(contributions, o.contributions);
    add_into(employer, o.employer);
    add_into(wages, o.wages);
    add_into(wages_ft, o.wages_ft);
    add_into(wages_pt, o.wages_pt);
    add_into(consumption, o.consumption);
    add_into(vat, o.vat);
    add_into(net, o.net);
    add_into(hours, o.hours);
    add_into(er_spells, o.er_spells);
    add_into(er_spell_days, o.er_spell_days);
    add_into(emtr, o.emtr);
    add_into(ptr, o.ptr);
    return *this;
}

double sum_ages(const AggregateReport::ByAge<AggregateReport::G2>& t, int lo, int hi, int gender) {
    double s = 0.0;
    for (int age = std::max(lo, kFirstAge); age <= std::min(hi, kFirstAge + kReportAges - 1); ++age) {
        const auto& row = t[static_cast<std::size_t>(age - kFirstAge)];
        s += gender < 0 ? row[0] + row[1] : row[static_cast<std::size_t>(gender)];
    }
    return s;
}

double AggregateReport::employment_rate(int lo, int hi, int gender) const {
    const double n = sum_ages(alive, lo, hi, gender);
    return n > 0.0 ? sum_ages(employed, lo, hi, gender) / n : 0.0;
}

double AggregateReport::unemployment_rate(int lo, int hi, int gender) const {
    const double e = sum_ages(employed, lo, hi, gender);
    const double u = sum_ages(unemployed, lo, hi, gender);
    return e + u > 0.0 ? u / (e + u) : 0.0;
}

double AggregateReport::workforce(int lo, int hi, bool include_pensioners) const {
    double w = sum_ages(employed, lo, hi, -1) + sum_ages(unemployed, lo, hi, -1);
    if (include_pensioners) {
        // Working pensioners are already counted as employed.
        for (int age = std::max(lo, kFirstAge); age <= std::min(hi, kFirstAge + kReportAges - 1); ++age) {
            const auto& occ = occupancy[static_cast<std::size_t>(age - kFirstAge)];
            w += occ[static_cast<std::size_t>(index_of(S::Retired))] + occ[static_cast<std::size_t>(index_of(S::Disabled))];
        }
    }
    return w;
}

double AggregateReport::occupancy_share(int age, EmploymentState s) const {
    const auto& row = occupancy[static_cast<std::size_t>(age - kFirstAge)];
    const double total = row_sum(row);
    return total > 0.0 ? row[static_cast<std::size_t>(index_of(s))] / total : 0.0;
}

double AggregateReport::total_fte() const { return row_sum(fte); }
double AggregateReport::total_employed() const { return row_sum(employed); }
double AggregateReport::total_benefits() const { return row_sum(benefits); }
double AggregateReport::total_benefit(rules::Benefit b) const {
    double s = 0.0;
    for (const auto& row : benefits) s += row[static_cast<std::size_t>(b)];
    return s;
}
double AggregateReport::total_taxes() const { return row_sum(taxes) + row_sum(vat); }
double AggregateReport::total_contributions() const { return row_sum(contributions) + row_sum(employer); }
double AggregateReport::total_wages() const { return row_sum(wages); }
double AggregateReport::total_consumption() const { return row_sum(consumption); }

std::array<std::array<double, kDurationBins>, kDurationBands> AggregateReport::duration_table() const {
    std::array<std::array<double, kDurationBins>, kDurationBands> t{};
    for (int row = 0; row < kReportAges; ++row) {
        const int band = duration_band(kFirstAge + row);
        for (int b = 0; b < kDurationBins; ++b) {
            t[static_cast<std::size_t>(band)][static_cast<std::size_t>(b)] += er_spells[static_cast<std::size_t>(row)][static_cast<std::size_t>(b)];
        }
    }
    for (auto& r : t) {
        const double s = std::accumulate(r.begin(), r.end(), 0.0);
        if (s > 0.0) {
            for (auto& v : r) v /= s;
        }
    }
    return t;
}

double AggregateReport::er_spell_count() const { return row_sum(er_spells); }

double AggregateReport::mean_er_spell_days() const {
    const double n = er_spell_count();
    return n > 0.0 ? row_sum(er_spell_days) / n : 0.0;
}

AggregateReport aggregate(const EpisodeLog& log) {
    AggregateReport rep;
    rep.households = log.households;
    std::array<SpellTracker, 2> open{};
    std::uint32_t current = 0;
    bool started = false;
    for (const auto& r : log.records) {
        if (!started || r.household != current) {
            for (auto& t : open) t.close(rep);
            current = r.household;
            started = true;
        }
        rep.add(r);
        open[r.who].feed(r, rep);
    }
    for (auto& t : open) t.close(rep);
    return rep;
}

std::vector<Spell> scan_unemployment_spells(const EpisodeLog& log) {
    std::map<std::pair<std::uint32_t, int>, std::vector<const QuarterRecord*>> by_agent;
    for (const auto& r : log.records) by_agent[{r.household, r.who}].push_back(&r);
    std::vector<Spell> out;
    for (auto& [key, recs] : by_agent) {
        std::sort(recs.begin(), recs.end(), [](const auto* a, const auto* b) { return a->quarter < b->quarter; });
        std::size_t i = 0;
        while (i < recs.size()) {
            if (!is_unemployed(static_cast<S>(recs[i]->state))) {
                ++i;
                continue;
            }
            std::size_t j = i;
            Spell s{key.first, key.second, recs[i]->age(), 0, 0};
            while (j < recs.size() && is_unemployed(static_cast<S>(recs[j]->state)) &&
                   recs[j]->quarter == recs[i]->quarter + (j - i)) {
                s.er_days += recs[j]->er_days;
                ++s.quarters;
                ++j;
            }
            out.push_back(s);
            i = j;
        }
    }
    return out;
}

AggregateReport scale_to_population(const AggregateReport& r, const std::array<double, kReportAges>& factors) {
    for (double f : factors) {
        if (!(f >= 0.0)) throw ContractViolation("scale_to_population: factors must be >= 0");
    }
    AggregateReport out = r;
    for_each_table(out, [&](auto& table) {
        for (std::size_t a = 0; a < table.size(); ++a) {
            if constexpr (std::is_arithmetic_v<std::decay_t<decltype(table[a])>>) {
                table[a] *= factors[a];
            } else {
                scale_into(table[a], factors[a]);
            }
        }
    });
    return out;
}

std::array<double, kReportAges> population_factors(const AggregateReport& r,
                                                   const std::vector<std::pair<int, double>>& counts) {
    std::array<double, kReportAges> f{};
    for (const auto& [age, n] : counts) {
        if (n < 0.0) throw ConfigError("population counts must be >= 0");
        if (age < kFirstAge || age >= kFirstAge + kReportAges) continue;
        const auto row = static_cast<std::size_t>(age - kFirstAge);
        const double sim = r.alive[row][0] + r.alive[row][1];
        f[row] = sim > 0.0 ? n / sim : 0.0;
    }
    return f;
}

std::vector<std::pair<int, double>> load_population_counts(const std::filesystem::path& csv) {
    const auto t = CsvTable::load(csv);
    const auto ca = t.column("age");
    const auto cn = t.column("count");
    std::vector<std::pair<int, double>> out;
    for (const auto& row : t.rows) out.emplace_back(std::stoi(row.at(ca)), std::stod(row.at(cn)));
    return out;
}

std::vector<std::pair<std::string, double>> report_cells(const AggregateReport& r) {
    std::vector<std::pair<std::string, double>> c;
    c.emplace_back("fte_total", r.total_fte());
    c.emplace_back("employed_total", r.total_employed());
    double ft_n = 0, pt_n = 0;
    for (int a = 0; a < kReportAges; ++a) {
        for (int g = 0; g < 2; ++g) {
            ft_n += r.ft_employed[static_cast<std::size_t>(a)][static_cast<std::size_t>(g)];
            pt_n += r.pt_employed[static_cast<std::size_t>(a)][static_cast<std::size_t>(g)];
        }
    }
    c.emplace_back("employed_full_time", ft_n);
    c.emplace_back("employed_part_time", pt_n);
    c.emplace_back("employment_rate_18_64", r.employment_rate());
    c.emplace_back("employment_rate_18_64_male", r.employment_rate(18, 64, 0));
    c.emplace_back("employment_rate_18_64_female", r.employment_rate(18, 64, 1));
    c.emplace_back("unemployment_rate_18_64", r.unemployment_rate());
    for (int lo : {18, 30, 40, 50, 60}) {
        const int hi = lo == 18 ? 29 : lo + 9;
        c.emplace_back("employment_rate_" + std::to_string(lo) + "_" + std::to_string(std::min(hi, 64)),
                       r.employment_rate(lo, std::min(hi, 64)));
    }
    c.emplace_back("wages_total", r.total_wages());
    double ft = 0, pt = 0;
    for (int a = 0; a < kReportAges; ++a) {
        ft += r.wages_ft[static_cast<std::size_t>(a)];
        pt += r.wages_pt[static_cast<std::size_t>(a)];
    }
    c.emplace_back("wages_ft", ft);
    c.emplace_back("wages_pt", pt);
    for (int b = 0; b < rules::kBenefitCount; ++b) {
        c.emplace_back("benefit_" + std::string(rules::to_string(static_cast<rules::Benefit>(b))),
                       r.total_benefit(static_cast<rules::Benefit>(b)));
    }
    c.emplace_back("benefits_total", r.total_benefits());
    c.emplace_back("taxes_total", r.total_taxes());
    c.emplace_back("contributions_total", r.total_contributions());
    c.emplace_back("public_net", r.public_net());
    c.emplace_back("consumption_total", r.total_consumption());
    c.emplace_back("er_spells", r.er_spell_count());
    c.emplace_back("er_spell_mean_days", r.mean_er_spell_days());
    const auto dt = r.duration_table();
    for (int b = 0; b < kDurationBands; ++b) {
        for (int k = 0; k < kDurationBins; ++k) {
            c.emplace_back(std::string("duration_") + kDurationBandNames[static_cast<std::size_t>(b)] + "_" +
                               kDurationBinNames[static_cast<std::size_t>(k)],
                           dt[static_cast<std::size_t>(b)][static_cast<std::size_t>(k)]);
        }
    }
    return c;
}

void write_report(const std::filesystem::path& dir, const AggregateReport& r) {
    std::filesystem::create_directories(dir);
    const auto fd = [](double v) { return format_double(v); };

    CsvTable emp;
    emp.header = {"age", "gender", "alive", "employed", "unemployed", "fte", "full_time", "part_time", "pensioners",
                  "employment_rate", "unemployment_rate"};
    for (int a = 0; a < kReportAges; ++a) {
        for (int g = 0; g < 2; ++g) {
            const auto A = static_cast<std::size_t>(a);
            const auto G = static_cast<std::size_t>(g);
            const double al = r.alive[A][G], e = r.employed[A][G], u = r.unemployed[A][G];
            emp.add_row({std::to_string(kFirstAge + a), g == 0 ? "male" : "female", fd(al), fd(e), fd(u), fd(r.fte[A][G]),
                         fd(r.ft_employed[A][G]), fd(r.pt_employed[A][G]), fd(r.pensioners[A][G]),
                         fd(al > 0 ? e / al : 0.0), fd(e + u > 0 ? u / (e + u) : 0.0)});
        }
    }
    emp.save(dir / "employment_by_age.csv");

    CsvTable occ;
    occ.header = {"age"};
    for (int s = 0; s < kEmploymentStateCount; ++s) occ.header.emplace_back(short_name(static_cast<S>(s)));
    for (int a = 0; a < kReportAges; ++a) {
        std::vector<std::string> row{std::to_string(kFirstAge + a)};
        for (int s = 0; s < kEmploymentStateCount; ++s) row.push_back(fd(r.occupancy_share(kFirstAge + a, static_cast<S>(s))));
        occ.add_row(std::move(row));
    }
    occ.save(dir / "occupancy_by_age.csv");

    CsvTable fin;
    fin.header = {"group", "item", "eur"};
    for (int b = 0; b < rules::kBenefitCount; ++b) {
        fin.add_row({"benefit", std::string(rules::to_string(static_cast<rules::Benefit>(b))),
                     fd(r.total_benefit(static_cast<rules::Benefit>(b)))});
    }
    for (int t = 0; t < rules::kTaxCount; ++t) {
        double s = 0;
        for (const auto& row : r.taxes) s += row[static_cast<std::size_t>(t)];
        fin.add_row({"tax", std::string(rules::to_string(static_cast<rules::Tax>(t))), fd(s)});
    }
    fin.add_row({"tax", "vat", fd(row_sum(r.vat))});
    for (int k = 0; k < rules::kContributionCount; ++k) {
        double s = 0;
        for (const auto& row : r.contributions) s += row[static_cast<std::size_t>(k)];
        fin.add_row({"contribution", std::string(rules::to_string(static_cast<rules::Contribution>(k))), fd(s)});
    }
    for (int k = 0; k < rules::kEmployerContributionCount; ++k) {
        double s = 0;
        for (const auto& row : r.employer) s += row[static_cast<std::size_t>(k)];
        fin.add_row({"employer", std::string(rules::to_string(static_cast<rules::EmployerContribution>(k))), fd(s)});
    }
    fin.add_row({"wages", "total", fd(r.total_wages())});
    fin.add_row({"wages", "full_time", fd(row_sum(r.wages_ft))});
    fin.add_row({"wages", "part_time", fd(row_sum(r.wages_pt))});
    fin.add_row({"consumption", "total", fd(r.total_consumption())});
    fin.add_row({"public", "net", fd(r.public_net())});
    fin.save(dir / "finances.csv");

    CsvTable hrs;
    hrs.header = {"hours", "agent_years"};
    for (int b = 0; b < kHoursBins; ++b) {
        double s = 0;
        for (const auto& row : r.hours) s += row[static_cast<std::size_t>(b)];
        hrs.add_row({std::to_string(8 * b), fd(s)});
    }
    hrs.save(dir / "hours_histogram.csv");

    CsvTable dur;
    dur.header = {"age"};
    for (const char* n : kDurationBinNames) dur.header.emplace_back(n);
    const auto dt = r.duration_table();
    for (int b = 0; b < kDurationBands; ++b) {
        std::vector<std::string> row{kDurationBandNames[static_cast<std::size_t>(b)]};
        for (double v : dt[static_cast<std::size_t>(b)]) row.push_back(fd(v));
        dur.add_row(std::move(row));
    }
    dur.save(dir / "unemployment_durations.csv");

    CsvTable rates;
    rates.header = {"bin", "emtr", "ptr"};
    for (int b = 0; b < kRateBins; ++b) {
        double e = 0, p = 0;
        for (const auto& row : r.emtr) e += row[static_cast<std::size_t>(b)];
        for (const auto& row : r.ptr) p += row[static_cast<std::size_t>(b)];
        const std::string label = b == 0 ? "<0" : b == kRateBins - 1 ? ">=1" : format_double((b - 1) / 10.0);
        rates.add_row({label, fd(e), fd(p)});
    }
    rates.save(dir / "tax_rate_histograms.csv");

    Json summary = Json::object();
    for (const auto& [k, v] : report_cells(r)) summary[k] = v;
    summary["households"] = r.households;
    summary["workforce_18_64"] = r.workforce();
    summary["workforce_18_64_with_pensioners"] = r.workforce(18, 64, true);
    save_json_file(dir / "summary.json", summary);
}

std::vector<CellStats> cell_stats(const std::vector<std::vector<std::pair<std::string, double>>>& per) {
    std::vector<CellStats> out;
    if (per.empty()) return out;
    const std::size_t n = per.size();
    for (std::size_t c = 0; c < per.front().size(); ++c) {
        CellStats s;
        s.name = per.front()[c].first;
        for (const auto& rep : per) {
            if (rep.size() != per.front().size() || rep[c].first != s.name) {
                throw ContractViolation("cell_stats: mismatched report shapes");
            }
            s.mean += rep[c].second;
        }
        s.mean /= static_cast<double>(n);
        for (const auto& rep : per) s.sd += (rep[c].second - s.mean) * (rep[c].second - s.mean);
        s.sd = n > 1 ? std::sqrt(s.sd / static_cast<double>(n - 1)) : 0.0;
        out.push_back(std::move(s));
    }
    return out;
}

std::uint64_t repeat_seed(const RepeatConfig& cfg, int i) {
    if (!cfg.repeat_seeds.empty()) return cfg.repeat_seeds.at(static_cast<std::size_t>(i));
    return derive_seed(cfg.seed, 0x726570ULL, static_cast<std::uint64_t>(i));
}

RepeatResult repeat_protocol(const solver::PolicyNetwork& base, std::shared_ptr<const env::Model> m,
                             const RepeatConfig& cfg) {
    if (cfg.repeats < 2) throw ConfigError("repeat_protocol: need at least 2 repeats");
    if (cfg.cohort_size < 1) throw ConfigError("repeat_protocol: cohort size must be >= 1");
    if (!cfg.repeat_seeds.empty() && static_cast<int>(cfg.repeat_seeds.size()) < cfg.repeats) {
        throw ConfigError("repeat_protocol: fewer repeat seeds than repeats");
    }
    RepeatResult out;
    AggregateReport sum;
    for (int i = 0; i < cfg.repeats; ++i) {
        const std::uint64_t s = repeat_seed(cfg, i);
        solver::PolicyNetwork net = base;
        if (cfg.refit_steps > 0) {
            auto tc = cfg.train;
            tc.total_steps = cfg.refit_steps;
            tc.seed = derive_seed(s, 0x726566ULL);
            net = solver::train_actor_critic(solver::lifecycle_factory(m), tc, &base).net;
        }
        const auto pop = env::make_cohort(cfg.cohort_size, *m, derive_seed(s, 0x706f70ULL));
        const auto run = run_cohort(net, pop, *m, derive_seed(s, 0x73696dULL), cfg.run);
        out.cells.push_back(report_cells(*run.report));
        sum += *run.report;
    }
    out.stats = cell_stats(out.cells);
    std::array<double, kReportAges> k{};
    k.fill(1.0 / cfg.repeats);
    out.mean_report = scale_to_population(sum, k);
    out.mean_report.households = cfg.cohort_size;
    return out;
}

}  // namespace lcm::simulate
