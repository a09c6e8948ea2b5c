#include "lcm/cli/cli.hpp"

#include <omp.h>

#include <chrono>
#include <cmath>
#include <iostream>
#include <map>

#include "CLI11.hpp"
#include "lcm/calibrate/calibrate.hpp"
#include "lcm/common/errors.hpp"
#include "lcm/reform/reform.hpp"
#include "lcm/simulate/simulate.hpp"

namespace lcm::cli {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kTrainStream = 0x747261696eULL;
constexpr std::uint64_t kPopStream = 0x706f70ULL;
constexpr std::uint64_t kSimStream = 0x73696dULL;
constexpr std::uint64_t kRepeatStream = 0x726570ULL;
constexpr std::uint64_t kCalStream = 0x63616cULL;

void check_keys(const Json& j, std::initializer_list<const char*> keys, const std::string& ctx) {
    if (!j.is_object()) throw ConfigError(ctx + ": expected an object");
    for (const auto& [k, v] : j.items()) {
        if (k.rfind("_comment", 0) == 0) continue;
        if (std::none_of(keys.begin(), keys.end(), [&](const char* a) { return k == a; })) {
            throw ConfigError(ctx + ": unknown key '" + k + "'");
        }
    }
}

fs::path resolve(const fs::path& base, const std::string& p) {
    const fs::path x(p);
    return (x.is_absolute() ? x : base / x).lexically_normal();
}

fs::path existing(const fs::path& p, const std::string& what) {
    if (!fs::exists(p)) throw ConfigError(what + " not found: " + p.string());
    return p;
}

template <typename T>
T get(const Json& j, const char* key, T fallback, const std::string& ctx) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const Json::exception&) {
        throw ConfigError(ctx + "." + key + ": wrong type");
    }
}

solver::ActMode parse_mode(const std::string& s) {
    if (s == "sample") return solver::ActMode::Sample;
    if (s == "greedy") return solver::ActMode::Greedy;
    throw ConfigError("mode must be 'sample' or 'greedy'");
}

void prepare_out(const RunConfig& c) {
    fs::create_directories(c.out);
    write_text_file(c.out / "config.json", c.config_text);
    save_json_file(c.out / "run.json", c.resolved());
}

solver::PolicyNetwork load_policy(const RunConfig& c) {
    if (!c.checkpoint) throw ConfigError(c.command + ": a checkpoint is required");
    auto ck = solver::load_checkpoint(*c.checkpoint);
    if (ck.net.input_dim() != env::kFeatureCount || ck.net.action_count() != env::kActionCount) {
        throw ConfigError("incompatible checkpoint schema: " + c.checkpoint->string());
    }
    return std::move(ck.net);
}

solver::TrainConfig run_train_config(const RunConfig& c, std::uint64_t stream) {
    auto tc = c.train;
    tc.seed = derive_seed(c.seed, stream);
    return tc;
}

simulate::RepeatConfig repeat_config(const RunConfig& c) {
    simulate::RepeatConfig rc;
    rc.refit_steps = c.refit_steps;
    rc.repeats = c.repeats;
    rc.cohort_size = c.cohort_size;
    rc.seed = derive_seed(c.seed, kRepeatStream);
    rc.train = c.train;
    rc.run = {c.mode, false, false};
    return rc;
}

const std::map<std::string, std::string> kDescriptions{
    {"train", "train a policy with actor-critic"},
    {"simulate", "simulate a cohort under a trained policy"},
    {"compare", "compare a reform overlay against the baseline over paired repeats"},
    {"calibrate", "fit utility and friction parameters to target statistics"},
    {"emtr-scan", "EMTR decomposition over a wage grid for one household"},
};

void log(const std::string& s) { std::cerr << "[lcm] " << s << "\n"; }

}  // namespace

Json RunConfig::resolved() const {
    const auto opt = [](const std::optional<fs::path>& p) { return p ? Json(p->generic_string()) : Json(nullptr); };
    Json j;
    j["command"] = command;
    j["params_dir"] = params_dir.generic_string();
    j["year"] = year;
    j["ruleset"] = opt(ruleset);
    j["demographics"] = opt(demographics);
    j["utility"] = opt(utility);
    j["wages"] = opt(wages);
    j["checkpoint"] = opt(checkpoint);
    j["seed"] = seed;
    j["train"] = solver::to_json(train);
    j["cohort_size"] = cohort_size;
    j["mode"] = mode == solver::ActMode::Sample ? "sample" : "greedy";
    j["rates"] = rates;
    j["population"] = opt(population);
    j["repeats"] = repeats;
    j["refit_steps"] = refit_steps;
    j["reform"] = opt(reform);
    j["targets"] = opt(targets);
    j["budget"] = budget;
    j["blocks"] = blocks;
    j["kappa_step"] = kappa_step;
    j["friction_step"] = friction_step;
    if (!household.is_null()) j["household"] = household;
    j["wage_grid"] = {wage_min, wage_max, wage_step};
    j["delta"] = delta;
    j["who"] = who;
    return j;
}

RunConfig load_run_config(const std::string& command, const fs::path& config, const Overrides& o) {
    if (std::find(kCommands.begin(), kCommands.end(), command) == kCommands.end()) {
        throw ConfigError("unknown command '" + command + "'");
    }
    RunConfig c;
    c.command = command;
    c.config_path = existing(config, "config file");
    c.config_text = read_text_file(config);
    Json j;
    try {
        j = Json::parse(c.config_text);
    } catch (const Json::exception& e) {
        throw ConfigError("config is not valid JSON: " + std::string(e.what()));
    }
    check_keys(j,
               {"command", "params_dir", "year", "ruleset", "demographics", "utility", "wages", "checkpoint", "out",
                "seed", "workers", "train", "simulate", "compare", "calibrate", "emtr_scan"},
               "config");
    const fs::path base = fs::absolute(config).parent_path();
    if (j.contains("command") && j["command"] != command) {
        throw ConfigError("config is for command '" + j["command"].get<std::string>() + "', not '" + command + "'");
    }
    c.params_dir = existing(resolve(base, get<std::string>(j, "params_dir", LCM_PARAMS_DIR, "config")), "params_dir");
    c.year = get(j, "year", 2023, "config");
    const auto path_opt = [&](const char* key, std::optional<fs::path>& dst, const char* what) {
        if (j.contains(key) && !j[key].is_null()) dst = existing(resolve(base, get<std::string>(j, key, "", "config")), what);
    };
    path_opt("ruleset", c.ruleset, "ruleset");
    path_opt("demographics", c.demographics, "demographics");
    path_opt("utility", c.utility, "utility parameters");
    path_opt("wages", c.wages, "wage parameters");
    if (!c.ruleset) c.ruleset = existing(c.params_dir / "rules" / ("rules_" + std::to_string(c.year) + ".json"), "ruleset");
    if (!c.demographics) c.demographics = existing(c.params_dir / "model" / "demographics.json", "demographics");
    if (!c.utility) c.utility = existing(c.params_dir / "model" / "utility.json", "utility parameters");
    if (!c.wages) c.wages = existing(c.params_dir / "model" / "wages.json", "wage parameters");
    if (o.checkpoint) {
        c.checkpoint = existing(*o.checkpoint, "checkpoint");
    } else {
        path_opt("checkpoint", c.checkpoint, "checkpoint");
    }
    c.seed = o.seed ? *o.seed : get<std::uint64_t>(j, "seed", 1, "config");
    c.workers = o.workers ? *o.workers : get(j, "workers", 0, "config");
    if (c.workers < 0) throw ConfigError("workers must be >= 0");
    if (o.out) {
        c.out = *o.out;
    } else if (j.contains("out")) {
        c.out = resolve(base, get<std::string>(j, "out", "", "config"));
    } else {
        throw ConfigError("no output directory (set 'out' or pass --out)");
    }
    if (j.contains("train")) {
        const Json& t = j["train"];
        if (!t.is_object()) throw ConfigError("train: expected an object");
        const Json known = solver::to_json(solver::TrainConfig{});
        for (const auto& [k, v] : t.items()) {
            if (k == "seed") throw ConfigError("train.seed: use the top-level seed");
            if (!known.contains(k)) throw ConfigError("train: unknown key '" + k + "'");
        }
        try {
            c.train = solver::train_config_from_json(t);
        } catch (const Json::exception& e) {
            throw ConfigError("train: " + std::string(e.what()));
        }
    }

    const auto cohort_section = [&](const char* name) {
        if (!j.contains(name)) return Json::object();
        return j[name];
    };
    if (command == "simulate") {
        const Json s = cohort_section("simulate");
        check_keys(s, {"cohort_size", "mode", "rates", "population", "repeats", "refit_steps"}, "simulate");
        c.cohort_size = get(s, "cohort_size", c.cohort_size, "simulate");
        c.mode = parse_mode(get<std::string>(s, "mode", "sample", "simulate"));
        c.rates = get(s, "rates", true, "simulate");
        if (s.contains("population")) c.population = existing(resolve(base, s["population"].get<std::string>()), "population counts");
        c.repeats = get(s, "repeats", 1, "simulate");
        c.refit_steps = get<std::int64_t>(s, "refit_steps", 0, "simulate");
    } else if (command == "compare") {
        const Json s = cohort_section("compare");
        check_keys(s, {"reform", "cohort_size", "repeats", "refit_steps", "mode"}, "compare");
        c.cohort_size = get(s, "cohort_size", c.cohort_size, "compare");
        c.repeats = get(s, "repeats", 2, "compare");
        c.refit_steps = get<std::int64_t>(s, "refit_steps", 0, "compare");
        c.mode = parse_mode(get<std::string>(s, "mode", "sample", "compare"));
        if (o.reform) {
            c.reform = existing(*o.reform, "reform overlay");
        } else if (s.contains("reform")) {
            c.reform = existing(resolve(base, s["reform"].get<std::string>()), "reform overlay");
        } else {
            throw ConfigError("compare: no reform overlay");
        }
    } else if (command == "calibrate") {
        const Json s = cohort_section("calibrate");
        check_keys(s, {"targets", "budget", "blocks", "kappa_step", "friction_step", "refit_steps", "cohort_size",
                       "population"},
                   "calibrate");
        c.targets = existing(resolve(base, get<std::string>(s, "targets", (c.params_dir / "targets" / "targets_2023.csv").string(),
                                                            "calibrate")),
                             "targets");
        c.budget = get(s, "budget", c.budget, "calibrate");
        c.blocks = get<std::vector<std::string>>(s, "blocks", {}, "calibrate");
        c.kappa_step = get(s, "kappa_step", c.kappa_step, "calibrate");
        c.friction_step = get(s, "friction_step", c.friction_step, "calibrate");
        c.refit_steps = get<std::int64_t>(s, "refit_steps", 100'000, "calibrate");
        c.cohort_size = get(s, "cohort_size", c.cohort_size, "calibrate");
        if (s.contains("population")) c.population = existing(resolve(base, s["population"].get<std::string>()), "population counts");
        for (const auto& b : c.blocks) calibrate::block_by_name(b);
    } else if (command == "emtr-scan") {
        const Json s = cohort_section("emtr_scan");
        check_keys(s, {"household", "wage_min", "wage_max", "wage_step", "delta", "who"}, "emtr_scan");
        if (!s.contains("household")) throw ConfigError("emtr_scan: missing household template");
        c.household = s["household"].is_string()
                          ? load_json_file(existing(resolve(base, s["household"].get<std::string>()), "household template"))
                          : s["household"];
        rules::snapshot_from_json(c.household);
        c.wage_min = get(s, "wage_min", c.wage_min, "emtr_scan");
        c.wage_max = get(s, "wage_max", c.wage_max, "emtr_scan");
        c.wage_step = get(s, "wage_step", c.wage_step, "emtr_scan");
        c.delta = get(s, "delta", c.delta, "emtr_scan");
        c.who = get(s, "who", 0, "emtr_scan");
        if (!(c.wage_min >= 0.0 && c.wage_max >= c.wage_min && c.wage_step > 0.0 && c.delta > 0.0)) {
            throw ConfigError("emtr_scan: need 0 <= wage_min <= wage_max, wage_step > 0, delta > 0");
        }
        if (c.who < 0 || c.who >= static_cast<int>(c.household["adults"].size())) {
            throw ConfigError("emtr_scan: who must index an adult of the template");
        }
    }
    if (c.cohort_size < 1) throw ConfigError("cohort_size must be >= 1");
    if (c.repeats < 1) throw ConfigError("repeats must be >= 1");
    if (c.refit_steps < 0) throw ConfigError("refit_steps must be >= 0");
    return c;
}

env::Model load_run_model(const RunConfig& c) {
    env::Model m;
    m.rules = rules::load_ruleset(*c.ruleset);
    m.wage = wage::load_wage_model(*c.wages);
    m.demo = population::load_tables(*c.demographics);
    m.utility = env::load_utility(*c.utility);
    return m;
}

int cmd_train(const RunConfig& c) {
    const auto m = std::make_shared<const env::Model>(load_run_model(c));
    std::optional<solver::PolicyNetwork> init;
    if (c.checkpoint) init = load_policy(c);
    const auto tc = run_train_config(c, kTrainStream);
    prepare_out(c);
    log("training " + std::to_string(tc.total_steps) + " steps");
    const auto t0 = std::chrono::steady_clock::now();
    auto res = solver::train_actor_critic(solver::lifecycle_factory(m), tc, init ? &*init : nullptr,
                                          [](const solver::PolicyNetwork&, const solver::CheckpointMetrics& k) {
                                              log("step " + std::to_string(k.steps) + " eval " + format_double(k.eval_return));
                                          });
    solver::save_checkpoint(c.out / "checkpoint.bin", res.net, solver::config_hash(tc));
    solver::write_metrics_csv(c.out / "metrics.csv", res.curve);
    Json s;
    s["config_hash"] = hex64(solver::config_hash(tc));
    s["checkpoint_hash"] = hex64(fnv1a64(read_text_file(c.out / "checkpoint.bin")));
    s["actions_executed"] = res.actions_executed;
    s["illegal_actions"] = res.illegal_actions;
    if (!res.curve.empty()) s["final_eval_return"] = res.curve.back().eval_return;
    save_json_file(c.out / "train.json", s);
    log("done in " + format_double(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()) + " s");
    return kOk;
}

simulate::AggregateReport simulate_report(const RunConfig& c, const env::Model& m,
                                          const solver::PolicyNetwork& net,
                                          std::vector<simulate::CellStats>* repeat_stats) {
    std::vector<std::pair<int, double>> counts;
    if (c.population) counts = simulate::load_population_counts(*c.population);
    const auto scale = [&](const simulate::AggregateReport& r) {
        return counts.empty() ? r : simulate::scale_to_population(r, simulate::population_factors(r, counts));
    };
    if (c.repeats >= 2) {
        const auto rr = simulate::repeat_protocol(net, std::make_shared<const env::Model>(m), repeat_config(c));
        if (repeat_stats) *repeat_stats = rr.stats;
        return scale(rr.mean_report);
    }
    const auto pop = env::make_cohort(c.cohort_size, m, derive_seed(c.seed, kPopStream));
    const auto run = simulate::run_cohort(net, pop, m, derive_seed(c.seed, kSimStream), {c.mode, c.rates, false});
    return scale(*run.report);
}

int cmd_simulate(const RunConfig& c) {
    const auto m = load_run_model(c);
    const auto net = load_policy(c);
    if (c.population) simulate::load_population_counts(*c.population);
    prepare_out(c);
    log("simulating " + std::to_string(c.cohort_size) + " households x " + std::to_string(c.repeats) + " repeats");
    std::vector<simulate::CellStats> stats;
    simulate::write_report(c.out, simulate_report(c, m, net, &stats));
    if (c.repeats >= 2) {
        CsvTable t;
        t.header = {"cell", "mean", "sd"};
        for (const auto& s : stats) t.add_row({s.name, format_double(s.mean), format_double(s.sd)});
        t.save(c.out / "repeat_stats.csv");
    }
    return kOk;
}

int cmd_compare(const RunConfig& c) {
    const auto m = std::make_shared<const env::Model>(load_run_model(c));
    const auto net = load_policy(c);
    const auto spec = reform::load_reform(*c.reform);
    reform::apply_reform(m->rules, spec);  // reject bad overlays before any output
    prepare_out(c);
    log("comparing '" + spec.name + "' over " + std::to_string(c.repeats) + " paired repeats");
    const auto r = reform::reform_pipeline(net, m, spec, repeat_config(c));
    reform::write_comparison(c.out, r);
    Json tests;
    const auto add = [&](const char* cell, reform::Direction dir) {
        const auto t = reform::paired_test(reform::cell_series(r.baseline.cells, cell),
                                           reform::cell_series(r.reform.cells, cell), dir);
        tests[cell] = {{"direction", dir == reform::Direction::Lower ? "lower" : "higher"},
                       {"mean_difference", t.mean},
                       {"sd", t.sd},
                       {"t", t.t},
                       {"critical", t.critical},
                       {"significant", t.significant}};
    };
    if (c.repeats >= 2) {
        add("er_spell_mean_days", reform::Direction::Lower);
        add("fte_total", reform::Direction::Higher);
    }
    save_json_file(c.out / "paired_tests.json", tests);
    return kOk;
}

int cmd_calibrate(const RunConfig& c) {
    const auto m = std::make_shared<const env::Model>(load_run_model(c));
    std::optional<solver::PolicyNetwork> warm;
    if (c.checkpoint) warm = load_policy(c);
    const auto targets = calibrate::load_targets(*c.targets);
    calibrate::LifeCycleEvalConfig ec;
    ec.refit_steps = c.refit_steps;
    ec.cohort_size = c.cohort_size;
    ec.train = c.train;
    if (c.population) ec.population = simulate::load_population_counts(*c.population);
    calibrate::CalibrateConfig cc;
    cc.budget = c.budget;
    cc.blocks = c.blocks;
    cc.kappa_step = c.kappa_step;
    cc.friction_step = c.friction_step;
    cc.seed = derive_seed(c.seed, kCalStream);
    prepare_out(c);
    log("calibrating with budget " + std::to_string(c.budget));
    const auto r = calibrate::calibrate({m->utility, m->wage.friction}, targets, cc,
                                        calibrate::lifecycle_evaluator(m, ec), warm ? &*warm : nullptr);
    calibrate::write_calibration(c.out, r, m->wage.params);
    if (r.policy) solver::save_checkpoint(c.out / "checkpoint.bin", *r.policy, solver::config_hash(c.train));
    log("loss " + format_double(r.initial_loss) + " -> " + format_double(r.best_loss));
    return kOk;
}

int cmd_emtr_scan(const RunConfig& c) {
    const auto m = load_run_model(c);
    const auto hh = rules::snapshot_from_json(c.household);
    std::vector<double> wages;
    const auto n = static_cast<int>(std::floor((c.wage_max - c.wage_min) / c.wage_step + 1e-9));
    for (int i = 0; i <= n; ++i) wages.push_back(c.wage_min + i * c.wage_step);
    prepare_out(c);
    const auto rows = rules::emtr_scan(hh, m.rules, wages, c.delta, c.who);
    CsvTable t;
    t.header = {"wage_mo", "net_mo", "emtr"};
    for (int k = 0; k < rules::kTaxCount; ++k) t.header.emplace_back("tax_" + std::string(rules::to_string(static_cast<rules::Tax>(k))));
    for (int k = 0; k < rules::kContributionCount; ++k) {
        t.header.emplace_back("contribution_" + std::string(rules::to_string(static_cast<rules::Contribution>(k))));
    }
    for (int k = 0; k < rules::kBenefitCount; ++k) {
        t.header.emplace_back("benefit_" + std::string(rules::to_string(static_cast<rules::Benefit>(k))));
    }
    for (const auto& r : rows) {
        std::vector<std::string> row{format_double(r.wage_mo), format_double(r.net_mo), format_double(r.emtr.total)};
        for (double v : r.emtr.tax_parts) row.push_back(format_double(v + 0.0));  // no -0
        for (double v : r.emtr.contribution_parts) row.push_back(format_double(v + 0.0));  // no -0
        for (double v : r.emtr.benefits) row.push_back(format_double(v + 0.0));  // no -0
        t.add_row(std::move(row));
    }
    t.save(c.out / "emtr_scan.csv");
    return kOk;
}

int run(int argc, const char* const* argv) {
    CLI::App app{"Life-cycle labour supply model"};
    app.require_subcommand(1);
    std::string config;
    Overrides o;
    std::uint64_t seed = 0;
    int workers = 0;
    std::string out, checkpoint, reform_path;
    std::string command;
    for (const auto& name : kCommands) {
        auto* sub = app.add_subcommand(name, kDescriptions.at(name));
        sub->add_option("--config", config, "run config (JSON)")->required();
        sub->add_option("--seed", seed, "root seed (overrides the config)");
        sub->add_option("--workers", workers, "OpenMP threads, 0 = all cores");
        sub->add_option("--out", out, "output directory (overrides the config)");
        if (name != "emtr-scan") sub->add_option("--checkpoint", checkpoint, "policy checkpoint (overrides the config)");
        if (name == "compare") sub->add_option("--reform", reform_path, "reform overlay (overrides the config)");
        sub->callback([&command, name] { command = name; });
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kConfigError;
    }
    for (auto* sub : app.get_subcommands()) {
        if (sub->count("--seed")) o.seed = seed;
        if (sub->count("--workers")) o.workers = workers;
        if (sub->count("--out")) o.out = out;
        if (sub->get_option_no_throw("--checkpoint") && sub->count("--checkpoint")) o.checkpoint = checkpoint;
        if (sub->get_option_no_throw("--reform") && sub->count("--reform")) o.reform = reform_path;
    }
    try {
        const auto c = load_run_config(command, config, o);
        omp_set_num_threads(c.workers > 0 ? c.workers : omp_get_num_procs());
        if (command == "train") return cmd_train(c);
        if (command == "simulate") return cmd_simulate(c);
        if (command == "compare") return cmd_compare(c);
        if (command == "calibrate") return cmd_calibrate(c);
        return cmd_emtr_scan(c);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const TrainingDiverged& e) {
        std::cerr << "training diverged: " << e.what() << "\n";
        return kDiverged;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kFailure;
    }
}

}  // namespace lcm::cli
