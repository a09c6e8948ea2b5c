#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>

#include "doctest.h"
#include "lcm/cli/cli.hpp"
#include "lcm/common/errors.hpp"
#include "lcm/common/io.hpp"

using namespace lcm;
namespace fs = std::filesystem;

namespace {

const fs::path kParams = LCM_PARAMS_DIR;

fs::path scratch(const std::string& name) {
    const auto d = fs::temp_directory_path() / "lcm_test_cli" / name;
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

Json base_config(const fs::path& out) {
    return {{"params_dir", kParams.string()},
            {"seed", 5},
            {"out", out.string()},
            {"train",
             {{"total_steps", 10000},
              {"envs", 16},
              {"n_steps", 16},
              {"hidden", {32, 32}},
              {"checkpoints", 2},
              {"eval_episodes", 16}}}};
}

fs::path write_config(const fs::path& dir, const std::string& name, const Json& j) {
    const auto p = dir / name;
    save_json_file(p, j);
    return p;
}

int run_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "lcm");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    return cli::run(static_cast<int>(argv.size()), argv.data());
}

std::map<std::string, std::string> dir_contents(const fs::path& d) {
    std::map<std::string, std::string> m;
    for (const auto& e : fs::directory_iterator(d)) m[e.path().filename().string()] = read_text_file(e.path());
    return m;
}

// Trains the smoke policy once; later cases reuse its checkpoint.
fs::path smoke_checkpoint() {
    static const fs::path ck = [] {
        const auto d = scratch("shared_train");
        const auto cfg = write_config(d, "train.json", base_config(d / "out"));
        REQUIRE(run_cli({"train", "--config", cfg.string()}) == cli::kOk);
        return d / "out" / "checkpoint.bin";
    }();
    return ck;
}

CsvTable read_csv(const fs::path& p) { return CsvTable::load(p); }

}  // namespace

TEST_CASE("train smoke run: files, timing and reproducible checkpoint") {
    const auto d = scratch("train");
    const auto cfg = write_config(d, "train.json", base_config(d / "a"));
    const auto t0 = std::chrono::steady_clock::now();
    REQUIRE(run_cli({"train", "--config", cfg.string()}) == cli::kOk);
    CHECK(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() < 60.0);
    for (const char* f : {"checkpoint.bin", "metrics.csv", "train.json", "config.json", "run.json"}) {
        CHECK(fs::exists(d / "a" / f));
    }
    CHECK(read_text_file(d / "a" / "config.json") == read_text_file(cfg));
    CHECK(load_json_file(d / "a" / "train.json")["illegal_actions"] == 0);

    // Same config and seed into another directory, with a different worker count.
    REQUIRE(run_cli({"train", "--config", cfg.string(), "--out", (d / "b").string(), "--workers", "1"}) == cli::kOk);
    CHECK(dir_contents(d / "a") == dir_contents(d / "b"));

    REQUIRE(run_cli({"train", "--config", cfg.string(), "--out", (d / "c").string(), "--seed", "6"}) == cli::kOk);
    CHECK(read_text_file(d / "a" / "checkpoint.bin") != read_text_file(d / "c" / "checkpoint.bin"));
    CHECK(load_json_file(d / "c" / "run.json")["seed"] == 6);
}

TEST_CASE("config errors exit with code 2") {
    const auto d = scratch("errors");
    auto j = base_config(d / "out");

    auto missing = j;
    missing["ruleset"] = "no/such/rules.json";
    CHECK(run_cli({"train", "--config", write_config(d, "missing.json", missing).string()}) == cli::kConfigError);
    CHECK_THROWS_AS(cli::load_run_config("train", d / "missing.json"), ConfigError);

    auto unknown = j;
    unknown["sed"] = 3;
    CHECK(run_cli({"train", "--config", write_config(d, "unknown.json", unknown).string()}) == cli::kConfigError);

    auto inner = j;
    inner["train"]["learning_rate"] = 0.1;
    CHECK(run_cli({"train", "--config", write_config(d, "inner.json", inner).string()}) == cli::kConfigError);

    auto seeded = j;
    seeded["train"]["seed"] = 3;
    CHECK(run_cli({"train", "--config", write_config(d, "seeded.json", seeded).string()}) == cli::kConfigError);

    auto wrong_cmd = j;
    wrong_cmd["command"] = "simulate";
    CHECK(run_cli({"train", "--config", write_config(d, "cmd.json", wrong_cmd).string()}) == cli::kConfigError);

    CHECK(run_cli({"train", "--config", (d / "absent.json").string()}) == cli::kConfigError);
    CHECK(run_cli({"train"}) == cli::kConfigError);
    CHECK(run_cli({"fly", "--config", "x"}) == cli::kConfigError);

    std::ofstream(d / "broken.json") << "{ not json";
    CHECK(run_cli({"train", "--config", (d / "broken.json").string()}) == cli::kConfigError);

    // Nothing was written for rejected configs.
    CHECK_FALSE(fs::exists(d / "out"));
}

TEST_CASE("relative paths resolve against the config directory") {
    const auto d = scratch("relative");
    fs::create_directories(d / "cfg");
    fs::copy_file(kParams / "rules" / "rules_2022.json", d / "rules.json");
    auto j = base_config(d / "out");
    j["ruleset"] = "../rules.json";
    j["out"] = "../out";
    const auto c = cli::load_run_config("train", write_config(d / "cfg", "train.json", j));
    CHECK(fs::equivalent(*c.ruleset, d / "rules.json"));
    CHECK(c.out == (d / "out").lexically_normal());
    CHECK(cli::load_run_model(c).rules.year == 2022);
}

TEST_CASE("training divergence exits with code 3") {
    const auto d = scratch("diverge");
    auto j = base_config(d / "out");
    j["train"]["divergence_factor"] = 1e-6;
    j["train"]["divergence_patience"] = 1;
    j["train"]["checkpoints"] = 4;
    CHECK(run_cli({"train", "--config", write_config(d, "train.json", j).string()}) == cli::kDiverged);
}

TEST_CASE("simulate n=100 writes the report set and it parses back") {
    const auto d = scratch("simulate");
    auto j = base_config(d / "out");
    j["checkpoint"] = smoke_checkpoint().string();
    j["simulate"] = {{"cohort_size", 100}};
    const auto cfg = write_config(d, "sim.json", j);
    REQUIRE(run_cli({"simulate", "--config", cfg.string()}) == cli::kOk);
    for (const char* f : {"employment_by_age.csv", "occupancy_by_age.csv", "finances.csv", "hours_histogram.csv",
                          "unemployment_durations.csv", "tax_rate_histograms.csv", "summary.json", "config.json",
                          "run.json"}) {
        CHECK(fs::exists(d / "out" / f));
    }
    for (const auto& e : fs::directory_iterator(d / "out")) {
        if (e.path().extension() != ".csv") continue;
        const auto t = read_csv(e.path());
        CHECK(t.rows.size() > 0);
        for (const auto& row : t.rows) CHECK(row.size() == t.header.size());
        // Round trip: saving the parsed table reproduces the file.
        const auto copy = d / ("copy_" + e.path().filename().string());
        t.save(copy);
        CHECK(read_text_file(copy) == read_text_file(e.path()));
    }

    // In-memory report for the same config against the written files.
    const auto c = cli::load_run_config("simulate", cfg);
    const auto ck = solver::load_checkpoint(*c.checkpoint);
    const auto r = cli::simulate_report(c, cli::load_run_model(c), ck.net);
    const auto summary = load_json_file(d / "out" / "summary.json");
    CHECK(summary["fte_total"].get<double>() == doctest::Approx(r.total_fte()).epsilon(1e-12));
    CHECK(summary["employed_total"].get<double>() == doctest::Approx(r.total_employed()).epsilon(1e-12));
    const auto emp = read_csv(d / "out" / "employment_by_age.csv");
    const auto fte_col = emp.column("fte");
    double fte = 0.0;
    for (const auto& row : emp.rows) fte += std::stod(row[fte_col]);
    CHECK(fte == doctest::Approx(r.total_fte()).epsilon(1e-9));

    // Re-running gives byte-identical output.
    REQUIRE(run_cli({"simulate", "--config", cfg.string(), "--out", (d / "again").string()}) == cli::kOk);
    CHECK(dir_contents(d / "out") == dir_contents(d / "again"));
}

TEST_CASE("simulate rejects a missing or incompatible checkpoint") {
    const auto d = scratch("schema");
    auto j = base_config(d / "out");
    j["simulate"] = {{"cohort_size", 10}};
    CHECK(run_cli({"simulate", "--config", write_config(d, "nock.json", j).string()}) == cli::kConfigError);

    solver::PolicyNetwork other(env::kFeatureCount + 3, {8}, env::kActionCount, 1);
    solver::save_checkpoint(d / "other.bin", other, 0);
    j["checkpoint"] = (d / "other.bin").string();
    CHECK(run_cli({"simulate", "--config", write_config(d, "other.json", j).string()}) == cli::kConfigError);
    CHECK_FALSE(fs::exists(d / "out" / "summary.json"));
}

TEST_CASE("compare with the no-op overlay gives zero differences") {
    const auto d = scratch("compare");
    auto j = base_config(d / "out");
    j["checkpoint"] = smoke_checkpoint().string();
    j["train"]["eval_episodes"] = 0;
    j["compare"] = {{"reform", (kParams / "reforms" / "noop.json").string()},
                    {"cohort_size", 60},
                    {"repeats", 2},
                    {"refit_steps", 1024}};
    const auto cfg = write_config(d, "cmp.json", j);
    REQUIRE(run_cli({"compare", "--config", cfg.string()}) == cli::kOk);
    const auto t = read_csv(d / "out" / "comparison.csv");
    const auto diff = t.column("difference");
    REQUIRE(t.rows.size() > 50);
    for (const auto& row : t.rows) CHECK(std::stod(row[diff]) == 0.0);
    for (const char* f : {"employment_comparison.csv", "finance_comparison.csv"}) {
        const auto x = read_csv(d / "out" / f);
        const auto ch = x.column("change");
        for (const auto& row : x.rows) CHECK(std::stod(row[ch]) == 0.0);
    }
    const auto tests = load_json_file(d / "out" / "paired_tests.json");
    CHECK(tests["fte_total"]["significant"] == false);

    REQUIRE(run_cli({"compare", "--config", cfg.string(), "--out", (d / "again").string()}) == cli::kOk);
    CHECK(dir_contents(d / "out") == dir_contents(d / "again"));

    // Overlay schema rejection.
    save_json_file(d / "bad.json", Json{{"name", "bad"}, {"deltas", {{{"name", "set"}, {"path", "/nope"}, {"value", 1}}}}});
    CHECK(run_cli({"compare", "--config", cfg.string(), "--reform", (d / "bad.json").string(), "--out",
                   (d / "bad").string()}) == cli::kConfigError);
}

TEST_CASE("calibrate smoke run writes parameters and trace") {
    const auto d = scratch("calibrate");
    auto j = base_config(d / "out");
    j["train"]["eval_episodes"] = 0;
    j["calibrate"] = {{"budget", 1}, {"blocks", {"kappa_work.male.40"}}, {"refit_steps", 1024}, {"cohort_size", 20}};
    const auto cfg = write_config(d, "cal.json", j);
    REQUIRE(run_cli({"calibrate", "--config", cfg.string()}) == cli::kOk);
    for (const char* f : {"utility.json", "wages.json", "trace.csv", "checkpoint.bin"}) CHECK(fs::exists(d / "out" / f));
    CHECK(read_csv(d / "out" / "trace.csv").rows.size() == 1);
    REQUIRE(run_cli({"calibrate", "--config", cfg.string(), "--out", (d / "again").string()}) == cli::kOk);
    CHECK(dir_contents(d / "out") == dir_contents(d / "again"));

    j["calibrate"]["blocks"] = {"kappa_work.male.41"};
    CHECK(run_cli({"calibrate", "--config", write_config(d, "bad.json", j).string()}) == cli::kConfigError);
}

TEST_CASE("emtr-scan over a wage grid") {
    const auto d = scratch("emtr");
    const auto cfg = kParams / "configs" / "emtr_single.json";
    REQUIRE(run_cli({"emtr-scan", "--config", cfg.string(), "--out", (d / "out").string()}) == cli::kOk);
    const auto t = read_csv(d / "out" / "emtr_scan.csv");
    REQUIRE(t.rows.size() == 161);
    const auto w = t.column("wage_mo");
    const auto total = t.column("emtr");
    CHECK(std::stod(t.rows.front()[w]) == 0.0);
    bool plateau = false;
    for (const auto& row : t.rows) {
        double parts = 0.0;
        for (std::size_t k = total + 1; k < row.size(); ++k) parts += std::stod(row[k]);
        CHECK(std::abs(parts - std::stod(row[total])) < 1e-9);
        plateau = plateau || std::abs(std::stod(row[total]) - 1.0) < 1e-9;
    }
    CHECK(plateau);
    CHECK(std::stod(t.rows.back()[total]) < 1.0);
    CHECK(std::stod(t.rows.back()[total]) > 0.0);

    auto j = load_json_file(cfg);
    j["params_dir"] = kParams.string();
    REQUIRE(run_cli({"emtr-scan", "--config", write_config(d, "ok.json", j).string(), "--out", (d / "ok").string()}) ==
            cli::kOk);
    j["emtr_scan"]["wage_step"] = 0;
    CHECK(run_cli({"emtr-scan", "--config", write_config(d, "bad.json", j).string(), "--out", (d / "x").string()}) ==
          cli::kConfigError);
    j["emtr_scan"]["wage_step"] = 50;
    j["emtr_scan"]["who"] = 1;
    CHECK(run_cli({"emtr-scan", "--config", write_config(d, "who.json", j).string(), "--out", (d / "x").string()}) ==
          cli::kConfigError);
}
