#include <catch2/catch_amalgamated.hpp>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "bsts/csv.hpp"
#include "bsts/pageviews.hpp"
#include "bsts/synth.hpp"

using namespace bsts;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RunResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

fs::path fresh_dir(const std::string& tag) {
    static std::atomic<int> counter{0};
    auto dir = fs::temp_directory_path() / ("bsts_cli_" + tag + "_" +
                                            std::to_string(counter++));
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

/// Runs the CLI through the shell; stdout/stderr are captured via files.
RunResult run_cli(const std::string& args, const fs::path& dir) {
    const fs::path out_file = dir / "stdout.txt";
    const fs::path err_file = dir / "stderr.txt";
    const std::string cmd = std::string(IMPACT_BSTS_CLI_PATH) + " " + args + " > " +
                            out_file.string() + " 2> " + err_file.string();
    const int status = std::system(cmd.c_str());
    RunResult result;
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    result.out = slurp(out_file);
    result.err = slurp(err_file);
    return result;
}

void write_json(const fs::path& path, const json& doc) {
    std::ofstream out(path);
    out << doc.dump(2) << "\n";
}

/// Synthetic fixture: shared-trend controls, optional step on the treated.
fs::path write_fixture(const fs::path& dir, double step_magnitude, Date onset,
                       std::size_t length = 300, std::uint64_t seed = 7) {
    SynthSpec spec;
    spec.trend = TrendType::local_level;
    spec.length = length;
    spec.start = Date::parse("2020-01-01");
    spec.seed = seed;
    spec.intercept = 120.0;
    spec.sigma_level = 0.4;
    spec.sigma_obs = 1.0;
    spec.n_controls = 3;
    spec.true_beta = {0.6, 0.4, 0.0};
    SynthOutput out = generate(spec);
    if (step_magnitude != 0.0) {
        out.panel.treated =
            inject(out.panel.treated, {InterventionKind::step, onset, step_magnitude, 1});
    }
    std::vector<DateIndexedSeries> columns = {out.panel.treated};
    columns.insert(columns.end(), out.panel.controls.begin(), out.panel.controls.end());
    const fs::path file = dir / "panel.csv";
    write_csv(file, columns);
    return file;
}

json base_config(const std::string& csv) {
    return json{{"data", {{"csv", csv}, {"treated", "y"}}},
                {"intervention_date", "2020-09-15"},
                {"post_period_days", 42},
                {"model", {{"trend", "local_level"}, {"weekly_seasonal", true}}},
                {"mcmc",
                 {{"iterations", 400}, {"burn_in", 100}, {"seed", 11}, {"chains", 1}}},
                {"output_dir", "out"}};
}

}  // namespace

TEST_CASE("cli simulate writes panel and truth fixtures", "[cli]") {
    auto dir = fresh_dir("simulate");
    write_json(dir / "config.json",
               json{{"simulate",
                     {{"trend", "local_level"},
                      {"length", 120},
                      {"start", "2021-01-01"},
                      {"seed", 5},
                      {"n_controls", 2},
                      {"true_beta", {0.5, -0.2}}}},
                    {"output_dir", "fixture"}});
    RunResult run = run_cli("simulate --config " + (dir / "config.json").string(), dir);
    CHECK(run.exit_code == 0);

    auto panel = load_csv(dir / "fixture" / "panel.csv");
    auto truth = load_csv(dir / "fixture" / "truth.csv");
    REQUIRE(panel.size() == 3);
    REQUIRE(truth.size() == 5);
    REQUIRE(panel[0].size() == 120);
    // written components reassemble the written series
    for (std::size_t t = 0; t < 120; ++t) {
        const double regression = truth[3].values[t];
        const double rebuilt =
            truth[0].values[t] + truth[2].values[t] + regression + truth[4].values[t];
        CHECK(panel[0].values[t] == Catch::Approx(rebuilt).margin(1e-9));
    }

    // deterministic: same config reproduces the same bytes
    const std::string first_bytes = slurp(dir / "fixture" / "panel.csv");
    RunResult rerun = run_cli("simulate --config " + (dir / "config.json").string(), dir);
    CHECK(rerun.exit_code == 0);
    CHECK(slurp(dir / "fixture" / "panel.csv") == first_bytes);
    fs::remove_all(dir);
}

TEST_CASE("cli prescreen writes both report files", "[cli]") {
    auto dir = fresh_dir("prescreen");
    write_fixture(dir, 0.0, Date::parse("2020-09-15"));
    write_json(dir / "config.json", base_config("panel.csv"));
    RunResult run = run_cli("prescreen --config " + (dir / "config.json").string(), dir);
    CHECK(run.exit_code == 0);
    CHECK(fs::exists(dir / "out" / "screening.json"));
    CHECK(fs::exists(dir / "out" / "screening.csv"));
    json doc = json::parse(slurp(dir / "out" / "screening.json"));
    CHECK(doc["selected"].size() == 3);
    CHECK(doc["candidates"].size() == 3);
    fs::remove_all(dir);
}

TEST_CASE("cli prescreen with zero candidates warns and succeeds", "[cli]") {
    auto dir = fresh_dir("nocand");
    DateIndexedSeries only("y", Date::parse("2020-01-01"),
                           std::vector<double>(300, 100.0));
    write_csv(dir / "panel.csv", {only});
    write_json(dir / "config.json", base_config("panel.csv"));
    RunResult run = run_cli("prescreen --config " + (dir / "config.json").string(), dir);
    CHECK(run.exit_code == 0);
    CHECK(run.err.find("warning") != std::string::npos);
    json doc = json::parse(slurp(dir / "out" / "screening.json"));
    CHECK(doc["selected"].empty());
    fs::remove_all(dir);
}

TEST_CASE("cli exits 2 on unresolvable input", "[cli]") {
    auto dir = fresh_dir("badinput");
    write_json(dir / "config.json", base_config("missing.csv"));
    RunResult run = run_cli("prescreen --config " + (dir / "config.json").string(), dir);
    CHECK(run.exit_code == 2);
    CHECK(run.err.find("missing.csv") != std::string::npos);

    RunResult no_config = run_cli("impact --config " + (dir / "absent.json").string(), dir);
    CHECK(no_config.exit_code == 2);

    write_fixture(dir, 0.0, Date::parse("2020-09-15"));
    json bad_trend = base_config("panel.csv");
    bad_trend["model"]["trend"] = "cubic";
    write_json(dir / "badtrend.json", bad_trend);
    RunResult bt = run_cli("fit --config " + (dir / "badtrend.json").string(), dir);
    CHECK(bt.exit_code == 2);
    CHECK(bt.err.find("cubic") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("cli impact detects an injected step and reruns byte-identically", "[cli][slow]") {
    auto dir = fresh_dir("impact");
    write_fixture(dir, -0.05, Date::parse("2020-09-15"));
    write_json(dir / "config.json", base_config("panel.csv"));
    RunResult run = run_cli("impact --config " + (dir / "config.json").string(), dir);
    REQUIRE(run.exit_code == 0);

    json doc = json::parse(slurp(dir / "out" / "impact.json"));
    CHECK(doc["significant"] == true);
    const double mean = doc["relative_effect"]["mean_percent"].get<double>();
    CHECK(mean < -1.0);
    CHECK(mean > -9.0);
    CHECK(doc["days"].size() == 42);
    CHECK(doc["post_period"]["start"] == "2020-09-15");
    CHECK(doc["pre_period"]["end"] == "2020-09-14");

    // csv: header plus one row per post day
    std::istringstream csv(slurp(dir / "out" / "impact.csv"));
    std::string line;
    int rows = 0;
    while (std::getline(csv, line)) ++rows;
    CHECK(rows == 43);

    const std::string svg = slurp(dir / "out" / "impact.svg");
    CHECK(svg.find("panel-observed") != std::string::npos);
    CHECK(svg.find("panel-cumulative") != std::string::npos);
    CHECK(svg.find("panel-pointwise") == std::string::npos);
    CHECK(svg.find("class=\"intervention\"") != std::string::npos);

    const std::string first = slurp(dir / "out" / "impact.json");
    RunResult rerun = run_cli("impact --config " + (dir / "config.json").string(), dir);
    REQUIRE(rerun.exit_code == 0);
    CHECK(slurp(dir / "out" / "impact.json") == first);

    // a different seed changes the draws
    RunResult reseeded = run_cli(
        "impact --config " + (dir / "config.json").string() + " --seed 99", dir);
    REQUIRE(reseeded.exit_code == 0);
    CHECK(slurp(dir / "out" / "impact.json") != first);

    // the optional panel appears only on request
    RunResult panel3 = run_cli("impact --config " + (dir / "config.json").string() +
                                   " --pointwise-panel --out " + (dir / "out3").string(),
                               dir);
    REQUIRE(panel3.exit_code == 0);
    CHECK(slurp(dir / "out3" / "impact.svg").find("panel-pointwise") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("cli fit reports the posterior summary", "[cli]") {
    auto dir = fresh_dir("fit");
    write_fixture(dir, 0.0, Date::parse("2020-09-15"));
    json cfg = base_config("panel.csv");
    cfg["model"]["holiday_calendar"] = "western";
    write_json(dir / "config.json", cfg);
    RunResult run = run_cli("fit --config " + (dir / "config.json").string(), dir);
    REQUIRE(run.exit_code == 0);
    json doc = json::parse(slurp(dir / "out" / "fit.json"));
    CHECK(doc["observations"] == 258);
    CHECK(doc["trend"] == "local_level");
    CHECK(doc["draws"] == 300);
    CHECK(doc["posterior_sd"].contains("observation"));
    REQUIRE(!doc["regression"].empty());
    // x1 carries true signal: it should dominate inclusion
    double x1 = 0.0;
    bool saw_holiday = false;
    for (const auto& row : doc["regression"]) {
        if (row["name"] == "x1") x1 = row["inclusion_probability"].get<double>();
        if (row["name"] == "holiday_new_years") saw_holiday = row["forced"].get<bool>();
    }
    CHECK(x1 > 0.8);
    CHECK(saw_holiday);
    fs::remove_all(dir);
}

TEST_CASE("cli validate reports near-zero error on constant data", "[cli]") {
    auto dir = fresh_dir("validate");
    DateIndexedSeries constant("y", Date::parse("2020-01-01"),
                               std::vector<double>(200, 100.0));
    write_csv(dir / "panel.csv", {constant});
    json cfg = json{{"data", {{"csv", "panel.csv"}, {"treated", "y"}}},
                    {"model", {{"trend", "static_intercept"}, {"weekly_seasonal", false}}},
                    {"mcmc", {{"iterations", 200}, {"burn_in", 50}, {"seed", 2}}},
                    {"validate", {{"folds", 3}, {"horizon", 42}}},
                    {"output_dir", "out"}};
    write_json(dir / "config.json", cfg);
    RunResult run = run_cli("validate --config " + (dir / "config.json").string(), dir);
    REQUIRE(run.exit_code == 0);
    json doc = json::parse(slurp(dir / "out" / "validation.json"));
    CHECK(doc["average_mape_percent"].get<double>() < 0.5);
    CHECK(doc["folds"].size() == 3);
    CHECK(fs::exists(dir / "out" / "validation.csv"));
    fs::remove_all(dir);
}

TEST_CASE("cli grid ranks every requested cell", "[cli][slow]") {
    auto dir = fresh_dir("grid");
    write_fixture(dir, 0.0, Date::parse("2020-09-15"), 300, 21);
    json cfg = base_config("panel.csv");
    cfg["mcmc"] = {{"iterations", 150}, {"burn_in", 40}, {"seed", 6}};
    cfg["grid"] = {{"pre_lengths", {150, 258}},
                   {"trends", {"local_level", "static_intercept"}},
                   {"folds", 2},
                   {"horizon", 42}};
    write_json(dir / "config.json", cfg);
    RunResult run = run_cli("grid --config " + (dir / "config.json").string(), dir);
    REQUIRE(run.exit_code == 0);
    json doc = json::parse(slurp(dir / "out" / "grid.json"));
    CHECK(doc["cells"].size() == 4);
    std::istringstream csv(slurp(dir / "out" / "grid.csv"));
    std::string line;
    int rows = 0;
    while (std::getline(csv, line)) ++rows;
    CHECK(rows == 5);  // header + 4 cells
    fs::remove_all(dir);
}

TEST_CASE("cli fetch caches across runs and fails loudly offline", "[cli]") {
    auto dir = fresh_dir("fetch");

    httplib::Server server;
    std::atomic<int> requests{0};
    server.Get(R"(/metrics/pageviews/aggregate/(.+))",
               [&](const httplib::Request& req, httplib::Response& res) {
                   ++requests;
                   (void)req;
                   json items = json::array();
                   items.push_back({{"timestamp", "2021010100"}, {"views", 1234}});
                   items.push_back({{"timestamp", "2021010200"}, {"views", 2345}});
                   res.set_content(json{{"items", items}}.dump(), "application/json");
               });
    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread thread([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    json cfg = json{{"fetch",
                     {{"project", "en.wikipedia"},
                      {"start", "2021-01-01"},
                      {"end", "2021-01-03"},
                      {"name", "enwiki"},
                      {"base_url", "http://127.0.0.1:" + std::to_string(port)},
                      {"cache_dir", "cache"}}},
                    {"output_dir", "out"}};
    write_json(dir / "config.json", cfg);

    RunResult first = run_cli("fetch --config " + (dir / "config.json").string(), dir);
    REQUIRE(first.exit_code == 0);
    CHECK(requests == 1);
    auto series = load_csv(dir / "out" / "fetched.csv");
    REQUIRE(series.size() == 1);
    CHECK(series[0].name == "enwiki");
    REQUIRE(series[0].size() == 3);
    CHECK(series[0].values[0] == 1234.0);
    CHECK(series[0].values[1] == 2345.0);
    CHECK(is_missing(series[0].values[2]));

    RunResult second = run_cli("fetch --config " + (dir / "config.json").string(), dir);
    REQUIRE(second.exit_code == 0);
    CHECK(requests == 1);
    CHECK(second.err.find("cache hit") != std::string::npos);

    server.stop();
    thread.join();

    // dead endpoint, no cache: network exit code
    json offline = cfg;
    offline["fetch"]["base_url"] = "http://127.0.0.1:1";
    offline["fetch"]["cache_dir"] = "cache2";
    write_json(dir / "offline.json", offline);
    RunResult dead = run_cli("fetch --config " + (dir / "offline.json").string(), dir);
    CHECK(dead.exit_code == 4);
    fs::remove_all(dir);
}
