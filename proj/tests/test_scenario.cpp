#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "hmpc/errors.hpp"
#include "hmpc/json_io.hpp"
#include "hmpc/scenario.hpp"

using namespace hmpc;

namespace {

const std::filesystem::path kScenarios = std::filesystem::path(HMPC_SOURCE_DIR) / "scenarios";

Json minimal()
{
    return Json::parse(R"({
        "name": "t",
        "model": "ball_plate",
        "controller": "hmpc",
        "params": {"N": 5},
        "references": [{"step": 0, "x_r": [1.8, 0, 0, 0, 1.4, 0, 0, 0], "u_r": [0, 0]}],
        "n_iter": 4
    })");
}

} // namespace

TEST(Scenario, ParseAngles)
{
    EXPECT_DOUBLE_EQ(parse_angle("pi/2"), std::numbers::pi / 2);
    EXPECT_DOUBLE_EQ(parse_angle("2pi"), 2 * std::numbers::pi);
    EXPECT_DOUBLE_EQ(parse_angle("2*pi"), 2 * std::numbers::pi);
    EXPECT_DOUBLE_EQ(parse_angle("0.7*0.3254"), 0.7 * 0.3254);
    EXPECT_DOUBLE_EQ(parse_angle("0.3254"), 0.3254);
    EXPECT_THROW(parse_angle("tau"), ScenarioError);
    EXPECT_THROW(parse_angle(""), ScenarioError);
}

TEST(Scenario, MalformedJsonReportsLine)
{
    try {
        parse_json_text("{\n  \"name\": \"x\",\n  \"n_iter\": ,\n}", "bad.json");
        FAIL() << "expected ScenarioError";
    } catch (const ScenarioError& e) {
        EXPECT_NE(std::string(e.what()).find("bad.json:3:"), std::string::npos) << e.what();
    }
}

TEST(Scenario, MinimalDefaults)
{
    const Scenario s = parse_scenario(minimal(), ".");
    EXPECT_EQ(s.kind, ControllerKind::Hmpc);
    EXPECT_EQ(s.params.N, 5);
    EXPECT_DOUBLE_EQ(s.params.w, 0.3254);
    EXPECT_EQ(s.x0, Vector::Zero(8));
    EXPECT_EQ(s.n_iter, 4);
    EXPECT_TRUE(s.settings.polish);
}

TEST(Scenario, RejectsInvalidContent)
{
    Json j = minimal();
    j["unexpected"] = 1;
    EXPECT_THROW(parse_scenario(j, "."), ScenarioError);

    j = minimal();
    j["controller"] = "lqr";
    EXPECT_ANY_THROW(parse_scenario(j, "."));

    j = minimal();
    j["references"][0]["step"] = 3;
    EXPECT_THROW(parse_scenario(j, "."), ScenarioError);

    j = minimal();
    j["references"].push_back(j["references"][0]);
    EXPECT_THROW(parse_scenario(j, "."), ScenarioError);

    j = minimal();
    j["references"][0]["x_r"] = Json::array({1, 2});
    EXPECT_THROW(parse_scenario(j, "."), DimensionError);

    j = minimal();
    j["params"]["Q"] = Json::array({1, 2, 3});
    EXPECT_THROW(parse_scenario(j, "."), DimensionError);

    j = minimal();
    j["params"]["bogus"] = 1;
    EXPECT_THROW(parse_scenario(j, "."), ScenarioError);

    j = minimal();
    j["solver"] = {{"alpha", 3.0}};
    EXPECT_THROW(parse_scenario(j, "."), InvalidParameter);
}

TEST(Scenario, DiagonalWeightsFromFlatArray)
{
    Json j = minimal();
    j["params"]["R"] = Json::array({2.0, 3.0});
    const Scenario s = parse_scenario(j, ".");
    EXPECT_EQ(s.params.R(0, 0), 2.0);
    EXPECT_EQ(s.params.R(1, 1), 3.0);
    EXPECT_EQ(s.params.R(0, 1), 0.0);
}

TEST(Scenario, SweepExpansion)
{
    const Scenario s = load_scenario(kScenarios / "fig4_sweep.json");
    const std::vector<Scenario> runs = expand_sweep(s);
    ASSERT_EQ(runs.size(), 4u);
    EXPECT_NEAR(runs[0].params.w, 0.2278, 1e-4);
    EXPECT_DOUBLE_EQ(runs[1].params.w, 0.3254);
    EXPECT_DOUBLE_EQ(runs[2].params.w, std::numbers::pi / 2);
    EXPECT_DOUBLE_EQ(runs[3].params.w, 2 * std::numbers::pi);
    EXPECT_NE(runs[0].name, runs[1].name);
    EXPECT_EQ(expand_sweep(load_scenario(kScenarios / "table2_hmpc_n5.json")).size(), 1u);
}

TEST(Scenario, BundledScenariosLoad)
{
    for (const auto& entry : std::filesystem::directory_iterator(kScenarios)) {
        if (entry.path().extension() == ".json") {
            EXPECT_NO_THROW(load_scenario(entry.path())) << entry.path();
        }
    }
    const Scenario s = load_scenario(kScenarios / "reference_change.json");
    ASSERT_EQ(s.schedule.size(), 2u);
    EXPECT_EQ(s.schedule[1].step, 25);
}

TEST(Scenario, InlineModel)
{
    Json j = minimal();
    j["model"] = to_json(ball_plate_model(), ball_plate_constraints());
    j["model"]["eps"] = Json::array({1e-4});
    const Scenario s = parse_scenario(j, ".");
    EXPECT_EQ(s.plant.constraints.eps().size(), 6);
    EXPECT_EQ(s.plant.constraints.eps()(5), 1e-4);
}

TEST(Scenario, RunWritesArtifacts)
{
    const std::filesystem::path dir = std::filesystem::temp_directory_path() / "hmpc_scenario_test";
    std::filesystem::remove_all(dir);
    Scenario s = parse_scenario(minimal(), ".");
    s.output_dir = dir;
    s.snapshots = {2};
    ArtifactOptions options;
    options.solver_log = true;
    const ScenarioResult r = run_scenario(s, options);
    EXPECT_EQ(r.summary.n_iter, 4);
    EXPECT_GT(r.summary.phi, 0.0);
    for (const char* file : {"t_trace.csv", "t_summary.json", "t_snapshot_k2.csv", "t_solver_log.csv"}) {
        EXPECT_TRUE(std::filesystem::exists(dir / file)) << file;
    }
    std::ifstream summary(dir / "t_summary.json");
    const Json j = Json::parse(summary);
    EXPECT_NEAR(j.at("phi").get<double>(), r.summary.phi, 1e-9 * r.summary.phi);
    std::filesystem::remove_all(dir);
}

TEST(Scenario, BatchKeepsOrder)
{
    Json a = minimal();
    a["name"] = "a";
    Json b = minimal();
    b["name"] = "b";
    b["controller"] = "mpct";
    ArtifactOptions options;
    options.write_files = false;
    const std::vector<ScenarioResult> results =
        run_batch({parse_scenario(a, "."), parse_scenario(b, ".")}, 2, options);
    ASSERT_EQ(results.size(), 2u);
    EXPECT_EQ(results[0].summary.name, "a");
    EXPECT_EQ(results[1].summary.kind, ControllerKind::Mpct);
}

TEST(Scenario, Table2ReportEchoesParameters)
{
    Table2Report report;
    report.params = ControllerParams::ball_plate(5);
    report.rows.push_back({"HMPC N=5", ControllerKind::Hmpc, 5, 511.0, 511.1, 0.0002, 1.0, 2.0});
    std::ostringstream out;
    print_table2(out, report);
    const std::string text = out.str();
    EXPECT_NE(text.find("HMPC N=5"), std::string::npos);
    EXPECT_NE(text.find("0.3254"), std::string::npos);
    const Json j = to_json(report);
    EXPECT_EQ(j.at("rows").size(), 1u);
}
