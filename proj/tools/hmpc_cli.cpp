#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hmpc/errors.hpp"
#include "hmpc/formulations.hpp"
#include "hmpc/freqdesign.hpp"
#include "hmpc/json_io.hpp"
#include "hmpc/scenario.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitInput = 2;
constexpr int kExitInfeasible = 3;

std::vector<std::string> split(const std::string& text, char sep)
{
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, sep)) {
        if (!item.empty()) {
            out.push_back(item);
        }
    }
    return out;
}

std::vector<int> parse_steps(const std::string& text)
{
    std::vector<int> steps;
    for (const std::string& s : split(text, ',')) {
        try {
            std::size_t used = 0;
            steps.push_back(std::stoi(s, &used));
            if (used != s.size()) {
                throw std::invalid_argument(s);
            }
        } catch (const std::exception&) {
            throw hmpc::ScenarioError("--emit-snapshots: cannot parse step '" + s + "'");
        }
    }
    return steps;
}

void print_summary(const hmpc::ScenarioSummary& s, bool timing)
{
    std::cout << s.name << ": " << hmpc::to_string(s.kind) << " N=" << s.horizon << " w=" << s.w
              << " Phi=" << s.phi << " final_error=" << s.final_error << " iterations=" << s.total_iterations;
    if (timing) {
        std::cout << " mean_ms=" << s.mean_solve_ms << " max_ms=" << s.max_solve_ms;
    }
    std::cout << "\n";
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Harmonic and tracking MPC experiments on linear plants"};

    std::vector<std::string> scenario_paths;
    bool table2 = false;
    std::string sweep_list;
    int jobs = 1;
    std::string snapshot_list;
    bool solver_log = false;
    std::string out_dir;
    bool no_timing = false;
    bool suggest = false;
    std::string gain_csv;
    int out_index = 0;
    int in_index = 0;
    std::string dump_program;

    app.add_option("--scenario", scenario_paths, "Scenario JSON file (repeatable)");
    app.add_flag("--table2", table2, "Run MPCT N=5,8,15 and HMPC N=5 on the ball-and-plate benchmark");
    app.add_option("--sweep-w", sweep_list, "Comma-separated base frequencies, e.g. 0.2278,0.3254,pi/2,2pi");
    app.add_option("--jobs", jobs, "Scenarios run concurrently")->check(CLI::PositiveNumber);
    app.add_option("--emit-snapshots", snapshot_list, "Comma-separated steps whose predictions are exported");
    app.add_flag("--solver-log", solver_log, "Write the per-iteration solver log of every step");
    app.add_option("--out", out_dir, "Override the output directory of every scenario");
    app.add_flag("--no-timing", no_timing, "Write zero solve times so that artifacts are reproducible byte for byte");
    app.add_flag("--suggest-w", suggest, "Print the suggested base frequency for the selected channel");
    app.add_option("--gain-csv", gain_csv, "Write the gain of the selected channel on a log grid to this file");
    app.add_option("--output-index", out_index, "Constrained output of the channel (default 0)");
    app.add_option("--input-index", in_index, "Input of the channel (default 0)");
    app.add_option("--dump-program", dump_program, "Write the cone program at x0 of the first scenario as JSON");

    CLI11_PARSE(app, argc, argv);

    try {
        std::vector<hmpc::Scenario> scenarios;
        for (const std::string& path : scenario_paths) {
            hmpc::Scenario s = hmpc::load_scenario(path);
            if (!sweep_list.empty()) {
                s.sweep_w.clear();
                for (const std::string& w : split(sweep_list, ',')) {
                    s.sweep_w.push_back(hmpc::parse_angle(w));
                }
            }
            if (!out_dir.empty()) {
                s.output_dir = out_dir;
            }
            s.validate();
            for (hmpc::Scenario& e : hmpc::expand_sweep(s)) {
                scenarios.push_back(std::move(e));
            }
        }
        if (scenarios.empty() && !table2 && !suggest && gain_csv.empty()) {
            std::cerr << "nothing to do; pass --scenario, --table2, --suggest-w or --gain-csv\n";
            return kExitInput;
        }

        const hmpc::ModelBundle plant = scenarios.empty()
                                            ? hmpc::ModelBundle{hmpc::ball_plate_model(), hmpc::ball_plate_constraints()}
                                            : scenarios.front().plant;
        if (suggest) {
            const hmpc::SuggestedFrequency s =
                hmpc::suggest_w(plant.model, plant.constraints, out_index, in_index);
            std::cout << "suggested w = " << s.w << " (" << hmpc::to_string(s.status) << ", bound ratio "
                      << s.ratio << ")\n";
            if (!s.note.empty()) {
                std::cerr << "warning: " << s.note << "\n";
            }
        }
        if (!gain_csv.empty()) {
            const auto response = hmpc::frequency_response(plant.model, hmpc::log_grid(1e-3, 3.14159, 400));
            std::ofstream out(gain_csv);
            if (!out) {
                throw hmpc::ScenarioError("cannot write " + gain_csv);
            }
            hmpc::write_gain_csv(out, response, out_index, in_index);
        }
        if (!dump_program.empty()) {
            if (scenarios.empty()) {
                throw hmpc::ScenarioError("--dump-program needs a scenario");
            }
            const hmpc::Scenario& s = scenarios.front();
            const hmpc::ConeProgram program =
                s.kind == hmpc::ControllerKind::Hmpc
                    ? hmpc::build_hmpc(s.plant.model, s.plant.constraints, s.params, s.schedule.front().ref, s.x0)
                    : hmpc::build_mpct(s.plant.model, s.plant.constraints, s.params, s.schedule.front().ref, s.x0);
            std::ofstream out(dump_program);
            out << hmpc::to_json(program).dump(1) << "\n";
        }

        if (!scenarios.empty()) {
            hmpc::ArtifactOptions options;
            options.include_timing = !no_timing;
            options.solver_log = solver_log;
            options.extra_snapshots = parse_steps(snapshot_list);
            for (const hmpc::Scenario& s : scenarios) {
                for (const std::string& warning : s.params.validate(s.plant.model)) {
                    std::cerr << s.name << ": warning: " << warning << "\n";
                }
            }
            const auto results = hmpc::run_batch(scenarios, jobs, options);
            for (const auto& r : results) {
                print_summary(r.summary, !no_timing);
            }
        }
        if (table2) {
            const hmpc::Table2Report report = hmpc::run_table2(jobs);
            hmpc::print_table2(std::cout, report);
            if (!out_dir.empty()) {
                std::filesystem::create_directories(out_dir);
                std::ofstream out(std::filesystem::path(out_dir) / "table2.json");
                out << hmpc::to_json(report).dump(2) << "\n";
            }
        }
        return kExitOk;
    } catch (const hmpc::ScenarioError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const hmpc::DimensionError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const hmpc::InvalidParameter& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const hmpc::InitialInfeasible& e) {
        std::cerr << "infeasible: " << e.what() << "\n";
        return kExitInfeasible;
    } catch (const hmpc::StepInfeasible& e) {
        std::cerr << "infeasible: " << e.what() << "\n";
        return kExitInfeasible;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFailure;
    }
}
