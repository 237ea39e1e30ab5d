#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "hmpc/json_io.hpp"
#include "hmpc/sim.hpp"

namespace hmpc {

/**
 * Declarative closed-loop experiment. Fields of the JSON document:
 *
 *   name         string, used as the prefix of the output files
 *   model        "ball_plate", an inline model object, or {"file": path}
 *   controller   "mpct" | "hmpc"
 *   params       overrides of the ball-and-plate tuning (N, Q, R, ..., w)
 *   x0           initial state (default zero)
 *   references   [{"step": k, "x_r": [...], "u_r": [...]}], steps increasing from 0
 *   n_iter       number of closed-loop steps
 *   output_dir   where artifacts are written (default ".")
 *   snapshots    steps whose predictions are exported
 *   solver       overrides of the closed-loop solver settings
 *   sweep_w      optional list of base frequencies; one run per value
 */
struct Scenario {
    explicit Scenario(ModelBundle plant_) : plant(std::move(plant_)) {}

    std::string name;
    ModelBundle plant;
    ControllerKind kind = ControllerKind::Hmpc;
    ControllerParams params;
    Vector x0;
    std::vector<ScheduledReference> schedule;
    int n_iter = 50;
    std::filesystem::path output_dir = ".";
    std::vector<int> snapshots;
    SolverSettings settings = closed_loop_settings();
    std::vector<double> sweep_w;

    /// Throws ScenarioError/DimensionError/InvalidParameter on inconsistent content.
    void validate() const;
};

/// `base_dir` resolves relative model file paths.
Scenario parse_scenario(const Json& j, const std::filesystem::path& base_dir);
Scenario load_scenario(const std::filesystem::path& path);

/// One scenario per sweep value (names suffixed "_w<i>"), or the scenario itself.
std::vector<Scenario> expand_sweep(const Scenario& scenario);

struct ScenarioSummary {
    std::string name;
    ControllerKind kind = ControllerKind::Hmpc;
    int horizon = 0;
    double w = 0.0;
    int n_iter = 0;
    double phi = 0.0;
    /// ||x_{N_iter} - x_r|| for the last active reference.
    double final_error = 0.0;
    double mean_solve_ms = 0.0;
    double max_solve_ms = 0.0;
    double total_ms = 0.0;
    long total_iterations = 0;
    int max_iterations = 0;
    double mean_iterations = 0.0;
    double max_constraint_violation = 0.0;
};

Json to_json(const ScenarioSummary& summary, bool include_timing = true);

struct ArtifactOptions {
    bool write_files = true;
    bool include_timing = true;
    bool solver_log = false;
    /// Extra snapshot steps on top of the scenario's own list.
    std::vector<int> extra_snapshots;
};

struct ScenarioResult {
    ScenarioSummary summary;
    SimulationTrace trace;
};

/**
 * Runs the closed loop and, if requested, writes <name>_trace.csv,
 * <name>_summary.json, <name>_snapshot_k<k>.csv and <name>_solver_log.csv
 * into the output directory.
 */
ScenarioResult run_scenario(const Scenario& scenario, const ArtifactOptions& options = {});

/// Runs independent scenarios on up to `jobs` threads; results keep the input order.
std::vector<ScenarioResult> run_batch(const std::vector<Scenario>& scenarios, int jobs,
                                      const ArtifactOptions& options = {});

/// Ball-and-plate set-point change from the origin used by the benchmark.
Reference ball_plate_reference();

struct Table2Row {
    std::string label;
    ControllerKind kind = ControllerKind::Hmpc;
    int horizon = 0;
    double phi = 0.0;
    double reference_phi = 0.0;
    double relative_error = 0.0;
    double mean_solve_ms = 0.0;
    double max_solve_ms = 0.0;
};

struct Table2Report {
    std::vector<Table2Row> rows;
    ControllerParams params;
    double total_seconds = 0.0;
};

/// MPCT N=5, 8, 15 and HMPC N=5 on the benchmark, 50 steps each.
Table2Report run_table2(int jobs = 1, const SolverSettings& settings = closed_loop_settings());

void print_table2(std::ostream& out, const Table2Report& report);
Json to_json(const Table2Report& report);

} // namespace hmpc
