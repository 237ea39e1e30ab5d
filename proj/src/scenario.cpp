#include "hmpc/scenario.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "hmpc/errors.hpp"

namespace hmpc {

namespace {

const char* const kKnownFields[] = {"name",       "model",     "controller", "params",
                                    "x0",         "references", "n_iter",    "output_dir",
                                    "snapshots",  "solver",    "sweep_w"};

std::string read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ScenarioError("cannot open " + path.string());
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

ModelBundle load_model(const Json& j, const std::filesystem::path& base_dir)
{
    if (j.is_string()) {
        if (j.get<std::string>() != "ball_plate") {
            throw ScenarioError("model: unknown built-in model '" + j.get<std::string>() + "'");
        }
        return {ball_plate_model(), ball_plate_constraints()};
    }
    if (j.is_object() && j.contains("file")) {
        if (!j.at("file").is_string()) {
            throw ScenarioError("model.file: expected a path string");
        }
        std::filesystem::path path = j.at("file").get<std::string>();
        if (path.is_relative()) {
            path = base_dir / path;
        }
        return model_from_json(parse_json_text(read_file(path), path.string()));
    }
    if (j.is_object()) {
        return model_from_json(j);
    }
    throw ScenarioError("model: expected \"ball_plate\", a model object, or {\"file\": path}");
}

void write_text(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw ScenarioError("cannot write " + path.string());
    }
    out << text;
}

double max_violation(const SimulationTrace& trace, const ConstraintSet& constraints)
{
    double worst = 0.0;
    for (const StepRecord& s : trace.steps) {
        worst = std::max(worst, constraints.violation(s.z));
    }
    return worst;
}

ScenarioSummary summarize(const Scenario& scenario, const SimulationTrace& trace)
{
    ScenarioSummary s;
    s.name = scenario.name;
    s.kind = scenario.kind;
    s.horizon = scenario.params.N;
    s.w = scenario.params.w;
    s.n_iter = trace.n_iter();
    if (trace.n_iter() == 0) {
        return s;
    }
    s.phi = performance_index(trace, scenario.params.Q, scenario.params.R);
    s.final_error = (trace.x.back() - trace.refs.back().x_r).norm();
    for (const StepRecord& step : trace.steps) {
        s.total_ms += step.report.solve_ms;
        s.max_solve_ms = std::max(s.max_solve_ms, step.report.solve_ms);
        s.total_iterations += step.report.iterations;
        s.max_iterations = std::max(s.max_iterations, step.report.iterations);
    }
    s.mean_solve_ms = s.total_ms / trace.n_iter();
    s.mean_iterations = static_cast<double>(s.total_iterations) / trace.n_iter();
    s.max_constraint_violation = max_violation(trace, scenario.plant.constraints);
    return s;
}

} // namespace

void Scenario::validate() const
{
    if (name.empty()) {
        throw ScenarioError("name must not be empty");
    }
    if (n_iter < 1) {
        throw ScenarioError("n_iter must be at least 1");
    }
    if (x0.size() != plant.model.n()) {
        throw DimensionError("x0 has " + std::to_string(x0.size()) + " entries, model has " +
                             std::to_string(plant.model.n()) + " states");
    }
    if (schedule.empty() || schedule.front().step != 0) {
        throw ScenarioError("references must start at step 0");
    }
    for (std::size_t i = 0; i < schedule.size(); ++i) {
        if (i > 0 && schedule[i].step <= schedule[i - 1].step) {
            throw ScenarioError("reference steps must be strictly increasing");
        }
        if (schedule[i].ref.x_r.size() != plant.model.n() || schedule[i].ref.u_r.size() != plant.model.m()) {
            throw DimensionError("reference " + std::to_string(i) + " does not match the model dimensions");
        }
    }
    for (int k : snapshots) {
        if (k < 0 || k >= n_iter) {
            throw ScenarioError("snapshot step " + std::to_string(k) + " outside [0, n_iter)");
        }
    }
    for (double w : sweep_w) {
        if (!(w > 0.0)) {
            throw ScenarioError("sweep_w values must be positive");
        }
    }
    params.validate(plant.model);
    settings.validate();
}

Scenario parse_scenario(const Json& j, const std::filesystem::path& base_dir)
{
    if (!j.is_object()) {
        throw ScenarioError("scenario: expected a JSON object");
    }
    for (const auto& item : j.items()) {
        if (std::find(std::begin(kKnownFields), std::end(kKnownFields), item.key()) == std::end(kKnownFields)) {
            throw ScenarioError("scenario: unknown field '" + item.key() + "'");
        }
    }
    Scenario s(load_model(j.contains("model") ? j.at("model") : Json("ball_plate"), base_dir));
    const LtiModel& model = s.plant.model;

    s.name = j.value("name", std::string("scenario"));
    if (!j.contains("controller") || !j.at("controller").is_string()) {
        throw ScenarioError("scenario: field 'controller' must be \"mpct\" or \"hmpc\"");
    }
    try {
        s.kind = controller_kind_from_string(j.at("controller").get<std::string>());
    } catch (const InvalidParameter& e) {
        throw ScenarioError(std::string("controller: ") + e.what());
    }

    ControllerParams base = ControllerParams::ball_plate(5);
    if (model.n() != 8 || model.m() != 2) {
        // Identity weights when the built-in tuning does not fit the model.
        const Matrix In = Matrix::Identity(model.n(), model.n());
        const Matrix Im = Matrix::Identity(model.m(), model.m());
        base.Q = base.T_e = base.T_h = base.T_a = In;
        base.R = base.S_e = base.S_h = base.S_a = Im;
    }
    s.params = j.contains("params") ? params_from_json(j.at("params"), base) : base;

    s.x0 = j.contains("x0") ? vector_from_json(j.at("x0"), "x0") : Vector::Zero(model.n());
    if (!j.contains("references") || !j.at("references").is_array()) {
        throw ScenarioError("scenario: field 'references' must be an array");
    }
    for (std::size_t i = 0; i < j.at("references").size(); ++i) {
        const Json& r = j.at("references")[i];
        const std::string ctx = "references[" + std::to_string(i) + "]";
        if (!r.is_object() || !r.contains("x_r")) {
            throw ScenarioError(ctx + ": missing field 'x_r'");
        }
        ScheduledReference entry;
        entry.step = r.contains("step") ? r.at("step").get<int>() : 0;
        entry.ref.x_r = vector_from_json(r.at("x_r"), ctx + ".x_r");
        entry.ref.u_r = r.contains("u_r") ? vector_from_json(r.at("u_r"), ctx + ".u_r") : Vector::Zero(model.m());
        s.schedule.push_back(std::move(entry));
    }
    if (j.contains("n_iter")) {
        if (!j.at("n_iter").is_number_integer()) {
            throw ScenarioError("n_iter: expected an integer");
        }
        s.n_iter = j.at("n_iter").get<int>();
    }
    if (j.contains("output_dir")) {
        s.output_dir = j.at("output_dir").get<std::string>();
    }
    if (j.contains("snapshots")) {
        for (const Json& k : j.at("snapshots")) {
            if (!k.is_number_integer()) {
                throw ScenarioError("snapshots: expected integers");
            }
            s.snapshots.push_back(k.get<int>());
        }
    }
    if (j.contains("solver")) {
        s.settings = settings_from_json(j.at("solver"), s.settings);
    }
    if (j.contains("sweep_w")) {
        const Json& list = j.at("sweep_w");
        if (!list.is_array()) {
            throw ScenarioError("sweep_w: expected an array");
        }
        for (std::size_t i = 0; i < list.size(); ++i) {
            s.sweep_w.push_back(angle_from_json(list[i], "sweep_w[" + std::to_string(i) + "]"));
        }
    }
    s.validate();
    return s;
}

Scenario load_scenario(const std::filesystem::path& path)
{
    const Json j = parse_json_text(read_file(path), path.string());
    try {
        return parse_scenario(j, path.parent_path());
    } catch (const Json::exception& e) {
        throw ScenarioError(path.string() + ": " + e.what());
    }
}

std::vector<Scenario> expand_sweep(const Scenario& scenario)
{
    if (scenario.sweep_w.empty()) {
        return {scenario};
    }
    std::vector<Scenario> out;
    for (std::size_t i = 0; i < scenario.sweep_w.size(); ++i) {
        Scenario s = scenario;
        s.sweep_w.clear();
        s.params.w = scenario.sweep_w[i];
        s.name = scenario.name + "_w" + std::to_string(i);
        out.push_back(std::move(s));
    }
    return out;
}

Json to_json(const ScenarioSummary& s, bool include_timing)
{
    Json j{{"name", s.name},
           {"controller", to_string(s.kind)},
           {"N", s.horizon},
           {"w", s.w},
           {"n_iter", s.n_iter},
           {"phi", s.phi},
           {"final_error", s.final_error},
           {"total_iterations", s.total_iterations},
           {"max_iterations", s.max_iterations},
           {"mean_iterations", s.mean_iterations},
           {"max_constraint_violation", s.max_constraint_violation}};
    if (include_timing) {
        j["mean_solve_ms"] = s.mean_solve_ms;
        j["max_solve_ms"] = s.max_solve_ms;
        j["total_ms"] = s.total_ms;
    }
    return j;
}

ScenarioResult run_scenario(const Scenario& scenario, const ArtifactOptions& options)
{
    scenario.validate();
    std::vector<int> snaps = scenario.snapshots;
    for (int k : options.extra_snapshots) {
        if (k >= 0 && k < scenario.n_iter) {
            snaps.push_back(k);
        }
    }
    std::sort(snaps.begin(), snaps.end());
    snaps.erase(std::unique(snaps.begin(), snaps.end()), snaps.end());

    RunOptions run;
    run.settings = scenario.settings;
    run.settings.record_history = options.solver_log;
    run.record_predictions = !snaps.empty();

    ScenarioResult result;
    result.trace = run_closed_loop(scenario.plant.model, scenario.plant.constraints, scenario.params,
                                   scenario.kind, scenario.schedule, scenario.x0, scenario.n_iter, run);
    result.summary = summarize(scenario, result.trace);
    if (!options.write_files) {
        return result;
    }

    std::filesystem::create_directories(scenario.output_dir);
    const std::filesystem::path prefix = scenario.output_dir / scenario.name;
    {
        std::ostringstream csv;
        write_trace_csv(csv, result.trace, options.include_timing);
        write_text(prefix.string() + "_trace.csv", csv.str());
    }
    write_text(prefix.string() + "_summary.json", to_json(result.summary, options.include_timing).dump(2) + "\n");
    for (int k : snaps) {
        std::ostringstream csv;
        write_snapshot_csv(csv, snapshot(result.trace, k));
        write_text(prefix.string() + "_snapshot_k" + std::to_string(k) + ".csv", csv.str());
    }
    if (options.solver_log) {
        std::ostringstream csv;
        csv << "step,iter,r_prim,r_dual,objective\n";
        csv.precision(12);
        for (int k = 0; k < result.trace.n_iter(); ++k) {
            for (const IterationRecord& r : result.trace.steps[static_cast<std::size_t>(k)].report.history) {
                csv << k << ',' << r.iteration << ',' << r.r_prim << ',' << r.r_dual << ',' << r.objective << '\n';
            }
        }
        write_text(prefix.string() + "_solver_log.csv", csv.str());
    }
    return result;
}

std::vector<ScenarioResult> run_batch(const std::vector<Scenario>& scenarios, int jobs,
                                      const ArtifactOptions& options)
{
    std::vector<ScenarioResult> results(scenarios.size());
    std::vector<std::exception_ptr> errors(scenarios.size());
    std::atomic<std::size_t> next{0};
    const auto worker = [&] {
        for (std::size_t i = next++; i < scenarios.size(); i = next++) {
            try {
                results[i] = run_scenario(scenarios[i], options);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const int threads = std::clamp(jobs, 1, static_cast<int>(std::max<std::size_t>(1, scenarios.size())));
    std::vector<std::thread> pool;
    for (int t = 1; t < threads; ++t) {
        pool.emplace_back(worker);
    }
    worker();
    for (std::thread& t : pool) {
        t.join();
    }
    for (const std::exception_ptr& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
    return results;
}

Reference ball_plate_reference()
{
    Vector x_r(8);
    x_r << 1.8, 0, 0, 0, 1.4, 0, 0, 0;
    return {x_r, Vector::Zero(2)};
}

Table2Report run_table2(int jobs, const SolverSettings& settings)
{
    struct Case {
        ControllerKind kind;
        int horizon;
        double reference_phi;
    };
    const Case cases[] = {{ControllerKind::Mpct, 5, 2014.1},
                          {ControllerKind::Mpct, 8, 844.1},
                          {ControllerKind::Mpct, 15, 488.9},
                          {ControllerKind::Hmpc, 5, 511.1}};
    std::vector<Scenario> scenarios;
    for (const Case& c : cases) {
        Scenario s({ball_plate_model(), ball_plate_constraints()});
        s.kind = c.kind;
        s.params = ControllerParams::ball_plate(c.horizon);
        s.name = to_string(c.kind) + "_n" + std::to_string(c.horizon);
        s.x0 = Vector::Zero(8);
        s.schedule = {{0, ball_plate_reference()}};
        s.n_iter = 50;
        s.settings = settings;
        scenarios.push_back(std::move(s));
    }
    ArtifactOptions options;
    options.write_files = false;
    const auto start = std::chrono::steady_clock::now();
    const std::vector<ScenarioResult> results = run_batch(scenarios, jobs, options);

    Table2Report report;
    report.total_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    report.params = ControllerParams::ball_plate(5);
    for (std::size_t i = 0; i < results.size(); ++i) {
        const ScenarioSummary& s = results[i].summary;
        Table2Row row;
        row.label = (s.kind == ControllerKind::Mpct ? "MPCT N=" : "HMPC N=") + std::to_string(s.horizon);
        row.kind = s.kind;
        row.horizon = s.horizon;
        row.phi = s.phi;
        row.reference_phi = cases[i].reference_phi;
        row.relative_error = (s.phi - row.reference_phi) / row.reference_phi;
        row.mean_solve_ms = s.mean_solve_ms;
        row.max_solve_ms = s.max_solve_ms;
        report.rows.push_back(row);
    }
    return report;
}

void print_table2(std::ostream& out, const Table2Report& report)
{
    const auto diag = [](const Matrix& M) {
        std::ostringstream s;
        s << "diag(";
        for (Eigen::Index i = 0; i < M.rows(); ++i) {
            s << (i ? ", " : "") << M(i, i);
        }
        s << ")";
        return s.str();
    };
    const ControllerParams& p = report.params;
    out << "Controller parameters\n";
    out << "  Q   = " << diag(p.Q) << "\n";
    out << "  R   = " << diag(p.R) << "\n";
    out << "  T_e = " << diag(p.T_e) << "\n";
    out << "  S_e = " << diag(p.S_e) << "\n";
    out << "  T_h = " << diag(p.T_h) << "\n";
    out << "  S_h = " << diag(p.S_h) << "\n";
    out << "  T_a = " << diag(p.T_a) << "\n";
    out << "  S_a = " << diag(p.S_a) << "\n";
    out << "  w   = " << p.w << "\n";
    out << "  eps = " << diag(ball_plate_constraints().eps().asDiagonal()) << "\n\n";

    out << std::left << std::setw(12) << "Controller" << std::right << std::setw(12) << "Phi"
        << std::setw(12) << "reference" << std::setw(10) << "rel.err" << std::setw(14) << "mean ms"
        << std::setw(12) << "max ms" << "\n";
    for (const Table2Row& r : report.rows) {
        out << std::left << std::setw(12) << r.label << std::right << std::fixed << std::setprecision(1)
            << std::setw(12) << r.phi << std::setw(12) << r.reference_phi << std::setw(9)
            << std::setprecision(2) << 100.0 * r.relative_error << "%" << std::setw(14)
            << std::setprecision(3) << r.mean_solve_ms << std::setw(12) << r.max_solve_ms << "\n";
    }
    out << std::defaultfloat << std::setprecision(6);
    out << "total wall time: " << report.total_seconds << " s\n";
}

Json to_json(const Table2Report& report)
{
    Json rows = Json::array();
    for (const Table2Row& r : report.rows) {
        rows.push_back({{"controller", to_string(r.kind)},
                        {"N", r.horizon},
                        {"phi", r.phi},
                        {"reference_phi", r.reference_phi},
                        {"relative_error", r.relative_error},
                        {"mean_solve_ms", r.mean_solve_ms},
                        {"max_solve_ms", r.max_solve_ms}});
    }
    return Json{{"rows", rows}, {"params", to_json(report.params)}, {"total_seconds", report.total_seconds}};
}

} // namespace hmpc
