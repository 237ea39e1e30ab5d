#include "hmpc/sim.hpp"

#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>

#include "hmpc/errors.hpp"

namespace hmpc {

namespace {

constexpr int kMaxRefinements = 4;

double weighted_square(const Vector& v, const Matrix& W)
{
    return v.dot(W * v);
}

// Residual allowed on a solution returned at the solver's own tolerance.
double extraction_tolerance(const SolverSettings& s, const ConeProgram& program)
{
    const double scale = std::max(1.0, program.b.cwiseAbs().maxCoeff());
    return std::max(kFeasibilityTolerance, 10.0 * (s.eps_abs + s.eps_rel * scale));
}

FeasibleSolution warm_point(const LtiModel& model, const ConstraintSet& constraints,
                            ControllerKind kind, const FeasibleSolution& sol)
{
    const double unchecked = std::numeric_limits<double>::infinity();
    FeasibleSolution next = shift_solution(model, constraints, sol, unchecked);
    if (kind == ControllerKind::Mpct) {
        next.u.back() = sol.u.back();
        for (int j = 0; j < next.horizon(); ++j) {
            next.x[static_cast<std::size_t>(j) + 1] =
                model.step(next.x[static_cast<std::size_t>(j)], next.u[static_cast<std::size_t>(j)]);
        }
    }
    return next;
}

std::string join_header(const char* prefix, Eigen::Index count)
{
    std::string out;
    for (Eigen::Index i = 1; i <= count; ++i) {
        out += ",";
        out += prefix;
        out += std::to_string(i);
    }
    return out;
}

void write_values(std::ostream& out, const Vector& v)
{
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        out << ',' << v(i);
    }
}

void write_blanks(std::ostream& out, Eigen::Index count)
{
    for (Eigen::Index i = 0; i < count; ++i) {
        out << ',';
    }
}

} // namespace

MpcController::MpcController(LtiModel model, ConstraintSet constraints, ControllerParams params,
                             ControllerKind kind, Reference ref, SolverSettings settings,
                             double feasibility_tolerance)
    : model_(std::move(model)),
      constraints_(std::move(constraints)),
      params_(std::move(params)),
      kind_(kind),
      ref_(std::move(ref)),
      settings_(settings),
      feasibility_tolerance_(feasibility_tolerance),
      program_(build(Vector::Zero(model_.n()))),
      solver_(program_, settings_)
{
    set_reference(ref_);
}

ConeProgram MpcController::build(const Vector& x) const
{
    return kind_ == ControllerKind::Hmpc ? build_hmpc(model_, constraints_, params_, ref_, x)
                                         : build_mpct(model_, constraints_, params_, ref_, x);
}

void MpcController::set_reference(const Reference& ref)
{
    ref_ = ref;
    ControllerParams offset = params_;
    if (kind_ == ControllerKind::Mpct) {
        // The steady optimum of the harmonic subproblem has zero harmonic terms.
        offset.T_e = params_.T_a;
        offset.S_e = params_.S_a;
    }
    optimal_offset_cost_ =
        optimal_artificial_reference(model_, constraints_, offset, ref_, settings_).offset_cost;
}

MpcController::Result MpcController::solve(const Vector& x)
{
    program_ = build(x);
    solver_.update_linear_terms(program_.q, program_.b);
    solver_.set_constant(program_.constant);
    SolveResult result = solver_.solve(warm_);
    SolveReport total = result.report;
    double eps_abs = settings_.eps_abs;
    double eps_rel = settings_.eps_rel;
    for (int pass = 0; pass < kMaxRefinements && result.report.status == SolveStatus::Solved &&
                       program_residual(program_, result.x) > feasibility_tolerance_;
         ++pass) {
        eps_abs *= 0.1;
        eps_rel *= 0.1;
        solver_.set_tolerances(eps_abs, eps_rel);
        result = solver_.solve(WarmStart{result.x, result.y});
        total.iterations += result.report.iterations;
        total.factorizations += result.report.factorizations;
        total.solve_ms += result.report.solve_ms;
        for (const IterationRecord& r : result.report.history) {
            total.history.push_back(r);
        }
    }
    solver_.set_tolerances(settings_.eps_abs, settings_.eps_rel);
    total.status = result.report.status;
    total.r_prim = result.report.r_prim;
    total.r_dual = result.report.r_dual;
    total.objective = result.report.objective;
    result.report = std::move(total);
    if (result.report.status != SolveStatus::Solved) {
        warm_.reset();
        throw StepInfeasible("solver returned " + to_string(result.report.status) + " after " +
                             std::to_string(result.report.iterations) + " iterations");
    }
    FeasibleSolution sol =
        extract_solution(program_, result.x, extraction_tolerance(settings_, program_));
    const FeasibleSolution next = warm_point(model_, constraints_, kind_, sol);
    warm_ = WarmStart{to_primal(program_, next), result.y};
    return {std::move(sol), std::move(result.report)};
}

SimulationTrace run_closed_loop(const LtiModel& model, const ConstraintSet& constraints,
                                const ControllerParams& params, ControllerKind kind,
                                const std::vector<ScheduledReference>& schedule, const Vector& x0,
                                int n_iter, const RunOptions& options)
{
    if (schedule.empty() || schedule.front().step != 0) {
        throw InvalidParameter("reference schedule must start at step 0");
    }
    for (std::size_t i = 1; i < schedule.size(); ++i) {
        if (schedule[i].step <= schedule[i - 1].step) {
            throw InvalidParameter("reference schedule steps must be strictly increasing");
        }
    }
    if (n_iter < 0) {
        throw InvalidParameter("n_iter must be nonnegative");
    }
    if (x0.size() != model.n()) {
        throw DimensionError("initial state does not match the model dimension");
    }
    options.settings.validate();

    SimulationTrace trace;
    trace.kind = kind;
    trace.params = params;
    trace.x.reserve(static_cast<std::size_t>(n_iter) + 1);
    trace.x.push_back(x0);

    MpcController controller(model, constraints, params, kind, schedule.front().ref, options.settings,
                             options.feasibility_tolerance);
    std::size_t next_ref = 1;
    for (int k = 0; k < n_iter; ++k) {
        if (next_ref < schedule.size() && schedule[next_ref].step == k) {
            controller.set_reference(schedule[next_ref].ref);
            ++next_ref;
        }
        const Vector& x = trace.x.back();
        MpcController::Result result;
        try {
            result = controller.solve(x);
        } catch (const Error& e) {
            if (k == 0) {
                throw InitialInfeasible(std::string("initial state is not feasible: ") + e.what());
            }
            throw StepInfeasible("step " + std::to_string(k) + ": " + e.what());
        }
        StepRecord rec;
        rec.u = result.solution.u.front();
        rec.z = evaluate_output(model, x, rec.u);
        rec.v_star = result.report.objective;
        rec.offset_cost = offset_cost(result.solution, params, controller.reference());
        rec.w = rec.v_star - controller.optimal_offset_cost();
        rec.report = std::move(result.report);
        if (options.record_predictions) {
            rec.prediction = std::move(result.solution);
        }
        trace.x.push_back(model.step(x, rec.u));
        trace.refs.push_back(controller.reference());
        trace.steps.push_back(std::move(rec));
    }
    return trace;
}

SimulationTrace run_closed_loop(const LtiModel& model, const ConstraintSet& constraints,
                                const ControllerParams& params, ControllerKind kind,
                                const Reference& ref, const Vector& x0, int n_iter,
                                const RunOptions& options)
{
    return run_closed_loop(model, constraints, params, kind,
                           std::vector<ScheduledReference>{{0, ref}}, x0, n_iter, options);
}

double performance_index(const SimulationTrace& trace, const Matrix& Q, const Matrix& R,
                         const Reference& ref)
{
    if (trace.steps.empty()) {
        throw InvalidParameter("performance_index: empty trace");
    }
    double phi = 0.0;
    for (int k = 1; k <= trace.n_iter(); ++k) {
        const auto i = static_cast<std::size_t>(k);
        phi += weighted_square(trace.x[i] - ref.x_r, Q) + weighted_square(trace.steps[i - 1].u - ref.u_r, R);
    }
    return phi;
}

double performance_index(const SimulationTrace& trace, const Matrix& Q, const Matrix& R)
{
    if (trace.steps.empty()) {
        throw InvalidParameter("performance_index: empty trace");
    }
    double phi = 0.0;
    for (int k = 1; k <= trace.n_iter(); ++k) {
        const auto i = static_cast<std::size_t>(k);
        const Reference& ref = trace.refs[i - 1];
        phi += weighted_square(trace.x[i] - ref.x_r, Q) + weighted_square(trace.steps[i - 1].u - ref.u_r, R);
    }
    return phi;
}

LyapunovReport lyapunov_check(const SimulationTrace& trace, const LtiModel& model,
                              const ConstraintSet& constraints, const Reference& ref,
                              double tolerance, const SolverSettings& settings)
{
    LyapunovReport report;
    report.offset_optimum =
        optimal_artificial_reference(model, constraints, trace.params, ref, settings).offset_cost;
    for (int k = 0; k < trace.n_iter(); ++k) {
        const StepRecord& step = trace.steps[static_cast<std::size_t>(k)];
        report.w.push_back(step.v_star - report.offset_optimum);
        if (step.prediction) {
            const Vector x_h0 = step.prediction->reference_at(0).x;
            report.distance.push_back((trace.x[static_cast<std::size_t>(k)] - x_h0).norm());
        } else {
            report.distance.push_back(std::numeric_limits<double>::quiet_NaN());
        }
    }
    for (std::size_t k = 0; k + 1 < report.w.size(); ++k) {
        report.decreasing.push_back(report.w[k + 1] < report.w[k] + tolerance);
    }
    return report;
}

Snapshot snapshot(const SimulationTrace& trace, int k)
{
    if (k < 0 || k >= trace.n_iter()) {
        throw std::out_of_range("snapshot: step " + std::to_string(k) + " outside the trace");
    }
    const StepRecord& step = trace.steps[static_cast<std::size_t>(k)];
    if (!step.prediction) {
        throw std::out_of_range("snapshot: predictions were not recorded");
    }
    const FeasibleSolution& sol = *step.prediction;
    Snapshot snap;
    snap.k = k;
    snap.past.assign(trace.x.begin(), trace.x.begin() + k + 1);
    snap.predicted_x = sol.x;
    snap.predicted_u = sol.u;
    for (int j = 0; j <= sol.horizon(); ++j) {
        snap.reference.push_back(sol.reference_at(j));
    }
    return snap;
}

void write_trace_csv(std::ostream& out, const SimulationTrace& trace, bool include_timing)
{
    if (trace.steps.empty()) {
        throw InvalidParameter("write_trace_csv: empty trace");
    }
    const Eigen::Index n = trace.x.front().size();
    const Eigen::Index m = trace.steps.front().u.size();
    const Eigen::Index nz = trace.steps.front().z.size();
    out << "k" << join_header("x", n) << join_header("u", m) << join_header("z", nz)
        << ",V_star,W,solve_iters,solve_ms\n";
    out.precision(12);
    for (int k = 0; k < trace.n_iter(); ++k) {
        const StepRecord& s = trace.steps[static_cast<std::size_t>(k)];
        out << k;
        write_values(out, trace.x[static_cast<std::size_t>(k)]);
        write_values(out, s.u);
        write_values(out, s.z);
        out << ',' << s.v_star << ',' << s.w << ',' << s.report.iterations << ','
            << (include_timing ? s.report.solve_ms : 0.0) << '\n';
    }
    out << trace.n_iter();
    write_values(out, trace.x.back());
    write_blanks(out, m + nz + 4);
    out << '\n';
}

void write_snapshot_csv(std::ostream& out, const Snapshot& snap)
{
    const Eigen::Index n = snap.past.front().size();
    const Eigen::Index m = snap.predicted_u.empty() ? 0 : snap.predicted_u.front().size();
    out << "section,index" << join_header("x", n) << join_header("u", m) << join_header("xh", n)
        << join_header("uh", m) << '\n';
    out.precision(12);
    for (std::size_t i = 0; i < snap.past.size(); ++i) {
        out << "past," << i;
        write_values(out, snap.past[i]);
        write_blanks(out, m + n + m);
        out << '\n';
    }
    for (std::size_t j = 0; j < snap.predicted_x.size(); ++j) {
        out << "predicted," << j;
        write_values(out, snap.predicted_x[j]);
        if (j < snap.predicted_u.size()) {
            write_values(out, snap.predicted_u[j]);
        } else {
            write_blanks(out, m);
        }
        write_values(out, snap.reference[j].x);
        write_values(out, snap.reference[j].u);
        out << '\n';
    }
}

} // namespace hmpc
