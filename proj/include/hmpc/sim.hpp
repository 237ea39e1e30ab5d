#pragma once

#include <iosfwd>
#include <optional>
#include <vector>

#include "hmpc/formulations.hpp"
#include "hmpc/solver.hpp"

namespace hmpc {

/// Reference that becomes active at closed-loop step `step`.
struct ScheduledReference {
    int step = 0;
    Reference ref;
};

/// Largest program residual accepted for an applied solution.
inline constexpr double kClosedLoopFeasibility = 1e-7;

/// Default solver settings of the closed loop: the standard tolerances with polishing on.
inline SolverSettings closed_loop_settings()
{
    SolverSettings s;
    s.polish = true;
    return s;
}

struct RunOptions {
    SolverSettings settings = closed_loop_settings();
    /**
     * When a solve meets the solver tolerances but leaves a residual above
     * this value, the solve is continued with tolerances reduced tenfold
     * (at most four times). Keeps the plant inside the box to this accuracy.
     */
    double feasibility_tolerance = kClosedLoopFeasibility;
    /// Keep the full predicted solution of every step (needed by snapshot()).
    bool record_predictions = false;
};

struct StepRecord {
    Vector u;
    Vector z;
    double v_star = 0.0;
    double offset_cost = 0.0;
    /// V* minus the optimal offset cost of the active reference.
    double w = 0.0;
    SolveReport report;
    std::optional<FeasibleSolution> prediction;
};

/**
 * Closed-loop record. x holds x_0..x_{N_iter}; steps[k] holds what was
 * computed and applied at state x_k; refs[k] is the reference active at k.
 */
struct SimulationTrace {
    ControllerKind kind = ControllerKind::Hmpc;
    ControllerParams params;
    std::vector<Vector> x;
    std::vector<StepRecord> steps;
    std::vector<Reference> refs;

    int n_iter() const { return static_cast<int>(steps.size()); }
};

/**
 * Receding-horizon controller holding one solver instance. Each call
 * rebuilds the linear terms for the current state, reuses the KKT
 * factorization, and warm-starts from the shifted previous solution.
 */
class MpcController {
public:
    MpcController(LtiModel model, ConstraintSet constraints, ControllerParams params,
                  ControllerKind kind, Reference ref,
                  SolverSettings settings = closed_loop_settings(),
                  double feasibility_tolerance = kClosedLoopFeasibility);

    void set_reference(const Reference& ref);
    const Reference& reference() const { return ref_; }

    /// Optimal offset cost of the active reference (the W offset).
    double optimal_offset_cost() const { return optimal_offset_cost_; }

    struct Result {
        FeasibleSolution solution;
        SolveReport report;
    };

    /// Solves at state x. Throws StepInfeasible if the solver does not return Solved.
    Result solve(const Vector& x);

private:
    ConeProgram build(const Vector& x) const;

    LtiModel model_;
    ConstraintSet constraints_;
    ControllerParams params_;
    ControllerKind kind_;
    Reference ref_;
    SolverSettings settings_;
    double feasibility_tolerance_;
    ConeProgram program_;
    ConicSolver solver_;
    double optimal_offset_cost_ = 0.0;
    std::optional<WarmStart> warm_;
};

/**
 * Simulates x_{k+1} = A x_k + B u_k for n_iter steps with u_k the first
 * predicted input. Throws InitialInfeasible if the first solve fails and
 * StepInfeasible if a later one does.
 */
SimulationTrace run_closed_loop(const LtiModel& model, const ConstraintSet& constraints,
                                const ControllerParams& params, ControllerKind kind,
                                const std::vector<ScheduledReference>& schedule, const Vector& x0,
                                int n_iter, const RunOptions& options = {});

SimulationTrace run_closed_loop(const LtiModel& model, const ConstraintSet& constraints,
                                const ControllerParams& params, ControllerKind kind,
                                const Reference& ref, const Vector& x0, int n_iter,
                                const RunOptions& options = {});

/// Sum over k = 1..N_iter of ||x_k - x_r||^2_Q + ||u_{k-1} - u_r||^2_R.
double performance_index(const SimulationTrace& trace, const Matrix& Q, const Matrix& R,
                         const Reference& ref);

/// Same, with each term measured against the reference active when u_{k-1} was applied.
double performance_index(const SimulationTrace& trace, const Matrix& Q, const Matrix& R);

struct LyapunovReport {
    double offset_optimum = 0.0;
    /// W_k = V*_k - offset_optimum, k = 0..N_iter-1.
    std::vector<double> w;
    /// ||x_k - x_h(0)|| with x_h the optimal harmonic at step k.
    std::vector<double> distance;
    /// decreasing[k] is W_{k+1} < W_k + tolerance, k = 0..N_iter-2.
    std::vector<bool> decreasing;
};

LyapunovReport lyapunov_check(const SimulationTrace& trace, const LtiModel& model,
                              const ConstraintSet& constraints, const Reference& ref,
                              double tolerance = 0.0, const SolverSettings& settings = {});

struct Snapshot {
    int k = 0;
    std::vector<Vector> past;
    std::vector<Vector> predicted_x;
    std::vector<Vector> predicted_u;
    /// Artificial reference over the prediction window j = 0..N.
    std::vector<StateInput> reference;
};

/// Throws std::out_of_range if k is outside the trace or predictions were not recorded.
Snapshot snapshot(const SimulationTrace& trace, int k);

/// Columns k, x1..xn, u1..um, z1..znz, V_star, W, solve_iters, solve_ms (one row per step).
void write_trace_csv(std::ostream& out, const SimulationTrace& trace, bool include_timing = true);

/// Columns section, index, x1..xn, u1..um, xh1..xhn, uh1..uhm.
void write_snapshot_csv(std::ostream& out, const Snapshot& snap);

} // namespace hmpc
