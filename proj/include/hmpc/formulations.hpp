#pragma once

#include <optional>
#include <variant>
#include <vector>

#include "hmpc/cone_program.hpp"
#include "hmpc/controller_params.hpp"
#include "hmpc/harmonic.hpp"

namespace hmpc {

/// Residual bound a FeasibleSolution must meet.
inline constexpr double kFeasibilityTolerance = 1e-6;

/**
 * Predicted trajectory x_0..x_N, inputs u_0..u_{N-1}, and the artificial
 * reference: a steady (x_a, u_a) for MPCT or a harmonic for HMPC.
 */
struct FeasibleSolution {
    std::vector<Vector> x;
    std::vector<Vector> u;
    std::variant<SteadyReference, HarmonicReference> reference;
    std::optional<double> objective;

    int horizon() const { return static_cast<int>(u.size()); }
    bool is_harmonic() const { return std::holds_alternative<HarmonicReference>(reference); }
    const HarmonicReference& harmonic() const { return std::get<HarmonicReference>(reference); }
    const SteadyReference& artificial() const { return std::get<SteadyReference>(reference); }

    /// Reference trajectory at prediction step j (x_a/u_a for MPCT).
    StateInput reference_at(int j) const;
};

/**
 * Tracking MPC with a steady artificial reference: dynamics, stage boxes,
 * x_0 = x0, x_N = x_a, x_a = A x_a + B u_a, and the tightened box on
 * (x_a, u_a). Cost: stage deviations from (x_a, u_a) plus the offset cost.
 */
ConeProgram build_mpct(const LtiModel& model, const ConstraintSet& constraints,
                       const ControllerParams& params, const Reference& ref, const Vector& x0);

/**
 * Harmonic MPC. Same prediction constraints as build_mpct, but the
 * terminal state must land on x_e + x_c of a harmonic that satisfies the
 * dynamics, and each output's harmonic amplitude is kept inside the
 * tightened box by two 3-dimensional second-order cones.
 */
ConeProgram build_hmpc(const LtiModel& model, const ConstraintSet& constraints,
                       const ControllerParams& params, const Reference& ref, const Vector& x0);

/// Offset-cost minimization over harmonics only (no prediction).
ConeProgram build_artificial_reference_program(const LtiModel& model,
                                               const ConstraintSet& constraints,
                                               const ControllerParams& params,
                                               const Reference& ref);

/// Largest violation of the program's cone constraints at v.
double program_residual(const ConeProgram& program, const Vector& v);

/**
 * Recovers the named quantities from a primal vector. Throws
 * ResidualTooLarge if the program's constraints are violated by more
 * than `tolerance`.
 */
FeasibleSolution extract_solution(const ConeProgram& program, const Vector& primal,
                                  double tolerance = kFeasibilityTolerance);

/// Inverse of extract_solution.
Vector to_primal(const ConeProgram& program, const FeasibleSolution& solution);

/**
 * Largest violation of every controller constraint by `solution`, with the
 * initial-state constraint taken as x_0 = solution.x[0].
 */
double constraint_residual(const LtiModel& model, const ConstraintSet& constraints,
                           const FeasibleSolution& solution);

/**
 * Solution for the successor state A x_0 + B u_0: inputs shifted by one,
 * the last input taken from the reference at step N, states re-simulated,
 * and the reference advanced one step. Throws InfeasibleInput if
 * `solution` violates the constraints by more than `tolerance`.
 */
FeasibleSolution shift_solution(const LtiModel& model, const ConstraintSet& constraints,
                                const FeasibleSolution& solution,
                                double tolerance = kFeasibilityTolerance);

double stage_cost(const FeasibleSolution& solution, const ControllerParams& params);
double offset_cost(const FeasibleSolution& solution, const ControllerParams& params,
                   const Reference& ref);
double solution_cost(const FeasibleSolution& solution, const ControllerParams& params,
                     const Reference& ref);

/**
 * Applies u_0..u_{N-1} and then the reference input u_h(j) for j >= N,
 * returning the resulting (x_j, u_j) for j = 0..steps-1.
 */
std::vector<StateInput> extend_with_reference_tail(const LtiModel& model,
                                                   const FeasibleSolution& solution, int steps);

} // namespace hmpc
