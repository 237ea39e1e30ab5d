#pragma once

#include "hmpc/controller_params.hpp"
#include "hmpc/model.hpp"
#include "hmpc/solver.hpp"

namespace hmpc {

/// Consistency tolerance of check_harmonic_dynamics.
inline constexpr double kHarmonicDynamicsTolerance = 1e-8;

/// Set-point (x_r, u_r) handed to the controllers.
struct Reference {
    Vector x_r;
    Vector u_r;
};

/// Steady artificial reference (x_a, u_a) of the tracking MPC.
struct SteadyReference {
    Vector x_a;
    Vector u_a;
};

/**
 * Single-harmonic reference
 *
 *   x_h(j) = x_e + x_s sin(w (j - N)) + x_c cos(w (j - N))
 *   u_h(j) = u_e + u_s sin(w (j - N)) + u_c cos(w (j - N))
 *
 * N is the phase offset, so x_h(N) = x_e + x_c.
 */
struct HarmonicReference {
    Vector x_e;
    Vector x_s;
    Vector x_c;
    Vector u_e;
    Vector u_s;
    Vector u_c;
    double w = 0.0;
    int N = 0;

    /// Constant harmonic sitting at (x_e, u_e).
    static HarmonicReference steady(const Vector& x_e, const Vector& u_e, double w, int N);
};

struct HarmonicOutputs {
    Vector z_e;
    Vector z_s;
    Vector z_c;
};

struct StateInput {
    Vector x;
    Vector u;
};

struct RotatedPair {
    Vector v_s;
    Vector v_c;
};

struct AmplitudeBounds {
    Vector lower;
    Vector upper;
};

/// Checks w > 0 and the vector sizes against the model.
void validate(const HarmonicReference& h, const LtiModel& model);

/// (z_e, z_s, z_c) = [C D] [x_e x_s x_c; u_e u_s u_c], recomputed on every call.
HarmonicOutputs harmonic_outputs(const LtiModel& model, const HarmonicReference& h);

StateInput eval_harmonic(const HarmonicReference& h, int j);

/// (v_s cos w - v_c sin w, v_s sin w + v_c cos w).
RotatedPair rotate_coeffs(const Vector& v_s, const Vector& v_c, double w);

/// v_e -/+ sqrt(v_s^2 + v_c^2) componentwise.
AmplitudeBounds amplitude_bounds(const Vector& v_e, const Vector& v_s, const Vector& v_c);

/// Largest residual of the steady-center and rotated-coefficient dynamics.
double harmonic_dynamics_residual(const LtiModel& model, const HarmonicReference& h);

bool check_harmonic_dynamics(const LtiModel& model, const HarmonicReference& h,
                             double tolerance = kHarmonicDynamicsTolerance);

/// ||x_e - x_r||^2_Te + ||u_e - u_r||^2_Se + ||x_s||^2_Th + ||x_c||^2_Th + ||u_s||^2_Sh + ||u_c||^2_Sh.
double harmonic_offset_cost(const HarmonicReference& h, const Reference& ref, const Matrix& T_e,
                            const Matrix& S_e, const Matrix& T_h, const Matrix& S_h);
double harmonic_offset_cost(const HarmonicReference& h, const Reference& ref,
                            const ControllerParams& params);

struct ArtificialReferenceResult {
    HarmonicReference reference;
    double offset_cost = 0.0;
    SolveReport report;
};

/**
 * Minimizes the harmonic offset cost over all harmonics satisfying the
 * dynamics and amplitude constraints. The minimizer is the admissible
 * steady state closest to the reference, with zero sine/cosine terms.
 * Throws SolverFailure if the solver does not converge.
 */
ArtificialReferenceResult optimal_artificial_reference(const LtiModel& model,
                                                       const ConstraintSet& constraints,
                                                       const ControllerParams& params,
                                                       const Reference& ref,
                                                       const SolverSettings& settings = {});

} // namespace hmpc
