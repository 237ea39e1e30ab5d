#include "hmpc/harmonic.hpp"

#include <cmath>

#include "hmpc/errors.hpp"
#include "hmpc/formulations.hpp"

namespace hmpc {

namespace {

double weighted_square(const Vector& v, const Matrix& W)
{
    return v.dot(W * v);
}

} // namespace

HarmonicReference HarmonicReference::steady(const Vector& x_e, const Vector& u_e, double w, int N)
{
    return {x_e,
            Vector::Zero(x_e.size()),
            Vector::Zero(x_e.size()),
            u_e,
            Vector::Zero(u_e.size()),
            Vector::Zero(u_e.size()),
            w,
            N};
}

void validate(const HarmonicReference& h, const LtiModel& model)
{
    if (!(h.w > 0.0)) {
        throw InvalidParameter("harmonic base frequency must be positive");
    }
    const auto n = model.n();
    const auto m = model.m();
    if (h.x_e.size() != n || h.x_s.size() != n || h.x_c.size() != n || h.u_e.size() != m ||
        h.u_s.size() != m || h.u_c.size() != m) {
        throw DimensionError("harmonic reference does not match the model dimensions");
    }
}

HarmonicOutputs harmonic_outputs(const LtiModel& model, const HarmonicReference& h)
{
    validate(h, model);
    return {model.C() * h.x_e + model.D() * h.u_e, model.C() * h.x_s + model.D() * h.u_s,
            model.C() * h.x_c + model.D() * h.u_c};
}

StateInput eval_harmonic(const HarmonicReference& h, int j)
{
    const double phase = h.w * static_cast<double>(j - h.N);
    const double s = std::sin(phase);
    const double c = std::cos(phase);
    return {h.x_e + s * h.x_s + c * h.x_c, h.u_e + s * h.u_s + c * h.u_c};
}

RotatedPair rotate_coeffs(const Vector& v_s, const Vector& v_c, double w)
{
    if (v_s.size() != v_c.size()) {
        throw DimensionError("rotate_coeffs: size mismatch");
    }
    const double c = std::cos(w);
    const double s = std::sin(w);
    return {c * v_s - s * v_c, s * v_s + c * v_c};
}

AmplitudeBounds amplitude_bounds(const Vector& v_e, const Vector& v_s, const Vector& v_c)
{
    if (v_e.size() != v_s.size() || v_e.size() != v_c.size()) {
        throw DimensionError("amplitude_bounds: size mismatch");
    }
    const Vector amplitude = (v_s.array().square() + v_c.array().square()).sqrt().matrix();
    return {v_e - amplitude, v_e + amplitude};
}

double harmonic_dynamics_residual(const LtiModel& model, const HarmonicReference& h)
{
    validate(h, model);
    const Matrix& A = model.A();
    const Matrix& B = model.B();
    const double c = std::cos(h.w);
    const double s = std::sin(h.w);
    const Vector center = h.x_e - (A * h.x_e + B * h.u_e);
    const Vector sine = (c * h.x_s - s * h.x_c) - (A * h.x_s + B * h.u_s);
    const Vector cosine = (s * h.x_s + c * h.x_c) - (A * h.x_c + B * h.u_c);
    return std::max({center.cwiseAbs().maxCoeff(), sine.cwiseAbs().maxCoeff(),
                     cosine.cwiseAbs().maxCoeff()});
}

bool check_harmonic_dynamics(const LtiModel& model, const HarmonicReference& h, double tolerance)
{
    return harmonic_dynamics_residual(model, h) <= tolerance;
}

double harmonic_offset_cost(const HarmonicReference& h, const Reference& ref, const Matrix& T_e,
                            const Matrix& S_e, const Matrix& T_h, const Matrix& S_h)
{
    return weighted_square(h.x_e - ref.x_r, T_e) + weighted_square(h.u_e - ref.u_r, S_e) +
           weighted_square(h.x_s, T_h) + weighted_square(h.x_c, T_h) + weighted_square(h.u_s, S_h) +
           weighted_square(h.u_c, S_h);
}

double harmonic_offset_cost(const HarmonicReference& h, const Reference& ref,
                            const ControllerParams& params)
{
    return harmonic_offset_cost(h, ref, params.T_e, params.S_e, params.T_h, params.S_h);
}

ArtificialReferenceResult optimal_artificial_reference(const LtiModel& model,
                                                       const ConstraintSet& constraints,
                                                       const ControllerParams& params,
                                                       const Reference& ref,
                                                       const SolverSettings& settings)
{
    const ConeProgram program = build_artificial_reference_program(model, constraints, params, ref);
    ConicSolver solver(program, settings);
    SolveResult result = solver.solve();
    if (result.report.status != SolveStatus::Solved) {
        throw SolverFailure("artificial reference problem: " + to_string(result.report.status));
    }
    HarmonicReference h{program.segment(result.x, "x_e"),
                        program.segment(result.x, "x_s"),
                        program.segment(result.x, "x_c"),
                        program.segment(result.x, "u_e"),
                        program.segment(result.x, "u_s"),
                        program.segment(result.x, "u_c"),
                        params.w,
                        params.N};
    const double cost = harmonic_offset_cost(h, ref, params);
    return {std::move(h), cost, std::move(result.report)};
}

} // namespace hmpc
