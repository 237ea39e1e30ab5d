#include "hmpc/formulations.hpp"

#include <cmath>
#include <string>

#include "hmpc/errors.hpp"

namespace hmpc {

namespace {

using Cone = ConstraintAssembler::Cone;

std::string x_name(int j)
{
    return "x_" + std::to_string(j);
}

std::string u_name(int j)
{
    return "u_" + std::to_string(j);
}

bool is_positive_definite(const Matrix& M)
{
    if (M.rows() != M.cols() || M.rows() == 0) {
        return false;
    }
    if ((M - M.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, M.cwiseAbs().maxCoeff())) {
        return false;
    }
    Eigen::LLT<Matrix> llt(M);
    return llt.info() == Eigen::Success;
}

bool is_diagonal(const Matrix& M)
{
    Matrix off = M;
    off.diagonal().setZero();
    return off.cwiseAbs().maxCoeff() == 0.0;
}

double weighted_square(const Vector& v, const Matrix& W)
{
    return v.dot(W * v);
}

void check_dimensions(const LtiModel& model, const ConstraintSet& constraints,
                      const Reference& ref)
{
    if (constraints.size() != model.nz()) {
        throw DimensionError("constraint set size does not match the model outputs");
    }
    if (ref.x_r.size() != model.n() || ref.u_r.size() != model.m()) {
        throw DimensionError("reference does not match the model dimensions");
    }
}

void check_dimensions(const LtiModel& model, const ConstraintSet& constraints,
                      const ControllerParams& params, const Reference& ref, const Vector& x0)
{
    check_dimensions(model, constraints, ref);
    if (x0.size() != model.n()) {
        throw DimensionError("initial state does not match the model dimension");
    }
    params.validate(model);
}

// Prediction variables x_0, u_0, ..., x_{N-1}, u_{N-1}, x_N.
void add_prediction_layout(VariableLayout& layout, int N, int n, int m)
{
    for (int j = 0; j < N; ++j) {
        layout.add(x_name(j), n);
        layout.add(u_name(j), m);
    }
    layout.add(x_name(N), n);
}

void add_harmonic_layout(VariableLayout& layout, int n, int m)
{
    layout.add("x_e", n);
    layout.add("x_s", n);
    layout.add("x_c", n);
    layout.add("u_e", m);
    layout.add("u_s", m);
    layout.add("u_c", m);
}

// x_0 = x0, x_{j+1} = A x_j + B u_j, z_min <= C x_j + D u_j <= z_max.
void add_prediction_constraints(ConstraintAssembler& rows, const VariableLayout& layout,
                                const LtiModel& model, const ConstraintSet& constraints,
                                const Vector& x0, int N, int& initial_state_row)
{
    const int n = static_cast<int>(model.n());
    const int nz = static_cast<int>(model.nz());
    const Matrix I = Matrix::Identity(n, n);

    initial_state_row = rows.reserve(Cone::Zero, n);
    rows.add_block(Cone::Zero, initial_state_row, layout.find(x_name(0)).offset, I);
    for (int i = 0; i < n; ++i) {
        rows.set_rhs(Cone::Zero, initial_state_row + i, x0(i));
    }
    for (int j = 0; j < N; ++j) {
        const int r = rows.reserve(Cone::Zero, n);
        rows.add_block(Cone::Zero, r, layout.find(x_name(j + 1)).offset, I);
        rows.add_block(Cone::Zero, r, layout.find(x_name(j)).offset, model.A(), -1.0);
        rows.add_block(Cone::Zero, r, layout.find(u_name(j)).offset, model.B(), -1.0);
    }
    for (int j = 0; j < N; ++j) {
        const int xo = layout.find(x_name(j)).offset;
        const int uo = layout.find(u_name(j)).offset;
        const int upper = rows.reserve(Cone::Nonneg, nz);
        rows.add_block(Cone::Nonneg, upper, xo, model.C());
        rows.add_block(Cone::Nonneg, upper, uo, model.D());
        const int lower = rows.reserve(Cone::Nonneg, nz);
        rows.add_block(Cone::Nonneg, lower, xo, model.C(), -1.0);
        rows.add_block(Cone::Nonneg, lower, uo, model.D(), -1.0);
        for (int i = 0; i < nz; ++i) {
            rows.set_rhs(Cone::Nonneg, upper + i, constraints.z_max()(i));
            rows.set_rhs(Cone::Nonneg, lower + i, -constraints.z_min()(i));
        }
    }
}

// Steady center, rotated-coefficient dynamics and the amplitude cones.
void add_harmonic_constraints(ConstraintAssembler& rows, const VariableLayout& layout,
                              const LtiModel& model, const ConstraintSet& constraints, double w)
{
    const int n = static_cast<int>(model.n());
    const int nz = static_cast<int>(model.nz());
    const Matrix I = Matrix::Identity(n, n);
    const double c = std::cos(w);
    const double s = std::sin(w);
    const int xe = layout.find("x_e").offset;
    const int xs = layout.find("x_s").offset;
    const int xc = layout.find("x_c").offset;
    const int ue = layout.find("u_e").offset;
    const int us = layout.find("u_s").offset;
    const int uc = layout.find("u_c").offset;

    int r = rows.reserve(Cone::Zero, n);
    rows.add_block(Cone::Zero, r, xe, I - model.A());
    rows.add_block(Cone::Zero, r, ue, model.B(), -1.0);

    r = rows.reserve(Cone::Zero, n);
    rows.add_block(Cone::Zero, r, xs, c * I - model.A());
    rows.add_block(Cone::Zero, r, xc, I, -s);
    rows.add_block(Cone::Zero, r, us, model.B(), -1.0);

    r = rows.reserve(Cone::Zero, n);
    rows.add_block(Cone::Zero, r, xs, I, s);
    rows.add_block(Cone::Zero, r, xc, c * I - model.A());
    rows.add_block(Cone::Zero, r, uc, model.B(), -1.0);

    // s = (zhat_M - z_e, z_s, z_c) and (z_e - zhat_m, z_s, z_c), both in SOC.
    for (int i = 0; i < nz; ++i) {
        const Matrix Ci = model.C().row(i);
        const Matrix Di = model.D().row(i);
        for (int side = 0; side < 2; ++side) {
            const int row = rows.reserve(Cone::Soc, 3);
            const double lead = side == 0 ? -1.0 : 1.0;
            rows.add_block(Cone::Soc, row, xe, Ci, lead);
            rows.add_block(Cone::Soc, row, ue, Di, lead);
            rows.add_block(Cone::Soc, row + 1, xs, Ci, -1.0);
            rows.add_block(Cone::Soc, row + 1, us, Di, -1.0);
            rows.add_block(Cone::Soc, row + 2, xc, Ci, -1.0);
            rows.add_block(Cone::Soc, row + 2, uc, Di, -1.0);
            rows.set_rhs(Cone::Soc, row,
                         side == 0 ? -constraints.tightened_min()(i) : constraints.tightened_max()(i));
        }
    }
}

void add_harmonic_offset_cost(QuadraticCost& cost, const VariableLayout& layout,
                              const ControllerParams& params, const Reference& ref)
{
    const int n = static_cast<int>(ref.x_r.size());
    const int m = static_cast<int>(ref.u_r.size());
    cost.add({{layout.find("x_e").offset, 1.0}}, ref.x_r, params.T_e);
    cost.add({{layout.find("u_e").offset, 1.0}}, ref.u_r, params.S_e);
    cost.add({{layout.find("x_s").offset, 1.0}}, Vector::Zero(n), params.T_h);
    cost.add({{layout.find("x_c").offset, 1.0}}, Vector::Zero(n), params.T_h);
    cost.add({{layout.find("u_s").offset, 1.0}}, Vector::Zero(m), params.S_h);
    cost.add({{layout.find("u_c").offset, 1.0}}, Vector::Zero(m), params.S_h);
}

double cone_violation(const ConeProgram& program, const Vector& slack)
{
    const ConeDims& cones = program.cones;
    double worst = 0.0;
    if (cones.zero > 0) {
        worst = slack.head(cones.zero).cwiseAbs().maxCoeff();
    }
    if (cones.nonneg > 0) {
        worst = std::max(worst, -slack.segment(cones.zero, cones.nonneg).minCoeff());
    }
    int row = cones.zero + cones.nonneg;
    for (int size : cones.soc) {
        const double t = slack(row);
        const double norm = std::hypot(slack(row + 1), slack(row + 2));
        worst = std::max(worst, norm - t);
        row += size;
    }
    return std::max(worst, 0.0);
}

} // namespace

std::string to_string(ControllerKind kind)
{
    return kind == ControllerKind::Mpct ? "mpct" : "hmpc";
}

ControllerKind controller_kind_from_string(const std::string& name)
{
    if (name == "mpct") {
        return ControllerKind::Mpct;
    }
    if (name == "hmpc") {
        return ControllerKind::Hmpc;
    }
    throw InvalidParameter("unknown controller kind '" + name + "' (expected mpct or hmpc)");
}

std::vector<std::string> ControllerParams::validate(const LtiModel& model) const
{
    if (N < 1) {
        throw InvalidParameter("prediction horizon must be at least 1");
    }
    const auto check = [](const Matrix& M, Eigen::Index dim, const char* name) {
        if (M.rows() != dim || M.cols() != dim) {
            throw DimensionError(std::string(name) + " has the wrong dimensions");
        }
        if (!is_positive_definite(M)) {
            throw InvalidParameter(std::string(name) + " must be symmetric positive definite");
        }
    };
    check(Q, model.n(), "Q");
    check(R, model.m(), "R");
    check(T_e, model.n(), "T_e");
    check(S_e, model.m(), "S_e");
    check(T_h, model.n(), "T_h");
    check(S_h, model.m(), "S_h");
    check(T_a, model.n(), "T_a");
    check(S_a, model.m(), "S_a");
    if (!is_diagonal(T_h) || !is_diagonal(S_h)) {
        throw InvalidParameter("T_h and S_h must be diagonal");
    }
    if (!(w > 0.0)) {
        throw InvalidParameter("base frequency w must be positive");
    }
    std::vector<std::string> warnings;
    const int index = controllability_index(model);
    if (N < index) {
        warnings.push_back("horizon N=" + std::to_string(N) + " is below the controllability index " +
                           std::to_string(index));
    }
    return warnings;
}

ControllerParams ControllerParams::ball_plate(int horizon)
{
    ControllerParams p;
    p.N = horizon;
    Vector q(8);
    q << 10, 0.05, 0.05, 0.05, 10, 0.05, 0.05, 0.05;
    Vector te(8);
    te << 600, 50, 50, 50, 600, 50, 50, 50;
    p.Q = q.asDiagonal();
    p.R = Vector::Constant(2, 0.5).asDiagonal();
    p.T_e = te.asDiagonal();
    p.S_e = Vector::Constant(2, 0.3).asDiagonal();
    p.T_h = p.T_e;
    p.S_h = 0.5 * p.S_e;
    p.T_a = p.T_e;
    p.S_a = p.S_e;
    p.w = 0.3254;
    return p;
}

StateInput FeasibleSolution::reference_at(int j) const
{
    if (is_harmonic()) {
        return eval_harmonic(harmonic(), j);
    }
    return {artificial().x_a, artificial().u_a};
}

ConeProgram build_mpct(const LtiModel& model, const ConstraintSet& constraints,
                       const ControllerParams& params, const Reference& ref, const Vector& x0)
{
    check_dimensions(model, constraints, params, ref, x0);
    const int n = static_cast<int>(model.n());
    const int m = static_cast<int>(model.m());
    const int nz = static_cast<int>(model.nz());
    const int N = params.N;

    ConeProgram program;
    program.kind = ProgramKind::Mpct;
    program.horizon = N;
    program.n = n;
    program.m = m;
    add_prediction_layout(program.layout, N, n, m);
    const int xa = program.layout.add("x_a", n);
    const int ua = program.layout.add("u_a", m);
    const int nv = program.layout.total();

    ConstraintAssembler rows(nv);
    add_prediction_constraints(rows, program.layout, model, constraints, x0, N,
                               program.initial_state_row);
    const Matrix I = Matrix::Identity(n, n);
    int r = rows.reserve(Cone::Zero, n);
    rows.add_block(Cone::Zero, r, program.layout.find(x_name(N)).offset, I);
    rows.add_block(Cone::Zero, r, xa, I, -1.0);
    r = rows.reserve(Cone::Zero, n);
    rows.add_block(Cone::Zero, r, xa, I - model.A());
    rows.add_block(Cone::Zero, r, ua, model.B(), -1.0);

    const int upper = rows.reserve(Cone::Nonneg, nz);
    rows.add_block(Cone::Nonneg, upper, xa, model.C());
    rows.add_block(Cone::Nonneg, upper, ua, model.D());
    const int lower = rows.reserve(Cone::Nonneg, nz);
    rows.add_block(Cone::Nonneg, lower, xa, model.C(), -1.0);
    rows.add_block(Cone::Nonneg, lower, ua, model.D(), -1.0);
    for (int i = 0; i < nz; ++i) {
        rows.set_rhs(Cone::Nonneg, upper + i, constraints.tightened_max()(i));
        rows.set_rhs(Cone::Nonneg, lower + i, -constraints.tightened_min()(i));
    }
    rows.build(program.A, program.b, program.cones);

    QuadraticCost cost(nv);
    for (int j = 0; j < N; ++j) {
        cost.add({{program.layout.find(x_name(j)).offset, 1.0}, {xa, -1.0}}, Vector::Zero(n), params.Q);
        cost.add({{program.layout.find(u_name(j)).offset, 1.0}, {ua, -1.0}}, Vector::Zero(m), params.R);
    }
    cost.add({{xa, 1.0}}, ref.x_r, params.T_a);
    cost.add({{ua, 1.0}}, ref.u_r, params.S_a);
    cost.build(program.P, program.q, program.constant);
    return program;
}

ConeProgram build_hmpc(const LtiModel& model, const ConstraintSet& constraints,
                       const ControllerParams& params, const Reference& ref, const Vector& x0)
{
    check_dimensions(model, constraints, params, ref, x0);
    const int n = static_cast<int>(model.n());
    const int m = static_cast<int>(model.m());
    const int N = params.N;
    const double w = params.w;

    ConeProgram program;
    program.kind = ProgramKind::Hmpc;
    program.horizon = N;
    program.w = w;
    program.n = n;
    program.m = m;
    add_prediction_layout(program.layout, N, n, m);
    add_harmonic_layout(program.layout, n, m);
    const int nv = program.layout.total();
    const VariableLayout& layout = program.layout;

    ConstraintAssembler rows(nv);
    add_prediction_constraints(rows, layout, model, constraints, x0, N, program.initial_state_row);
    const Matrix I = Matrix::Identity(n, n);
    const int r = rows.reserve(Cone::Zero, n);
    rows.add_block(Cone::Zero, r, layout.find(x_name(N)).offset, I);
    rows.add_block(Cone::Zero, r, layout.find("x_e").offset, I, -1.0);
    rows.add_block(Cone::Zero, r, layout.find("x_c").offset, I, -1.0);
    add_harmonic_constraints(rows, layout, model, constraints, w);
    rows.build(program.A, program.b, program.cones);

    QuadraticCost cost(nv);
    const int xe = layout.find("x_e").offset;
    const int xs = layout.find("x_s").offset;
    const int xc = layout.find("x_c").offset;
    const int ue = layout.find("u_e").offset;
    const int us = layout.find("u_s").offset;
    const int uc = layout.find("u_c").offset;
    for (int j = 0; j < N; ++j) {
        const double phase = w * static_cast<double>(j - N);
        const double s = std::sin(phase);
        const double c = std::cos(phase);
        cost.add({{layout.find(x_name(j)).offset, 1.0}, {xe, -1.0}, {xs, -s}, {xc, -c}},
                 Vector::Zero(n), params.Q);
        cost.add({{layout.find(u_name(j)).offset, 1.0}, {ue, -1.0}, {us, -s}, {uc, -c}},
                 Vector::Zero(m), params.R);
    }
    add_harmonic_offset_cost(cost, layout, params, ref);
    cost.build(program.P, program.q, program.constant);
    return program;
}

ConeProgram build_artificial_reference_program(const LtiModel& model,
                                               const ConstraintSet& constraints,
                                               const ControllerParams& params,
                                               const Reference& ref)
{
    check_dimensions(model, constraints, ref);
    params.validate(model);
    const int n = static_cast<int>(model.n());
    const int m = static_cast<int>(model.m());

    ConeProgram program;
    program.kind = ProgramKind::ArtificialReference;
    program.horizon = params.N;
    program.w = params.w;
    program.n = n;
    program.m = m;
    add_harmonic_layout(program.layout, n, m);
    const int nv = program.layout.total();

    ConstraintAssembler rows(nv);
    add_harmonic_constraints(rows, program.layout, model, constraints, params.w);
    rows.build(program.A, program.b, program.cones);

    QuadraticCost cost(nv);
    add_harmonic_offset_cost(cost, program.layout, params, ref);
    cost.build(program.P, program.q, program.constant);
    return program;
}

double program_residual(const ConeProgram& program, const Vector& v)
{
    if (v.size() != program.num_variables()) {
        throw DimensionError("program_residual: primal vector has the wrong size");
    }
    return cone_violation(program, program.b - program.A * v);
}

FeasibleSolution extract_solution(const ConeProgram& program, const Vector& primal, double tolerance)
{
    if (program.kind == ProgramKind::ArtificialReference) {
        throw InvalidParameter("extract_solution expects an MPCT or HMPC program");
    }
    const double residual = program_residual(program, primal);
    if (residual > tolerance) {
        throw ResidualTooLarge("solution residual " + std::to_string(residual) +
                               " exceeds tolerance " + std::to_string(tolerance));
    }
    FeasibleSolution sol;
    const int N = program.horizon;
    for (int j = 0; j <= N; ++j) {
        sol.x.push_back(program.segment(primal, x_name(j)));
    }
    for (int j = 0; j < N; ++j) {
        sol.u.push_back(program.segment(primal, u_name(j)));
    }
    if (program.kind == ProgramKind::Hmpc) {
        sol.reference = HarmonicReference{program.segment(primal, "x_e"), program.segment(primal, "x_s"),
                                          program.segment(primal, "x_c"), program.segment(primal, "u_e"),
                                          program.segment(primal, "u_s"), program.segment(primal, "u_c"),
                                          program.w, N};
    } else {
        sol.reference = SteadyReference{program.segment(primal, "x_a"), program.segment(primal, "u_a")};
    }
    sol.objective = program.objective(primal);
    return sol;
}

Vector to_primal(const ConeProgram& program, const FeasibleSolution& solution)
{
    const int N = program.horizon;
    if (solution.horizon() != N || static_cast<int>(solution.x.size()) != N + 1) {
        throw DimensionError("to_primal: horizon mismatch");
    }
    if (solution.is_harmonic() != (program.kind == ProgramKind::Hmpc)) {
        throw InvalidParameter("to_primal: solution kind does not match the program");
    }
    Vector v = Vector::Zero(program.num_variables());
    const auto put = [&](const std::string& name, const Vector& value) {
        const NamedRange& r = program.layout.find(name);
        if (value.size() != r.size) {
            throw DimensionError("to_primal: " + name + " has the wrong size");
        }
        v.segment(r.offset, r.size) = value;
    };
    for (int j = 0; j <= N; ++j) {
        put(x_name(j), solution.x[static_cast<std::size_t>(j)]);
    }
    for (int j = 0; j < N; ++j) {
        put(u_name(j), solution.u[static_cast<std::size_t>(j)]);
    }
    if (solution.is_harmonic()) {
        const HarmonicReference& h = solution.harmonic();
        put("x_e", h.x_e);
        put("x_s", h.x_s);
        put("x_c", h.x_c);
        put("u_e", h.u_e);
        put("u_s", h.u_s);
        put("u_c", h.u_c);
    } else {
        put("x_a", solution.artificial().x_a);
        put("u_a", solution.artificial().u_a);
    }
    return v;
}

double constraint_residual(const LtiModel& model, const ConstraintSet& constraints,
                           const FeasibleSolution& solution)
{
    const int N = solution.horizon();
    if (static_cast<int>(solution.x.size()) != N + 1) {
        throw DimensionError("solution must hold N+1 states");
    }
    double worst = 0.0;
    for (int j = 0; j < N; ++j) {
        const auto& x = solution.x[static_cast<std::size_t>(j)];
        const auto& u = solution.u[static_cast<std::size_t>(j)];
        const Vector next = model.step(x, u) - solution.x[static_cast<std::size_t>(j) + 1];
        worst = std::max(worst, next.cwiseAbs().maxCoeff());
        worst = std::max(worst, constraints.violation(evaluate_output(model, x, u)));
    }
    const Vector& x_N = solution.x.back();
    if (solution.is_harmonic()) {
        const HarmonicReference& h = solution.harmonic();
        worst = std::max(worst, (x_N - h.x_e - h.x_c).cwiseAbs().maxCoeff());
        worst = std::max(worst, harmonic_dynamics_residual(model, h));
        const HarmonicOutputs z = harmonic_outputs(model, h);
        const Vector amplitude = (z.z_s.array().square() + z.z_c.array().square()).sqrt().matrix();
        for (Eigen::Index i = 0; i < z.z_e.size(); ++i) {
            worst = std::max(worst, amplitude(i) - (z.z_e(i) - constraints.tightened_min()(i)));
            worst = std::max(worst, amplitude(i) - (constraints.tightened_max()(i) - z.z_e(i)));
        }
    } else {
        const SteadyReference& a = solution.artificial();
        worst = std::max(worst, (x_N - a.x_a).cwiseAbs().maxCoeff());
        worst = std::max(worst, (model.step(a.x_a, a.u_a) - a.x_a).cwiseAbs().maxCoeff());
        const Vector z = evaluate_output(model, a.x_a, a.u_a);
        for (Eigen::Index i = 0; i < z.size(); ++i) {
            worst = std::max({worst, constraints.tightened_min()(i) - z(i),
                              z(i) - constraints.tightened_max()(i)});
        }
    }
    return worst;
}

FeasibleSolution shift_solution(const LtiModel& model, const ConstraintSet& constraints,
                                const FeasibleSolution& solution, double tolerance)
{
    const double residual = constraint_residual(model, constraints, solution);
    if (residual > tolerance) {
        throw InfeasibleInput("cannot shift: residual " + std::to_string(residual) +
                              " exceeds tolerance " + std::to_string(tolerance));
    }
    const int N = solution.horizon();
    FeasibleSolution shifted;
    shifted.u.assign(solution.u.begin() + 1, solution.u.end());
    if (solution.is_harmonic()) {
        const HarmonicReference& h = solution.harmonic();
        shifted.u.push_back(h.u_e + h.u_c);
        const RotatedPair u_rot = rotate_coeffs(h.u_s, h.u_c, h.w);
        HarmonicReference next{model.step(h.x_e, h.u_e),
                               model.step(h.x_s, h.u_s),
                               model.step(h.x_c, h.u_c),
                               h.u_e,
                               u_rot.v_s,
                               u_rot.v_c,
                               h.w,
                               h.N};
        shifted.reference = std::move(next);
    } else {
        shifted.u.push_back(solution.artificial().u_a);
        shifted.reference = solution.artificial();
    }
    shifted.x.reserve(static_cast<std::size_t>(N) + 1);
    shifted.x.push_back(model.step(solution.x[0], solution.u[0]));
    for (int j = 0; j < N; ++j) {
        shifted.x.push_back(model.step(shifted.x.back(), shifted.u[static_cast<std::size_t>(j)]));
    }
    return shifted;
}

double stage_cost(const FeasibleSolution& solution, const ControllerParams& params)
{
    double total = 0.0;
    for (int j = 0; j < solution.horizon(); ++j) {
        const StateInput r = solution.reference_at(j);
        total += weighted_square(solution.x[static_cast<std::size_t>(j)] - r.x, params.Q);
        total += weighted_square(solution.u[static_cast<std::size_t>(j)] - r.u, params.R);
    }
    return total;
}

double offset_cost(const FeasibleSolution& solution, const ControllerParams& params,
                   const Reference& ref)
{
    if (solution.is_harmonic()) {
        return harmonic_offset_cost(solution.harmonic(), ref, params);
    }
    const SteadyReference& a = solution.artificial();
    return weighted_square(a.x_a - ref.x_r, params.T_a) + weighted_square(a.u_a - ref.u_r, params.S_a);
}

double solution_cost(const FeasibleSolution& solution, const ControllerParams& params,
                     const Reference& ref)
{
    return stage_cost(solution, params) + offset_cost(solution, params, ref);
}

std::vector<StateInput> extend_with_reference_tail(const LtiModel& model,
                                                   const FeasibleSolution& solution, int steps)
{
    std::vector<StateInput> out;
    out.reserve(static_cast<std::size_t>(std::max(steps, 0)));
    Vector x = solution.x.front();
    for (int j = 0; j < steps; ++j) {
        const Vector u = j < solution.horizon() ? solution.u[static_cast<std::size_t>(j)]
                                                : solution.reference_at(j).u;
        out.push_back({x, u});
        x = model.step(x, u);
    }
    return out;
}

} // namespace hmpc
