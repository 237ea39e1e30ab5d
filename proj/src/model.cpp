#include "hmpc/model.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "hmpc/errors.hpp"

namespace hmpc {

namespace {

constexpr double kRankTolerance = 1e-10;

Eigen::Index numerical_rank(const Matrix& M)
{
    if (M.size() == 0) {
        return 0;
    }
    Eigen::JacobiSVD<Matrix> svd(M);
    const Vector& sv = svd.singularValues();
    if (sv.size() == 0 || sv(0) == 0.0) {
        return 0;
    }
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
        if (sv(i) > kRankTolerance * sv(0)) {
            ++rank;
        }
    }
    return rank;
}

std::string dims(const Matrix& M)
{
    return std::to_string(M.rows()) + "x" + std::to_string(M.cols());
}

} // namespace

LtiModel::LtiModel(Matrix A, Matrix B, Matrix C, Matrix D)
    : A_(std::move(A)), B_(std::move(B)), C_(std::move(C)), D_(std::move(D))
{
    if (A_.rows() != A_.cols() || A_.rows() == 0) {
        throw DimensionError("A must be square and non-empty, got " + dims(A_));
    }
    if (B_.rows() != A_.rows() || B_.cols() == 0) {
        throw DimensionError("B must be n x m, got " + dims(B_));
    }
    if (C_.cols() != A_.rows()) {
        throw DimensionError("C must be nz x n, got " + dims(C_));
    }
    if (D_.rows() != C_.rows() || D_.cols() != B_.cols()) {
        throw DimensionError("D must be nz x m, got " + dims(D_));
    }
    controllability_index(A_, B_);
}

Vector LtiModel::step(const Vector& x, const Vector& u) const
{
    if (x.size() != n() || u.size() != m()) {
        throw DimensionError("step: state/input size mismatch");
    }
    return A_ * x + B_ * u;
}

ConstraintSet::ConstraintSet(Vector z_min, Vector z_max, Vector eps)
    : z_min_(std::move(z_min)), z_max_(std::move(z_max)), eps_(std::move(eps))
{
    if (z_min_.size() != z_max_.size() || eps_.size() != z_min_.size()) {
        throw DimensionError("constraint vectors must share one length");
    }
    for (Eigen::Index i = 0; i < z_min_.size(); ++i) {
        if (!(z_min_(i) < z_max_(i))) {
            throw InvalidConstraintSet("z_min < z_max violated at component " + std::to_string(i));
        }
        if (!(eps_(i) > 0.0)) {
            throw InvalidConstraintSet("eps must be positive at component " + std::to_string(i));
        }
    }
    tight_min_ = z_min_ + eps_;
    tight_max_ = z_max_ - eps_;
    for (Eigen::Index i = 0; i < z_min_.size(); ++i) {
        if (!(tight_min_(i) < tight_max_(i))) {
            throw InvalidConstraintSet("tightened box is empty at component " + std::to_string(i));
        }
    }
}

double ConstraintSet::violation(const Vector& z) const
{
    if (z.size() != size()) {
        throw DimensionError("violation: output size mismatch");
    }
    double worst = 0.0;
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        worst = std::max({worst, z_min_(i) - z(i), z(i) - z_max_(i)});
    }
    return worst;
}

void BallPlateParams::validate() const
{
    if (!(mass > 0.0 && radius > 0.0 && inertia > 0.0 && gravity > 0.0 && sample_time > 0.0)) {
        throw InvalidParameter("ball-and-plate parameters must be strictly positive");
    }
}

double BallPlateParams::acceleration_gain() const
{
    return mass / (mass + inertia / (radius * radius)) * gravity;
}

int controllability_index(const Matrix& A, const Matrix& B)
{
    const Eigen::Index n = A.rows();
    Matrix blocks(n, 0);
    Matrix power_b = B;
    for (Eigen::Index k = 1; k <= n; ++k) {
        blocks.conservativeResize(n, blocks.cols() + B.cols());
        blocks.rightCols(B.cols()) = power_b;
        if (numerical_rank(blocks) == n) {
            return static_cast<int>(k);
        }
        power_b = A * power_b;
    }
    throw NotControllable("(A, B) is not controllable");
}

int controllability_index(const LtiModel& model)
{
    return controllability_index(model.A(), model.B());
}

Matrix matrix_exponential(const Matrix& M)
{
    if (M.rows() != M.cols()) {
        throw DimensionError("matrix_exponential: matrix must be square");
    }
    const Eigen::Index n = M.rows();
    const double norm = M.cwiseAbs().colwise().sum().maxCoeff();
    int squarings = 0;
    if (norm > 0.5) {
        squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
    }
    const Matrix X = M / std::ldexp(1.0, squarings);

    Matrix sum = Matrix::Identity(n, n);
    Matrix term = Matrix::Identity(n, n);
    for (int k = 1; k < 64; ++k) {
        term = term * X / static_cast<double>(k);
        sum += term;
        if (term.cwiseAbs().colwise().sum().maxCoeff() <=
            kExpmTolerance * sum.cwiseAbs().colwise().sum().maxCoeff()) {
            break;
        }
    }
    for (int i = 0; i < squarings; ++i) {
        sum = sum * sum;
    }
    return sum;
}

DiscreteSystem discretize_zoh(const Matrix& Ac, const Matrix& Bc, double sample_time)
{
    if (!(sample_time > 0.0)) {
        throw InvalidParameter("sample time must be positive");
    }
    if (Ac.rows() != Ac.cols() || Bc.rows() != Ac.rows()) {
        throw DimensionError("discretize_zoh: A_c must be n x n and B_c n x m");
    }
    const Eigen::Index n = Ac.rows();
    const Eigen::Index m = Bc.cols();
    // exp([[Ac, Bc], [0, 0]] T) = [[A, B], [0, I]]
    Matrix augmented = Matrix::Zero(n + m, n + m);
    augmented.topLeftCorner(n, n) = Ac * sample_time;
    augmented.topRightCorner(n, m) = Bc * sample_time;
    const Matrix E = matrix_exponential(augmented);
    return {E.topLeftCorner(n, n), E.topRightCorner(n, m)};
}

ContinuousSystem linearize_ball_plate(const BallPlateParams& p)
{
    p.validate();
    const double gain = p.acceleration_gain();
    Matrix A = Matrix::Zero(8, 8);
    Matrix B = Matrix::Zero(8, 2);
    for (int axis = 0; axis < 2; ++axis) {
        const int o = 4 * axis;
        A(o, o + 1) = 1.0;      // dz
        A(o + 1, o + 2) = gain; // ddz = gain * theta (sin th ~ th, bilinear terms vanish)
        A(o + 2, o + 3) = 1.0;  // dtheta
        B(o + 3, axis) = 1.0;   // ddtheta = u
    }
    return {A, B};
}

LtiModel ball_plate_model(const BallPlateParams& p)
{
    const ContinuousSystem cont = linearize_ball_plate(p);
    const DiscreteSystem disc = discretize_zoh(cont.A, cont.B, p.sample_time);
    Matrix C = Matrix::Zero(6, 8);
    Matrix D = Matrix::Zero(6, 2);
    C(0, 1) = 1.0;
    C(1, 2) = 1.0;
    C(2, 5) = 1.0;
    C(3, 6) = 1.0;
    D(4, 0) = 1.0;
    D(5, 1) = 1.0;
    return LtiModel(disc.A, disc.B, C, D);
}

ConstraintSet ball_plate_constraints()
{
    Vector upper(6);
    upper << 0.5, std::numbers::pi / 4.0, 0.5, std::numbers::pi / 4.0, 0.4, 0.4;
    return ConstraintSet(-upper, upper, Vector::Constant(6, 1e-4));
}

Vector evaluate_output(const LtiModel& model, const Vector& x, const Vector& u)
{
    if (x.size() != model.n() || u.size() != model.m()) {
        throw DimensionError("evaluate_output: expected x of size " + std::to_string(model.n()) +
                             " and u of size " + std::to_string(model.m()));
    }
    return model.C() * x + model.D() * u;
}

} // namespace hmpc
