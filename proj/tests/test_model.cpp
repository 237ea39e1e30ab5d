#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include <unsupported/Eigen/MatrixFunctions>

#include "hmpc/errors.hpp"
#include "hmpc/json_io.hpp"
#include "hmpc/model.hpp"

using namespace hmpc;

namespace {

// Classical RK4 on x' = Ac x + Bc u with u held constant over the step.
Vector rk4(const Matrix& Ac, const Matrix& Bc, const Vector& x0, const Vector& u, double T, int steps)
{
    const auto f = [&](const Vector& x) -> Vector { return Ac * x + Bc * u; };
    Vector x = x0;
    const double h = T / steps;
    for (int i = 0; i < steps; ++i) {
        const Vector k1 = f(x);
        const Vector k2 = f(x + 0.5 * h * k1);
        const Vector k3 = f(x + 0.5 * h * k2);
        const Vector k4 = f(x + h * k3);
        x += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
    }
    return x;
}

// exp([Ac Bc; 0 0] T) by a 4-term series at T / 2^12 followed by 12 squarings.
DiscreteSystem step_doubling(const Matrix& Ac, const Matrix& Bc, double T)
{
    const Eigen::Index n = Ac.rows();
    const Eigen::Index m = Bc.cols();
    Matrix M = Matrix::Zero(n + m, n + m);
    M.topLeftCorner(n, n) = Ac;
    M.topRightCorner(n, m) = Bc;
    const Matrix H = M * (T / 4096.0);
    Matrix E = Matrix::Identity(n + m, n + m) + H + H * H / 2.0 + H * H * H / 6.0 + H * H * H * H / 24.0;
    for (int i = 0; i < 12; ++i) {
        E = E * E;
    }
    return {E.topLeftCorner(n, n), E.topRightCorner(n, m)};
}

// Rank of [B AB ... A^{k-1}B] from a full SVD, counted independently of the library.
int rank_oracle(const Matrix& A, const Matrix& B, int k)
{
    const Eigen::Index n = A.rows();
    Matrix ctrb(n, B.cols() * k);
    Matrix block = B;
    for (int i = 0; i < k; ++i) {
        ctrb.middleCols(i * B.cols(), B.cols()) = block;
        block = A * block;
    }
    Eigen::FullPivLU<Matrix> lu(ctrb);
    lu.setThreshold(1e-9);
    return static_cast<int>(lu.rank());
}

} // namespace

TEST(Model, RejectsBadDimensions)
{
    EXPECT_THROW(LtiModel(Matrix::Identity(2, 3), Matrix::Ones(2, 1), Matrix::Ones(1, 2), Matrix::Zero(1, 1)),
                 DimensionError);
    EXPECT_THROW(LtiModel(Matrix::Identity(2, 2), Matrix::Ones(3, 1), Matrix::Ones(1, 2), Matrix::Zero(1, 1)),
                 DimensionError);
    EXPECT_THROW(LtiModel(Matrix::Identity(2, 2), Matrix::Ones(2, 1), Matrix::Ones(1, 3), Matrix::Zero(1, 1)),
                 DimensionError);
    EXPECT_THROW(LtiModel(Matrix::Identity(2, 2), Matrix::Ones(2, 1), Matrix::Ones(1, 2), Matrix::Zero(1, 2)),
                 DimensionError);
}

TEST(Model, RejectsUncontrollablePair)
{
    Matrix A = Matrix::Identity(2, 2);
    Matrix B(2, 1);
    B << 1, 0;
    EXPECT_THROW(LtiModel(A, B, Matrix::Identity(2, 2), Matrix::Zero(2, 1)), NotControllable);
}

TEST(Model, ControllabilityIndexOfIntegratorChains)
{
    Matrix A(2, 2);
    A << 1, 1, 0, 1;
    Matrix B(2, 1);
    B << 0, 1;
    EXPECT_EQ(controllability_index(A, B), 2);
    EXPECT_EQ(controllability_index(Matrix::Identity(3, 3), Matrix::Identity(3, 3)), 1);
    EXPECT_EQ(controllability_index(Matrix::Constant(1, 1, 0.5), Matrix::Ones(1, 1)), 1);
    EXPECT_EQ(controllability_index(ball_plate_model()), 4);
}

TEST(Model, ControllabilityIndexMatchesRankOracle)
{
    std::mt19937 rng(7);
    std::normal_distribution<double> g;
    for (int trial = 0; trial < 40; ++trial) {
        const int n = 2 + trial % 5;
        const int m = 1 + trial % 2;
        Matrix A = Matrix::NullaryExpr(n, n, [&] { return g(rng); });
        Matrix B = Matrix::NullaryExpr(n, m, [&] { return g(rng); });
        int expected = -1;
        for (int k = 1; k <= n; ++k) {
            if (rank_oracle(A, B, k) == n) {
                expected = k;
                break;
            }
        }
        ASSERT_GT(expected, 0);
        EXPECT_EQ(controllability_index(A, B), expected);
    }
}

TEST(Model, ConstraintSetValidation)
{
    const Vector lo = Vector::Constant(2, -1.0);
    const Vector hi = Vector::Constant(2, 1.0);
    EXPECT_THROW(ConstraintSet(hi, lo, Vector::Constant(2, 1e-3)), InvalidConstraintSet);
    EXPECT_THROW(ConstraintSet(lo, hi, Vector::Constant(2, 0.0)), InvalidConstraintSet);
    EXPECT_THROW(ConstraintSet(lo, hi, Vector::Constant(2, 1.5)), InvalidConstraintSet);
    EXPECT_THROW(ConstraintSet(lo, hi, Vector::Constant(3, 1e-3)), DimensionError);

    const ConstraintSet c(lo, hi, Vector::Constant(2, 0.25));
    EXPECT_DOUBLE_EQ(c.tightened_min()(0), -0.75);
    EXPECT_DOUBLE_EQ(c.tightened_max()(1), 0.75);
    EXPECT_DOUBLE_EQ(c.violation(Vector::Zero(2)), 0.0);
    EXPECT_DOUBLE_EQ(c.violation(Vector::Constant(2, 1.5)), 0.5);
}

TEST(Model, MatrixExponentialMatchesEigen)
{
    std::mt19937 rng(3);
    std::normal_distribution<double> g;
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 1 + trial % 6;
        const double scale = trial < 10 ? 0.3 : 4.0;
        Matrix M = scale * Matrix::NullaryExpr(n, n, [&] { return g(rng); });
        const Matrix reference = M.exp();
        EXPECT_LE((matrix_exponential(M) - reference).norm(), 1e-10 * std::max(1.0, reference.norm()));
    }
}

TEST(Model, ZohOfDoubleIntegrator)
{
    Matrix Ac(2, 2);
    Ac << 0, 1, 0, 0;
    Matrix Bc(2, 1);
    Bc << 0, 1;
    const double T = 0.2;
    const DiscreteSystem d = discretize_zoh(Ac, Bc, T);
    EXPECT_NEAR(d.A(0, 1), T, 1e-14);
    EXPECT_NEAR(d.B(0, 0), T * T / 2, 1e-14);
    EXPECT_NEAR(d.B(1, 0), T, 1e-14);
}

TEST(Model, ZohOfZeroDynamics)
{
    Matrix Bc(3, 2);
    Bc << 1, 2, 3, 4, 5, 6;
    const DiscreteSystem d = discretize_zoh(Matrix::Zero(3, 3), Bc, 0.7);
    EXPECT_EQ((d.A - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_LE((d.B - 0.7 * Bc).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_THROW(discretize_zoh(Matrix::Zero(3, 3), Bc, 0.0), InvalidParameter);
}

TEST(Model, BallPlateDiscretizationMatchesStepDoubling)
{
    const BallPlateParams p;
    const ContinuousSystem c = linearize_ball_plate(p);
    const DiscreteSystem oracle = step_doubling(c.A, c.B, p.sample_time);
    const LtiModel model = ball_plate_model(p);
    EXPECT_LE((model.A() - oracle.A).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LE((model.B() - oracle.B).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Model, BallPlateDiscretizationMatchesRk4)
{
    const BallPlateParams p;
    const ContinuousSystem c = linearize_ball_plate(p);
    const LtiModel model = ball_plate_model(p);
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        const Vector x = Vector::NullaryExpr(8, [&] { return uni(rng); });
        const Vector u = Vector::NullaryExpr(2, [&] { return uni(rng); });
        const Vector expected = rk4(c.A, c.B, x, u, p.sample_time, 2000);
        EXPECT_LE((model.step(x, u) - expected).cwiseAbs().maxCoeff(), 1e-10);
    }
}

TEST(Model, BallPlateStructure)
{
    const BallPlateParams p;
    EXPECT_NEAR(p.acceleration_gain(), 0.05 / 0.07 * 9.81, 1e-12);
    BallPlateParams point_mass;
    point_mass.inertia = 1e-15;
    EXPECT_NEAR(point_mass.acceleration_gain(), 9.81, 1e-8);

    const ContinuousSystem lin = linearize_ball_plate(p);
    EXPECT_EQ(lin.A.block(0, 4, 4, 4).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(lin.A.block(4, 0, 4, 4).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_NEAR(lin.A(1, 2), p.acceleration_gain(), 1e-15);
    EXPECT_EQ(lin.A(0, 1), 1.0);
    EXPECT_EQ(lin.A(2, 3), 1.0);
    EXPECT_EQ(lin.B(3, 0), 1.0);
    EXPECT_EQ(lin.B(7, 1), 1.0);

    const LtiModel model = ball_plate_model();
    EXPECT_EQ(model.n(), 8);
    EXPECT_EQ(model.m(), 2);
    EXPECT_EQ(model.nz(), 6);
    // Axes decouple.
    EXPECT_EQ(model.A().block(0, 4, 4, 4).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(model.B().block(0, 1, 4, 1).cwiseAbs().maxCoeff(), 0.0);

    const ConstraintSet c = ball_plate_constraints();
    EXPECT_DOUBLE_EQ(c.z_max()(0), 0.5);
    EXPECT_DOUBLE_EQ(c.z_max()(1), std::numbers::pi / 4);
    EXPECT_DOUBLE_EQ(c.z_max()(4), 0.4);
    EXPECT_DOUBLE_EQ(c.eps()(5), 1e-4);

    Vector x = Vector::Zero(8);
    x << 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8;
    Vector u(2);
    u << 0.01, -0.02;
    const Vector z = evaluate_output(model, x, u);
    Vector expected(6);
    expected << 0.2, 0.3, 0.6, 0.7, 0.01, -0.02;
    EXPECT_LE((z - expected).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_THROW(evaluate_output(model, Vector::Zero(3), u), DimensionError);
}

TEST(Model, BallPlateParamsValidation)
{
    BallPlateParams p;
    p.sample_time = 0.0;
    EXPECT_THROW(ball_plate_model(p), InvalidParameter);
    p = BallPlateParams{};
    p.mass = -1.0;
    EXPECT_THROW(linearize_ball_plate(p), InvalidParameter);
}

TEST(Model, JsonRoundTrip)
{
    const LtiModel model = ball_plate_model();
    const ConstraintSet c = ball_plate_constraints();
    const Json j = to_json(model, c);
    for (const char* key : {"A", "B", "C", "D", "z_min", "z_max", "eps"}) {
        EXPECT_TRUE(j.contains(key)) << key;
    }
    const ModelBundle back = model_from_json(Json::parse(j.dump()));
    EXPECT_EQ((back.model.A() - model.A()).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ((back.model.B() - model.B()).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ((back.constraints.z_max() - c.z_max()).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(j["A"][0].size(), 8u);  // row-major

    Json bad = j;
    bad["B"] = Json::array({Json::array({1.0})});
    EXPECT_THROW(model_from_json(bad), DimensionError);
    bad = j;
    bad.erase("eps");
    EXPECT_THROW(model_from_json(bad), ScenarioError);
}
