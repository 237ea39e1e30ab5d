#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "hmpc/errors.hpp"
#include "hmpc/harmonic.hpp"
#include "hmpc/json_io.hpp"
#include "support/random_harmonics.hpp"

using namespace hmpc;
using hmpc::testing::random_consistent_harmonic;
using hmpc::testing::steady_state_basis;

namespace {

Vector vec(std::initializer_list<double> values)
{
    Vector v(static_cast<Eigen::Index>(values.size()));
    Eigen::Index i = 0;
    for (double x : values) {
        v(i++) = x;
    }
    return v;
}

// x+ = diag(0.5, 0.8) x + (1, 1) u with z = (x1, x2, u).
LtiModel small_model()
{
    Matrix A = Matrix::Zero(2, 2);
    A.diagonal() << 0.5, 0.8;
    Matrix B = Matrix::Ones(2, 1);
    Matrix C = Matrix::Zero(3, 2);
    C.topRows(2).setIdentity();
    Matrix D = Matrix::Zero(3, 1);
    D(2, 0) = 1.0;
    return {A, B, C, D};
}

ConstraintSet small_constraints()
{
    return {vec({-1, -1, -0.4}), vec({1, 1, 0.4}), Vector::Constant(3, 1e-3)};
}

ControllerParams small_params()
{
    ControllerParams p;
    p.N = 3;
    p.Q = Matrix::Identity(2, 2);
    p.R = Matrix::Identity(1, 1);
    p.T_e = Matrix::Identity(2, 2);
    p.S_e = Matrix::Identity(1, 1);
    p.T_h = Matrix::Identity(2, 2);
    p.S_h = Matrix::Identity(1, 1);
    p.T_a = p.T_e;
    p.S_a = p.S_e;
    p.w = 0.4;
    return p;
}

SolverSettings tight()
{
    SolverSettings s;
    s.eps_abs = 1e-7;
    s.eps_rel = 1e-7;
    s.max_iter = 200000;
    s.polish = true;
    return s;
}

struct GridOptimum {
    Vector x;
    Vector u;
    double cost = std::numeric_limits<double>::infinity();
};

/**
 * Coarse-to-fine search over the coordinates of the steady-state basis,
 * keeping only points whose outputs sit in the tightened box.
 */
GridOptimum grid_search(const LtiModel& model, const ConstraintSet& cons, const ControllerParams& p,
                        const Reference& ref, double radius)
{
    const Matrix basis = steady_state_basis(model);
    const Eigen::Index dim = basis.cols();
    const Eigen::Index n = model.n();
    Vector center = Vector::Zero(dim);
    GridOptimum best;
    const int points = dim == 1 ? 20001 : 201;
    for (int level = 0; level < 8; ++level) {
        Vector best_theta = center;
        std::vector<int> idx(static_cast<std::size_t>(dim), 0);
        while (true) {
            Vector theta(dim);
            for (Eigen::Index d = 0; d < dim; ++d) {
                theta(d) = center(d) + radius * (2.0 * idx[static_cast<std::size_t>(d)] / (points - 1) - 1.0);
            }
            const Vector xu = basis * theta;
            const Vector x = xu.head(n);
            const Vector u = xu.tail(model.m());
            const Vector z = model.C() * x + model.D() * u;
            const bool admissible = ((z - cons.tightened_min()).array() >= 0).all() &&
                                    ((cons.tightened_max() - z).array() >= 0).all();
            if (admissible) {
                const double cost = (x - ref.x_r).dot(p.T_e * (x - ref.x_r)) + (u - ref.u_r).dot(p.S_e * (u - ref.u_r));
                if (cost < best.cost) {
                    best = {x, u, cost};
                    best_theta = theta;
                }
            }
            Eigen::Index d = 0;
            while (d < dim && ++idx[static_cast<std::size_t>(d)] == points) {
                idx[static_cast<std::size_t>(d)] = 0;
                ++d;
            }
            if (d == dim) {
                break;
            }
        }
        center = best_theta;
        radius *= 4.0 / (points - 1);
    }
    return best;
}

} // namespace

TEST(Harmonic, EvalConstantSignal)
{
    HarmonicReference h = HarmonicReference::steady(vec({1, 2}), vec({3}), 0.3, 4);
    for (int j = 0; j < 20; ++j) {
        const StateInput v = eval_harmonic(h, j);
        EXPECT_EQ(v.x, h.x_e);
        EXPECT_EQ(v.u, h.u_e);
    }
}

TEST(Harmonic, EvalAtPhaseOrigin)
{
    const HarmonicReference h{vec({1, 2}), vec({5, 6}), vec({0.5, -0.5}), vec({1}), vec({2}), vec({3}), 0.77, 5};
    const StateInput v = eval_harmonic(h, 5);
    EXPECT_LE((v.x - (h.x_e + h.x_c)).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_LE((v.u - (h.u_e + h.u_c)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Harmonic, EvalAtFullTurnFrequency)
{
    const HarmonicReference h{vec({1}), vec({5}), vec({0.5}), vec({1}), vec({2}), vec({3}), 2 * std::numbers::pi, 5};
    for (int j = 0; j < 30; ++j) {
        EXPECT_NEAR(eval_harmonic(h, j).x(0), 1.5, 1e-12);
        EXPECT_NEAR(eval_harmonic(h, j).u(0), 4.0, 1e-12);
    }
}

TEST(Harmonic, RotateExamples)
{
    const RotatedPair id = rotate_coeffs(vec({1, 2}), vec({3, 4}), 0.0);
    EXPECT_EQ(id.v_s, vec({1, 2}));
    EXPECT_EQ(id.v_c, vec({3, 4}));

    const RotatedPair quarter = rotate_coeffs(vec({1}), vec({0}), std::numbers::pi / 2);
    EXPECT_NEAR(quarter.v_s(0), 0.0, 1e-15);
    EXPECT_NEAR(quarter.v_c(0), 1.0, 1e-15);

    EXPECT_THROW(rotate_coeffs(vec({1}), vec({1, 2}), 0.1), DimensionError);
}

TEST(Harmonic, RotatePreservesComponentNorms)
{
    std::mt19937 rng(1);
    std::normal_distribution<double> g;
    for (int trial = 0; trial < 200; ++trial) {
        const Vector v_s = Vector::NullaryExpr(6, [&] { return g(rng); });
        const Vector v_c = Vector::NullaryExpr(6, [&] { return g(rng); });
        const RotatedPair r = rotate_coeffs(v_s, v_c, 0.3254);
        const Vector before = v_s.array().square() + v_c.array().square();
        const Vector after = r.v_s.array().square() + r.v_c.array().square();
        EXPECT_LE((before - after).cwiseAbs().maxCoeff(), 1e-12 * std::max(1.0, before.maxCoeff()));
    }
}

TEST(Harmonic, ShiftIdentity)
{
    std::mt19937 rng(2);
    std::normal_distribution<double> g;
    std::uniform_real_distribution<double> uw(0.01, 3.0);
    std::uniform_int_distribution<int> uj(0, 200);
    for (int trial = 0; trial < 200; ++trial) {
        HarmonicReference h{Vector::NullaryExpr(3, [&] { return g(rng); }), Vector::NullaryExpr(3, [&] { return g(rng); }),
                            Vector::NullaryExpr(3, [&] { return g(rng); }), Vector::NullaryExpr(2, [&] { return g(rng); }),
                            Vector::NullaryExpr(2, [&] { return g(rng); }), Vector::NullaryExpr(2, [&] { return g(rng); }),
                            uw(rng), 5};
        const int j = uj(rng);
        HarmonicReference shifted = h;
        const RotatedPair rx = rotate_coeffs(h.x_s, h.x_c, h.w);
        const RotatedPair ru = rotate_coeffs(h.u_s, h.u_c, h.w);
        shifted.x_s = rx.v_s;
        shifted.x_c = rx.v_c;
        shifted.u_s = ru.v_s;
        shifted.u_c = ru.v_c;
        const StateInput a = eval_harmonic(h, j + 1);
        const StateInput b = eval_harmonic(shifted, j);
        EXPECT_LE((a.x - b.x).cwiseAbs().maxCoeff(), 1e-12);
        EXPECT_LE((a.u - b.u).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(Harmonic, AmplitudeBoundExamples)
{
    const AmplitudeBounds flat = amplitude_bounds(vec({2}), vec({0}), vec({0}));
    EXPECT_EQ(flat.lower(0), 2.0);
    EXPECT_EQ(flat.upper(0), 2.0);
    const AmplitudeBounds b = amplitude_bounds(vec({0}), vec({3}), vec({4}));
    EXPECT_DOUBLE_EQ(b.lower(0), -5.0);
    EXPECT_DOUBLE_EQ(b.upper(0), 5.0);
}

TEST(Harmonic, EnvelopeContainsDenseSamples)
{
    std::mt19937 rng(4);
    std::normal_distribution<double> g;
    std::uniform_real_distribution<double> uw(0.01, 3.1);
    for (int trial = 0; trial < 10; ++trial) {
        const Vector v_e = Vector::NullaryExpr(4, [&] { return g(rng); });
        const Vector v_s = Vector::NullaryExpr(4, [&] { return g(rng); });
        const Vector v_c = Vector::NullaryExpr(4, [&] { return g(rng); });
        const double w = uw(rng);
        const AmplitudeBounds b = amplitude_bounds(v_e, v_s, v_c);
        for (int j = 0; j <= 10000; ++j) {
            const Vector v = v_e + std::sin(w * j) * v_s + std::cos(w * j) * v_c;
            ASSERT_TRUE(((v - b.lower).array() >= -1e-12).all());
            ASSERT_TRUE(((b.upper - v).array() >= -1e-12).all());
        }
    }
}

TEST(Harmonic, DynamicsCheck)
{
    const LtiModel model = ball_plate_model();
    std::mt19937 rng(5);
    const HarmonicReference steady = HarmonicReference::steady(
        vec({0.3, 0, 0, 0, -1.2, 0, 0, 0}), Vector::Zero(2), 0.3254, 5);
    EXPECT_TRUE(check_harmonic_dynamics(model, steady));

    const HarmonicReference h = random_consistent_harmonic(model, 0.3254, 5, 0.1, rng);
    EXPECT_TRUE(check_harmonic_dynamics(model, h));
    HarmonicReference broken = h;
    broken.x_s(0) += 1e-3;
    EXPECT_FALSE(check_harmonic_dynamics(model, broken));
}

TEST(Harmonic, PropagationReproducesEvaluation)
{
    const LtiModel model = ball_plate_model();
    std::mt19937 rng(6);
    for (int trial = 0; trial < 10; ++trial) {
        const HarmonicReference h = random_consistent_harmonic(model, 0.2 + 0.2 * trial, 5, 0.1, rng);
        ASSERT_TRUE(check_harmonic_dynamics(model, h));
        Vector x = h.x_e + h.x_c;
        for (int l = 0; l < 100; ++l) {
            const StateInput expected = eval_harmonic(h, h.N + l);
            ASSERT_LE((x - expected.x).cwiseAbs().maxCoeff(), 1e-8 * std::max(1.0, expected.x.norm()));
            x = model.step(x, expected.u);
        }
    }
}

TEST(Harmonic, OffsetCost)
{
    const HarmonicReference h{vec({1, 0}), vec({1, 0}), vec({0, 2}), vec({1}), vec({1}), vec({1}), 0.3, 1};
    const Reference ref{vec({0, 0}), vec({0})};
    const Matrix I2 = Matrix::Identity(2, 2);
    const Matrix I1 = Matrix::Identity(1, 1);
    EXPECT_DOUBLE_EQ(harmonic_offset_cost(h, ref, I2, I1, I2, I1), 1 + 1 + 1 + 4 + 1 + 1);
    EXPECT_DOUBLE_EQ(harmonic_offset_cost(h, ref, 2 * I2, I1, I2, 3 * I1), 2 + 1 + 1 + 4 + 3 + 3);
}

TEST(Harmonic, OptimalReferenceOfAdmissibleTarget)
{
    const LtiModel model = ball_plate_model();
    const ConstraintSet cons = ball_plate_constraints();
    const ControllerParams params = ControllerParams::ball_plate(5);
    const Reference ref{vec({1.8, 0, 0, 0, 1.4, 0, 0, 0}), Vector::Zero(2)};
    const ArtificialReferenceResult r = optimal_artificial_reference(model, cons, params, ref);
    EXPECT_EQ(r.report.status, SolveStatus::Solved);
    EXPECT_LE((r.reference.x_e - ref.x_r).cwiseAbs().maxCoeff(), 1e-4);
    EXPECT_LE(r.reference.u_e.cwiseAbs().maxCoeff(), 1e-4);
    const double harmonics = r.reference.x_s.norm() + r.reference.x_c.norm() + r.reference.u_s.norm() +
                             r.reference.u_c.norm();
    EXPECT_LE(harmonics, 1e-4);
    EXPECT_LE(r.offset_cost, 1e-6);
}

TEST(Harmonic, OptimalReferenceMatchesGridSearchOnBallPlate)
{
    const LtiModel model = ball_plate_model();
    const ConstraintSet cons = ball_plate_constraints();
    const ControllerParams params = ControllerParams::ball_plate(5);
    const Reference ref{vec({1.8, 1.0, 0, 0, 1.4, 0, 0, 0}), Vector::Zero(2)};
    const ArtificialReferenceResult r = optimal_artificial_reference(model, cons, params, ref, tight());
    const GridOptimum oracle = grid_search(model, cons, params, ref, 10.0);
    EXPECT_LE((r.reference.x_e - oracle.x).cwiseAbs().maxCoeff(), 1e-4);
    EXPECT_NEAR(r.offset_cost, oracle.cost, 1e-6 * std::max(1.0, oracle.cost));
}

TEST(Harmonic, OptimalReferenceMatchesGridSearchWithActiveBound)
{
    const LtiModel model = small_model();
    const ConstraintSet cons = small_constraints();
    const ControllerParams params = small_params();
    for (const Reference& ref : {Reference{vec({1.5, 3.0}), vec({0.5})}, Reference{vec({0.3, 0.2}), vec({0.0})},
                                 Reference{vec({-2.0, 0.0}), vec({-1.0})}}) {
        const ArtificialReferenceResult r = optimal_artificial_reference(model, cons, params, ref, tight());
        const GridOptimum oracle = grid_search(model, cons, params, ref, 10.0);
        EXPECT_LE((r.reference.x_e - oracle.x).cwiseAbs().maxCoeff(), 1e-5);
        EXPECT_LE((r.reference.u_e - oracle.u).cwiseAbs().maxCoeff(), 1e-5);
        EXPECT_NEAR(r.offset_cost, oracle.cost, 1e-6 * std::max(1.0, oracle.cost));
        EXPECT_LE(r.reference.x_s.norm() + r.reference.x_c.norm() + r.reference.u_s.norm() + r.reference.u_c.norm(),
                  1e-6);
    }
}

TEST(Harmonic, JsonRoundTrip)
{
    const HarmonicReference h{vec({1, 2}), vec({3, 4}), vec({5, 6}), vec({7}), vec({8}), vec({9}), 0.3254, 5};
    const Json j = to_json(h);
    for (const char* key : {"x_e", "x_s", "x_c", "u_e", "u_s", "u_c", "w"}) {
        EXPECT_TRUE(j.contains(key)) << key;
    }
    const HarmonicReference back = harmonic_from_json(Json::parse(j.dump()));
    EXPECT_EQ(back.x_c, h.x_c);
    EXPECT_EQ(back.u_s, h.u_s);
    EXPECT_EQ(back.w, h.w);
    EXPECT_EQ(back.N, h.N);
}

TEST(Harmonic, Validation)
{
    const LtiModel model = small_model();
    HarmonicReference h = HarmonicReference::steady(vec({0, 0}), vec({0}), 0.0, 1);
    EXPECT_THROW(validate(h, model), InvalidParameter);
    h.w = 0.5;
    h.u_e = vec({0, 0});
    EXPECT_THROW(validate(h, model), DimensionError);
}
