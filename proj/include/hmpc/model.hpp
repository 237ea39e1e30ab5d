#pragma once

#include <Eigen/Dense>

namespace hmpc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Truncation tolerance of the Taylor series used by matrix_exponential.
inline constexpr double kExpmTolerance = 1e-12;

/**
 * Discrete linear time-invariant plant
 *
 *   x+ = A x + B u,   z = C x + D u
 *
 * where z collects the constrained outputs. Construction checks the
 * dimensions and that (A, B) is controllable.
 */
class LtiModel {
public:
    LtiModel(Matrix A, Matrix B, Matrix C, Matrix D);

    const Matrix& A() const { return A_; }
    const Matrix& B() const { return B_; }
    const Matrix& C() const { return C_; }
    const Matrix& D() const { return D_; }

    Eigen::Index n() const { return A_.rows(); }
    Eigen::Index m() const { return B_.cols(); }
    Eigen::Index nz() const { return C_.rows(); }

    /// Successor state A x + B u.
    Vector step(const Vector& x, const Vector& u) const;

private:
    Matrix A_;
    Matrix B_;
    Matrix C_;
    Matrix D_;
};

/**
 * Box z_min <= z <= z_max on the constrained outputs together with the
 * tightening vector eps used for artificial references:
 * [z_min + eps, z_max - eps].
 */
class ConstraintSet {
public:
    ConstraintSet(Vector z_min, Vector z_max, Vector eps);

    const Vector& z_min() const { return z_min_; }
    const Vector& z_max() const { return z_max_; }
    const Vector& eps() const { return eps_; }
    const Vector& tightened_min() const { return tight_min_; }
    const Vector& tightened_max() const { return tight_max_; }
    Eigen::Index size() const { return z_min_.size(); }

    /// Largest violation of z against the (untightened) box; 0 if inside.
    double violation(const Vector& z) const;

private:
    Vector z_min_;
    Vector z_max_;
    Vector eps_;
    Vector tight_min_;
    Vector tight_max_;
};

/// Physical parameters of the ball-and-plate plant.
struct BallPlateParams {
    double mass = 0.05;        // kg
    double radius = 0.01;      // m
    double inertia = 2e-6;     // kg m^2, (2/5) m r^2 for a solid ball
    double gravity = 9.81;     // m/s^2
    double sample_time = 0.2;  // s

    void validate() const;
    /// m / (m + I_b / r^2) * g, the ball acceleration per radian of tilt.
    double acceleration_gain() const;
};

struct ContinuousSystem {
    Matrix A;
    Matrix B;
};

struct DiscreteSystem {
    Matrix A;
    Matrix B;
};

/// Smallest k with rank [B, AB, ..., A^{k-1}B] = n. Throws NotControllable.
int controllability_index(const Matrix& A, const Matrix& B);
int controllability_index(const LtiModel& model);

/// exp(M) by scaling and squaring of a Taylor series truncated at kExpmTolerance.
Matrix matrix_exponential(const Matrix& M);

/// Exact zero-order-hold discretization via the augmented matrix exponential.
DiscreteSystem discretize_zoh(const Matrix& Ac, const Matrix& Bc, double sample_time);

/**
 * Jacobians at the origin of the ball-and-plate equations. State order is
 * (z1, dz1, th1, dth1, z2, dz2, th2, dth2), input is (ddth1, ddth2).
 */
ContinuousSystem linearize_ball_plate(const BallPlateParams& p);

/// Discretized ball-and-plate model with z = (dz1, th1, dz2, th2, u1, u2).
LtiModel ball_plate_model(const BallPlateParams& p = {});

/// |dz| <= 0.5, |th| <= pi/4, |u| <= 0.4 with eps = 1e-4 on every output.
ConstraintSet ball_plate_constraints();

/// z = C x + D u. Throws DimensionError on size mismatch.
Vector evaluate_output(const LtiModel& model, const Vector& x, const Vector& u);

} // namespace hmpc
