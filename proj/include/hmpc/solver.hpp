#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/SparseCholesky>

#include "hmpc/cone_program.hpp"

namespace hmpc {

/**
 * ADMM settings. Tolerance defaults follow the benchmark configuration
 * (1e-5 on all four); the remaining values are the operator-splitting
 * defaults of this solver.
 */
struct SolverSettings {
    double eps_abs = 1e-5;
    double eps_rel = 1e-5;
    double eps_prim_inf = 1e-5;
    double eps_dual_inf = 1e-5;
    int max_iter = 20000;
    double rho = 0.1;
    double sigma = 1e-6;
    double alpha = 1.6;
    /// Iterations between rho updates; 0 disables adaptation.
    int adaptive_rho_interval = 25;
    /// Ruiz equilibration passes; 0 disables scaling.
    int scaling_iterations = 10;
    bool record_history = false;
    /**
     * After convergence, guess the active constraints from the iterate and
     * solve the resulting equality-constrained QP directly. The polished
     * point is kept only if it improves both residuals.
     */
    bool polish = false;

    void validate() const;
};

enum class SolveStatus { Solved, PrimalInfeasible, DualInfeasible, MaxIter };

std::string to_string(SolveStatus status);

struct IterationRecord {
    int iteration = 0;
    double r_prim = 0.0;
    double r_dual = 0.0;
    double objective = 0.0;
};

struct SolveReport {
    SolveStatus status = SolveStatus::MaxIter;
    int iterations = 0;
    double r_prim = 0.0;
    double r_dual = 0.0;
    double objective = 0.0;
    double solve_ms = 0.0;
    int factorizations = 0;
    bool polished = false;
    std::vector<IterationRecord> history;
};

struct SolveResult {
    Vector x;
    Vector s;
    /// Dual iterate in the polar cone; P x + q - A'y = 0 at optimality.
    Vector y;
    SolveReport report;
};

struct WarmStart {
    Vector x;
    std::optional<Vector> y;
};

/// Euclidean projection onto {(t, a, b) : ||(a, b)|| <= t}.
Eigen::Vector3d project_soc(const Eigen::Vector3d& v);

/**
 * LDL' factorization of the regularized KKT matrix
 *
 *   [ P + sigma I     A'         ]
 *   [ A           -diag(1/rho)   ]
 *
 * with a fixed AMD ordering. The matrix is quasi-definite for sigma > 0.
 */
class KktFactorization {
public:
    KktFactorization(const SparseMatrix& P, const SparseMatrix& A, const Vector& rho, double sigma);

    /// Refactors with new penalties, keeping the symbolic analysis.
    void refactor(const Vector& rho);
    Vector solve(const Vector& rhs) const;
    int size() const { return static_cast<int>(kkt_.rows()); }

private:
    void assemble(const Vector& rho);
    void factor();

    SparseMatrix P_;
    SparseMatrix A_;
    double sigma_;
    SparseMatrix kkt_;
    Eigen::SimplicialLDLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt_;
};

/// Factors the KKT matrix of an unscaled program with scalar rho on every row.
KktFactorization linear_system_factor(const ConeProgram& program, double rho, double sigma);

/**
 * Operator-splitting solver for ConeProgram. The KKT factorization is kept
 * across calls; update_linear_terms() changes q and b without refactoring.
 * An instance is single-threaded.
 */
class ConicSolver {
public:
    explicit ConicSolver(const ConeProgram& program, SolverSettings settings = {});

    void update_linear_terms(const Vector& q, const Vector& b);
    void set_constant(double constant) { constant_ = constant; }
    /// Changes the termination tolerances only; the factorization is kept.
    void set_tolerances(double eps_abs, double eps_rel);
    SolveResult solve(const std::optional<WarmStart>& warm = std::nullopt);

    const SolverSettings& settings() const { return settings_; }

private:
    void equilibrate();
    Vector row_rho(double rho) const;
    void project_cone(Vector& v) const;
    bool polish(Vector& x, Vector& s, Vector& y, SolveReport& report) const;

    SolverSettings settings_;
    ConeDims cones_;
    double constant_;

    // Unscaled data.
    SparseMatrix P_;
    SparseMatrix A_;
    Vector q_;
    Vector b_;

    // Scaled data: P_s = c D P D, A_s = E A D, q_s = c D q, b_s = E b.
    SparseMatrix Ps_;
    SparseMatrix As_;
    SparseMatrix AsT_;
    Vector qs_;
    Vector bs_;
    Vector D_;
    Vector E_;
    double cost_scale_ = 1.0;

    double rho_;
    Vector rho_vec_;
    std::optional<KktFactorization> kkt_;
    int factorizations_ = 0;
};

/// One-shot convenience wrapper around ConicSolver.
SolveResult solve(const ConeProgram& program, const SolverSettings& settings = {},
                  const std::optional<WarmStart>& warm = std::nullopt);

} // namespace hmpc
