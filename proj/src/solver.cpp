#include "hmpc/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "hmpc/errors.hpp"

namespace hmpc {

namespace {

constexpr double kEqualityRhoScale = 1e3;
constexpr double kRhoMin = 1e-6;
constexpr double kRhoMax = 1e6;
constexpr double kScalingMin = 1e-4;
constexpr double kScalingMax = 1e4;
constexpr double kTiny = 1e-30;
constexpr double kSingularPivot = 1e-13;
// Direction norms below this are too small to certify infeasibility.
constexpr double kCertificateFloor = 1e-10;
constexpr double kPolishDelta = 1e-7;
constexpr int kPolishRefinements = 5;
constexpr int kPolishRounds = 25;
constexpr double kPolishTolerance = 1e-9;
constexpr double kPolishDirection = 1e-10;

double inf_norm(const Vector& v)
{
    return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
}

Vector penalty_vector(const ConeDims& cones, double rho)
{
    Vector r = Vector::Constant(cones.rows(), rho);
    r.head(cones.zero).array() *= kEqualityRhoScale;
    return r;
}

Vector column_inf_norms(const SparseMatrix& M)
{
    Vector norms = Vector::Zero(M.cols());
    for (int k = 0; k < M.outerSize(); ++k) {
        for (SparseMatrix::InnerIterator it(M, k); it; ++it) {
            norms(it.col()) = std::max(norms(it.col()), std::abs(it.value()));
        }
    }
    return norms;
}

Vector row_inf_norms(const SparseMatrix& M)
{
    Vector norms = Vector::Zero(M.rows());
    for (int k = 0; k < M.outerSize(); ++k) {
        for (SparseMatrix::InnerIterator it(M, k); it; ++it) {
            norms(it.row()) = std::max(norms(it.row()), std::abs(it.value()));
        }
    }
    return norms;
}

double scaling_factor(double norm)
{
    if (norm < kScalingMin) {
        return 1.0;
    }
    return 1.0 / std::sqrt(std::clamp(norm, kScalingMin, kScalingMax));
}

// Projection of v onto K (in place), K = {0} x R+ x SOC x ...
void project_onto(const ConeDims& cones, Vector& v)
{
    v.head(cones.zero).setZero();
    auto nonneg = v.segment(cones.zero, cones.nonneg);
    nonneg = nonneg.cwiseMax(0.0);
    int row = cones.zero + cones.nonneg;
    for (int size : cones.soc) {
        const Eigen::Vector3d p = project_soc(v.segment<3>(row));
        v.segment<3>(row) = p;
        row += size;
    }
}

// Distance (inf-norm) from v to K.
double distance_to_cone(const ConeDims& cones, const Vector& v)
{
    Vector p = v;
    project_onto(cones, p);
    return inf_norm(v - p);
}

// Distance (inf-norm) from v to the dual cone K* = R^zero x R+ x SOC x ...
double distance_to_dual_cone(const ConeDims& cones, const Vector& v)
{
    Vector p = v;
    auto nonneg = p.segment(cones.zero, cones.nonneg);
    nonneg = nonneg.cwiseMax(0.0);
    int row = cones.zero + cones.nonneg;
    for (int size : cones.soc) {
        const Eigen::Vector3d proj = project_soc(p.segment<3>(row));
        p.segment<3>(row) = proj;
        row += size;
    }
    return inf_norm(v - p);
}

} // namespace

void SolverSettings::validate() const
{
    if (!(eps_abs > 0 && eps_rel > 0 && eps_prim_inf > 0 && eps_dual_inf > 0)) {
        throw InvalidParameter("solver tolerances must be positive");
    }
    if (!(alpha > 0.0 && alpha < 2.0)) {
        throw InvalidParameter("relaxation alpha must lie in (0, 2)");
    }
    if (!(rho > 0.0) || sigma < 0.0 || max_iter <= 0) {
        throw InvalidParameter("rho must be positive, sigma nonnegative, max_iter positive");
    }
}

std::string to_string(SolveStatus status)
{
    switch (status) {
    case SolveStatus::Solved:
        return "Solved";
    case SolveStatus::PrimalInfeasible:
        return "PrimalInfeasible";
    case SolveStatus::DualInfeasible:
        return "DualInfeasible";
    case SolveStatus::MaxIter:
        return "MaxIter";
    }
    return "Unknown";
}

Eigen::Vector3d project_soc(const Eigen::Vector3d& v)
{
    const double t = v(0);
    const double norm = std::hypot(v(1), v(2));
    if (norm <= t) {
        return v;
    }
    if (norm <= -t) {
        return Eigen::Vector3d::Zero();
    }
    const double scale = 0.5 * (t + norm);
    return {scale, scale * v(1) / norm, scale * v(2) / norm};
}

KktFactorization::KktFactorization(const SparseMatrix& P, const SparseMatrix& A, const Vector& rho,
                                   double sigma)
    : P_(P), A_(A), sigma_(sigma)
{
    if (rho.size() != A.rows() || P.rows() != A.cols()) {
        throw DimensionError("KKT: inconsistent dimensions");
    }
    assemble(rho);
    ldlt_.analyzePattern(kkt_);
    factor();
}

void KktFactorization::assemble(const Vector& rho)
{
    const Eigen::Index n = P_.rows();
    const Eigen::Index m = A_.rows();
    std::vector<Eigen::Triplet<double>> entries;
    entries.reserve(static_cast<std::size_t>(P_.nonZeros() + A_.nonZeros() + n + m));
    for (int k = 0; k < P_.outerSize(); ++k) {
        for (SparseMatrix::InnerIterator it(P_, k); it; ++it) {
            if (it.row() >= it.col()) {
                entries.emplace_back(it.row(), it.col(), it.value());
            }
        }
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        entries.emplace_back(i, i, sigma_);
    }
    for (int k = 0; k < A_.outerSize(); ++k) {
        for (SparseMatrix::InnerIterator it(A_, k); it; ++it) {
            entries.emplace_back(n + it.row(), it.col(), it.value());
        }
    }
    for (Eigen::Index i = 0; i < m; ++i) {
        entries.emplace_back(n + i, n + i, -1.0 / rho(i));
    }
    kkt_.resize(n + m, n + m);
    kkt_.setFromTriplets(entries.begin(), entries.end());
    kkt_.makeCompressed();
}

void KktFactorization::factor()
{
    ldlt_.factorize(kkt_);
    if (ldlt_.info() != Eigen::Success) {
        throw SingularKkt("KKT factorization failed: zero pivot");
    }
    // Each pivot is compared with the magnitude of its own KKT row.
    const Vector d = ldlt_.vectorD().cwiseAbs();
    const Vector rows = row_inf_norms(kkt_).cwiseMax(column_inf_norms(kkt_));
    const auto& perm = ldlt_.permutationP().indices();
    for (Eigen::Index j = 0; j < d.size(); ++j) {
        if (d(perm(j)) <= kSingularPivot * rows(j)) {
            throw SingularKkt("KKT matrix is numerically singular");
        }
    }
}

void KktFactorization::refactor(const Vector& rho)
{
    assemble(rho);
    factor();
}

Vector KktFactorization::solve(const Vector& rhs) const
{
    return ldlt_.solve(rhs);
}

KktFactorization linear_system_factor(const ConeProgram& program, double rho, double sigma)
{
    program.validate();
    return KktFactorization(program.P, program.A, penalty_vector(program.cones, rho), sigma);
}

ConicSolver::ConicSolver(const ConeProgram& program, SolverSettings settings)
    : settings_(settings), cones_(program.cones), constant_(program.constant), P_(program.P),
      A_(program.A), q_(program.q), b_(program.b), rho_(settings.rho)
{
    settings_.validate();
    program.validate();
    equilibrate();
    rho_vec_ = row_rho(rho_);
    kkt_.emplace(Ps_, As_, rho_vec_, settings_.sigma);
    factorizations_ = 1;
}

Vector ConicSolver::row_rho(double rho) const
{
    return penalty_vector(cones_, rho);
}

void ConicSolver::equilibrate()
{
    const Eigen::Index n = P_.rows();
    const Eigen::Index m = A_.rows();
    Ps_ = P_;
    As_ = A_;
    D_ = Vector::Ones(n);
    E_ = Vector::Ones(m);

    for (int pass = 0; pass < settings_.scaling_iterations; ++pass) {
        const Vector p_cols = column_inf_norms(Ps_);
        const Vector a_cols = column_inf_norms(As_);
        const Vector a_rows = row_inf_norms(As_);
        Vector dx(n);
        for (Eigen::Index j = 0; j < n; ++j) {
            dx(j) = scaling_factor(std::max(p_cols(j), a_cols(j)));
        }
        Vector dr(m);
        for (Eigen::Index i = 0; i < m; ++i) {
            dr(i) = scaling_factor(a_rows(i));
        }
        // A cone is invariant only under a uniform scaling of each SOC block.
        int row = cones_.zero + cones_.nonneg;
        for (int size : cones_.soc) {
            dr.segment(row, size).setConstant(dr.segment(row, size).mean());
            row += size;
        }
        Ps_ = dx.asDiagonal() * Ps_ * dx.asDiagonal();
        As_ = dr.asDiagonal() * As_ * dx.asDiagonal();
        D_.array() *= dx.array();
        E_.array() *= dr.array();
    }

    const Vector p_cols = column_inf_norms(Ps_);
    const double mean_col = n > 0 ? p_cols.mean() : 0.0;
    const double q_norm = inf_norm(D_.cwiseProduct(q_));
    const double cost_norm = std::max(mean_col, q_norm);
    cost_scale_ = cost_norm < kScalingMin ? 1.0 : 1.0 / std::clamp(cost_norm, kScalingMin, kScalingMax);
    Ps_ *= cost_scale_;
    Ps_.makeCompressed();
    As_.makeCompressed();
    AsT_ = As_.transpose();
    qs_ = cost_scale_ * D_.cwiseProduct(q_);
    bs_ = E_.cwiseProduct(b_);
}

void ConicSolver::update_linear_terms(const Vector& q, const Vector& b)
{
    if (q.size() != q_.size() || b.size() != b_.size()) {
        throw DimensionError("update_linear_terms: size mismatch");
    }
    q_ = q;
    b_ = b;
    qs_ = cost_scale_ * D_.cwiseProduct(q_);
    bs_ = E_.cwiseProduct(b_);
}

void ConicSolver::set_tolerances(double eps_abs, double eps_rel)
{
    if (!(eps_abs > 0.0) || !(eps_rel > 0.0)) {
        throw InvalidParameter("tolerances must be positive");
    }
    settings_.eps_abs = eps_abs;
    settings_.eps_rel = eps_rel;
}

void ConicSolver::project_cone(Vector& v) const
{
    project_onto(cones_, v);
}

// Active-set polish in the scaled space. y is in the polar cone. The guess
// from the iterate is corrected by dropping rows whose multiplier has the
// wrong sign and adding rows the polished point violates.
bool ConicSolver::polish(Vector& x, Vector& s, Vector& y, SolveReport& report) const
{
    const Eigen::Index n = Ps_.rows();
    const int first_nonneg = cones_.zero;
    const int first_soc = cones_.zero + cones_.nonneg;
    const int num_soc = static_cast<int>(cones_.soc.size());

    enum class SocState { Inactive, Apex, Boundary };
    std::vector<char> nonneg_active(static_cast<std::size_t>(cones_.nonneg));
    std::vector<SocState> soc_state(static_cast<std::size_t>(num_soc));
    std::vector<Eigen::Vector2d> soc_dir(static_cast<std::size_t>(num_soc));

    for (int i = 0; i < cones_.nonneg; ++i) {
        nonneg_active[static_cast<std::size_t>(i)] = s(first_nonneg + i) < -y(first_nonneg + i);
    }
    for (int c = 0; c < num_soc; ++c) {
        const int row = first_soc + 3 * c;
        const Eigen::Vector3d sb = s.segment<3>(row);
        const Eigen::Vector3d yb = -y.segment<3>(row);
        const double s_gap = sb(0) - sb.tail<2>().norm();
        const double y_gap = yb(0) - yb.tail<2>().norm();
        const auto k = static_cast<std::size_t>(c);
        if (yb.norm() <= s_gap) {
            soc_state[k] = SocState::Inactive;
        } else if (sb.norm() <= y_gap) {
            soc_state[k] = SocState::Apex;
        } else {
            const Eigen::Vector2d d = sb.norm() >= yb.norm() ? Eigen::Vector2d(sb.tail<2>())
                                                             : Eigen::Vector2d(-yb.tail<2>());
            if (d.norm() <= kTiny) {
                return false;
            }
            soc_state[k] = SocState::Boundary;
            soc_dir[k] = d.normalized();
        }
    }

    Vector xp;
    Vector yp;
    for (int round = 0; round < kPolishRounds; ++round) {
        // Each active constraint is a combination of rows of (A, b).
        std::vector<Eigen::Triplet<double>> sel;
        int na = 0;
        for (int i = 0; i < cones_.zero; ++i) {
            sel.emplace_back(na++, i, 1.0);
        }
        for (int i = 0; i < cones_.nonneg; ++i) {
            if (nonneg_active[static_cast<std::size_t>(i)]) {
                sel.emplace_back(na++, first_nonneg + i, 1.0);
            }
        }
        for (int c = 0; c < num_soc; ++c) {
            const int row = first_soc + 3 * c;
            const auto k = static_cast<std::size_t>(c);
            if (soc_state[k] == SocState::Apex) {
                for (int j = 0; j < 3; ++j) {
                    sel.emplace_back(na++, row + j, 1.0);
                }
            } else if (soc_state[k] == SocState::Boundary) {
                // Tangent plane s_t - d's_v = 0 at the boundary ray s = t (1, d).
                sel.emplace_back(na, row, 1.0);
                sel.emplace_back(na, row + 1, -soc_dir[k](0));
                sel.emplace_back(na++, row + 2, -soc_dir[k](1));
            }
        }
        SparseMatrix rowsel(na, As_.rows());
        rowsel.setFromTriplets(sel.begin(), sel.end());
        const SparseMatrix Abar = rowsel * As_;
        const Vector bbar = rowsel * bs_;

        std::vector<Eigen::Triplet<double>> t;
        for (int k = 0; k < Ps_.outerSize(); ++k) {
            for (SparseMatrix::InnerIterator it(Ps_, k); it; ++it) {
                t.emplace_back(it.row(), it.col(), it.value());
            }
        }
        for (int k = 0; k < Abar.outerSize(); ++k) {
            for (SparseMatrix::InnerIterator it(Abar, k); it; ++it) {
                t.emplace_back(n + it.row(), it.col(), it.value());
                t.emplace_back(it.col(), n + it.row(), it.value());
            }
        }
        SparseMatrix K(n + na, n + na);
        K.setFromTriplets(t.begin(), t.end());
        SparseMatrix Kreg = K;
        for (Eigen::Index i = 0; i < n + na; ++i) {
            Kreg.coeffRef(i, i) += i < n ? kPolishDelta : -kPolishDelta;
        }
        Kreg.makeCompressed();
        Eigen::SimplicialLDLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt(Kreg);
        if (ldlt.info() != Eigen::Success) {
            return false;
        }
        Vector rhs(n + na);
        rhs.head(n) = -qs_;
        rhs.tail(na) = bbar;
        Vector z = ldlt.solve(rhs);
        for (int k = 0; k < kPolishRefinements; ++k) {
            z += ldlt.solve(rhs - K * z);
        }
        if (!z.allFinite()) {
            return false;
        }
        xp = z.head(n);
        yp = -(rowsel.transpose() * z.tail(na));

        const Vector slack = bs_ - As_ * xp;
        const double tol = kPolishTolerance * std::max(1.0, inf_norm(bs_));
        bool changed = false;
        for (int i = 0; i < cones_.nonneg; ++i) {
            const auto k = static_cast<std::size_t>(i);
            const int r = first_nonneg + i;
            if (nonneg_active[k] && yp(r) > tol) {
                nonneg_active[k] = false;
                changed = true;
            } else if (!nonneg_active[k] && slack(r) < -tol) {
                nonneg_active[k] = true;
                changed = true;
            }
        }
        for (int c = 0; c < num_soc; ++c) {
            const int row = first_soc + 3 * c;
            const auto k = static_cast<std::size_t>(c);
            const Eigen::Vector3d sb = slack.segment<3>(row);
            const Eigen::Vector3d yb = -yp.segment<3>(row);
            const double sv_norm = sb.tail<2>().norm();
            if (soc_state[k] == SocState::Inactive && sv_norm - sb(0) > tol) {
                soc_state[k] = SocState::Boundary;
                soc_dir[k] = sv_norm > kTiny ? Eigen::Vector2d(sb.tail<2>() / sv_norm) : Eigen::Vector2d(1.0, 0.0);
                changed = true;
            } else if (soc_state[k] != SocState::Inactive && yb.tail<2>().norm() - yb(0) > tol) {
                soc_state[k] = SocState::Inactive;
                changed = true;
            } else if (soc_state[k] == SocState::Boundary) {
                // The plane only fixes s_t; the direction follows the polished point.
                if (sv_norm <= tol) {
                    soc_state[k] = SocState::Apex;
                    changed = true;
                } else {
                    const Eigen::Vector2d d = sb.tail<2>() / sv_norm;
                    if ((d - soc_dir[k]).norm() > kPolishDirection) {
                        soc_dir[k] = d;
                        changed = true;
                    }
                }
            }
        }
        if (!changed) {
            break;
        }
    }

    const Vector Dinv = D_.cwiseInverse();
    const Vector Einv = E_.cwiseInverse();
    const double cinv = 1.0 / cost_scale_;
    const Vector slack = Einv.cwiseProduct(bs_ - As_ * xp);
    const double r_prim = distance_to_cone(cones_, slack);
    const Vector y_unscaled = cinv * E_.cwiseProduct(yp);
    const double r_dual = std::max(inf_norm(cinv * Dinv.cwiseProduct(Ps_ * xp + qs_ - AsT_ * yp)),
                                   distance_to_dual_cone(cones_, -y_unscaled));
    if (r_prim > report.r_prim || r_dual > report.r_dual) {
        return false;
    }
    x = xp;
    s = bs_ - As_ * xp;
    project_cone(s);
    y = yp;
    report.r_prim = r_prim;
    report.r_dual = r_dual;
    return true;
}

SolveResult ConicSolver::solve(const std::optional<WarmStart>& warm)
{
    const auto start = std::chrono::steady_clock::now();
    const Eigen::Index n = Ps_.rows();
    const Eigen::Index m = As_.rows();
    const double alpha = settings_.alpha;
    const double sigma = settings_.sigma;

    Vector x = Vector::Zero(n);
    Vector y = Vector::Zero(m);
    if (warm) {
        if (warm->x.size() != n) {
            throw DimensionError("warm start x has wrong size");
        }
        x = warm->x.cwiseQuotient(D_);
        if (warm->y) {
            if (warm->y->size() != m) {
                throw DimensionError("warm start y has wrong size");
            }
            y = cost_scale_ * warm->y->cwiseQuotient(E_);
        }
    }
    Vector s = bs_ - As_ * x;
    project_cone(s);

    const Vector Dinv = D_.cwiseInverse();
    const Vector Einv = E_.cwiseInverse();
    const double cinv = 1.0 / cost_scale_;

    SolveReport report;
    Vector rhs(n + m);
    Vector x_prev;
    Vector y_prev;
    const int start_factorizations = factorizations_;

    int iter = 0;
    for (iter = 1; iter <= settings_.max_iter; ++iter) {
        x_prev = x;
        y_prev = y;

        rhs.head(n) = sigma * x - qs_;
        rhs.tail(m) = bs_ - s + y.cwiseQuotient(rho_vec_);
        const Vector sol = kkt_->solve(rhs);
        const auto x_tilde = sol.head(n);
        const auto nu = sol.tail(m);
        const Vector s_tilde = s - (nu + y).cwiseQuotient(rho_vec_);

        x = alpha * x_tilde + (1.0 - alpha) * x;
        const Vector s_relaxed = alpha * s_tilde + (1.0 - alpha) * s;
        Vector s_new = s_relaxed + y.cwiseQuotient(rho_vec_);
        project_cone(s_new);
        y += rho_vec_.cwiseProduct(s_relaxed - s_new);
        s = std::move(s_new);

        // Residuals in the original (unscaled) problem.
        const Vector Ax_s = As_ * x;
        const Vector Px_s = Ps_ * x;
        const Vector ATy_s = AsT_ * y;
        const Vector r_prim = Einv.cwiseProduct(Ax_s + s - bs_);
        const Vector r_dual = cinv * Dinv.cwiseProduct(Px_s + qs_ - ATy_s);
        report.r_prim = inf_norm(r_prim);
        report.r_dual = inf_norm(r_dual);

        const double prim_scale = std::max({inf_norm(Einv.cwiseProduct(Ax_s)),
                                            inf_norm(Einv.cwiseProduct(s)), inf_norm(b_)});
        const double dual_scale = std::max({inf_norm(cinv * Dinv.cwiseProduct(Px_s)), inf_norm(q_),
                                            inf_norm(cinv * Dinv.cwiseProduct(ATy_s))});

        if (settings_.record_history) {
            const double obj = cinv * (0.5 * x.dot(Px_s) + qs_.dot(x)) + constant_;
            report.history.push_back({iter, report.r_prim, report.r_dual, obj});
        }

        if (report.r_prim <= settings_.eps_abs + settings_.eps_rel * prim_scale &&
            report.r_dual <= settings_.eps_abs + settings_.eps_rel * dual_scale) {
            report.status = SolveStatus::Solved;
            break;
        }

        // Infeasibility certificates from successive differences.
        const Vector dy = cinv * E_.cwiseProduct(y - y_prev);
        const double dy_norm = inf_norm(dy);
        if (dy_norm > kCertificateFloor) {
            const Vector ATdy = A_.transpose() * dy;
            const double tol = settings_.eps_prim_inf * dy_norm;
            if (inf_norm(ATdy) <= tol && b_.dot(dy) >= tol &&
                distance_to_dual_cone(cones_, -dy) <= tol) {
                report.status = SolveStatus::PrimalInfeasible;
                break;
            }
        }
        const Vector dx = D_.cwiseProduct(x - x_prev);
        const double dx_norm = inf_norm(dx);
        if (dx_norm > kCertificateFloor) {
            const double tol = settings_.eps_dual_inf * dx_norm;
            if (inf_norm(P_ * dx) <= tol && q_.dot(dx) <= -tol &&
                distance_to_cone(cones_, -(A_ * dx)) <= tol) {
                report.status = SolveStatus::DualInfeasible;
                break;
            }
        }

        if (settings_.adaptive_rho_interval > 0 && iter % settings_.adaptive_rho_interval == 0) {
            const double prim_ratio =
                inf_norm(Ax_s + s - bs_) /
                std::max({inf_norm(Ax_s), inf_norm(s), inf_norm(bs_), kTiny});
            const double dual_ratio =
                inf_norm(Px_s + qs_ - ATy_s) /
                std::max({inf_norm(Px_s), inf_norm(ATy_s), inf_norm(qs_), kTiny});
            if (dual_ratio > kTiny) {
                const double proposed =
                    std::clamp(rho_ * std::sqrt(prim_ratio / dual_ratio), kRhoMin, kRhoMax);
                if (proposed > 5.0 * rho_ || proposed < 0.2 * rho_) {
                    rho_ = proposed;
                    rho_vec_ = row_rho(rho_);
                    kkt_->refactor(rho_vec_);
                    ++factorizations_;
                }
            }
        }
    }
    report.iterations = std::min(iter, settings_.max_iter);
    if (settings_.polish && report.status == SolveStatus::Solved) {
        report.polished = polish(x, s, y, report);
    }

    SolveResult result;
    result.x = D_.cwiseProduct(x);
    result.s = Einv.cwiseProduct(s);
    result.y = cinv * E_.cwiseProduct(y);
    report.objective = 0.5 * result.x.dot(P_ * result.x) + q_.dot(result.x) + constant_;
    report.factorizations = factorizations_ - start_factorizations;
    report.solve_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    result.report = std::move(report);
    return result;
}

SolveResult solve(const ConeProgram& program, const SolverSettings& settings,
                  const std::optional<WarmStart>& warm)
{
    ConicSolver solver(program, settings);
    return solver.solve(warm);
}

} // namespace hmpc
