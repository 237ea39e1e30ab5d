#pragma once

#include <string>
#include <vector>

#include <Eigen/Sparse>

#include "hmpc/model.hpp"

namespace hmpc {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Row partition of A: zero cone first, then nonnegative orthant, then SOC blocks.
struct ConeDims {
    int zero = 0;
    int nonneg = 0;
    std::vector<int> soc;

    int rows() const;
};

struct NamedRange {
    std::string name;
    int offset = 0;
    int size = 0;
};

/// Maps named decision quantities (x_0, u_0, ..., x_e, ...) to contiguous index ranges.
class VariableLayout {
public:
    int add(std::string name, int size);
    const NamedRange& find(const std::string& name) const;
    bool contains(const std::string& name) const;
    int total() const { return total_; }
    const std::vector<NamedRange>& ranges() const { return ranges_; }

    /// True iff every index in [0, total) belongs to exactly one range.
    bool covers_exactly_once() const;

private:
    std::vector<NamedRange> ranges_;
    int total_ = 0;
};

enum class ProgramKind { Mpct, Hmpc, ArtificialReference };

/**
 * min  1/2 v'Pv + q'v + constant
 * s.t. A v + s = b,  s in K = {0}^zero x R+^nonneg x SOC^3 x ... x SOC^3
 */
struct ConeProgram {
    SparseMatrix P;
    Vector q;
    double constant = 0.0;
    SparseMatrix A;
    Vector b;
    ConeDims cones;
    VariableLayout layout;

    ProgramKind kind = ProgramKind::Mpct;
    int horizon = 0;
    double w = 0.0;
    int n = 0;
    int m = 0;
    /// First row of the x_0 = x block, or -1 when absent.
    int initial_state_row = -1;

    int num_variables() const { return static_cast<int>(q.size()); }
    int num_rows() const { return static_cast<int>(b.size()); }
    double objective(const Vector& v) const;
    Vector segment(const Vector& v, const std::string& name) const;

    /// Throws DimensionError/InvalidParameter if the invariants do not hold.
    void validate() const;
};

/// Replaces the right-hand side of the x_0 = x rows.
void set_initial_state(ConeProgram& program, const Vector& x0);

/// Appends zero-cone rows fixing the named ranges to zero.
ConeProgram pin_to_zero(const ConeProgram& program, const std::vector<std::string>& names);

/**
 * Accumulates a sum of weighted squares sum_k ||L_k v - t_k||^2_{W_k} and
 * turns it into (P, q, constant) with the 1/2 v'Pv convention.
 */
class QuadraticCost {
public:
    explicit QuadraticCost(int num_variables) : num_variables_(num_variables) {}

    struct Term {
        int offset;
        double coefficient;
    };

    /// ||sum_i coefficient_i * v[offset_i : offset_i + dim] - target||^2_W.
    void add(const std::vector<Term>& terms, const Vector& target, const Matrix& weight);

    void build(SparseMatrix& P, Vector& q, double& constant) const;

private:
    int num_variables_;
    int rows_ = 0;
    std::vector<Eigen::Triplet<double>> residual_map_;
    std::vector<Eigen::Triplet<double>> weights_;
    std::vector<double> targets_;
};

/// Collects constraint rows per cone type and assembles (A, b, cones).
class ConstraintAssembler {
public:
    explicit ConstraintAssembler(int num_variables) : num_variables_(num_variables) {}

    enum class Cone { Zero, Nonneg, Soc };

    /// Reserves `count` rows of a cone and returns the local index of the first.
    int reserve(Cone cone, int count);
    void add(Cone cone, int row, int col, double value);
    /// Adds scale * M with its top-left corner at (row, col).
    void add_block(Cone cone, int row, int col, const Matrix& M, double scale = 1.0);
    void set_rhs(Cone cone, int row, double value);

    void build(SparseMatrix& A, Vector& b, ConeDims& cones) const;

private:
    struct Block {
        std::vector<Eigen::Triplet<double>> entries;
        std::vector<double> rhs;
    };
    Block& block(Cone cone);
    const Block& block(Cone cone) const;

    int num_variables_;
    Block zero_;
    Block nonneg_;
    Block soc_;
};

} // namespace hmpc
