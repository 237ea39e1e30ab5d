#include "hmpc/cone_program.hpp"

#include <algorithm>
#include <numeric>

#include "hmpc/errors.hpp"

namespace hmpc {

int ConeDims::rows() const
{
    return zero + nonneg + std::accumulate(soc.begin(), soc.end(), 0);
}

int VariableLayout::add(std::string name, int size)
{
    if (contains(name)) {
        throw InvalidParameter("duplicate layout entry " + name);
    }
    const int offset = total_;
    ranges_.push_back({std::move(name), offset, size});
    total_ += size;
    return offset;
}

const NamedRange& VariableLayout::find(const std::string& name) const
{
    for (const auto& r : ranges_) {
        if (r.name == name) {
            return r;
        }
    }
    throw InvalidParameter("no layout entry named " + name);
}

bool VariableLayout::contains(const std::string& name) const
{
    for (const auto& r : ranges_) {
        if (r.name == name) {
            return true;
        }
    }
    return false;
}

bool VariableLayout::covers_exactly_once() const
{
    std::vector<int> hits(static_cast<std::size_t>(total_), 0);
    for (const auto& r : ranges_) {
        if (r.offset < 0 || r.size < 0 || r.offset + r.size > total_) {
            return false;
        }
        for (int i = r.offset; i < r.offset + r.size; ++i) {
            ++hits[static_cast<std::size_t>(i)];
        }
    }
    return std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; });
}

double ConeProgram::objective(const Vector& v) const
{
    return 0.5 * v.dot(P * v) + q.dot(v) + constant;
}

Vector ConeProgram::segment(const Vector& v, const std::string& name) const
{
    const NamedRange& r = layout.find(name);
    return v.segment(r.offset, r.size);
}

void ConeProgram::validate() const
{
    const int nv = num_variables();
    if (P.rows() != nv || P.cols() != nv) {
        throw DimensionError("P must be square with one row per variable");
    }
    if (A.cols() != nv || A.rows() != b.size()) {
        throw DimensionError("A/b dimensions inconsistent");
    }
    if (cones.rows() != A.rows()) {
        throw DimensionError("cone dimensions do not cover the rows of A");
    }
    for (int s : cones.soc) {
        if (s != 3) {
            throw InvalidParameter("only 3-dimensional second-order cones are supported");
        }
    }
    if (layout.total() != nv || !layout.covers_exactly_once()) {
        throw InvalidParameter("variable layout must cover every index exactly once");
    }
    const SparseMatrix asym = SparseMatrix(P.transpose()) - P;
    if (asym.norm() > 1e-12 * std::max(1.0, P.norm())) {
        throw InvalidParameter("P must be symmetric");
    }
}

void set_initial_state(ConeProgram& program, const Vector& x0)
{
    if (program.initial_state_row < 0) {
        throw InvalidParameter("program has no initial-state rows");
    }
    if (x0.size() != program.n) {
        throw DimensionError("initial state has wrong size");
    }
    program.b.segment(program.initial_state_row, program.n) = x0;
}

ConeProgram pin_to_zero(const ConeProgram& program, const std::vector<std::string>& names)
{
    int extra = 0;
    for (const auto& name : names) {
        extra += program.layout.find(name).size;
    }
    std::vector<Eigen::Triplet<double>> entries;
    entries.reserve(static_cast<std::size_t>(program.A.nonZeros() + extra));
    for (int k = 0; k < program.A.outerSize(); ++k) {
        for (SparseMatrix::InnerIterator it(program.A, k); it; ++it) {
            const int row = static_cast<int>(it.row());
            const int shifted = row < program.cones.zero ? row : row + extra;
            entries.emplace_back(shifted, it.col(), it.value());
        }
    }
    int row = program.cones.zero;
    for (const auto& name : names) {
        const NamedRange& r = program.layout.find(name);
        for (int i = 0; i < r.size; ++i) {
            entries.emplace_back(row++, r.offset + i, 1.0);
        }
    }

    ConeProgram pinned = program;
    pinned.A.resize(program.num_rows() + extra, program.num_variables());
    pinned.A.setFromTriplets(entries.begin(), entries.end());
    pinned.b = Vector::Zero(program.num_rows() + extra);
    pinned.b.head(program.cones.zero) = program.b.head(program.cones.zero);
    pinned.b.tail(program.num_rows() - program.cones.zero) =
        program.b.tail(program.num_rows() - program.cones.zero);
    pinned.cones.zero += extra;
    return pinned;
}

void QuadraticCost::add(const std::vector<Term>& terms, const Vector& target, const Matrix& weight)
{
    const int dim = static_cast<int>(target.size());
    if (weight.rows() != dim || weight.cols() != dim) {
        throw DimensionError("QuadraticCost: weight/target size mismatch");
    }
    for (const Term& t : terms) {
        if (t.offset < 0 || t.offset + dim > num_variables_) {
            throw DimensionError("QuadraticCost: term outside the variable range");
        }
        if (t.coefficient == 0.0) {
            continue;
        }
        for (int i = 0; i < dim; ++i) {
            residual_map_.emplace_back(rows_ + i, t.offset + i, t.coefficient);
        }
    }
    for (int i = 0; i < dim; ++i) {
        for (int j = 0; j < dim; ++j) {
            if (weight(i, j) != 0.0) {
                weights_.emplace_back(rows_ + i, rows_ + j, weight(i, j));
            }
        }
        targets_.push_back(target(i));
    }
    rows_ += dim;
}

void QuadraticCost::build(SparseMatrix& P, Vector& q, double& constant) const
{
    SparseMatrix L(rows_, num_variables_);
    L.setFromTriplets(residual_map_.begin(), residual_map_.end());
    SparseMatrix W(rows_, rows_);
    W.setFromTriplets(weights_.begin(), weights_.end());
    const Vector t = Eigen::Map<const Vector>(targets_.data(), rows_);

    const SparseMatrix LtW = SparseMatrix(L.transpose()) * W;
    P = 2.0 * (LtW * L);
    P = 0.5 * (P + SparseMatrix(P.transpose()));
    P.prune(0.0);
    P.makeCompressed();
    q = -2.0 * (LtW * t);
    constant = t.dot(W * t);
}

ConstraintAssembler::Block& ConstraintAssembler::block(Cone cone)
{
    switch (cone) {
    case Cone::Zero:
        return zero_;
    case Cone::Nonneg:
        return nonneg_;
    case Cone::Soc:
        break;
    }
    return soc_;
}

const ConstraintAssembler::Block& ConstraintAssembler::block(Cone cone) const
{
    return const_cast<ConstraintAssembler*>(this)->block(cone);
}

int ConstraintAssembler::reserve(Cone cone, int count)
{
    Block& blk = block(cone);
    const int first = static_cast<int>(blk.rhs.size());
    blk.rhs.resize(blk.rhs.size() + static_cast<std::size_t>(count), 0.0);
    return first;
}

void ConstraintAssembler::add(Cone cone, int row, int col, double value)
{
    Block& blk = block(cone);
    if (row < 0 || row >= static_cast<int>(blk.rhs.size()) || col < 0 || col >= num_variables_) {
        throw DimensionError("ConstraintAssembler: entry outside reserved rows");
    }
    if (value != 0.0) {
        blk.entries.emplace_back(row, col, value);
    }
}

void ConstraintAssembler::add_block(Cone cone, int row, int col, const Matrix& M, double scale)
{
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
        for (Eigen::Index j = 0; j < M.cols(); ++j) {
            add(cone, row + static_cast<int>(i), col + static_cast<int>(j), scale * M(i, j));
        }
    }
}

void ConstraintAssembler::set_rhs(Cone cone, int row, double value)
{
    Block& blk = block(cone);
    if (row < 0 || row >= static_cast<int>(blk.rhs.size())) {
        throw DimensionError("ConstraintAssembler: rhs outside reserved rows");
    }
    blk.rhs[static_cast<std::size_t>(row)] = value;
}

void ConstraintAssembler::build(SparseMatrix& A, Vector& b, ConeDims& cones) const
{
    cones.zero = static_cast<int>(zero_.rhs.size());
    cones.nonneg = static_cast<int>(nonneg_.rhs.size());
    if (soc_.rhs.size() % 3 != 0) {
        throw DimensionError("SOC rows must come in blocks of three");
    }
    cones.soc.assign(soc_.rhs.size() / 3, 3);
    const int rows = cones.rows();

    std::vector<Eigen::Triplet<double>> entries;
    int base = 0;
    b.resize(rows);
    for (const Block* blk : {&zero_, &nonneg_, &soc_}) {
        for (const auto& e : blk->entries) {
            entries.emplace_back(base + e.row(), e.col(), e.value());
        }
        for (std::size_t i = 0; i < blk->rhs.size(); ++i) {
            b(base + static_cast<int>(i)) = blk->rhs[i];
        }
        base += static_cast<int>(blk->rhs.size());
    }
    A.resize(rows, num_variables_);
    A.setFromTriplets(entries.begin(), entries.end());
    A.makeCompressed();
}

} // namespace hmpc
