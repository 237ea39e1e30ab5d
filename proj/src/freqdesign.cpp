#include "hmpc/freqdesign.hpp"

#include <cmath>
#include <numbers>
#include <ostream>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "hmpc/errors.hpp"

namespace hmpc {

namespace {

constexpr double kGridStart = 1e-3;
constexpr int kGridPoints = 2000;
constexpr double kBisectionTolerance = 1e-6;
// Relative margin a gain must fall below the ratio by, so that a flat gain equal to the ratio never crosses.
constexpr double kRatioMargin = 1e-12;

void check_channel(const LtiModel& model, int out_index, int in_index)
{
    if (out_index < 0 || out_index >= model.nz() || in_index < 0 || in_index >= model.m()) {
        throw DimensionError("channel index out of range");
    }
}

} // namespace

ComplexMatrix transfer_at(const LtiModel& model, double w)
{
    if (!(w > 0.0) || w > std::numbers::pi) {
        throw InvalidParameter("frequency must lie in (0, pi]");
    }
    const Eigen::Index n = model.n();
    const std::complex<double> z = std::polar(1.0, w);
    const ComplexMatrix M = z * ComplexMatrix::Identity(n, n) - model.A().cast<std::complex<double>>();
    const Eigen::VectorXcd poles = model.A().eigenvalues();
    for (Eigen::Index i = 0; i < poles.size(); ++i) {
        if (std::abs(poles(i) - z) < kPoleDistance) {
            throw PoleOnGrid("e^{jw} is a pole of the model at w = " + std::to_string(w));
        }
    }
    const Eigen::PartialPivLU<ComplexMatrix> lu(M);
    ComplexMatrix G = model.C().cast<std::complex<double>>() * lu.solve(model.B().cast<std::complex<double>>()) +
                      model.D().cast<std::complex<double>>();
    if (!G.allFinite()) {
        throw PoleOnGrid("transfer matrix is not finite at w = " + std::to_string(w));
    }
    return G;
}

double gain_at(const LtiModel& model, double w, int out_index, int in_index)
{
    check_channel(model, out_index, in_index);
    return std::abs(transfer_at(model, w)(out_index, in_index));
}

FrequencyResponse frequency_response(const LtiModel& model, const std::vector<double>& grid)
{
    FrequencyResponse response;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (i > 0 && !(grid[i] > grid[i - 1])) {
            throw InvalidParameter("frequency grid must be strictly increasing");
        }
        response.w.push_back(grid[i]);
        response.gain.push_back(transfer_at(model, grid[i]));
    }
    return response;
}

std::vector<double> log_grid(double lo, double hi, int count)
{
    if (!(lo > 0.0) || !(hi > lo) || count < 2) {
        throw InvalidParameter("log_grid needs 0 < lo < hi and at least two points");
    }
    std::vector<double> grid(static_cast<std::size_t>(count));
    const double step = std::log(hi / lo) / (count - 1);
    for (int i = 0; i < count; ++i) {
        grid[static_cast<std::size_t>(i)] = lo * std::exp(step * i);
    }
    grid.back() = hi;
    return grid;
}

int input_bound_row(const LtiModel& model, int in_index)
{
    for (Eigen::Index i = 0; i < model.nz(); ++i) {
        if (model.C().row(i).cwiseAbs().maxCoeff() != 0.0) {
            continue;
        }
        Vector d = model.D().row(i).transpose();
        if (d(in_index) != 0.0 && (d.cwiseAbs().sum() == std::abs(d(in_index)))) {
            return static_cast<int>(i);
        }
    }
    throw InvalidParameter("no constrained output bounds input " + std::to_string(in_index));
}

std::string to_string(SuggestedFrequency::Status status)
{
    switch (status) {
    case SuggestedFrequency::Status::Crossing:
        return "crossing";
    case SuggestedFrequency::Status::BelowAtGridStart:
        return "below_at_grid_start";
    case SuggestedFrequency::Status::NoCrossing:
        return "no_crossing";
    }
    return "unknown";
}

SuggestedFrequency suggest_w(const LtiModel& model, const ConstraintSet& constraints, int out_index,
                             int in_index)
{
    check_channel(model, out_index, in_index);
    const int in_row = input_bound_row(model, in_index);
    const double in_scale = std::abs(model.D()(in_row, in_index));
    const double out_bound = std::abs(constraints.z_max()(out_index));
    const double in_bound = std::abs(constraints.z_max()(in_row)) / in_scale;
    if (!(out_bound > 0.0) || !(in_bound > 0.0)) {
        throw InvalidParameter("suggest_w needs nonzero bounds on both channel ends");
    }

    SuggestedFrequency result;
    result.ratio = out_bound / in_bound;
    const double threshold = result.ratio * (1.0 - kRatioMargin);
    const auto below = [&](double w) { return gain_at(model, w, out_index, in_index) < threshold; };

    const double w_max = std::numbers::pi / 2.0;
    const std::vector<double> grid = log_grid(kGridStart, w_max, kGridPoints);
    if (below(grid.front())) {
        result.w = grid.front();
        result.status = SuggestedFrequency::Status::BelowAtGridStart;
        result.note = "gain is below the bound ratio at the first grid frequency";
        return result;
    }
    for (std::size_t i = 1; i < grid.size(); ++i) {
        if (below(grid[i])) {
            double lo = grid[i - 1];
            double hi = grid[i];
            while (hi - lo > kBisectionTolerance) {
                const double mid = 0.5 * (lo + hi);
                (below(mid) ? hi : lo) = mid;
            }
            result.w = 0.5 * (lo + hi);
            result.status = SuggestedFrequency::Status::Crossing;
            return result;
        }
    }
    result.w = w_max;
    result.status = SuggestedFrequency::Status::NoCrossing;
    result.note = "gain never falls below the bound ratio on (0, pi/2]; returning pi/2";
    return result;
}

void write_gain_csv(std::ostream& out, const FrequencyResponse& response, int out_index,
                    int in_index)
{
    out << "w,gain\n";
    out.precision(12);
    for (std::size_t i = 0; i < response.w.size(); ++i) {
        const ComplexMatrix& G = response.gain[i];
        if (out_index < 0 || out_index >= G.rows() || in_index < 0 || in_index >= G.cols()) {
            throw DimensionError("channel index out of range");
        }
        out << response.w[i] << ',' << std::abs(G(out_index, in_index)) << '\n';
    }
}

} // namespace hmpc
