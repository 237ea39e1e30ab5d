#pragma once

#include <complex>
#include <iosfwd>
#include <string>
#include <vector>

#include "hmpc/model.hpp"

namespace hmpc {

using ComplexMatrix = Eigen::MatrixXcd;

/// Distance from e^{jw} to an eigenvalue of A below which it counts as a pole.
inline constexpr double kPoleDistance = 1e-9;

/// Sampled transfer matrix C (zI - A)^{-1} B + D on the unit circle.
struct FrequencyResponse {
    std::vector<double> w;
    std::vector<ComplexMatrix> gain;
};

/// Transfer matrix at z = e^{jw}. Requires 0 < w <= pi; throws PoleOnGrid.
ComplexMatrix transfer_at(const LtiModel& model, double w);

/// |G(out_index, in_index)| at z = e^{jw}.
double gain_at(const LtiModel& model, double w, int out_index, int in_index);

/// Requires a strictly increasing grid inside (0, pi].
FrequencyResponse frequency_response(const LtiModel& model, const std::vector<double>& grid);

/// `count` logarithmically spaced points from lo to hi inclusive.
std::vector<double> log_grid(double lo, double hi, int count);

/// Output row that bounds input `in_index` alone (C row zero, D row a unit vector).
int input_bound_row(const LtiModel& model, int in_index);

struct SuggestedFrequency {
    enum class Status { Crossing, BelowAtGridStart, NoCrossing };
    double w = 0.0;
    Status status = Status::Crossing;
    /// |z_M(out)| / |z_M(input row)|.
    double ratio = 0.0;
    std::string note;
};

std::string to_string(SuggestedFrequency::Status status);

/**
 * Smallest w in (0, pi/2] at which the gain from input `in_index` to output
 * `out_index` falls through the bound ratio. A log grid over [1e-3, pi/2]
 * brackets the first crossing, which is refined by bisection to 1e-6.
 * Without a crossing, returns pi/2 (NoCrossing); if the gain is already
 * below the ratio at the first grid point, returns that point.
 */
SuggestedFrequency suggest_w(const LtiModel& model, const ConstraintSet& constraints, int out_index,
                             int in_index);

/// Columns w, gain for one channel.
void write_gain_csv(std::ostream& out, const FrequencyResponse& response, int out_index,
                    int in_index);

} // namespace hmpc
