#pragma once

#include <string>
#include <vector>

#include "hmpc/model.hpp"

namespace hmpc {

enum class ControllerKind { Mpct, Hmpc };

std::string to_string(ControllerKind kind);
ControllerKind controller_kind_from_string(const std::string& name);

/**
 * Horizon, weights and base frequency shared by both controllers.
 * Q, R weight the stage cost; (T_a, S_a) the MPCT offset cost;
 * (T_e, S_e, T_h, S_h) the harmonic offset cost.
 */
struct ControllerParams {
    int N = 5;
    Matrix Q;
    Matrix R;
    Matrix T_e;
    Matrix S_e;
    Matrix T_h;
    Matrix S_h;
    Matrix T_a;
    Matrix S_a;
    double w = 0.3254;

    /**
     * Throws InvalidParameter/DimensionError unless every weight is positive
     * definite with the model's dimensions and T_h, S_h are diagonal.
     * Returns non-fatal warnings (horizon below the controllability index).
     */
    std::vector<std::string> validate(const LtiModel& model) const;

    /// Ball-and-plate tuning used for the benchmark runs.
    static ControllerParams ball_plate(int horizon);
};

} // namespace hmpc
