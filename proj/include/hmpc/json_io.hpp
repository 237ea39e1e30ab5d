#pragma once

#include <string>

#include <json.hpp>

#include "hmpc/cone_program.hpp"
#include "hmpc/controller_params.hpp"
#include "hmpc/harmonic.hpp"
#include "hmpc/solver.hpp"

namespace hmpc {

using Json = nlohmann::json;

/// Matrices are row-major nested arrays; vectors are flat arrays.
Json to_json(const Matrix& M);
Json to_json(const Vector& v);
Matrix matrix_from_json(const Json& j, const std::string& field);
Vector vector_from_json(const Json& j, const std::string& field);

struct ModelBundle {
    LtiModel model;
    ConstraintSet constraints;
};

/// Keys "A", "B", "C", "D", "z_min", "z_max", "eps".
Json to_json(const LtiModel& model, const ConstraintSet& constraints);
ModelBundle model_from_json(const Json& j);

/// Keys "x_e", "x_s", "x_c", "u_e", "u_s", "u_c", "w", "N".
Json to_json(const HarmonicReference& h);
HarmonicReference harmonic_from_json(const Json& j);

/// Every field is written; on reading, fields absent from `j` keep the value in `base`.
Json to_json(const ControllerParams& params);
ControllerParams params_from_json(const Json& j, ControllerParams base);

Json to_json(const SolverSettings& settings);
SolverSettings settings_from_json(const Json& j, SolverSettings base);

/// Debug dump: cost, cone sizes, layout, and (row, col, value) triplets of P (upper) and A.
Json to_json(const ConeProgram& program);

/**
 * Parses text, turning syntax errors into ScenarioError with the line and
 * column of the offending byte.
 */
Json parse_json_text(const std::string& text, const std::string& source);

/// Accepts a number or a string such as "pi/2", "2pi", "2*pi", "0.7*0.3254".
double angle_from_json(const Json& j, const std::string& field);
double parse_angle(const std::string& text);

} // namespace hmpc
