#include "hmpc/json_io.hpp"

#include <cctype>
#include <numbers>

#include "hmpc/errors.hpp"

namespace hmpc {

namespace {

const Json& require(const Json& j, const std::string& key, const std::string& context)
{
    if (!j.is_object() || !j.contains(key)) {
        throw ScenarioError(context + ": missing field '" + key + "'");
    }
    return j.at(key);
}

double number(const Json& j, const std::string& field)
{
    if (!j.is_number()) {
        throw ScenarioError(field + ": expected a number");
    }
    return j.get<double>();
}

int integer(const Json& j, const std::string& field)
{
    if (!j.is_number_integer()) {
        throw ScenarioError(field + ": expected an integer");
    }
    return j.get<int>();
}

Json triplets(const SparseMatrix& M, bool upper_only)
{
    Json out = Json::array();
    for (int k = 0; k < M.outerSize(); ++k) {
        for (SparseMatrix::InnerIterator it(M, k); it; ++it) {
            if (!upper_only || it.row() <= it.col()) {
                out.push_back({it.row(), it.col(), it.value()});
            }
        }
    }
    return out;
}

std::string kind_name(ProgramKind kind)
{
    switch (kind) {
    case ProgramKind::Mpct:
        return "mpct";
    case ProgramKind::Hmpc:
        return "hmpc";
    case ProgramKind::ArtificialReference:
        return "artificial_reference";
    }
    return "unknown";
}

} // namespace

Json to_json(const Matrix& M)
{
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index k = 0; k < M.cols(); ++k) {
            row.push_back(M(i, k));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

Json to_json(const Vector& v)
{
    Json out = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        out.push_back(v(i));
    }
    return out;
}

Matrix matrix_from_json(const Json& j, const std::string& field)
{
    if (!j.is_array() || j.empty()) {
        throw ScenarioError(field + ": expected a nonempty array of rows");
    }
    const std::size_t rows = j.size();
    if (!j[0].is_array()) {
        throw ScenarioError(field + ": expected rows to be arrays");
    }
    const std::size_t cols = j[0].size();
    Matrix M(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (std::size_t i = 0; i < rows; ++i) {
        if (!j[i].is_array() || j[i].size() != cols) {
            throw ScenarioError(field + ": row " + std::to_string(i) + " has the wrong length");
        }
        for (std::size_t k = 0; k < cols; ++k) {
            M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
                number(j[i][k], field + "[" + std::to_string(i) + "][" + std::to_string(k) + "]");
        }
    }
    return M;
}

Vector vector_from_json(const Json& j, const std::string& field)
{
    if (!j.is_array()) {
        throw ScenarioError(field + ": expected an array");
    }
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        v(static_cast<Eigen::Index>(i)) = number(j[i], field + "[" + std::to_string(i) + "]");
    }
    return v;
}

Json to_json(const LtiModel& model, const ConstraintSet& constraints)
{
    return Json{{"A", to_json(model.A())},
                {"B", to_json(model.B())},
                {"C", to_json(model.C())},
                {"D", to_json(model.D())},
                {"z_min", to_json(constraints.z_min())},
                {"z_max", to_json(constraints.z_max())},
                {"eps", to_json(constraints.eps())}};
}

ModelBundle model_from_json(const Json& j)
{
    const std::string ctx = "model";
    LtiModel model(matrix_from_json(require(j, "A", ctx), "A"), matrix_from_json(require(j, "B", ctx), "B"),
                   matrix_from_json(require(j, "C", ctx), "C"), matrix_from_json(require(j, "D", ctx), "D"));
    const Vector z_min = vector_from_json(require(j, "z_min", ctx), "z_min");
    const Vector z_max = vector_from_json(require(j, "z_max", ctx), "z_max");
    Vector eps = vector_from_json(require(j, "eps", ctx), "eps");
    if (eps.size() == 1 && z_min.size() > 1) {
        eps = Vector::Constant(z_min.size(), eps(0));
    }
    ConstraintSet constraints(z_min, z_max, eps);
    if (constraints.size() != model.nz()) {
        throw DimensionError("model: z_min/z_max size does not match the rows of C");
    }
    return {std::move(model), std::move(constraints)};
}

Json to_json(const HarmonicReference& h)
{
    return Json{{"x_e", to_json(h.x_e)}, {"x_s", to_json(h.x_s)}, {"x_c", to_json(h.x_c)},
                {"u_e", to_json(h.u_e)}, {"u_s", to_json(h.u_s)}, {"u_c", to_json(h.u_c)},
                {"w", h.w},              {"N", h.N}};
}

HarmonicReference harmonic_from_json(const Json& j)
{
    const std::string ctx = "harmonic";
    HarmonicReference h;
    h.x_e = vector_from_json(require(j, "x_e", ctx), "x_e");
    h.x_s = vector_from_json(require(j, "x_s", ctx), "x_s");
    h.x_c = vector_from_json(require(j, "x_c", ctx), "x_c");
    h.u_e = vector_from_json(require(j, "u_e", ctx), "u_e");
    h.u_s = vector_from_json(require(j, "u_s", ctx), "u_s");
    h.u_c = vector_from_json(require(j, "u_c", ctx), "u_c");
    h.w = number(require(j, "w", ctx), "w");
    h.N = integer(require(j, "N", ctx), "N");
    return h;
}

Json to_json(const ControllerParams& p)
{
    return Json{{"N", p.N},
                {"Q", to_json(p.Q)},
                {"R", to_json(p.R)},
                {"T_e", to_json(p.T_e)},
                {"S_e", to_json(p.S_e)},
                {"T_h", to_json(p.T_h)},
                {"S_h", to_json(p.S_h)},
                {"T_a", to_json(p.T_a)},
                {"S_a", to_json(p.S_a)},
                {"w", p.w}};
}

ControllerParams params_from_json(const Json& j, ControllerParams base)
{
    if (!j.is_object()) {
        throw ScenarioError("params: expected an object");
    }
    const auto weight = [&](const char* key, Matrix& target) {
        if (!j.contains(key)) {
            return;
        }
        const Json& value = j.at(key);
        // A flat array is read as the diagonal.
        if (value.is_array() && !value.empty() && value[0].is_number()) {
            target = vector_from_json(value, key).asDiagonal();
        } else {
            target = matrix_from_json(value, key);
        }
    };
    for (const auto& item : j.items()) {
        static const char* known[] = {"N", "Q", "R", "T_e", "S_e", "T_h", "S_h", "T_a", "S_a", "w"};
        bool ok = false;
        for (const char* k : known) {
            ok = ok || item.key() == k;
        }
        if (!ok) {
            throw ScenarioError("params: unknown field '" + item.key() + "'");
        }
    }
    if (j.contains("N")) {
        base.N = integer(j.at("N"), "params.N");
    }
    weight("Q", base.Q);
    weight("R", base.R);
    weight("T_e", base.T_e);
    weight("S_e", base.S_e);
    weight("T_h", base.T_h);
    weight("S_h", base.S_h);
    weight("T_a", base.T_a);
    weight("S_a", base.S_a);
    if (j.contains("w")) {
        base.w = angle_from_json(j.at("w"), "params.w");
    }
    return base;
}

Json to_json(const SolverSettings& s)
{
    return Json{{"eps_abs", s.eps_abs},
                {"eps_rel", s.eps_rel},
                {"eps_prim_inf", s.eps_prim_inf},
                {"eps_dual_inf", s.eps_dual_inf},
                {"max_iter", s.max_iter},
                {"rho", s.rho},
                {"sigma", s.sigma},
                {"alpha", s.alpha},
                {"adaptive_rho_interval", s.adaptive_rho_interval},
                {"scaling_iterations", s.scaling_iterations},
                {"polish", s.polish}};
}

SolverSettings settings_from_json(const Json& j, SolverSettings base)
{
    if (!j.is_object()) {
        throw ScenarioError("solver: expected an object");
    }
    for (const auto& item : j.items()) {
        const std::string& key = item.key();
        const std::string field = "solver." + key;
        if (key == "eps_abs") {
            base.eps_abs = number(item.value(), field);
        } else if (key == "eps_rel") {
            base.eps_rel = number(item.value(), field);
        } else if (key == "eps_prim_inf") {
            base.eps_prim_inf = number(item.value(), field);
        } else if (key == "eps_dual_inf") {
            base.eps_dual_inf = number(item.value(), field);
        } else if (key == "max_iter") {
            base.max_iter = integer(item.value(), field);
        } else if (key == "rho") {
            base.rho = number(item.value(), field);
        } else if (key == "sigma") {
            base.sigma = number(item.value(), field);
        } else if (key == "alpha") {
            base.alpha = number(item.value(), field);
        } else if (key == "adaptive_rho_interval") {
            base.adaptive_rho_interval = integer(item.value(), field);
        } else if (key == "scaling_iterations") {
            base.scaling_iterations = integer(item.value(), field);
        } else if (key == "polish") {
            if (!item.value().is_boolean()) {
                throw ScenarioError(field + ": expected a boolean");
            }
            base.polish = item.value().get<bool>();
        } else {
            throw ScenarioError("solver: unknown field '" + key + "'");
        }
    }
    base.validate();
    return base;
}

Json to_json(const ConeProgram& program)
{
    Json layout = Json::array();
    for (const NamedRange& r : program.layout.ranges()) {
        layout.push_back({{"name", r.name}, {"offset", r.offset}, {"size", r.size}});
    }
    return Json{{"kind", kind_name(program.kind)},
                {"horizon", program.horizon},
                {"w", program.w},
                {"num_variables", program.num_variables()},
                {"num_rows", program.num_rows()},
                {"cones", {{"zero", program.cones.zero}, {"nonneg", program.cones.nonneg}, {"soc", program.cones.soc}}},
                {"P_upper", triplets(program.P, true)},
                {"q", to_json(program.q)},
                {"constant", program.constant},
                {"A", triplets(program.A, false)},
                {"b", to_json(program.b)},
                {"layout", layout}};
}

Json parse_json_text(const std::string& text, const std::string& source)
{
    try {
        return Json::parse(text);
    } catch (const Json::parse_error& e) {
        const std::size_t offset = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
        std::size_t line = 1;
        std::size_t column = 1;
        for (std::size_t i = 0; i < offset; ++i) {
            if (text[i] == '\n') {
                ++line;
                column = 1;
            } else {
                ++column;
            }
        }
        const std::size_t line_start = text.rfind('\n', offset == 0 ? 0 : offset - 1);
        const std::size_t begin = line_start == std::string::npos || offset == 0 ? 0 : line_start + 1;
        const std::size_t end = text.find('\n', begin);
        const std::string excerpt = text.substr(begin, end == std::string::npos ? std::string::npos : end - begin);
        throw ScenarioError(source + ":" + std::to_string(line) + ":" + std::to_string(column) +
                            ": malformed JSON\n  " + excerpt);
    }
}

double parse_angle(const std::string& text)
{
    std::string s;
    for (char c : text) {
        if (!std::isspace(static_cast<unsigned char>(c))) {
            s += c;
        }
    }
    if (s.empty()) {
        throw ScenarioError("empty angle");
    }
    // product of factors separated by '*' with an optional trailing "/divisor"
    double divisor = 1.0;
    const auto slash = s.find('/');
    if (slash != std::string::npos) {
        divisor = parse_angle(s.substr(slash + 1));
        s = s.substr(0, slash);
    }
    double value = 1.0;
    std::size_t start = 0;
    while (start <= s.size()) {
        const auto star = s.find('*', start);
        std::string factor = s.substr(start, star == std::string::npos ? std::string::npos : star - start);
        if (factor.size() >= 2 && factor.compare(factor.size() - 2, 2, "pi") == 0) {
            value *= std::numbers::pi;
            factor.resize(factor.size() - 2);
            if (factor.empty()) {
                factor = "1";
            }
        }
        std::size_t used = 0;
        double f = 0.0;
        try {
            f = std::stod(factor, &used);
        } catch (const std::exception&) {
            throw ScenarioError("cannot parse angle '" + text + "'");
        }
        if (used != factor.size()) {
            throw ScenarioError("cannot parse angle '" + text + "'");
        }
        value *= f;
        if (star == std::string::npos) {
            break;
        }
        start = star + 1;
    }
    if (divisor == 0.0) {
        throw ScenarioError("division by zero in angle '" + text + "'");
    }
    return value / divisor;
}

double angle_from_json(const Json& j, const std::string& field)
{
    if (j.is_number()) {
        return j.get<double>();
    }
    if (j.is_string()) {
        try {
            return parse_angle(j.get<std::string>());
        } catch (const ScenarioError& e) {
            throw ScenarioError(field + ": " + e.what());
        }
    }
    throw ScenarioError(field + ": expected a number or an angle string");
}

} // namespace hmpc
