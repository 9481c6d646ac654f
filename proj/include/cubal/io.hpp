#pragma once

#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "cubal/binary_op.hpp"
#include "cubal/cubic_matrix.hpp"
#include "cubal/errors.hpp"
#include "cubal/expr.hpp"
#include "cubal/flows.hpp"
#include "cubal/group_table.hpp"
#include "cubal/mul_rule.hpp"
#include "cubal/verify.hpp"

namespace cubal {

inline constexpr const char* kRuleSchema = "cubal/rule/v1";
inline constexpr const char* kFlowSchema = "cubal/flow/v1";
inline constexpr const char* kMatrixSchema = "cubal/matrix/v1";
inline constexpr const char* kReportSchema = "cubal/report/v1";

namespace detail {

inline const nlohmann::json& field(const nlohmann::json& j, const char* name) {
    if (!j.is_object() || !j.contains(name))
        throw ValidationError(std::string("missing config field '") + name + "'");
    return j.at(name);
}

inline int int_field(const nlohmann::json& j, const char* name) {
    const nlohmann::json& v = field(j, name);
    if (!v.is_number_integer())
        throw ValidationError(std::string("field '") + name + "' must be an integer");
    return v.get<int>();
}

inline double num_field(const nlohmann::json& j, const char* name, double fallback) {
    if (!j.is_object() || !j.contains(name)) return fallback;
    const nlohmann::json& v = j.at(name);
    if (!v.is_number()) throw ValidationError(std::string("field '") + name + "' must be a number");
    return v.get<double>();
}

inline std::vector<int> int_table(const nlohmann::json& v, const char* name) {
    if (!v.is_array()) throw ValidationError(std::string("field '") + name + "' must be an array");
    std::vector<int> out;
    for (const nlohmann::json& row : v) {
        if (row.is_array()) {
            for (const nlohmann::json& x : row) {
                if (!x.is_number_integer())
                    throw ValidationError(std::string("field '") + name +
                                          "' must contain integers");
                out.push_back(x.get<int>());
            }
        } else if (row.is_number_integer()) {
            out.push_back(row.get<int>());
        } else {
            throw ValidationError(std::string("field '") + name + "' must contain integers");
        }
    }
    return out;
}

inline std::vector<Expr> expr_list(const nlohmann::json& v, const char* name,
                                   std::size_t expected) {
    if (!v.is_array() || v.size() != expected)
        throw ValidationError(std::string("field '") + name + "' must be an array of " +
                              std::to_string(expected) + " expressions");
    std::vector<Expr> out;
    out.reserve(expected);
    for (const nlohmann::json& x : v) {
        if (!x.is_string())
            throw ValidationError(std::string("field '") + name + "' must contain strings");
        out.push_back(Expr::parse(x.get<std::string>()));
    }
    return out;
}

inline nlohmann::json load_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config file: " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("malformed config " + path.string() + ": " + e.what());
    }
}

} // namespace detail

// ---------------------------------------------------------------------------
// matrices

inline nlohmann::json cubic_to_json(const CubicMatrix& a) {
    nlohmann::json values = nlohmann::json::array();
    for (double v : a.data()) values.push_back(v);
    return {{"schema", kMatrixSchema}, {"dim", a.dim()}, {"values", values}};
}

/// Parse a flat list of m^3 entries (or a full matrix document with a
/// "values" field) into a cubic matrix.
inline CubicMatrix cubic_from_json(const nlohmann::json& j, int m) {
    const nlohmann::json& values = j.is_object() ? detail::field(j, "values") : j;
    const std::size_t n = static_cast<std::size_t>(m) * m * m;
    if (!values.is_array() || values.size() != n)
        throw ValidationError("matrix needs exactly " + std::to_string(n) + " values");
    CubicMatrix a(m);
    for (std::size_t p = 0; p < n; ++p) {
        if (!values[p].is_number()) throw ValidationError("matrix values must be numbers");
        a.flat(static_cast<int>(p) + 1) = values[p].get<double>();
    }
    if (!a.is_finite()) throw ValidationError("matrix values must be finite");
    return a;
}

// ---------------------------------------------------------------------------
// rules

inline nlohmann::json rule_to_json(const MulRule& rule) {
    nlohmann::json j{{"schema", kRuleSchema}, {"dim", rule.dim()}};
    switch (rule.kind()) {
        case MulRule::Kind::A0: j["kind"] = "a0"; break;
        case MulRule::Kind::Maksimov: {
            j["kind"] = "maksimov";
            const BinaryOp& op = rule.maksimov_op();
            nlohmann::json table = nlohmann::json::array();
            for (int a = 1; a <= rule.dim(); ++a) {
                nlohmann::json row = nlohmann::json::array();
                for (int b = 1; b <= rule.dim(); ++b) row.push_back(op(a, b));
                table.push_back(row);
            }
            j["op_table"] = table;
            break;
        }
        case MulRule::Kind::Group: {
            j["kind"] = "group";
            const GroupTable& g = rule.group_table();
            nlohmann::json table = nlohmann::json::array();
            for (int a = 1; a <= g.order(); ++a) {
                nlohmann::json row = nlohmann::json::array();
                for (int b = 1; b <= g.order(); ++b) row.push_back(g.op(a, b));
                table.push_back(row);
            }
            j["group"] = table;
            break;
        }
        case MulRule::Kind::GeneralMu: {
            j["kind"] = "general_mu";
            nlohmann::json entries = nlohmann::json::array();
            for (const MuEntry& e : rule.general_entries())
                entries.push_back({e.lhs, e.rhs, e.out, e.coeff});
            j["entries"] = entries;
            break;
        }
    }
    return j;
}

inline MulRule rule_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ValidationError("rule document must be an object");
    if (j.contains("schema") && j.at("schema") != kRuleSchema)
        throw ValidationError("unsupported rule schema: " + j.at("schema").dump());
    const int m = detail::int_field(j, "dim");
    const std::string kind = detail::field(j, "kind").get<std::string>();
    if (kind == "a0") return MulRule::a0(m);
    if (kind == "maksimov")
        return MulRule::maksimov(BinaryOp(m, detail::int_table(detail::field(j, "op_table"),
                                                               "op_table")));
    if (kind == "group")
        return MulRule::group(m, GroupTable(m * m * m,
                                            detail::int_table(detail::field(j, "group"), "group")));
    if (kind == "general_mu") {
        const nlohmann::json& raw = detail::field(j, "entries");
        if (!raw.is_array()) throw ValidationError("field 'entries' must be an array");
        std::vector<MuEntry> entries;
        entries.reserve(raw.size());
        for (const nlohmann::json& e : raw) {
            if (!e.is_array() || e.size() != 4)
                throw ValidationError("each entry must be [lhs, rhs, out, coeff]");
            if (!e[0].is_number_integer() || !e[1].is_number_integer() ||
                !e[2].is_number_integer() || !e[3].is_number())
                throw ValidationError("entry indices must be integers and coeff a number");
            entries.push_back({e[0].get<int>(), e[1].get<int>(), e[2].get<int>(),
                               e[3].get<double>()});
        }
        return MulRule::general(m, std::move(entries));
    }
    throw ValidationError("unknown rule kind: '" + kind + "'");
}

/// Rule from an inline object or a file-reference string (resolved against
/// base_dir).
inline MulRule rule_from_ref(const nlohmann::json& j, const std::filesystem::path& base_dir) {
    if (j.is_string())
        return rule_from_json(detail::load_json_file(base_dir / j.get<std::string>()));
    return rule_from_json(j);
}

// ---------------------------------------------------------------------------
// flows

inline TimeGrid time_grid_from_json(const nlohmann::json& j) {
    TimeGrid grid;
    grid.start = detail::num_field(j, "start", 0.0);
    grid.end = detail::num_field(j, "end", 1.0);
    grid.step = detail::num_field(j, "step", 0.1);
    grid.times(); // validates
    return grid;
}

/// A flow plus the time grid it was configured with (used for constraint
/// sampling at construction and as the CLI's default evaluation grid).
struct LoadedFlow {
    FlowFamily flow;
    TimeGrid time_grid;
};

inline LoadedFlow flow_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);

namespace detail {

inline LoadedFlow flow_from_ref(const nlohmann::json& j, const std::filesystem::path& base_dir) {
    if (j.is_string()) {
        const std::filesystem::path path = base_dir / j.get<std::string>();
        return flow_from_json(load_json_file(path), path.parent_path());
    }
    return flow_from_json(j, base_dir);
}

inline ScalarFamily scalar_family_from_json(const nlohmann::json& j, int m,
                                            const TimeGrid& grid, bool wants_f, bool wants_gamma) {
    ScalarFamily fam;
    fam.dim = m;
    fam.sample_times = grid.times();
    const std::size_t mu = static_cast<std::size_t>(m);
    if (wants_f) {
        auto fs = std::make_shared<std::vector<Expr>>(expr_list(field(j, "f"), "f", mu));
        fam.f = [fs](int i, double t) { return (*fs)[static_cast<std::size_t>(i) - 1].eval(t); };
    }
    auto gs = std::make_shared<std::vector<Expr>>(expr_list(field(j, "g"), "g", mu));
    fam.g = [gs](int i, double t) { return (*gs)[static_cast<std::size_t>(i) - 1].eval(t); };
    if (wants_gamma) {
        auto gammas =
            std::make_shared<std::vector<Expr>>(expr_list(field(j, "gamma"), "gamma", mu * mu));
        fam.gamma = [gammas, m](int i, int jj, double t) {
            return (*gammas)[static_cast<std::size_t>(i - 1) * m + (jj - 1)].eval(t);
        };
    }
    return fam;
}

} // namespace detail

inline LoadedFlow flow_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
    if (!j.is_object()) throw ValidationError("flow document must be an object");
    if (j.contains("schema") && j.at("schema") != kFlowSchema)
        throw ValidationError("unsupported flow schema: " + j.at("schema").dump());
    const std::string family = detail::field(j, "family").get<std::string>();
    TimeGrid grid;
    if (j.contains("time_grid"))
        grid = time_grid_from_json(j.at("time_grid"));
    else if (family == "a1")
        grid = TimeGrid{0.0, 5.0, 1.0};
    else
        grid = TimeGrid{0.0, 2.0, 0.25};
    const double check_tol = detail::num_field(j, "check_tol", 1e-9);

    if (family == "a1" || family == "a2" || family == "a3") {
        const MulRule rule = rule_from_ref(detail::field(j, "rule"), base_dir);
        if (family == "a1")
            return {flow_power(rule, cubic_from_json(detail::field(j, "Q"), rule.dim())), grid};
        if (family == "a2")
            return {flow_idempotent(rule, cubic_from_json(detail::field(j, "X"), rule.dim())),
                    grid};
        return {flow_exp(rule, cubic_from_json(detail::field(j, "Q"), rule.dim()),
                         detail::num_field(j, "tol", 1e-12)),
                grid};
    }

    if (family == "a4") {
        const MulRule rule = rule_from_ref(detail::field(j, "rule"), base_dir);
        const nlohmann::json& raw = detail::field(j, "A");
        if (!raw.is_array() || raw.empty())
            throw ValidationError("field 'A' must be a non-empty array of [index, expr] pairs");
        const int n = rule.dim() * rule.dim() * rule.dim();
        auto entries = std::make_shared<std::vector<std::pair<int, Expr>>>();
        std::vector<bool> used(static_cast<std::size_t>(n), false);
        for (const nlohmann::json& e : raw) {
            if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() || !e[1].is_string())
                throw ValidationError("each A entry must be [flat index, expression]");
            const int p = e[0].get<int>();
            if (p < 1 || p > n)
                throw ValidationError("A entry index " + std::to_string(p) + " outside {1.." +
                                      std::to_string(n) + "}");
            if (used[static_cast<std::size_t>(p) - 1])
                throw ValidationError("duplicate A entry index " + std::to_string(p));
            used[static_cast<std::size_t>(p) - 1] = true;
            entries->emplace_back(p, Expr::parse(e[1].get<std::string>()));
        }
        const int m = rule.dim();
        auto family_fn = [entries, m](double t) {
            CubicMatrix a(m);
            for (const auto& [p, expr] : *entries) a.flat(p) = expr.eval(t);
            return a;
        };
        return {flow_invertible(rule, family_fn), grid};
    }

    if (family == "a5") {
        const MulRule rule = rule_from_ref(detail::field(j, "rule"), base_dir);
        if (!rule.is_maksimov_type())
            throw ValidationError("family a5 needs a maksimov or a0 rule");
        const ScalarFamily fam =
            detail::scalar_family_from_json(j, rule.dim(), grid, true, false);
        return {flow_fg(rule.maksimov_op(), fam, check_tol), grid};
    }

    if (family == "a6") {
        int m = 0;
        if (j.contains("rule")) {
            const MulRule rule = rule_from_ref(j.at("rule"), base_dir);
            if (rule.kind() != MulRule::Kind::A0)
                throw ValidationError("family a6 is defined over the a0 rule");
            m = rule.dim();
        } else {
            m = detail::int_field(j, "dim");
        }
        const ScalarFamily fam = detail::scalar_family_from_json(j, m, grid, false, true);
        return {flow_gamma(fam, check_tol), grid};
    }

    if (family == "transport") {
        const MulRule target = rule_from_ref(detail::field(j, "rule"), base_dir);
        if (!target.is_maksimov_type())
            throw ValidationError("transport target rule must be maksimov or a0");
        const LoadedFlow source = detail::flow_from_ref(detail::field(j, "source"), base_dir);
        const std::vector<int> pi = detail::int_table(detail::field(j, "pi"), "pi");
        return {transport(source.flow, pi, target.maksimov_op()), grid};
    }

    if (family == "product") {
        const MulRule rule = rule_from_ref(detail::field(j, "rule"), base_dir);
        const nlohmann::json& raw = detail::field(j, "factors");
        if (!raw.is_array() || raw.empty())
            throw ValidationError("field 'factors' must be a non-empty array of flow documents");
        std::vector<FlowFamily> factors;
        factors.reserve(raw.size());
        for (const nlohmann::json& f : raw)
            factors.push_back(detail::flow_from_ref(f, base_dir).flow);
        return {flow_product(rule, std::move(factors)), grid};
    }

    throw ValidationError("unknown flow family: '" + family + "'");
}

inline LoadedFlow load_flow(const std::filesystem::path& path) {
    return flow_from_json(detail::load_json_file(path), path.parent_path());
}

inline MulRule load_rule(const std::filesystem::path& path) {
    return rule_from_json(detail::load_json_file(path));
}

// ---------------------------------------------------------------------------
// reports

inline nlohmann::json algebra_report_to_json(const AlgebraReport& report, const MulRule& rule) {
    nlohmann::json j{{"schema", kReportSchema},
                     {"type", "algebra"},
                     {"rule", rule_to_json(rule)},
                     {"commutative", report.commutative},
                     {"associative", report.associative},
                     {"unital", report.unital},
                     {"norm_constant", report.norm_constant}};
    j["unit"] = report.unit ? cubic_to_json(*report.unit) : nlohmann::json(nullptr);
    nlohmann::json idem = nlohmann::json::array();
    for (const CubicMatrix& x : report.idempotents) idem.push_back(cubic_to_json(x));
    j["idempotents"] = idem;
    j["power_associative_sampled"] = {{"pass", report.power_assoc.pass},
                                      {"samples", report.power_assoc.samples}};
    if (report.power_assoc.witness) {
        j["power_associative_sampled"]["witness"] = {
            {"n", report.power_assoc.witness->n},
            {"m", report.power_assoc.witness->m},
            {"residual", report.power_assoc.witness->residual},
            {"x", cubic_to_json(report.power_assoc.witness->x)}};
    }
    if (rule.is_maksimov_type())
        j["uniformly_distributed"] = is_uniformly_distributed(rule.maksimov_op());
    return j;
}

inline nlohmann::json kce_report_to_json(const KceReport& report, const std::string& label) {
    nlohmann::json samples = nlohmann::json::array();
    for (const KceSample& s : report.samples)
        samples.push_back({{"s", s.s},
                           {"tau", s.tau},
                           {"t", s.t},
                           {"residual_l1", s.residual_l1},
                           {"residual_max", s.residual_max}});
    return {{"schema", kReportSchema}, {"type", "kce"},
            {"family", label},         {"tolerance", report.tolerance},
            {"pass", report.pass},     {"max_residual", report.max_residual},
            {"max_entry_residual", report.max_entry_residual},
            {"samples", samples}};
}

inline nlohmann::json pde_report_to_json(const PdeReport& report, const std::string& label) {
    nlohmann::json samples = nlohmann::json::array();
    for (const PdeSample& s : report.samples)
        samples.push_back({{"s", s.s},
                           {"tau", s.tau},
                           {"t", s.t},
                           {"forward_residual", s.forward_residual},
                           {"backward_residual", s.backward_residual}});
    return {{"schema", kReportSchema}, {"type", "pde"},
            {"family", label},         {"h", report.h},
            {"tolerance", report.tolerance}, {"pass", report.pass},
            {"max_forward", report.max_forward}, {"max_backward", report.max_backward},
            {"samples", samples}};
}

} // namespace cubal
