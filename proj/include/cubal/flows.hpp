#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "cubal/binary_op.hpp"
#include "cubal/cubic_matrix.hpp"
#include "cubal/errors.hpp"
#include "cubal/mul_rule.hpp"

namespace cubal {

/// Uniform time grid start, start+step, ..., up to end (inclusive within a
/// half-step slack).
struct TimeGrid {
    double start = 0.0;
    double end = 1.0;
    double step = 0.1;

    std::vector<double> times() const {
        if (!(step > 0.0)) throw ValidationError("time grid step must be positive");
        if (end < start) throw ValidationError("time grid end must be >= start");
        std::vector<double> ts;
        for (int k = 0;; ++k) {
            const double t = start + k * step;
            if (t > end + 0.5 * step) break;
            ts.push_back(t);
        }
        return ts;
    }
};

/// Time-dependent scalar data for the f/g and gamma families. Indices are
/// 1-based; sample_times is the grid on which construction-time constraints
/// are enforced.
struct ScalarFamily {
    int dim = 0;
    std::function<double(int, double)> f;
    std::function<double(int, double)> g;
    std::function<double(int, int, double)> gamma;
    std::vector<double> sample_times;
};

/// A two-parameter family of cubic matrices M^{[s,t]} over a fixed rule,
/// defined for 0 <= s < t (nonnegative integers when discrete). Evaluation
/// goes through operator(), which owns the domain checks.
struct FlowFamily {
    MulRule rule;
    std::function<CubicMatrix(double, double)> eval;
    bool homogeneous = false;
    bool discrete = false;
    std::string label;

    CubicMatrix operator()(double s, double t) const {
        if (!(s >= 0.0))
            throw DomainError("flow requires s >= 0, got s=" + std::to_string(s));
        if (!(t > s))
            throw DomainError("flow requires s < t, got s=" + std::to_string(s) +
                              ", t=" + std::to_string(t));
        if (discrete) {
            require_integer(s);
            require_integer(t);
        }
        return eval(s, t);
    }

    static void require_integer(double x) {
        if (std::abs(x - std::nearbyint(x)) > 1e-9)
            throw DomainError("discrete family takes integer times, got " + std::to_string(x));
    }
};

/// Discrete powers M^{[n,k]} = Q^{k-n}. Construction runs the sampled
/// power-associativity test and refuses on failure; a pass is recorded in
/// the label as sampled evidence, not proof.
inline FlowFamily flow_power(const MulRule& rule, const CubicMatrix& q, int samples = 100,
                             double tol = 1e-7, std::uint64_t seed = 20260816) {
    if (q.dim() != rule.dim()) throw DimensionError("Q dimension does not match rule");
    const PowerAssocVerdict verdict = check_power_associativity(rule, samples, tol, seed);
    if (!verdict.pass) {
        std::ostringstream os;
        os << "sampled power-associativity failed for " << rule.describe() << ": x^"
           << verdict.witness->n << " * x^" << verdict.witness->m << " != x^"
           << (verdict.witness->n + verdict.witness->m) << " (residual "
           << verdict.witness->residual << ")";
        throw PreconditionError(os.str());
    }
    return {rule,
            [rule, q](double s, double t) {
                return rule.power(q, static_cast<int>(std::llround(t - s)));
            },
            true, true, "A1 (power-assoc sampled)"};
}

/// Constant flow M^{[s,t]} = X for an idempotent X.
inline FlowFamily flow_idempotent(const MulRule& rule, const CubicMatrix& x, double tol = 1e-9) {
    if (x.dim() != rule.dim()) throw DimensionError("X dimension does not match rule");
    const double res = norm_l1(rule.multiply(x, x) - x);
    if (!(res <= tol))
        throw PreconditionError("X is not idempotent: ||X*X - X||_1 = " + std::to_string(res));
    return {rule, [x](double, double) { return x; }, true, false, "A2"};
}

/// exp(tQ) as a truncated series I + sum_{n>=1} (tQ)^n / n!. The truncation
/// order N is the first with ||tQ||^{N+1}/(N+1)! * e^{||tQ||} <= tol, so the
/// discarded tail is below tol in the scaled norm. Requires a unital,
/// associative rule.
inline CubicMatrix exp_mu(const MulRule& rule, const CubicMatrix& q, double t, double tol = 1e-12) {
    if (q.dim() != rule.dim()) throw DimensionError("Q dimension does not match rule");
    const RuleTraits& tr = rule.traits();
    if (!tr.unital)
        throw PreconditionError("exp requires a unital rule; " + rule.describe() + " has no unit");
    if (!tr.associative)
        throw PreconditionError("exp requires an associative rule; " + rule.describe() +
                                " is not associative");
    if (!(tol > 0.0)) throw ValidationError("exp tolerance must be positive");
    const CubicMatrix tq = t * q;
    const double x = mu_norm(rule, tq);
    if (x == 0.0) return *tr.unit;
    int order = 0;
    while (order < 10000) {
        // log of x^{N+1}/(N+1)! e^x, evaluated stably
        const double log_tail = (order + 1) * std::log(x) - std::lgamma(order + 2.0) + x;
        if (log_tail <= std::log(tol)) break;
        ++order;
    }
    if (order >= 10000) throw Error("exp series did not reach the tail bound");
    CubicMatrix sum = *tr.unit;
    CubicMatrix term = *tr.unit;
    for (int n = 1; n <= order; ++n) {
        term = rule.multiply(term, tq);
        term *= 1.0 / n;
        sum += term;
    }
    return sum;
}

/// Homogeneous flow M^{[s,t]} = exp((t-s) Q).
inline FlowFamily flow_exp(const MulRule& rule, const CubicMatrix& q, double tol = 1e-12) {
    exp_mu(rule, q, 0.0, tol); // run the precondition checks once, eagerly
    return {rule,
            [rule, q, tol](double s, double t) { return exp_mu(rule, q, t - s, tol); },
            true, false, "A3"};
}

/// Flow M^{[s,t]} = A(s) * A(t)^{-1} for a family of invertible elements.
/// Inverses are computed lazily and cached per exact time value; a singular
/// A(t) surfaces as NotInvertibleError carrying t.
inline FlowFamily flow_invertible(const MulRule& rule,
                                  std::function<CubicMatrix(double)> family) {
    const RuleTraits& tr = rule.traits();
    if (!tr.unital || !tr.associative)
        throw PreconditionError("invertible-family flow requires a unital associative rule; got " +
                                rule.describe());
    struct Cache {
        std::mutex mu;
        std::map<double, CubicMatrix> inv;
    };
    auto cache = std::make_shared<Cache>();
    auto eval = [rule, family = std::move(family), cache](double s, double t) {
        const CubicMatrix at_s = family(s);
        std::optional<CubicMatrix> inv_t;
        {
            std::scoped_lock lock(cache->mu);
            auto it = cache->inv.find(t);
            if (it != cache->inv.end()) inv_t = it->second;
        }
        if (!inv_t) {
            try {
                inv_t = inverse(rule, family(t));
            } catch (const NotInvertibleError& e) {
                throw NotInvertibleError(std::string(e.what()) + " at t=" + std::to_string(t), t);
            }
            std::scoped_lock lock(cache->mu);
            cache->inv.emplace(t, *inv_t);
        }
        return rule.multiply(at_s, *inv_t);
    };
    return {rule, std::move(eval), false, false, "A4"};
}

/// Flow M^{[s,t]}_{ijk} = f_i(s) g_k(t) over the Maksimov rule of a
/// uniformly distributed op. The normalization sum_k f_k(u) g_k(u) = 1/m is
/// enforced at construction on fam.sample_times.
inline FlowFamily flow_fg(const BinaryOp& op, const ScalarFamily& fam, double check_tol = 1e-9) {
    const int m = op.dim();
    if (fam.dim != m) throw DimensionError("scalar family dimension does not match op");
    if (!fam.f || !fam.g) throw ValidationError("f/g evaluators are required");
    if (!is_uniformly_distributed(op))
        throw PreconditionError("op is not uniformly distributed: some value is not hit by "
                                "exactly m pairs");
    for (double u : fam.sample_times) {
        double sum = 0.0;
        for (int k = 1; k <= m; ++k) sum += fam.f(k, u) * fam.g(k, u);
        const double res = std::abs(sum - 1.0 / m);
        if (!(res <= check_tol)) {
            std::ostringstream os;
            os << "sum_k f_k(t) g_k(t) = 1/m fails at t=" << u << ": residual " << res;
            throw ConstraintViolation(os.str(), "sum_k f_k(t) g_k(t) = 1/m", u, res);
        }
    }
    const MulRule rule = MulRule::maksimov(op);
    auto eval = [m, f = fam.f, g = fam.g](double s, double t) {
        CubicMatrix out(m);
        for (int i = 1; i <= m; ++i) {
            const double fi = f(i, s);
            for (int k = 1; k <= m; ++k) {
                const double v = fi * g(k, t);
                for (int j = 1; j <= m; ++j) out(i, j, k) = v;
            }
        }
        return out;
    };
    return {rule, std::move(eval), false, false, "A5"};
}

/// Flow M^{[s,t]}_{ijr} = gamma_{ij}(s) / g_r(t) over the A0 rule, with
/// m * sum_j gamma_{ij}(u) = g_i(u) enforced at construction on
/// fam.sample_times and g != 0 re-checked at every evaluation.
inline FlowFamily flow_gamma(const ScalarFamily& fam, double check_tol = 1e-9) {
    const int m = fam.dim;
    if (m < 1) throw DimensionError("scalar family dimension must be >= 1");
    if (!fam.g || !fam.gamma) throw ValidationError("gamma/g evaluators are required");
    for (double u : fam.sample_times) {
        for (int i = 1; i <= m; ++i) {
            const double gi = fam.g(i, u);
            if (std::abs(gi) <= 1e-12) {
                std::ostringstream os;
                os << "g_" << i << "(t) vanishes at t=" << u;
                throw ConstraintViolation(os.str(), "g_i(t) != 0", u, std::abs(gi));
            }
            double sum = 0.0;
            for (int j = 1; j <= m; ++j) sum += fam.gamma(i, j, u);
            const double res = std::abs(m * sum - gi);
            if (!(res <= check_tol)) {
                std::ostringstream os;
                os << "m * sum_j gamma_ij(t) = g_i(t) fails for i=" << i << " at t=" << u
                   << ": residual " << res;
                throw ConstraintViolation(os.str(), "m * sum_j gamma_ij(t) = g_i(t)", u, res);
            }
        }
    }
    const MulRule rule = MulRule::a0(m);
    auto eval = [m, gamma = fam.gamma, g = fam.g](double s, double t) {
        CubicMatrix out(m);
        for (int r = 1; r <= m; ++r) {
            const double gr = g(r, t);
            if (std::abs(gr) <= 1e-12)
                throw ConstraintViolation("g_" + std::to_string(r) +
                                              "(t) vanishes at t=" + std::to_string(t),
                                          "g_i(t) != 0", t, std::abs(gr));
            for (int i = 1; i <= m; ++i)
                for (int j = 1; j <= m; ++j) out(i, j, r) = gamma(i, j, s) / gr;
        }
        return out;
    };
    return {rule, std::move(eval), false, false, "A6"};
}

/// Relabel a flow over the Maksimov rule of b into one over the Maksimov
/// rule of a, where pi is a permutation of {1..m} with
/// pi(a(j,n)) = b(pi(j), pi(n)) for all j,n. The transported matrices are
/// Mt_{ijr} = M_{pi(i) pi(j) pi(r)}.
inline FlowFamily transport(const FlowFamily& source, const std::vector<int>& pi,
                            const BinaryOp& a) {
    if (!source.rule.is_maksimov_type())
        throw PreconditionError("transport needs a source over a Maksimov-type rule; got " +
                                source.rule.describe());
    const BinaryOp& b = source.rule.maksimov_op();
    const int m = b.dim();
    if (a.dim() != m) throw DimensionError("target op dimension does not match source");
    if (static_cast<int>(pi.size()) != m)
        throw ValidationError("permutation must have length m=" + std::to_string(m));
    std::vector<bool> seen(static_cast<std::size_t>(m), false);
    for (int v : pi) {
        if (v < 1 || v > m || seen[static_cast<std::size_t>(v) - 1])
            throw ValidationError("pi is not a permutation of {1.." + std::to_string(m) + "}");
        seen[static_cast<std::size_t>(v) - 1] = true;
    }
    for (int j = 1; j <= m; ++j)
        for (int n = 1; n <= m; ++n) {
            const int lhs = pi[static_cast<std::size_t>(a(j, n)) - 1];
            const int rhs = b(pi[static_cast<std::size_t>(j) - 1],
                              pi[static_cast<std::size_t>(n) - 1]);
            if (lhs != rhs) {
                std::ostringstream os;
                os << "pi does not intertwine the ops: pi(a(" << j << "," << n << ")) = " << lhs
                   << " but b(pi(" << j << "),pi(" << n << ")) = " << rhs;
                throw ValidationError(os.str());
            }
        }
    auto eval = [m, pi, src = source.eval](double s, double t) {
        const CubicMatrix in = src(s, t);
        CubicMatrix out(m);
        for (int i = 1; i <= m; ++i)
            for (int j = 1; j <= m; ++j)
                for (int r = 1; r <= m; ++r)
                    out(i, j, r) = in(pi[static_cast<std::size_t>(i) - 1],
                                      pi[static_cast<std::size_t>(j) - 1],
                                      pi[static_cast<std::size_t>(r) - 1]);
        return out;
    };
    return {MulRule::maksimov(a), std::move(eval), source.homogeneous, source.discrete,
            "transport"};
}

/// Pointwise product of flows over one commutative associative rule,
/// folded left to right.
inline FlowFamily flow_product(const MulRule& rule, std::vector<FlowFamily> factors) {
    if (factors.empty()) throw ValidationError("product needs at least one factor");
    for (const FlowFamily& f : factors)
        if (!(f.rule == rule))
            throw ValidationError("product factors must all share the rule " + rule.describe());
    const RuleTraits& tr = rule.traits();
    if (!tr.commutative || !tr.associative)
        throw PreconditionError("product flow requires a commutative associative rule; got " +
                                rule.describe());
    bool homogeneous = true, discrete = false;
    for (const FlowFamily& f : factors) {
        homogeneous = homogeneous && f.homogeneous;
        discrete = discrete || f.discrete;
    }
    auto eval = [rule, factors = std::move(factors)](double s, double t) {
        CubicMatrix acc = factors.front().eval(s, t);
        for (std::size_t i = 1; i < factors.size(); ++i)
            acc = rule.multiply(acc, factors[i].eval(s, t));
        return acc;
    };
    return {rule, std::move(eval), homogeneous, discrete, "product"};
}

} // namespace cubal
