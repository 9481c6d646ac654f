#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "cubal/binary_op.hpp"
#include "cubal/cubic_matrix.hpp"
#include "cubal/errors.hpp"
#include "cubal/group_table.hpp"

namespace cubal {

/// One coefficient of a structure tensor: the product of basis elements
/// lhs * rhs contains coeff * (basis element out). All three indices are
/// 1-based flat positions in {1..m^3}.
struct MuEntry {
    int lhs = 1;
    int rhs = 1;
    int out = 1;
    double coeff = 0.0;

    friend bool operator<(const MuEntry& a, const MuEntry& b) {
        return std::tie(a.lhs, a.rhs, a.out) < std::tie(b.lhs, b.rhs, b.out);
    }
};

struct TraitsOptions {
    double tol = 1e-9;
    /// Exhaustive property checks loop over all basis pairs/triples of the
    /// flattened index set; they are refused above this dimension.
    int exhaustive_dim_guard = 4;
};

/// Structural verdicts for a rule, computed exhaustively over the induced
/// structure constants.
struct RuleTraits {
    bool commutative = false;
    bool associative = false;
    bool unital = false;
    std::optional<CubicMatrix> unit;
    double norm_constant = 1.0;
};

/// A multiplication between cubic matrices. The four kinds:
///   - Maksimov: basis product E_{ijk} * E_{lnr} = [k==l] E_{i a(j,n) r}
///     for an associative binary operation a on {1..m};
///   - A0: the Maksimov rule with a(j,n) = j, with a dedicated fast path
///     c_{ijr} = sum_{k,n} A_{ijk} B_{knr};
///   - Group: E_p * E_q = E_{alpha(p,q)} for a group alpha on {1..m^3};
///   - GeneralMu: arbitrary sparse structure tensor, extended bilinearly.
class MulRule {
  public:
    enum class Kind { GeneralMu, Maksimov, A0, Group };

    static MulRule maksimov(BinaryOp op) {
        MulRule r(op.dim(), Kind::Maksimov);
        r.op_ = std::move(op);
        r.build_preimages();
        return r;
    }

    static MulRule a0(int m) {
        if (m < 1) throw DimensionError("dimension must be >= 1");
        return MulRule(m, Kind::A0);
    }

    static MulRule group(int m, GroupTable table) {
        if (m < 1) throw DimensionError("dimension must be >= 1");
        if (table.order() != m * m * m)
            throw ValidationError("group order " + std::to_string(table.order()) +
                                  " does not equal m^3 = " + std::to_string(m * m * m));
        MulRule r(m, Kind::Group);
        r.group_ = std::move(table);
        return r;
    }

    static MulRule general(int m, std::vector<MuEntry> entries) {
        if (m < 1) throw DimensionError("dimension must be >= 1");
        const int n = m * m * m;
        for (const MuEntry& e : entries) {
            if (e.lhs < 1 || e.lhs > n || e.rhs < 1 || e.rhs > n || e.out < 1 || e.out > n)
                throw ValidationError("structure tensor index outside {1.." + std::to_string(n) +
                                      "}");
            if (!std::isfinite(e.coeff))
                throw ValidationError("structure tensor coefficient must be finite");
        }
        std::sort(entries.begin(), entries.end());
        for (std::size_t idx = 1; idx < entries.size(); ++idx) {
            const MuEntry& a = entries[idx - 1];
            const MuEntry& b = entries[idx];
            if (a.lhs == b.lhs && a.rhs == b.rhs && a.out == b.out) {
                std::ostringstream os;
                os << "duplicate structure tensor key (" << a.lhs << "," << a.rhs << "," << a.out
                   << ")";
                throw ValidationError(os.str());
            }
        }
        MulRule r(m, Kind::GeneralMu);
        r.entries_ = std::move(entries);
        return r;
    }

    int dim() const { return dim_; }
    Kind kind() const { return kind_; }

    /// The binary operation behind a Maksimov or A0 rule.
    const BinaryOp& maksimov_op() const {
        if (kind_ == Kind::Maksimov) return *op_;
        if (kind_ == Kind::A0) {
            if (!op_) op_ = BinaryOp::left_projection(dim_);
            return *op_;
        }
        throw PreconditionError("rule " + describe() + " is not a Maksimov-type rule");
    }

    bool is_maksimov_type() const { return kind_ == Kind::Maksimov || kind_ == Kind::A0; }

    const GroupTable& group_table() const {
        if (kind_ != Kind::Group) throw PreconditionError("rule is not a group rule");
        return *group_;
    }

    const std::vector<MuEntry>& general_entries() const {
        if (kind_ != Kind::GeneralMu) throw PreconditionError("rule is not a general rule");
        return entries_;
    }

    std::string describe() const {
        std::ostringstream os;
        switch (kind_) {
            case Kind::Maksimov: os << "maksimov(m=" << dim_ << ")"; break;
            case Kind::A0: os << "a0(m=" << dim_ << ")"; break;
            case Kind::Group: os << "group(m=" << dim_ << ")"; break;
            case Kind::GeneralMu:
                os << "general_mu(m=" << dim_ << ", nnz=" << entries_.size() << ")";
                break;
        }
        return os.str();
    }

    CubicMatrix multiply(const CubicMatrix& a, const CubicMatrix& b) const {
        if (a.dim() != dim_ || b.dim() != dim_)
            throw DimensionError("operand dimensions " + std::to_string(a.dim()) + "," +
                                 std::to_string(b.dim()) + " do not match rule dimension " +
                                 std::to_string(dim_));
        switch (kind_) {
            case Kind::Maksimov: return multiply_maksimov(a, b);
            case Kind::A0: return multiply_a0(a, b);
            case Kind::Group: return multiply_group(a, b);
            case Kind::GeneralMu: return multiply_general(a, b);
        }
        throw Error("unreachable");
    }

    /// n-fold product of q with itself, left-nested. n = 0 requires a unital
    /// rule and returns the unit. When the rule's associativity verdict is
    /// available and positive, repeated squaring is used instead of the
    /// left fold.
    CubicMatrix power(const CubicMatrix& q, int n) const {
        if (n < 0) throw DimensionError("power exponent must be >= 0");
        if (n == 0) {
            const RuleTraits& tr = traits();
            if (!tr.unital)
                throw PreconditionError("power 0 requires a unital rule; " + describe() +
                                        " has no unit");
            return *tr.unit;
        }
        if (n <= 2) {
            CubicMatrix acc = q;
            for (int i = 1; i < n; ++i) acc = multiply(acc, q);
            return acc;
        }
        bool assoc = false;
        if (dim_ <= TraitsOptions{}.exhaustive_dim_guard) assoc = traits().associative;
        if (!assoc) {
            CubicMatrix acc = q;
            for (int i = 1; i < n; ++i) acc = multiply(acc, q);
            return acc;
        }
        std::optional<CubicMatrix> acc;
        CubicMatrix base = q;
        int e = n;
        while (e > 0) {
            if (e & 1) acc = acc ? multiply(*acc, base) : base;
            e >>= 1;
            if (e > 0) base = multiply(base, base);
        }
        return *acc;
    }

    /// The product of two basis elements as a sparse list of
    /// (flat index, coefficient) pairs. p and q are 1-based flat indices.
    std::vector<std::pair<int, double>> basis_product(int p, int q) const {
        const int n = dim_ * dim_ * dim_;
        if (p < 1 || p > n || q < 1 || q > n)
            throw DimensionError("basis index out of range");
        switch (kind_) {
            case Kind::Maksimov:
            case Kind::A0: {
                const FlatIndex fp = FlatIndex::from_value(dim_, p);
                const FlatIndex fq = FlatIndex::from_value(dim_, q);
                if (fp.k != fq.i) return {};
                const int mid = kind_ == Kind::A0 ? fp.j : (*op_)(fp.j, fq.j);
                return {{FlatIndex::from_triple(dim_, fp.i, mid, fq.k).value, 1.0}};
            }
            case Kind::Group: return {{group_->op(p, q), 1.0}};
            case Kind::GeneralMu: {
                auto lo = std::lower_bound(entries_.begin(), entries_.end(),
                                           MuEntry{p, q, 0, 0.0});
                std::vector<std::pair<int, double>> out;
                for (auto it = lo; it != entries_.end() && it->lhs == p && it->rhs == q; ++it)
                    out.emplace_back(it->out, it->coeff);
                return out;
            }
        }
        throw Error("unreachable");
    }

    /// Materialize the full structure tensor as a sorted sparse list.
    std::vector<MuEntry> structure_constants() const {
        std::vector<MuEntry> out;
        const int m = dim_;
        switch (kind_) {
            case Kind::Maksimov:
            case Kind::A0:
                out.reserve(static_cast<std::size_t>(m) * m * m * m * m);
                for (int i = 1; i <= m; ++i)
                    for (int j = 1; j <= m; ++j)
                        for (int k = 1; k <= m; ++k) {
                            const int p = FlatIndex::from_triple(m, i, j, k).value;
                            for (int n = 1; n <= m; ++n)
                                for (int r = 1; r <= m; ++r) {
                                    const int q = FlatIndex::from_triple(m, k, n, r).value;
                                    const int mid = kind_ == Kind::A0 ? j : (*op_)(j, n);
                                    out.push_back(
                                        {p, q, FlatIndex::from_triple(m, i, mid, r).value, 1.0});
                                }
                        }
                break;
            case Kind::Group: {
                const int n = m * m * m;
                out.reserve(static_cast<std::size_t>(n) * n);
                for (int p = 1; p <= n; ++p)
                    for (int q = 1; q <= n; ++q) out.push_back({p, q, group_->op(p, q), 1.0});
                break;
            }
            case Kind::GeneralMu: return entries_;
        }
        std::sort(out.begin(), out.end());
        return out;
    }

    /// Rules are equal when they induce the same structure constants, so a
    /// GeneralMu encoding compares equal to the rule it was derived from.
    friend bool operator==(const MulRule& a, const MulRule& b) {
        if (a.dim_ != b.dim_) return false;
        if (a.kind_ == b.kind_) {
            switch (a.kind_) {
                case Kind::A0: return true;
                case Kind::Maksimov: return *a.op_ == *b.op_;
                case Kind::Group: return *a.group_ == *b.group_;
                case Kind::GeneralMu: break;
            }
        }
        const std::vector<MuEntry> ca = a.structure_constants();
        const std::vector<MuEntry> cb = b.structure_constants();
        if (ca.size() != cb.size()) return false;
        for (std::size_t i = 0; i < ca.size(); ++i) {
            if (ca[i].lhs != cb[i].lhs || ca[i].rhs != cb[i].rhs || ca[i].out != cb[i].out ||
                ca[i].coeff != cb[i].coeff)
                return false;
        }
        return true;
    }

    /// Exhaustive structural verdicts, computed once per rule and cached.
    /// Throws DimensionError when dim exceeds opts.exhaustive_dim_guard.
    const RuleTraits& traits(const TraitsOptions& opts = {}) const {
        std::scoped_lock lock(cache_->mu);
        if (!cache_->value) cache_->value = compute_traits(opts);
        return *cache_->value;
    }

  private:
    explicit MulRule(int m, Kind kind)
        : dim_(m), kind_(kind), cache_(std::make_shared<TraitsCache>()) {}

    CubicMatrix multiply_maksimov(const CubicMatrix& a, const CubicMatrix& b) const {
        const int m = dim_;
        CubicMatrix c(m);
        // s[l][n][r] = sum_k a(i,l,k) b(k,n,r), recomputed per i
        std::vector<double> s(static_cast<std::size_t>(m) * m * m);
        for (int i = 1; i <= m; ++i) {
            std::fill(s.begin(), s.end(), 0.0);
            for (int l = 1; l <= m; ++l)
                for (int k = 1; k <= m; ++k) {
                    const double av = a(i, l, k);
                    if (av == 0.0) continue;
                    for (int n = 1; n <= m; ++n)
                        for (int r = 1; r <= m; ++r)
                            s[idx3(l, n, r)] += av * b(k, n, r);
                }
            for (int j = 1; j <= m; ++j)
                for (const auto& [l, n] : preimages_[static_cast<std::size_t>(j) - 1])
                    for (int r = 1; r <= m; ++r) c(i, j, r) += s[idx3(l, n, r)];
        }
        return c;
    }

    CubicMatrix multiply_a0(const CubicMatrix& a, const CubicMatrix& b) const {
        const int m = dim_;
        CubicMatrix c(m);
        // sb[k][r] = sum_n b(k,n,r)
        std::vector<double> sb(static_cast<std::size_t>(m) * m, 0.0);
        for (int k = 1; k <= m; ++k)
            for (int n = 1; n <= m; ++n)
                for (int r = 1; r <= m; ++r)
                    sb[static_cast<std::size_t>(k - 1) * m + (r - 1)] += b(k, n, r);
        for (int i = 1; i <= m; ++i)
            for (int j = 1; j <= m; ++j)
                for (int r = 1; r <= m; ++r) {
                    double acc = 0.0;
                    for (int k = 1; k <= m; ++k)
                        acc += a(i, j, k) * sb[static_cast<std::size_t>(k - 1) * m + (r - 1)];
                    c(i, j, r) = acc;
                }
        return c;
    }

    CubicMatrix multiply_group(const CubicMatrix& a, const CubicMatrix& b) const {
        const int n = dim_ * dim_ * dim_;
        CubicMatrix c(dim_);
        for (int p = 1; p <= n; ++p) {
            const double av = a.flat(p);
            if (av == 0.0) continue;
            for (int q = 1; q <= n; ++q) c.flat(group_->op(p, q)) += av * b.flat(q);
        }
        return c;
    }

    CubicMatrix multiply_general(const CubicMatrix& a, const CubicMatrix& b) const {
        CubicMatrix c(dim_);
        for (const MuEntry& e : entries_) c.flat(e.out) += e.coeff * a.flat(e.lhs) * b.flat(e.rhs);
        return c;
    }

    std::size_t idx3(int l, int n, int r) const {
        return (static_cast<std::size_t>(l - 1) * dim_ + (n - 1)) * dim_ + (r - 1);
    }

    void build_preimages() {
        preimages_.assign(static_cast<std::size_t>(dim_), {});
        for (int l = 1; l <= dim_; ++l)
            for (int n = 1; n <= dim_; ++n)
                preimages_[static_cast<std::size_t>((*op_)(l, n)) - 1].emplace_back(l, n);
    }

    RuleTraits compute_traits(const TraitsOptions& opts) const;

    struct TraitsCache {
        std::mutex mu;
        std::optional<RuleTraits> value;
    };

    int dim_;
    Kind kind_;
    mutable std::optional<BinaryOp> op_; // Maksimov; lazily filled for A0
    std::optional<GroupTable> group_;
    std::vector<MuEntry> entries_; // GeneralMu, sorted
    std::vector<std::vector<std::pair<int, int>>> preimages_; // Maksimov: (l,n) with a(l,n)=j
    std::shared_ptr<TraitsCache> cache_;
};

/// Smallest constant C >= 1 with ||E_p * E_q||_1 <= C over all basis pairs.
/// C * ||.||_1 is then submultiplicative for this rule.
inline double mul_norm_constant(const MulRule& rule) {
    double best = 1.0;
    const std::vector<MuEntry> cs = rule.structure_constants();
    std::size_t i = 0;
    while (i < cs.size()) {
        std::size_t j = i;
        double sum = 0.0;
        while (j < cs.size() && cs[j].lhs == cs[i].lhs && cs[j].rhs == cs[i].rhs) {
            sum += std::abs(cs[j].coeff);
            ++j;
        }
        best = std::max(best, sum);
        i = j;
    }
    return best;
}

/// The submultiplicative algebra norm ||A||_mu = C * ||A||_1.
inline double mu_norm(const MulRule& rule, const CubicMatrix& a) {
    return rule.traits().norm_constant * norm_l1(a);
}

inline RuleTraits MulRule::compute_traits(const TraitsOptions& opts) const {
    if (dim_ > opts.exhaustive_dim_guard) {
        throw DimensionError("exhaustive property analysis refused for m=" + std::to_string(dim_) +
                             " (guard " + std::to_string(opts.exhaustive_dim_guard) +
                             "); raise TraitsOptions::exhaustive_dim_guard to override");
    }
    RuleTraits tr;
    const int n = dim_ * dim_ * dim_;
    const std::vector<MuEntry> cs = structure_constants();

    tr.norm_constant = mul_norm_constant(*this);

    // commutative: c_{pq}^w == c_{qp}^w for all p,q,w
    auto coeff_of = [&cs](int p, int q, int w) {
        auto it = std::lower_bound(cs.begin(), cs.end(), MuEntry{p, q, w, 0.0});
        if (it != cs.end() && it->lhs == p && it->rhs == q && it->out == w) return it->coeff;
        return 0.0;
    };
    tr.commutative = true;
    for (const MuEntry& e : cs)
        if (std::abs(e.coeff - coeff_of(e.rhs, e.lhs, e.out)) > opts.tol) {
            tr.commutative = false;
            break;
        }

    // associative: (e_p e_q) e_k == e_p (e_q e_k) for all basis triples
    tr.associative = true;
    std::vector<double> acc1(static_cast<std::size_t>(n)), acc2(static_cast<std::size_t>(n));
    for (int p = 1; p <= n && tr.associative; ++p)
        for (int q = 1; q <= n && tr.associative; ++q) {
            const auto row_pq = basis_product(p, q);
            for (int k = 1; k <= n; ++k) {
                std::fill(acc1.begin(), acc1.end(), 0.0);
                std::fill(acc2.begin(), acc2.end(), 0.0);
                for (const auto& [w1, c1] : row_pq)
                    for (const auto& [w2, c2] : basis_product(w1, k))
                        acc1[static_cast<std::size_t>(w2) - 1] += c1 * c2;
                for (const auto& [w1, c1] : basis_product(q, k))
                    for (const auto& [w2, c2] : basis_product(p, w1))
                        acc2[static_cast<std::size_t>(w2) - 1] += c1 * c2;
                for (int w = 0; w < n; ++w)
                    if (std::abs(acc1[static_cast<std::size_t>(w)] -
                                 acc2[static_cast<std::size_t>(w)]) > opts.tol) {
                        tr.associative = false;
                        break;
                    }
                if (!tr.associative) break;
            }
        }

    // unit: least-squares solve of u * E_q = E_q and E_p * u = E_p over all
    // basis elements; accepted when the max residual is within tol.
    {
        Eigen::MatrixXd sys = Eigen::MatrixXd::Zero(2 * n * n, n);
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(2 * n * n);
        for (const MuEntry& e : cs) {
            sys((e.rhs - 1) * n + (e.out - 1), e.lhs - 1) += e.coeff;
            sys(n * n + (e.lhs - 1) * n + (e.out - 1), e.rhs - 1) += e.coeff;
        }
        for (int q = 1; q <= n; ++q) {
            rhs((q - 1) * n + (q - 1)) = 1.0;
            rhs(n * n + (q - 1) * n + (q - 1)) = 1.0;
        }
        const Eigen::VectorXd u = sys.colPivHouseholderQr().solve(rhs);
        const double resid = (sys * u - rhs).lpNorm<Eigen::Infinity>();
        if (resid <= opts.tol) {
            CubicMatrix unit(dim_);
            for (int p = 1; p <= n; ++p) unit.flat(p) = u(p - 1);
            tr.unital = true;
            tr.unit = std::move(unit);
        }
    }
    return tr;
}

/// Outcome of the sampled power-associativity test.
struct PowerAssocVerdict {
    struct Witness {
        CubicMatrix x;
        int n = 0;
        int m = 0;
        double residual = 0.0;
        Witness() : x(1) {}
    };
    bool pass = true;
    int samples = 0;
    std::optional<Witness> witness;
};

/// Necessary-condition sampling: draw random elements x with ||x||_mu = 1
/// and verify x^n * x^m == x^{n+m} (left-nested powers) for n+m <= max_total.
/// A pass is evidence, not proof; a fail carries a concrete witness.
inline PowerAssocVerdict check_power_associativity(const MulRule& rule, int samples = 100,
                                                   double tol = 1e-7,
                                                   std::uint64_t seed = 20260816,
                                                   int max_total = 8) {
    PowerAssocVerdict verdict;
    verdict.samples = samples;
    std::mt19937_64 rng(seed);
    const double c = mul_norm_constant(rule);
    for (int s = 0; s < samples; ++s) {
        CubicMatrix x = random_cubic(rule.dim(), rng);
        const double nrm = c * norm_l1(x);
        if (nrm == 0.0) continue;
        x *= 1.0 / nrm;
        std::vector<CubicMatrix> pw;
        pw.reserve(static_cast<std::size_t>(max_total));
        pw.push_back(x);
        for (int k = 2; k <= max_total; ++k) pw.push_back(rule.multiply(pw.back(), x));
        for (int nn = 1; nn < max_total; ++nn)
            for (int mm = 1; nn + mm <= max_total; ++mm) {
                const double res = norm_l1(
                    rule.multiply(pw[static_cast<std::size_t>(nn) - 1],
                                  pw[static_cast<std::size_t>(mm) - 1]) -
                    pw[static_cast<std::size_t>(nn + mm) - 1]);
                if (!(res <= tol)) {
                    verdict.pass = false;
                    PowerAssocVerdict::Witness w;
                    w.x = x;
                    w.n = nn;
                    w.m = mm;
                    w.residual = res;
                    verdict.witness = std::move(w);
                    verdict.samples = s + 1;
                    return verdict;
                }
            }
    }
    return verdict;
}

struct IdempotentOptions {
    int n_starts = 16;
    int iters = 500;
    double damping = 0.5;
    double tol = 1e-9;
    double dedup_tol = 1e-6;
    int newton_steps = 12;
    std::uint64_t seed = 20260816;
};

namespace detail {

/// Euclidean projection onto the probability simplex.
inline void project_simplex(std::span<double> x) {
    std::vector<double> u(x.begin(), x.end());
    std::sort(u.begin(), u.end(), std::greater<double>());
    double css = 0.0, theta = 0.0;
    int rho = 0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        css += u[i];
        const double t = (css - 1.0) / static_cast<double>(i + 1);
        if (u[i] - t > 0) {
            rho = static_cast<int>(i + 1);
            theta = t;
        }
    }
    if (rho == 0) theta = (css - 1.0) / static_cast<double>(u.size());
    for (double& v : x) v = std::max(0.0, v - theta);
}

/// True when every basis pair's product row is a probability vector over
/// the flattened index set.
inline bool is_cubic_stochastic(const MulRule& rule) {
    const int n = rule.dim() * rule.dim() * rule.dim();
    const std::vector<MuEntry> cs = rule.structure_constants();
    std::size_t i = 0;
    long pairs = 0;
    while (i < cs.size()) {
        std::size_t j = i;
        double sum = 0.0;
        while (j < cs.size() && cs[j].lhs == cs[i].lhs && cs[j].rhs == cs[i].rhs) {
            if (cs[j].coeff < -1e-12) return false;
            sum += cs[j].coeff;
            ++j;
        }
        if (std::abs(sum - 1.0) > 1e-9) return false;
        ++pairs;
        i = j;
    }
    return pairs == static_cast<long>(n) * n;
}

/// A few Newton steps on F(x) = x*x - x to tighten an approximate fixed
/// point; returns the improved candidate (or the input when Newton fails).
inline CubicMatrix newton_polish(const MulRule& rule, CubicMatrix x, int steps) {
    const int n = rule.dim() * rule.dim() * rule.dim();
    const std::vector<MuEntry> cs = rule.structure_constants();
    for (int it = 0; it < steps; ++it) {
        const CubicMatrix fx = rule.multiply(x, x) - x;
        const double res = norm_l1(fx);
        if (res <= 1e-14) break;
        Eigen::MatrixXd jac = -Eigen::MatrixXd::Identity(n, n);
        for (const MuEntry& e : cs) {
            jac(e.out - 1, e.rhs - 1) += e.coeff * x.flat(e.lhs);
            jac(e.out - 1, e.lhs - 1) += e.coeff * x.flat(e.rhs);
        }
        Eigen::VectorXd f(n);
        for (int p = 1; p <= n; ++p) f(p - 1) = fx.flat(p);
        const Eigen::VectorXd delta = jac.partialPivLu().solve(f);
        if (!delta.allFinite()) break;
        CubicMatrix next = x;
        for (int p = 1; p <= n; ++p) next.flat(p) -= delta(p - 1);
        if (!next.is_finite()) break;
        if (norm_l1(rule.multiply(next, next) - next) >= res) break;
        x = next;
    }
    return x;
}

} // namespace detail

/// Search for fixed points of x -> x * x by damped iteration from the zero
/// matrix, the unit (when available), and random starts. For cubic-stochastic
/// rules the random starts live on the simplex and iterates are projected
/// back onto it. Every returned matrix satisfies ||X*X - X||_1 <= tol;
/// near-duplicates are merged. An empty result only means the search found
/// nothing.
inline std::vector<CubicMatrix> find_idempotents(const MulRule& rule,
                                                 const IdempotentOptions& opts = {}) {
    const int n = rule.dim() * rule.dim() * rule.dim();
    std::vector<CubicMatrix> found;
    auto consider = [&](const CubicMatrix& x) {
        if (!x.is_finite()) return;
        if (!(norm_l1(rule.multiply(x, x) - x) <= opts.tol)) return;
        for (const CubicMatrix& y : found)
            if (norm_l1(x - y) <= opts.dedup_tol) return;
        found.push_back(x);
    };

    consider(CubicMatrix::zero(rule.dim()));
    if (rule.dim() <= TraitsOptions{}.exhaustive_dim_guard) {
        const RuleTraits& tr = rule.traits();
        if (tr.unital) consider(*tr.unit);
    }

    const bool stochastic = detail::is_cubic_stochastic(rule);
    std::mt19937_64 rng(opts.seed);
    std::exponential_distribution<double> expo(1.0);

    for (int start = -1; start < opts.n_starts; ++start) {
        CubicMatrix x(rule.dim());
        if (start < 0) {
            // canonical extra start: the barycenter (stochastic rules keep
            // the simplex invariant, so this is often already close)
            for (int p = 1; p <= n; ++p) x.flat(p) = 1.0 / n;
        } else if (stochastic) {
            double sum = 0.0;
            for (int p = 1; p <= n; ++p) {
                x.flat(p) = expo(rng);
                sum += x.flat(p);
            }
            for (int p = 1; p <= n; ++p) x.flat(p) /= sum;
        } else {
            x = random_cubic(rule.dim(), rng);
            const double nrm = norm_l1(x);
            if (nrm == 0.0) continue;
            x *= 1.0 / nrm;
        }
        bool aborted = false;
        for (int it = 0; it < opts.iters; ++it) {
            CubicMatrix vx = rule.multiply(x, x);
            x = (1.0 - opts.damping) * x + opts.damping * vx;
            if (stochastic) detail::project_simplex(x.data());
            if (!x.is_finite() || norm_l1(x) > 1e9) {
                aborted = true;
                break;
            }
            if (norm_l1(rule.multiply(x, x) - x) <= opts.tol * 0.1) break;
        }
        if (aborted) continue;
        consider(detail::newton_polish(rule, x, opts.newton_steps));
    }
    return found;
}

inline std::vector<CubicMatrix> find_idempotents(const MulRule& rule, int n_starts, int iters,
                                                 double tol) {
    IdempotentOptions opts;
    opts.n_starts = n_starts;
    opts.iters = iters;
    opts.tol = tol;
    return find_idempotents(rule, opts);
}

/// Two-sided inverse of a under the rule: solves the linear system
/// a * x = unit (left multiplication by a is linear in x) and verifies
/// x * a = unit before returning. Requires unital + associative verdicts.
inline CubicMatrix inverse(const MulRule& rule, const CubicMatrix& a, double tol = 1e-9) {
    const RuleTraits& tr = rule.traits();
    if (!tr.unital)
        throw PreconditionError("inverse requires a unital rule; " + rule.describe() +
                                " has no unit");
    if (!tr.associative)
        throw PreconditionError("inverse requires an associative rule; " + rule.describe() +
                                " is not associative");
    if (a.dim() != rule.dim()) throw DimensionError("matrix dimension does not match rule");
    const int n = rule.dim() * rule.dim() * rule.dim();
    Eigen::MatrixXd lhs = Eigen::MatrixXd::Zero(n, n);
    for (const MuEntry& e : rule.structure_constants())
        lhs(e.out - 1, e.rhs - 1) += e.coeff * a.flat(e.lhs);
    Eigen::VectorXd rhs(n);
    for (int p = 1; p <= n; ++p) rhs(p - 1) = tr.unit->flat(p);
    const Eigen::VectorXd sol = lhs.partialPivLu().solve(rhs);
    CubicMatrix x(rule.dim());
    if (sol.allFinite())
        for (int p = 1; p <= n; ++p) x.flat(p) = sol(p - 1);
    const double res_right = x.is_finite() ? norm_l1(rule.multiply(a, x) - *tr.unit)
                                           : std::numeric_limits<double>::infinity();
    const double res_left = x.is_finite() ? norm_l1(rule.multiply(x, a) - *tr.unit)
                                          : std::numeric_limits<double>::infinity();
    if (!(res_right <= tol) || !(res_left <= tol))
        throw NotInvertibleError("matrix is not invertible under " + rule.describe() +
                                 " (residuals " + std::to_string(res_right) + ", " +
                                 std::to_string(res_left) + ")");
    return x;
}

/// Discovered properties of a rule's algebra.
struct AlgebraReport {
    bool commutative = false;
    bool associative = false;
    bool unital = false;
    std::optional<CubicMatrix> unit;
    std::vector<CubicMatrix> idempotents;
    PowerAssocVerdict power_assoc;
    double norm_constant = 1.0;
};

struct AnalyzeOptions {
    double tol = 1e-9;
    int power_assoc_samples = 100;
    double power_assoc_tol = 1e-7;
    int exhaustive_dim_guard = 4;
    IdempotentOptions idempotents{};
    std::uint64_t seed = 20260816;
};

/// Full property report: exhaustive commutativity/associativity verdicts,
/// unit search, idempotent search, sampled power-associativity, and the
/// submultiplicative norm constant.
inline AlgebraReport analyze(const MulRule& rule, const AnalyzeOptions& opts = {}) {
    AlgebraReport report;
    const RuleTraits& tr =
        rule.traits(TraitsOptions{opts.tol, opts.exhaustive_dim_guard});
    report.commutative = tr.commutative;
    report.associative = tr.associative;
    report.unital = tr.unital;
    report.unit = tr.unit;
    report.norm_constant = tr.norm_constant;
    report.power_assoc = check_power_associativity(rule, opts.power_assoc_samples,
                                                   opts.power_assoc_tol, opts.seed);
    IdempotentOptions iopts = opts.idempotents;
    iopts.seed = opts.seed;
    report.idempotents = find_idempotents(rule, iopts);
    return report;
}

inline AlgebraReport analyze(const MulRule& rule, double tol, int samples) {
    AnalyzeOptions opts;
    opts.tol = tol;
    opts.power_assoc_samples = samples;
    return analyze(rule, opts);
}

} // namespace cubal
