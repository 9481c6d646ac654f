#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "cubal/flows.hpp"
#include "cubal/mul_rule.hpp"

using namespace cubal;

namespace {

MulRule z8_group_rule() { return MulRule::group(2, GroupTable::cyclic(8)); }

// Unital commutative rule with e_p * e_q = 0 whenever p, q >= 2: every
// element without a unit component squares to zero.
MulRule trivial_extension_rule() {
    std::vector<MuEntry> entries;
    for (int q = 1; q <= 8; ++q) entries.push_back({1, q, q, 1.0});
    for (int p = 2; p <= 8; ++p) entries.push_back({p, 1, p, 1.0});
    return MulRule::general(2, entries);
}

CubicMatrix unit_scaled_random(const MulRule& rule, std::mt19937_64& rng) {
    CubicMatrix q = random_cubic(rule.dim(), rng);
    q *= 1.0 / mu_norm(rule, q);
    return q;
}

ScalarFamily sine_family(int m) {
    ScalarFamily fam;
    fam.dim = m;
    fam.f = [](int k, double t) { return 2.0 + std::sin(k * t); };
    fam.g = [m](int k, double t) { return 1.0 / (m * m * (2.0 + std::sin(k * t))); };
    fam.sample_times = TimeGrid{0.0, 2.0, 0.25}.times();
    return fam;
}

ScalarFamily exp_gamma_family(int m) {
    ScalarFamily fam;
    fam.dim = m;
    fam.gamma = [m](int, int, double t) { return std::exp(t) / (2.0 * m); };
    fam.g = [](int, double t) { return std::exp(t); };
    fam.sample_times = TimeGrid{0.0, 2.0, 0.25}.times();
    return fam;
}

} // namespace

TEST_CASE("time grid enumeration", "[flows]") {
    const std::vector<double> ts = TimeGrid{0.0, 1.0, 0.25}.times();
    REQUIRE(ts.size() == 5);
    CHECK(ts.front() == 0.0);
    CHECK(ts.back() == Catch::Approx(1.0));
    CHECK_THROWS_AS(TimeGrid({0.0, 1.0, 0.0}).times(), ValidationError);
    CHECK_THROWS_AS(TimeGrid({1.0, 0.0, 0.5}).times(), ValidationError);
}

TEST_CASE("domain checks on evaluation", "[flows]") {
    const FlowFamily flow = flow_idempotent(z8_group_rule(), CubicMatrix(2));
    CHECK_THROWS_AS(flow(-0.5, 1.0), DomainError);
    CHECK_THROWS_AS(flow(1.0, 1.0), DomainError);
    CHECK_THROWS_AS(flow(1.5, 0.5), DomainError);
    CHECK_NOTHROW(flow(0.0, 0.25));

    std::mt19937_64 rng(2);
    const FlowFamily discrete = flow_power(z8_group_rule(), random_cubic(2, rng));
    CHECK(discrete.discrete);
    CHECK_THROWS_AS(discrete(0.0, 1.5), DomainError);
    CHECK_THROWS_AS(discrete(0.5, 2.0), DomainError);
    CHECK_NOTHROW(discrete(0.0, 2.0));
}

TEST_CASE("discrete powers", "[flows]") {
    std::mt19937_64 rng(7);
    const MulRule rule = z8_group_rule();
    const CubicMatrix q = random_cubic(2, rng);
    const FlowFamily flow = flow_power(rule, q);
    CHECK(flow.homogeneous);
    CHECK(flow.label.find("sampled") != std::string::npos);

    CHECK(approx_equal(flow(3.0, 4.0), q, 0.0));
    CHECK(approx_equal(flow(0.0, 2.0), rule.multiply(q, q), 1e-12));
    // factorization across an intermediate time
    const CubicMatrix lhs = flow(0.0, 3.0);
    const CubicMatrix rhs = rule.multiply(flow(0.0, 1.0), flow(1.0, 3.0));
    CHECK(norm_l1(lhs - rhs) <= 1e-9);
}

TEST_CASE("power flow refuses a non-power-associative rule", "[flows]") {
    std::vector<MuEntry> entries;
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int p = 1; p <= 8; ++p)
        for (int q = 1; q <= 8; ++q) entries.push_back({p, q, (5 * p + q) % 8 + 1, u(rng)});
    const MulRule rule = MulRule::general(2, entries);
    try {
        flow_power(rule, random_cubic(2, rng));
        FAIL("expected PreconditionError");
    } catch (const PreconditionError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("residual") != std::string::npos);
    }
}

TEST_CASE("constant idempotent flow", "[flows]") {
    const MulRule rule = z8_group_rule();

    SECTION("zero idempotent") {
        const FlowFamily flow = flow_idempotent(rule, CubicMatrix::zero(2));
        CHECK(norm_l1(flow(0.1, 2.0)) == 0.0);
    }

    SECTION("unit idempotent, factorization exact") {
        const CubicMatrix unit = CubicMatrix::basis(2, 1, 1, 1);
        const FlowFamily flow = flow_idempotent(rule, unit);
        const CubicMatrix lhs = flow(0.0, 1.0);
        const CubicMatrix rhs = rule.multiply(flow(0.0, 0.5), flow(0.5, 1.0));
        CHECK(approx_equal(lhs, rhs, 0.0));
        CHECK(approx_equal(lhs, unit, 0.0));
    }

    SECTION("non-idempotent rejected") {
        CHECK_THROWS_AS(flow_idempotent(rule, 2.0 * CubicMatrix::basis(2, 1, 1, 1)),
                        PreconditionError);
    }
}

TEST_CASE("series exponential", "[flows][exp]") {
    const MulRule rule = z8_group_rule();
    const CubicMatrix unit = CubicMatrix::basis(2, 1, 1, 1);
    std::mt19937_64 rng(31);

    SECTION("zero generator gives the unit") {
        CHECK(approx_equal(exp_mu(rule, CubicMatrix(2), 1.0, 1e-12), unit, 0.0));
        CHECK(approx_equal(exp_mu(rule, random_cubic(2, rng), 0.0, 1e-12), unit, 0.0));
    }

    SECTION("square-zero generator gives unit + tQ") {
        const MulRule ext = trivial_extension_rule();
        CubicMatrix q(2);
        q.flat(3) = 0.7;
        q.flat(6) = -0.2;
        REQUIRE(norm_l1(ext.multiply(q, q)) == 0.0);
        for (double t : {0.5, 1.0, 2.0}) {
            const CubicMatrix expected = *ext.traits().unit + t * q;
            CHECK(approx_equal(exp_mu(ext, q, t, 1e-12), expected, 1e-12));
        }
    }

    SECTION("semigroup identity") {
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (int trial = 0; trial < 5; ++trial) {
            const CubicMatrix q = unit_scaled_random(rule, rng);
            const double s = u(rng), t = u(rng);
            const CubicMatrix both = exp_mu(rule, q, s + t, 1e-12);
            const CubicMatrix split =
                rule.multiply(exp_mu(rule, q, s, 1e-12), exp_mu(rule, q, t, 1e-12));
            CHECK(norm_l1(both - split) <= 1e-8);
        }
    }

    SECTION("preconditions") {
        CHECK_THROWS_AS(exp_mu(MulRule::a0(2), CubicMatrix(2), 1.0, 1e-12), PreconditionError);
        CHECK_THROWS_AS(exp_mu(rule, CubicMatrix(2), 1.0, 0.0), ValidationError);
    }
}

TEST_CASE("exponential flow", "[flows][exp]") {
    std::mt19937_64 rng(5);
    const MulRule rule = z8_group_rule();
    const CubicMatrix q = unit_scaled_random(rule, rng);
    const FlowFamily flow = flow_exp(rule, q);
    CHECK(flow.homogeneous);

    // continuity at coincident times
    const CubicMatrix unit = CubicMatrix::basis(2, 1, 1, 1);
    CHECK(norm_l1(flow(1.0, 1.0 + 1e-6) - unit) <= 1e-4);

    // factorization and homogeneity
    CHECK(norm_l1(flow(0.0, 2.0) - rule.multiply(flow(0.0, 1.0), flow(1.0, 2.0))) <= 1e-8);
    CHECK(norm_l1(flow(1.0, 3.0) - flow(0.0, 2.0)) <= 1e-9);

    CHECK_THROWS_AS(flow_exp(MulRule::a0(2), CubicMatrix(2)), PreconditionError);
}

TEST_CASE("invertible-family flow", "[flows]") {
    const MulRule rule = z8_group_rule();
    const CubicMatrix unit = CubicMatrix::basis(2, 1, 1, 1);

    SECTION("constant identity family") {
        const FlowFamily flow = flow_invertible(rule, [unit](double) { return unit; });
        CHECK(approx_equal(flow(0.2, 1.7), unit, 1e-12));
    }

    SECTION("scalar exponential family is homogeneous in value") {
        const FlowFamily flow =
            flow_invertible(rule, [unit](double t) { return std::exp(t) * unit; });
        const CubicMatrix v = flow(0.5, 2.0);
        CHECK(approx_equal(v, std::exp(0.5 - 2.0) * unit, 1e-9));
        CHECK(norm_l1(flow(1.0, 2.5) - v) <= 1e-9);
    }

    SECTION("generic family satisfies the factorization identity") {
        auto family = [unit](double t) {
            CubicMatrix a = (2.0 + std::sin(t)) * unit;
            a.flat(2) = 0.1 * std::cos(t);
            return a;
        };
        const FlowFamily flow = flow_invertible(rule, family);
        const CubicMatrix lhs = flow(0.0, 1.5);
        const CubicMatrix rhs = rule.multiply(flow(0.0, 0.4), flow(0.4, 1.5));
        CHECK(norm_l1(lhs - rhs) <= 1e-9);
    }

    SECTION("singular member surfaces with its time") {
        CubicMatrix singular(2);
        singular.flat(1) = 1.0;
        singular.flat(5) = 1.0; // half the spectrum vanishes
        const FlowFamily flow = flow_invertible(rule, [singular](double) { return singular; });
        try {
            flow(0.0, 1.25);
            FAIL("expected NotInvertibleError");
        } catch (const NotInvertibleError& e) {
            REQUIRE(e.time.has_value());
            CHECK(*e.time == 1.25);
        }
    }

    SECTION("a0 rule is refused") {
        CHECK_THROWS_AS(flow_invertible(MulRule::a0(2), [](double) { return CubicMatrix(2); }),
                        PreconditionError);
    }
}

TEST_CASE("separable f/g flow", "[flows]") {
    const BinaryOp op = BinaryOp::right_projection(2);

    SECTION("sine family evaluates separably and ignores the middle index") {
        const FlowFamily flow = flow_fg(op, sine_family(2));
        const CubicMatrix v = flow(0.3, 1.1);
        for (int i = 1; i <= 2; ++i)
            for (int k = 1; k <= 2; ++k) {
                const double expected =
                    (2.0 + std::sin(i * 0.3)) / (4.0 * (2.0 + std::sin(k * 1.1)));
                CHECK(v(i, 1, k) == Catch::Approx(expected).epsilon(1e-14));
                CHECK(v(i, 1, k) == v(i, 2, k));
            }
    }

    SECTION("periodic in 2 pi") {
        const ScalarFamily fam = sine_family(2);
        const FlowFamily flow = flow_fg(op, fam);
        const double period = 2.0 * std::acos(-1.0);
        CHECK(norm_l1(flow(0.4, 1.3) - flow(0.4 + period, 1.3 + period)) <= 1e-9);
    }

    SECTION("constant normalized family gives a constant flow") {
        ScalarFamily fam;
        fam.dim = 2;
        fam.f = [](int, double) { return 1.0; };
        fam.g = [](int, double) { return 0.25; };
        fam.sample_times = {0.0, 1.0};
        const FlowFamily flow = flow_fg(op, fam);
        CHECK(approx_equal(flow(0.0, 1.0), flow(0.5, 3.0), 0.0));
    }

    SECTION("normalization violations are named") {
        ScalarFamily fam = sine_family(2);
        const auto g = fam.g;
        fam.g = [g](int k, double t) { return 1.01 * g(k, t); };
        try {
            flow_fg(op, fam);
            FAIL("expected ConstraintViolation");
        } catch (const ConstraintViolation& e) {
            CHECK(e.constraint == "sum_k f_k(t) g_k(t) = 1/m");
            CHECK(e.residual > 1e-4);
        }
    }

    SECTION("non-uniform op refused") {
        CHECK_THROWS_AS(flow_fg(BinaryOp::constant(2, 1), sine_family(2)), PreconditionError);
    }
}

TEST_CASE("gamma/g flow", "[flows]") {
    SECTION("one-dimensional family is a ratio of g values") {
        ScalarFamily fam;
        fam.dim = 1;
        fam.gamma = [](int, int, double t) { return 2.0 + std::sin(t); };
        fam.g = [](int, double t) { return 2.0 + std::sin(t); };
        fam.sample_times = TimeGrid{0.0, 2.0, 0.5}.times();
        const FlowFamily flow = flow_gamma(fam);
        const CubicMatrix v = flow(0.3, 1.4);
        CHECK(v(1, 1, 1) ==
              Catch::Approx((2.0 + std::sin(0.3)) / (2.0 + std::sin(1.4))).epsilon(1e-14));
        // one-dimensional factorization is exact up to rounding
        const CubicMatrix lhs = flow(0.2, 1.0);
        const CubicMatrix rhs = flow.rule.multiply(flow(0.2, 0.6), flow(0.6, 1.0));
        CHECK(norm_l1(lhs - rhs) <= 1e-15);
    }

    SECTION("exponential family satisfies the factorization identity") {
        const FlowFamily flow = flow_gamma(exp_gamma_family(2));
        const CubicMatrix lhs = flow(0.1, 1.7);
        const CubicMatrix rhs = flow.rule.multiply(flow(0.1, 0.8), flow(0.8, 1.7));
        CHECK(norm_l1(lhs - rhs) <= 1e-9);
    }

    SECTION("constraint violations are named with the row") {
        ScalarFamily fam;
        fam.dim = 2;
        fam.gamma = [](int, int, double) { return 1.0; };
        fam.g = [](int, double) { return 1.0; };
        fam.sample_times = {0.0};
        try {
            flow_gamma(fam);
            FAIL("expected ConstraintViolation");
        } catch (const ConstraintViolation& e) {
            CHECK(e.constraint == "m * sum_j gamma_ij(t) = g_i(t)");
            CHECK(e.residual == Catch::Approx(3.0));
        }
    }

    SECTION("vanishing g is caught at sampling and at evaluation") {
        ScalarFamily fam = exp_gamma_family(2);
        fam.gamma = [](int, int, double t) { return (t - 1.0) / 4.0; };
        fam.g = [](int, double t) { return t - 1.0; };
        try {
            flow_gamma(fam);
            FAIL("expected ConstraintViolation");
        } catch (const ConstraintViolation& e) {
            CHECK(e.constraint == "g_i(t) != 0");
        }

        // samples avoid the zero, evaluation does not
        ScalarFamily shifted;
        shifted.dim = 2;
        shifted.gamma = [](int, int, double t) { return (t - 3.0) / 4.0; };
        shifted.g = [](int, double t) { return t - 3.0; };
        shifted.sample_times = {0.0, 1.0, 2.0};
        const FlowFamily flow = flow_gamma(shifted);
        CHECK_THROWS_AS(flow(0.5, 3.0), ConstraintViolation);
        CHECK_NOTHROW(flow(0.5, 2.0));
    }
}

TEST_CASE("transport between conjugate ops", "[flows]") {
    const int m = 3;
    const BinaryOp b = BinaryOp::cyclic(m);
    const std::vector<int> pi = {2, 3, 1};
    // a(j,n) = pi^{-1}(b(pi(j), pi(n))) is the unique compatible target op
    std::vector<int> inv(static_cast<std::size_t>(m));
    for (int v = 1; v <= m; ++v) inv[static_cast<std::size_t>(pi[v - 1]) - 1] = v;
    const BinaryOp a = BinaryOp::from_fn(m, [&](int j, int n) {
        return inv[static_cast<std::size_t>(b(pi[j - 1], pi[n - 1])) - 1];
    });

    // source: separable family over b
    ScalarFamily fam;
    fam.dim = m;
    fam.f = [](int k, double t) { return 2.0 + std::sin(k * t); };
    fam.g = [m](int k, double t) { return 1.0 / (m * m * (2.0 + std::sin(k * t))); };
    fam.sample_times = TimeGrid{0.0, 2.0, 0.5}.times();
    const FlowFamily source = flow_fg(b, fam);

    SECTION("transported family satisfies the factorization under the target rule") {
        const FlowFamily moved = transport(source, pi, a);
        const CubicMatrix lhs = moved(0.2, 1.4);
        const CubicMatrix rhs = moved.rule.multiply(moved(0.2, 0.7), moved(0.7, 1.4));
        CHECK(norm_l1(lhs - rhs) <= 1e-9);
        // entries are a pure relabeling
        const CubicMatrix src = source(0.2, 1.4);
        for (int i = 1; i <= m; ++i)
            for (int j = 1; j <= m; ++j)
                for (int r = 1; r <= m; ++r)
                    CHECK(moved.eval(0.2, 1.4)(i, j, r) == src(pi[i - 1], pi[j - 1], pi[r - 1]));
    }

    SECTION("identity permutation is a no-op") {
        const FlowFamily moved = transport(source, {1, 2, 3}, b);
        CHECK(approx_equal(moved(0.3, 1.1), source(0.3, 1.1), 0.0));
    }

    SECTION("round trip through pi and its inverse") {
        const FlowFamily moved = transport(source, pi, a);
        const std::vector<int> pi_inv = {3, 1, 2};
        const FlowFamily back = transport(moved, pi_inv, b);
        CHECK(approx_equal(back(0.3, 1.1), source(0.3, 1.1), 0.0));
    }

    SECTION("incompatible op is rejected with a witness") {
        try {
            transport(source, pi, b); // b itself is not pi-conjugate to b here
            FAIL("expected ValidationError");
        } catch (const ValidationError& e) {
            const std::string msg = e.what();
            CHECK(msg.find("pi(") != std::string::npos);
        }
        CHECK_THROWS_AS(transport(source, {1, 1, 2}, a), ValidationError);
        CHECK_THROWS_AS(transport(source, {1, 2}, a), ValidationError);
    }

    SECTION("non-maksimov source is refused") {
        const FlowFamily constant =
            flow_idempotent(MulRule::group(2, GroupTable::cyclic(8)), CubicMatrix(2));
        CHECK_THROWS_AS(transport(constant, {1, 2}, BinaryOp::cyclic(2)), PreconditionError);
    }
}

TEST_CASE("pointwise product of flows", "[flows]") {
    const MulRule rule = z8_group_rule();
    const CubicMatrix unit = CubicMatrix::basis(2, 1, 1, 1);
    auto fam_a = [unit](double t) {
        CubicMatrix a = (2.0 + std::sin(t)) * unit;
        a.flat(2) = 0.1 * std::cos(t);
        return a;
    };
    auto fam_b = [unit](double t) {
        CubicMatrix a = (3.0 + std::cos(t)) * unit;
        a.flat(3) = 0.2 * std::sin(t);
        return a;
    };
    const FlowFamily fa = flow_invertible(rule, fam_a);
    const FlowFamily fb = flow_invertible(rule, fam_b);

    SECTION("single factor folds to itself") {
        const FlowFamily p = flow_product(rule, {fa});
        CHECK(approx_equal(p(0.1, 1.1), fa(0.1, 1.1), 0.0));
    }

    SECTION("unit idempotent absorbs") {
        const FlowFamily id = flow_idempotent(rule, unit);
        const FlowFamily p = flow_product(rule, {fa, id});
        CHECK(approx_equal(p(0.1, 1.1), fa(0.1, 1.1), 1e-12));
    }

    SECTION("two factors satisfy the factorization identity") {
        const FlowFamily p = flow_product(rule, {fa, fb});
        const CubicMatrix lhs = p(0.0, 1.2);
        const CubicMatrix rhs = rule.multiply(p(0.0, 0.5), p(0.5, 1.2));
        CHECK(norm_l1(lhs - rhs) <= 1e-9);
    }

    SECTION("factor order does not matter") {
        const FlowFamily p = flow_product(rule, {fa, fb});
        const FlowFamily q = flow_product(rule, {fb, fa});
        CHECK(norm_l1(p(0.2, 1.4) - q(0.2, 1.4)) <= 1e-9);
    }

    SECTION("preconditions") {
        CHECK_THROWS_AS(flow_product(rule, {}), ValidationError);
        // factor over a different rule
        const FlowFamily other =
            flow_idempotent(MulRule::maksimov(BinaryOp::cyclic(2)), CubicMatrix(2));
        CHECK_THROWS_AS(flow_product(rule, {fa, other}), ValidationError);
        // non-commutative rule
        const MulRule mk = MulRule::maksimov(BinaryOp::cyclic(2));
        const FlowFamily c1 = flow_idempotent(mk, CubicMatrix(2));
        CHECK_THROWS_AS(flow_product(mk, {c1, c1}), PreconditionError);
    }
}

TEST_CASE("homogeneous families shift in time", "[flows]") {
    std::mt19937_64 rng(77);
    const MulRule rule = z8_group_rule();
    const CubicMatrix q = unit_scaled_random(rule, rng);
    const FlowFamily flows[] = {flow_exp(rule, q), flow_idempotent(rule, CubicMatrix(2))};
    for (const FlowFamily& flow : flows) {
        REQUIRE(flow.homogeneous);
        for (double h : {0.3, 1.0})
            CHECK(norm_l1(flow(0.2, 1.4) - flow(0.2 + h, 1.4 + h)) <= 1e-9);
    }
}
