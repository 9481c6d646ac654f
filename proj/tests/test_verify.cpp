#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "cubal/flows.hpp"
#include "cubal/verify.hpp"

using namespace cubal;

namespace {

MulRule z8_group_rule() { return MulRule::group(2, GroupTable::cyclic(8)); }

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

TEST_CASE("standard grids", "[verify]") {
    const auto cont = standard_grid();
    CHECK(cont.size() == 9);
    for (const auto& [s, tau, t] : cont) {
        CHECK(s >= 0.0);
        CHECK(s < tau);
        CHECK(tau < t);
    }
    const auto disc = standard_grid_discrete();
    CHECK(disc.size() == 20);
    for (const auto& [s, tau, t] : disc) {
        CHECK(s == std::floor(s));
        CHECK(s < tau);
        CHECK(tau < t);
        CHECK(t <= 5.0);
    }
    for (const auto& [s, tau, t] : standard_pde_samples()) {
        CHECK(s - 0.1 >= 0.0);
        CHECK(s + 0.1 < tau);
        CHECK(tau < t - 0.1);
    }
}

TEST_CASE("factorization residuals over a grid", "[verify]") {
    const MulRule rule = z8_group_rule();

    SECTION("constant idempotent flow has residual exactly zero") {
        const FlowFamily flow = flow_idempotent(rule, CubicMatrix::basis(2, 1, 1, 1));
        const KceReport report = check_kce(flow, standard_grid(), 1e-8);
        CHECK(report.pass);
        CHECK(report.max_residual == 0.0);
        CHECK(report.max_entry_residual == 0.0);
        CHECK(report.samples.size() == 9);
    }

    SECTION("exponential flow stays under 1e-8") {
        std::mt19937_64 rng(19);
        CubicMatrix q = random_cubic(2, rng);
        q *= 1.0 / mu_norm(rule, q);
        const KceReport report = check_kce(flow_exp(rule, q), standard_grid(), 1e-8);
        CHECK(report.pass);
        CHECK(report.max_residual <= 1e-8);
    }

    SECTION("discrete flow on the integer grid") {
        std::mt19937_64 rng(3);
        const FlowFamily flow = flow_power(rule, random_cubic(2, rng));
        const KceReport report = check_kce(flow, standard_grid_discrete(), 1e-9);
        CHECK(report.pass);
        CHECK(report.samples.size() == 20);
    }

    SECTION("a corrupted flow is flagged") {
        const CubicMatrix unit = CubicMatrix::basis(2, 1, 1, 1);
        FlowFamily flow = flow_idempotent(rule, unit);
        flow.eval = [unit](double s, double t) {
            CubicMatrix v = unit;
            v.flat(4) += 0.1 * (t - s); // breaks the factorization, not the domain
            return v;
        };
        const KceReport report = check_kce(flow, standard_grid(), 1e-8);
        CHECK_FALSE(report.pass);
        CHECK(report.max_residual > 1e-4);
    }

    SECTION("unordered triples are rejected") {
        const FlowFamily flow = flow_idempotent(rule, CubicMatrix(2));
        CHECK_THROWS_AS(check_kce(flow, {{0.5, 0.5, 1.0}}, 1e-8), DomainError);
        CHECK_THROWS_AS(check_kce(flow, {{0.0, 1.0, 0.5}}, 1e-8), DomainError);
    }
}

TEST_CASE("finite-difference residuals", "[verify]") {
    SECTION("constant flow differentiates to zero exactly") {
        const FlowFamily flow =
            flow_idempotent(z8_group_rule(), CubicMatrix::basis(2, 1, 1, 1));
        const PdeReport report = check_pde(flow, standard_pde_samples(), 1e-4, 1e-6);
        CHECK(report.pass);
        CHECK(report.max_forward == 0.0);
        CHECK(report.max_backward == 0.0);
    }

    SECTION("separable sine family stays under tolerance at h = 1e-4") {
        const FlowFamily flow = flow_fg(BinaryOp::right_projection(2), sine_family(2));
        const PdeReport report = check_pde(flow, standard_pde_samples(), 1e-4, 1e-6);
        CHECK(report.pass);
        CHECK(report.max_forward <= 1e-6);
        CHECK(report.max_backward <= 1e-6);
    }

    SECTION("difference residuals sit at the rounding floor for exact families") {
        // Both identities hold exactly for any family satisfying the
        // factorization equation, independent of h: the difference quotients
        // cancel term by term. What is measured is rounding noise amplified
        // by 1/(2h), so refining h does not shrink it.
        const FlowFamily flow = flow_gamma(exp_gamma_family(2));
        const PdeReport at_h = check_pde(flow, standard_pde_samples(), 1e-3, 1e-6);
        const PdeReport at_half = check_pde(flow, standard_pde_samples(), 5e-4, 1e-6);
        CHECK(at_h.max_forward <= 1e-9);
        CHECK(at_half.max_forward <= 1e-9);
        CHECK(at_h.max_backward <= 1e-9);
        CHECK(at_half.max_backward <= 1e-9);
    }

    SECTION("forward and backward residuals agree on homogeneous exponential flows") {
        std::mt19937_64 rng(11);
        const MulRule rule = z8_group_rule();
        CubicMatrix q = random_cubic(2, rng);
        q *= 1.0 / mu_norm(rule, q);
        const PdeReport report = check_pde(flow_exp(rule, q), standard_pde_samples(), 1e-4, 1e-6);
        CHECK(std::abs(report.max_forward - report.max_backward) <= 1e-9);
    }

    SECTION("rejections") {
        std::mt19937_64 rng(4);
        const FlowFamily discrete = flow_power(z8_group_rule(), random_cubic(2, rng));
        CHECK_THROWS_AS(check_pde(discrete, standard_pde_samples(), 1e-4, 1e-6),
                        PreconditionError);
        const FlowFamily flow = flow_idempotent(z8_group_rule(), CubicMatrix(2));
        CHECK_THROWS_AS(check_pde(flow, standard_pde_samples(), 0.0, 1e-6), ValidationError);
        // h too large for the sample spacing
        CHECK_THROWS_AS(check_pde(flow, {{0.2, 0.3, 0.5}}, 0.15, 1e-6), DomainError);
        // stencil would cross s = 0
        CHECK_THROWS_AS(check_pde(flow, {{0.05, 0.5, 1.0}}, 0.1, 1e-6), DomainError);
    }
}

TEST_CASE("integration oracle", "[verify]") {
    const MulRule rule = z8_group_rule();
    const CubicMatrix unit = CubicMatrix::basis(2, 1, 1, 1);

    SECTION("zero generator is stationary") {
        CHECK(approx_equal(ode_oracle(rule, CubicMatrix(2), 1.0, 100), unit, 0.0));
    }

    SECTION("square-zero generator integrates to unit + tQ") {
        std::vector<MuEntry> entries;
        for (int q = 1; q <= 8; ++q) entries.push_back({1, q, q, 1.0});
        for (int p = 2; p <= 8; ++p) entries.push_back({p, 1, p, 1.0});
        const MulRule ext = MulRule::general(2, entries);
        CubicMatrix q(2);
        q.flat(5) = 0.4;
        q.flat(7) = -1.1;
        const CubicMatrix expected = *ext.traits().unit + q;
        CHECK(norm_l1(ode_oracle(ext, q, 1.0, 100) - expected) <= 1e-10);
    }

    SECTION("agrees with the series exponential") {
        std::mt19937_64 rng(8);
        for (int trial = 0; trial < 5; ++trial) {
            CubicMatrix q = random_cubic(2, rng);
            q *= 1.0 / mu_norm(rule, q);
            const CubicMatrix series = exp_mu(rule, q, 1.0, 1e-12);
            const CubicMatrix integrated = ode_oracle(rule, q, 1.0, 1000);
            CHECK(max_abs(series - integrated) <= 1e-8);
        }
    }

    SECTION("rejections") {
        CHECK_THROWS_AS(ode_oracle(rule, CubicMatrix(2), 1.0, 0), ValidationError);
        CHECK_THROWS_AS(ode_oracle(MulRule::a0(2), CubicMatrix(2), 1.0, 10), PreconditionError);
        CHECK_THROWS_AS(ode_oracle(rule, CubicMatrix(3), 1.0, 10), DimensionError);
    }
}
