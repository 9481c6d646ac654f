#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "cubal/cubic_matrix.hpp"
#include "cubal/errors.hpp"
#include "cubal/flows.hpp"
#include "cubal/mul_rule.hpp"

namespace cubal {

struct KceSample {
    double s = 0.0;
    double tau = 0.0;
    double t = 0.0;
    double residual_l1 = 0.0;
    double residual_max = 0.0;
};

struct KceReport {
    std::vector<KceSample> samples;
    double max_residual = 0.0;       // worst l1 residual over the grid
    double max_entry_residual = 0.0; // worst single-entry residual
    double tolerance = 0.0;
    bool pass = false;
};

/// Residuals ||M^{[s,t]} - M^{[s,tau]} * M^{[tau,t]}||_1 over a grid of
/// strictly ordered triples, using the flow's own rule for the product.
inline KceReport check_kce(const FlowFamily& flow,
                           const std::vector<std::array<double, 3>>& grid, double tol = 1e-8) {
    KceReport report;
    report.tolerance = tol;
    report.samples.reserve(grid.size());
    for (const auto& [s, tau, t] : grid) {
        if (!(s < tau && tau < t))
            throw DomainError("KCE triple must satisfy s < tau < t, got (" + std::to_string(s) +
                              ", " + std::to_string(tau) + ", " + std::to_string(t) + ")");
        const CubicMatrix lhs = flow(s, t);
        const CubicMatrix rhs = flow.rule.multiply(flow(s, tau), flow(tau, t));
        const CubicMatrix diff = lhs - rhs;
        KceSample sample{s, tau, t, norm_l1(diff), max_abs(diff)};
        report.max_residual = std::max(report.max_residual, sample.residual_l1);
        report.max_entry_residual = std::max(report.max_entry_residual, sample.residual_max);
        report.samples.push_back(sample);
    }
    report.pass = report.max_residual <= tol;
    return report;
}

struct PdeSample {
    double s = 0.0;
    double tau = 0.0;
    double t = 0.0;
    double forward_residual = 0.0;
    double backward_residual = 0.0;
};

struct PdeReport {
    double h = 0.0;
    std::vector<PdeSample> samples;
    double max_forward = 0.0;
    double max_backward = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

/// Finite-difference check of the differentiated factorization equations:
///   forward:  d/ds M^{[s,t]} = (d/ds M^{[s,tau]}) * M^{[tau,t]}
///   backward: d/dt M^{[s,t]} = M^{[s,tau]} * (d/dt M^{[tau,t]})
/// with every derivative replaced by a central difference of step h.
/// Continuous families only; each sample needs s-h >= 0 and s+h < tau < t-h.
inline PdeReport check_pde(const FlowFamily& flow,
                           const std::vector<std::array<double, 3>>& samples, double h = 1e-4,
                           double tol = 1e-6) {
    if (flow.discrete)
        throw PreconditionError("finite-difference check needs a continuous-time family");
    if (!(h > 0.0)) throw ValidationError("finite-difference step must be positive");
    PdeReport report;
    report.h = h;
    report.tolerance = tol;
    report.samples.reserve(samples.size());
    const double inv2h = 1.0 / (2.0 * h);
    for (const auto& [s, tau, t] : samples) {
        if (!(s - h >= 0.0) || !(s + h < tau) || !(tau < t - h))
            throw DomainError("PDE sample needs s-h >= 0 and s+h < tau < t-h, got (s,tau,t,h)=(" +
                              std::to_string(s) + ", " + std::to_string(tau) + ", " +
                              std::to_string(t) + ", " + std::to_string(h) + ")");
        const CubicMatrix ds_st = (flow(s + h, t) - flow(s - h, t)) * inv2h;
        const CubicMatrix ds_stau = (flow(s + h, tau) - flow(s - h, tau)) * inv2h;
        const CubicMatrix dt_st = (flow(s, t + h) - flow(s, t - h)) * inv2h;
        const CubicMatrix dt_taut = (flow(tau, t + h) - flow(tau, t - h)) * inv2h;
        const CubicMatrix m_staut = flow(tau, t);
        const CubicMatrix m_stau = flow(s, tau);
        PdeSample sample;
        sample.s = s;
        sample.tau = tau;
        sample.t = t;
        sample.forward_residual = norm_l1(ds_st - flow.rule.multiply(ds_stau, m_staut));
        sample.backward_residual = norm_l1(dt_st - flow.rule.multiply(m_stau, dt_taut));
        report.max_forward = std::max(report.max_forward, sample.forward_residual);
        report.max_backward = std::max(report.max_backward, sample.backward_residual);
        report.samples.push_back(sample);
    }
    report.pass = report.max_forward <= tol && report.max_backward <= tol;
    return report;
}

/// Classical fourth-order Runge-Kutta integration of dY/dt = Q * Y with
/// Y(0) = unit. Independent of the series code in exp_mu, so the two can
/// cross-check each other.
inline CubicMatrix ode_oracle(const MulRule& rule, const CubicMatrix& q, double t_end,
                              int steps = 1000) {
    if (steps < 1) throw ValidationError("ode_oracle needs steps >= 1");
    if (q.dim() != rule.dim()) throw DimensionError("Q dimension does not match rule");
    const RuleTraits& tr = rule.traits();
    if (!tr.unital)
        throw PreconditionError("ode_oracle requires a unital rule; " + rule.describe() +
                                " has no unit");
    const double dt = t_end / steps;
    CubicMatrix y = *tr.unit;
    for (int n = 0; n < steps; ++n) {
        const CubicMatrix k1 = rule.multiply(q, y);
        const CubicMatrix k2 = rule.multiply(q, y + (0.5 * dt) * k1);
        const CubicMatrix k3 = rule.multiply(q, y + (0.5 * dt) * k2);
        const CubicMatrix k4 = rule.multiply(q, y + dt * k3);
        y += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return y;
}

/// Published verification grid for continuous families:
/// s in {0, 0.3, 0.7}, tau = s + d/3, t = s + d, d in {0.5, 1, 2}.
inline std::vector<std::array<double, 3>> standard_grid() {
    std::vector<std::array<double, 3>> grid;
    for (double s : {0.0, 0.3, 0.7})
        for (double d : {0.5, 1.0, 2.0}) grid.push_back({s, s + d / 3.0, s + d});
    return grid;
}

/// Published grid for discrete families: every integer 0 <= n < k < l <= 5.
inline std::vector<std::array<double, 3>> standard_grid_discrete() {
    std::vector<std::array<double, 3>> grid;
    for (int n = 0; n <= 5; ++n)
        for (int k = n + 1; k <= 5; ++k)
            for (int l = k + 1; l <= 5; ++l)
                grid.push_back({double(n), double(k), double(l)});
    return grid;
}

/// Sample points for check_pde, chosen with room for the difference stencil
/// on either side (s - h >= 0 down to h = 0.1).
inline std::vector<std::array<double, 3>> standard_pde_samples() {
    return {{0.2, 0.45, 0.9}, {0.3, 0.6, 1.1}, {0.5, 0.9, 1.5}};
}

} // namespace cubal
