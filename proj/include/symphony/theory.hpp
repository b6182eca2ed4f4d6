// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "symphony/geometry.hpp"
#include "symphony/social_graph.hpp"

namespace symphony {

// Confidence radius sqrt(ln(2/alpha) / (2N)) + L~ * eps.
double theorem1_gamma(std::uint64_t n, double alpha, double epsilon, double l_tilde);

struct BoundCheckResult {
    int j = 0;
    int k = 0;
    std::uint64_t n = 0;
    double epsilon = 0.0;
    double alpha = 0.0;
    double l_tilde = 0.0;
    double a_jk = 0.0;
    double mu = 0.0;
    double gamma = 0.0;
    bool violated = false;
    std::uint64_t trial_seed = 0;
};

struct Theorem1Report {
    std::vector<BoundCheckResult> results;
    int violations = 0;
    double violation_rate = 0.0;
    double mu = 0.0;
    double gamma = 0.0;
    double l_tilde = 0.0;
};

// Runs `trials` independent empirical estimates of a_jk and flags deviations
// beyond gamma. mu is the oracle measure of the pair's co-selection region,
// computed once by the caller.
Theorem1Report check_theorem1(const RegionSpec& spec, std::pair<int, int> pair, std::uint64_t n,
                              double epsilon, double alpha, int trials, double l_tilde,
                              NoiseKind noise, std::uint64_t seed, double mu);

struct ConvergencePoint {
    std::uint64_t n = 0;
    double max_abs_error = 0.0;
};

struct ConvergenceFit {
    std::vector<ConvergencePoint> points;
    double slope = 0.0; // least-squares slope of ln(max error) vs ln(N)
};

// Max-over-trials |a_jk - mu| per sample count, with the log-log rate fit.
ConvergenceFit consistency_rate(const RegionSpec& spec, std::pair<int, int> pair,
                                std::span<const std::uint64_t> n_grid, int trials,
                                std::uint64_t seed, double mu);

struct Prop1Report {
    bool applicable = false;
    std::string skip_reason;
    double lambda_max = 0.0;
    double rho = 0.0;
    Vec eigenvalues;
    bool connected = false;
    int trials = 0;
    double worst_contraction_slack = 0.0;  // max ||Av|| - rho ||v||, mean-zero v
    double worst_pair_slack = 0.0;         // max ||A(s - s')|| - rho ||s - s'||
    double worst_nonexpansion_slack = 0.0; // max ||As|| - ||s||, probability s
    double fixed_point_error = 0.0;        // max_j |(A u)_j - 1/M|
    int topk_trials = 0;
    int topk_changes = 0;
    bool pass = false;
    static constexpr double kTol = 1e-9;
};

// Property harness for the spectral claims: contraction of mean-zero
// perturbations, uniform fixed point, non-expansion on probability vectors,
// and margin-protected TopK invariance. Skipped (not failed) when A is not
// doubly stochastic, not connected, or has no spectral gap.
Prop1Report check_prop1(const Matrix& a, int trials, int k, std::uint64_t seed);

// Random symmetric co-selection counts, Sinkhorn-normalized; the workhorse
// generator behind the randomized spectral checks.
Matrix random_doubly_stochastic(std::size_t m, std::uint64_t seed);

} // namespace symphony
