// SPDX-License-Identifier: Apache-2.0
#include "symphony/theory.hpp"

#include <algorithm>
#include <cmath>

#include "symphony/errors.hpp"
#include "symphony/parallel.hpp"

namespace symphony {

double theorem1_gamma(std::uint64_t n, double alpha, double epsilon, double l_tilde) {
    if (n < 1) throw ArgumentError("gamma needs n >= 1");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ArgumentError("alpha must lie in (0, 1)");
    if (epsilon < 0.0 || l_tilde < 0.0)
        throw ArgumentError("epsilon and the calibrated constant must be nonnegative");
    return std::sqrt(std::log(2.0 / alpha) / (2.0 * static_cast<double>(n))) + l_tilde * epsilon;
}

Theorem1Report check_theorem1(const RegionSpec& spec, std::pair<int, int> pair, std::uint64_t n,
                              double epsilon, double alpha, int trials, double l_tilde,
                              NoiseKind noise, std::uint64_t seed, double mu) {
    if (trials < 1) throw ArgumentError("check_theorem1 needs trials >= 1");
    const double gamma = theorem1_gamma(n, alpha, epsilon, l_tilde);

    Theorem1Report rep;
    rep.mu = mu;
    rep.gamma = gamma;
    rep.l_tilde = l_tilde;
    rep.results.resize(trials);
    parallel_for(static_cast<std::size_t>(trials), [&](std::size_t t) {
        BoundCheckResult& r = rep.results[t];
        r.j = pair.first;
        r.k = pair.second;
        r.n = n;
        r.epsilon = epsilon;
        r.alpha = alpha;
        r.l_tilde = l_tilde;
        r.trial_seed = derive_seed(seed, t);
        r.a_jk = empirical_ajk(spec, pair.first, pair.second, n, epsilon, noise, r.trial_seed);
        r.mu = mu;
        r.gamma = gamma;
        r.violated = std::abs(r.a_jk - mu) > gamma;
    });
    for (const BoundCheckResult& r : rep.results)
        if (r.violated) ++rep.violations;
    rep.violation_rate = static_cast<double>(rep.violations) / static_cast<double>(trials);
    return rep;
}

ConvergenceFit consistency_rate(const RegionSpec& spec, std::pair<int, int> pair,
                                std::span<const std::uint64_t> n_grid, int trials,
                                std::uint64_t seed, double mu) {
    if (n_grid.size() < 2) throw ArgumentError("rate fit needs at least two sample counts");
    if (trials < 1) throw ArgumentError("rate fit needs trials >= 1");

    ConvergenceFit fit;
    fit.points.resize(n_grid.size());
    for (std::size_t gi = 0; gi < n_grid.size(); ++gi) {
        const std::uint64_t n = n_grid[gi];
        std::vector<double> errs(trials, 0.0);
        parallel_for(static_cast<std::size_t>(trials), [&](std::size_t t) {
            const std::uint64_t s = derive_seed(seed, gi * 100003 + t);
            const double a =
                empirical_ajk(spec, pair.first, pair.second, n, 0.0, NoiseKind::UniformBall, s);
            errs[t] = std::abs(a - mu);
        });
        double mx = 0.0;
        for (double e : errs) mx = std::max(mx, e);
        fit.points[gi] = {n, mx};
    }

    // Least-squares slope in log-log coordinates.
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    const double cnt = static_cast<double>(fit.points.size());
    for (const ConvergencePoint& p : fit.points) {
        const double x = std::log(static_cast<double>(p.n));
        const double y = std::log(std::max(p.max_abs_error, 1e-300));
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    fit.slope = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
    return fit;
}

Prop1Report check_prop1(const Matrix& a, int trials, int k, std::uint64_t seed) {
    if (a.rows() != a.cols()) throw ArgumentError("check_prop1 needs a square matrix");
    if (trials < 1) throw ArgumentError("check_prop1 needs trials >= 1");
    const std::size_t m = a.rows();

    Prop1Report rep;
    rep.trials = trials;
    if (!is_doubly_stochastic(a, 1e-6)) {
        rep.skip_reason = "matrix is not doubly stochastic within 1e-6";
        return rep;
    }
    if (!is_symmetric(a, 1e-6)) {
        rep.skip_reason = "matrix is not symmetric";
        return rep;
    }

    SpectralReport spec = spectral_report_matrix(a, true);
    rep.lambda_max = spec.lambda_max;
    rep.rho = spec.rho;
    rep.eigenvalues = spec.eigenvalues;
    rep.connected = spec.connected;
    if (!spec.connected) {
        rep.skip_reason = "induced graph is not connected";
        return rep;
    }
    if (rep.rho >= 1.0 - 1e-12) {
        rep.skip_reason = "no spectral gap (rho >= 1)";
        return rep;
    }
    rep.applicable = true;

    const double um = 1.0 / static_cast<double>(m);
    Vec uniform(m, um);
    Vec au = matvec(a, uniform);
    for (std::size_t j = 0; j < m; ++j)
        rep.fixed_point_error = std::max(rep.fixed_point_error, std::abs(au[j] - um));

    RandomStream rng(derive_seed(seed, 0x4e0));
    Vec v(m), s(m), s2(m), delta(m), moved(m);
    for (int t = 0; t < trials; ++t) {
        // (i) contraction on mean-zero vectors
        rng.fill_normal(v);
        double mean = 0.0;
        for (double x : v) mean += x;
        mean /= static_cast<double>(m);
        for (double& x : v) x -= mean;
        Vec av = matvec(a, v);
        rep.worst_contraction_slack =
            std::max(rep.worst_contraction_slack, norm2(av) - rep.rho * norm2(v));

        // contraction on differences of probability vectors
        rng.fill_normal(s);
        rng.fill_normal(s2);
        Vec ps = softmax_row(s);
        Vec ps2 = softmax_row(s2);
        Vec diff(m);
        for (std::size_t j = 0; j < m; ++j) diff[j] = ps[j] - ps2[j];
        Vec adiff = matvec(a, diff);
        rep.worst_pair_slack =
            std::max(rep.worst_pair_slack, norm2(adiff) - rep.rho * norm2(diff));

        // (iv) non-expansion on probability vectors
        Vec aps = matvec(a, ps);
        rep.worst_nonexpansion_slack =
            std::max(rep.worst_nonexpansion_slack, norm2(aps) - norm2(ps));

        // (ii) margin-protected TopK invariance
        if (k >= 1 && static_cast<std::size_t>(k) < m) {
            Vec r = matvec(a, ps);
            std::vector<int> top = topk_select(r, k);
            double min_in = std::numeric_limits<double>::infinity();
            double max_out = -std::numeric_limits<double>::infinity();
            std::vector<char> in_top(m, 0);
            for (int j : top) in_top[j] = 1;
            for (std::size_t j = 0; j < m; ++j)
                (in_top[j] ? min_in = std::min(min_in, r[j]) : max_out = std::max(max_out, r[j]));
            const double margin = min_in - max_out;
            if (margin > 1e-9) {
                const double radius = rep.rho > 1e-12
                                          ? margin / (2.0 * rep.rho)
                                          : 1e6; // rho == 0 cannot move the TopK at all
                rng.fill_normal(delta);
                double dmean = 0.0;
                for (double x : delta) dmean += x;
                dmean /= static_cast<double>(m);
                for (double& x : delta) x -= dmean;
                const double dn = norm2(delta);
                const double scale = dn > 0.0 ? 0.999 * radius * rng.uniform01() / dn : 0.0;
                for (std::size_t j = 0; j < m; ++j) moved[j] = ps[j] + scale * delta[j];
                Vec r2 = matvec(a, moved);
                std::vector<int> top2 = topk_select(r2, k);
                ++rep.topk_trials;
                if (top2 != top) ++rep.topk_changes;
            }
        }
    }

    rep.pass = rep.worst_contraction_slack <= Prop1Report::kTol &&
               rep.worst_pair_slack <= Prop1Report::kTol &&
               rep.worst_nonexpansion_slack <= Prop1Report::kTol &&
               rep.fixed_point_error <= Prop1Report::kTol && rep.topk_changes == 0;
    return rep;
}

Matrix random_doubly_stochastic(std::size_t m, std::uint64_t seed) {
    if (m < 2) throw ArgumentError("random adjacency needs m >= 2");
    RandomStream rng(derive_seed(seed, 0xd0b1));
    Matrix counts(m, m, 0.0);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = i; j < m; ++j) {
            const double v = rng.uniform01();
            counts(i, j) = v;
            counts(j, i) = v;
        }
    return normalize_counts(counts, NormMode::Sinkhorn);
}

} // namespace symphony
