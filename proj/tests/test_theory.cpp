// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>

#include "symphony/errors.hpp"
#include "symphony/parallel.hpp"
#include "symphony/theory.hpp"

using namespace symphony;

namespace {

RegionSpec two_circles(double dist, double r1 = 1.0, double r2 = 1.0) {
    RegionSpec spec;
    spec.dim = 2;
    spec.domain.lo = {-2.0, -2.0};
    spec.domain.hi = {3.0, 2.0};
    spec.centers = Matrix(2, 2, 0.0);
    spec.centers(1, 0) = dist;
    spec.radii = {r1, r2};
    return spec;
}

} // namespace

TEST_CASE("lens area: tangent, nested, and the distance-1 worked value") {
    CHECK(circle_lens_area(1.0, 1.0, 2.0) == 0.0);
    CHECK(circle_lens_area(1.0, 1.0, 5.0) == 0.0);
    // nested circles: the smaller disk
    CHECK(circle_lens_area(2.0, 0.5, 0.3) ==
          doctest::Approx(std::numbers::pi * 0.25).epsilon(1e-14));
    CHECK(circle_lens_area(1.0, 1.0, 0.0) == doctest::Approx(std::numbers::pi).epsilon(1e-14));

    const double lens = circle_lens_area(1.0, 1.0, 1.0);
    const double expected = 2.0 * std::numbers::pi / 3.0 - std::sqrt(3.0) / 2.0;
    CHECK(lens == doctest::Approx(expected).epsilon(1e-14));
    CHECK(lens == doctest::Approx(1.2284).epsilon(1e-4));
}

TEST_CASE("oracle measure: analytic value for the reference fixture") {
    RegionSpec spec = two_circles(1.0);
    MeasureEstimate mu = oracle_coselect_measure(spec, 0, 1, OracleMode::Analytic2D);
    CHECK(mu.value ==
          doctest::Approx((2.0 * std::numbers::pi / 3.0 - std::sqrt(3.0) / 2.0) / 20.0)
              .epsilon(1e-14));
    CHECK(mu.value == doctest::Approx(0.06142).epsilon(1e-4));
    CHECK(mu.std_error == 0.0);

    // identical balls entirely inside the box
    RegionSpec same = two_circles(0.0, 0.9, 0.9);
    MeasureEstimate full = oracle_coselect_measure(same, 0, 1, OracleMode::Analytic2D);
    CHECK(full.value == doctest::Approx(std::numbers::pi * 0.81 / 20.0).epsilon(1e-12));

    CHECK_THROWS_AS(oracle_coselect_measure(spec, 0, 0, OracleMode::Analytic2D), ArgumentError);
    CHECK_THROWS_AS(oracle_coselect_measure(spec, 0, 2, OracleMode::Analytic2D), ArgumentError);
}

TEST_CASE("monte carlo oracle cross-validates the analytic one") {
    RandomStream rng(71);
    int checked = 0;
    for (int rep = 0; rep < 20; ++rep) {
        RegionSpec spec;
        spec.dim = 2;
        spec.domain.lo = {-2.0, -2.0};
        spec.domain.hi = {2.0, 2.0};
        spec.centers = Matrix(2, 2);
        spec.radii = Vec(2);
        for (int j = 0; j < 2; ++j) {
            spec.radii[j] = rng.uniform(0.3, 0.9);
            for (int c = 0; c < 2; ++c)
                spec.centers(j, c) = rng.uniform(-2.0 + spec.radii[j], 2.0 - spec.radii[j]);
        }
        MeasureEstimate analytic = oracle_coselect_measure(spec, 0, 1, OracleMode::Analytic2D);
        MeasureEstimate mc = oracle_coselect_measure(spec, 0, 1, OracleMode::MonteCarloDense,
                                                     200000, 1234 + rep);
        const double tol = 4.0 * std::max(mc.std_error, 1e-9);
        CHECK(std::abs(analytic.value - mc.value) <= tol);
        ++checked;
    }
    CHECK(checked == 20);
}

TEST_CASE("monte carlo oracle is independent of the thread budget") {
    RegionSpec spec = two_circles(1.0);
    MeasureEstimate a = oracle_coselect_measure(spec, 0, 1, OracleMode::MonteCarloDense, 300000, 5);
    set_thread_budget(2);
    MeasureEstimate b = oracle_coselect_measure(spec, 0, 1, OracleMode::MonteCarloDense, 300000, 5);
    set_thread_budget(1);
    CHECK(a.value == b.value);
}

TEST_CASE("theorem trials are independent of the thread budget") {
    RegionSpec spec = two_circles(1.0);
    const double mu = oracle_coselect_measure(spec, 0, 1, OracleMode::Analytic2D).value;
    Theorem1Report one =
        check_theorem1(spec, {0, 1}, 400, 0.02, 0.05, 64, 0.3, NoiseKind::UniformBall, 91, mu);
    set_thread_budget(2);
    Theorem1Report two =
        check_theorem1(spec, {0, 1}, 400, 0.02, 0.05, 64, 0.3, NoiseKind::UniformBall, 91, mu);
    set_thread_budget(1);
    REQUIRE(one.results.size() == two.results.size());
    for (std::size_t i = 0; i < one.results.size(); ++i)
        CHECK(one.results[i].a_jk == two.results[i].a_jk);
}

TEST_CASE("empirical a_jk: trivial geometries and convergence to the oracle") {
    // disjoint balls: always zero, also under noise smaller than the gap
    RegionSpec gap = two_circles(2.5, 1.0, 1.0);
    CHECK(empirical_ajk(gap, 0, 1, 5000, 0.0, NoiseKind::UniformBall, 3) == 0.0);
    CHECK(empirical_ajk(gap, 0, 1, 5000, 0.1, NoiseKind::UniformBall, 3) == 0.0);

    // identical huge balls covering the whole box: every token counts
    RegionSpec cover = two_circles(0.0, 10.0, 10.0);
    CHECK(empirical_ajk(cover, 0, 1, 5000, 0.0, NoiseKind::UniformBall, 4) == 1.0);

    // convergence at eps = 0 within binomial error
    RegionSpec spec = two_circles(1.0);
    const double mu = oracle_coselect_measure(spec, 0, 1, OracleMode::Analytic2D).value;
    const std::uint64_t n = 200000;
    const double a = empirical_ajk(spec, 0, 1, n, 0.0, NoiseKind::UniformBall, 5);
    const double se = std::sqrt(mu * (1.0 - mu) / static_cast<double>(n));
    CHECK(std::abs(a - mu) <= 4.0 * se);

    // symmetry is exact: same indicator, same stream
    CHECK(empirical_ajk(spec, 0, 1, 1000, 0.05, NoiseKind::UniformBall, 6) ==
          empirical_ajk(spec, 1, 0, 1000, 0.05, NoiseKind::UniformBall, 6));

    // determinism
    CHECK(empirical_ajk(spec, 0, 1, 1000, 0.05, NoiseKind::SphereSurface, 7) ==
          empirical_ajk(spec, 0, 1, 1000, 0.05, NoiseKind::SphereSurface, 7));
}

TEST_CASE("oracle measure is monotone in center distance") {
    double prev = 1e300;
    for (double dist : {0.2, 0.6, 1.0, 1.4, 1.8}) {
        RegionSpec spec = two_circles(dist);
        const double mu = oracle_coselect_measure(spec, 0, 1, OracleMode::Analytic2D).value;
        CHECK(mu <= prev);
        prev = mu;
    }
}

TEST_CASE("gamma radius: worked value and argument checks") {
    CHECK(theorem1_gamma(2000, 0.05, 0.0, 0.0) == doctest::Approx(0.03037).epsilon(2e-4));
    CHECK(theorem1_gamma(2000, 0.05, 0.0, 0.0) ==
          doctest::Approx(std::sqrt(std::log(40.0) / 4000.0)).epsilon(1e-15));
    CHECK(theorem1_gamma(100, 0.1, 0.2, 1.5) ==
          doctest::Approx(std::sqrt(std::log(20.0) / 200.0) + 0.3).epsilon(1e-15));
    CHECK_THROWS_AS(theorem1_gamma(0, 0.05, 0.0, 0.0), ArgumentError);
    CHECK_THROWS_AS(theorem1_gamma(100, 1.5, 0.0, 0.0), ArgumentError);
}

TEST_CASE("hoeffding bound holds at eps = 0 with the expected confidence") {
    RegionSpec spec = two_circles(1.0);
    const double mu = oracle_coselect_measure(spec, 0, 1, OracleMode::Analytic2D).value;
    Theorem1Report rep =
        check_theorem1(spec, {0, 1}, 500, 0.0, 0.05, 200, 0.0, NoiseKind::UniformBall, 11, mu);
    const double slack = 2.0 * std::sqrt(0.05 * 0.95 / 200.0);
    CHECK(rep.violation_rate <= 0.05 + slack);
    CHECK(rep.results.size() == 200);
    // trial results are reproducible
    Theorem1Report rep2 =
        check_theorem1(spec, {0, 1}, 500, 0.0, 0.05, 200, 0.0, NoiseKind::UniformBall, 11, mu);
    CHECK(rep.results[7].a_jk == rep2.results[7].a_jk);
}

TEST_CASE("calibrated constant bounds the measured drift under contamination") {
    RegionSpec spec = two_circles(1.0);
    const double mu = oracle_coselect_measure(spec, 0, 1, OracleMode::Analytic2D).value;
    const std::pair<int, int> pair{0, 1};
    const double l_tilde =
        calibrate_l_tilde(spec, std::span(&pair, 1), 0.1, OracleMode::Analytic2D);
    CHECK(l_tilde > 0.0);

    for (NoiseKind noise : {NoiseKind::UniformBall, NoiseKind::AdversarialBoundary}) {
        for (double eps : {0.01, 0.05, 0.1}) {
            Theorem1Report rep =
                check_theorem1(spec, pair, 1000, eps, 0.05, 100, l_tilde, noise, 13, mu);
            const double slack = 2.0 * std::sqrt(0.05 * 0.95 / 100.0);
            CHECK(rep.violation_rate <= 0.05 + slack);
        }
    }
}

TEST_CASE("escape fraction: zero at eps 0, monotone-ish, bounded by the expansion measure") {
    RegionSpec spec = two_circles(1.0);
    CHECK(escape_fraction(spec, 0, 1, 0.0, NoiseKind::AdversarialBoundary, 2000, 17) == 0.0);

    const double e1 = escape_fraction(spec, 0, 1, 0.02, NoiseKind::AdversarialBoundary, 20000, 17);
    const double e2 = escape_fraction(spec, 0, 1, 0.05, NoiseKind::AdversarialBoundary, 20000, 17);
    const double e3 = escape_fraction(spec, 0, 1, 0.15, NoiseKind::AdversarialBoundary, 20000, 17);
    CHECK(e1 > 0.0);
    CHECK(e1 < 1.0);
    CHECK(e1 <= e2 + 0.02);
    CHECK(e2 <= e3 + 0.02);

    // escaping mass is controlled by the expansion-measure bound
    const double mu = oracle_coselect_measure(spec, 0, 1, OracleMode::Analytic2D).value;
    const double grown = region_pair_measure(spec, 0, 1, 0.05, OracleMode::Analytic2D).value;
    const double escape_mass = e2 * mu;
    const double se = std::sqrt(e2 * (1.0 - e2) / 20000.0) * mu;
    CHECK(escape_mass <= (grown - mu) + 4.0 * se);

    CHECK_THROWS_AS(escape_fraction(two_circles(2.5), 0, 1, 0.05, NoiseKind::UniformBall, 100, 1),
                    ArgumentError);
}

TEST_CASE("prop1 checks: averaging fixture, identity skip, 2x2 equality case") {
    Matrix avg(4, 4, 0.25);
    Prop1Report r = check_prop1(avg, 200, 2, 19);
    CHECK(r.applicable);
    CHECK(r.rho == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(r.pass);
    CHECK(r.topk_changes == 0);

    Prop1Report skip = check_prop1(Matrix::identity(4), 10, 2, 19);
    CHECK_FALSE(skip.applicable);
    CHECK(skip.skip_reason == "induced graph is not connected");

    Matrix bad(3, 3, 0.5);
    Prop1Report notds = check_prop1(bad, 10, 1, 19);
    CHECK_FALSE(notds.applicable);
    CHECK(notds.skip_reason == "matrix is not doubly stochastic within 1e-6");

    Matrix two(2, 2, 0.4);
    two(0, 0) = 0.6;
    two(1, 1) = 0.6;
    Prop1Report r2 = check_prop1(two, 500, 1, 19);
    CHECK(r2.applicable);
    CHECK(r2.rho == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(r2.pass);

    // the mean-zero eigenvector attains the contraction bound with equality
    Vec v{1.0 / std::sqrt(2.0), -1.0 / std::sqrt(2.0)};
    Vec av = matvec(two, v);
    CHECK(norm2(av) == doctest::Approx(0.2 * norm2(v)).epsilon(1e-12));
    CHECK(av[0] == doctest::Approx(0.2 * v[0]).epsilon(1e-12));
}

TEST_CASE("prop1 holds over random sinkhorn-normalized adjacencies") {
    for (int rep = 0; rep < 10; ++rep) {
        Matrix a = random_doubly_stochastic(3 + rep * 3, 1000 + rep);
        Prop1Report r = check_prop1(a, 200, 2, 31 + rep);
        CHECK(r.applicable);
        CHECK(r.pass);
        CHECK(r.worst_contraction_slack <= Prop1Report::kTol);
        CHECK(r.worst_nonexpansion_slack <= Prop1Report::kTol);
        CHECK(r.fixed_point_error <= Prop1Report::kTol);
    }
}

TEST_CASE("consistency rate: error shrinks at roughly the square-root rate") {
    RegionSpec spec = two_circles(1.0);
    const double mu = oracle_coselect_measure(spec, 0, 1, OracleMode::Analytic2D).value;
    const std::uint64_t grid[] = {100, 1000, 10000};
    ConvergenceFit fit = consistency_rate(spec, {0, 1}, grid, 16, 37, mu);
    CHECK(fit.points.size() == 3);
    CHECK(fit.points[0].max_abs_error > fit.points[2].max_abs_error);
    CHECK(fit.slope < -0.2);
    CHECK(fit.slope > -0.8);
}

TEST_CASE("algorithm-1 statistics match the geometric indicator on covering configurations") {
    // geometry where TopK-by-gate membership and ball membership coincide:
    // the two near balls cover the box, the third ball sits far away.
    RegionSpec spec;
    spec.dim = 2;
    spec.domain.lo = {-1.0, -1.0};
    spec.domain.hi = {1.0, 1.0};
    spec.centers = Matrix(3, 2, 0.0);
    spec.centers(0, 0) = -0.25;
    spec.centers(1, 0) = 0.25;
    spec.centers(2, 0) = 10.0;
    spec.radii = {5.0, 5.0, 0.5};

    // nearest-center router: w_j = center_j, b_j = -||w_j||^2 / 2
    Matrix w = spec.centers;
    Vec b(3);
    for (int j = 0; j < 3; ++j) b[j] = -0.5 * dot(w.row(j), w.row(j));
    RouterParams router = make_linear_router(w, b);

    const std::size_t n = 2000;
    RandomStream rng(41);
    Matrix tokens(n, 2);
    for (std::size_t i = 0; i < n; ++i) {
        auto x = tokens.row(i);
        rng.point_in_box(x, spec.domain.lo, spec.domain.hi);
    }

    AdjacencyState state(3, 0.9, NormMode::RowNorm);
    TokenBatch batch{tokens};
    Matrix scores = compute_scores(router, batch);
    RouteResult route = baseline_route(scores, 2);
    accumulate_coselect(state, route.base_selection);

    // geometric counts on the same tokens
    Matrix geo(3, 3, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k)
                if (j != k && in_coselect_region(spec, j, k, tokens.row(i))) geo(j, k) += 1.0;

    for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k)
            if (j != k) CHECK(state.accumulator(j, k) == geo(j, k));
    CHECK(state.accumulator(0, 1) == static_cast<double>(n));
    CHECK(state.accumulator(0, 2) == 0.0);
}
