// SPDX-License-Identifier: Apache-2.0
#include "symphony/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "symphony/errors.hpp"
#include "symphony/parallel.hpp"

namespace symphony {

double Box::volume() const {
    double v = 1.0;
    for (std::size_t i = 0; i < dim(); ++i) v *= hi[i] - lo[i];
    return v;
}

double Box::diameter() const {
    double s = 0.0;
    for (std::size_t i = 0; i < dim(); ++i) s += (hi[i] - lo[i]) * (hi[i] - lo[i]);
    return std::sqrt(s);
}

bool Box::contains(std::span<const double> x) const {
    for (std::size_t i = 0; i < dim(); ++i)
        if (x[i] < lo[i] || x[i] > hi[i]) return false;
    return true;
}

void Box::validate() const {
    if (lo.empty() || lo.size() != hi.size())
        throw ArgumentError("box bounds must be non-empty and equally sized");
    for (std::size_t i = 0; i < dim(); ++i)
        if (!(lo[i] < hi[i])) throw ArgumentError("box bounds must satisfy lo < hi");
}

void RegionSpec::validate() const {
    domain.validate();
    if (dim != domain.dim() || centers.cols() != dim)
        throw DimensionError("region spec dimensions disagree");
    if (centers.rows() < 1 || radii.size() != centers.rows())
        throw ArgumentError("region spec needs one radius per center");
    if (!centers.all_finite() || !all_finite(radii))
        throw ArgumentError("region spec contains non-finite entries");
    for (std::size_t j = 0; j < count(); ++j)
        if (!(radii[j] > 0.0)) throw ArgumentError("region radii must be positive");
}

bool ball_inside_domain(const RegionSpec& spec, int j, double grow) {
    for (std::size_t i = 0; i < spec.dim; ++i) {
        if (spec.centers(j, i) - (spec.radii[j] + grow) < spec.domain.lo[i] - 1e-12 ||
            spec.centers(j, i) + (spec.radii[j] + grow) > spec.domain.hi[i] + 1e-12)
            return false;
    }
    return true;
}

const char* noise_kind_name(NoiseKind k) {
    switch (k) {
    case NoiseKind::UniformBall: return "uniform_ball";
    case NoiseKind::SphereSurface: return "sphere_surface";
    case NoiseKind::AdversarialBoundary: return "adversarial";
    }
    return "unknown";
}

NoiseKind noise_kind_from_name(const std::string& name) {
    if (name == "uniform_ball") return NoiseKind::UniformBall;
    if (name == "sphere_surface") return NoiseKind::SphereSurface;
    if (name == "adversarial") return NoiseKind::AdversarialBoundary;
    throw ArgumentError("unknown noise kind: " + name);
}

double circle_lens_area(double r1, double r2, double dist) {
    if (r1 <= 0.0 || r2 <= 0.0) throw ArgumentError("lens area needs positive radii");
    if (dist < 0.0) throw ArgumentError("lens area needs nonnegative distance");
    if (dist >= r1 + r2) return 0.0;
    if (dist <= std::abs(r1 - r2)) {
        const double r = std::min(r1, r2);
        return std::numbers::pi * r * r;
    }
    const double a1 = std::acos((dist * dist + r1 * r1 - r2 * r2) / (2.0 * dist * r1));
    const double a2 = std::acos((dist * dist + r2 * r2 - r1 * r1) / (2.0 * dist * r2));
    const double kite = 0.5 * std::sqrt((-dist + r1 + r2) * (dist + r1 - r2) *
                                        (dist - r1 + r2) * (dist + r1 + r2));
    return r1 * r1 * a1 + r2 * r2 * a2 - kite;
}

namespace {

double center_distance(const RegionSpec& spec, int j, int k) {
    double s = 0.0;
    for (std::size_t i = 0; i < spec.dim; ++i) {
        const double d = spec.centers(j, i) - spec.centers(k, i);
        s += d * d;
    }
    return std::sqrt(s);
}

bool in_ball(const RegionSpec& spec, int j, double grow, std::span<const double> x) {
    double s = 0.0;
    for (std::size_t i = 0; i < spec.dim; ++i) {
        const double d = x[i] - spec.centers(j, i);
        s += d * d;
    }
    const double r = spec.radii[j] + grow;
    return s <= r * r;
}

void check_pair(const RegionSpec& spec, int j, int k) {
    const int m = static_cast<int>(spec.count());
    if (j < 0 || k < 0 || j >= m || k >= m)
        throw ArgumentError("region pair index out of range");
    if (j == k) throw ArgumentError("co-selection region needs two distinct experts");
}

constexpr std::uint64_t kChunk = 1u << 16;

} // namespace

MeasureEstimate region_pair_measure(const RegionSpec& spec, int j, int k, double grow,
                                    OracleMode mode, std::uint64_t mc_samples,
                                    std::uint64_t seed) {
    spec.validate();
    check_pair(spec, j, k);

    if (mode == OracleMode::Analytic2D) {
        if (spec.dim != 2)
            throw ArgumentError("analytic oracle is defined for dim == 2 only");
        if (!ball_inside_domain(spec, j, grow) || !ball_inside_domain(spec, k, grow))
            throw ArgumentError("analytic oracle requires both balls inside the domain box");
        const double lens = circle_lens_area(spec.radii[j] + grow, spec.radii[k] + grow,
                                             center_distance(spec, j, k));
        return {lens / spec.domain.volume(), 0.0, 0};
    }

    if (mc_samples < 1) throw ArgumentError("monte carlo oracle needs samples >= 1");
    const std::uint64_t chunks = (mc_samples + kChunk - 1) / kChunk;
    std::vector<std::uint64_t> hits(chunks, 0);
    parallel_for(chunks, [&](std::size_t c) {
        RandomStream rng(derive_seed(seed, c));
        const std::uint64_t lo = static_cast<std::uint64_t>(c) * kChunk;
        const std::uint64_t count = std::min<std::uint64_t>(kChunk, mc_samples - lo);
        Vec x(spec.dim);
        std::uint64_t local = 0;
        for (std::uint64_t i = 0; i < count; ++i) {
            rng.point_in_box(x, spec.domain.lo, spec.domain.hi);
            if (in_ball(spec, j, grow, x) && in_ball(spec, k, grow, x)) ++local;
        }
        hits[c] = local;
    });
    std::uint64_t total = 0;
    for (std::uint64_t h : hits) total += h;
    const double p = static_cast<double>(total) / static_cast<double>(mc_samples);
    const double se = std::sqrt(std::max(p * (1.0 - p), 0.0) / static_cast<double>(mc_samples));
    return {p, se, mc_samples};
}

bool in_coselect_region(const RegionSpec& spec, int j, int k, std::span<const double> x) {
    return in_ball(spec, j, 0.0, x) && in_ball(spec, k, 0.0, x);
}

void apply_region_noise(const RegionSpec& spec, int j, int k, NoiseKind kind, double eps,
                        std::span<double> x, RandomStream& rng) {
    if (eps < 0.0) throw ArgumentError("noise magnitude must be nonnegative");
    if (eps == 0.0) return;
    const std::size_t d = x.size();
    Vec delta(d, 0.0);
    switch (kind) {
    case NoiseKind::UniformBall:
        rng.point_in_ball(delta, eps);
        break;
    case NoiseKind::SphereSurface:
        rng.direction(delta);
        for (double& v : delta) v *= eps;
        break;
    case NoiseKind::AdversarialBoundary: {
        if (!in_coselect_region(spec, j, k, x)) return;
        // Step away from the center whose ball boundary is closest; this is
        // the shortest escape route from the intersection.
        double best_slack = std::numeric_limits<double>::infinity();
        int best = j;
        for (int c : {j, k}) {
            double dist = 0.0;
            for (std::size_t i = 0; i < d; ++i) {
                const double dd = x[i] - spec.centers(c, i);
                dist += dd * dd;
            }
            dist = std::sqrt(dist);
            const double slack = spec.radii[c] - dist;
            if (slack < best_slack) {
                best_slack = slack;
                best = c;
            }
        }
        double nrm = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            delta[i] = x[i] - spec.centers(best, i);
            nrm += delta[i] * delta[i];
        }
        nrm = std::sqrt(nrm);
        if (nrm == 0.0) {
            std::fill(delta.begin(), delta.end(), 0.0);
            delta[0] = 1.0;
            nrm = 1.0;
        }
        for (double& v : delta) v *= eps / nrm;
        break;
    }
    }
    for (std::size_t i = 0; i < d; ++i) x[i] += delta[i];
}

double empirical_ajk(const RegionSpec& spec, int j, int k, std::uint64_t n, double eps,
                     NoiseKind kind, std::uint64_t seed) {
    spec.validate();
    check_pair(spec, j, k);
    if (n < 1) throw ArgumentError("empirical estimate needs n >= 1");
    RandomStream rng(derive_seed(seed, 0xa1a1));
    Vec x(spec.dim);
    std::uint64_t hits = 0;
    for (std::uint64_t i = 0; i < n; ++i) {
        rng.point_in_box(x, spec.domain.lo, spec.domain.hi);
        apply_region_noise(spec, j, k, kind, eps, x, rng);
        if (in_coselect_region(spec, j, k, x)) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(n);
}

double escape_fraction(const RegionSpec& spec, int j, int k, double eps, NoiseKind kind,
                       std::uint64_t n, std::uint64_t seed) {
    spec.validate();
    check_pair(spec, j, k);
    if (n < 1) throw ArgumentError("escape fraction needs n >= 1");
    if (center_distance(spec, j, k) >= spec.radii[j] + spec.radii[k])
        throw ArgumentError("co-selection region is empty");

    RandomStream rng(derive_seed(seed, 0xe5ca));
    Vec x(spec.dim);
    std::uint64_t escaped = 0;
    const std::uint64_t max_attempts = 100000ull * n;
    std::uint64_t attempts = 0;
    for (std::uint64_t i = 0; i < n; ++i) {
        // Rejection-sample a point of C_jk from ball j.
        do {
            if (++attempts > max_attempts)
                throw NumericalError("could not sample the co-selection region");
            rng.point_in_ball(x, spec.radii[j]);
            for (std::size_t c = 0; c < spec.dim; ++c) x[c] += spec.centers(j, c);
        } while (!in_ball(spec, k, 0.0, x));
        apply_region_noise(spec, j, k, kind, eps, x, rng);
        if (!in_coselect_region(spec, j, k, x)) ++escaped;
    }
    return static_cast<double>(escaped) / static_cast<double>(n);
}

double calibrate_l_tilde(const RegionSpec& spec, std::span<const std::pair<int, int>> pairs,
                         double ref_eps, OracleMode mode, std::uint64_t mc_samples,
                         std::uint64_t seed) {
    if (!(ref_eps > 0.0)) throw ArgumentError("calibration epsilon must be positive");
    if (pairs.empty()) throw ArgumentError("calibration needs at least one pair");
    double l_tilde = 0.0;
    for (const auto& [j, k] : pairs) {
        const double base = region_pair_measure(spec, j, k, 0.0, mode, mc_samples, seed).value;
        const double grown =
            region_pair_measure(spec, j, k, ref_eps, mode, mc_samples, derive_seed(seed, 7)).value;
        l_tilde = std::max(l_tilde, (grown - base) / ref_eps);
    }
    return l_tilde;
}

} // namespace symphony
