// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "symphony/matrix.hpp"
#include "symphony/rng.hpp"

namespace symphony {

struct Box {
    Vec lo;
    Vec hi;

    std::size_t dim() const { return lo.size(); }
    double volume() const;
    double diameter() const;
    bool contains(std::span<const double> x) const;
    void validate() const;
};

// Ground-truth selection geometry: M ball regions inside an axis-aligned
// domain box carrying the uniform probability measure.
struct RegionSpec {
    std::size_t dim = 0;
    Matrix centers; // M x dim
    Vec radii;      // M
    Box domain;

    std::size_t count() const { return centers.rows(); }
    void validate() const;
};

enum class OracleMode { Analytic2D, MonteCarloDense };
enum class NoiseKind { UniformBall, SphereSurface, AdversarialBoundary };

const char* noise_kind_name(NoiseKind k);
NoiseKind noise_kind_from_name(const std::string& name);

// Area of the intersection of two circles with radii r1, r2 and center
// distance dist.
double circle_lens_area(double r1, double r2, double dist);

struct MeasureEstimate {
    double value = 0.0;
    double std_error = 0.0; // 0 for the analytic oracle
    std::uint64_t samples = 0;
};

// mu(B_j(R_j + grow) intersect B_k(R_k + grow)) under the uniform measure on
// the domain box. Analytic2D is exact (dim == 2 only); MonteCarloDense uses
// chunked sampling whose result is independent of the thread count.
MeasureEstimate region_pair_measure(const RegionSpec& spec, int j, int k, double grow,
                                    OracleMode mode, std::uint64_t mc_samples = 10'000'000,
                                    std::uint64_t seed = 9001);

inline MeasureEstimate oracle_coselect_measure(const RegionSpec& spec, int j, int k,
                                               OracleMode mode,
                                               std::uint64_t mc_samples = 10'000'000,
                                               std::uint64_t seed = 9001) {
    return region_pair_measure(spec, j, k, 0.0, mode, mc_samples, seed);
}

bool in_coselect_region(const RegionSpec& spec, int j, int k, std::span<const double> x);

// Whether ball j (grown by `grow`) fits inside the domain box. The analytic
// oracle requires this; the Monte Carlo paths do not.
bool ball_inside_domain(const RegionSpec& spec, int j, double grow);

// Applies one noise draw of magnitude <= eps to x in place. Adversarial mode
// moves points inside C_jk a full eps step away from the center whose ball
// boundary is nearest (points outside are left alone); the other modes are
// independent of the region.
void apply_region_noise(const RegionSpec& spec, int j, int k, NoiseKind kind, double eps,
                        std::span<double> x, RandomStream& rng);

// (1/N) sum of indicators that a noisy uniform token lands in C_jk.
double empirical_ajk(const RegionSpec& spec, int j, int k, std::uint64_t n, double eps,
                     NoiseKind kind, std::uint64_t seed);

// Fraction of n samples drawn inside C_jk that the noise pushes out of it.
double escape_fraction(const RegionSpec& spec, int j, int k, double eps, NoiseKind kind,
                       std::uint64_t n, std::uint64_t seed);

// Fits the input-space constant as the largest per-pair expansion rate
// (mu(C^eps) - mu(C)) / eps at the reference eps.
double calibrate_l_tilde(const RegionSpec& spec,
                         std::span<const std::pair<int, int>> pairs, double ref_eps,
                         OracleMode mode, std::uint64_t mc_samples = 10'000'000,
                         std::uint64_t seed = 9001);

} // namespace symphony
