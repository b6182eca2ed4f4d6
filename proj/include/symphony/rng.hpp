// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace symphony {

// Derives an independent stream seed from (base, stream). Used everywhere a
// run fans out into trials so that results are independent of execution order
// and thread count.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

// Deterministic random stream. The engine (mt19937_64) is bit-stable across
// platforms; the distribution helpers below avoid std::*_distribution, whose
// output is implementation-defined.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next_u64() { return eng_(); }

    // Uniform in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Uniform integer in [lo, hi] via rejection.
    int uniform_int(int lo, int hi);

    // Standard normal (Box-Muller, cached pair).
    double normal();

    void fill_normal(std::span<double> out, double scale = 1.0);
    void fill_uniform(std::span<double> out, double lo, double hi);

    // Uniform direction on the unit sphere in out.size() dimensions.
    void direction(std::span<double> out);

    // Uniform point in the ball of given radius centered at the origin.
    void point_in_ball(std::span<double> out, double radius);

    // Uniform point in the axis-aligned box [lo, hi].
    void point_in_box(std::span<double> out, std::span<const double> lo, std::span<const double> hi);

private:
    std::mt19937_64 eng_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

} // namespace symphony
