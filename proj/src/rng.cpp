// SPDX-License-Identifier: Apache-2.0
#include "symphony/rng.hpp"

#include <cmath>
#include <numbers>

namespace symphony {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

} // namespace

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
    return splitmix64(splitmix64(base) ^ splitmix64(stream * 0x9e3779b97f4a7c15ULL + 1));
}

int RandomStream::uniform_int(int lo, int hi) {
    const std::uint64_t range = static_cast<std::uint64_t>(hi - lo) + 1;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % range;
    std::uint64_t x;
    do {
        x = eng_();
    } while (x >= limit);
    return lo + static_cast<int>(x % range);
}

double RandomStream::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    const double u1 = 1.0 - uniform01(); // (0, 1]
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
}

void RandomStream::fill_normal(std::span<double> out, double scale) {
    for (double& v : out) v = scale * normal();
}

void RandomStream::fill_uniform(std::span<double> out, double lo, double hi) {
    for (double& v : out) v = uniform(lo, hi);
}

void RandomStream::direction(std::span<double> out) {
    double n = 0.0;
    do {
        fill_normal(out);
        n = 0.0;
        for (double v : out) n += v * v;
    } while (n == 0.0);
    n = std::sqrt(n);
    for (double& v : out) v /= n;
}

void RandomStream::point_in_ball(std::span<double> out, double radius) {
    direction(out);
    const double d = static_cast<double>(out.size());
    const double r = radius * std::pow(uniform01(), 1.0 / d);
    for (double& v : out) v *= r;
}

void RandomStream::point_in_box(std::span<double> out, std::span<const double> lo,
                                std::span<const double> hi) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = uniform(lo[i], hi[i]);
}

} // namespace symphony
