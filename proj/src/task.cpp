// SPDX-License-Identifier: Apache-2.0
#include "symphony/task.hpp"

#include <algorithm>
#include <cmath>

#include "symphony/errors.hpp"

namespace symphony {

namespace {

enum Stream : std::uint64_t {
    kCenters = 1,
    kMaps = 2,
    kTrain = 3,
    kValid = 4,
    kTest = 5,
};

} // namespace

const char* task_kind_name(TaskKind k) {
    return k == TaskKind::MixtureRegression ? "mixture_regression" : "region_classification";
}

TaskKind task_kind_from_name(const std::string& name) {
    if (name == "mixture_regression") return TaskKind::MixtureRegression;
    if (name == "region_classification") return TaskKind::RegionClassification;
    throw ArgumentError("unknown task kind: " + name);
}

void TaskParams::validate() const {
    if (dim < 1 || regions < 1 || out_dim < 1)
        throw ArgumentError("task dimensions must be >= 1");
    if (!(box_lo < box_hi)) throw ArgumentError("task box must satisfy lo < hi");
    if (!(radius > 0.0)) throw ArgumentError("task radius must be positive");
    if (2.0 * radius >= box_hi - box_lo)
        throw ArgumentError("task radius too large for the box");
    if (sigma_obs < 0.0) throw ArgumentError("observation noise must be nonnegative");
    if (train_size < 1 || valid_size < 1 || test_size < 1)
        throw ArgumentError("split sizes must be >= 1");
}

int nearest_region(const Matrix& centers, std::span<const double> x) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < centers.rows(); ++r) {
        double d = 0.0;
        for (std::size_t i = 0; i < centers.cols(); ++i) {
            const double v = x[i] - centers(r, i);
            d += v * v;
        }
        if (d < best_d) {
            best_d = d;
            best = static_cast<int>(r);
        }
    }
    return best;
}

namespace {

Dataset make_split(const SyntheticTask& task, std::size_t n, std::uint64_t seed) {
    const TaskParams& p = task.params;
    const std::size_t out = task.out_dim();
    RandomStream rng(seed);
    Dataset ds;
    ds.inputs = Matrix(n, p.dim);
    ds.labels.resize(n);
    const bool regression = p.kind == TaskKind::MixtureRegression;
    ds.targets = Matrix(n, regression ? out : 0);

    for (std::size_t i = 0; i < n; ++i) {
        auto x = ds.inputs.row(i);
        rng.point_in_box(x, task.regions.domain.lo, task.regions.domain.hi);
        const int r = nearest_region(task.regions.centers, x);
        ds.labels[i] = r;
        if (regression) {
            auto t = ds.targets.row(i);
            const Matrix& map = task.maps[r];
            for (std::size_t o = 0; o < out; ++o)
                t[o] = dot(map.row(o), x) + task.offsets(r, o) +
                       (p.sigma_obs > 0.0 ? p.sigma_obs * rng.normal() : 0.0);
        }
    }
    return ds;
}

} // namespace

SyntheticTask generate_task(const TaskParams& params, std::uint64_t seed) {
    params.validate();
    SyntheticTask task;
    task.params = params;

    const std::size_t d = params.dim;
    task.regions.dim = d;
    task.regions.domain.lo = Vec(d, params.box_lo);
    task.regions.domain.hi = Vec(d, params.box_hi);
    task.regions.centers = Matrix(params.regions, d);
    task.regions.radii = Vec(params.regions, params.radius);

    // Centers stay radius-deep inside the box so the region balls remain
    // contained (a RegionSpec invariant).
    RandomStream centers_rng(derive_seed(seed, kCenters));
    for (std::size_t r = 0; r < params.regions; ++r)
        for (std::size_t i = 0; i < d; ++i)
            task.regions.centers(r, i) =
                centers_rng.uniform(params.box_lo + params.radius, params.box_hi - params.radius);
    task.regions.validate();

    const std::size_t out = task.out_dim();
    RandomStream maps_rng(derive_seed(seed, kMaps));
    task.maps.resize(params.regions);
    task.offsets = Matrix(params.regions, out);
    for (std::size_t r = 0; r < params.regions; ++r) {
        task.maps[r] = Matrix(out, d);
        maps_rng.fill_normal({task.maps[r].data(), task.maps[r].size()});
        for (std::size_t o = 0; o < out; ++o) task.offsets(r, o) = maps_rng.uniform(-1.0, 1.0);
    }

    task.train = make_split(task, params.train_size, derive_seed(seed, kTrain));
    task.valid = make_split(task, params.valid_size, derive_seed(seed, kValid));
    task.test = make_split(task, params.test_size, derive_seed(seed, kTest));
    return task;
}

Matrix contaminate(const Matrix& tokens, double eps, NoiseKind kind, std::uint64_t seed,
                   const Matrix* centers) {
    if (eps < 0.0) throw ArgumentError("contamination magnitude must be nonnegative");
    if (eps == 0.0) return tokens;
    const std::size_t d = tokens.cols();
    Matrix out = tokens;
    RandomStream rng(derive_seed(seed, 0xc0417));
    Vec delta(d);
    for (std::size_t i = 0; i < tokens.rows(); ++i) {
        auto x = out.row(i);
        switch (kind) {
        case NoiseKind::UniformBall:
            rng.point_in_ball(delta, eps);
            break;
        case NoiseKind::SphereSurface:
            rng.direction(delta);
            for (double& v : delta) v *= eps;
            break;
        case NoiseKind::AdversarialBoundary: {
            if (centers == nullptr || centers->rows() < 2)
                throw ArgumentError("adversarial contamination needs region centers");
            // Step toward the closest nearest-center decision boundary.
            const int a = nearest_region(*centers, x);
            double best_dist = std::numeric_limits<double>::infinity();
            int b = -1;
            for (std::size_t r = 0; r < centers->rows(); ++r) {
                if (static_cast<int>(r) == a) continue;
                double gap2 = 0.0, da2 = 0.0, db2 = 0.0;
                for (std::size_t c = 0; c < d; ++c) {
                    const double g = (*centers)(r, c) - (*centers)(a, c);
                    gap2 += g * g;
                    const double va = x[c] - (*centers)(a, c);
                    const double vb = x[c] - (*centers)(r, c);
                    da2 += va * va;
                    db2 += vb * vb;
                }
                const double dist = (db2 - da2) / (2.0 * std::sqrt(gap2));
                if (dist < best_dist) {
                    best_dist = dist;
                    b = static_cast<int>(r);
                }
            }
            double nrm = 0.0;
            for (std::size_t c = 0; c < d; ++c) {
                delta[c] = (*centers)(b, c) - (*centers)(a, c);
                nrm += delta[c] * delta[c];
            }
            nrm = std::sqrt(nrm);
            for (double& v : delta) v *= eps / nrm;
            break;
        }
        }
        for (std::size_t c = 0; c < d; ++c) x[c] += delta[c];
    }
    return out;
}

} // namespace symphony
