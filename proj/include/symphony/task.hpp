// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "symphony/geometry.hpp"

namespace symphony {

enum class TaskKind { MixtureRegression, RegionClassification };

const char* task_kind_name(TaskKind k);
TaskKind task_kind_from_name(const std::string& name);

struct TaskParams {
    TaskKind kind = TaskKind::MixtureRegression;
    std::size_t dim = 2;
    std::size_t regions = 12;
    std::size_t out_dim = 2; // classification forces out_dim == regions
    double radius = 0.3;
    double box_lo = -1.0;
    double box_hi = 1.0;
    double sigma_obs = 0.02;
    std::size_t train_size = 4096;
    std::size_t valid_size = 1024;
    std::size_t test_size = 1024;

    void validate() const;
};

struct Dataset {
    Matrix inputs;           // n x dim
    Matrix targets;          // n x out_dim (regression) / n x 0 (classification)
    std::vector<int> labels; // ground-truth region per token

    std::size_t size() const { return inputs.rows(); }
};

// Region-structured synthetic data: tokens uniform on the box, the target a
// per-region affine map of the input (or the region index for
// classification). Regeneration from (params, seed) is bit-identical.
struct SyntheticTask {
    TaskParams params;
    RegionSpec regions;
    std::vector<Matrix> maps; // per region: out_dim x dim
    Matrix offsets;           // regions x out_dim
    Dataset train;
    Dataset valid;
    Dataset test;

    std::size_t out_dim() const {
        return params.kind == TaskKind::RegionClassification ? params.regions : params.out_dim;
    }
};

// Index of the nearest center, ties resolved toward the lowest index.
int nearest_region(const Matrix& centers, std::span<const double> x);

SyntheticTask generate_task(const TaskParams& params, std::uint64_t seed);

// Returns tokens + delta with ||delta_i|| <= eps per token; eps = 0 is the
// identity. Adversarial mode steps toward the nearest region boundary of the
// nearest-center partition and needs the centers.
Matrix contaminate(const Matrix& tokens, double eps, NoiseKind kind, std::uint64_t seed,
                   const Matrix* centers = nullptr);

} // namespace symphony
