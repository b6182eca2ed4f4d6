// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>

#include "symphony/manifest.hpp"
#include "symphony/theory.hpp"

namespace symphony {

struct Model {
    RouterParams router;
    ExpertSet experts;
    AdjacencyState adjacency; // unused in baseline mode but kept for symmetry
    RoutingMode mode = RoutingMode::Baseline;
    GateConvention convention = GateConvention::Raw;
    int k = 2;
    std::uint64_t seed = 0;
};

// Deterministic model assembly: identical (manifest, seed) pairs produce
// bit-identical parameters, and the expert/router streams do not depend on
// the routing mode, so baseline and symphony runs start from the same point.
Model build_model(const RunManifest& manifest, const SyntheticTask& task, std::uint64_t seed);

void save_checkpoint(const Model& model, const std::string& dir);
Model load_checkpoint(const std::string& dir);

double dataset_loss(const Model& model, const Dataset& ds, const Matrix* inputs_override,
                    TaskKind kind);

struct EpochMetrics {
    int epoch = 0;
    double train_loss = 0.0;
    double valid_loss = 0.0;
    double entropy_ratio = 0.0;
    Vec frequency;
    double rho = 0.0;
    double wall_ms_per_batch = 0.0;
};

struct TrainResult {
    Model model;
    std::vector<EpochMetrics> curve;
};

// SGD with momentum over the routed layer; in symphony mode each batch also
// runs one adjacency normalize + EMA step, and a snapshot per epoch lands in
// out_dir when given. Loss divergence dumps diagnostics and throws
// NumericalError.
TrainResult train_model(const RunManifest& manifest, const SyntheticTask& task,
                        std::uint64_t seed, const std::string& out_dir, bool quiet);

struct EvalCell {
    std::uint64_t run_seed = 0;
    double eps_multiplier = 0.0;
    double epsilon = 0.0;
    int noise_seed = 0;
    double loss = 0.0;
    double entropy_ratio = 0.0;
    Vec frequency;
    double rho = 0.0;
    double wall_ms = 0.0;
};

// Contaminated test-split evaluation over the epsilon grid. The adjacency is
// frozen for the duration; any mutation attempt raises FrozenError. Noise
// seeds derive from (task seed, cell) only, so matched-seed baseline and
// symphony runs see identical contaminated inputs.
std::vector<EvalCell> evaluate_model(Model& model, const SyntheticTask& task,
                                     std::span<const double> eps_multipliers, int noise_seeds,
                                     NoiseKind noise, std::uint64_t run_seed);

struct BenchRow {
    std::size_t experts = 0;
    std::size_t tokens = 0;
    double base_ms = 0.0;
    double symphony_ms = 0.0;
    double bypass_ms = 0.0;
    double delta_pct = 0.0;
    double bypass_delta_pct = 0.0;
    std::uint64_t pred_extra_flops = 0;
    std::uint64_t pred_extra_bytes = 0;
};

// Routing-only median wall times, baseline vs symphony vs bootstrap-bypassed
// symphony, alongside the analytic per-layer predictions. Pinned to one
// worker thread.
std::vector<BenchRow> bench_overhead(std::span<const std::size_t> m_grid,
                                     std::span<const std::size_t> n_grid, int k, int reps,
                                     std::size_t dim, std::uint64_t seed);

struct RunOptions {
    std::string manifest_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed_override;
    int threads = 0; // 0 keeps the current budget
    bool quiet = false;
};

// Manifest-driven commands. Each creates the run directory (which must not
// already contain files), copies the manifest in first, writes schema-
// versioned CSVs plus their .dat mirrors, and finishes with completed.txt.
void run_train(const RunOptions& opts);
void run_eval(const RunOptions& opts);
void run_attack_eval(const RunOptions& opts);
void run_verify_theorem1(const RunOptions& opts);
void run_verify_prop1(const RunOptions& opts);
void run_bench(const RunOptions& opts);
void run_dump_adjacency(const RunOptions& opts);

} // namespace symphony
