// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>

#include "symphony/moe_layer.hpp"
#include "symphony/task.hpp"

namespace symphony {

struct OptimParams {
    double lr = 0.08;
    double momentum = 0.9;
    int epochs = 50;
    std::size_t batch_size = 64;
    double aux_weight = 0.01;
};

// Every run is fully determined by one of these; the hash of the canonical
// serialization is stamped into the run outputs.
struct RunManifest {
    // model
    RoutingMode mode = RoutingMode::Symphony;
    RouterKind router_kind = RouterKind::Linear;
    std::size_t experts = 16;
    int k = 2;
    double beta = 0.9;
    NormMode norm_mode = NormMode::Sinkhorn;
    GateConvention convention = GateConvention::Raw;
    bool include_diagonal = true;
    double sparsify_threshold = 0.0; // ablation only
    std::size_t hidden = 16;

    TaskParams task;
    OptimParams optim;

    // evaluation
    Vec epsilon_grid{0.0, 0.01, 0.05, 0.1, 0.2}; // multipliers of the domain diameter
    int eval_noise_seeds = 3;
    int run_seeds = 10;
    NoiseKind eval_noise = NoiseKind::UniformBall;
    std::string checkpoint; // optional: reuse a trained model

    std::uint64_t seed = 1;

    struct TheoremSection {
        std::string regions_file; // region spec path; empty uses the pair fixture below
        std::vector<std::pair<int, int>> pairs{{0, 1}};
        std::uint64_t n = 2000;
        double alpha = 0.05;
        int trials = 500;
        Vec epsilons{0.0};
        std::vector<NoiseKind> noises{NoiseKind::UniformBall};
        double l_tilde = -1.0; // < 0 means calibrate
        double calibration_epsilon = 0.1;
        std::uint64_t mc_samples = 10'000'000;
        std::vector<std::uint64_t> convergence_n;
        int convergence_trials = 64;
    } theorem;

    struct Prop1Section {
        std::string adjacency_file; // snapshot path; empty generates random matrices
        std::size_t experts = 8;
        int matrices = 20;
        int trials = 1000;
        int k = 2;
    } prop1;

    struct BenchSection {
        std::vector<std::size_t> m_grid{4, 16, 32, 64};
        std::vector<std::size_t> n_grid{256, 512, 1024, 2048, 4096};
        int reps = 15;
        std::size_t dim = 512;
    } bench;

    void validate() const;
};

RunManifest parse_manifest_text(const std::string& text);
RunManifest load_manifest(const std::string& path);

// Canonical key = value dump covering every field, defaults included.
std::string serialize_manifest(const RunManifest& m);

// FNV-1a over the canonical serialization.
std::uint64_t manifest_hash(const RunManifest& m);

} // namespace symphony
