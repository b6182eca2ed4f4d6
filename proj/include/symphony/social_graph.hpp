// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "symphony/router.hpp"

namespace symphony {

enum class NormMode { RowNorm, Sinkhorn };

const char* norm_mode_name(NormMode m);
NormMode norm_mode_from_name(const std::string& name);

// Expert social graph: the smoothed adjacency A, the raw co-selection
// accumulator for the current batch window, and the EMA bookkeeping.
// update_count == 0 iff A is still the all-zeros bootstrap matrix.
struct AdjacencyState {
    Matrix adjacency;
    Matrix accumulator;
    double beta = 0.9;
    NormMode norm_mode = NormMode::Sinkhorn;
    long update_count = 0;
    bool frozen = false;
    bool include_diagonal = true;
    // Ablation only: entries below the threshold are zeroed after each EMA
    // step. 0 keeps the graph dense (the default and the better setting).
    double sparsify_threshold = 0.0;

    AdjacencyState() = default;
    AdjacencyState(std::size_t experts, double beta, NormMode mode);

    std::size_t experts() const { return adjacency.rows(); }
    void validate() const;
};

// accumulator += s_i s_i^T for each token's one-hot-K selection vector s_i.
void accumulate_coselect(AdjacencyState& state, const SelectionRecord& selections);

// Normalizes a nonnegative count matrix. RowNorm divides each row by its sum
// (all-zero rows fall back to the identity row); Sinkhorn alternates row and
// column scaling on counts + 1e-8 I until doubly stochastic within 1e-6 or
// 100 iterations, then re-symmetrizes.
Matrix normalize_counts(const Matrix& counts, NormMode mode);

// A <- beta A + (1 - beta) Normalize(accumulator); the first update assigns
// the normalized counts directly. Resets the accumulator.
void normalize_and_ema(AdjacencyState& state);

// Smoothed gates A . g per token; bootstrap (update_count == 0) passes the
// dense gates through unchanged.
Matrix symphony_gate(const AdjacencyState& state, const Matrix& dense_gates);

struct RouteResult {
    Matrix dense_gates;    // softmax(scores)
    Matrix smoothed_gates; // A . dense (== dense at bootstrap / baseline)
    GateMatrix gates;      // sparse mixing weights
    SelectionRecord selection;      // routing TopK (on smoothed gates)
    SelectionRecord base_selection; // TopK of the dense gates (what counting uses)
};

// Softmax-first SMoE gate, kept in the same result shape as symphony_route.
RouteResult baseline_route(const Matrix& scores, int k,
                           GateConvention convention = GateConvention::Raw);

// Dense softmax -> adjacency smoothing -> TopK on the smoothed gates. While
// the state is not frozen the base-gate TopK is accumulated into the
// co-selection counts as a side effect.
RouteResult symphony_route(AdjacencyState& state, const Matrix& scores, int k,
                           GateConvention convention = GateConvention::Raw);

struct SpectralReport {
    Vec eigenvalues; // descending; singular values when symmetric_spectrum is false
    double lambda_max = 0.0;
    double rho = 0.0; // second-largest absolute eigenvalue
    bool connected = false;
    bool symmetric_spectrum = true;
    std::optional<double> margin; // TopK margin of A . gate_row when requested
};

SpectralReport spectral_report_matrix(const Matrix& a, bool symmetric_spectrum,
                                      std::span<const double> gate_row = {}, int margin_k = 2);
SpectralReport spectral_report(const AdjacencyState& state,
                               std::span<const double> gate_row = {}, int margin_k = 2);

// True iff the graph with edges {a_jk > 1e-12, j != k} is connected.
bool graph_connected(const Matrix& a, double threshold = 1e-12);

bool is_doubly_stochastic(const Matrix& a, double tol = 1e-6);
bool is_symmetric(const Matrix& a, double tol = 1e-9);

struct OverheadEstimate {
    std::uint64_t train_flops = 0;
    std::uint64_t infer_flops = 0;
    std::uint64_t train_bytes = 0;
    std::uint64_t infer_bytes = 0;
};

// Closed-form cost of the social graph: infer_bytes = L M^2 b,
// train_bytes = L (M^2 + N C(K,2)) b, infer_flops = L N M^2,
// train_flops = L N (M^2 + C(K,2)).
OverheadEstimate estimate_overhead(std::uint64_t experts, std::uint64_t k, std::uint64_t tokens,
                                   std::uint64_t layers, std::uint64_t bytes_per_entry);

// Binary-unit strings matching the calculator's reference output: bytes as
// MiB ("39.875") and FLOP counts in units of 2^30 rounded to two decimals
// with trailing zeros trimmed ("14.51", "14.5").
std::string format_mib(std::uint64_t bytes);
std::string format_gflops(std::uint64_t flops);

} // namespace symphony
