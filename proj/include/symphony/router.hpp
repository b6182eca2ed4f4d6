// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "symphony/matrix.hpp"

namespace symphony {

struct TokenBatch {
    Matrix data; // n_tokens x dim

    std::size_t n_tokens() const { return data.rows(); }
    std::size_t dim() const { return data.cols(); }
    void validate() const;
};

enum class RouterKind { Linear, Cosine, Random };

const char* router_kind_name(RouterKind k);
RouterKind router_kind_from_name(const std::string& name);

// Expert embeddings W (M x D) and bias b (M). The Cosine kind scores tokens
// by cosine similarity in a projected space; Random is a Linear router whose
// parameters are frozen for the lifetime of the model.
struct RouterParams {
    RouterKind kind = RouterKind::Linear;
    Matrix weights; // M x D
    Vec bias;       // M
    Matrix cosine_proj;    // D_e x D, Cosine only
    Matrix cosine_experts; // M x D_e with unit rows, Cosine only
    double cosine_temperature = 1.0;

    std::size_t experts() const { return weights.rows(); }
    std::size_t dim() const { return weights.cols(); }
    void validate() const;
};

RouterParams make_linear_router(Matrix weights, Vec bias);
RouterParams make_cosine_router(Matrix weights, Vec bias, Matrix proj, Matrix expert_dirs,
                                double temperature);
RouterParams make_random_router(std::size_t experts, std::size_t dim, std::uint64_t seed);

enum class GateKind { Dense, SparseRaw, SparseNormalized };
enum class GateConvention { Raw, Renormalized };

const char* gate_convention_name(GateConvention c);
GateConvention gate_convention_from_name(const std::string& name);

// N x M gate values. Dense rows sum to 1; SparseNormalized rows have exactly
// k nonzeros summing to 1; SparseRaw rows keep the surviving dense values
// untouched (their sum is the mass captured by the selection).
struct GateMatrix {
    Matrix values;
    GateKind kind = GateKind::Dense;
    int k = 0;
};

// Per-token routing decision: indices sorted ascending, weights renormalized
// to sum to 1 over the selection.
struct SelectionRecord {
    std::vector<std::vector<int>> indices;
    std::vector<Vec> weights;

    std::size_t n_tokens() const { return indices.size(); }
};

enum class TieRule { LowestIndex };

// scores[i][j] = gamma_j(x_i).
Matrix compute_scores(const RouterParams& params, const TokenBatch& batch);

// Row-wise softmax with max subtraction; -inf scores map to exactly 0.
Matrix softmax_rows(const Matrix& scores);
Vec softmax_row(std::span<const double> scores);

// Indices of the k largest values, ties broken toward the lowest index,
// returned ascending.
std::vector<int> topk_select(std::span<const double> values, int k,
                             TieRule tie = TieRule::LowestIndex);

struct SparseGateResult {
    GateMatrix gates;
    SelectionRecord selection;
};

// Mask non-TopK logits to -inf, then softmax the survivors.
SparseGateResult smoe_gate_logits_first(const Matrix& scores, int k);

// Softmax first, then zero non-TopK gates; Raw keeps surviving values as-is,
// Renormalized divides them by their sum.
SparseGateResult smoe_gate_softmax_first(const Matrix& scores, int k,
                                         GateConvention convention = GateConvention::Raw);

} // namespace symphony
