// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "symphony/rng.hpp"
#include "symphony/social_graph.hpp"

namespace symphony {

// Two-layer rectifier perceptron: u(x) = W2 relu(W1 x + b1) + b2.
struct Expert {
    Matrix w1; // H x D
    Vec b1;    // H
    Matrix w2; // D_out x H
    Vec b2;    // D_out
};

struct ExpertSet {
    std::vector<Expert> experts;

    std::size_t count() const { return experts.size(); }
    std::size_t input_dim() const { return experts.empty() ? 0 : experts[0].w1.cols(); }
    std::size_t hidden_dim() const { return experts.empty() ? 0 : experts[0].w1.rows(); }
    std::size_t output_dim() const { return experts.empty() ? 0 : experts[0].w2.rows(); }
    void validate() const;
};

ExpertSet make_expert_set(std::size_t count, std::size_t dim, std::size_t hidden,
                          std::size_t out_dim, RandomStream& rng);

enum class RoutingMode { Baseline, Symphony };

const char* routing_mode_name(RoutingMode m);
RoutingMode routing_mode_from_name(const std::string& name);

struct LayerOutput {
    Matrix y; // N x D_out
    SelectionRecord selection;
    Matrix dense_gates;
    Matrix smoothed_gates;
    GateMatrix sparse_gates;
    double aux_loss = 0.0;
};

// Everything backward needs. Borrows the expert set and router passed to
// forward; keep them alive until backward has run.
struct ForwardTrace {
    bool valid = false;
    RoutingMode mode = RoutingMode::Baseline;
    GateConvention convention = GateConvention::Raw;
    int k = 0;
    bool smoothing_bypassed = true;
    const ExpertSet* experts = nullptr;
    const RouterParams* router = nullptr;
    Matrix inputs;
    Matrix adjacency; // copy of A when smoothing was applied
    Matrix scores;
    Matrix dense_gates;
    Matrix smoothed_gates;
    Matrix projected; // cosine router: N x D_e pre-normalization projections
    SelectionRecord selection;
    GateMatrix sparse_gates;
    std::vector<Matrix> hidden;     // per token: k x H pre-activations
    std::vector<Matrix> expert_out; // per token: k x D_out
};

// Routed forward pass; only the selected experts are evaluated. In Symphony
// mode the adjacency is required and, while it is not frozen, base-gate
// co-selections are accumulated as a side effect.
LayerOutput forward(const ExpertSet& experts, const RouterParams& router,
                    AdjacencyState* adjacency, const TokenBatch& batch, int k, RoutingMode mode,
                    GateConvention convention = GateConvention::Raw,
                    ForwardTrace* trace = nullptr);

// loss = M * sum_j f_j P_j with f_j the fraction of tokens whose TopK
// contains j and P_j the mean dense gate of expert j.
double load_balance_loss(const Matrix& dense_gates, const SelectionRecord& selection);

struct LayerGradients {
    std::vector<Expert> experts; // same shapes as the expert set
    Matrix router_weights;
    Vec router_bias;
    Matrix cosine_proj;    // cosine router only
    Matrix cosine_experts; // cosine router only
    Matrix inputs; // N x D
};

// Analytic gradients. The TopK mask and the adjacency are constants; the
// gradient flows through the surviving smoothed gate values via the dense
// softmax. aux_weight adds the load-balance gradient (through the mean gate
// term, selection frequencies held fixed). Random routers report zero router
// gradients. Throws StateError if the trace is not populated.
LayerGradients backward(const ForwardTrace& trace, const Matrix& grad_output,
                        double aux_weight = 0.0);

struct LoadBalanceReport {
    Vec frequency; // per-expert selection share, sums to 1
    double cv = 0.0;
    double entropy_ratio = 0.0; // entropy normalized by ln M
};

LoadBalanceReport load_balance_report(const std::vector<SelectionRecord>& selections,
                                      std::size_t experts);

} // namespace symphony
