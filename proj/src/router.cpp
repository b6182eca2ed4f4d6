// SPDX-License-Identifier: Apache-2.0
#include "symphony/router.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "symphony/errors.hpp"
#include "symphony/rng.hpp"

namespace symphony {

namespace {

constexpr double kZeroNormClamp = 1e-12;
constexpr double kUnitRowTol = 1e-9;

} // namespace

void TokenBatch::validate() const {
    if (data.rows() < 1 || data.cols() < 1)
        throw ArgumentError("token batch must be at least 1x1");
    if (!data.all_finite())
        throw ArgumentError("token batch contains non-finite entries");
}

const char* router_kind_name(RouterKind k) {
    switch (k) {
    case RouterKind::Linear: return "linear";
    case RouterKind::Cosine: return "cosine";
    case RouterKind::Random: return "random";
    }
    return "unknown";
}

RouterKind router_kind_from_name(const std::string& name) {
    if (name == "linear") return RouterKind::Linear;
    if (name == "cosine") return RouterKind::Cosine;
    if (name == "random") return RouterKind::Random;
    throw ArgumentError("unknown router kind: " + name);
}

const char* gate_convention_name(GateConvention c) {
    return c == GateConvention::Raw ? "raw" : "renormalized";
}

GateConvention gate_convention_from_name(const std::string& name) {
    if (name == "raw") return GateConvention::Raw;
    if (name == "renormalized") return GateConvention::Renormalized;
    throw ArgumentError("unknown gate convention: " + name);
}

void RouterParams::validate() const {
    if (weights.rows() < 1)
        throw ArgumentError("router needs at least 1 expert");
    if (bias.size() != weights.rows())
        throw DimensionError("router bias length does not match expert count");
    if (!weights.all_finite() || !all_finite(bias))
        throw ArgumentError("router parameters contain non-finite entries");
    if (kind == RouterKind::Cosine) {
        if (cosine_proj.empty() || cosine_experts.empty())
            throw ArgumentError("cosine router requires projection and expert directions");
        if (cosine_proj.cols() != weights.cols())
            throw DimensionError("cosine projection input dim does not match router dim");
        if (cosine_experts.rows() != weights.rows() ||
            cosine_experts.cols() != cosine_proj.rows())
            throw DimensionError("cosine expert directions have wrong shape");
        if (!(cosine_temperature > 0.0))
            throw ArgumentError("cosine temperature must be positive");
        if (!cosine_proj.all_finite() || !cosine_experts.all_finite())
            throw ArgumentError("cosine parameters contain non-finite entries");
        for (std::size_t j = 0; j < cosine_experts.rows(); ++j) {
            const double n = norm2(cosine_experts.row(j));
            if (std::abs(n - 1.0) > kUnitRowTol)
                throw ArgumentError("cosine expert direction row " + std::to_string(j) +
                                    " is not unit norm");
        }
    }
}

RouterParams make_linear_router(Matrix weights, Vec bias) {
    RouterParams p;
    p.kind = RouterKind::Linear;
    p.weights = std::move(weights);
    p.bias = std::move(bias);
    p.validate();
    return p;
}

RouterParams make_cosine_router(Matrix weights, Vec bias, Matrix proj, Matrix expert_dirs,
                                double temperature) {
    RouterParams p;
    p.kind = RouterKind::Cosine;
    p.weights = std::move(weights);
    p.bias = std::move(bias);
    p.cosine_proj = std::move(proj);
    p.cosine_experts = std::move(expert_dirs);
    p.cosine_temperature = temperature;
    p.validate();
    return p;
}

RouterParams make_random_router(std::size_t experts, std::size_t dim, std::uint64_t seed) {
    RandomStream rng(derive_seed(seed, 0x5eed'0001));
    Matrix w(experts, dim);
    rng.fill_normal({w.data(), w.size()}, 1.0 / std::sqrt(static_cast<double>(dim)));
    Vec b(experts, 0.0);
    RouterParams p;
    p.kind = RouterKind::Random;
    p.weights = std::move(w);
    p.bias = std::move(b);
    p.validate();
    return p;
}

Matrix compute_scores(const RouterParams& params, const TokenBatch& batch) {
    if (params.kind == RouterKind::Cosine &&
        (params.cosine_proj.empty() || params.cosine_experts.empty()))
        throw ArgumentError("cosine router requires projection and expert directions");
    if (batch.dim() != params.dim())
        throw DimensionError("token dim " + std::to_string(batch.dim()) +
                             " does not match router dim " + std::to_string(params.dim()));

    const std::size_t n = batch.n_tokens();
    const std::size_t m = params.experts();
    Matrix scores(n, m);

    if (params.kind == RouterKind::Cosine) {
        const std::size_t de = params.cosine_proj.rows();
        Vec projected(de);
        for (std::size_t i = 0; i < n; ++i) {
            const auto x = batch.data.row(i);
            for (std::size_t r = 0; r < de; ++r)
                projected[r] = dot(params.cosine_proj.row(r), x);
            const double nrm = std::max(norm2(projected), kZeroNormClamp);
            for (std::size_t j = 0; j < m; ++j)
                scores(i, j) = dot(params.cosine_experts.row(j), projected) /
                               (nrm * params.cosine_temperature);
        }
        return scores;
    }

    // Linear and Random share the affine form.
    for (std::size_t i = 0; i < n; ++i) {
        const auto x = batch.data.row(i);
        for (std::size_t j = 0; j < m; ++j)
            scores(i, j) = dot(params.weights.row(j), x) + params.bias[j];
    }
    return scores;
}

Vec softmax_row(std::span<const double> scores) {
    double mx = -std::numeric_limits<double>::infinity();
    for (double v : scores) mx = std::max(mx, v);
    Vec out(scores.size(), 0.0);
    double sum = 0.0;
    for (std::size_t j = 0; j < scores.size(); ++j) {
        // exp(-inf - mx) is exactly 0 for masked entries.
        const double e = std::exp(scores[j] - mx);
        out[j] = e;
        sum += e;
    }
    for (double& v : out) v /= sum;
    return out;
}

Matrix softmax_rows(const Matrix& scores) {
    Matrix out(scores.rows(), scores.cols());
    for (std::size_t i = 0; i < scores.rows(); ++i) {
        Vec row = softmax_row(scores.row(i));
        std::copy(row.begin(), row.end(), out.row(i).begin());
    }
    return out;
}

std::vector<int> topk_select(std::span<const double> values, int k, TieRule) {
    const int m = static_cast<int>(values.size());
    if (k < 1 || k > m)
        throw ArgumentError("topk: k = " + std::to_string(k) + " outside [1, " +
                            std::to_string(m) + "]");
    std::vector<int> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (values[a] != values[b]) return values[a] > values[b];
        return a < b;
    });
    order.resize(k);
    std::sort(order.begin(), order.end());
    return order;
}

namespace {

Vec renormalized_weights(std::span<const double> values, const std::vector<int>& idx) {
    Vec w(idx.size());
    double sum = 0.0;
    for (std::size_t s = 0; s < idx.size(); ++s) {
        w[s] = values[idx[s]];
        sum += w[s];
    }
    if (sum > 0.0)
        for (double& v : w) v /= sum;
    else
        for (double& v : w) v = 1.0 / static_cast<double>(idx.size());
    return w;
}

} // namespace

SparseGateResult smoe_gate_logits_first(const Matrix& scores, int k) {
    const std::size_t n = scores.rows();
    SparseGateResult res;
    res.gates.values = Matrix(n, scores.cols(), 0.0);
    res.gates.kind = GateKind::SparseNormalized;
    res.gates.k = k;
    res.selection.indices.resize(n);
    res.selection.weights.resize(n);

    Vec masked(scores.cols());
    for (std::size_t i = 0; i < n; ++i) {
        const auto row = scores.row(i);
        std::vector<int> idx = topk_select(row, k);
        std::fill(masked.begin(), masked.end(), -std::numeric_limits<double>::infinity());
        for (int j : idx) masked[j] = row[j];
        Vec g = softmax_row(masked);
        for (int j : idx) res.gates.values(i, j) = g[j];
        Vec w(idx.size());
        for (std::size_t s = 0; s < idx.size(); ++s) w[s] = g[idx[s]];
        res.selection.indices[i] = std::move(idx);
        res.selection.weights[i] = std::move(w);
    }
    return res;
}

SparseGateResult smoe_gate_softmax_first(const Matrix& scores, int k, GateConvention convention) {
    const std::size_t n = scores.rows();
    SparseGateResult res;
    res.gates.values = Matrix(n, scores.cols(), 0.0);
    res.gates.kind =
        convention == GateConvention::Raw ? GateKind::SparseRaw : GateKind::SparseNormalized;
    res.gates.k = k;
    res.selection.indices.resize(n);
    res.selection.weights.resize(n);

    for (std::size_t i = 0; i < n; ++i) {
        Vec dense = softmax_row(scores.row(i));
        std::vector<int> idx = topk_select(dense, k);
        Vec renorm = renormalized_weights(dense, idx);
        if (convention == GateConvention::Raw) {
            for (int j : idx) res.gates.values(i, j) = dense[j];
        } else {
            for (std::size_t s = 0; s < idx.size(); ++s)
                res.gates.values(i, idx[s]) = renorm[s];
        }
        res.selection.indices[i] = std::move(idx);
        res.selection.weights[i] = std::move(renorm);
    }
    return res;
}

} // namespace symphony
