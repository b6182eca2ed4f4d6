// SPDX-License-Identifier: Apache-2.0
#include "symphony/moe_layer.hpp"

#include <algorithm>
#include <cmath>

#include "symphony/errors.hpp"

namespace symphony {

void ExpertSet::validate() const {
    if (experts.empty()) throw ArgumentError("expert set is empty");
    const std::size_t d = input_dim();
    const std::size_t h = hidden_dim();
    const std::size_t o = output_dim();
    for (const Expert& e : experts) {
        if (e.w1.rows() != h || e.w1.cols() != d || e.b1.size() != h || e.w2.rows() != o ||
            e.w2.cols() != h || e.b2.size() != o)
            throw DimensionError("experts disagree on (D, H, D_out)");
        if (!e.w1.all_finite() || !e.w2.all_finite() || !all_finite(e.b1) || !all_finite(e.b2))
            throw ArgumentError("expert parameters contain non-finite entries");
    }
}

ExpertSet make_expert_set(std::size_t count, std::size_t dim, std::size_t hidden,
                          std::size_t out_dim, RandomStream& rng) {
    ExpertSet set;
    set.experts.resize(count);
    const double s1 = 1.0 / std::sqrt(static_cast<double>(dim));
    const double s2 = 1.0 / std::sqrt(static_cast<double>(hidden));
    for (Expert& e : set.experts) {
        e.w1 = Matrix(hidden, dim);
        rng.fill_normal({e.w1.data(), e.w1.size()}, s1);
        e.b1 = Vec(hidden, 0.0);
        e.w2 = Matrix(out_dim, hidden);
        rng.fill_normal({e.w2.data(), e.w2.size()}, s2);
        e.b2 = Vec(out_dim, 0.0);
    }
    return set;
}

const char* routing_mode_name(RoutingMode m) {
    return m == RoutingMode::Baseline ? "baseline" : "symphony";
}

RoutingMode routing_mode_from_name(const std::string& name) {
    if (name == "baseline") return RoutingMode::Baseline;
    if (name == "symphony") return RoutingMode::Symphony;
    throw ArgumentError("unknown routing mode: " + name);
}

namespace {

void expert_forward(const Expert& e, std::span<const double> x, std::span<double> h_pre,
                    std::span<double> u_out) {
    const std::size_t h = e.w1.rows();
    const std::size_t o = e.w2.rows();
    for (std::size_t r = 0; r < h; ++r) h_pre[r] = dot(e.w1.row(r), x) + e.b1[r];
    for (std::size_t r = 0; r < o; ++r) {
        double s = e.b2[r];
        const auto w2r = e.w2.row(r);
        for (std::size_t c = 0; c < h; ++c) s += w2r[c] * std::max(h_pre[c], 0.0);
        u_out[r] = s;
    }
}

} // namespace

LayerOutput forward(const ExpertSet& experts, const RouterParams& router,
                    AdjacencyState* adjacency, const TokenBatch& batch, int k, RoutingMode mode,
                    GateConvention convention, ForwardTrace* trace) {
    experts.validate();
    if ((mode == RoutingMode::Symphony) != (adjacency != nullptr))
        throw ArgumentError("adjacency state is required exactly when mode is symphony");
    if (experts.count() != router.experts())
        throw DimensionError("expert count does not match router");
    if (experts.input_dim() != batch.dim())
        throw DimensionError("expert input dim does not match batch");
    if (adjacency && adjacency->experts() != experts.count())
        throw DimensionError("adjacency size does not match expert count");

    Matrix scores = compute_scores(router, batch);
    RouteResult route = mode == RoutingMode::Symphony
                            ? symphony_route(*adjacency, scores, k, convention)
                            : baseline_route(scores, k, convention);

    const std::size_t n = batch.n_tokens();
    const std::size_t o = experts.output_dim();
    const std::size_t h = experts.hidden_dim();

    LayerOutput out;
    out.y = Matrix(n, o, 0.0);

    std::vector<Matrix> hidden(trace ? n : 0);
    std::vector<Matrix> expert_out(trace ? n : 0);
    Vec h_pre(h), u(o);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& idx = route.selection.indices[i];
        if (trace) {
            hidden[i] = Matrix(idx.size(), h);
            expert_out[i] = Matrix(idx.size(), o);
        }
        for (std::size_t s = 0; s < idx.size(); ++s) {
            const int j = idx[s];
            expert_forward(experts.experts[j], batch.data.row(i), h_pre, u);
            const double w = route.gates.values(i, j);
            for (std::size_t r = 0; r < o; ++r) out.y(i, r) += w * u[r];
            if (trace) {
                std::copy(h_pre.begin(), h_pre.end(), hidden[i].row(s).begin());
                std::copy(u.begin(), u.end(), expert_out[i].row(s).begin());
            }
        }
    }

    out.aux_loss = load_balance_loss(route.dense_gates, route.selection);

    if (trace) {
        trace->valid = true;
        trace->mode = mode;
        trace->convention = convention;
        trace->k = k;
        trace->smoothing_bypassed = mode == RoutingMode::Baseline ||
                                    (adjacency && adjacency->update_count == 0);
        trace->experts = &experts;
        trace->router = &router;
        trace->inputs = batch.data;
        trace->adjacency = trace->smoothing_bypassed ? Matrix() : adjacency->adjacency;
        trace->scores = scores;
        trace->dense_gates = route.dense_gates;
        trace->smoothed_gates = route.smoothed_gates;
        trace->selection = route.selection;
        trace->sparse_gates = route.gates;
        trace->hidden = std::move(hidden);
        trace->expert_out = std::move(expert_out);
        if (router.kind == RouterKind::Cosine) {
            const std::size_t de = router.cosine_proj.rows();
            trace->projected = Matrix(n, de);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t r = 0; r < de; ++r)
                    trace->projected(i, r) = dot(router.cosine_proj.row(r), batch.data.row(i));
        }
    }

    out.selection = std::move(route.selection);
    out.dense_gates = std::move(route.dense_gates);
    out.smoothed_gates = std::move(route.smoothed_gates);
    out.sparse_gates = std::move(route.gates);
    return out;
}

double load_balance_loss(const Matrix& dense_gates, const SelectionRecord& selection) {
    const std::size_t n = dense_gates.rows();
    const std::size_t m = dense_gates.cols();
    if (n == 0) return 0.0;
    Vec freq(m, 0.0), mean_gate(m, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (int j : selection.indices[i]) freq[j] += 1.0;
        for (std::size_t j = 0; j < m; ++j) mean_gate[j] += dense_gates(i, j);
    }
    double loss = 0.0;
    for (std::size_t j = 0; j < m; ++j)
        loss += (freq[j] / n) * (mean_gate[j] / n);
    return loss * static_cast<double>(m);
}

LayerGradients backward(const ForwardTrace& trace, const Matrix& grad_output, double aux_weight) {
    if (!trace.valid)
        throw StateError("backward called without a recorded forward pass");
    const ExpertSet& experts = *trace.experts;
    const RouterParams& router = *trace.router;
    const std::size_t n = trace.inputs.rows();
    const std::size_t d = experts.input_dim();
    const std::size_t h = experts.hidden_dim();
    const std::size_t o = experts.output_dim();
    const std::size_t m = experts.count();
    if (grad_output.rows() != n || grad_output.cols() != o)
        throw DimensionError("output gradient has wrong shape");

    LayerGradients g;
    g.experts.resize(m);
    for (std::size_t j = 0; j < m; ++j) {
        g.experts[j].w1 = Matrix(h, d, 0.0);
        g.experts[j].b1 = Vec(h, 0.0);
        g.experts[j].w2 = Matrix(o, h, 0.0);
        g.experts[j].b2 = Vec(o, 0.0);
    }
    g.router_weights = Matrix(m, d, 0.0);
    g.router_bias = Vec(m, 0.0);
    g.inputs = Matrix(n, d, 0.0);
    if (router.kind == RouterKind::Cosine) {
        g.cosine_proj = Matrix(router.cosine_proj.rows(), router.cosine_proj.cols(), 0.0);
        g.cosine_experts = Matrix(router.cosine_experts.rows(), router.cosine_experts.cols(), 0.0);
    }

    // Selection frequencies for the auxiliary-loss path (held constant).
    Vec freq(m, 0.0);
    if (aux_weight != 0.0) {
        for (std::size_t i = 0; i < n; ++i)
            for (int j : trace.selection.indices[i]) freq[j] += 1.0;
        for (double& f : freq) f /= static_cast<double>(n);
    }

    Vec d_smoothed(m), d_dense(m), d_scores(m), d_hidden(h), d_act(h);
    for (std::size_t i = 0; i < n; ++i) {
        const auto gy = grad_output.row(i);
        const auto& idx = trace.selection.indices[i];
        std::fill(d_smoothed.begin(), d_smoothed.end(), 0.0);

        // Experts and the gradient w.r.t. each surviving mixing weight.
        Vec d_mix(idx.size(), 0.0);
        for (std::size_t s = 0; s < idx.size(); ++s) {
            const int j = idx[s];
            const double w = trace.sparse_gates.values(i, j);
            const auto h_pre = trace.hidden[i].row(s);
            const auto u = trace.expert_out[i].row(s);
            d_mix[s] = dot(gy, u);

            Expert& ge = g.experts[j];
            const Expert& e = experts.experts[j];
            for (std::size_t r = 0; r < o; ++r) {
                const double go = w * gy[r];
                ge.b2[r] += go;
                const auto w2r = e.w2.row(r);
                auto gw2r = ge.w2.row(r);
                for (std::size_t c = 0; c < h; ++c) gw2r[c] += go * std::max(h_pre[c], 0.0);
                if (r == 0)
                    for (std::size_t c = 0; c < h; ++c) d_act[c] = go * w2r[c];
                else
                    for (std::size_t c = 0; c < h; ++c) d_act[c] += go * w2r[c];
            }
            for (std::size_t c = 0; c < h; ++c) d_hidden[c] = h_pre[c] > 0.0 ? d_act[c] : 0.0;
            const auto x = trace.inputs.row(i);
            for (std::size_t c = 0; c < h; ++c) {
                ge.b1[c] += d_hidden[c];
                auto gw1c = ge.w1.row(c);
                for (std::size_t cc = 0; cc < d; ++cc) gw1c[cc] += d_hidden[c] * x[cc];
            }
            auto gx = g.inputs.row(i);
            for (std::size_t c = 0; c < h; ++c) {
                if (d_hidden[c] == 0.0) continue;
                const auto w1c = e.w1.row(c);
                for (std::size_t cc = 0; cc < d; ++cc) gx[cc] += d_hidden[c] * w1c[cc];
            }
        }

        // Mixing weights -> smoothed gates (TopK mask constant).
        if (trace.convention == GateConvention::Raw) {
            for (std::size_t s = 0; s < idx.size(); ++s) d_smoothed[idx[s]] = d_mix[s];
        } else {
            const auto srow = trace.smoothed_gates.row(i);
            double sum = 0.0;
            for (int j : idx) sum += srow[j];
            double weighted = 0.0;
            for (std::size_t s = 0; s < idx.size(); ++s)
                weighted += trace.sparse_gates.values(i, idx[s]) * d_mix[s];
            for (std::size_t s = 0; s < idx.size(); ++s)
                d_smoothed[idx[s]] = (d_mix[s] - weighted) / sum;
        }

        // Smoothed -> dense gates through the fixed adjacency.
        if (trace.smoothing_bypassed) {
            d_dense = d_smoothed;
        } else {
            for (std::size_t kk = 0; kk < m; ++kk) {
                double s = 0.0;
                for (std::size_t j = 0; j < m; ++j) s += trace.adjacency(j, kk) * d_smoothed[j];
                d_dense[kk] = s;
            }
        }

        if (aux_weight != 0.0) {
            const double scale = aux_weight * static_cast<double>(m) / static_cast<double>(n);
            for (std::size_t j = 0; j < m; ++j) d_dense[j] += scale * freq[j];
        }

        // Softmax backward.
        const auto dense = trace.dense_gates.row(i);
        double inner = 0.0;
        for (std::size_t j = 0; j < m; ++j) inner += dense[j] * d_dense[j];
        for (std::size_t j = 0; j < m; ++j) d_scores[j] = dense[j] * (d_dense[j] - inner);

        // Router backward.
        const auto x = trace.inputs.row(i);
        auto gx = g.inputs.row(i);
        if (router.kind == RouterKind::Cosine) {
            const auto p = trace.projected.row(i);
            const double nrm = std::max(norm2(p), 1e-12);
            const bool clamped = norm2(p) < 1e-12;
            const double inv = 1.0 / (nrm * router.cosine_temperature);
            const std::size_t de = router.cosine_proj.rows();
            Vec dp(de, 0.0);
            double radial = 0.0;
            for (std::size_t j = 0; j < m; ++j) {
                if (d_scores[j] == 0.0) continue;
                const auto ej = router.cosine_experts.row(j);
                auto gej = g.cosine_experts.row(j);
                for (std::size_t r = 0; r < de; ++r) {
                    gej[r] += d_scores[j] * p[r] * inv;
                    dp[r] += d_scores[j] * ej[r] * inv;
                }
                radial += d_scores[j] * dot(ej, p) * inv / nrm;
            }
            if (!clamped)
                for (std::size_t r = 0; r < de; ++r) dp[r] -= radial * p[r] / nrm;
            for (std::size_t r = 0; r < de; ++r) {
                if (dp[r] == 0.0) continue;
                const auto projr = router.cosine_proj.row(r);
                auto gprojr = g.cosine_proj.row(r);
                for (std::size_t c = 0; c < d; ++c) {
                    gprojr[c] += dp[r] * x[c];
                    gx[c] += dp[r] * projr[c];
                }
            }
        } else {
            for (std::size_t j = 0; j < m; ++j) {
                if (router.kind != RouterKind::Random) {
                    g.router_bias[j] += d_scores[j];
                    auto gwj = g.router_weights.row(j);
                    for (std::size_t c = 0; c < d; ++c) gwj[c] += d_scores[j] * x[c];
                }
                const auto wj = router.weights.row(j);
                for (std::size_t c = 0; c < d; ++c) gx[c] += d_scores[j] * wj[c];
            }
        }
    }
    return g;
}

LoadBalanceReport load_balance_report(const std::vector<SelectionRecord>& selections,
                                      std::size_t experts) {
    Vec counts(experts, 0.0);
    double total = 0.0;
    for (const SelectionRecord& rec : selections)
        for (const auto& idx : rec.indices)
            for (int j : idx) {
                counts[j] += 1.0;
                total += 1.0;
            }
    if (total == 0.0) throw ArgumentError("load balance report needs at least 1 token");

    LoadBalanceReport rep;
    rep.frequency = counts;
    for (double& f : rep.frequency) f /= total;

    const double mean = 1.0 / static_cast<double>(experts);
    double var = 0.0, entropy = 0.0;
    for (double f : rep.frequency) {
        var += (f - mean) * (f - mean);
        if (f > 0.0) entropy -= f * std::log(f);
    }
    var /= static_cast<double>(experts);
    rep.cv = std::sqrt(var) / mean;
    rep.entropy_ratio = experts > 1 ? entropy / std::log(static_cast<double>(experts)) : 1.0;
    return rep;
}

} // namespace symphony
