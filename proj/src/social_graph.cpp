// SPDX-License-Identifier: Apache-2.0
#include "symphony/social_graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "symphony/errors.hpp"

namespace symphony {

namespace {

constexpr double kSinkhornDelta = 1e-8;
// The state invariant only needs 1e-6, but the spectral contraction checks
// ride on row/column sums being accurate to ~1e-12, so iterate further.
constexpr double kSinkhornTol = 1e-13;
constexpr int kSinkhornMaxIters = 1000;
constexpr double kEdgeThreshold = 1e-12;

} // namespace

const char* norm_mode_name(NormMode m) {
    return m == NormMode::RowNorm ? "RowNorm" : "Sinkhorn";
}

NormMode norm_mode_from_name(const std::string& name) {
    if (name == "RowNorm" || name == "rownorm") return NormMode::RowNorm;
    if (name == "Sinkhorn" || name == "sinkhorn") return NormMode::Sinkhorn;
    throw ArgumentError("unknown normalization mode: " + name);
}

AdjacencyState::AdjacencyState(std::size_t experts, double beta_, NormMode mode)
    : adjacency(experts, experts, 0.0), accumulator(experts, experts, 0.0), beta(beta_),
      norm_mode(mode) {
    if (experts < 2) throw ArgumentError("adjacency needs at least 2 experts");
    if (!(beta >= 0.0 && beta < 1.0)) throw ArgumentError("beta must lie in [0, 1)");
}

void AdjacencyState::validate() const {
    if (adjacency.rows() != adjacency.cols() || accumulator.rows() != accumulator.cols() ||
        adjacency.rows() != accumulator.rows())
        throw DimensionError("adjacency state matrices must be square and same size");
    if (!adjacency.all_finite() || !accumulator.all_finite())
        throw NumericalError("adjacency state contains non-finite entries");
    for (std::size_t i = 0; i < adjacency.size(); ++i) {
        if (adjacency.data()[i] < -1e-12 || adjacency.data()[i] > 1.0 + 1e-9)
            throw NumericalError("adjacency entry outside [0, 1]");
        if (accumulator.data()[i] < 0.0)
            throw NumericalError("accumulator entry negative");
    }
}

void accumulate_coselect(AdjacencyState& state, const SelectionRecord& selections) {
    if (state.frozen)
        throw FrozenError("accumulate_coselect on a frozen adjacency");
    const std::size_t m = state.experts();
    for (std::size_t i = 0; i < selections.n_tokens(); ++i) {
        const auto& idx = selections.indices[i];
        for (int a : idx) {
            if (a < 0 || static_cast<std::size_t>(a) >= m)
                throw ArgumentError("selection index " + std::to_string(a) +
                                    " outside expert range");
            for (int b : idx) {
                if (a == b && !state.include_diagonal) continue;
                state.accumulator(a, b) += 1.0;
            }
        }
    }
}

namespace {

Matrix row_normalize_with_identity_fallback(const Matrix& counts) {
    const std::size_t m = counts.rows();
    Matrix out(m, m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < m; ++j) sum += counts(i, j);
        if (sum > 0.0) {
            for (std::size_t j = 0; j < m; ++j) out(i, j) = counts(i, j) / sum;
        } else {
            out(i, i) = 1.0; // never-selected expert keeps its self-loop
        }
    }
    return out;
}

Matrix sinkhorn_normalize(const Matrix& counts) {
    const std::size_t m = counts.rows();
    Matrix x = counts;
    for (std::size_t i = 0; i < m; ++i) x(i, i) += kSinkhornDelta;

    for (int it = 0; it < kSinkhornMaxIters; ++it) {
        for (std::size_t i = 0; i < m; ++i) {
            double sum = 0.0;
            for (std::size_t j = 0; j < m; ++j) sum += x(i, j);
            for (std::size_t j = 0; j < m; ++j) x(i, j) /= sum;
        }
        for (std::size_t j = 0; j < m; ++j) {
            double sum = 0.0;
            for (std::size_t i = 0; i < m; ++i) sum += x(i, j);
            for (std::size_t i = 0; i < m; ++i) x(i, j) /= sum;
        }
        // Columns are exact after the column pass; convergence is judged on rows.
        double worst = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            double sum = 0.0;
            for (std::size_t j = 0; j < m; ++j) sum += x(i, j);
            worst = std::max(worst, std::abs(sum - 1.0));
        }
        if (worst < kSinkhornTol) break;
    }

    Matrix sym(m, m);
    for (std::size_t i = 0; i < m; ++i) {
        sym(i, i) = x(i, i);
        for (std::size_t j = i + 1; j < m; ++j) {
            const double v = 0.5 * (x(i, j) + x(j, i));
            sym(i, j) = v;
            sym(j, i) = v;
        }
    }

    // Symmetric scaling polish: drives row sums back to 1 after the
    // symmetrization while preserving exact symmetry.
    Vec scale(m);
    for (int it = 0; it < kSinkhornMaxIters; ++it) {
        double worst = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            double sum = 0.0;
            for (std::size_t j = 0; j < m; ++j) sum += sym(i, j);
            worst = std::max(worst, std::abs(sum - 1.0));
            scale[i] = std::sqrt(sum);
        }
        if (worst < kSinkhornTol) break;
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j) sym(i, j) /= scale[i] * scale[j];
    }
    return sym;
}

} // namespace

Matrix normalize_counts(const Matrix& counts, NormMode mode) {
    if (counts.rows() != counts.cols())
        throw DimensionError("count matrix must be square");
    if (mode == NormMode::RowNorm) return row_normalize_with_identity_fallback(counts);
    return sinkhorn_normalize(counts);
}

void normalize_and_ema(AdjacencyState& state) {
    if (state.frozen)
        throw FrozenError("normalize_and_ema on a frozen adjacency");
    Matrix fresh = normalize_counts(state.accumulator, state.norm_mode);
    const std::size_t m = state.experts();
    if (state.update_count == 0) {
        // Direct assignment on the first window; mixing with the zero matrix
        // would scale the first estimate by (1 - beta).
        state.adjacency = std::move(fresh);
    } else {
        for (std::size_t i = 0; i < m * m; ++i)
            state.adjacency.data()[i] =
                state.beta * state.adjacency.data()[i] + (1.0 - state.beta) * fresh.data()[i];
    }
    if (state.sparsify_threshold > 0.0) {
        for (std::size_t i = 0; i < m * m; ++i)
            if (state.adjacency.data()[i] < state.sparsify_threshold)
                state.adjacency.data()[i] = 0.0;
    }
    state.accumulator.fill(0.0);
    state.update_count += 1;
}

Matrix symphony_gate(const AdjacencyState& state, const Matrix& dense_gates) {
    const std::size_t m = state.experts();
    if (dense_gates.cols() != m)
        throw DimensionError("gate width " + std::to_string(dense_gates.cols()) +
                             " does not match expert count " + std::to_string(m));
    if (state.update_count == 0) return dense_gates; // bootstrap bypass

    Matrix out(dense_gates.rows(), m);
    for (std::size_t i = 0; i < dense_gates.rows(); ++i) {
        const auto g = dense_gates.row(i);
        for (std::size_t j = 0; j < m; ++j) out(i, j) = dot(state.adjacency.row(j), g);
    }
    return out;
}

namespace {

RouteResult sparse_from_smoothed(Matrix dense, Matrix smoothed, int k,
                                 GateConvention convention) {
    RouteResult r;
    const std::size_t n = smoothed.rows();
    const std::size_t m = smoothed.cols();
    r.gates.values = Matrix(n, m, 0.0);
    r.gates.kind =
        convention == GateConvention::Raw ? GateKind::SparseRaw : GateKind::SparseNormalized;
    r.gates.k = k;
    r.selection.indices.resize(n);
    r.selection.weights.resize(n);
    r.base_selection.indices.resize(n);
    r.base_selection.weights.resize(n);

    for (std::size_t i = 0; i < n; ++i) {
        const auto srow = smoothed.row(i);
        std::vector<int> idx = topk_select(srow, k);
        double sum = 0.0;
        for (int j : idx) sum += srow[j];
        Vec weights(idx.size());
        for (std::size_t s = 0; s < idx.size(); ++s) {
            const double raw = srow[idx[s]];
            weights[s] = sum > 0.0 ? raw / sum : 1.0 / static_cast<double>(idx.size());
            r.gates.values(i, idx[s]) = convention == GateConvention::Raw ? raw : weights[s];
        }
        r.selection.indices[i] = std::move(idx);
        r.selection.weights[i] = std::move(weights);

        const auto drow = dense.row(i);
        std::vector<int> bidx = topk_select(drow, k);
        double bsum = 0.0;
        for (int j : bidx) bsum += drow[j];
        Vec bweights(bidx.size());
        for (std::size_t s = 0; s < bidx.size(); ++s)
            bweights[s] = bsum > 0.0 ? drow[bidx[s]] / bsum : 1.0 / static_cast<double>(bidx.size());
        r.base_selection.indices[i] = std::move(bidx);
        r.base_selection.weights[i] = std::move(bweights);
    }
    r.dense_gates = std::move(dense);
    r.smoothed_gates = std::move(smoothed);
    return r;
}

} // namespace

RouteResult baseline_route(const Matrix& scores, int k, GateConvention convention) {
    if (!scores.all_finite())
        throw ArgumentError("router scores contain non-finite entries");
    Matrix dense = softmax_rows(scores);
    Matrix smoothed = dense;
    return sparse_from_smoothed(std::move(dense), std::move(smoothed), k, convention);
}

RouteResult symphony_route(AdjacencyState& state, const Matrix& scores, int k,
                           GateConvention convention) {
    if (!scores.all_finite())
        throw ArgumentError("router scores contain non-finite entries");
    if (scores.cols() != state.experts())
        throw DimensionError("score width does not match adjacency size");
    Matrix dense = softmax_rows(scores);
    Matrix smoothed = symphony_gate(state, dense);
    RouteResult r = sparse_from_smoothed(std::move(dense), std::move(smoothed), k, convention);
    if (!state.frozen) accumulate_coselect(state, r.base_selection);
    return r;
}

bool graph_connected(const Matrix& a, double threshold) {
    const std::size_t m = a.rows();
    if (m == 0) return false;
    std::vector<std::size_t> parent(m);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    };
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = i + 1; j < m; ++j)
            if (a(i, j) > threshold || a(j, i) > threshold) parent[find(i)] = find(j);
    const std::size_t root = find(0);
    for (std::size_t i = 1; i < m; ++i)
        if (find(i) != root) return false;
    return true;
}

bool is_doubly_stochastic(const Matrix& a, double tol) {
    if (a.rows() != a.cols()) return false;
    const std::size_t m = a.rows();
    for (std::size_t i = 0; i < m; ++i) {
        double rsum = 0.0, csum = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            if (a(i, j) < -tol) return false;
            rsum += a(i, j);
            csum += a(j, i);
        }
        if (std::abs(rsum - 1.0) > tol || std::abs(csum - 1.0) > tol) return false;
    }
    return true;
}

bool is_symmetric(const Matrix& a, double tol) {
    if (a.rows() != a.cols()) return false;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = i + 1; j < a.cols(); ++j)
            if (std::abs(a(i, j) - a(j, i)) > tol) return false;
    return true;
}

SpectralReport spectral_report_matrix(const Matrix& a, bool symmetric_spectrum,
                                      std::span<const double> gate_row, int margin_k) {
    if (a.rows() != a.cols())
        throw DimensionError("spectral report needs a square matrix");
    if (!a.all_finite())
        throw NumericalError("spectral report on non-finite matrix");

    SpectralReport rep;
    rep.symmetric_spectrum = symmetric_spectrum;
    if (symmetric_spectrum) {
        // Jacobi assumes symmetry; work on the symmetrized matrix so small
        // drift never produces complex-pair surprises.
        Matrix s(a.rows(), a.cols());
        for (std::size_t i = 0; i < a.rows(); ++i)
            for (std::size_t j = 0; j < a.cols(); ++j) s(i, j) = 0.5 * (a(i, j) + a(j, i));
        rep.eigenvalues = symmetric_eigenvalues(std::move(s));
    } else {
        rep.eigenvalues = singular_values(a);
    }

    Vec by_abs = rep.eigenvalues;
    std::sort(by_abs.begin(), by_abs.end(),
              [](double x, double y) { return std::abs(x) > std::abs(y); });
    rep.lambda_max = rep.eigenvalues.empty() ? 0.0 : rep.eigenvalues.front();
    rep.rho = by_abs.size() > 1 ? std::abs(by_abs[1]) : 0.0;
    rep.connected = graph_connected(a, kEdgeThreshold);

    if (!gate_row.empty()) {
        if (gate_row.size() != a.rows())
            throw DimensionError("gate row length does not match adjacency size");
        if (margin_k >= 1 && static_cast<std::size_t>(margin_k) < a.rows()) {
            Vec r = matvec(a, gate_row);
            std::vector<int> top = topk_select(r, margin_k);
            std::vector<char> in_top(r.size(), 0);
            for (int j : top) in_top[j] = 1;
            double min_in = std::numeric_limits<double>::infinity();
            double max_out = -std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < r.size(); ++j)
                (in_top[j] ? min_in = std::min(min_in, r[j]) : max_out = std::max(max_out, r[j]));
            rep.margin = min_in - max_out;
        }
    }
    return rep;
}

SpectralReport spectral_report(const AdjacencyState& state, std::span<const double> gate_row,
                               int margin_k) {
    return spectral_report_matrix(state.adjacency, state.norm_mode == NormMode::Sinkhorn,
                                  gate_row, margin_k);
}

OverheadEstimate estimate_overhead(std::uint64_t experts, std::uint64_t k, std::uint64_t tokens,
                                   std::uint64_t layers, std::uint64_t bytes_per_entry) {
    if (experts < 1 || k < 1 || tokens < 1 || layers < 1 || bytes_per_entry < 1)
        throw ArgumentError("overhead estimate requires all counts >= 1");
    if (k > experts)
        throw ArgumentError("K exceeds expert count");
    const std::uint64_t m2 = experts * experts;
    const std::uint64_t pairs = k * (k - 1) / 2; // C(K, 2)
    OverheadEstimate e;
    e.infer_bytes = layers * m2 * bytes_per_entry;
    e.train_bytes = layers * (m2 + tokens * pairs) * bytes_per_entry;
    e.infer_flops = layers * tokens * m2;
    e.train_flops = layers * tokens * (m2 + pairs);
    return e;
}

namespace {

std::string trim_fixed(double value, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, value);
    std::string s(buf);
    if (s.find('.') != std::string::npos) {
        while (s.back() == '0') s.pop_back();
        if (s.back() == '.') s.pop_back();
    }
    return s;
}

} // namespace

std::string format_mib(std::uint64_t bytes) {
    return trim_fixed(static_cast<double>(bytes) / 1048576.0, 3);
}

std::string format_gflops(std::uint64_t flops) {
    return trim_fixed(static_cast<double>(flops) / 1073741824.0, 2);
}

} // namespace symphony
