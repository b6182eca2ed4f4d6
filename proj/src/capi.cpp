// SPDX-License-Identifier: Apache-2.0
#include "symphony.h"

#include <cstring>
#include <memory>
#include <string>

#include "symphony/errors.hpp"
#include "symphony/experiment.hpp"
#include "symphony/io.hpp"
#include "symphony/parallel.hpp"

namespace {

thread_local std::string g_last_error;

sym_status fail(sym_status code, const char* what) {
    g_last_error = what;
    return code;
}

// Runs fn, translating the library's exception taxonomy into status codes.
template <typename Fn> sym_status guarded(Fn&& fn) {
    try {
        fn();
        g_last_error.clear();
        return SYM_OK;
    } catch (const symphony::DimensionError& e) {
        return fail(SYM_ERR_DIMENSION, e.what());
    } catch (const symphony::FrozenError& e) {
        return fail(SYM_ERR_FROZEN, e.what());
    } catch (const symphony::StateError& e) {
        return fail(SYM_ERR_STATE, e.what());
    } catch (const symphony::NumericalError& e) {
        return fail(SYM_ERR_NUMERICAL, e.what());
    } catch (const symphony::IoError& e) {
        return fail(SYM_ERR_IO, e.what());
    } catch (const symphony::ArgumentError& e) {
        return fail(SYM_ERR_ARGUMENT, e.what());
    } catch (const std::exception& e) {
        return fail(SYM_ERR_INTERNAL, e.what());
    } catch (...) {
        return fail(SYM_ERR_INTERNAL, "unknown error");
    }
}

sym_status require(bool ok, const char* what) {
    return ok ? SYM_OK : fail(SYM_ERR_ARGUMENT, what);
}

symphony::Matrix to_matrix(const double* data, std::size_t rows, std::size_t cols) {
    symphony::Matrix m(rows, cols);
    std::memcpy(m.data(), data, rows * cols * sizeof(double));
    return m;
}

void write_selection(const symphony::SelectionRecord& sel, int k, int* indices) {
    for (std::size_t i = 0; i < sel.n_tokens(); ++i)
        for (int s = 0; s < k; ++s) indices[i * static_cast<std::size_t>(k) + s] = sel.indices[i][s];
}

symphony::RunOptions to_run_options(const sym_run_options* options) {
    if (options == nullptr) throw symphony::ArgumentError("options must not be null");
    symphony::RunOptions o;
    o.manifest_path = options->manifest_path ? options->manifest_path : "";
    o.out_dir = options->out_dir ? options->out_dir : "";
    if (options->has_seed_override) o.seed_override = options->seed_override;
    o.threads = options->threads;
    o.quiet = options->quiet != 0;
    return o;
}

sym_status copy_string(const std::string& s, char* buffer, size_t buffer_len) {
    if (buffer == nullptr || buffer_len == 0)
        return fail(SYM_ERR_ARGUMENT, "buffer must not be null");
    if (s.size() + 1 > buffer_len) return fail(SYM_ERR_ARGUMENT, "buffer too small");
    std::memcpy(buffer, s.c_str(), s.size() + 1);
    return SYM_OK;
}

} // namespace

struct sym_router {
    symphony::RouterParams params;
};

struct sym_adjacency {
    symphony::AdjacencyState state;
};

extern "C" {

const char* sym_version(void) { return "0.1.0"; }

const char* sym_status_name(sym_status status) {
    switch (status) {
    case SYM_OK: return "ok";
    case SYM_ERR_ARGUMENT: return "argument";
    case SYM_ERR_DIMENSION: return "dimension";
    case SYM_ERR_FROZEN: return "frozen";
    case SYM_ERR_STATE: return "state";
    case SYM_ERR_NUMERICAL: return "numerical";
    case SYM_ERR_IO: return "io";
    case SYM_ERR_INTERNAL: return "internal";
    }
    return "unknown";
}

const char* sym_last_error(void) { return g_last_error.c_str(); }

sym_status sym_set_threads(int threads) {
    if (sym_status s = require(threads >= 1, "threads must be >= 1"); s != SYM_OK) return s;
    symphony::set_thread_budget(threads);
    return SYM_OK;
}

sym_status sym_router_linear(size_t experts, size_t dim, const double* weights,
                             const double* bias, sym_router** out) {
    if (sym_status s = require(weights && bias && out, "null pointer argument"); s != SYM_OK)
        return s;
    return guarded([&] {
        auto router = std::make_unique<sym_router>();
        router->params = symphony::make_linear_router(
            to_matrix(weights, experts, dim), symphony::Vec(bias, bias + experts));
        *out = router.release();
    });
}

sym_status sym_router_cosine(size_t experts, size_t dim, size_t proj_dim, const double* proj,
                             const double* expert_dirs, double temperature, sym_router** out) {
    if (sym_status s = require(proj && expert_dirs && out, "null pointer argument"); s != SYM_OK)
        return s;
    return guarded([&] {
        auto router = std::make_unique<sym_router>();
        router->params = symphony::make_cosine_router(
            symphony::Matrix(experts, dim, 0.0), symphony::Vec(experts, 0.0),
            to_matrix(proj, proj_dim, dim), to_matrix(expert_dirs, experts, proj_dim),
            temperature);
        *out = router.release();
    });
}

sym_status sym_router_random(size_t experts, size_t dim, uint64_t seed, sym_router** out) {
    if (sym_status s = require(out != nullptr, "null pointer argument"); s != SYM_OK) return s;
    return guarded([&] {
        auto router = std::make_unique<sym_router>();
        router->params = symphony::make_random_router(experts, dim, seed);
        *out = router.release();
    });
}

void sym_router_free(sym_router* router) { delete router; }

sym_status sym_router_scores(const sym_router* router, const double* tokens, size_t n_tokens,
                             size_t dim, double* scores) {
    if (sym_status s = require(router && tokens && scores, "null pointer argument"); s != SYM_OK)
        return s;
    return guarded([&] {
        symphony::TokenBatch batch{to_matrix(tokens, n_tokens, dim)};
        symphony::Matrix result = symphony::compute_scores(router->params, batch);
        std::memcpy(scores, result.data(), result.size() * sizeof(double));
    });
}

sym_status sym_softmax(const double* scores, size_t n_tokens, size_t experts, double* gates) {
    if (sym_status s = require(scores && gates, "null pointer argument"); s != SYM_OK) return s;
    return guarded([&] {
        symphony::Matrix result = symphony::softmax_rows(to_matrix(scores, n_tokens, experts));
        std::memcpy(gates, result.data(), result.size() * sizeof(double));
    });
}

sym_status sym_topk(const double* values, size_t count, int k, int* indices) {
    if (sym_status s = require(values && indices, "null pointer argument"); s != SYM_OK)
        return s;
    return guarded([&] {
        std::vector<int> idx =
            symphony::topk_select(std::span<const double>(values, count), k);
        std::memcpy(indices, idx.data(), idx.size() * sizeof(int));
    });
}

sym_status sym_gate_logits_first(const double* scores, size_t n_tokens, size_t experts, int k,
                                 double* gates, int* indices) {
    if (sym_status s = require(scores && gates && indices, "null pointer argument"); s != SYM_OK)
        return s;
    return guarded([&] {
        symphony::SparseGateResult r =
            symphony::smoe_gate_logits_first(to_matrix(scores, n_tokens, experts), k);
        std::memcpy(gates, r.gates.values.data(), r.gates.values.size() * sizeof(double));
        write_selection(r.selection, k, indices);
    });
}

sym_status sym_gate_softmax_first(const double* scores, size_t n_tokens, size_t experts, int k,
                                  int renormalize, double* gates, int* indices) {
    if (sym_status s = require(scores && gates && indices, "null pointer argument"); s != SYM_OK)
        return s;
    return guarded([&] {
        symphony::SparseGateResult r = symphony::smoe_gate_softmax_first(
            to_matrix(scores, n_tokens, experts), k,
            renormalize ? symphony::GateConvention::Renormalized
                        : symphony::GateConvention::Raw);
        std::memcpy(gates, r.gates.values.data(), r.gates.values.size() * sizeof(double));
        write_selection(r.selection, k, indices);
    });
}

sym_status sym_adjacency_new(size_t experts, double beta, int norm_mode, sym_adjacency** out) {
    if (sym_status s = require(out != nullptr, "null pointer argument"); s != SYM_OK) return s;
    if (sym_status s = require(norm_mode == 0 || norm_mode == 1, "norm_mode must be 0 or 1");
        s != SYM_OK)
        return s;
    return guarded([&] {
        auto adj = std::make_unique<sym_adjacency>();
        adj->state = symphony::AdjacencyState(
            experts, beta,
            norm_mode == 0 ? symphony::NormMode::RowNorm : symphony::NormMode::Sinkhorn);
        *out = adj.release();
    });
}

void sym_adjacency_free(sym_adjacency* adjacency) { delete adjacency; }

sym_status sym_adjacency_accumulate(sym_adjacency* adjacency, const int* indices,
                                    size_t n_tokens, int k) {
    if (sym_status s = require(adjacency && indices, "null pointer argument"); s != SYM_OK)
        return s;
    if (sym_status s = require(k >= 1, "k must be >= 1"); s != SYM_OK) return s;
    return guarded([&] {
        symphony::SelectionRecord rec;
        rec.indices.resize(n_tokens);
        rec.weights.resize(n_tokens);
        for (size_t i = 0; i < n_tokens; ++i) {
            rec.indices[i].assign(indices + i * static_cast<size_t>(k),
                                  indices + (i + 1) * static_cast<size_t>(k));
            rec.weights[i] = symphony::Vec(k, 1.0 / k);
        }
        symphony::accumulate_coselect(adjacency->state, rec);
    });
}

sym_status sym_adjacency_update(sym_adjacency* adjacency) {
    if (sym_status s = require(adjacency != nullptr, "null pointer argument"); s != SYM_OK)
        return s;
    return guarded([&] { symphony::normalize_and_ema(adjacency->state); });
}

sym_status sym_adjacency_freeze(sym_adjacency* adjacency, int frozen) {
    if (sym_status s = require(adjacency != nullptr, "null pointer argument"); s != SYM_OK)
        return s;
    adjacency->state.frozen = frozen != 0;
    return SYM_OK;
}

sym_status sym_adjacency_updates(const sym_adjacency* adjacency, long* updates) {
    if (sym_status s = require(adjacency && updates, "null pointer argument"); s != SYM_OK)
        return s;
    *updates = adjacency->state.update_count;
    return SYM_OK;
}

sym_status sym_adjacency_values(const sym_adjacency* adjacency, double* values) {
    if (sym_status s = require(adjacency && values, "null pointer argument"); s != SYM_OK)
        return s;
    std::memcpy(values, adjacency->state.adjacency.data(),
                adjacency->state.adjacency.size() * sizeof(double));
    return SYM_OK;
}

sym_status sym_adjacency_smooth(const sym_adjacency* adjacency, const double* dense,
                                size_t n_tokens, double* smoothed) {
    if (sym_status s = require(adjacency && dense && smoothed, "null pointer argument");
        s != SYM_OK)
        return s;
    return guarded([&] {
        symphony::Matrix result = symphony::symphony_gate(
            adjacency->state, to_matrix(dense, n_tokens, adjacency->state.experts()));
        std::memcpy(smoothed, result.data(), result.size() * sizeof(double));
    });
}

sym_status sym_adjacency_route(sym_adjacency* adjacency, const double* scores, size_t n_tokens,
                               int k, int renormalize, double* gates, int* indices) {
    if (sym_status s = require(adjacency && scores && gates && indices, "null pointer argument");
        s != SYM_OK)
        return s;
    return guarded([&] {
        symphony::RouteResult r = symphony::symphony_route(
            adjacency->state, to_matrix(scores, n_tokens, adjacency->state.experts()), k,
            renormalize ? symphony::GateConvention::Renormalized
                        : symphony::GateConvention::Raw);
        std::memcpy(gates, r.gates.values.data(), r.gates.values.size() * sizeof(double));
        write_selection(r.selection, k, indices);
    });
}

sym_status sym_adjacency_spectral(const sym_adjacency* adjacency, double* eigenvalues,
                                  double* rho, int* connected) {
    if (sym_status s =
            require(adjacency && eigenvalues && rho && connected, "null pointer argument");
        s != SYM_OK)
        return s;
    return guarded([&] {
        symphony::SpectralReport rep = symphony::spectral_report(adjacency->state);
        std::memcpy(eigenvalues, rep.eigenvalues.data(),
                    rep.eigenvalues.size() * sizeof(double));
        *rho = rep.rho;
        *connected = rep.connected ? 1 : 0;
    });
}

sym_status sym_adjacency_save(const sym_adjacency* adjacency, const char* path) {
    if (sym_status s = require(adjacency && path, "null pointer argument"); s != SYM_OK)
        return s;
    return guarded([&] { symphony::save_adjacency_snapshot(adjacency->state, path); });
}

sym_status sym_adjacency_load(const char* path, sym_adjacency** out) {
    if (sym_status s = require(path && out, "null pointer argument"); s != SYM_OK) return s;
    return guarded([&] {
        auto adj = std::make_unique<sym_adjacency>();
        adj->state = symphony::load_adjacency_snapshot(path);
        *out = adj.release();
    });
}

sym_status sym_estimate_overhead(uint64_t experts, uint64_t k, uint64_t tokens, uint64_t layers,
                                 uint64_t bytes_per_entry, uint64_t* train_flops,
                                 uint64_t* infer_flops, uint64_t* train_bytes,
                                 uint64_t* infer_bytes) {
    if (sym_status s = require(train_flops && infer_flops && train_bytes && infer_bytes,
                               "null pointer argument");
        s != SYM_OK)
        return s;
    return guarded([&] {
        symphony::OverheadEstimate est =
            symphony::estimate_overhead(experts, k, tokens, layers, bytes_per_entry);
        *train_flops = est.train_flops;
        *infer_flops = est.infer_flops;
        *train_bytes = est.train_bytes;
        *infer_bytes = est.infer_bytes;
    });
}

sym_status sym_format_mib(uint64_t bytes, char* buffer, size_t buffer_len) {
    return copy_string(symphony::format_mib(bytes), buffer, buffer_len);
}

sym_status sym_format_gflops(uint64_t flops, char* buffer, size_t buffer_len) {
    return copy_string(symphony::format_gflops(flops), buffer, buffer_len);
}

sym_status sym_run_train(const sym_run_options* options) {
    return guarded([&] { symphony::run_train(to_run_options(options)); });
}

sym_status sym_run_eval(const sym_run_options* options) {
    return guarded([&] { symphony::run_eval(to_run_options(options)); });
}

sym_status sym_run_attack_eval(const sym_run_options* options) {
    return guarded([&] { symphony::run_attack_eval(to_run_options(options)); });
}

sym_status sym_run_verify_theorem1(const sym_run_options* options) {
    return guarded([&] { symphony::run_verify_theorem1(to_run_options(options)); });
}

sym_status sym_run_verify_prop1(const sym_run_options* options) {
    return guarded([&] { symphony::run_verify_prop1(to_run_options(options)); });
}

sym_status sym_run_bench(const sym_run_options* options) {
    return guarded([&] { symphony::run_bench(to_run_options(options)); });
}

sym_status sym_run_dump_adjacency(const sym_run_options* options) {
    return guarded([&] { symphony::run_dump_adjacency(to_run_options(options)); });
}

} // extern "C"
