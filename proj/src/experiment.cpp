// SPDX-License-Identifier: Apache-2.0
#include "symphony/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "symphony/errors.hpp"
#include "symphony/io.hpp"

namespace symphony {

namespace {

namespace fs = std::filesystem;

enum Stream : std::uint64_t {
    kTaskStream = 101,
    kRouterStream = 102,
    kExpertStream = 103,
    kShuffleStream = 200,
    kEvalStream = 300,
    kBenchStream = 500,
};

double now_ms() {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

struct LossGrad {
    double loss = 0.0;
    Matrix grad;
};

double cross_entropy_row(std::span<const double> logits, int label, Vec* grad_row) {
    Vec p = softmax_row(logits);
    const double loss = -std::log(std::max(p[label], 1e-300));
    if (grad_row) {
        *grad_row = p;
        (*grad_row)[label] -= 1.0;
    }
    return loss;
}

LossGrad task_loss_grad(const Matrix& y, const Dataset& ds, TaskKind kind, bool want_grad) {
    const std::size_t n = y.rows();
    LossGrad lg;
    if (want_grad) lg.grad = Matrix(n, y.cols(), 0.0);
    if (kind == TaskKind::MixtureRegression) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t c = 0; c < y.cols(); ++c) {
                const double diff = y(i, c) - ds.targets(i, c);
                s += 0.5 * diff * diff;
                if (want_grad) lg.grad(i, c) = diff / static_cast<double>(n);
            }
        }
        lg.loss = s / static_cast<double>(n);
    } else {
        double s = 0.0;
        Vec grow;
        for (std::size_t i = 0; i < n; ++i) {
            s += cross_entropy_row(y.row(i), ds.labels[i], want_grad ? &grow : nullptr);
            if (want_grad)
                for (std::size_t c = 0; c < y.cols(); ++c)
                    lg.grad(i, c) = grow[c] / static_cast<double>(n);
        }
        lg.loss = s / static_cast<double>(n);
    }
    return lg;
}

} // namespace

Model build_model(const RunManifest& manifest, const SyntheticTask& task, std::uint64_t seed) {
    manifest.validate();
    const std::size_t m = manifest.experts;
    const std::size_t d = manifest.task.dim;
    const std::size_t out = task.out_dim();

    Model model;
    model.mode = manifest.mode;
    model.convention = manifest.convention;
    model.k = manifest.k;
    model.seed = seed;

    RandomStream router_rng(derive_seed(seed, kRouterStream));
    switch (manifest.router_kind) {
    case RouterKind::Linear: {
        Matrix w(m, d);
        router_rng.fill_normal({w.data(), w.size()}, 1.0 / std::sqrt(static_cast<double>(d)));
        model.router = make_linear_router(std::move(w), Vec(m, 0.0));
        break;
    }
    case RouterKind::Cosine: {
        const std::size_t de = std::max<std::size_t>(2, d / 2 + 1);
        Matrix proj(de, d);
        router_rng.fill_normal({proj.data(), proj.size()},
                               1.0 / std::sqrt(static_cast<double>(d)));
        Matrix dirs(m, de);
        for (std::size_t j = 0; j < m; ++j) {
            auto row = dirs.row(j);
            router_rng.direction(row);
        }
        model.router = make_cosine_router(Matrix(m, d, 0.0), Vec(m, 0.0), std::move(proj),
                                          std::move(dirs), 1.0);
        break;
    }
    case RouterKind::Random:
        model.router = make_random_router(m, d, derive_seed(seed, kRouterStream));
        break;
    }

    RandomStream expert_rng(derive_seed(seed, kExpertStream));
    model.experts = make_expert_set(m, d, manifest.hidden, out, expert_rng);
    model.adjacency = AdjacencyState(m, manifest.beta, manifest.norm_mode);
    model.adjacency.include_diagonal = manifest.include_diagonal;
    model.adjacency.sparsify_threshold = manifest.sparsify_threshold;
    return model;
}

double dataset_loss(const Model& model, const Dataset& ds, const Matrix* inputs_override,
                    TaskKind kind) {
    AdjacencyState adj = model.adjacency;
    adj.frozen = true;
    TokenBatch batch{inputs_override ? *inputs_override : ds.inputs};
    LayerOutput out = forward(model.experts, model.router,
                              model.mode == RoutingMode::Symphony ? &adj : nullptr, batch,
                              model.k, model.mode, model.convention);
    return task_loss_grad(out.y, ds, kind, false).loss;
}

namespace {

struct Momentum {
    std::vector<Expert> experts;
    Matrix router_weights;
    Vec router_bias;
    Matrix cosine_proj;
    Matrix cosine_experts;
};

Momentum make_momentum(const Model& model) {
    Momentum mom;
    const std::size_t m = model.experts.count();
    mom.experts.resize(m);
    for (std::size_t j = 0; j < m; ++j) {
        const Expert& e = model.experts.experts[j];
        mom.experts[j].w1 = Matrix(e.w1.rows(), e.w1.cols(), 0.0);
        mom.experts[j].b1 = Vec(e.b1.size(), 0.0);
        mom.experts[j].w2 = Matrix(e.w2.rows(), e.w2.cols(), 0.0);
        mom.experts[j].b2 = Vec(e.b2.size(), 0.0);
    }
    mom.router_weights = Matrix(model.router.weights.rows(), model.router.weights.cols(), 0.0);
    mom.router_bias = Vec(model.router.bias.size(), 0.0);
    if (model.router.kind == RouterKind::Cosine) {
        mom.cosine_proj = Matrix(model.router.cosine_proj.rows(), model.router.cosine_proj.cols(), 0.0);
        mom.cosine_experts =
            Matrix(model.router.cosine_experts.rows(), model.router.cosine_experts.cols(), 0.0);
    }
    return mom;
}

void sgd_step(std::span<double> param, std::span<const double> grad, std::span<double> vel,
              double lr, double momentum) {
    for (std::size_t i = 0; i < param.size(); ++i) {
        vel[i] = momentum * vel[i] + grad[i];
        param[i] -= lr * vel[i];
    }
}

void apply_update(Model& model, Momentum& mom, const LayerGradients& g, const OptimParams& opt) {
    const double lr = opt.lr;
    const double mu = opt.momentum;
    for (std::size_t j = 0; j < model.experts.count(); ++j) {
        Expert& e = model.experts.experts[j];
        Expert& v = mom.experts[j];
        const Expert& ge = g.experts[j];
        sgd_step({e.w1.data(), e.w1.size()}, {ge.w1.data(), ge.w1.size()},
                 {v.w1.data(), v.w1.size()}, lr, mu);
        sgd_step(e.b1, ge.b1, v.b1, lr, mu);
        sgd_step({e.w2.data(), e.w2.size()}, {ge.w2.data(), ge.w2.size()},
                 {v.w2.data(), v.w2.size()}, lr, mu);
        sgd_step(e.b2, ge.b2, v.b2, lr, mu);
    }
    switch (model.router.kind) {
    case RouterKind::Linear:
        sgd_step({model.router.weights.data(), model.router.weights.size()},
                 {g.router_weights.data(), g.router_weights.size()},
                 {mom.router_weights.data(), mom.router_weights.size()}, lr, mu);
        sgd_step(model.router.bias, g.router_bias, mom.router_bias, lr, mu);
        break;
    case RouterKind::Cosine: {
        sgd_step({model.router.cosine_proj.data(), model.router.cosine_proj.size()},
                 {g.cosine_proj.data(), g.cosine_proj.size()},
                 {mom.cosine_proj.data(), mom.cosine_proj.size()}, lr, mu);
        sgd_step({model.router.cosine_experts.data(), model.router.cosine_experts.size()},
                 {g.cosine_experts.data(), g.cosine_experts.size()},
                 {mom.cosine_experts.data(), mom.cosine_experts.size()}, lr, mu);
        // Expert directions live on the unit sphere.
        for (std::size_t j = 0; j < model.router.cosine_experts.rows(); ++j) {
            auto row = model.router.cosine_experts.row(j);
            const double n = norm2(row);
            if (n > 0.0)
                for (double& v : row) v /= n;
        }
        break;
    }
    case RouterKind::Random:
        break; // frozen
    }
}

void dump_divergence(const std::string& out_dir, const Matrix& batch_inputs,
                     const AdjacencyState& adj, int epoch, std::size_t batch_index) {
    if (out_dir.empty()) return;
    save_matrix_file(batch_inputs, out_dir + "/diverged_batch.txt");
    save_adjacency_snapshot(adj, out_dir + "/diverged_adjacency.txt");
    std::ofstream note(out_dir + "/diverged.txt");
    note << "epoch " << epoch << " batch " << batch_index << "\n";
}

} // namespace

TrainResult train_model(const RunManifest& manifest, const SyntheticTask& task,
                        std::uint64_t seed, const std::string& out_dir, bool quiet) {
    Model model = build_model(manifest, task, seed);
    Momentum mom = make_momentum(model);
    const TaskKind kind = manifest.task.kind;
    const std::size_t n_train = task.train.size();
    const std::size_t bs = std::min(manifest.optim.batch_size, n_train);
    const std::size_t batches = (n_train + bs - 1) / bs;

    TrainResult result;
    std::vector<std::size_t> order(n_train);
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 0; epoch < manifest.optim.epochs; ++epoch) {
        RandomStream shuffle_rng(derive_seed(seed, kShuffleStream + epoch));
        for (std::size_t i = n_train - 1; i > 0; --i)
            std::swap(order[i], order[shuffle_rng.uniform_int(0, static_cast<int>(i))]);

        const double epoch_start = now_ms();
        double loss_sum = 0.0;
        for (std::size_t b = 0; b < batches; ++b) {
            const std::size_t lo = b * bs;
            const std::size_t hi = std::min(lo + bs, n_train);
            Dataset batch;
            batch.inputs = Matrix(hi - lo, task.regions.dim);
            const bool regression = kind == TaskKind::MixtureRegression;
            batch.targets = Matrix(hi - lo, regression ? task.out_dim() : 0);
            batch.labels.resize(hi - lo);
            for (std::size_t i = lo; i < hi; ++i) {
                const std::size_t src = order[i];
                std::copy(task.train.inputs.row(src).begin(), task.train.inputs.row(src).end(),
                          batch.inputs.row(i - lo).begin());
                if (regression)
                    std::copy(task.train.targets.row(src).begin(),
                              task.train.targets.row(src).end(),
                              batch.targets.row(i - lo).begin());
                batch.labels[i - lo] = task.train.labels[src];
            }

            ForwardTrace trace;
            TokenBatch tokens{batch.inputs};
            LayerOutput out = forward(model.experts, model.router,
                                      model.mode == RoutingMode::Symphony ? &model.adjacency
                                                                          : nullptr,
                                      tokens, model.k, model.mode, model.convention, &trace);
            LossGrad lg = task_loss_grad(out.y, batch, kind, true);
            if (!std::isfinite(lg.loss)) {
                dump_divergence(out_dir, batch.inputs, model.adjacency, epoch, b);
                throw NumericalError("training diverged (non-finite loss) at epoch " +
                                     std::to_string(epoch) + ", batch " + std::to_string(b) +
                                     (out_dir.empty() ? "" : "; diagnostics in " + out_dir));
            }
            loss_sum += lg.loss;
            LayerGradients grads = backward(trace, lg.grad, manifest.optim.aux_weight);
            apply_update(model, mom, grads, manifest.optim);
            if (model.mode == RoutingMode::Symphony) normalize_and_ema(model.adjacency);
        }
        const double epoch_ms = now_ms() - epoch_start;

        EpochMetrics em;
        em.epoch = epoch;
        em.train_loss = loss_sum / static_cast<double>(batches);
        em.valid_loss = dataset_loss(model, task.valid, nullptr, kind);
        {
            AdjacencyState adj = model.adjacency;
            adj.frozen = true;
            TokenBatch vb{task.valid.inputs};
            LayerOutput vout = forward(model.experts, model.router,
                                       model.mode == RoutingMode::Symphony ? &adj : nullptr, vb,
                                       model.k, model.mode, model.convention);
            LoadBalanceReport lb = load_balance_report({vout.selection}, model.experts.count());
            em.entropy_ratio = lb.entropy_ratio;
            em.frequency = lb.frequency;
        }
        em.rho = model.mode == RoutingMode::Symphony && model.adjacency.update_count > 0
                     ? spectral_report(model.adjacency).rho
                     : 0.0;
        em.wall_ms_per_batch = epoch_ms / static_cast<double>(batches);
        result.curve.push_back(em);

        if (!out_dir.empty() && model.mode == RoutingMode::Symphony) {
            char name[64];
            std::snprintf(name, sizeof(name), "/adjacency_epoch_%03d.txt", epoch);
            save_adjacency_snapshot(model.adjacency, out_dir + name);
        }
        if (!quiet && (epoch == 0 || epoch == manifest.optim.epochs - 1 || epoch % 10 == 9)) {
            std::printf("epoch %3d  train %.6f  valid %.6f\n", epoch, em.train_loss,
                        em.valid_loss);
            std::fflush(stdout);
        }
    }

    model.adjacency.frozen = true;
    result.model = std::move(model);
    return result;
}

std::vector<EvalCell> evaluate_model(Model& model, const SyntheticTask& task,
                                     std::span<const double> eps_multipliers, int noise_seeds,
                                     NoiseKind noise, std::uint64_t run_seed) {
    model.adjacency.frozen = true;
    const double diameter = task.regions.domain.diameter();
    const TaskKind kind = task.params.kind;
    const double rho = model.mode == RoutingMode::Symphony && model.adjacency.update_count > 0
                           ? spectral_report(model.adjacency).rho
                           : 0.0;

    std::vector<EvalCell> cells;
    for (std::size_t ei = 0; ei < eps_multipliers.size(); ++ei) {
        const double eps = eps_multipliers[ei] * diameter;
        for (int s = 0; s < noise_seeds; ++s) {
            const std::uint64_t noise_seed =
                derive_seed(derive_seed(run_seed, kEvalStream), ei * 10007 + s);
            const double t0 = now_ms();
            Matrix attacked = contaminate(task.test.inputs, eps, noise, noise_seed,
                                          &task.regions.centers);
            AdjacencyState adj = model.adjacency;
            TokenBatch batch{attacked};
            LayerOutput out = forward(model.experts, model.router,
                                      model.mode == RoutingMode::Symphony ? &adj : nullptr,
                                      batch, model.k, model.mode, model.convention);
            EvalCell cell;
            cell.run_seed = run_seed;
            cell.eps_multiplier = eps_multipliers[ei];
            cell.epsilon = eps;
            cell.noise_seed = s;
            cell.loss = task_loss_grad(out.y, task.test, kind, false).loss;
            LoadBalanceReport lb = load_balance_report({out.selection}, model.experts.count());
            cell.entropy_ratio = lb.entropy_ratio;
            cell.frequency = lb.frequency;
            cell.rho = rho;
            cell.wall_ms = now_ms() - t0;
            cells.push_back(std::move(cell));
        }
    }
    return cells;
}

std::vector<BenchRow> bench_overhead(std::span<const std::size_t> m_grid,
                                     std::span<const std::size_t> n_grid, int k, int reps,
                                     std::size_t dim, std::uint64_t seed) {
    if (m_grid.empty() || n_grid.empty()) throw ArgumentError("bench grids must be non-empty");
    if (reps < 1) throw ArgumentError("bench needs reps >= 1");

    std::vector<BenchRow> rows;
    for (std::size_t m : m_grid) {
        if (static_cast<std::size_t>(k) > m)
            throw ArgumentError("K exceeds expert count");
        Matrix adjacency = random_doubly_stochastic(m, derive_seed(seed, m));
        for (std::size_t n : n_grid) {
            RandomStream rng(derive_seed(seed, kBenchStream + m * 131071 + n));
            Matrix w(m, dim);
            rng.fill_normal({w.data(), w.size()}, 1.0 / std::sqrt(static_cast<double>(dim)));
            RouterParams router = make_linear_router(std::move(w), Vec(m, 0.0));
            TokenBatch tokens{Matrix(n, dim)};
            rng.fill_normal({tokens.data.data(), tokens.data.size()});

            AdjacencyState smoothed(m, 0.9, NormMode::Sinkhorn);
            smoothed.adjacency = adjacency;
            smoothed.update_count = 1;
            smoothed.frozen = true;
            AdjacencyState bypassed(m, 0.9, NormMode::Sinkhorn);
            bypassed.frozen = true;

            auto time_base = [&] {
                const double t0 = now_ms();
                Matrix scores = compute_scores(router, tokens);
                RouteResult r = baseline_route(scores, k);
                (void)r;
                return now_ms() - t0;
            };
            auto time_symphony = [&](AdjacencyState& state) {
                const double t0 = now_ms();
                Matrix scores = compute_scores(router, tokens);
                RouteResult r = symphony_route(state, scores, k);
                (void)r;
                return now_ms() - t0;
            };

            // Warmup, then interleave the variants.
            time_base();
            time_symphony(smoothed);
            time_symphony(bypassed);
            std::vector<double> tb(reps), ts(reps), ty(reps);
            for (int r = 0; r < reps; ++r) {
                tb[r] = time_base();
                ts[r] = time_symphony(smoothed);
                ty[r] = time_symphony(bypassed);
            }
            auto median = [](std::vector<double> v) {
                std::sort(v.begin(), v.end());
                const std::size_t h = v.size() / 2;
                return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
            };
            // Deltas are paired per repetition, then medianed: a load spike
            // hits both sides of a pair, so it cancels instead of skewing
            // one variant's median.
            std::vector<double> ds(reps), dy(reps);
            for (int r = 0; r < reps; ++r) {
                ds[r] = 100.0 * (ts[r] - tb[r]) / tb[r];
                dy[r] = 100.0 * (ty[r] - tb[r]) / tb[r];
            }

            BenchRow row;
            row.experts = m;
            row.tokens = n;
            row.base_ms = median(tb);
            row.symphony_ms = median(ts);
            row.bypass_ms = median(ty);
            row.delta_pct = median(ds);
            row.bypass_delta_pct = median(dy);
            const OverheadEstimate est = estimate_overhead(m, k, n, 1, sizeof(double));
            row.pred_extra_flops = est.infer_flops;
            row.pred_extra_bytes = est.infer_bytes;
            rows.push_back(row);
        }
    }
    return rows;
}

} // namespace symphony
