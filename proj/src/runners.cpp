// SPDX-License-Identifier: Apache-2.0
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <optional>

#include "symphony/csv.hpp"
#include "symphony/errors.hpp"
#include "symphony/experiment.hpp"
#include "symphony/io.hpp"
#include "symphony/parallel.hpp"

namespace symphony {

namespace fs = std::filesystem;

namespace {

struct RunContext {
    RunManifest manifest;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool quiet = false;
    std::chrono::steady_clock::time_point started;
};

RunContext begin_run(const RunOptions& opts) {
    if (opts.manifest_path.empty()) throw ArgumentError("manifest path is required");
    if (opts.out_dir.empty()) throw ArgumentError("output directory is required");
    if (opts.threads > 0) set_thread_budget(opts.threads);

    RunContext ctx;
    std::string manifest_text;
    {
        std::ifstream in(opts.manifest_path);
        if (!in) throw ArgumentError("manifest not found: " + opts.manifest_path);
        std::ostringstream os;
        os << in.rdbuf();
        manifest_text = os.str();
    }
    ctx.manifest = parse_manifest_text(manifest_text);
    if (opts.seed_override) ctx.manifest.seed = *opts.seed_override;
    ctx.seed = ctx.manifest.seed;
    ctx.out_dir = opts.out_dir;
    ctx.quiet = opts.quiet;
    ctx.started = std::chrono::steady_clock::now();

    const fs::path out(ctx.out_dir);
    if (fs::exists(out) && !fs::is_empty(out))
        throw ArgumentError("output directory is not empty: " + ctx.out_dir);
    fs::create_directories(out);
    char stamp[32];
    std::snprintf(stamp, sizeof(stamp), "%016llx",
                  static_cast<unsigned long long>(manifest_hash(ctx.manifest)));
    set_csv_run_stamp(stamp);
    // written from the bytes already read so pipes and fifos work as inputs
    std::ofstream verbatim(out / "manifest.txt");
    verbatim << manifest_text;
    std::ofstream canon(out / "manifest_canonical.txt");
    canon << serialize_manifest(ctx.manifest);
    return ctx;
}

void finish_run(const RunContext& ctx) {
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - ctx.started).count();
    char hash[32];
    std::snprintf(hash, sizeof(hash), "%016llx",
                  static_cast<unsigned long long>(manifest_hash(ctx.manifest)));
    std::ofstream marker(fs::path(ctx.out_dir) / "completed.txt");
    marker << "status ok\n";
    marker << "wall_seconds " << format_g12(wall) << "\n";
    marker << "seed " << ctx.seed << "\n";
    marker << "manifest_hash " << hash << "\n";
    if (!marker) throw IoError("failed to write completion marker");
    set_csv_run_stamp("");
}

void say(const RunContext& ctx, const std::string& line) {
    if (!ctx.quiet) {
        std::fputs((line + "\n").c_str(), stdout);
        std::fflush(stdout);
    }
}

const std::vector<std::string> kMetricsColumns = {
    "epoch", "split", "epsilon", "loss", "entropy_ratio", "freq", "rho", "wall_ms_per_batch"};

void write_curve(const std::string& path, const std::vector<EpochMetrics>& curve) {
    CsvWriter csv(path, "train_curve", kMetricsColumns);
    for (const EpochMetrics& em : curve) {
        // selection metrics are computed on the valid split only; explicit
        // placeholders keep the .dat mirror column-aligned
        csv.row({CsvWriter::num(em.epoch), "train", CsvWriter::num(0.0),
                 CsvWriter::num(em.train_loss), "nan", "-", "nan",
                 CsvWriter::num(em.wall_ms_per_batch)});
        csv.row({CsvWriter::num(em.epoch), "valid", CsvWriter::num(0.0),
                 CsvWriter::num(em.valid_loss), CsvWriter::num(em.entropy_ratio),
                 CsvWriter::joined(em.frequency), CsvWriter::num(em.rho),
                 CsvWriter::num(em.wall_ms_per_batch)});
    }
}

const std::vector<std::string> kEvalColumns = {"run_seed", "split",   "epsilon_mult",
                                               "epsilon",  "noise_seed", "loss",
                                               "entropy_ratio", "freq", "rho", "wall_ms"};

void write_eval_rows(CsvWriter& csv, const std::vector<EvalCell>& cells) {
    for (const EvalCell& c : cells)
        csv.row({CsvWriter::num(c.run_seed), "test", CsvWriter::num(c.eps_multiplier),
                 CsvWriter::num(c.epsilon), CsvWriter::num(c.noise_seed),
                 CsvWriter::num(c.loss), CsvWriter::num(c.entropy_ratio),
                 CsvWriter::joined(c.frequency), CsvWriter::num(c.rho),
                 CsvWriter::num(c.wall_ms)});
}

} // namespace

void save_checkpoint(const Model& model, const std::string& dir) {
    fs::create_directories(dir);
    std::ofstream meta(fs::path(dir) / "model.manifest");
    if (!meta) throw IoError("cannot write checkpoint manifest in " + dir);
    meta << "experts = " << model.experts.count() << "\n";
    meta << "dim = " << model.experts.input_dim() << "\n";
    meta << "hidden = " << model.experts.hidden_dim() << "\n";
    meta << "out_dim = " << model.experts.output_dim() << "\n";
    meta << "k = " << model.k << "\n";
    meta << "mode = " << routing_mode_name(model.mode) << "\n";
    meta << "gate_convention = " << gate_convention_name(model.convention) << "\n";
    meta << "router = " << router_kind_name(model.router.kind) << "\n";
    meta << "cosine_temperature = " << format_g12(model.router.cosine_temperature) << "\n";
    meta << "seed = " << model.seed << "\n";

    save_matrix_file(model.router.weights, dir + "/router_weights.txt");
    Matrix bias(1, model.router.bias.size());
    std::copy(model.router.bias.begin(), model.router.bias.end(), bias.row(0).begin());
    save_matrix_file(bias, dir + "/router_bias.txt");
    if (model.router.kind == RouterKind::Cosine) {
        save_matrix_file(model.router.cosine_proj, dir + "/cosine_proj.txt");
        save_matrix_file(model.router.cosine_experts, dir + "/cosine_experts.txt");
    }
    for (std::size_t j = 0; j < model.experts.count(); ++j) {
        char name[64];
        const Expert& e = model.experts.experts[j];
        std::snprintf(name, sizeof(name), "/expert_%03zu_", j);
        save_matrix_file(e.w1, dir + name + "w1.txt");
        save_matrix_file(e.w2, dir + name + "w2.txt");
        Matrix b1(1, e.b1.size());
        std::copy(e.b1.begin(), e.b1.end(), b1.row(0).begin());
        save_matrix_file(b1, dir + name + "b1.txt");
        Matrix b2(1, e.b2.size());
        std::copy(e.b2.begin(), e.b2.end(), b2.row(0).begin());
        save_matrix_file(b2, dir + name + "b2.txt");
    }
    save_adjacency_snapshot(model.adjacency, dir + "/adjacency.txt");
}

Model load_checkpoint(const std::string& dir) {
    std::ifstream meta(fs::path(dir) / "model.manifest");
    if (!meta) throw IoError("checkpoint manifest not found in " + dir);
    std::size_t experts = 0, dim = 0, hidden = 0, out_dim = 0;
    Model model;
    std::string line;
    std::string router_kind = "linear";
    double temperature = 1.0;
    while (std::getline(meta, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = line.substr(0, line.find(' '));
        const std::string value = line.substr(eq + 2);
        if (key == "experts") experts = std::stoull(value);
        else if (key == "dim") dim = std::stoull(value);
        else if (key == "hidden") hidden = std::stoull(value);
        else if (key == "out_dim") out_dim = std::stoull(value);
        else if (key == "k") model.k = std::stoi(value);
        else if (key == "mode") model.mode = routing_mode_from_name(value);
        else if (key == "gate_convention") model.convention = gate_convention_from_name(value);
        else if (key == "router") router_kind = value;
        else if (key == "cosine_temperature") temperature = std::stod(value);
        else if (key == "seed") model.seed = std::stoull(value);
    }
    if (experts == 0 || dim == 0 || hidden == 0 || out_dim == 0)
        throw IoError("checkpoint manifest incomplete in " + dir);

    model.router.kind = router_kind_from_name(router_kind);
    model.router.weights = load_matrix_file(dir + "/router_weights.txt");
    Matrix bias = load_matrix_file(dir + "/router_bias.txt");
    model.router.bias.assign(bias.row(0).begin(), bias.row(0).end());
    model.router.cosine_temperature = temperature;
    if (model.router.kind == RouterKind::Cosine) {
        model.router.cosine_proj = load_matrix_file(dir + "/cosine_proj.txt");
        model.router.cosine_experts = load_matrix_file(dir + "/cosine_experts.txt");
    }
    model.router.validate();

    model.experts.experts.resize(experts);
    for (std::size_t j = 0; j < experts; ++j) {
        char name[64];
        std::snprintf(name, sizeof(name), "/expert_%03zu_", j);
        Expert& e = model.experts.experts[j];
        e.w1 = load_matrix_file(dir + name + "w1.txt");
        e.w2 = load_matrix_file(dir + name + "w2.txt");
        Matrix b1 = load_matrix_file(dir + name + "b1.txt");
        e.b1.assign(b1.row(0).begin(), b1.row(0).end());
        Matrix b2 = load_matrix_file(dir + name + "b2.txt");
        e.b2.assign(b2.row(0).begin(), b2.row(0).end());
    }
    model.experts.validate();
    model.adjacency = load_adjacency_snapshot(dir + "/adjacency.txt");
    model.adjacency.frozen = true;
    return model;
}

void run_train(const RunOptions& opts) {
    RunContext ctx = begin_run(opts);
    SyntheticTask task = generate_task(ctx.manifest.task, derive_seed(ctx.seed, 101));
    TrainResult result = train_model(ctx.manifest, task, ctx.seed, ctx.out_dir, ctx.quiet);
    write_curve(ctx.out_dir + "/train_curve.csv", result.curve);
    save_checkpoint(result.model, ctx.out_dir + "/checkpoint");
    say(ctx, "final train loss " + format_g12(result.curve.back().train_loss) +
                 ", valid loss " + format_g12(result.curve.back().valid_loss));
    finish_run(ctx);
}

void run_eval(const RunOptions& opts) {
    RunContext ctx = begin_run(opts);
    if (ctx.manifest.checkpoint.empty())
        throw ArgumentError("eval requires a 'checkpoint' manifest key");
    Model model = load_checkpoint(ctx.manifest.checkpoint);
    // The task is identified by the checkpoint's seed; the run seed only
    // drives contamination draws.
    SyntheticTask task = generate_task(ctx.manifest.task, derive_seed(model.seed, 101));
    const Vec clean{0.0};
    std::vector<EvalCell> cells =
        evaluate_model(model, task, clean, 1, ctx.manifest.eval_noise, ctx.seed);
    CsvWriter csv(ctx.out_dir + "/eval.csv", "eval", kEvalColumns);
    write_eval_rows(csv, cells);
    say(ctx, "clean test loss " + format_g12(cells.front().loss));
    finish_run(ctx);
}

void run_attack_eval(const RunOptions& opts) {
    RunContext ctx = begin_run(opts);
    CsvWriter csv(ctx.out_dir + "/robustness.csv", "robustness", kEvalColumns);

    if (!ctx.manifest.checkpoint.empty()) {
        Model model = load_checkpoint(ctx.manifest.checkpoint);
        SyntheticTask task = generate_task(ctx.manifest.task, derive_seed(model.seed, 101));
        std::vector<EvalCell> cells =
            evaluate_model(model, task, ctx.manifest.epsilon_grid, ctx.manifest.eval_noise_seeds,
                           ctx.manifest.eval_noise, ctx.seed);
        write_eval_rows(csv, cells);
        finish_run(ctx);
        return;
    }

    for (int i = 0; i < ctx.manifest.run_seeds; ++i) {
        const std::uint64_t run_seed = derive_seed(ctx.seed, 400 + i);
        SyntheticTask task = generate_task(ctx.manifest.task, derive_seed(run_seed, 101));
        TrainResult tr = train_model(ctx.manifest, task, run_seed, "", true);
        char name[64];
        std::snprintf(name, sizeof(name), "/seed_%02d_curve.csv", i);
        write_curve(ctx.out_dir + name, tr.curve);
        std::vector<EvalCell> cells =
            evaluate_model(tr.model, task, ctx.manifest.epsilon_grid,
                           ctx.manifest.eval_noise_seeds, ctx.manifest.eval_noise, run_seed);
        write_eval_rows(csv, cells);
        say(ctx, "seed " + std::to_string(i) + ": clean " + format_g12(cells.front().loss) +
                     ", attacked " + format_g12(cells.back().loss));
    }
    finish_run(ctx);
}

void run_verify_theorem1(const RunOptions& opts) {
    RunContext ctx = begin_run(opts);
    const auto& t = ctx.manifest.theorem;
    if (t.regions_file.empty())
        throw ArgumentError("verify-theorem1 requires a 'theorem.regions_file' manifest key");
    RegionSpec spec = load_region_spec(t.regions_file);
    const OracleMode oracle = spec.dim == 2 ? OracleMode::Analytic2D : OracleMode::MonteCarloDense;

    CsvWriter rows(ctx.out_dir + "/theorem1.csv", "theorem1",
                   {"pair", "N", "epsilon", "alpha", "a_jk", "mu", "gamma", "violated", "noise",
                    "trial"});
    CsvWriter summary(ctx.out_dir + "/theorem1_summary.csv", "theorem1_summary",
                      {"pair", "N", "epsilon", "alpha", "noise", "trials", "violations", "rate",
                       "gamma", "l_tilde", "mu", "mu_mc", "mu_mc_stderr"});
    std::optional<CsvWriter> conv;
    if (!t.convergence_n.empty())
        conv.emplace(ctx.out_dir + "/convergence.csv", "convergence",
                     std::vector<std::string>{"pair", "N", "max_abs_error", "slope"});

    for (const auto& pair : t.pairs) {
        const std::string pair_name =
            std::to_string(pair.first) + ":" + std::to_string(pair.second);
        const MeasureEstimate mu =
            oracle_coselect_measure(spec, pair.first, pair.second, oracle, t.mc_samples,
                                    derive_seed(ctx.seed, 0x0c1e));
        const MeasureEstimate mu_mc =
            oracle_coselect_measure(spec, pair.first, pair.second, OracleMode::MonteCarloDense,
                                    t.mc_samples, derive_seed(ctx.seed, 0x0c1e));
        const double l_tilde =
            t.l_tilde >= 0.0
                ? t.l_tilde
                : calibrate_l_tilde(spec, std::span(&pair, 1), t.calibration_epsilon, oracle,
                                    t.mc_samples, derive_seed(ctx.seed, 0xca1b));
        say(ctx, "pair " + pair_name + ": mu = " + format_g12(mu.value) +
                     " (mc " + format_g12(mu_mc.value) + " +- " + format_g12(mu_mc.std_error) +
                     "), calibrated L = " + format_g12(l_tilde));

        for (NoiseKind noise : t.noises) {
            for (double eps : t.epsilons) {
                Theorem1Report rep = check_theorem1(
                    spec, pair, t.n, eps, t.alpha, t.trials, l_tilde, noise,
                    derive_seed(ctx.seed, static_cast<std::uint64_t>(eps * 1e6) + 13), mu.value);
                for (std::size_t i = 0; i < rep.results.size(); ++i) {
                    const BoundCheckResult& r = rep.results[i];
                    rows.row({pair_name, CsvWriter::num(static_cast<std::uint64_t>(r.n)),
                              CsvWriter::num(r.epsilon), CsvWriter::num(r.alpha),
                              CsvWriter::num(r.a_jk), CsvWriter::num(r.mu),
                              CsvWriter::num(r.gamma), r.violated ? "1" : "0",
                              noise_kind_name(noise), CsvWriter::num(static_cast<int>(i))});
                }
                summary.row({pair_name, CsvWriter::num(static_cast<std::uint64_t>(t.n)),
                             CsvWriter::num(eps), CsvWriter::num(t.alpha),
                             noise_kind_name(noise), CsvWriter::num(t.trials),
                             CsvWriter::num(rep.violations), CsvWriter::num(rep.violation_rate),
                             CsvWriter::num(rep.gamma), CsvWriter::num(l_tilde),
                             CsvWriter::num(mu.value), CsvWriter::num(mu_mc.value),
                             CsvWriter::num(mu_mc.std_error)});
                say(ctx, "  eps " + format_g12(eps) + " " + noise_kind_name(noise) +
                             ": violation rate " + format_g12(rep.violation_rate) + " (gamma " +
                             format_g12(rep.gamma) + ")");
            }
        }

        if (conv) {
            ConvergenceFit fit =
                consistency_rate(spec, pair, t.convergence_n, t.convergence_trials,
                                 derive_seed(ctx.seed, 0xf17), mu.value);
            for (const ConvergencePoint& p : fit.points)
                conv->row({pair_name, CsvWriter::num(static_cast<std::uint64_t>(p.n)),
                           CsvWriter::num(p.max_abs_error), CsvWriter::num(fit.slope)});
            say(ctx, "  log-log error slope " + format_g12(fit.slope));
        }
    }
    finish_run(ctx);
}

void run_verify_prop1(const RunOptions& opts) {
    RunContext ctx = begin_run(opts);
    const auto& p = ctx.manifest.prop1;

    CsvWriter csv(ctx.out_dir + "/prop1.csv", "prop1",
                  {"matrix", "size", "applicable", "reason", "lambda_max", "rho", "connected",
                   "contraction_slack", "pair_slack", "nonexpansion_slack", "fixed_point_error",
                   "topk_trials", "topk_changes", "pass"});

    auto emit = [&](const std::string& name, const Matrix& a) {
        Prop1Report rep = check_prop1(a, p.trials, p.k, derive_seed(ctx.seed, 0x9191));
        csv.row({name, CsvWriter::num(static_cast<std::uint64_t>(a.rows())),
                 rep.applicable ? "1" : "0", rep.skip_reason.empty() ? "-" : rep.skip_reason,
                 CsvWriter::num(rep.lambda_max), CsvWriter::num(rep.rho),
                 rep.connected ? "1" : "0", CsvWriter::num(rep.worst_contraction_slack),
                 CsvWriter::num(rep.worst_pair_slack),
                 CsvWriter::num(rep.worst_nonexpansion_slack),
                 CsvWriter::num(rep.fixed_point_error), CsvWriter::num(rep.topk_trials),
                 CsvWriter::num(rep.topk_changes), rep.pass ? "1" : "0"});
        if (!rep.applicable)
            say(ctx, name + ": skipped (" + rep.skip_reason + ")");
        else
            say(ctx, name + ": rho = " + format_g12(rep.rho) + ", " +
                         (rep.pass ? "all checks passed" : "CHECKS FAILED"));
        return rep;
    };

    if (!p.adjacency_file.empty()) {
        AdjacencyState state = load_adjacency_snapshot(p.adjacency_file);
        emit(p.adjacency_file, state.adjacency);
    } else {
        for (int i = 0; i < p.matrices; ++i)
            emit("random_" + std::to_string(i),
                 random_doubly_stochastic(p.experts, derive_seed(ctx.seed, 700 + i)));
    }
    finish_run(ctx);
}

void run_bench(const RunOptions& opts) {
    RunContext ctx = begin_run(opts);
    const auto& b = ctx.manifest.bench;
    std::vector<BenchRow> rows = bench_overhead(b.m_grid, b.n_grid, ctx.manifest.k, b.reps,
                                                b.dim, ctx.seed);
    CsvWriter csv(ctx.out_dir + "/bench.csv", "bench",
                  {"experts", "tokens", "k", "dim", "reps", "base_ms", "symphony_ms",
                   "bypass_ms", "delta_pct", "bypass_delta_pct", "pred_extra_flops",
                   "pred_extra_bytes"});
    for (const BenchRow& r : rows) {
        csv.row({CsvWriter::num(static_cast<std::uint64_t>(r.experts)),
                 CsvWriter::num(static_cast<std::uint64_t>(r.tokens)),
                 CsvWriter::num(ctx.manifest.k),
                 CsvWriter::num(static_cast<std::uint64_t>(b.dim)), CsvWriter::num(b.reps),
                 CsvWriter::num(r.base_ms), CsvWriter::num(r.symphony_ms),
                 CsvWriter::num(r.bypass_ms), CsvWriter::num(r.delta_pct),
                 CsvWriter::num(r.bypass_delta_pct), CsvWriter::num(r.pred_extra_flops),
                 CsvWriter::num(r.pred_extra_bytes)});
        say(ctx, "M=" + std::to_string(r.experts) + " N=" + std::to_string(r.tokens) +
                     ": base " + format_g12(r.base_ms) + " ms, symphony " +
                     format_g12(r.symphony_ms) + " ms (" + format_g12(r.delta_pct) + "%)");
    }
    finish_run(ctx);
}

void run_dump_adjacency(const RunOptions& opts) {
    RunContext ctx = begin_run(opts);
    AdjacencyState state;
    if (!ctx.manifest.prop1.adjacency_file.empty()) {
        state = load_adjacency_snapshot(ctx.manifest.prop1.adjacency_file);
    } else if (!ctx.manifest.checkpoint.empty()) {
        state = load_checkpoint(ctx.manifest.checkpoint).adjacency;
    } else {
        throw ArgumentError(
            "dump-adjacency requires 'checkpoint' or 'prop1.adjacency_file' in the manifest");
    }
    save_adjacency_snapshot(state, ctx.out_dir + "/adjacency.txt");
    SpectralReport rep = spectral_report(state);
    CsvWriter csv(ctx.out_dir + "/spectral.csv", "spectral",
                  {"size", "mode", "updates", "lambda_max", "rho", "connected", "eigenvalues"});
    csv.row({CsvWriter::num(static_cast<std::uint64_t>(state.experts())),
             norm_mode_name(state.norm_mode), CsvWriter::num(state.update_count),
             CsvWriter::num(rep.lambda_max), CsvWriter::num(rep.rho),
             rep.connected ? "1" : "0", CsvWriter::joined(rep.eigenvalues)});
    say(ctx, "rho = " + format_g12(rep.rho) + ", lambda_max = " + format_g12(rep.lambda_max));
    finish_run(ctx);
}

} // namespace symphony
