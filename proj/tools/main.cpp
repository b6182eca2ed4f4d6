// SPDX-License-Identifier: Apache-2.0
//
// Command-line driver for the symphony routing library. Exit codes: 0 on
// success, 1 on validation errors (bad flags, bad manifest, missing inputs),
// 2 on runtime failures (divergence, numerical trouble, failed writes).

#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <string>

#include "CLI11.hpp"
#include "symphony.h"

namespace {

struct CommonArgs {
    std::string manifest;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool has_seed = false;
    int threads = 0;
    bool quiet = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--manifest", args.manifest, "manifest file (key = value lines)")
        ->required();
    cmd->add_option("--out", args.out_dir, "output directory for this run")->required();
    cmd->add_option("--seed", args.seed, "override the manifest seed")
        ->each([&args](const std::string&) { args.has_seed = true; });
    cmd->add_option("--threads", args.threads, "worker thread cap");
    cmd->add_flag("--quiet", args.quiet, "suppress progress output");
}

int exit_code_for(sym_status status) {
    switch (status) {
    case SYM_OK:
        return 0;
    case SYM_ERR_ARGUMENT:
    case SYM_ERR_DIMENSION:
        return 1;
    default:
        return 2;
    }
}

int dispatch(sym_status (*run)(const sym_run_options*), const CommonArgs& args) {
    sym_run_options opts{};
    opts.manifest_path = args.manifest.c_str();
    opts.out_dir = args.out_dir.c_str();
    opts.has_seed_override = args.has_seed ? 1 : 0;
    opts.seed_override = args.seed;
    opts.threads = args.threads;
    opts.quiet = args.quiet ? 1 : 0;
    const sym_status status = run(&opts);
    if (status != SYM_OK)
        std::fprintf(stderr, "error (%s): %s\n", sym_status_name(status), sym_last_error());
    else if (!args.quiet)
        std::printf("run complete: %s\n", args.out_dir.c_str());
    return exit_code_for(status);
}

int run_estimate_overhead(std::uint64_t layers, std::uint64_t experts, std::uint64_t k,
                          std::uint64_t tokens, std::uint64_t bytes) {
    std::uint64_t train_flops = 0, infer_flops = 0, train_bytes = 0, infer_bytes = 0;
    const sym_status status = sym_estimate_overhead(experts, k, tokens, layers, bytes,
                                                    &train_flops, &infer_flops, &train_bytes,
                                                    &infer_bytes);
    if (status != SYM_OK) {
        std::fprintf(stderr, "error (%s): %s\n", sym_status_name(status), sym_last_error());
        return exit_code_for(status);
    }
    char train_mib[64], infer_mib[64], train_g[64], infer_g[64];
    sym_format_mib(train_bytes, train_mib, sizeof(train_mib));
    sym_format_mib(infer_bytes, infer_mib, sizeof(infer_mib));
    sym_format_gflops(train_flops, train_g, sizeof(train_g));
    sym_format_gflops(infer_flops, infer_g, sizeof(infer_g));
    std::printf("memory: train %s MB / infer %s MB\n", train_mib, infer_mib);
    std::printf("compute: train %s GFLOPs / infer %s GFLOPs\n", train_g, infer_g);
    std::printf("raw: train_bytes=%" PRIu64 " infer_bytes=%" PRIu64 " train_flops=%" PRIu64
                " infer_flops=%" PRIu64 "\n",
                train_bytes, infer_bytes, train_flops, infer_flops);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"symphony: sparse mixture-of-experts routing with an expert social graph"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(sym_version()));

    CommonArgs train_args, eval_args, attack_args, theorem_args, prop1_args, bench_args,
        dump_args;
    CLI::App* train = app.add_subcommand("train", "train a routed layer on a synthetic task");
    add_common(train, train_args);
    CLI::App* eval = app.add_subcommand("eval", "clean evaluation of a trained checkpoint");
    add_common(eval, eval_args);
    CLI::App* attack =
        app.add_subcommand("attack-eval", "clean-vs-contaminated evaluation protocol");
    add_common(attack, attack_args);
    CLI::App* theorem =
        app.add_subcommand("verify-theorem1", "concentration bound verification");
    add_common(theorem, theorem_args);
    CLI::App* prop1 = app.add_subcommand("verify-prop1", "spectral robustness property checks");
    add_common(prop1, prop1_args);
    CLI::App* bench = app.add_subcommand("bench", "routing overhead microbenchmark");
    add_common(bench, bench_args);
    CLI::App* dump = app.add_subcommand("dump-adjacency", "write an adjacency snapshot + spectrum");
    add_common(dump, dump_args);

    std::uint64_t eo_layers = 1, eo_experts = 16, eo_k = 2, eo_tokens = 512, eo_bytes = 4;
    CLI::App* overhead =
        app.add_subcommand("estimate-overhead", "closed-form social-graph cost calculator");
    overhead->add_option("--L", eo_layers, "layer count")->required();
    overhead->add_option("--M", eo_experts, "experts per layer")->required();
    overhead->add_option("--K", eo_k, "selected experts per token")->required();
    overhead->add_option("--N", eo_tokens, "tokens per batch")->required();
    overhead->add_option("--bytes", eo_bytes, "bytes per matrix entry (default 4)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    if (train->parsed()) return dispatch(sym_run_train, train_args);
    if (eval->parsed()) return dispatch(sym_run_eval, eval_args);
    if (attack->parsed()) return dispatch(sym_run_attack_eval, attack_args);
    if (theorem->parsed()) return dispatch(sym_run_verify_theorem1, theorem_args);
    if (prop1->parsed()) return dispatch(sym_run_verify_prop1, prop1_args);
    if (bench->parsed()) return dispatch(sym_run_bench, bench_args);
    if (dump->parsed()) return dispatch(sym_run_dump_adjacency, dump_args);
    if (overhead->parsed())
        return run_estimate_overhead(eo_layers, eo_experts, eo_k, eo_tokens, eo_bytes);
    return 1;
}
