// SPDX-License-Identifier: Apache-2.0
#include "symphony/manifest.hpp"

#include <fstream>
#include <sstream>

#include "symphony/errors.hpp"
#include "symphony/io.hpp"

namespace symphony {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split_ws(const std::string& s) {
    std::istringstream is(s);
    std::vector<std::string> out;
    std::string tok;
    while (is >> tok) out.push_back(tok);
    return out;
}

double to_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ArgumentError("manifest key '" + key + "' expects a number, got '" + v + "'");
    }
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const unsigned long long u = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return u;
    } catch (const std::exception&) {
        throw ArgumentError("manifest key '" + key + "' expects an unsigned integer, got '" + v +
                            "'");
    }
}

int to_int(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const long n = std::stol(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return static_cast<int>(n);
    } catch (const std::exception&) {
        throw ArgumentError("manifest key '" + key + "' expects an integer, got '" + v + "'");
    }
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ArgumentError("manifest key '" + key + "' expects true/false, got '" + v + "'");
}

Vec to_vec(const std::string& key, const std::string& v) {
    Vec out;
    for (const std::string& tok : split_ws(v)) out.push_back(to_double(key, tok));
    return out;
}

std::vector<std::size_t> to_size_list(const std::string& key, const std::string& v) {
    std::vector<std::size_t> out;
    for (const std::string& tok : split_ws(v)) out.push_back(to_u64(key, tok));
    return out;
}

std::vector<std::uint64_t> to_u64_list(const std::string& key, const std::string& v) {
    std::vector<std::uint64_t> out;
    for (const std::string& tok : split_ws(v)) out.push_back(to_u64(key, tok));
    return out;
}

std::vector<std::pair<int, int>> to_pairs(const std::string& key, const std::string& v) {
    std::vector<std::pair<int, int>> out;
    for (const std::string& tok : split_ws(v)) {
        const auto colon = tok.find(':');
        if (colon == std::string::npos)
            throw ArgumentError("manifest key '" + key + "' expects j:k pairs, got '" + tok + "'");
        out.emplace_back(to_int(key, tok.substr(0, colon)), to_int(key, tok.substr(colon + 1)));
    }
    return out;
}

void apply_key(RunManifest& m, const std::string& key, const std::string& value) {
    if (key == "mode") m.mode = routing_mode_from_name(value);
    else if (key == "router") m.router_kind = router_kind_from_name(value);
    else if (key == "experts") m.experts = to_u64(key, value);
    else if (key == "k") m.k = to_int(key, value);
    else if (key == "beta") m.beta = to_double(key, value);
    else if (key == "norm_mode") m.norm_mode = norm_mode_from_name(value);
    else if (key == "gate_convention") m.convention = gate_convention_from_name(value);
    else if (key == "include_diagonal") m.include_diagonal = to_bool(key, value);
    else if (key == "sparsify_threshold") m.sparsify_threshold = to_double(key, value);
    else if (key == "hidden") m.hidden = to_u64(key, value);
    else if (key == "seed") m.seed = to_u64(key, value);
    else if (key == "checkpoint") m.checkpoint = value;
    else if (key == "task.kind") m.task.kind = task_kind_from_name(value);
    else if (key == "task.dim") m.task.dim = to_u64(key, value);
    else if (key == "task.regions") m.task.regions = to_u64(key, value);
    else if (key == "task.out_dim") m.task.out_dim = to_u64(key, value);
    else if (key == "task.radius") m.task.radius = to_double(key, value);
    else if (key == "task.box_lo") m.task.box_lo = to_double(key, value);
    else if (key == "task.box_hi") m.task.box_hi = to_double(key, value);
    else if (key == "task.sigma_obs") m.task.sigma_obs = to_double(key, value);
    else if (key == "task.train_size") m.task.train_size = to_u64(key, value);
    else if (key == "task.valid_size") m.task.valid_size = to_u64(key, value);
    else if (key == "task.test_size") m.task.test_size = to_u64(key, value);
    else if (key == "optim.lr") m.optim.lr = to_double(key, value);
    else if (key == "optim.momentum") m.optim.momentum = to_double(key, value);
    else if (key == "optim.epochs") m.optim.epochs = to_int(key, value);
    else if (key == "optim.batch_size") m.optim.batch_size = to_u64(key, value);
    else if (key == "optim.aux_weight") m.optim.aux_weight = to_double(key, value);
    else if (key == "eval.epsilon_grid") m.epsilon_grid = to_vec(key, value);
    else if (key == "eval.noise_seeds") m.eval_noise_seeds = to_int(key, value);
    else if (key == "eval.run_seeds") m.run_seeds = to_int(key, value);
    else if (key == "eval.noise") m.eval_noise = noise_kind_from_name(value);
    else if (key == "theorem.regions_file") m.theorem.regions_file = value;
    else if (key == "theorem.pairs") m.theorem.pairs = to_pairs(key, value);
    else if (key == "theorem.n") m.theorem.n = to_u64(key, value);
    else if (key == "theorem.alpha") m.theorem.alpha = to_double(key, value);
    else if (key == "theorem.trials") m.theorem.trials = to_int(key, value);
    else if (key == "theorem.epsilons") m.theorem.epsilons = to_vec(key, value);
    else if (key == "theorem.noises") {
        m.theorem.noises.clear();
        for (const std::string& tok : split_ws(value))
            m.theorem.noises.push_back(noise_kind_from_name(tok));
    } else if (key == "theorem.l_tilde") m.theorem.l_tilde = value == "auto" ? -1.0 : to_double(key, value);
    else if (key == "theorem.calibration_epsilon") m.theorem.calibration_epsilon = to_double(key, value);
    else if (key == "theorem.mc_samples") m.theorem.mc_samples = to_u64(key, value);
    else if (key == "theorem.convergence_n") m.theorem.convergence_n = to_u64_list(key, value);
    else if (key == "theorem.convergence_trials") m.theorem.convergence_trials = to_int(key, value);
    else if (key == "prop1.adjacency_file") m.prop1.adjacency_file = value;
    else if (key == "prop1.experts") m.prop1.experts = to_u64(key, value);
    else if (key == "prop1.matrices") m.prop1.matrices = to_int(key, value);
    else if (key == "prop1.trials") m.prop1.trials = to_int(key, value);
    else if (key == "prop1.k") m.prop1.k = to_int(key, value);
    else if (key == "bench.m_grid") m.bench.m_grid = to_size_list(key, value);
    else if (key == "bench.n_grid") m.bench.n_grid = to_size_list(key, value);
    else if (key == "bench.reps") m.bench.reps = to_int(key, value);
    else if (key == "bench.dim") m.bench.dim = to_u64(key, value);
    else throw ArgumentError("unknown manifest key: " + key);
}

} // namespace

void RunManifest::validate() const {
    if (experts < 2) throw ArgumentError("experts must be >= 2");
    if (k < 1) throw ArgumentError("k must be >= 1");
    if (static_cast<std::size_t>(k) > experts) throw ArgumentError("K exceeds expert count");
    if (!(beta >= 0.0 && beta < 1.0)) throw ArgumentError("beta must lie in [0, 1)");
    if (hidden < 1) throw ArgumentError("hidden width must be >= 1");
    if (sparsify_threshold < 0.0 || sparsify_threshold >= 1.0)
        throw ArgumentError("sparsify_threshold must lie in [0, 1)");
    task.validate();
    if (optim.epochs < 1 || optim.batch_size < 1)
        throw ArgumentError("optimizer epochs and batch size must be >= 1");
    if (!(optim.lr > 0.0)) throw ArgumentError("learning rate must be positive");
    if (eval_noise_seeds < 1 || run_seeds < 1)
        throw ArgumentError("eval.noise_seeds and eval.run_seeds must be >= 1");
    for (double e : epsilon_grid)
        if (e < 0.0) throw ArgumentError("epsilon grid entries must be nonnegative");
    if (theorem.trials < 1 || theorem.n < 1)
        throw ArgumentError("theorem trials and n must be >= 1");
    if (!(theorem.alpha > 0.0 && theorem.alpha < 1.0))
        throw ArgumentError("theorem alpha must lie in (0, 1)");
    if (prop1.matrices < 1 || prop1.trials < 1 || prop1.k < 1 || prop1.experts < 2)
        throw ArgumentError("prop1 section values out of range");
    if (bench.reps < 1 || bench.m_grid.empty() || bench.n_grid.empty() || bench.dim < 1)
        throw ArgumentError("bench section values out of range");
}

RunManifest parse_manifest_text(const std::string& text) {
    RunManifest m;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ArgumentError("manifest line " + std::to_string(lineno) +
                                " is not 'key = value': " + t);
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (key.empty() || value.empty())
            throw ArgumentError("manifest line " + std::to_string(lineno) +
                                " has an empty key or value");
        apply_key(m, key, value);
    }
    m.validate();
    return m;
}

RunManifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ArgumentError("manifest not found: " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return parse_manifest_text(os.str());
}

namespace {

std::string vec_str(std::span<const double> v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ' ';
        s += format_g12(v[i]);
    }
    return s;
}

template <typename T> std::string list_str(const std::vector<T>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ' ';
        s += std::to_string(v[i]);
    }
    return s;
}

} // namespace

std::string serialize_manifest(const RunManifest& m) {
    std::ostringstream os;
    os << "mode = " << routing_mode_name(m.mode) << "\n";
    os << "router = " << router_kind_name(m.router_kind) << "\n";
    os << "experts = " << m.experts << "\n";
    os << "k = " << m.k << "\n";
    os << "beta = " << format_g12(m.beta) << "\n";
    os << "norm_mode = " << norm_mode_name(m.norm_mode) << "\n";
    os << "gate_convention = " << gate_convention_name(m.convention) << "\n";
    os << "include_diagonal = " << (m.include_diagonal ? "true" : "false") << "\n";
    os << "sparsify_threshold = " << format_g12(m.sparsify_threshold) << "\n";
    os << "hidden = " << m.hidden << "\n";
    os << "seed = " << m.seed << "\n";
    if (!m.checkpoint.empty()) os << "checkpoint = " << m.checkpoint << "\n";
    os << "task.kind = " << task_kind_name(m.task.kind) << "\n";
    os << "task.dim = " << m.task.dim << "\n";
    os << "task.regions = " << m.task.regions << "\n";
    os << "task.out_dim = " << m.task.out_dim << "\n";
    os << "task.radius = " << format_g12(m.task.radius) << "\n";
    os << "task.box_lo = " << format_g12(m.task.box_lo) << "\n";
    os << "task.box_hi = " << format_g12(m.task.box_hi) << "\n";
    os << "task.sigma_obs = " << format_g12(m.task.sigma_obs) << "\n";
    os << "task.train_size = " << m.task.train_size << "\n";
    os << "task.valid_size = " << m.task.valid_size << "\n";
    os << "task.test_size = " << m.task.test_size << "\n";
    os << "optim.lr = " << format_g12(m.optim.lr) << "\n";
    os << "optim.momentum = " << format_g12(m.optim.momentum) << "\n";
    os << "optim.epochs = " << m.optim.epochs << "\n";
    os << "optim.batch_size = " << m.optim.batch_size << "\n";
    os << "optim.aux_weight = " << format_g12(m.optim.aux_weight) << "\n";
    os << "eval.epsilon_grid = " << vec_str(m.epsilon_grid) << "\n";
    os << "eval.noise_seeds = " << m.eval_noise_seeds << "\n";
    os << "eval.run_seeds = " << m.run_seeds << "\n";
    os << "eval.noise = " << noise_kind_name(m.eval_noise) << "\n";
    if (!m.theorem.regions_file.empty())
        os << "theorem.regions_file = " << m.theorem.regions_file << "\n";
    os << "theorem.pairs =";
    for (const auto& [j, k] : m.theorem.pairs) os << " " << j << ":" << k;
    os << "\n";
    os << "theorem.n = " << m.theorem.n << "\n";
    os << "theorem.alpha = " << format_g12(m.theorem.alpha) << "\n";
    os << "theorem.trials = " << m.theorem.trials << "\n";
    os << "theorem.epsilons = " << vec_str(m.theorem.epsilons) << "\n";
    os << "theorem.noises =";
    for (NoiseKind nk : m.theorem.noises) os << " " << noise_kind_name(nk);
    os << "\n";
    os << "theorem.l_tilde = "
       << (m.theorem.l_tilde < 0.0 ? std::string("auto") : format_g12(m.theorem.l_tilde)) << "\n";
    os << "theorem.calibration_epsilon = " << format_g12(m.theorem.calibration_epsilon) << "\n";
    os << "theorem.mc_samples = " << m.theorem.mc_samples << "\n";
    if (!m.theorem.convergence_n.empty())
        os << "theorem.convergence_n = " << list_str(m.theorem.convergence_n) << "\n";
    os << "theorem.convergence_trials = " << m.theorem.convergence_trials << "\n";
    if (!m.prop1.adjacency_file.empty())
        os << "prop1.adjacency_file = " << m.prop1.adjacency_file << "\n";
    os << "prop1.experts = " << m.prop1.experts << "\n";
    os << "prop1.matrices = " << m.prop1.matrices << "\n";
    os << "prop1.trials = " << m.prop1.trials << "\n";
    os << "prop1.k = " << m.prop1.k << "\n";
    os << "bench.m_grid = " << list_str(m.bench.m_grid) << "\n";
    os << "bench.n_grid = " << list_str(m.bench.n_grid) << "\n";
    os << "bench.reps = " << m.bench.reps << "\n";
    os << "bench.dim = " << m.bench.dim << "\n";
    return os.str();
}

std::uint64_t manifest_hash(const RunManifest& m) {
    const std::string s = serialize_manifest(m);
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

} // namespace symphony
