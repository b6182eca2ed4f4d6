// SPDX-License-Identifier: Apache-2.0
#include "symphony/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "symphony/errors.hpp"

namespace symphony {

std::string format_g12(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    return out;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path);
    return in;
}

void write_rows(std::ofstream& out, const Matrix& m) {
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j)
            out << (j ? " " : "") << format_g12(m(i, j));
        out << "\n";
    }
}

Matrix read_rows(std::ifstream& in, std::size_t rows, std::size_t cols, const std::string& path) {
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j)
            if (!(in >> m(i, j))) throw IoError("truncated matrix data in " + path);
    return m;
}

} // namespace

void save_matrix_file(const Matrix& m, const std::string& path) {
    std::ofstream out = open_out(path);
    out << "rows " << m.rows() << " cols " << m.cols() << "\n";
    write_rows(out, m);
    if (!out) throw IoError("write failed for " + path);
}

Matrix load_matrix_file(const std::string& path) {
    std::ifstream in = open_in(path);
    std::string tag_rows, tag_cols;
    std::size_t rows = 0, cols = 0;
    if (!(in >> tag_rows >> rows >> tag_cols >> cols) || tag_rows != "rows" || tag_cols != "cols")
        throw IoError("bad matrix header in " + path);
    return read_rows(in, rows, cols, path);
}

void save_adjacency_snapshot(const AdjacencyState& state, const std::string& path) {
    std::ofstream out = open_out(path);
    out << "M " << state.experts() << " mode " << norm_mode_name(state.norm_mode) << " beta "
        << format_g12(state.beta) << " updates " << state.update_count << "\n";
    write_rows(out, state.adjacency);
    if (!out) throw IoError("write failed for " + path);
}

AdjacencyState load_adjacency_snapshot(const std::string& path) {
    std::ifstream in = open_in(path);
    std::string tag_m, tag_mode, mode_name, tag_beta, tag_updates;
    std::size_t m = 0;
    double beta = 0.0;
    long updates = 0;
    if (!(in >> tag_m >> m >> tag_mode >> mode_name >> tag_beta >> beta >> tag_updates >>
          updates) ||
        tag_m != "M" || tag_mode != "mode" || tag_beta != "beta" || tag_updates != "updates")
        throw IoError("bad adjacency header in " + path);
    AdjacencyState state(m, beta, norm_mode_from_name(mode_name));
    state.adjacency = read_rows(in, m, m, path);
    state.update_count = updates;
    state.validate();
    return state;
}

void save_region_spec(const RegionSpec& spec, const std::string& path) {
    spec.validate();
    std::ofstream out = open_out(path);
    out << "dim " << spec.dim << " " << spec.count() << "\n";
    for (std::size_t i = 0; i < spec.dim; ++i)
        out << (i ? " " : "") << format_g12(spec.domain.lo[i]);
    for (std::size_t i = 0; i < spec.dim; ++i) out << " " << format_g12(spec.domain.hi[i]);
    out << "\n";
    for (std::size_t j = 0; j < spec.count(); ++j) {
        for (std::size_t i = 0; i < spec.dim; ++i)
            out << (i ? " " : "") << format_g12(spec.centers(j, i));
        out << " " << format_g12(spec.radii[j]) << "\n";
    }
    if (!out) throw IoError("write failed for " + path);
}

RegionSpec load_region_spec(const std::string& path) {
    std::ifstream in = open_in(path);
    std::string tag;
    std::size_t dim = 0, m = 0;
    if (!(in >> tag >> dim >> m) || tag != "dim")
        throw IoError("bad region header in " + path);
    RegionSpec spec;
    spec.dim = dim;
    spec.domain.lo.resize(dim);
    spec.domain.hi.resize(dim);
    for (std::size_t i = 0; i < dim; ++i)
        if (!(in >> spec.domain.lo[i])) throw IoError("truncated bounds in " + path);
    for (std::size_t i = 0; i < dim; ++i)
        if (!(in >> spec.domain.hi[i])) throw IoError("truncated bounds in " + path);
    spec.centers = Matrix(m, dim);
    spec.radii.resize(m);
    for (std::size_t j = 0; j < m; ++j) {
        for (std::size_t i = 0; i < dim; ++i)
            if (!(in >> spec.centers(j, i))) throw IoError("truncated centers in " + path);
        if (!(in >> spec.radii[j])) throw IoError("truncated radii in " + path);
    }
    spec.validate();
    return spec;
}

} // namespace symphony
