// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "symphony/geometry.hpp"
#include "symphony/social_graph.hpp"

namespace symphony {

// Shortest representation at 12 significant digits, the precision used by
// every plain-text matrix format here.
std::string format_g12(double v);

// Generic matrix file: "rows <r> cols <c>" then r lines of c values.
void save_matrix_file(const Matrix& m, const std::string& path);
Matrix load_matrix_file(const std::string& path);

// Adjacency snapshot: "M <int> mode <RowNorm|Sinkhorn> beta <float> updates
// <int>" then M rows of M values.
void save_adjacency_snapshot(const AdjacencyState& state, const std::string& path);
AdjacencyState load_adjacency_snapshot(const std::string& path);

// Region file: "dim <d> <M>", a bounds line with d lows then d highs, then M
// lines "c_1 ... c_d R".
void save_region_spec(const RegionSpec& spec, const std::string& path);
RegionSpec load_region_spec(const std::string& path);

} // namespace symphony
