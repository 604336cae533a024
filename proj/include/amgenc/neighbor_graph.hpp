#pragma once

#include <vector>

#include "amgenc/core_types.hpp"

namespace amgenc {

/// Directed radius graph under periodic boundary conditions. Edge e points
/// from source[e] = j to receiver[e] = i and stores the lattice offset o_ij
/// with X_i - X_j - o_ij the minimum-image vector. Each unordered pair
/// appears as two directed edges; edges are ordered by (receiver, source).
struct NeighborGraph {
  std::vector<int> receiver;
  std::vector<int> source;
  Positions offset;          ///< E x 3 Cartesian lattice offsets
  std::vector<double> distance;

  std::size_t edge_count() const noexcept { return receiver.size(); }
};

/// Throws CutoffExceedsCell unless r_cut < lattice.min_width() / 2. Uses a
/// linked-cell search when the cell holds at least three bins per axis.
NeighborGraph build_neighbor_graph(const Lattice &lattice, const Positions &positions,
                                   double r_cut);
NeighborGraph build_neighbor_graph(const MaterialSample &sample, double r_cut);

} // namespace amgenc
