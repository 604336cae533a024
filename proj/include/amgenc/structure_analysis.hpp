#pragma once

#include <array>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "amgenc/core_types.hpp"

namespace amgenc {

/// Undirected bond network. A bond from i to j carries the integer image of
/// j it refers to: X_j + image * L - X_i is the bond vector.
class BondGraph {
public:
  struct Bond {
    int neighbor;
    std::array<int, 3> image;
    friend bool operator==(const Bond &, const Bond &) = default;
  };

  explicit BondGraph(int atom_count) : adjacency_(static_cast<std::size_t>(atom_count)) {}

  /// Non-periodic graph from an undirected edge list (zero images).
  static BondGraph from_edges(int atom_count, std::span<const std::pair<int, int>> edges);

  /// Adds (i, j, image) and its mirror (j, i, -image).
  void add_bond(int i, int j, std::array<int, 3> image = {0, 0, 0});

  int atom_count() const noexcept { return static_cast<int>(adjacency_.size()); }
  const std::vector<Bond> &bonds(int atom) const { return adjacency_[static_cast<std::size_t>(atom)]; }
  std::size_t bond_count() const noexcept;

private:
  std::vector<std::vector<Bond>> adjacency_;
};

/// Bonds every pair of non-ghost atoms closer than factor * (r_i + r_j)
/// under minimum-image distances. Radii come from the element table.
/// Throws MissingRadius if a present element has no positive radius.
BondGraph build_bond_graph(const MaterialSample &sample, const ElementTable &table,
                           double factor = 1.3);

struct RingStatistics {
  std::map<int, std::size_t> histogram;    ///< counted atoms per ring -> rings
  std::optional<double> mean_size;         ///< absent when no ring was found
  std::vector<std::vector<int>> rings;     ///< sorted vertex sets
};

/// Shortest-path ring statistics. For every bond (i, j) a breadth-first
/// search over (atom, lattice image) states finds the shortest paths from i
/// back to the same image of j that avoid that bond; each closes a ring.
/// All shortest alternatives count, rings are de-duplicated by vertex set,
/// and ring size is the number of atoms of `counted_element` on it. Paths
/// longer than 2 * max_ring_size - 1 bonds are not explored and rings above
/// max_ring_size counted atoms are dropped.
RingStatistics ring_statistics(const BondGraph &graph, const Assignments &assignments,
                               int counted_element, int max_ring_size = 12);

/// (r, value) columns.
struct RadialTable {
  std::vector<double> r;
  std::vector<double> value;
};

/// Partial g(r) at bin centers, normalized by N_A * rho_B * shell volume so
/// uniform random positions give 1. For A == B self pairs are excluded and
/// rho_B = (N_A - 1) / V. Throws RangeExceedsCell if r_max exceeds half the
/// minimum cell width.
RadialTable partial_rdf(const MaterialSample &sample, int species_a, int species_b, double r_max,
                        int n_bins);

/// Mean number of neighbor atoms strictly closer than r to a center atom,
/// sampled at r = 0, dr, ..., r_max (n_bins + 1 points). Absent when the
/// sample has no center atoms.
std::optional<RadialTable> cumulative_cn(const MaterialSample &sample, int center, int neighbor,
                                         double r_max, int n_bins);

/// count(species) / count(non-ghost atoms). Throws EmptyStructure when
/// every atom is a ghost.
double molar_concentration(const Assignments &assignments, const ElementTable &table, int species);

struct RegressionReport {
  double mae = 0.0;
  double rmse = 0.0;
  double mape = 0.0; ///< percent
};

/// Throws ValidationError on empty or unequal inputs and ZeroTarget when a
/// target is zero.
RegressionReport regression_metrics(std::span<const double> targets,
                                    std::span<const double> generated);

void write_radial_table(std::ostream &out, const RadialTable &table);

} // namespace amgenc
