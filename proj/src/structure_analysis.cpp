#include "amgenc/structure_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <numbers>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "amgenc/errors.hpp"

namespace amgenc {
namespace {

using Image = std::array<int, 3>;

Image negate(const Image &a) { return {-a[0], -a[1], -a[2]}; }
Image add(const Image &a, const Image &b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }

// (atom, image) packed into one key; images stay far below +-2^15
std::uint64_t state_key(int atom, const Image &image) {
  auto part = [](int v) { return static_cast<std::uint64_t>(static_cast<std::uint16_t>(v)); };
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(atom)) << 48) ^
         (part(image[0]) << 32) ^ (part(image[1]) << 16) ^ part(image[2]);
}

struct State {
  int atom;
  Image image;
};

void require_species(int species, const ElementTable &table) {
  if (species < 0 || species >= table.size())
    throw InvalidElement("species index " + std::to_string(species) + " out of range");
}

// Squared minimum-image distances between every (a in A, b in B), a != b,
// with d < r_max. Requires r_max <= half the minimum cell width.
template <typename Visit>
void for_each_pair_within(const MaterialSample &sample, int species_a, int species_b,
                          double r_max, Visit &&visit) {
  const auto &elements = sample.assignments();
  const Positions frac = to_fractional(sample);
  const Mat3 &rows = sample.lattice().rows();
  const double r_max_sq = r_max * r_max;
  const int n = sample.atom_count();
  for (int a = 0; a < n; ++a) {
    if (elements[a] != species_a)
      continue;
    for (int b = 0; b < n; ++b) {
      if (b == a || elements[b] != species_b)
        continue;
      Vec3 f = (frac.row(b) - frac.row(a)).transpose();
      for (int k = 0; k < 3; ++k)
        f[k] -= std::floor(f[k] + 0.5);
      const double sq = (rows.transpose() * f).squaredNorm();
      if (sq < r_max_sq)
        visit(std::sqrt(sq));
    }
  }
}

void check_radial_range(const MaterialSample &sample, double r_max, int n_bins) {
  if (n_bins < 1)
    throw ValidationError("bin count must be at least 1");
  if (!(r_max > 0.0))
    throw ValidationError("r_max must be positive");
  const double half = 0.5 * sample.lattice().min_width();
  if (r_max > half) {
    std::ostringstream msg;
    msg << "r_max " << r_max << " A exceeds half the minimum cell width (" << half << " A)";
    throw RangeExceedsCell(msg.str());
  }
}

} // namespace

BondGraph BondGraph::from_edges(int atom_count, std::span<const std::pair<int, int>> edges) {
  BondGraph g(atom_count);
  for (const auto &[i, j] : edges)
    g.add_bond(i, j);
  return g;
}

void BondGraph::add_bond(int i, int j, std::array<int, 3> image) {
  if (i < 0 || j < 0 || i >= atom_count() || j >= atom_count())
    throw ValidationError("bond endpoint out of range");
  if (i == j && image == Image{0, 0, 0})
    throw ValidationError("self bond");
  adjacency_[static_cast<std::size_t>(i)].push_back({j, image});
  adjacency_[static_cast<std::size_t>(j)].push_back({i, negate(image)});
}

std::size_t BondGraph::bond_count() const noexcept {
  std::size_t total = 0;
  for (const auto &a : adjacency_)
    total += a.size();
  return total / 2;
}

BondGraph build_bond_graph(const MaterialSample &sample, const ElementTable &table, double factor) {
  const auto &elements = sample.assignments();
  const auto &radii = table.covalent_radii();
  const int n = sample.atom_count();
  for (int e : elements) {
    if (e < 0 || e >= table.size())
      throw InvalidElement("element index out of range");
    if (table.is_ghost(e))
      continue;
    if (!table.has_radii() || !(radii[static_cast<std::size_t>(e)] > 0.0))
      throw MissingRadius("no covalent radius for element '" + table.names()[e] + "'");
  }

  const Lattice &lattice = sample.lattice();
  const Positions &x = sample.positions();
  BondGraph graph(n);
  for (int i = 0; i < n; ++i) {
    if (table.is_ghost(elements[i]))
      continue;
    for (int j = i + 1; j < n; ++j) {
      if (table.is_ghost(elements[j]))
        continue;
      const double threshold = factor * (radii[elements[i]] + radii[elements[j]]);
      const Vec3 xi = x.row(i).transpose();
      const Vec3 xj = x.row(j).transpose();
      const Vec3 d = min_image_displacement(xi, xj, lattice);
      if (d.norm() >= threshold)
        continue;
      const Vec3 shift = lattice.to_fractional(d - (xj - xi));
      graph.add_bond(i, j,
                     {static_cast<int>(std::lround(shift[0])), static_cast<int>(std::lround(shift[1])),
                      static_cast<int>(std::lround(shift[2]))});
    }
  }
  return graph;
}

RingStatistics ring_statistics(const BondGraph &graph, const Assignments &assignments,
                               int counted_element, int max_ring_size) {
  if (static_cast<int>(assignments.size()) != graph.atom_count())
    throw ShapeMismatch("assignments do not match the bond graph");
  if (max_ring_size < 1)
    throw ValidationError("maximum ring size must be positive");

  constexpr std::size_t kMaxPathsPerBond = 4096;
  const int max_depth = 2 * max_ring_size - 1;
  std::set<std::vector<int>> unique_rings;

  for (int i = 0; i < graph.atom_count(); ++i) {
    for (const auto &bond : graph.bonds(i)) {
      const int j = bond.neighbor;
      // each undirected bond once
      if (j < i || (j == i && bond.image < negate(bond.image)))
        continue;
      const Image goal_image = bond.image;
      const Image back_image = negate(goal_image);
      const std::uint64_t goal = state_key(j, goal_image);

      std::unordered_map<std::uint64_t, int> depth;
      std::unordered_map<std::uint64_t, std::vector<std::uint64_t>> parents;
      std::unordered_map<std::uint64_t, State> states;
      std::vector<State> frontier{{i, {0, 0, 0}}};
      const std::uint64_t root = state_key(i, {0, 0, 0});
      depth[root] = 0;
      states[root] = frontier.front();
      bool found = false;

      for (int level = 0; level < max_depth && !found && !frontier.empty(); ++level) {
        std::vector<State> next;
        for (const State &s : frontier) {
          const std::uint64_t from = state_key(s.atom, s.image);
          for (const auto &nb : graph.bonds(s.atom)) {
            // never traverse the bond being closed, in any periodic copy
            if ((s.atom == i && nb.neighbor == j && nb.image == goal_image) ||
                (s.atom == j && nb.neighbor == i && nb.image == back_image))
              continue;
            const State to{nb.neighbor, add(s.image, nb.image)};
            const std::uint64_t key = state_key(to.atom, to.image);
            auto it = depth.find(key);
            if (it == depth.end()) {
              depth.emplace(key, level + 1);
              states.emplace(key, to);
              parents[key].push_back(from);
              next.push_back(to);
              found = found || key == goal;
            } else if (it->second == level + 1) {
              parents[key].push_back(from);
            }
          }
        }
        frontier.swap(next);
      }
      if (!found)
        continue;

      // enumerate every shortest path goal -> root through the parent DAG
      std::vector<std::vector<std::uint64_t>> stack{{goal}};
      std::size_t emitted = 0;
      while (!stack.empty() && emitted < kMaxPathsPerBond) {
        std::vector<std::uint64_t> path = std::move(stack.back());
        stack.pop_back();
        const std::uint64_t head = path.back();
        if (head == root) {
          std::vector<int> ring;
          ring.reserve(path.size());
          for (std::uint64_t key : path)
            ring.push_back(states.at(key).atom);
          std::sort(ring.begin(), ring.end());
          ring.erase(std::unique(ring.begin(), ring.end()), ring.end());
          unique_rings.insert(std::move(ring));
          ++emitted;
          continue;
        }
        for (std::uint64_t parent : parents[head]) {
          auto extended = path;
          extended.push_back(parent);
          stack.push_back(std::move(extended));
        }
      }
    }
  }

  RingStatistics stats;
  double total = 0.0;
  for (const auto &ring : unique_rings) {
    int size = 0;
    for (int atom : ring)
      size += assignments[static_cast<std::size_t>(atom)] == counted_element;
    if (size > max_ring_size)
      continue;
    ++stats.histogram[size];
    total += size;
    stats.rings.push_back(ring);
  }
  if (!stats.rings.empty())
    stats.mean_size = total / static_cast<double>(stats.rings.size());
  return stats;
}

RadialTable partial_rdf(const MaterialSample &sample, int species_a, int species_b, double r_max,
                        int n_bins) {
  check_radial_range(sample, r_max, n_bins);
  const auto &elements = sample.assignments();
  const double dr = r_max / n_bins;

  RadialTable table;
  table.r.resize(static_cast<std::size_t>(n_bins));
  table.value.assign(static_cast<std::size_t>(n_bins), 0.0);
  for (int k = 0; k < n_bins; ++k)
    table.r[k] = (k + 0.5) * dr;

  const auto n_a = static_cast<double>(std::count(elements.begin(), elements.end(), species_a));
  const auto n_b = static_cast<double>(std::count(elements.begin(), elements.end(), species_b));
  const double partners = species_a == species_b ? n_a - 1.0 : n_b;
  if (n_a == 0.0 || partners <= 0.0)
    return table;

  std::vector<double> hist(static_cast<std::size_t>(n_bins), 0.0);
  for_each_pair_within(sample, species_a, species_b, r_max, [&](double d) {
    const int bin = std::min(n_bins - 1, static_cast<int>(d / dr));
    hist[bin] += 1.0;
  });

  const double rho_b = partners / sample.lattice().volume();
  for (int k = 0; k < n_bins; ++k) {
    const double lo = k * dr, hi = (k + 1) * dr;
    const double shell = 4.0 / 3.0 * std::numbers::pi * (hi * hi * hi - lo * lo * lo);
    table.value[k] = hist[k] / (n_a * rho_b * shell);
  }
  return table;
}

std::optional<RadialTable> cumulative_cn(const MaterialSample &sample, int center, int neighbor,
                                         double r_max, int n_bins) {
  check_radial_range(sample, r_max, n_bins);
  const auto &elements = sample.assignments();
  const auto n_center = static_cast<double>(std::count(elements.begin(), elements.end(), center));
  if (n_center == 0.0)
    return std::nullopt;
  const double dr = r_max / n_bins;

  std::vector<double> hist(static_cast<std::size_t>(n_bins), 0.0);
  for_each_pair_within(sample, center, neighbor, r_max, [&](double d) {
    const int bin = std::min(n_bins - 1, static_cast<int>(d / dr));
    hist[bin] += 1.0;
  });

  RadialTable table;
  table.r.resize(static_cast<std::size_t>(n_bins) + 1);
  table.value.assign(static_cast<std::size_t>(n_bins) + 1, 0.0);
  double running = 0.0;
  for (int k = 0; k <= n_bins; ++k) {
    table.r[k] = k * dr;
    table.value[k] = running / n_center;
    if (k < n_bins)
      running += hist[k];
  }
  return table;
}

double molar_concentration(const Assignments &assignments, const ElementTable &table, int species) {
  require_species(species, table);
  std::size_t real = 0, hits = 0;
  for (int e : assignments) {
    if (e < 0 || e >= table.size())
      throw InvalidElement("element index out of range");
    if (table.is_ghost(e))
      continue;
    ++real;
    hits += (e == species);
  }
  if (real == 0)
    throw EmptyStructure("structure has no non-ghost atoms");
  return static_cast<double>(hits) / static_cast<double>(real);
}

RegressionReport regression_metrics(std::span<const double> targets,
                                    std::span<const double> generated) {
  if (targets.empty() || targets.size() != generated.size())
    throw ValidationError("regression metrics need two non-empty arrays of equal length");
  const double n = static_cast<double>(targets.size());
  double abs_sum = 0.0, sq_sum = 0.0, pct_sum = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (targets[i] == 0.0)
      throw ZeroTarget("MAPE is undefined for a zero target (index " + std::to_string(i) + ")");
    const double err = targets[i] - generated[i];
    abs_sum += std::abs(err);
    sq_sum += err * err;
    pct_sum += std::abs(err / targets[i]);
  }
  return {abs_sum / n, std::sqrt(sq_sum / n), 100.0 * pct_sum / n};
}

void write_radial_table(std::ostream &out, const RadialTable &table) {
  char buf[96];
  for (std::size_t k = 0; k < table.r.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%.6f\t%.8g\n", table.r[k], table.value[k]);
    out << buf;
  }
}

} // namespace amgenc
