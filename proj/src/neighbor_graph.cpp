#include "amgenc/neighbor_graph.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "amgenc/errors.hpp"

namespace amgenc {
namespace {

struct Found {
  int receiver;
  int source;
  double shift[3];
  double distance;
};

} // namespace

NeighborGraph build_neighbor_graph(const Lattice &lattice, const Positions &positions,
                                   double r_cut) {
  if (!(r_cut > 0.0))
    throw ValidationError("cutoff radius must be positive");
  const double half_width = 0.5 * lattice.min_width();
  if (!(r_cut < half_width)) {
    std::ostringstream msg;
    msg << "cutoff " << r_cut << " A is not below half the minimum cell width (" << half_width
        << " A)";
    throw CutoffExceedsCell(msg.str());
  }

  const int n = static_cast<int>(positions.rows());
  // unwrapped fractional coordinates keep X_i - X_j - o_ij consistent with
  // the positions as given; the wrapped copy only picks bins
  const Positions raw = positions * lattice.inverse();
  const Positions frac = to_fractional(lattice, positions);
  const Mat3 &rows = lattice.rows();
  const double r_cut_sq = r_cut * r_cut;

  // bins per axis so that one bin is at least r_cut thick
  std::array<int, 3> bins{};
  bool binned = true;
  for (int k = 0; k < 3; ++k) {
    Vec3 a = rows.row((k + 1) % 3).transpose();
    Vec3 b = rows.row((k + 2) % 3).transpose();
    const double width = lattice.volume() / a.cross(b).norm();
    bins[k] = static_cast<int>(std::floor(width / r_cut));
    binned = binned && bins[k] >= 3;
  }

  std::vector<Found> found;
  found.reserve(static_cast<std::size_t>(n) * 16);

  auto try_pair = [&](int i, int j) {
    double f[3], shift[3];
    for (int k = 0; k < 3; ++k) {
      const double diff = raw(i, k) - raw(j, k);
      shift[k] = std::floor(diff + 0.5);
      f[k] = diff - shift[k];
    }
    double sq = 0.0;
    for (int c = 0; c < 3; ++c) {
      const double d = f[0] * rows(0, c) + f[1] * rows(1, c) + f[2] * rows(2, c);
      sq += d * d;
    }
    if (sq < r_cut_sq)
      found.push_back({i, j, {shift[0], shift[1], shift[2]}, std::sqrt(sq)});
  };

  if (binned) {
    const int total_bins = bins[0] * bins[1] * bins[2];
    std::vector<std::vector<int>> members(static_cast<std::size_t>(total_bins));
    std::vector<std::array<int, 3>> atom_bin(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      std::array<int, 3> b{};
      for (int k = 0; k < 3; ++k)
        b[k] = std::min(bins[k] - 1, static_cast<int>(frac(i, k) * bins[k]));
      atom_bin[i] = b;
      members[(b[0] * bins[1] + b[1]) * bins[2] + b[2]].push_back(i);
    }
    for (int i = 0; i < n; ++i) {
      const auto &b = atom_bin[i];
      for (int dx = -1; dx <= 1; ++dx)
        for (int dy = -1; dy <= 1; ++dy)
          for (int dz = -1; dz <= 1; ++dz) {
            const int x = (b[0] + dx + bins[0]) % bins[0];
            const int y = (b[1] + dy + bins[1]) % bins[1];
            const int z = (b[2] + dz + bins[2]) % bins[2];
            for (int j : members[(x * bins[1] + y) * bins[2] + z])
              if (j != i)
                try_pair(i, j);
          }
    }
  } else {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (j != i)
          try_pair(i, j);
  }

  // candidates arrive grouped by receiver; order sources within each group
  auto by_source = [](const Found &a, const Found &b) { return a.source < b.source; };
  for (auto first = found.begin(); first != found.end();) {
    auto last = std::find_if(first, found.end(),
                             [r = first->receiver](const Found &f) { return f.receiver != r; });
    std::sort(first, last, by_source);
    first = last;
  }

  NeighborGraph graph;
  const std::size_t total = found.size();
  graph.receiver.resize(total);
  graph.source.resize(total);
  graph.distance.resize(total);
  graph.offset.resize(static_cast<Eigen::Index>(total), 3);
  for (std::size_t e = 0; e < total; ++e) {
    const Found &f = found[e];
    graph.receiver[e] = f.receiver;
    graph.source[e] = f.source;
    graph.distance[e] = f.distance;
    const Vec3 shift(f.shift[0], f.shift[1], f.shift[2]);
    graph.offset.row(static_cast<Eigen::Index>(e)) = (rows.transpose() * shift).transpose();
  }
  return graph;
}

NeighborGraph build_neighbor_graph(const MaterialSample &sample, double r_cut) {
  return build_neighbor_graph(sample.lattice(), sample.positions(), r_cut);
}

} // namespace amgenc
