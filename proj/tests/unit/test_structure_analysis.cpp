#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <functional>
#include <numeric>
#include <set>
#include <sstream>

#include "amgenc/errors.hpp"
#include "amgenc/io_formats.hpp"
#include "amgenc/structure_analysis.hpp"
#include "support.hpp"

using namespace amgenc;
using namespace amgenc::testing;

namespace {

constexpr int kSi = 0, kO = 1, kGhost = 2;

MaterialSample two_atoms(double d, int a = kSi, int b = kO, double edge = 20.0) {
  Positions x(2, 3);
  x << 5, 5, 5, 5 + d, 5, 5;
  return MaterialSample(Lattice::cubic(edge), x, Assignments{a, b});
}

// Exhaustive simple-path enumeration: for every edge, the shortest
// alternative paths between its ends close rings.
std::map<int, std::size_t> brute_force_rings(int n, const std::vector<std::pair<int, int>> &edges,
                                             const Assignments &a, int counted) {
  std::vector<std::vector<int>> adj(n);
  for (auto [u, v] : edges) {
    adj[u].push_back(v);
    adj[v].push_back(u);
  }
  std::set<std::vector<int>> rings;
  for (auto [u, v] : edges) {
    std::vector<std::vector<int>> paths;
    std::vector<int> path{u};
    std::vector<bool> used(n, false);
    used[u] = true;
    std::function<void(int)> walk = [&](int at) {
      for (int next : adj[at]) {
        if (at == u && next == v)
          continue;
        if (next == v) {
          paths.push_back(path);
          paths.back().push_back(v);
          continue;
        }
        if (used[next])
          continue;
        used[next] = true;
        path.push_back(next);
        walk(next);
        path.pop_back();
        used[next] = false;
      }
    };
    walk(u);
    std::size_t shortest = SIZE_MAX;
    for (const auto &p : paths)
      shortest = std::min(shortest, p.size());
    for (auto p : paths)
      if (p.size() == shortest) {
        std::sort(p.begin(), p.end());
        rings.insert(p);
      }
  }
  std::map<int, std::size_t> histogram;
  for (const auto &ring : rings) {
    int size = 0;
    for (int atom : ring)
      size += a[atom] == counted;
    ++histogram[size];
  }
  return histogram;
}

std::size_t ordered_pairs_within(const MaterialSample &s, int a, int b, double r_max) {
  std::size_t count = 0;
  const auto &e = s.assignments();
  for (int i = 0; i < s.atom_count(); ++i)
    for (int j = 0; j < s.atom_count(); ++j)
      if (i != j && e[i] == a && e[j] == b &&
          min_image_displacement(s.positions().row(i).transpose(), s.positions().row(j).transpose(),
                                 s.lattice())
                  .norm() < r_max)
        ++count;
  return count;
}

MaterialSample random_sio2(std::mt19937_64 &rng, int n, double edge) {
  const Lattice cube = Lattice::cubic(edge);
  Assignments a(n);
  for (int &e : a)
    e = uniform_int(rng, 0, 2);
  return MaterialSample(cube, random_positions(rng, cube, n), a);
}

} // namespace

TEST_CASE("bond threshold from covalent radii") {
  const ElementTable t = sio2_table();
  CHECK(build_bond_graph(two_atoms(1.6), t).bond_count() == 1);
  CHECK(build_bond_graph(two_atoms(2.4), t).bond_count() == 0);
  CHECK(build_bond_graph(two_atoms(2.30), t).bond_count() == 1);
  CHECK(build_bond_graph(two_atoms(2.31), t).bond_count() == 0);
  CHECK(build_bond_graph(two_atoms(1.6), t, 0.5).bond_count() == 0);
  // ghosts never bond
  CHECK(build_bond_graph(two_atoms(1.6, kSi, kGhost), t).bond_count() == 0);

  const MaterialSample single(Lattice::cubic(10.0), Positions::Zero(1, 3), Assignments{kSi});
  CHECK(build_bond_graph(single, t).bond_count() == 0);

  const ElementTable no_radius({"Si", "O"}, {4, -2}, {1.0 / 3.0, 2.0 / 3.0});
  CHECK_THROWS_AS(build_bond_graph(two_atoms(1.6), no_radius), MissingRadius);
}

TEST_CASE("bonds across the boundary carry images") {
  Positions x(2, 3);
  x << 0.2, 5, 5, 9.0, 5, 5;
  const MaterialSample s(Lattice::cubic(10.0), x, Assignments{kSi, kO});
  const BondGraph g = build_bond_graph(s, sio2_table());
  REQUIRE(g.bond_count() == 1);
  REQUIRE(g.bonds(0).size() == 1);
  CHECK(g.bonds(0)[0].image == std::array<int, 3>{-1, 0, 0});
  CHECK(g.bonds(1)[0].image == std::array<int, 3>{1, 0, 0});
}

TEST_CASE("periodic six-membered ring") {
  const ElementTable t = sio2_table();
  const MaterialSample s = load_extxyz(fixture("ring6.xyz"), t);
  const BondGraph g = build_bond_graph(s, t);
  CHECK(g.bond_count() == 6);
  const RingStatistics r = ring_statistics(g, s.assignments(), kSi);
  REQUIRE(r.mean_size.has_value());
  CHECK(*r.mean_size == 3.0);
  CHECK(r.histogram == std::map<int, std::size_t>{{3, 1}});
}

TEST_CASE("acyclic graphs have no rings") {
  const std::vector<std::pair<int, int>> tree{{0, 1}, {1, 2}, {1, 3}, {3, 4}, {4, 5}};
  const RingStatistics r =
      ring_statistics(BondGraph::from_edges(6, tree), Assignments{0, 1, 0, 1, 0, 1}, kSi);
  CHECK_FALSE(r.mean_size.has_value());
  CHECK(r.histogram.empty());
}

TEST_CASE("ring statistics match exhaustive path enumeration") {
  std::mt19937_64 rng(110);
  int with_rings = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const int n = uniform_int(rng, 3, 12);
    std::vector<std::pair<int, int>> edges;
    const double p = uniform(rng, 0.15, 0.45);
    for (int u = 0; u < n; ++u)
      for (int v = u + 1; v < n; ++v)
        if (uniform(rng, 0.0, 1.0) < p)
          edges.emplace_back(u, v);
    Assignments a(n);
    for (int &e : a)
      e = uniform_int(rng, 0, 1);
    const RingStatistics r = ring_statistics(BondGraph::from_edges(n, edges), a, kSi);
    const auto expected = brute_force_rings(n, edges, a, kSi);
    CHECK(r.histogram == expected);
    with_rings += !expected.empty();
  }
  CHECK(with_rings > 100);
}

TEST_CASE("ring statistics are invariant under relabeling") {
  std::mt19937_64 rng(111);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = uniform_int(rng, 4, 12);
    std::vector<std::pair<int, int>> edges;
    for (int u = 0; u < n; ++u)
      for (int v = u + 1; v < n; ++v)
        if (uniform(rng, 0.0, 1.0) < 0.3)
          edges.emplace_back(u, v);
    Assignments a(n);
    for (int &e : a)
      e = uniform_int(rng, 0, 1);
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<std::pair<int, int>> relabeled;
    Assignments b(n);
    for (auto [u, v] : edges)
      relabeled.emplace_back(perm[u], perm[v]);
    for (int i = 0; i < n; ++i)
      b[perm[i]] = a[i];
    CHECK(ring_statistics(BondGraph::from_edges(n, edges), a, kSi).histogram ==
          ring_statistics(BondGraph::from_edges(n, relabeled), b, kSi).histogram);
  }
}

TEST_CASE("ideal gas radial distribution is flat") {
  std::mt19937_64 rng(112);
  const Lattice cube = Lattice::cubic(30.0);
  const int n = 10000;
  const MaterialSample s(cube, random_positions(rng, cube, n), Assignments(n, kSi));
  const double r_max = 10.0;
  const RadialTable g = partial_rdf(s, kSi, kSi, r_max, 50);
  double sum = 0.0;
  int bins = 0;
  for (std::size_t k = 0; k < g.r.size(); ++k)
    if (g.r[k] >= 2.0) {
      sum += g.value[k];
      ++bins;
    }
  const double mean = sum / bins;
  CHECK(mean >= 0.95);
  CHECK(mean <= 1.05);
}

TEST_CASE("radial distribution of a single pair") {
  const MaterialSample s = two_atoms(3.3);
  const RadialTable g = partial_rdf(s, kSi, kO, 5.0, 50);
  REQUIRE(g.value.size() == 50);
  CHECK(g.r[33] == doctest::Approx(3.35));
  for (int k = 0; k < 50; ++k) {
    if (k == 33)
      CHECK(g.value[k] > 0.0);
    else
      CHECK(g.value[k] == 0.0);
  }
  // one Si, one O partner in V = 8000
  const double shell = 4.0 / 3.0 * M_PI * (std::pow(3.4, 3) - std::pow(3.3, 3));
  CHECK(g.value[33] == doctest::Approx(1.0 / (1.0 / 8000.0 * shell)).epsilon(1e-12));

  const RadialTable none = partial_rdf(s, kGhost, kO, 5.0, 50);
  CHECK(std::all_of(none.value.begin(), none.value.end(), [](double v) { return v == 0.0; }));
  CHECK_THROWS_AS(partial_rdf(s, kSi, kO, 10.5, 50), RangeExceedsCell);
}

TEST_CASE("radial distribution un-normalizes to the pair count") {
  std::mt19937_64 rng(113);
  for (int trial = 0; trial < 10; ++trial) {
    const MaterialSample s = random_sio2(rng, 150, 12.0);
    for (auto [a, b] : {std::pair{kSi, kO}, std::pair{kO, kO}}) {
      const double r_max = 5.5;
      const int bins = 40;
      const RadialTable g = partial_rdf(s, a, b, r_max, bins);
      const auto &e = s.assignments();
      const double n_a = std::count(e.begin(), e.end(), a);
      const double partners = (a == b ? n_a - 1.0 : std::count(e.begin(), e.end(), b));
      const double rho = partners / s.lattice().volume();
      const double dr = r_max / bins;
      double pairs = 0.0;
      for (int k = 0; k < bins; ++k) {
        CHECK(g.value[k] >= 0.0);
        const double shell =
            4.0 / 3.0 * M_PI * (std::pow((k + 1) * dr, 3) - std::pow(k * dr, 3));
        pairs += g.value[k] * n_a * rho * shell;
      }
      CHECK(std::abs(pairs - static_cast<double>(ordered_pairs_within(s, a, b, r_max))) < 1e-9);
    }
  }
}

TEST_CASE("coordination of an ideal tetrahedron") {
  const double d = 1.6;
  Positions x(5, 3);
  x.row(0) << 10, 10, 10;
  const double c = d / std::sqrt(3.0);
  x.row(1) << 10 + c, 10 + c, 10 + c;
  x.row(2) << 10 + c, 10 - c, 10 - c;
  x.row(3) << 10 - c, 10 + c, 10 - c;
  x.row(4) << 10 - c, 10 - c, 10 + c;
  const MaterialSample s(Lattice::cubic(20.0), x, Assignments{kSi, kO, kO, kO, kO});
  const auto n = cumulative_cn(s, kSi, kO, 8.0, 80);
  REQUIRE(n.has_value());
  CHECK(n->value.size() == 81);
  CHECK(n->value[0] == 0.0);
  for (std::size_t k = 0; k < n->r.size(); ++k) {
    if (n->r[k] <= 1.6 - 1e-9)
      CHECK(n->value[k] == 0.0);
    else if (n->r[k] > 1.6 + 1e-9)
      CHECK(n->value[k] == 4.0);
  }
  CHECK_FALSE(cumulative_cn(s, kGhost, kO, 8.0, 80).has_value());
}

TEST_CASE("coordination is monotone and consistent with the distribution") {
  std::mt19937_64 rng(114);
  for (int trial = 0; trial < 10; ++trial) {
    const MaterialSample s = random_sio2(rng, 120, 11.0);
    const double r_max = 5.0;
    const int bins = 25;
    const auto n = cumulative_cn(s, kSi, kO, r_max, bins);
    if (!n)
      continue;
    CHECK(n->value[0] == 0.0);
    for (std::size_t k = 1; k < n->value.size(); ++k)
      CHECK(n->value[k] >= n->value[k - 1]);

    const RadialTable g = partial_rdf(s, kSi, kO, r_max, bins);
    const auto &e = s.assignments();
    const double rho = std::count(e.begin(), e.end(), kO) / s.lattice().volume();
    const double n_si = std::count(e.begin(), e.end(), kSi);
    const double dr = r_max / bins;
    double running = 0.0;
    for (int k = 0; k < bins; ++k) {
      running +=
          g.value[k] * rho * 4.0 / 3.0 * M_PI * (std::pow((k + 1) * dr, 3) - std::pow(k * dr, 3));
      // within one pair per center atom
      CHECK(std::abs(running - n->value[k + 1]) <= 1.0 / n_si + 1e-9);
    }
  }
}

TEST_CASE("molar concentration excludes ghosts") {
  const ElementTable t = sio2_table();
  Assignments a(100, kO);
  std::fill(a.begin(), a.begin() + 15, kSi);
  CHECK(molar_concentration(a, t, kSi) == 0.15);
  CHECK(molar_concentration(Assignments(10, kO), t, kSi) == 0.0);
  Assignments with_ghosts(100, kSi);
  with_ghosts.insert(with_ghosts.end(), 50, kGhost);
  CHECK(molar_concentration(with_ghosts, t, kSi) == 1.0);
  CHECK_THROWS_AS(molar_concentration(Assignments(4, kGhost), t, kSi), EmptyStructure);

  const ElementTable meg = load_charge_table(data_file("meg.table"));
  const MaterialSample li = load_extxyz(fixture("li15.xyz"), meg);
  CHECK(molar_concentration(li.assignments(), meg, *meg.index_of("Li")) == 0.15);
}

TEST_CASE("regression metrics") {
  const double t2[] = {10, 20}, g2[] = {12, 18};
  RegressionReport r = regression_metrics(t2, g2);
  CHECK(std::abs(r.mae - 2.0) < 1e-12);
  CHECK(std::abs(r.rmse - 2.0) < 1e-12);
  CHECK(std::abs(r.mape - 15.0) < 1e-12);

  const double t1[] = {10}, g1[] = {13};
  r = regression_metrics(t1, g1);
  CHECK(std::abs(r.mae - 3.0) < 1e-12);
  CHECK(std::abs(r.rmse - 3.0) < 1e-12);
  CHECK(std::abs(r.mape - 30.0) < 1e-12);

  r = regression_metrics(t2, t2);
  CHECK(r.mae == 0.0);
  CHECK(r.rmse == 0.0);
  CHECK(r.mape == 0.0);

  const double zero[] = {0, 1};
  CHECK_THROWS_AS(regression_metrics(zero, g2), ZeroTarget);
  CHECK_THROWS_AS(regression_metrics(t2, g1), ValidationError);
  CHECK_THROWS_AS(regression_metrics({}, {}), ValidationError);

  std::mt19937_64 rng(115);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> a(uniform_int(rng, 1, 20)), b(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      a[i] = uniform(rng, 1.0, 50.0);
      b[i] = uniform(rng, 0.0, 60.0);
    }
    const RegressionReport q = regression_metrics(a, b);
    CHECK(q.mae >= 0.0);
    CHECK(q.rmse >= q.mae - 1e-12);
  }
}

TEST_CASE("radial table output") {
  std::ostringstream out;
  write_radial_table(out, RadialTable{{0.5, 1.5}, {0.0, 2.0}});
  const std::string text = out.str();
  CHECK(text.find("0.5") != std::string::npos);
  CHECK(std::count(text.begin(), text.end(), '\n') >= 2);
}
