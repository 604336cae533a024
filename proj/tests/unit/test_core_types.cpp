#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "amgenc/core_types.hpp"
#include "amgenc/errors.hpp"
#include "support.hpp"

using namespace amgenc;
using namespace amgenc::testing;

namespace {

// every image b - a + n L with n in {-1, 0, 1}^3
Vec3 brute_force_min_image(const Vec3 &a, const Vec3 &b, const Lattice &lattice) {
  Vec3 best = b - a;
  double best_sq = best.squaredNorm();
  for (int i = -1; i <= 1; ++i)
    for (int j = -1; j <= 1; ++j)
      for (int k = -1; k <= 1; ++k) {
        const Vec3 cand = b - a + lattice.rows().transpose() * Vec3(i, j, k);
        if (cand.squaredNorm() < best_sq) {
          best_sq = cand.squaredNorm();
          best = cand;
        }
      }
  return best;
}

} // namespace

TEST_CASE("lattice rejects non-positive determinants") {
  CHECK_THROWS_AS(Lattice(Mat3::Zero()), DegenerateLattice);
  Mat3 left = Mat3::Identity() * 5.0;
  left(2, 2) = -5.0;
  CHECK_THROWS_AS(Lattice{left}, DegenerateLattice);
  CHECK(Lattice::cubic(3.0).volume() == doctest::Approx(27.0));
}

TEST_CASE("to_fractional on a cubic cell") {
  const Lattice cube = Lattice::cubic(10.0);
  Positions x(2, 3);
  x << 5, 5, 5, 12, -1, 0;
  const Positions f = to_fractional(cube, x);
  CHECK(f(0, 0) == doctest::Approx(0.5));
  CHECK(f(0, 1) == doctest::Approx(0.5));
  CHECK(f(0, 2) == doctest::Approx(0.5));
  CHECK(f(1, 0) == doctest::Approx(0.2));
  CHECK(f(1, 1) == doctest::Approx(0.9));
  CHECK(f(1, 2) == 0.0);
}

TEST_CASE("fractional round trip on triclinic cells") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const Lattice lattice = random_triclinic(rng);
    Positions frac(1, 3);
    for (int k = 0; k < 3; ++k)
      frac(0, k) = uniform(rng, 0.0, 1.0);
    const Positions back = to_fractional(lattice, from_fractional(lattice, frac));
    CHECK((back - frac).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("sample positions are wrapped into the cell") {
  const Lattice cube = Lattice::cubic(10.0);
  Positions x(1, 3);
  x << -0.5, 10.0, 23.0;
  const MaterialSample s(cube, x, Assignments{0});
  const Positions f = to_fractional(s);
  for (int k = 0; k < 3; ++k) {
    CHECK(f(0, k) >= 0.0);
    CHECK(f(0, k) < 1.0);
  }
  CHECK(s.positions()(0, 0) == doctest::Approx(9.5));
  CHECK(s.positions()(0, 1) == doctest::Approx(0.0));
  CHECK(s.positions()(0, 2) == doctest::Approx(3.0));
}

TEST_CASE("wrapping leaves in-cell points bit-identical and is idempotent") {
  std::mt19937_64 rng(14);
  for (int trial = 0; trial < 50; ++trial) {
    const Lattice lattice = random_triclinic(rng);
    const Positions inside = random_positions(rng, lattice, 20);
    CHECK(wrap_positions(lattice, inside) == inside);
    Positions outside = inside;
    outside.rowwise() += Eigen::RowVector3d(uniform(rng, -40, 40), uniform(rng, -40, 40),
                                            uniform(rng, -40, 40));
    const Positions once = wrap_positions(lattice, outside);
    CHECK(wrap_positions(lattice, once) == once);
    const Positions f = to_fractional(lattice, once);
    CHECK(f.minCoeff() >= 0.0);
    CHECK(f.maxCoeff() < 1.0);
  }
}

TEST_CASE("sample shape checks") {
  const Lattice cube = Lattice::cubic(10.0);
  CHECK_THROWS_AS(MaterialSample(cube, Positions::Zero(2, 3), Assignments{0}), ShapeMismatch);
  CHECK_THROWS_AS(MaterialSample(cube, Positions::Zero(2, 3), Logits::Zero(3, 2)), ShapeMismatch);
  const MaterialSample s(cube, Positions::Zero(2, 3), Logits::Zero(2, 3));
  CHECK(s.has_logits());
  CHECK_THROWS_AS(s.assignments(), ValidationError);
}

TEST_CASE("min image wraps around the boundary") {
  const Lattice cube = Lattice::cubic(10.0);
  const Vec3 d = min_image_displacement(Vec3(9, 0, 0), Vec3(1, 0, 0), cube);
  CHECK(d.x() == doctest::Approx(2.0));
  CHECK(d.y() == 0.0);
  CHECK(d.z() == 0.0);
  CHECK(min_image_displacement(Vec3(3, 4, 5), Vec3(3, 4, 5), cube).norm() == 0.0);
}

TEST_CASE("min image matches 27-image brute force on triclinic cells") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 2000; ++trial) {
    const Lattice lattice = random_triclinic(rng);
    const Positions p = random_positions(rng, lattice, 2);
    const Vec3 a = p.row(0).transpose(), b = p.row(1).transpose();
    const Vec3 ours = min_image_displacement(a, b, lattice);
    const Vec3 brute = brute_force_min_image(a, b, lattice);
    CHECK(ours.norm() <= brute.norm() + 1e-12);
    // ours differs from b - a by a lattice vector
    const Vec3 n = lattice.to_fractional(b - a - ours);
    for (int k = 0; k < 3; ++k)
      CHECK(std::abs(n[k] - std::round(n[k])) < 1e-9);
  }
}

TEST_CASE("min image is antisymmetric away from the half-cell boundary") {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 1000; ++trial) {
    const Lattice lattice = random_triclinic(rng);
    const Positions p = random_positions(rng, lattice, 2);
    const Vec3 a = p.row(0).transpose(), b = p.row(1).transpose();
    const Vec3 ab = min_image_displacement(a, b, lattice);
    const Vec3 ba = min_image_displacement(b, a, lattice);
    CHECK((ab + ba).norm() < 1e-9);
  }
}

TEST_CASE("rounded displacement keeps fractional components in [-0.5, 0.5)") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 1000; ++trial) {
    const Lattice lattice = random_triclinic(rng);
    const Positions p = random_positions(rng, lattice, 2);
    const Vec3 d = rounded_displacement(p.row(0).transpose(), p.row(1).transpose(), lattice);
    const Vec3 f = lattice.to_fractional(d);
    for (int k = 0; k < 3; ++k) {
      CHECK(f[k] >= -0.5 - 1e-12);
      CHECK(f[k] < 0.5 + 1e-12);
    }
  }
}

TEST_CASE("ghost padded atom count") {
  CHECK(ghost_padded_count(Lattice::cubic(18.0), 0.11) == 641);
  CHECK(ghost_padded_count(Lattice::cubic(23.0), 0.11) == 1338);
  CHECK(ghost_padded_count(Lattice::cubic(10.0), 0.125) == 125);
  CHECK_THROWS_AS(ghost_padded_count(Lattice::cubic(10.0), 0.0), ValidationError);
}

TEST_CASE("element table validation") {
  CHECK_NOTHROW(sio2_table());
  CHECK_THROWS_AS(ElementTable({"Si", "O"}, {4, -2}, {0.5, 0.6}), ValidationError);
  CHECK_THROWS_AS(ElementTable({"Si", "O"}, {4, -2}, {1.2, -0.2}), ValidationError);
  CHECK_THROWS_AS(ElementTable({"Si", "X"}, {4, 1}, {0.5, 0.5}, 1), ValidationError);
  CHECK_THROWS_AS(ElementTable({"Si", "Si"}, {4, 4}, {0.5, 0.5}), ValidationError);
  const ElementTable t = sio2_table();
  CHECK(t.index_of("O") == 1);
  CHECK_FALSE(t.index_of("Na").has_value());
  CHECK_THROWS_AS(t.require_index("Na"), InvalidElement);
  CHECK(t.is_ghost(2));
}

TEST_CASE("generation config validation") {
  GenerationConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.steps = 0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg = {};
  cfg.sigma = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg = {};
  cfg.tau = -1.0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg = {};
  cfg.r_cut = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
}
