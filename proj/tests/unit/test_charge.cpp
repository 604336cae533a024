#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "amgenc/charge.hpp"
#include "amgenc/errors.hpp"
#include "amgenc/io_formats.hpp"
#include "support.hpp"

using namespace amgenc;
using namespace amgenc::testing;

namespace {

// direct evaluation without max subtraction; fine for |logit / tau| < 700
double soft_charge_oracle(const Logits &logits, double tau, const std::vector<int> &c) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    double z = 0.0, weighted = 0.0;
    for (Eigen::Index j = 0; j < logits.cols(); ++j) {
      const double w = std::exp(logits(i, j) / tau);
      z += w;
      weighted += w * c[j];
    }
    total += weighted / z;
  }
  return total;
}

long charge_oracle(const Logits &logits, const std::vector<int> &c) {
  long total = 0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index j = 1; j < logits.cols(); ++j)
      if (logits(i, j) > logits(i, best))
        best = j;
    total += c[best];
  }
  return total;
}

ElementTable random_table(std::mt19937_64 &rng, int d) {
  std::vector<std::string> names;
  std::vector<int> charges;
  std::vector<double> freqs(d, 1.0 / d);
  double sum = 0.0;
  for (int j = 0; j < d; ++j) {
    names.push_back("E" + std::to_string(j));
    charges.push_back(uniform_int(rng, -3, 5));
    if (j + 1 < d)
      sum += freqs[j];
  }
  freqs[d - 1] = 1.0 - sum;
  return ElementTable(names, charges, freqs);
}

} // namespace

TEST_CASE("hard charge of small assignments") {
  const ElementTable t = sio2_table();
  CHECK(hard_charge({0, 1, 1}, t) == 0);
  CHECK(hard_charge({2, 2, 2, 2}, t) == 0);
  CHECK(hard_charge({0, 0, 1}, t) == 6);
  CHECK_THROWS_AS(hard_charge({0, 3}, t), InvalidElement);
  CHECK_THROWS_AS(hard_charge({-1}, t), InvalidElement);
}

TEST_CASE("hard charge on the MEG table matches direct summation") {
  const ElementTable t = load_charge_table(data_file("meg.table"));
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 100; ++trial) {
    Assignments a(static_cast<std::size_t>(uniform_int(rng, 1, 300)));
    long expected = 0;
    for (int &e : a) {
      e = uniform_int(rng, 0, t.size() - 1);
      expected += t.charges()[e];
    }
    CHECK(hard_charge(a, t) == expected);
  }
}

TEST_CASE("hard charge from logits with ties going to the lower index") {
  const ElementTable si_o({"Si", "O"}, {4, -2}, {1.0 / 3.0, 2.0 / 3.0});
  Logits l(2, 2);
  l << 5, 0, 0, 5;
  CHECK(hard_charge_from_logits(l, si_o) == 2);
  Logits tie(1, 2);
  tie << 1.5, 1.5;
  CHECK(hard_charge_from_logits(tie, si_o) == 4);
  CHECK(argmax_assignments(tie)[0] == 0);

  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const ElementTable t = random_table(rng, uniform_int(rng, 2, 11));
    const Logits r = random_logits(rng, uniform_int(rng, 1, 20), t.size());
    CHECK(hard_charge_from_logits(r, t) == charge_oracle(r, t.charges()));
  }
}

TEST_CASE("soft charge examples") {
  const ElementTable si_o({"Si", "O"}, {4, -2}, {1.0 / 3.0, 2.0 / 3.0});
  CHECK(soft_charge(Logits::Zero(3, 2), 0.13, si_o) == doctest::Approx(3.0).epsilon(1e-15));

  Logits sharp(3, 2);
  sharp << 10, 0, 0, 10, 0, 10;
  CHECK(std::abs(soft_charge(sharp, 0.13, si_o) - hard_charge_from_logits(sharp, si_o)) < 1e-6);

  std::mt19937_64 rng(17);
  const ElementTable t({"Si", "O", "X"}, {4, -2, 0}, {0.3, 0.6, 0.1}, 2);
  const Logits r = random_logits(rng, 5, 3);
  CHECK(std::abs(soft_charge(r, 0.13, t) - soft_charge_oracle(r, 0.13, t.charges())) < 1e-12);
}

TEST_CASE("soft charge gradient closed form on one uniform atom") {
  const ElementTable si_o({"Si", "O"}, {4, -2}, {1.0 / 3.0, 2.0 / 3.0});
  const Logits g = soft_charge_gradient(Logits::Zero(1, 2), 1.0, si_o);
  CHECK(g(0, 0) == doctest::Approx(1.5).epsilon(1e-15));
  CHECK(g(0, 1) == doctest::Approx(-1.5).epsilon(1e-15));

  Logits saturated(1, 2);
  saturated << 40, 0;
  CHECK(soft_charge_gradient(saturated, 0.13, si_o).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("soft charge gradient matches central differences") {
  std::mt19937_64 rng(99);
  const double h = 1e-5;
  for (int trial = 0; trial < 100; ++trial) {
    const ElementTable t = random_table(rng, uniform_int(rng, 2, 11));
    const double tau = uniform(rng, 0.5, 2.0);
    Logits l = random_logits(rng, uniform_int(rng, 1, 10), t.size());
    const Logits g = soft_charge_gradient(l, tau, t);
    for (Eigen::Index i = 0; i < l.rows(); ++i)
      for (Eigen::Index j = 0; j < l.cols(); ++j) {
        const double keep = l(i, j);
        l(i, j) = keep + h;
        const double up = soft_charge(l, tau, t);
        l(i, j) = keep - h;
        const double down = soft_charge(l, tau, t);
        l(i, j) = keep;
        const double fd = (up - down) / (2 * h);
        CHECK(std::abs(fd - g(i, j)) <= std::max(1e-8, 1e-6 * std::abs(fd)));
      }
  }
}

TEST_CASE("soft charge approaches the hard charge as tau vanishes") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const ElementTable t = random_table(rng, 4);
    Logits l = random_logits(rng, 6, 4, -1.0, 1.0);
    for (Eigen::Index i = 0; i < l.rows(); ++i)
      l(i, uniform_int(rng, 0, 3)) += 2.0; // well separated winner
    CHECK(std::abs(soft_charge(l, 1e-3, t) - hard_charge_from_logits(l, t)) < 1e-6);
  }
}

TEST_CASE("row shifts leave soft charge and gradient unchanged") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const ElementTable t = random_table(rng, 5);
    const Logits l = random_logits(rng, 7, 5);
    Logits shifted = l;
    for (Eigen::Index i = 0; i < l.rows(); ++i)
      shifted.row(i).array() += uniform(rng, -20.0, 20.0);
    CHECK(std::abs(soft_charge(l, 0.13, t) - soft_charge(shifted, 0.13, t)) < 1e-9);
    CHECK((soft_charge_gradient(l, 0.13, t) - soft_charge_gradient(shifted, 0.13, t))
              .cwiseAbs()
              .maxCoeff() < 1e-8);
  }
}

TEST_CASE("charge metrics hand arithmetic") {
  auto r = charge_metrics_from_values({0, 0, 0});
  CHECK(r.p_balanced == 1.0);
  CHECK(r.mean_abs_charge == 0.0);
  CHECK(r.std_charge == 0.0);

  r = charge_metrics_from_values({2, -2});
  CHECK(r.p_balanced == 0.0);
  CHECK(r.mean_abs_charge == 0.0);
  CHECK(std::abs(r.std_charge - 2.0) < 1e-12);

  r = charge_metrics_from_values({0, 4});
  CHECK(r.p_balanced == 0.5);
  CHECK(std::abs(r.mean_abs_charge - 2.0) < 1e-12);
  CHECK(std::abs(r.std_charge - 2.0) < 1e-12);
  CHECK(r.per_sample == std::vector<long>{0, 4});

  CHECK_THROWS_AS(charge_metrics_from_values({}), EmptyBatch);
  CHECK_THROWS_AS(charge_metrics({}, sio2_table()), EmptyBatch);
}

TEST_CASE("charge metrics on identical samples") {
  const ElementTable t = sio2_table();
  const Assignments a{0, 0, 1};
  const auto r = charge_metrics({a, a, a, a}, t);
  CHECK(r.std_charge == 0.0);
  CHECK(r.mean_abs_charge == 6.0);
  CHECK(r.per_sample == std::vector<long>{6, 6, 6, 6});
}
