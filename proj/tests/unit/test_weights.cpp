#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <limits>
#include <sstream>

#include "amgenc/egnn.hpp"
#include "amgenc/errors.hpp"
#include "amgenc/weights.hpp"
#include "support.hpp"

using namespace amgenc;
using namespace amgenc::testing;

namespace {

std::string serialize(const WeightContainer &w) {
  std::ostringstream out(std::ios::binary);
  write_weights(out, w);
  return out.str();
}

WeightContainer deserialize(const std::string &bytes) {
  std::istringstream in(bytes, std::ios::binary);
  return read_weights(in);
}

bool bit_equal(const WeightContainer &a, const WeightContainer &b) {
  if (a.size() != b.size())
    return false;
  for (std::size_t e = 0; e < a.size(); ++e) {
    const auto &[na, ta] = a.entries()[e];
    const auto &[nb, tb] = b.entries()[e];
    if (na != nb || ta.shape != tb.shape || ta.values.size() != tb.values.size())
      return false;
    if (std::memcmp(ta.values.data(), tb.values.data(), ta.values.size() * sizeof(double)) != 0)
      return false;
  }
  return true;
}

} // namespace

TEST_CASE("empty container is the magic only") {
  const std::string bytes = serialize(WeightContainer{});
  CHECK(bytes == "AMGW1\n");
  CHECK(deserialize(bytes).empty());
}

TEST_CASE("single 2x2 tensor byte layout") {
  WeightContainer w;
  w.add("w", Tensor{{2, 2}, {1.0, -2.0, 0.5, 3.25}});
  const std::string bytes = serialize(w);
  // magic + name length + name + rank + two dims + four doubles
  CHECK(bytes.size() == 6 + 4 + 1 + 4 + 8 + 32);
  CHECK(bytes.substr(0, 6) == "AMGW1\n");
  CHECK(static_cast<unsigned char>(bytes[6]) == 1); // little-endian length
  CHECK(bytes[7] == 0);
  CHECK(bytes[10] == 'w');
  double first = 0.0;
  std::memcpy(&first, bytes.data() + 6 + 4 + 1 + 4 + 8, sizeof(double));
  CHECK(first == 1.0);
  CHECK(deserialize(bytes) == w);
}

TEST_CASE("random network weights round trip bit-exactly") {
  std::mt19937_64 rng(80);
  for (int trial = 0; trial < 5; ++trial) {
    EgnnConfig cfg;
    cfg.layers = uniform_int(rng, 1, 3);
    cfg.hidden_dim = uniform_int(rng, 2, 16);
    cfg.vector_channels = uniform_int(rng, 1, 4);
    cfg.attention_dim = uniform_int(rng, 2, 8);
    cfg.n_y = uniform_int(rng, 1, 3);
    cfg.n_elements = uniform_int(rng, 2, 12);
    const WeightContainer w = init_egnn_weights(cfg, rng());
    const std::string bytes = serialize(w);
    const WeightContainer back = deserialize(bytes);
    CHECK(bit_equal(w, back));
    CHECK(serialize(back) == bytes);
  }
}

TEST_CASE("special values survive the round trip") {
  WeightContainer w;
  w.add("tiny", Tensor{{3},
                       {std::numeric_limits<double>::denorm_min(), -0.0,
                        std::numeric_limits<double>::max()}});
  w.add("scalar", Tensor{{}, {0.1}});
  CHECK(bit_equal(deserialize(serialize(w)), w));
}

TEST_CASE("corrupt streams raise distinct errors") {
  WeightContainer w;
  w.add("a.b", Tensor{{2, 3}, {1, 2, 3, 4, 5, 6}});
  const std::string bytes = serialize(w);

  std::string bad = bytes;
  bad[0] = 'X';
  CHECK_THROWS_AS(deserialize(bad), BadMagic);
  CHECK_THROWS_AS(deserialize("AMG"), BadMagic);

  for (std::size_t cut = 7; cut < bytes.size(); cut += 5)
    CHECK_THROWS_AS(deserialize(bytes.substr(0, cut)), TruncatedStream);

  std::string nan = bytes;
  const double q = std::numeric_limits<double>::quiet_NaN();
  std::memcpy(nan.data() + nan.size() - 8, &q, sizeof(double));
  CHECK_THROWS_AS(deserialize(nan), NonFiniteValue);
  std::string inf = bytes;
  const double i = std::numeric_limits<double>::infinity();
  std::memcpy(inf.data() + inf.size() - 16, &i, sizeof(double));
  CHECK_THROWS_AS(deserialize(inf), NonFiniteValue);
}

TEST_CASE("container validation") {
  WeightContainer w;
  CHECK_THROWS_AS(w.add("x", Tensor{{2, 2}, {1, 2, 3}}), ShapeMismatch);
  w.add("x", Tensor{{2}, {1, 2}});
  CHECK_THROWS_AS(w.add("x", Tensor{{1}, {1}}), ValidationError);
  CHECK(w.find("y") == nullptr);
  CHECK_THROWS_AS(w.require("y", {2}), WeightMismatch);
  try {
    w.require("x", {3});
    FAIL("expected WeightMismatch");
  } catch (const WeightMismatch &e) {
    CHECK(e.parameter() == "x");
  }
}
