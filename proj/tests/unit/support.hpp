#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>

#include "amgenc/core_types.hpp"

namespace amgenc::testing {

inline std::string fixture(const std::string &name) { return std::string(AMGENC_FIXTURES) + "/" + name; }
inline std::string data_file(const std::string &name) { return std::string(AMGENC_DATA) + "/" + name; }

inline ElementTable sio2_table() {
  return ElementTable({"Si", "O", "X"}, {4, -2, 0}, {0.3, 0.6, 0.1}, 2, {1.11, 0.66, 0.0});
}

inline double uniform(std::mt19937_64 &rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline int uniform_int(std::mt19937_64 &rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

/// Right-handed skewed cell with edges in [lo, hi] and off-diagonal shear.
inline Lattice random_triclinic(std::mt19937_64 &rng, double lo = 8.0, double hi = 14.0,
                                double shear = 0.35) {
  Mat3 rows;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c)
      rows(r, c) = r == c ? uniform(rng, lo, hi) : uniform(rng, -shear, shear) * lo;
  return Lattice(rows);
}

inline Logits random_logits(std::mt19937_64 &rng, int rows, int cols, double lo = -3.0,
                            double hi = 3.0) {
  Logits out(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j)
      out(i, j) = uniform(rng, lo, hi);
  return out;
}

inline Positions random_positions(std::mt19937_64 &rng, const Lattice &lattice, int n) {
  Positions frac(n, 3);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < 3; ++k)
      frac(i, k) = uniform(rng, 0.0, 1.0);
  return frac * lattice.rows();
}

} // namespace amgenc::testing
