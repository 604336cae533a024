#pragma once

#include <cstdint>
#include <vector>

#include "amgenc/core_types.hpp"

namespace amgenc {

/// Source sample for one generation.
struct NoiseDraw {
  Logits element_logits;    ///< E0, row i ~ N(e_{k_i}, sigma^2 I)
  Positions positions;      ///< X0, uniform in the cell (may be empty)
  std::vector<int> centers; ///< mixture components k_i ~ Cat(f)
};

/// Draws E0 row-wise from the frequency-weighted Gaussian mixture centred on
/// the one-hot element vectors. Positions are left empty.
/// Throws InvalidSize for n_atoms <= 0.
NoiseDraw sample_element_noise(int n_atoms, const ElementTable &table, double sigma,
                               std::uint64_t seed);

/// Fractional coordinates i.i.d. uniform on [0, 1), returned as Cartesian.
Positions sample_position_noise(int n_atoms, const Lattice &lattice, std::uint64_t seed);

/// Both parts of the source draw.
NoiseDraw sample_noise(int n_atoms, const ElementTable &table, const Lattice &lattice,
                       double sigma, std::uint64_t seed);

} // namespace amgenc
