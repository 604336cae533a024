#include "amgenc/element_noise.hpp"

#include <cmath>

#include "amgenc/errors.hpp"
#include "amgenc/rng.hpp"

namespace amgenc {

NoiseDraw sample_element_noise(int n_atoms, const ElementTable &table, double sigma,
                               std::uint64_t seed) {
  if (n_atoms <= 0)
    throw InvalidSize("atom count must be positive");
  if (!(sigma >= 0.0) || !std::isfinite(sigma))
    throw ValidationError("noise scale must be finite and non-negative");
  const auto &f = table.frequencies();
  const int d = table.size();

  NoiseDraw draw;
  draw.element_logits = Logits::Zero(n_atoms, d);
  draw.centers.resize(static_cast<std::size_t>(n_atoms));
  for (int i = 0; i < n_atoms; ++i) {
    auto engine = make_engine(seed, streams::kElementNoise, static_cast<std::uint64_t>(i));
    std::discrete_distribution<int> category(f.begin(), f.end());
    std::normal_distribution<double> normal(0.0, 1.0);
    const int k = category(engine);
    draw.centers[static_cast<std::size_t>(i)] = k;
    for (int j = 0; j < d; ++j)
      draw.element_logits(i, j) = (j == k ? 1.0 : 0.0) + sigma * normal(engine);
  }
  return draw;
}

Positions sample_position_noise(int n_atoms, const Lattice &lattice, std::uint64_t seed) {
  if (n_atoms <= 0)
    throw InvalidSize("atom count must be positive");
  Positions frac(n_atoms, 3);
  for (int i = 0; i < n_atoms; ++i) {
    auto engine = make_engine(seed, streams::kPositionNoise, static_cast<std::uint64_t>(i));
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    for (int k = 0; k < 3; ++k) {
      double u = uniform(engine);
      frac(i, k) = u >= 1.0 ? 0.0 : u;
    }
  }
  return from_fractional(lattice, frac);
}

NoiseDraw sample_noise(int n_atoms, const ElementTable &table, const Lattice &lattice,
                       double sigma, std::uint64_t seed) {
  NoiseDraw draw = sample_element_noise(n_atoms, table, sigma, seed);
  draw.positions = sample_position_noise(n_atoms, lattice, seed);
  return draw;
}

} // namespace amgenc
