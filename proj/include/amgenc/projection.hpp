#pragma once

#include <vector>

#include "amgenc/core_types.hpp"

namespace amgenc {

struct ProjectionOutcome {
  Logits corrected_logits;
  long residual_charge_before = 0;
  double gradient_norm_sq = 0.0;
};

struct Swap {
  int atom;
  int from;
  int to;
  friend bool operator==(const Swap &, const Swap &) = default;
};

struct DiscreteRepair {
  Assignments assignments;
  double total_cost = 0.0;
  std::vector<Swap> swaps;
};

/// Rank-1 Gauss-Newton correction toward zero total charge. The residual is
/// the hard (argmax) charge Q; the direction is the soft-charge gradient g
/// at temperature tau:
///   E' = E - Q / |g|^2 * g
/// Balanced input is returned unchanged. Throws VanishingGradient when
/// |g|^2 < 1e-12 and Q != 0.
ProjectionOutcome gauss_newton_step(const Logits &logits, const ElementTable &table, double tau);

/// (1 - t) * e0 + t * e1_proj
Logits reinterpolate(const Logits &e0, const Logits &e1_proj, double t_next);

/// Minimum-logit-cost reassignment with exactly zero total charge.
///
/// Starting from the row argmax e_i, choosing element j for atom i costs
/// logits(i, e_i) - logits(i, j) and shifts the charge by c_j - c_{e_i}.
/// A dynamic program over the accumulated charge shift finds the cheapest
/// assignment whose shift equals -Q. Cost ties go to the smaller element
/// index. Throws InfeasibleRepair (with the nearest achievable total charge)
/// when no reassignment balances the sample.
DiscreteRepair discrete_project(const Logits &logits, const ElementTable &table);

} // namespace amgenc
