#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "amgenc/core_types.hpp"
#include "amgenc/projection.hpp"
#include "amgenc/velocity_field.hpp"

namespace amgenc {

struct TraceStep {
  double t = 0.0;
  long charge = 0;               ///< hard charge of the clean extrapolation
  bool projected = false;        ///< Gauss-Newton correction applied
  bool vanishing_gradient = false;
  double gradient_norm_sq = 0.0;
  /// <grad Q_soft, correction> + Q; zero up to rounding when projected.
  double first_order_residual = 0.0;
};

struct GenerationTrace {
  std::vector<TraceStep> steps;
  long charge_before_repair = 0; ///< argmax charge of the final element state
  double repair_cost = 0.0;
  std::size_t repair_swaps = 0;
  int atom_slots = 0;            ///< atoms including ghosts
  int ghost_atoms = 0;
};

struct GenerationTiming {
  double total_seconds = 0.0;
  double repair_seconds = 0.0;
};

struct GenerationResult {
  MaterialSample sample;   ///< ghost atoms removed, assignments state
  GenerationTrace trace;
  Logits final_logits;     ///< element state at t = 1, ghosts included
  Assignments full_assignments; ///< repaired assignments, ghosts included
  GenerationTiming timing;
};

/// Linear flow path at time t: positions move along the minimum-image
/// displacement x0 -> x1 and are wrapped into the cell; elements move along
/// the straight line e0 -> e1.
FlowState flow_interpolate(const Positions &x0, const Positions &x1, const Logits &e0,
                           const Logits &e1, double t, const Lattice &lattice);

/// Flow-matching loss |v_X,pred - v_X|^2 + |v_E,pred - v_E|^2, summed over
/// all entries.
double fm_loss(const VelocityOutput &predicted, const Positions &target_vx, const Logits &target_ve);

/// Constrained Euler generation. Per step: predict velocities, advance and
/// wrap positions, extrapolate the clean element state, apply the
/// Gauss-Newton correction when its argmax charge is nonzero, and
/// re-interpolate from the source noise. The final element state is
/// repaired to exactly zero charge and ghost atoms are dropped.
///
/// The atom count is floor(cfg.max_density * volume) unless given.
/// Throws CutoffExceedsCell, InfeasibleRepair, or ValidationError.
GenerationResult generate(const GenerationConfig &cfg, const ElementTable &table,
                          const Lattice &lattice, const VelocityField &field,
                          std::uint64_t rng_seed);
GenerationResult generate(const GenerationConfig &cfg, const ElementTable &table,
                          const Lattice &lattice, int n_atoms, const VelocityField &field,
                          std::uint64_t rng_seed);

/// Independent generations with seeds[i], run on up to `jobs` threads.
/// Results are in seed order regardless of scheduling.
std::vector<GenerationResult> generate_batch(const GenerationConfig &cfg, const ElementTable &table,
                                             const Lattice &lattice, const VelocityField &field,
                                             std::span<const std::uint64_t> seeds, int jobs = 1);

/// Same, with one velocity field per seed (e.g. a teacher per target).
std::vector<GenerationResult> generate_batch(const GenerationConfig &cfg, const ElementTable &table,
                                             const Lattice &lattice,
                                             std::span<const VelocityField *const> fields,
                                             std::span<const std::uint64_t> seeds, int jobs = 1);

/// Tab-separated trace table, one row per step:
///   sample step t charge abs_charge projected grad_norm_sq
void write_trace_header(std::ostream &out);
void write_trace(std::ostream &out, const GenerationTrace &trace, int sample_id = 0);

} // namespace amgenc
