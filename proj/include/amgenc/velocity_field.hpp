#pragma once

#include <cstdint>
#include <span>

#include "amgenc/core_types.hpp"

namespace amgenc {

/// Intermediate state on the flow path. The source draw (x0, e0) is kept
/// because element re-interpolation restarts from it every step.
struct FlowState {
  double t = 0.0;
  Positions x_t;
  Logits e_t;
  Positions x0;
  Logits e0;
};

struct VelocityOutput {
  Positions v_pos; ///< n_a x 3, Angstrom per unit flow time
  Logits v_el;     ///< n_a x d_E
};

/// Predicts (v_X, v_E) for an intermediate state. Implementations must be
/// safe to call concurrently.
class VelocityField {
public:
  virtual ~VelocityField() = default;
  virtual VelocityOutput operator()(const Lattice &lattice, const FlowState &state,
                                    std::span<const double> target) const = 0;
};

/// Exact linear-path velocities toward a fixed target sample:
/// v_X = min-image displacement x0 -> x1 and v_E = E1 - e0. Assignment
/// targets are one-hot encoded over `n_elements` columns.
class TeacherField final : public VelocityField {
public:
  TeacherField(MaterialSample target, int n_elements);

  VelocityOutput operator()(const Lattice &lattice, const FlowState &state,
                            std::span<const double> target) const override;

  const MaterialSample &target() const noexcept { return target_; }
  const Logits &target_logits() const noexcept { return target_logits_; }

private:
  MaterialSample target_;
  Logits target_logits_;
};

/// Charge-balanced random target with n_atoms slots: uniform positions and
/// elements drawn from the table frequencies, then repaired to zero charge.
/// Deterministic in seed.
MaterialSample random_balanced_target(const ElementTable &table, const Lattice &lattice,
                                      int n_atoms, std::uint64_t seed);

/// Free-function form of TeacherField for a single state.
VelocityOutput teacher_field(const Lattice &lattice, const FlowState &state,
                             const MaterialSample &target, int n_elements);

} // namespace amgenc
