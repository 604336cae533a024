#include "amgenc/velocity_field.hpp"

#include "amgenc/element_noise.hpp"
#include "amgenc/errors.hpp"
#include "amgenc/projection.hpp"
#include "amgenc/rng.hpp"

namespace amgenc {
namespace {

Logits one_hot_or_logits(const MaterialSample &sample, int n_elements) {
  if (sample.has_logits()) {
    if (sample.logits().cols() != n_elements)
      throw ShapeMismatch("teacher target logits have the wrong width");
    return sample.logits();
  }
  const auto &a = sample.assignments();
  Logits out = Logits::Zero(static_cast<Eigen::Index>(a.size()), n_elements);
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] < 0 || a[i] >= n_elements)
      throw InvalidElement("teacher target element index out of range");
    out(static_cast<Eigen::Index>(i), a[i]) = 1.0;
  }
  return out;
}

VelocityOutput linear_path_velocity(const Lattice &lattice, const FlowState &state,
                                    const Positions &x1, const Logits &e1) {
  if (state.x0.rows() != x1.rows() || state.e0.rows() != e1.rows() ||
      state.e0.cols() != e1.cols())
    throw ShapeMismatch("teacher target does not match the flow state shape");
  VelocityOutput out;
  out.v_pos.resize(x1.rows(), 3);
  for (Eigen::Index i = 0; i < x1.rows(); ++i)
    out.v_pos.row(i) =
        min_image_displacement(state.x0.row(i).transpose(), x1.row(i).transpose(), lattice)
            .transpose();
  out.v_el = e1 - state.e0;
  return out;
}

} // namespace

TeacherField::TeacherField(MaterialSample target, int n_elements)
    : target_(std::move(target)), target_logits_(one_hot_or_logits(target_, n_elements)) {}

VelocityOutput TeacherField::operator()(const Lattice &lattice, const FlowState &state,
                                        std::span<const double>) const {
  return linear_path_velocity(lattice, state, target_.positions(), target_logits_);
}

MaterialSample random_balanced_target(const ElementTable &table, const Lattice &lattice,
                                      int n_atoms, std::uint64_t seed) {
  const std::uint64_t s = derive_seed(seed, streams::kTeacher, 0);
  NoiseDraw draw = sample_noise(n_atoms, table, lattice, 0.25, s);
  DiscreteRepair repair = discrete_project(draw.element_logits, table);
  return MaterialSample(lattice, std::move(draw.positions), std::move(repair.assignments));
}

VelocityOutput teacher_field(const Lattice &lattice, const FlowState &state,
                             const MaterialSample &target, int n_elements) {
  return linear_path_velocity(lattice, state, target.positions(),
                              one_hot_or_logits(target, n_elements));
}

} // namespace amgenc
