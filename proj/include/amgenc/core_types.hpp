#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace amgenc {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
/// n_a x 3 Cartesian (or fractional) coordinates, one atom per row.
using Positions = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;
/// n_a x d_E element logits, one atom per row.
using Logits = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
/// Per-atom element index into an ElementTable.
using Assignments = std::vector<int>;

/// Periodic cell. Cell vectors are the matrix rows, so a fractional row
/// vector f maps to Cartesian as f * rows().
class Lattice {
public:
  /// Throws DegenerateLattice unless det(rows) > 0.
  explicit Lattice(const Mat3 &rows);

  static Lattice cubic(double edge);

  const Mat3 &rows() const noexcept { return rows_; }
  const Mat3 &inverse() const noexcept { return inverse_; }
  double volume() const noexcept { return volume_; }

  /// Smallest perpendicular distance between opposite cell faces.
  double min_width() const noexcept;

  Vec3 to_fractional(const Vec3 &cartesian) const { return inverse_.transpose() * cartesian; }
  Vec3 to_cartesian(const Vec3 &fractional) const { return rows_.transpose() * fractional; }

  /// Maps a Cartesian point into the cell so that its fractional
  /// coordinates lie in [0, 1). Points already inside are returned unchanged;
  /// others move by whole cell vectors.
  Vec3 wrap(const Vec3 &cartesian) const;

private:
  Mat3 rows_;
  Mat3 inverse_;
  double volume_;
};

/// Element vocabulary with formal charges and training-set marginals.
class ElementTable {
public:
  /// Validates sizes, frequency normalization (1e-12) and the zero ghost
  /// charge. Radii are optional (empty means unknown).
  ElementTable(std::vector<std::string> names, std::vector<int> charges,
               std::vector<double> frequencies, std::optional<int> ghost_index = std::nullopt,
               std::vector<double> covalent_radii = {});

  int size() const noexcept { return static_cast<int>(names_.size()); }
  const std::vector<std::string> &names() const noexcept { return names_; }
  const std::vector<int> &charges() const noexcept { return charges_; }
  const std::vector<double> &frequencies() const noexcept { return frequencies_; }
  std::optional<int> ghost_index() const noexcept { return ghost_index_; }
  const std::vector<double> &covalent_radii() const noexcept { return radii_; }
  bool has_radii() const noexcept { return !radii_.empty(); }

  bool is_ghost(int element) const noexcept { return ghost_index_ && *ghost_index_ == element; }
  std::optional<int> index_of(const std::string &symbol) const;
  /// Like index_of but throws InvalidElement.
  int require_index(const std::string &symbol) const;

  Eigen::VectorXd charge_vector() const;

private:
  std::vector<std::string> names_;
  std::vector<int> charges_;
  std::vector<double> frequencies_;
  std::optional<int> ghost_index_;
  std::vector<double> radii_;
};

/// One periodic cell: lattice, Cartesian positions, and either continuous
/// element logits or discrete assignments.
class MaterialSample {
public:
  using ElementState = std::variant<Logits, Assignments>;

  /// Positions are wrapped into the cell on construction.
  MaterialSample(Lattice lattice, Positions positions, ElementState elements);

  const Lattice &lattice() const noexcept { return lattice_; }
  const Positions &positions() const noexcept { return positions_; }
  const ElementState &element_state() const noexcept { return elements_; }
  int atom_count() const noexcept { return static_cast<int>(positions_.rows()); }

  bool has_logits() const noexcept { return std::holds_alternative<Logits>(elements_); }
  bool has_assignments() const noexcept { return std::holds_alternative<Assignments>(elements_); }
  /// Throws ValidationError if the state is of the other kind.
  const Logits &logits() const;
  const Assignments &assignments() const;

private:
  Lattice lattice_;
  Positions positions_;
  ElementState elements_;
};

struct GenerationConfig {
  int steps = 100;
  double sigma = 0.25;
  double tau = 0.13;
  double r_cut = 6.5;
  double max_density = 0.11;
  std::vector<double> target;
  std::uint64_t seed = 0;

  /// Throws ValidationError on any out-of-range field.
  void validate() const;
};

/// Fractional coordinates of every atom, wrapped into [0, 1).
Positions to_fractional(const MaterialSample &sample);
Positions to_fractional(const Lattice &lattice, const Positions &cartesian);
Positions from_fractional(const Lattice &lattice, const Positions &fractional);

/// Wraps every row into the cell.
Positions wrap_positions(const Lattice &lattice, const Positions &cartesian);

/// Shortest periodic displacement from a to b. Fractional rounding gives
/// the candidate; nearby images are then scanned so strongly
/// skewed cells still return the true minimum.
Vec3 min_image_displacement(const Vec3 &a, const Vec3 &b, const Lattice &lattice);

/// Displacement from a to b with each fractional component in [-0.5, 0.5).
/// Exact minimum image whenever |result| < lattice.min_width() / 2.
Vec3 rounded_displacement(const Vec3 &a, const Vec3 &b, const Lattice &lattice);

/// floor(rho * volume): atom slots including ghost padding.
int ghost_padded_count(const Lattice &lattice, double rho);

} // namespace amgenc
