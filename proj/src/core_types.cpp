#include "amgenc/core_types.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "amgenc/errors.hpp"

namespace amgenc {
namespace {

double wrap_unit(double f) {
  double w = f - std::floor(f);
  // f slightly below an integer can round up to exactly 1.0
  return w >= 1.0 ? 0.0 : w;
}

} // namespace

Lattice::Lattice(const Mat3 &rows) : rows_(rows) {
  if (!rows.allFinite())
    throw DegenerateLattice("lattice contains non-finite entries");
  volume_ = rows.determinant();
  if (!(volume_ > 0.0)) {
    std::ostringstream msg;
    msg << "lattice determinant must be positive, got " << volume_;
    throw DegenerateLattice(msg.str());
  }
  inverse_ = rows.inverse();
}

Lattice Lattice::cubic(double edge) { return Lattice(Mat3::Identity() * edge); }

double Lattice::min_width() const noexcept {
  double width = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 3; ++k) {
    Vec3 a = rows_.row((k + 1) % 3).transpose();
    Vec3 b = rows_.row((k + 2) % 3).transpose();
    width = std::min(width, volume_ / a.cross(b).norm());
  }
  return width;
}

Vec3 Lattice::wrap(const Vec3 &cartesian) const {
  Vec3 f = to_fractional(cartesian);
  const Vec3 shift = f.array().floor();
  if (shift.isZero())
    return cartesian;
  const Vec3 moved = cartesian - to_cartesian(shift);
  const Vec3 g = to_fractional(moved);
  if ((g.array() >= 0.0).all() && (g.array() < 1.0).all())
    return moved;
  for (int k = 0; k < 3; ++k)
    f[k] = wrap_unit(f[k]);
  return to_cartesian(f);
}

ElementTable::ElementTable(std::vector<std::string> names, std::vector<int> charges,
                           std::vector<double> frequencies, std::optional<int> ghost_index,
                           std::vector<double> covalent_radii)
    : names_(std::move(names)), charges_(std::move(charges)),
      frequencies_(std::move(frequencies)), ghost_index_(ghost_index),
      radii_(std::move(covalent_radii)) {
  const std::size_t d = names_.size();
  if (d == 0)
    throw ValidationError("element table is empty");
  if (charges_.size() != d || frequencies_.size() != d)
    throw ValidationError("element table columns have different lengths");
  if (!radii_.empty() && radii_.size() != d)
    throw ValidationError("covalent radius column has the wrong length");
  double sum = 0.0;
  for (double f : frequencies_) {
    if (!(f >= 0.0) || !std::isfinite(f))
      throw ValidationError("element frequencies must be finite and non-negative");
    sum += f;
  }
  if (std::abs(sum - 1.0) > 1e-12) {
    std::ostringstream msg;
    msg << "element frequencies sum to " << sum << ", expected 1";
    throw ValidationError(msg.str());
  }
  if (ghost_index_) {
    if (*ghost_index_ < 0 || static_cast<std::size_t>(*ghost_index_) >= d)
      throw ValidationError("ghost index out of range");
    if (charges_[*ghost_index_] != 0)
      throw ValidationError("ghost element must carry zero charge");
  }
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i + 1; j < d; ++j)
      if (names_[i] == names_[j])
        throw ValidationError("duplicate element symbol '" + names_[i] + "'");
}

std::optional<int> ElementTable::index_of(const std::string &symbol) const {
  for (std::size_t i = 0; i < names_.size(); ++i)
    if (names_[i] == symbol)
      return static_cast<int>(i);
  return std::nullopt;
}

int ElementTable::require_index(const std::string &symbol) const {
  if (auto idx = index_of(symbol))
    return *idx;
  throw InvalidElement("unknown element symbol '" + symbol + "'");
}

Eigen::VectorXd ElementTable::charge_vector() const {
  Eigen::VectorXd c(size());
  for (int j = 0; j < size(); ++j)
    c[j] = charges_[j];
  return c;
}

MaterialSample::MaterialSample(Lattice lattice, Positions positions, ElementState elements)
    : lattice_(std::move(lattice)), positions_(std::move(positions)),
      elements_(std::move(elements)) {
  const Eigen::Index rows = std::visit(
      [](const auto &state) -> Eigen::Index {
        using T = std::decay_t<decltype(state)>;
        if constexpr (std::is_same_v<T, Logits>)
          return state.rows();
        else
          return static_cast<Eigen::Index>(state.size());
      },
      elements_);
  if (rows != positions_.rows())
    throw ShapeMismatch("position and element row counts differ");
  if (!positions_.allFinite())
    throw ValidationError("positions contain non-finite values");
  positions_ = wrap_positions(lattice_, positions_);
}

const Logits &MaterialSample::logits() const {
  if (const auto *l = std::get_if<Logits>(&elements_))
    return *l;
  throw ValidationError("sample holds element assignments, not logits");
}

const Assignments &MaterialSample::assignments() const {
  if (const auto *a = std::get_if<Assignments>(&elements_))
    return *a;
  throw ValidationError("sample holds element logits, not assignments");
}

void GenerationConfig::validate() const {
  if (steps < 1)
    throw ValidationError("steps must be >= 1");
  if (!(sigma > 0.0))
    throw ValidationError("sigma must be > 0");
  if (!(tau > 0.0))
    throw ValidationError("tau must be > 0");
  if (!(r_cut > 0.0))
    throw ValidationError("r_cut must be > 0");
  if (!(max_density > 0.0))
    throw ValidationError("max_density must be > 0");
}

Positions to_fractional(const Lattice &lattice, const Positions &cartesian) {
  Positions frac = cartesian * lattice.inverse();
  for (Eigen::Index i = 0; i < frac.rows(); ++i)
    for (int k = 0; k < 3; ++k)
      frac(i, k) = wrap_unit(frac(i, k));
  return frac;
}

Positions to_fractional(const MaterialSample &sample) {
  return to_fractional(sample.lattice(), sample.positions());
}

Positions from_fractional(const Lattice &lattice, const Positions &fractional) {
  return fractional * lattice.rows();
}

Positions wrap_positions(const Lattice &lattice, const Positions &cartesian) {
  Positions out(cartesian.rows(), 3);
  for (Eigen::Index i = 0; i < cartesian.rows(); ++i)
    out.row(i) = lattice.wrap(cartesian.row(i).transpose()).transpose();
  return out;
}

Vec3 rounded_displacement(const Vec3 &a, const Vec3 &b, const Lattice &lattice) {
  Vec3 f = lattice.to_fractional(b - a);
  for (int k = 0; k < 3; ++k)
    f[k] -= std::floor(f[k] + 0.5);
  return lattice.to_cartesian(f);
}

Vec3 min_image_displacement(const Vec3 &a, const Vec3 &b, const Lattice &lattice) {
  Vec3 best = rounded_displacement(a, b, lattice);
  if (best.norm() < 0.5 * lattice.min_width())
    return best;
  double best_sq = best.squaredNorm();
  const Vec3 base = best;
  // +-2 around the rounded image covers the 27 images of any in-cell pair
  for (int i = -2; i <= 2; ++i)
    for (int j = -2; j <= 2; ++j)
      for (int k = -2; k <= 2; ++k) {
        Vec3 cand = base - lattice.to_cartesian(Vec3(i, j, k));
        double sq = cand.squaredNorm();
        if (sq < best_sq) {
          best_sq = sq;
          best = cand;
        }
      }
  return best;
}

int ghost_padded_count(const Lattice &lattice, double rho) {
  if (!(rho > 0.0))
    throw ValidationError("density must be positive");
  return static_cast<int>(std::floor(rho * lattice.volume()));
}

} // namespace amgenc
