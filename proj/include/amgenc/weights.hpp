#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

namespace amgenc {

struct Tensor {
  std::vector<std::uint32_t> shape;
  std::vector<double> values; ///< row-major

  std::size_t element_count() const noexcept;
  friend bool operator==(const Tensor &, const Tensor &) = default;
};

/// Named parameter tensors in insertion order. Names are dot-separated
/// paths such as "layers.0.edge_mlp.lin1.weight".
class WeightContainer {
public:
  /// Throws ShapeMismatch when the value count disagrees with the shape and
  /// ValidationError on a duplicate name.
  void add(std::string name, Tensor tensor);

  /// nullptr when absent.
  const Tensor *find(const std::string &name) const;
  /// Throws WeightMismatch when absent or when the shape differs.
  const Tensor &require(const std::string &name, const std::vector<std::uint32_t> &shape) const;

  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  const std::vector<std::pair<std::string, Tensor>> &entries() const noexcept { return entries_; }

  friend bool operator==(const WeightContainer &a, const WeightContainer &b) {
    return a.entries_ == b.entries_;
  }

private:
  std::vector<std::pair<std::string, Tensor>> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Binary container: "AMGW1\n", then per entry a u32 name length, the name
/// bytes, u32 rank, u32 dims, and the float64 values, all little-endian.
void write_weights(std::ostream &out, const WeightContainer &weights);
/// Throws BadMagic, TruncatedStream, or NonFiniteValue.
WeightContainer read_weights(std::istream &in);

void save_weights(const std::string &path, const WeightContainer &weights);
WeightContainer load_weights(const std::string &path);

} // namespace amgenc
