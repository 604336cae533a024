#include "amgenc/weights.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <functional>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "amgenc/errors.hpp"

namespace amgenc {
namespace {

constexpr char kMagic[] = "AMGW1\n";
constexpr std::size_t kMagicSize = sizeof(kMagic) - 1;
constexpr std::uint32_t kMaxRank = 16;
constexpr std::uint32_t kMaxNameLength = 1u << 16;

std::string shape_string(const std::vector<std::uint32_t> &shape) {
  std::ostringstream s;
  s << '[';
  for (std::size_t i = 0; i < shape.size(); ++i)
    s << (i ? "," : "") << shape[i];
  s << ']';
  return s.str();
}

void put_u32(std::ostream &out, std::uint32_t v) {
  std::array<char, 4> b{};
  for (int k = 0; k < 4; ++k)
    b[k] = static_cast<char>((v >> (8 * k)) & 0xffu);
  out.write(b.data(), 4);
}

void put_f64(std::ostream &out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  std::array<char, 8> b{};
  for (int k = 0; k < 8; ++k)
    b[k] = static_cast<char>((bits >> (8 * k)) & 0xffu);
  out.write(b.data(), 8);
}

void read_exact(std::istream &in, char *dst, std::size_t n, const char *what) {
  in.read(dst, static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n)
    throw TruncatedStream(std::string("weight stream truncated while reading ") + what);
}

std::uint32_t get_u32(std::istream &in, const char *what) {
  std::array<unsigned char, 4> b{};
  read_exact(in, reinterpret_cast<char *>(b.data()), 4, what);
  std::uint32_t v = 0;
  for (int k = 0; k < 4; ++k)
    v |= static_cast<std::uint32_t>(b[k]) << (8 * k);
  return v;
}

} // namespace

std::size_t Tensor::element_count() const noexcept {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<std::size_t>());
}

void WeightContainer::add(std::string name, Tensor tensor) {
  if (tensor.values.size() != tensor.element_count())
    throw ShapeMismatch("tensor '" + name + "' has " + std::to_string(tensor.values.size()) +
                        " values for shape " + shape_string(tensor.shape));
  if (index_.count(name))
    throw ValidationError("duplicate weight name '" + name + "'");
  index_.emplace(name, entries_.size());
  entries_.emplace_back(std::move(name), std::move(tensor));
}

const Tensor *WeightContainer::find(const std::string &name) const {
  auto it = index_.find(name);
  return it == index_.end() ? nullptr : &entries_[it->second].second;
}

const Tensor &WeightContainer::require(const std::string &name,
                                       const std::vector<std::uint32_t> &shape) const {
  const Tensor *t = find(name);
  if (!t)
    throw WeightMismatch("missing weight '" + name + "'", name);
  if (t->shape != shape)
    throw WeightMismatch("weight '" + name + "' has shape " + shape_string(t->shape) +
                             ", expected " + shape_string(shape),
                         name);
  return *t;
}

void write_weights(std::ostream &out, const WeightContainer &weights) {
  out.write(kMagic, kMagicSize);
  for (const auto &[name, tensor] : weights.entries()) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_u32(out, static_cast<std::uint32_t>(tensor.shape.size()));
    for (auto dim : tensor.shape)
      put_u32(out, dim);
    for (double v : tensor.values)
      put_f64(out, v);
  }
  if (!out)
    throw Error("failed to write weight stream");
}

WeightContainer read_weights(std::istream &in) {
  std::array<char, kMagicSize> magic{};
  in.read(magic.data(), kMagicSize);
  if (static_cast<std::size_t>(in.gcount()) != kMagicSize ||
      std::memcmp(magic.data(), kMagic, kMagicSize) != 0)
    throw BadMagic("not a weight container (bad magic bytes)");

  WeightContainer weights;
  while (in.peek() != std::char_traits<char>::eof()) {
    const std::uint32_t name_length = get_u32(in, "name length");
    if (name_length > kMaxNameLength)
      throw TruncatedStream("implausible weight name length " + std::to_string(name_length));
    std::string name(name_length, '\0');
    read_exact(in, name.data(), name_length, "name");
    const std::uint32_t rank = get_u32(in, "rank");
    if (rank > kMaxRank)
      throw TruncatedStream("implausible rank " + std::to_string(rank) + " for '" + name + "'");
    Tensor tensor;
    tensor.shape.resize(rank);
    for (auto &dim : tensor.shape)
      dim = get_u32(in, "shape");
    const std::size_t count = tensor.element_count();
    std::vector<unsigned char> raw(count * 8);
    read_exact(in, reinterpret_cast<char *>(raw.data()), raw.size(), "values");
    tensor.values.resize(count);
    for (std::size_t v = 0; v < count; ++v) {
      std::uint64_t bits = 0;
      for (int k = 0; k < 8; ++k)
        bits |= static_cast<std::uint64_t>(raw[v * 8 + k]) << (8 * k);
      const double value = std::bit_cast<double>(bits);
      if (!std::isfinite(value))
        throw NonFiniteValue("non-finite value in weight '" + name + "'");
      tensor.values[v] = value;
    }
    weights.add(std::move(name), std::move(tensor));
  }
  return weights;
}

void save_weights(const std::string &path, const WeightContainer &weights) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw Error("cannot open '" + path + "' for writing");
  write_weights(out, weights);
}

WeightContainer load_weights(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error("cannot open '" + path + "'");
  return read_weights(in);
}

} // namespace amgenc
