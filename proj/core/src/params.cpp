#include "millimamba/params.hpp"

#include <cmath>
#include <istream>
#include <ostream>

#include "millimamba/binary_io.hpp"
#include "millimamba/error.hpp"

namespace millimamba::tensor {
namespace {

constexpr std::uint32_t kCheckpointVersion = 1;
constexpr std::uint8_t kDtypeF64 = 1;

}  // namespace

Tensor& ParamStore::add(const std::string& name, Tensor t) {
  require(!contains(name), "ParamStore: duplicate parameter '" + name + "'");
  t.set_requires_grad(true);
  index_[name] = entries_.size();
  entries_.emplace_back(name, std::move(t));
  return entries_.back().second;
}

Tensor& ParamStore::normal(const std::string& name, Shape shape, double stddev) {
  std::normal_distribution<double> dist(0.0, stddev);
  std::vector<double> data(numel(shape));
  for (auto& v : data) {
    do {
      v = dist(rng_);
    } while (std::abs(v) > 2.0 * stddev);
  }
  return add(name, Tensor(std::move(shape), std::move(data)));
}

Tensor& ParamStore::constant(const std::string& name, Shape shape, double value) {
  return add(name, Tensor::full(std::move(shape), value));
}

Tensor& ParamStore::values(const std::string& name, Shape shape, std::vector<double> data) {
  return add(name, Tensor(std::move(shape), std::move(data)));
}

Tensor& ParamStore::get(const std::string& name) {
  auto it = index_.find(name);
  require(it != index_.end(), "ParamStore: unknown parameter '" + name + "'");
  return entries_[it->second].second;
}

const Tensor& ParamStore::get(const std::string& name) const {
  auto it = index_.find(name);
  require(it != index_.end(), "ParamStore: unknown parameter '" + name + "'");
  return entries_[it->second].second;
}

std::size_t ParamStore::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [name, t] : entries_) n += t.size();
  return n;
}

std::vector<Tensor> ParamStore::tensors() const {
  std::vector<Tensor> out;
  out.reserve(entries_.size());
  for (const auto& [name, t] : entries_) out.push_back(t);
  return out;
}

void ParamStore::zero_grad() {
  for (auto& [name, t] : entries_) t.zero_grad();
}

void ParamStore::save(std::ostream& os) const {
  io::write_magic(os, "MMCK");
  io::write_u32(os, kCheckpointVersion);
  io::write_u32(os, static_cast<std::uint32_t>(entries_.size()));
  for (const auto& [name, t] : entries_) {
    io::write_u32(os, static_cast<std::uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    io::write_u8(os, kDtypeF64);
    io::write_u32(os, static_cast<std::uint32_t>(t.rank()));
    for (auto d : t.shape()) io::write_u64(os, d);
    for (double v : t.data()) io::write_f64(os, v);
  }
}

void ParamStore::load(std::istream& is) {
  require(io::read_magic(is, "MMCK"), "checkpoint: empty stream");
  require(io::read_u32(is) == kCheckpointVersion, "checkpoint: unsupported version");
  const auto count = io::read_u32(is);
  require(count == entries_.size(), "checkpoint: holds " + std::to_string(count) +
                                        " parameters, model expects " + std::to_string(entries_.size()));
  for (std::uint32_t e = 0; e < count; ++e) {
    const auto len = io::read_u32(is);
    require(len < (1U << 16), "checkpoint: implausible name length");
    const std::string name = io::read_bytes(is, len);
    require(contains(name), "checkpoint: unknown parameter '" + name + "'");
    require(io::read_u8(is) == kDtypeF64, "checkpoint: unsupported dtype for '" + name + "'");
    Shape shape(io::read_u32(is));
    for (auto& d : shape) d = io::read_u64(is);
    Tensor& t = get(name);
    require(shape == t.shape(), "checkpoint: shape mismatch for '" + name + "': file " + to_string(shape) +
                                    ", model " + to_string(t.shape()));
    for (auto& v : t.mutable_data()) {
      v = io::read_f64(is);
      require(std::isfinite(v), "checkpoint: non-finite value in '" + name + "'");
    }
  }
}

}  // namespace millimamba::tensor
