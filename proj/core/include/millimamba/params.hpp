#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "millimamba/tensor.hpp"

namespace millimamba::tensor {

// Named parameters in registration order. Names are hierarchical
// ("encoder.vim.0.fwd.a_log") and stable across runs; they key the MMCK
// checkpoint.
class ParamStore {
 public:
  explicit ParamStore(std::uint64_t seed = 0) : rng_(seed) {}

  // Truncated normal (|x| <= 2 sigma), the default for weights.
  Tensor& normal(const std::string& name, Shape shape, double stddev = 0.02);
  Tensor& constant(const std::string& name, Shape shape, double value);
  Tensor& values(const std::string& name, Shape shape, std::vector<double> data);

  Tensor& get(const std::string& name);
  const Tensor& get(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.count(name) != 0; }

  std::size_t size() const { return entries_.size(); }
  std::size_t parameter_count() const;
  const std::vector<std::pair<std::string, Tensor>>& entries() const { return entries_; }
  std::vector<Tensor> tensors() const;

  void zero_grad();
  std::mt19937_64& rng() { return rng_; }

  // MMCK: "MMCK", u32 version=1, u32 count, then per entry u32 name length,
  // name bytes, u8 dtype (1 = f64), u32 rank, u64 dims, raw little-endian data.
  void save(std::ostream& os) const;
  // Overwrites values of existing entries; names, shapes and count must match.
  void load(std::istream& is);

 private:
  Tensor& add(const std::string& name, Tensor t);

  std::mt19937_64 rng_;
  std::vector<std::pair<std::string, Tensor>> entries_;
  std::map<std::string, std::size_t> index_;
};

}  // namespace millimamba::tensor
