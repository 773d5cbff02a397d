#include "eotk/models/tensor.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <numeric>

#include <fmt/format.h>

#include "eotk/core/error.hpp"
#include "eotk/core/hash.hpp"

namespace eotk {

namespace {

constexpr char kMagic[8] = {'E', 'O', 'T', 'K', 'W', 'T', 'S', '\0'};
constexpr std::uint32_t kBlobVersion = 1;

template <typename T>
void put(std::vector<char>& out, T value) {
  char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.insert(out.end(), bytes, bytes + sizeof(T));
}

class Reader {
 public:
  explicit Reader(const std::vector<char>& blob) : blob_(blob) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    char bytes[sizeof(T)];
    std::memcpy(bytes, blob_.data() + pos_, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
    pos_ += sizeof(T);
    T value;
    std::memcpy(&value, bytes, sizeof(T));
    return value;
  }

  std::string get_string(std::size_t n) {
    need(n);
    std::string s(blob_.data() + pos_, n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == blob_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > blob_.size()) throw Error(Errc::checksum_mismatch, "weights blob is truncated");
  }

  const std::vector<char>& blob_;
  std::size_t pos_ = 0;
};

}  // namespace

Tensor Tensor::zeros(std::vector<std::size_t> shape) {
  const std::size_t n = std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
  return Tensor{std::move(shape), std::vector<double>(n, 0.0)};
}

ParameterSet zeros_like(const ParameterSet& params) {
  ParameterSet out;
  out.reserve(params.size());
  for (const auto& p : params) out.push_back(Parameter{p.name, Tensor::zeros(p.tensor.shape)});
  return out;
}

std::size_t parameter_count(const ParameterSet& params) {
  std::size_t n = 0;
  for (const auto& p : params) n += p.tensor.numel();
  return n;
}

std::vector<char> serialize_parameters(const ParameterSet& params) {
  std::vector<char> out(kMagic, kMagic + sizeof(kMagic));
  out.reserve(sizeof(kMagic) + 8 * parameter_count(params) + 64 * params.size());
  put<std::uint32_t>(out, kBlobVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(params.size()));
  for (const auto& p : params) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(p.name.size()));
    out.insert(out.end(), p.name.begin(), p.name.end());
    put<std::uint32_t>(out, static_cast<std::uint32_t>(p.tensor.shape.size()));
    for (auto d : p.tensor.shape) put<std::uint64_t>(out, d);
    for (double v : p.tensor.values) put<double>(out, v);
  }
  return out;
}

ParameterSet deserialize_parameters(const std::vector<char>& blob) {
  if (blob.size() < sizeof(kMagic) || std::memcmp(blob.data(), kMagic, sizeof(kMagic)) != 0) {
    throw Error(Errc::checksum_mismatch, "weights blob has no valid header");
  }
  Reader r(blob);
  r.get_string(sizeof(kMagic));
  const auto version = r.get<std::uint32_t>();
  if (version != kBlobVersion) {
    throw Error(Errc::version_unsupported, fmt::format("weights blob version {} is not supported", version));
  }
  const auto count = r.get<std::uint32_t>();
  ParameterSet params;
  params.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    Parameter p;
    p.name = r.get_string(r.get<std::uint32_t>());
    const auto ndim = r.get<std::uint32_t>();
    for (std::uint32_t d = 0; d < ndim; ++d) p.tensor.shape.push_back(r.get<std::uint64_t>());
    p.tensor = Tensor::zeros(p.tensor.shape);
    for (auto& v : p.tensor.values) v = r.get<double>();
    params.push_back(std::move(p));
  }
  if (!r.done()) throw Error(Errc::checksum_mismatch, "weights blob has trailing bytes");
  return params;
}

std::string parameter_checksum(const ParameterSet& params) { return sha256_hex(serialize_parameters(params)); }

}  // namespace eotk
