#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "omni/common.hpp"
#include "omni/tensor.hpp"

namespace omni {

static_assert(std::endian::native == std::endian::little,
              "tns files are little-endian; big-endian hosts are unsupported");

// .tns tensor file: 8-byte magic "OMNITNS1", a u64 little-endian byte length
// of the UTF-8 JSON header {"dtype":"f64"|"f32","shape":[...]}, the header,
// zero padding so the raw little-endian payload starts at a 64-byte-aligned
// offset, then the data.

inline constexpr char kTnsMagic[8] = {'O', 'M', 'N', 'I', 'T', 'N', 'S', '1'};

namespace detail {
template <typename T>
const char* tns_dtype();
template <>
inline const char* tns_dtype<double>() { return "f64"; }
template <>
inline const char* tns_dtype<float>() { return "f32"; }
}  // namespace detail

template <typename T>
void write_tns(const std::filesystem::path& path, const std::vector<int>& shape,
               const T* data, size_t count) {
  nlohmann::json header = {{"dtype", detail::tns_dtype<T>()}, {"shape", shape}};
  const std::string hs = header.dump();
  std::ofstream f(path, std::ios::binary);
  check(f.good(), ErrorCode::IoError, "cannot open for writing: " + path.string());
  f.write(kTnsMagic, 8);
  const uint64_t len = hs.size();
  f.write(reinterpret_cast<const char*>(&len), 8);
  f.write(hs.data(), static_cast<std::streamsize>(hs.size()));
  const size_t offset = 16 + hs.size();
  const size_t pad = (64 - offset % 64) % 64;
  const char zeros[64] = {};
  f.write(zeros, static_cast<std::streamsize>(pad));
  f.write(reinterpret_cast<const char*>(data),
          static_cast<std::streamsize>(count * sizeof(T)));
  check(f.good(), ErrorCode::IoError, "write failed: " + path.string());
}

template <typename T>
void write_tns(const std::filesystem::path& path, const Tensor<T>& t) {
  write_tns(path, t.shape(), t.data(), static_cast<size_t>(t.numel()));
}

template <typename T>
Tensor<T> read_tns(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  check(f.good(), ErrorCode::IoError, "cannot open: " + path.string());
  char magic[8];
  f.read(magic, 8);
  check(f.good() && std::memcmp(magic, kTnsMagic, 8) == 0, ErrorCode::IoError,
        "not a tns file: " + path.string());
  uint64_t len = 0;
  f.read(reinterpret_cast<char*>(&len), 8);
  check(f.good() && len < (1u << 20), ErrorCode::IoError, "bad tns header length");
  std::string hs(len, '\0');
  f.read(hs.data(), static_cast<std::streamsize>(len));
  const auto header = nlohmann::json::parse(hs);
  const std::string dtype = header.at("dtype").get<std::string>();
  check(dtype == detail::tns_dtype<T>(), ErrorCode::IoError,
        "tns dtype mismatch: file holds " + dtype);
  const std::vector<int> shape = header.at("shape").get<std::vector<int>>();
  const size_t offset = 16 + hs.size();
  f.seekg(static_cast<std::streamoff>(offset + (64 - offset % 64) % 64));
  const int64_t n = Tensor<T>::shape_numel(shape);
  std::vector<T> data(static_cast<size_t>(n));
  f.read(reinterpret_cast<char*>(data.data()),
         static_cast<std::streamsize>(data.size() * sizeof(T)));
  check(f.good(), ErrorCode::IoError, "truncated tns payload: " + path.string());
  return Tensor<T>::from_data(shape, std::move(data));
}

// Reads the header of any .tns file without touching the payload.
inline std::pair<std::string, std::vector<int>> read_tns_header(
    const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  check(f.good(), ErrorCode::IoError, "cannot open: " + path.string());
  char magic[8];
  f.read(magic, 8);
  check(f.good() && std::memcmp(magic, kTnsMagic, 8) == 0, ErrorCode::IoError,
        "not a tns file: " + path.string());
  uint64_t len = 0;
  f.read(reinterpret_cast<char*>(&len), 8);
  std::string hs(len, '\0');
  f.read(hs.data(), static_cast<std::streamsize>(len));
  const auto header = nlohmann::json::parse(hs);
  return {header.at("dtype").get<std::string>(),
          header.at("shape").get<std::vector<int>>()};
}

}  // namespace omni
