#pragma once
// Flat archive of named double arrays.
//
//   RIAC-ARCHIVE
//   version 1
//   meta <key> <value>
//   array <name> <rank> <dims...> <byte offset>
//   end
//   <payload: little-endian IEEE-754 doubles>

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "riac/error.hpp"
#include "riac/tensor.hpp"

namespace riac::ad {

struct NamedArray {
  std::string name;
  Shape shape;
  std::vector<double> data;
};

struct Archive {
  static constexpr int kVersion = 1;
  int version = kVersion;
  std::vector<std::pair<std::string, std::string>> meta;
  std::vector<NamedArray> arrays;

  const NamedArray& array(const std::string& name) const {
    for (const auto& a : arrays)
      if (a.name == name) return a;
    throw ParseError("archive has no array '" + name + "'");
  }

  std::string meta_value(const std::string& key) const {
    for (const auto& [k, v] : meta)
      if (k == key) return v;
    throw ParseError("archive has no meta key '" + key + "'");
  }
};

namespace detail {

inline std::uint64_t to_little(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    std::uint64_t r = 0;
    for (int i = 0; i < 8; ++i) r |= ((v >> (8 * i)) & 0xFF) << (8 * (7 - i));
    return r;
  }
  return v;
}

}  // namespace detail

inline void write_archive(const std::filesystem::path& path, const Archive& ar) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write '" + path.string() + "'");
  os << "RIAC-ARCHIVE\nversion " << ar.version << '\n';
  for (const auto& [k, v] : ar.meta) os << "meta " << k << ' ' << v << '\n';
  std::uint64_t offset = 0;
  for (const auto& a : ar.arrays) {
    if (a.data.size() != numel(a.shape)) throw ShapeError("archive array '" + a.name + "' size does not match its shape");
    os << "array " << a.name << ' ' << a.shape.size();
    for (auto d : a.shape) os << ' ' << d;
    os << ' ' << offset << '\n';
    offset += a.data.size() * sizeof(double);
  }
  os << "end\n";
  for (const auto& a : ar.arrays)
    for (double v : a.data) {
      std::uint64_t bits = detail::to_little(std::bit_cast<std::uint64_t>(v));
      os.write(reinterpret_cast<const char*>(&bits), sizeof bits);
    }
  if (!os) throw IoError("short write to '" + path.string() + "'");
}

inline Archive read_archive(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open checkpoint '" + path.string() + "'");
  const std::string fname = path.string();
  std::string line;
  std::size_t ln = 1;
  if (!std::getline(is, line) || line != "RIAC-ARCHIVE") throw ParseError(fname, ln, "not a parameter archive");
  Archive ar;
  std::vector<std::uint64_t> offsets;
  bool ended = false;
  while (std::getline(is, line)) {
    ++ln;
    std::istringstream ls(line);
    std::string kind;
    ls >> kind;
    if (kind == "version") {
      ls >> ar.version;
      if (ar.version != Archive::kVersion) throw ParseError(fname, ln, "unsupported archive version " + std::to_string(ar.version));
    } else if (kind == "meta") {
      std::string k, v;
      ls >> k;
      std::getline(ls >> std::ws, v);
      ar.meta.emplace_back(k, v);
    } else if (kind == "array") {
      NamedArray a;
      std::size_t rank = 0;
      ls >> a.name >> rank;
      a.shape.resize(rank);
      for (auto& d : a.shape) ls >> d;
      std::uint64_t off = 0;
      ls >> off;
      if (!ls) throw ParseError(fname, ln, "malformed array header");
      a.data.resize(numel(a.shape));
      offsets.push_back(off);
      ar.arrays.push_back(std::move(a));
    } else if (kind == "end") {
      ended = true;
      break;
    } else {
      throw ParseError(fname, ln, "unknown header line '" + line + "'");
    }
  }
  if (!ended) throw ParseError(fname, ln, "archive header is not terminated");
  std::vector<char> payload((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  for (std::size_t i = 0; i < ar.arrays.size(); ++i) {
    auto& a = ar.arrays[i];
    const std::uint64_t bytes = a.data.size() * sizeof(double);
    if (offsets[i] + bytes > payload.size()) throw ParseError(fname, ln, "payload too short for array '" + a.name + "'");
    for (std::size_t j = 0; j < a.data.size(); ++j) {
      std::uint64_t bits;
      std::memcpy(&bits, payload.data() + offsets[i] + j * sizeof(double), sizeof bits);
      a.data[j] = std::bit_cast<double>(detail::to_little(bits));
    }
  }
  return ar;
}

}  // namespace riac::ad
