#pragma once

#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "greennas/binary_io.hpp"
#include "greennas/dataset/windows.hpp"

namespace greennas {

// Prepared dataset container.
//   "GNDS" | u32 version | u32 T | u32 F | u64 N | u32 n_segments
//   per segment: string32 name, u64 first window, u64 count
//   u32 n_cities, string32 names...
//   X: N*T*F float32 | Y: N*F float32 | origins: N x (u32 city, u64 row)
// All integers and floats little-endian, tensors row-major.
inline constexpr std::uint32_t kDatasetFormatVersion = 1;

using NamedSegments = std::vector<std::pair<std::string, WindowedDataset>>;

inline void save_prepared(const std::filesystem::path& path, const NamedSegments& segments) {
  require(!segments.empty(), "save_prepared: no segments");
  WindowedDataset all;
  all.lookback = segments.front().second.lookback;
  all.features = segments.front().second.features;
  binary::Writer w;
  w.put_raw("GNDS");
  w.put(kDatasetFormatVersion);
  std::vector<std::pair<std::uint64_t, std::uint64_t>> offsets;
  for (const auto& [name, ds] : segments) {
    offsets.emplace_back(all.size(), ds.size());
    all.append(ds);
  }
  w.put(static_cast<std::uint32_t>(all.lookback));
  w.put(static_cast<std::uint32_t>(all.features));
  w.put(static_cast<std::uint64_t>(all.size()));
  w.put(static_cast<std::uint32_t>(segments.size()));
  for (std::size_t s = 0; s < segments.size(); ++s) {
    w.put_string32(segments[s].first);
    w.put(offsets[s].first);
    w.put(offsets[s].second);
  }
  w.put(static_cast<std::uint32_t>(all.cities.size()));
  for (const auto& c : all.cities) w.put_string32(c);
  w.put_floats(all.x);
  w.put_floats(all.y);
  for (const auto& o : all.origins) {
    w.put(o.city);
    w.put(o.row);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write dataset " + path.string());
  out.write(reinterpret_cast<const char*>(w.bytes().data()), static_cast<std::streamsize>(w.bytes().size()));
  if (!out) throw IoError("write failed for dataset " + path.string());
}

inline NamedSegments load_prepared(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open dataset " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  binary::Reader r(bytes);
  if (r.get_raw(4) != "GNDS") throw FormatError("not a GNDS dataset: " + path.string());
  if (auto v = r.get<std::uint32_t>(); v != kDatasetFormatVersion)
    throw FormatError("unsupported dataset version " + std::to_string(v));
  const auto lookback = r.get<std::uint32_t>();
  const auto features = r.get<std::uint32_t>();
  const auto n = r.get<std::uint64_t>();
  const auto n_segments = r.get<std::uint32_t>();
  struct Entry {
    std::string name;
    std::uint64_t first, count;
  };
  std::vector<Entry> entries;
  for (std::uint32_t s = 0; s < n_segments; ++s) {
    Entry e;
    e.name = r.get_string32();
    e.first = r.get<std::uint64_t>();
    e.count = r.get<std::uint64_t>();
    if (e.first + e.count > n) throw FormatError("segment '" + e.name + "' exceeds window count");
    entries.push_back(std::move(e));
  }
  WindowedDataset all;
  all.lookback = lookback;
  all.features = features;
  const auto n_cities = r.get<std::uint32_t>();
  for (std::uint32_t c = 0; c < n_cities; ++c) all.cities.push_back(r.get_string32());
  if (r.remaining() < n * (lookback * features + features) * sizeof(float))
    throw FormatError("dataset payload truncated");
  all.x.resize(n * lookback * features);
  all.y.resize(n * features);
  r.get_floats(all.x);
  r.get_floats(all.y);
  all.origins.resize(n);
  for (auto& o : all.origins) {
    o.city = r.get<std::uint32_t>();
    o.row = r.get<std::uint64_t>();
    if (o.city >= n_cities) throw FormatError("window origin references unknown city");
  }
  NamedSegments out;
  for (const auto& e : entries) {
    std::vector<std::size_t> idx(e.count);
    for (std::size_t i = 0; i < e.count; ++i) idx[i] = e.first + i;
    out.emplace_back(e.name, all.subset(idx));
  }
  return out;
}

}  // namespace greennas
