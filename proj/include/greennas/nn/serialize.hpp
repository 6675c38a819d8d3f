#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <zlib.h>

#include "greennas/binary_io.hpp"
#include "greennas/nn/train.hpp"

namespace greennas::nn {

// Model artifact layout (little-endian):
//   "GNAS" | u32 format version | string32 descriptor (key=value lines)
//   u32 tensor count, then per tensor: string32 name | u32 ndim | u32 dims[ndim]
//     | float32 payload, row-major
//   u32 CRC-32 of every preceding byte
inline constexpr std::uint32_t kModelFormatVersion = 1;

namespace detail {

inline std::string fmt_double(double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

inline std::string join(const std::vector<std::string>& parts, char sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

inline std::uint32_t crc32_of(const std::uint8_t* data, std::size_t n) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  while (n > 0) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(n, 1u << 30));
    crc = ::crc32(crc, data, chunk);
    data += chunk;
    n -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

inline std::string descriptor_text(const TrainedModel& m) {
  std::ostringstream os;
  os << "arch=" << to_descriptor(m.spec()) << '\n'
     << "input_features=" << m.spec().input_features << '\n'
     << "outputs=" << m.spec().outputs << '\n'
     << "epochs_run=" << m.meta.epochs_run << '\n'
     << "best_epoch=" << m.meta.best_epoch << '\n'
     << "best_val_rmse=" << fmt_double(m.meta.best_val_rmse) << '\n'
     << "seed=" << m.meta.seed << '\n'
     << "scalers=" << join(m.scaler_ids, ';') << '\n';
  return os.str();
}

inline std::map<std::string, std::string> parse_kv(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError("malformed descriptor line '" + line + "'");
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

inline const std::string& kv_at(const std::map<std::string, std::string>& kv, const std::string& key) {
  auto it = kv.find(key);
  if (it == kv.end()) throw FormatError("model descriptor lacks '" + key + "'");
  return it->second;
}

}  // namespace detail

inline std::vector<std::uint8_t> serialize_model(const TrainedModel& model) {
  binary::Writer w;
  w.put_raw("GNAS");
  w.put(kModelFormatVersion);
  w.put_string32(detail::descriptor_text(model));
  const auto params = model.net.params();
  w.put(static_cast<std::uint32_t>(params.size()));
  std::vector<float> row_major;
  for (const auto* p : params) {
    w.put_string32(p->name);
    w.put(std::uint32_t{2});
    w.put(static_cast<std::uint32_t>(p->value.rows()));
    w.put(static_cast<std::uint32_t>(p->value.cols()));
    row_major.resize(static_cast<std::size_t>(p->value.size()));
    Eigen::Map<Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        row_major.data(), p->value.rows(), p->value.cols()) = p->value;
    w.put_floats(row_major);
  }
  w.put(detail::crc32_of(w.bytes().data(), w.bytes().size()));
  return std::move(w.bytes());
}

inline TrainedModel deserialize_model(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 12) throw FormatError("model artifact too short");
  const std::size_t body = bytes.size() - 4;
  binary::Reader tail(bytes.subspan(body));
  if (tail.get<std::uint32_t>() != detail::crc32_of(bytes.data(), body))
    throw FormatError("model artifact checksum mismatch");

  binary::Reader r(bytes.first(body));
  if (r.get_raw(4) != "GNAS") throw FormatError("not a GNAS model artifact");
  if (auto v = r.get<std::uint32_t>(); v != kModelFormatVersion)
    throw FormatError("unsupported model format version " + std::to_string(v));
  const auto kv = detail::parse_kv(r.get_string32());

  TrainedModel m;
  const auto spec = parse_descriptor(detail::kv_at(kv, "arch"), std::stoi(detail::kv_at(kv, "input_features")),
                                     std::stoi(detail::kv_at(kv, "outputs")));
  m.net = Network<float>(spec);
  m.meta.epochs_run = std::stoi(detail::kv_at(kv, "epochs_run"));
  m.meta.best_epoch = std::stoi(detail::kv_at(kv, "best_epoch"));
  const auto& rmse_text = detail::kv_at(kv, "best_val_rmse");
  std::from_chars(rmse_text.data(), rmse_text.data() + rmse_text.size(), m.meta.best_val_rmse);
  m.meta.seed = std::stoull(detail::kv_at(kv, "seed"));
  const auto& scalers = detail::kv_at(kv, "scalers");
  std::size_t pos = 0;
  while (!scalers.empty()) {
    auto next = scalers.find(';', pos);
    m.scaler_ids.push_back(scalers.substr(pos, next == std::string::npos ? std::string::npos : next - pos));
    if (next == std::string::npos) break;
    pos = next + 1;
  }

  auto params = m.net.params();
  const auto count = r.get<std::uint32_t>();
  if (count != params.size())
    throw FormatError("model artifact holds " + std::to_string(count) + " tensors, spec needs " +
                      std::to_string(params.size()));
  std::vector<float> row_major;
  for (auto* p : params) {
    const auto name = r.get_string32();
    if (name != p->name) throw FormatError("unexpected tensor '" + name + "', expected '" + p->name + "'");
    const auto ndim = r.get<std::uint32_t>();
    if (ndim != 2) throw FormatError("tensor '" + name + "' has rank " + std::to_string(ndim));
    const auto rows = r.get<std::uint32_t>(), cols = r.get<std::uint32_t>();
    if (rows != p->value.rows() || cols != p->value.cols())
      throw FormatError("tensor '" + name + "' has shape " + std::to_string(rows) + "x" + std::to_string(cols) +
                        ", spec needs " + std::to_string(p->value.rows()) + "x" + std::to_string(p->value.cols()));
    row_major.resize(static_cast<std::size_t>(rows) * cols);
    r.get_floats(row_major);
    p->value = Eigen::Map<Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        row_major.data(), rows, cols);
  }
  if (r.remaining() != 0) throw FormatError("trailing bytes in model artifact");
  return m;
}

inline void save_model(const TrainedModel& model, const std::filesystem::path& path) {
  const auto bytes = serialize_model(model);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write model artifact " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for model artifact " + path.string());
}

inline TrainedModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open model artifact " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_model(bytes);
}

// On-disk size of a serialized artifact in bytes.
inline std::uintmax_t model_size(const std::filesystem::path& path) {
  if (path.empty()) throw PreconditionError("model_size: empty path");
  std::error_code ec;
  const auto n = std::filesystem::file_size(path, ec);
  if (ec) throw IoError("model_size: cannot stat " + path.string() + ": " + ec.message());
  return n;
}

}  // namespace greennas::nn
