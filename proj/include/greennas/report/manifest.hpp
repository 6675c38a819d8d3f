#pragma once

#include <sys/utsname.h>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <span>
#include <sstream>
#include <string>
#include <thread>

#include <json.hpp>

#include "greennas/ingest/series.hpp"
#include "greennas/nas/evolve.hpp"

namespace greennas::report {

inline constexpr const char* kToolVersion = "0.3.0";

// FNV-1a over city names, start times and the raw value bytes (NaNs included),
// as 16 hex digits.
inline std::string data_fingerprint(std::span<const HourlySeries> series) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&](const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 1099511628211ULL;
    }
  };
  for (const auto& s : series) {
    mix(s.city.name.data(), s.city.name.size());
    const auto t = s.start_time.time_since_epoch().count();
    mix(&t, sizeof t);
    const auto rows = s.values.rows(), cols = s.values.cols();
    mix(&rows, sizeof rows);
    mix(&cols, sizeof cols);
    mix(s.values.data(), static_cast<std::size_t>(s.values.size()) * sizeof(double));
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline nlohmann::json host_descriptor() {
  nlohmann::json j;
  utsname u{};
  if (uname(&u) == 0) {
    j["os"] = std::string(u.sysname) + " " + u.release;
    j["machine"] = u.machine;
    j["hostname"] = u.nodename;
  }
  j["hardware_threads"] = std::thread::hardware_concurrency();
  std::ifstream cpu("/proc/cpuinfo");
  for (std::string line; std::getline(cpu, line);)
    if (line.rfind("model name", 0) == 0) {
      const auto p = line.find(':');
      if (p != std::string::npos) j["cpu"] = line.substr(p + 2);
      break;
    }
#if defined(__clang__)
  j["compiler"] = "clang " __clang_version__;
#elif defined(__GNUC__)
  j["compiler"] = "gcc " __VERSION__;
#endif
  return j;
}

inline std::string utc_stamp(std::chrono::system_clock::time_point t = std::chrono::system_clock::now()) {
  const std::time_t tt = std::chrono::system_clock::to_time_t(t);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y%m%dT%H%M%SZ", &tm);
  return buf;
}

// Everything needed to rerun a stage: command line, seed, resolved config,
// data fingerprint, version and outputs.
struct RunManifest {
  std::string command;
  std::vector<std::string> argv;
  std::uint64_t seed = 0;
  nlohmann::json config = nlohmann::json::object();
  std::string data_source;
  std::string data_fingerprint;
  std::string started_utc = utc_stamp();
  std::map<std::string, std::string> outputs;  // stage/artifact -> path
  std::string status = "running";
  std::string error;

  nlohmann::json to_json() const {
    return {{"tool", "greennas"},
            {"version", kToolVersion},
            {"command", command},
            {"argv", argv},
            {"seed", seed},
            {"config", config},
            {"data", {{"source", data_source}, {"fingerprint", data_fingerprint}}},
            {"host", host_descriptor()},
            {"started_utc", started_utc},
            {"outputs", outputs},
            {"status", status},
            {"error", error}};
  }

  void write(const std::filesystem::path& path) const {
    std::ofstream f(path);
    if (!f) throw IoError("cannot write manifest " + path.string());
    f << to_json().dump(2) << '\n';
  }
};

inline nlohmann::json to_json(const nn::TrainConfig& c) {
  return {{"learning_rate", c.learning_rate}, {"max_epochs", c.max_epochs}, {"patience", c.patience},
          {"batch_size", c.batch_size},       {"seed", c.seed},             {"frozen_layers", c.frozen_layers}};
}

inline nlohmann::json to_json(const nas::SearchConfig& c) {
  return {{"population", c.population}, {"generations", c.generations}, {"seed", c.seed},
          {"crossover_prob", c.crossover_prob}, {"mutation_prob", c.mutation_prob}, {"subsample", c.subsample},
          {"workers", c.workers}, {"memoize", c.memoize}, {"train", to_json(c.train)}};
}

}  // namespace greennas::report
