#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "cplcalib/errors.hpp"
#include "cplcalib/text.hpp"
#include "cplcalib/version.hpp"

namespace cplcalib::cli {

// Flat key=value record of one run, written alongside the primary output.
// Key order is insertion order so reruns with the same flags produce
// identical manifests except for the trailing duration line.
class Manifest {
 public:
  explicit Manifest(std::string subcommand)
      : start_(std::chrono::steady_clock::now()) {
    set("subcommand", std::move(subcommand));
    set("version", kVersion);
  }

  void set(std::string key, std::string value) {
    entries_.emplace_back(std::move(key), std::move(value));
  }
  void set(std::string key, const char* value) {
    set(std::move(key), std::string(value));
  }
  void set(std::string key, double value) {
    set(std::move(key), format_g17(value));
  }
  void set(std::string key, long long value) {
    set(std::move(key), std::to_string(value));
  }
  void set(std::string key, int value) { set(std::move(key), (long long)value); }
  void set(std::string key, std::uint64_t value) {
    set(std::move(key), std::to_string(value));
  }
  void set(std::string key, bool value) {
    set(std::move(key), value ? std::string("1") : std::string("0"));
  }

  void write(const std::filesystem::path& path) const {
    const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
        std::chrono::steady_clock::now() - start_);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write manifest: " + path.string());
    for (const auto& [key, value] : entries_) {
      out << key << '=' << value << '\n';
    }
    out << "duration_ms=" << elapsed.count() << '\n';
    if (!out) throw IoError("manifest write failed: " + path.string());
  }

 private:
  std::chrono::steady_clock::time_point start_;
  std::vector<std::pair<std::string, std::string>> entries_;
};

inline std::filesystem::path manifest_path(const std::filesystem::path& out) {
  return std::filesystem::path(out.string() + ".manifest");
}

}  // namespace cplcalib::cli
