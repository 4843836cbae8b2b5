#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace privlens::cli {

namespace fs = std::filesystem;

std::string sha256_hex(const std::string& data);

/// Collects the files a command emits and writes manifest.json last.
class Manifest {
 public:
  Manifest(std::string command, std::string config_canonical, std::uint64_t seed,
           fs::path output_dir);

  const std::string& run_id() const { return run_id_; }
  const std::string& config_hash() const { return config_hash_; }
  const fs::path& output_dir() const { return output_dir_; }

  /// Writes `contents` atomically under the output dir and records it.
  void write(const fs::path& relative, const std::string& contents);

  void warn(const std::string& message);
  int warnings() const { return static_cast<int>(warnings_.size()); }

  void set_status(std::string status) { status_ = std::move(status); }

  /// Serialises and writes manifest.json.
  void finish();

 private:
  struct Entry {
    std::string path;
    std::string sha256;
    std::uintmax_t bytes;
  };

  std::string command_;
  std::string config_hash_;
  std::string run_id_;
  std::uint64_t seed_;
  fs::path output_dir_;
  std::string started_at_;
  std::string status_ = "ok";
  std::vector<Entry> files_;
  std::vector<std::string> warnings_;
};

}  // namespace privlens::cli
