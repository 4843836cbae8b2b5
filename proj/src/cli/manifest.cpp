#include "privlens/cli/manifest.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <ctime>
#include <iostream>

#include "json.hpp"
#include "privlens/errors.hpp"
#include "privlens/io.hpp"

namespace privlens::cli {
namespace {

std::string utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buffer[32];
  std::strftime(buffer, sizeof(buffer), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buffer;
}

}  // namespace

std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 computation failed");
  }
  static const char* kHex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < length; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 0xf];
  }
  return out;
}

Manifest::Manifest(std::string command, std::string config_canonical, std::uint64_t seed,
                   fs::path output_dir)
    : command_(std::move(command)),
      config_hash_(sha256_hex(config_canonical)),
      seed_(seed),
      output_dir_(std::move(output_dir)),
      started_at_(utc_now()) {
  run_id_ = sha256_hex(command_ + "\n" + config_hash_ + "\n" + std::to_string(seed_)).substr(0, 16);
}

void Manifest::write(const fs::path& relative, const std::string& contents) {
  io::write_file_atomic(output_dir_ / relative, contents);
  files_.push_back(Entry{relative.generic_string(), sha256_hex(contents), contents.size()});
}

void Manifest::warn(const std::string& message) {
  std::cerr << "warning: " << message << "\n";
  warnings_.push_back(message);
}

void Manifest::finish() {
  std::sort(files_.begin(), files_.end(),
            [](const Entry& a, const Entry& b) { return a.path < b.path; });
  nlohmann::ordered_json doc;
  doc["run_id"] = run_id_;
  doc["command"] = command_;
  doc["config_sha256"] = config_hash_;
  doc["version"] = PRIVLENS_VERSION;
  doc["seed"] = seed_;
  doc["status"] = status_;
  doc["started_at"] = started_at_;
  doc["finished_at"] = utc_now();
  doc["warning_count"] = warnings_.size();
  doc["warnings"] = warnings_;
  auto files = nlohmann::ordered_json::array();
  for (const Entry& e : files_) {
    files.push_back({{"path", e.path}, {"sha256", e.sha256}, {"bytes", e.bytes}});
  }
  doc["files"] = files;
  io::write_file_atomic(output_dir_ / "manifest.json", doc.dump(2) + "\n");
}

}  // namespace privlens::cli
