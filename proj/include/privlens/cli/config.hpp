#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "privlens/attacks.hpp"
#include "privlens/optics.hpp"
#include "privlens/sensor.hpp"
#include "privlens/stage1.hpp"
#include "privlens/stage2.hpp"

namespace privlens::cli {

namespace fs = std::filesystem;

/// Where a lens comes from. Sources: "zero", "hardware", "file", "defocus",
/// "delta", "lowres".
struct LensSource {
  std::string name;
  std::string source = "zero";
  fs::path coefficients_file;
  double defocus_um = 0.0;
  int sensor_size = 16;
};

struct AttackSettings {
  std::vector<LensSource> lenses;
  std::vector<AttackMethod> methods;
  bool dump_images = false;
};

struct LossesSettings {
  std::string bundle = "linear";
  std::optional<std::uint64_t> mock_seed;
  int source_domain = 0;
  int target_domain = 1;
};

struct Paths {
  fs::path dataset_dir;
  fs::path landmark_dir;
  fs::path triples_dir;
  fs::path output_dir = "out";
};

struct RunConfig {
  std::uint64_t seed = 0;
  OpticsConfig optics;
  Stage1Hyper stage1;
  double heatmap_cutoff = 0.05;
  double landmark_sigma_px = 3.0;
  NoiseSpec noise;
  stage2::LossWeights weights;
  LensSource lens;
  AttackSettings attack;
  LossesSettings losses;
  Paths paths;

  /// Canonical JSON of the document the config was parsed from, after
  /// overrides. Its SHA-256 is the config hash.
  std::string canonical;
};

/// Parses a JSON document with strict key checking. Relative paths are
/// resolved against `base_dir`. Throws ConfigError.
RunConfig parse_config(const nlohmann::json& doc, const fs::path& base_dir);

/// Reads the file, applies "a.b.c=value" overrides (value parsed as JSON,
/// falling back to a string) and parses the result.
RunConfig load_config(const fs::path& path, const std::vector<std::string>& overrides);

void apply_override(nlohmann::json& doc, const std::string& assignment);

/// Parses a method name with default parameters ("wiener",
/// "regularized_inverse", "unsharp_blind"). Throws ConfigError.
AttackMethod method_from_name(const std::string& name);

/// Bundled coefficient file for the "hardware" preset.
fs::path hardware_coefficients_path();

/// Zernike coefficients of a lens source. Throws ConfigError for sources
/// without a phase mask (delta, lowres).
zernike::ZernikeCoefficients lens_coefficients(const LensSource& lens);

LensSpec lens_spec(const LensSource& lens, const OpticsConfig& optics);

}  // namespace privlens::cli
