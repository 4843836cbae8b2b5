#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "privlens/heatmap.hpp"
#include "privlens/image.hpp"
#include "privlens/optics.hpp"
#include "privlens/zernike.hpp"

namespace privlens::io {

namespace fs = std::filesystem;

/// Reads an 8- or 16-bit PNG. Grey, grey+alpha, RGB and RGBA are accepted;
/// alpha is dropped and palettes are expanded. Throws IoError.
Image read_png(const fs::path& path);

/// Encodes values clamped to [0,1] at the given bit depth (8 or 16).
std::string encode_png(const Image& image, int bit_depth = 8);
void write_png(const fs::path& path, const Image& image, int bit_depth = 8);

/// Writes `contents` to a temporary sibling file and renames it into place.
void write_file_atomic(const fs::path& path, const std::string& contents);

std::string read_text_file(const fs::path& path);

/// C x K x K float32 little-endian, row-major.
std::string psf_raw_bytes(const PsfStack& psf);
void write_psf_raw(const fs::path& path, const PsfStack& psf);
PsfStack read_psf_raw(const fs::path& path, int channels, int size);

/// Per-channel max-normalised 8-bit visualisation, channels side by side
/// when the stack is not 3-channel, RGB otherwise.
std::string psf_png_bytes(const PsfStack& psf);
void write_psf_png(const fs::path& path, const PsfStack& psf);

/// Coefficient file: {"p": int, "units": "um", "coefficients": [{"j": int,
/// "beta": float}, ...]}. Missing j are zero. Throws ConfigError for a
/// malformed document or units other than "um", IoError when unreadable.
zernike::ZernikeCoefficients read_coefficients(const fs::path& path);
std::string coefficients_json(const zernike::ZernikeCoefficients& beta);
void write_coefficients(const fs::path& path, const zernike::ZernikeCoefficients& beta);

/// Landmark sidecar {"landmarks": [[x, y], ...]}.
std::vector<Landmark> read_landmarks(const fs::path& path);
void write_landmarks(const fs::path& path, const std::vector<Landmark>& landmarks);

/// Sorted list of *.png files directly inside `dir`.
std::vector<fs::path> list_images(const fs::path& dir);

/// Shortest round-trip decimal representation of a double ("inf" and
/// "-inf" for infinities, "nan" for NaN).
std::string format_double(double value);

}  // namespace privlens::io
