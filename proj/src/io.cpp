#include "privlens/io.hpp"

#include <png.h>
#include <unistd.h>

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "privlens/errors.hpp"

namespace privlens::io {
namespace {

using nlohmann::json;

struct PngReader {
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~PngReader() { png_destroy_read_struct(&png, info ? &info : nullptr, nullptr); }
};

struct PngWriter {
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~PngWriter() { png_destroy_write_struct(&png, info ? &info : nullptr); }
};

struct MemoryInput {
  const std::string* data;
  std::size_t offset;
};

void read_from_memory(png_structp png, png_bytep out, png_size_t length) {
  auto* input = static_cast<MemoryInput*>(png_get_io_ptr(png));
  if (input->offset + length > input->data->size()) {
    png_error(png, "truncated PNG data");
  }
  std::memcpy(out, input->data->data() + input->offset, length);
  input->offset += length;
}

void append_to_string(png_structp png, png_bytep data, png_size_t length) {
  auto* out = static_cast<std::string*>(png_get_io_ptr(png));
  out->append(reinterpret_cast<const char*>(data), length);
}

void flush_nothing(png_structp) {}

json parse_json_file(const fs::path& path) {
  const std::string text = read_text_file(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": invalid JSON: " + e.what());
  }
}

template <class T>
void append_le(std::string& out, T value) {
  static_assert(std::endian::native == std::endian::little, "little-endian host expected");
  char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  out.append(bytes, sizeof(T));
}

}  // namespace

Image read_png(const fs::path& path) {
  const std::string bytes = read_text_file(path);
  if (bytes.size() < 8 || png_sig_cmp(reinterpret_cast<png_const_bytep>(bytes.data()), 0, 8) != 0) {
    throw IoError(path.string() + ": not a PNG file");
  }
  PngReader reader;
  reader.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!reader.png) {
    throw IoError("libpng: cannot create read struct");
  }
  reader.info = png_create_info_struct(reader.png);
  if (!reader.info) {
    throw IoError("libpng: cannot create info struct");
  }
  MemoryInput input{&bytes, 0};
  std::vector<png_byte> pixels;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(reader.png))) {
    throw IoError(path.string() + ": corrupt PNG");
  }
  png_set_read_fn(reader.png, &input, read_from_memory);
  png_read_info(reader.png, reader.info);

  png_set_expand(reader.png);
  png_set_strip_alpha(reader.png);
  png_read_update_info(reader.png, reader.info);

  const png_uint_32 width = png_get_image_width(reader.png, reader.info);
  const png_uint_32 height = png_get_image_height(reader.png, reader.info);
  const int depth = png_get_bit_depth(reader.png, reader.info);
  const int channels = png_get_channels(reader.png, reader.info);
  const std::size_t stride = png_get_rowbytes(reader.png, reader.info);
  pixels.resize(stride * height);
  rows.resize(height);
  for (png_uint_32 r = 0; r < height; ++r) {
    rows[r] = pixels.data() + r * stride;
  }
  png_read_image(reader.png, rows.data());
  png_read_end(reader.png, nullptr);

  Image out(static_cast<int>(height), static_cast<int>(width), channels);
  const double scale = depth == 16 ? 65535.0 : 255.0;
  for (png_uint_32 r = 0; r < height; ++r) {
    const png_bytep row = rows[r];
    for (png_uint_32 c = 0; c < width; ++c) {
      for (int ch = 0; ch < channels; ++ch) {
        const std::size_t k = static_cast<std::size_t>(c) * channels + ch;
        const unsigned value = depth == 16 ? (row[2 * k] << 8) | row[2 * k + 1] : row[k];
        out(static_cast<int>(r), static_cast<int>(c), ch) = value / scale;
      }
    }
  }
  return out;
}

std::string encode_png(const Image& image, int bit_depth) {
  if (bit_depth != 8 && bit_depth != 16) {
    throw std::invalid_argument("write_png: bit depth must be 8 or 16");
  }
  if (image.channels() != 1 && image.channels() != 3) {
    throw std::invalid_argument("write_png: only 1- or 3-channel images are supported");
  }
  const int channels = image.channels();
  const int bytes_per_sample = bit_depth / 8;
  const double scale = bit_depth == 16 ? 65535.0 : 255.0;
  const std::size_t stride = static_cast<std::size_t>(image.width()) * channels * bytes_per_sample;
  std::vector<png_byte> pixels(stride * image.height());
  for (int r = 0; r < image.height(); ++r) {
    for (int c = 0; c < image.width(); ++c) {
      for (int ch = 0; ch < channels; ++ch) {
        const double v = std::clamp(image(r, c, ch), 0.0, 1.0);
        const auto q = static_cast<unsigned>(std::lround(v * scale));
        png_bytep dst = pixels.data() + r * stride +
                        (static_cast<std::size_t>(c) * channels + ch) * bytes_per_sample;
        if (bit_depth == 16) {
          dst[0] = static_cast<png_byte>(q >> 8);
          dst[1] = static_cast<png_byte>(q & 0xff);
        } else {
          dst[0] = static_cast<png_byte>(q);
        }
      }
    }
  }

  std::string encoded;
  {
    PngWriter writer;
    writer.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!writer.png) {
      throw IoError("libpng: cannot create write struct");
    }
    writer.info = png_create_info_struct(writer.png);
    if (!writer.info) {
      throw IoError("libpng: cannot create info struct");
    }
    std::vector<png_bytep> rows(image.height());
    for (int r = 0; r < image.height(); ++r) {
      rows[r] = pixels.data() + r * stride;
    }
    if (setjmp(png_jmpbuf(writer.png))) {
      throw IoError("PNG encoding failed");
    }
    png_set_write_fn(writer.png, &encoded, append_to_string, flush_nothing);
    png_set_IHDR(writer.png, writer.info, image.width(), image.height(), bit_depth,
                 channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(writer.png, writer.info);
    png_write_image(writer.png, rows.data());
    png_write_end(writer.png, nullptr);
  }
  return encoded;
}

void write_png(const fs::path& path, const Image& image, int bit_depth) {
  write_file_atomic(path, encode_png(image, bit_depth));
}

void write_file_atomic(const fs::path& path, const std::string& contents) {
  std::error_code ec;
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path(), ec);
    if (ec) {
      throw IoError("cannot create directory " + path.parent_path().string() + ": " +
                    ec.message());
    }
  }
  fs::path temp = path;
  temp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(temp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw IoError("cannot open " + temp.string() + " for writing");
    }
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) {
      fs::remove(temp, ec);
      throw IoError("write failed for " + temp.string());
    }
  }
  fs::rename(temp, path, ec);
  if (ec) {
    fs::remove(temp, ec);
    throw IoError("cannot move " + temp.string() + " to " + path.string());
  }
}

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open " + path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) {
    throw IoError("read failed for " + path.string());
  }
  return buffer.str();
}

std::string psf_raw_bytes(const PsfStack& psf) {
  std::string out;
  out.reserve(static_cast<std::size_t>(psf.channels()) * psf.size() * psf.size() * 4);
  for (const auto& kernel : psf.kernels) {
    for (double v : kernel.values()) {
      append_le(out, static_cast<float>(v));
    }
  }
  return out;
}

void write_psf_raw(const fs::path& path, const PsfStack& psf) {
  write_file_atomic(path, psf_raw_bytes(psf));
}

PsfStack read_psf_raw(const fs::path& path, int channels, int size) {
  if (channels < 1 || size < 1) {
    throw std::invalid_argument("read_psf_raw: channels and size must be positive");
  }
  const std::string bytes = read_text_file(path);
  const std::size_t expected = static_cast<std::size_t>(channels) * size * size * 4;
  if (bytes.size() != expected) {
    throw IoError(path.string() + ": expected " + std::to_string(expected) + " bytes, found " +
                  std::to_string(bytes.size()));
  }
  PsfStack psf;
  std::size_t offset = 0;
  for (int c = 0; c < channels; ++c) {
    Grid<double> kernel(size, size);
    for (auto& v : kernel.values()) {
      float f;
      std::memcpy(&f, bytes.data() + offset, 4);
      offset += 4;
      v = f;
    }
    psf.kernels.push_back(std::move(kernel));
    psf.crop_energy_loss.push_back(0.0);
  }
  return psf;
}

std::string psf_png_bytes(const PsfStack& psf) {
  const int k = psf.size();
  const int c = psf.channels();
  if (c == 0 || k == 0) {
    throw std::invalid_argument("write_psf_png: empty PSF");
  }
  Image view = c == 3 ? Image(k, k, 3) : Image(k, k * c, 1);
  for (int ch = 0; ch < c; ++ch) {
    const auto values = psf.kernels[ch].values();
    const double peak = *std::max_element(values.begin(), values.end());
    const double norm = peak > 0.0 ? 1.0 / peak : 0.0;
    for (int r = 0; r < k; ++r) {
      for (int col = 0; col < k; ++col) {
        const double v = psf.kernels[ch](r, col) * norm;
        if (c == 3) {
          view(r, col, ch) = v;
        } else {
          view(r, ch * k + col, 0) = v;
        }
      }
    }
  }
  return encode_png(view, 8);
}

void write_psf_png(const fs::path& path, const PsfStack& psf) {
  write_file_atomic(path, psf_png_bytes(psf));
}

zernike::ZernikeCoefficients read_coefficients(const fs::path& path) {
  const json doc = parse_json_file(path);
  const std::string where = path.string() + ": ";
  try {
    if (!doc.is_object()) {
      throw ConfigError(where + "coefficient file must be a JSON object");
    }
    for (const auto& [key, value] : doc.items()) {
      if (key != "p" && key != "units" && key != "coefficients") {
        throw ConfigError(where + "unknown key '" + key + "'");
      }
    }
    const int p = doc.at("p").get<int>();
    if (p < 1) {
      throw ConfigError(where + "p must be >= 1");
    }
    const std::string units = doc.at("units").get<std::string>();
    if (units != "um") {
      throw ConfigError(where + "units must be \"um\", got \"" + units + "\"");
    }
    std::vector<double> beta(p, 0.0);
    std::set<int> seen;
    for (const auto& entry : doc.at("coefficients")) {
      const int j = entry.at("j").get<int>();
      const double value = entry.at("beta").get<double>();
      if (j < 1 || j > p) {
        throw ConfigError(where + "Noll index " + std::to_string(j) + " outside 1.." +
                          std::to_string(p));
      }
      if (!seen.insert(j).second) {
        throw ConfigError(where + "duplicate Noll index " + std::to_string(j));
      }
      if (!std::isfinite(value)) {
        throw ConfigError(where + "non-finite coefficient for j=" + std::to_string(j));
      }
      beta[j - 1] = value;
    }
    return zernike::ZernikeCoefficients(std::move(beta));
  } catch (const json::exception& e) {
    throw ConfigError(where + "malformed coefficient file: " + e.what());
  }
}

std::string coefficients_json(const zernike::ZernikeCoefficients& beta) {
  std::ostringstream out;
  out << "{\n  \"p\": " << beta.size() << ",\n  \"units\": \"um\",\n  \"coefficients\": [";
  for (int j = 1; j <= beta.size(); ++j) {
    out << (j == 1 ? "\n" : ",\n") << "    {\"j\": " << j
        << ", \"beta\": " << format_double(beta.noll(j)) << "}";
  }
  out << "\n  ]\n}\n";
  return out.str();
}

void write_coefficients(const fs::path& path, const zernike::ZernikeCoefficients& beta) {
  write_file_atomic(path, coefficients_json(beta));
}

std::vector<Landmark> read_landmarks(const fs::path& path) {
  const json doc = parse_json_file(path);
  try {
    std::vector<Landmark> out;
    for (const auto& point : doc.at("landmarks")) {
      if (!point.is_array() || point.size() != 2) {
        throw ConfigError(path.string() + ": each landmark must be [x, y]");
      }
      out.push_back(Landmark{point[0].get<double>(), point[1].get<double>()});
    }
    return out;
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": malformed landmark file: " + e.what());
  }
}

void write_landmarks(const fs::path& path, const std::vector<Landmark>& landmarks) {
  std::ostringstream out;
  out << "{\"landmarks\": [";
  for (std::size_t i = 0; i < landmarks.size(); ++i) {
    out << (i ? ", " : "") << "[" << format_double(landmarks[i].x) << ", "
        << format_double(landmarks[i].y) << "]";
  }
  out << "]}\n";
  write_file_atomic(path, out.str());
}

std::vector<fs::path> list_images(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) {
    throw IoError(dir.string() + " is not a directory");
  }
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir, ec)) {
    if (entry.is_regular_file() && entry.path().extension() == ".png") {
      out.push_back(entry.path());
    }
  }
  if (ec) {
    throw IoError("cannot list " + dir.string() + ": " + ec.message());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string format_double(double value) {
  if (std::isnan(value)) {
    return "nan";
  }
  if (std::isinf(value)) {
    return value > 0 ? "inf" : "-inf";
  }
  char buffer[64];
  const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, result.ptr);
}

}  // namespace privlens::io
