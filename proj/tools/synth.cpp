#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "privlens/io.hpp"
#include "privlens/synthetic.hpp"

namespace fs = std::filesystem;
using namespace privlens;

namespace {

std::string face_name(int index) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "face_%04d", index);
  return buffer;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"privlens-synth: procedural face images for testing"};
  std::string out;
  int count = 16;
  int size = 128;
  std::uint64_t seed = 1;
  bool triples = false;
  app.add_option("--out", out, "output directory")->required();
  app.add_option("--count", count, "number of faces")->check(CLI::Range(1, 100000));
  app.add_option("--size", size, "image side in pixels")->check(CLI::Range(16, 4096));
  app.add_option("--seed", seed, "generator seed");
  app.add_flag("--triples", triples,
               "write sources/, references/ and landmarks/ for the losses command");
  CLI11_PARSE(app, argc, argv);

  try {
    const fs::path root(out);
    const fs::path image_dir = triples ? root / "sources" : root / "images";
    const fs::path landmark_dir = root / "landmarks";
    for (int i = 0; i < count; ++i) {
      const synthetic::Face face = synthetic::make_face(size, seed, i);
      io::write_png(image_dir / (face_name(i) + ".png"), face.image, 8);
      io::write_landmarks(landmark_dir / (face_name(i) + ".json"), face.landmarks);
      if (triples) {
        const synthetic::Face reference = synthetic::make_face(size, seed, count + i);
        io::write_png(root / "references" / (face_name(i) + ".png"), reference.image, 8);
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
