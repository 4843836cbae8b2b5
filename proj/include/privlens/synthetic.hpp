#pragma once

#include <cstdint>
#include <vector>

#include "privlens/heatmap.hpp"
#include "privlens/image.hpp"

namespace privlens::synthetic {

struct Face {
  Image image;
  std::vector<Landmark> landmarks;  // eyes, nose tip, mouth corners, chin
};

/// Procedural RGB face with skin, eyes, brows, mouth, hair texture and a
/// textured background, fully determined by (seed, index).
Face make_face(int size, std::uint64_t seed, int index);

std::vector<Face> make_faces(int count, int size, std::uint64_t seed);

}  // namespace privlens::synthetic
