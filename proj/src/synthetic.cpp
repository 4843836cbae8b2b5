#include "privlens/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

#include "privlens/rng.hpp"

namespace privlens::synthetic {
namespace {

using Rgb = std::array<double, 3>;

struct Ellipse {
  double cx, cy, rx, ry;

  // Negative inside, roughly in pixels near the boundary.
  double distance(double x, double y) const {
    const double dx = (x - cx) / rx;
    const double dy = (y - cy) / ry;
    return (std::sqrt(dx * dx + dy * dy) - 1.0) * std::min(rx, ry);
  }
};

double coverage(double signed_distance) {
  return std::clamp(0.5 - signed_distance, 0.0, 1.0);
}

void blend(Rgb& dst, const Rgb& src, double alpha) {
  for (int c = 0; c < 3; ++c) {
    dst[c] = dst[c] * (1.0 - alpha) + src[c] * alpha;
  }
}

class Params {
 public:
  Params(std::uint64_t seed, int index)
      : key_(rng::derive(seed, static_cast<std::uint64_t>(index))) {}
  double next(double lo, double hi) { return rng::uniform(key_, counter_++, lo, hi); }
  std::uint64_t key() const { return key_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace

Face make_face(int size, std::uint64_t seed, int index) {
  if (size < 16) {
    throw std::invalid_argument("make_face: size must be >= 16");
  }
  Params p(seed, index);
  const double s = size;
  const Rgb background{p.next(0.05, 0.25), p.next(0.05, 0.25), p.next(0.05, 0.25)};
  const Rgb skin{p.next(0.55, 0.9), p.next(0.4, 0.7), p.next(0.3, 0.55)};
  const Rgb hair{p.next(0.05, 0.45), p.next(0.03, 0.3), p.next(0.02, 0.2)};
  const Rgb iris{p.next(0.1, 0.5), p.next(0.1, 0.5), p.next(0.1, 0.5)};
  const Rgb lips{p.next(0.6, 0.85), p.next(0.2, 0.35), p.next(0.25, 0.4)};

  const double cx = s * (0.5 + p.next(-0.04, 0.04));
  const double cy = s * (0.54 + p.next(-0.03, 0.03));
  const Ellipse head{cx, cy, s * p.next(0.27, 0.33), s * p.next(0.34, 0.4)};
  const Ellipse hair_cap{cx, cy - head.ry * 0.35, head.rx * 1.12, head.ry * 0.8};
  const double eye_dx = head.rx * p.next(0.36, 0.46);
  const double eye_y = cy - head.ry * p.next(0.12, 0.22);
  const double eye_rx = head.rx * p.next(0.16, 0.22);
  const double eye_ry = eye_rx * p.next(0.45, 0.65);
  const Ellipse eyes[2] = {{cx - eye_dx, eye_y, eye_rx, eye_ry}, {cx + eye_dx, eye_y, eye_rx, eye_ry}};
  const double iris_r = eye_ry * 0.8;
  const double brow_lift = eye_ry * p.next(1.6, 2.4);
  const double nose_y = cy + head.ry * p.next(0.12, 0.2);
  const double mouth_y = cy + head.ry * p.next(0.42, 0.52);
  const double mouth_rx = head.rx * p.next(0.3, 0.45);
  const Ellipse mouth{cx, mouth_y, mouth_rx, mouth_rx * p.next(0.18, 0.32)};

  Face face;
  face.image = Image(size, size, 3);
  for (int r = 0; r < size; ++r) {
    for (int c = 0; c < size; ++c) {
      const double x = c + 0.5;
      const double y = r + 0.5;
      const std::uint64_t pixel = static_cast<std::uint64_t>(r) * size + c;
      const double grain = rng::uniform(p.key(), 1000 + pixel, -1.0, 1.0);

      Rgb color = background;
      const double stripes = 0.04 * std::sin(0.9 * x + 0.4 * y) + 0.03 * grain;
      for (double& v : color) {
        v += stripes;
      }

      blend(color, hair, coverage(hair_cap.distance(x, y)));
      const double face_alpha = coverage(head.distance(x, y));
      Rgb face_color = skin;
      const double shade = 0.08 * (x - cx) / head.rx + 0.015 * grain;
      for (double& v : face_color) {
        v -= shade;
      }
      // Hairline: the cap stays on top of the upper part of the head.
      const double hairline = cy - head.ry * 0.55;
      const double hair_alpha = y < hairline ? coverage(hair_cap.distance(x, y)) : 0.0;
      blend(color, face_color, face_alpha * (1.0 - hair_alpha));
      if (hair_alpha > 0.0) {
        Rgb strands = hair;
        for (double& v : strands) {
          v += 0.08 * std::sin(1.7 * x + 0.3 * grain);
        }
        blend(color, strands, hair_alpha * face_alpha);
      }

      for (const Ellipse& eye : eyes) {
        blend(color, Rgb{0.92, 0.92, 0.9}, coverage(eye.distance(x, y)));
        const Ellipse pupil{eye.cx, eye.cy, iris_r, iris_r};
        blend(color, iris, coverage(pupil.distance(x, y)) * coverage(eye.distance(x, y)));
        const Ellipse dot{eye.cx, eye.cy, iris_r * 0.45, iris_r * 0.45};
        blend(color, Rgb{0.02, 0.02, 0.02}, coverage(dot.distance(x, y)));
        const Ellipse brow{eye.cx, eye.cy - brow_lift, eye.rx * 1.1, eye.ry * 0.3};
        blend(color, hair, coverage(brow.distance(x, y)));
      }

      const Ellipse nose{cx, nose_y, head.rx * 0.09, head.ry * 0.07};
      blend(color, Rgb{skin[0] * 0.6, skin[1] * 0.55, skin[2] * 0.55},
            coverage(nose.distance(x, y)));
      blend(color, lips, coverage(mouth.distance(x, y)));

      for (int ch = 0; ch < 3; ++ch) {
        face.image(r, c, ch) = std::clamp(color[ch], 0.0, 1.0);
      }
    }
  }

  auto clamp_point = [&](double x, double y) {
    return Landmark{std::clamp(x, 0.0, s - 1.0), std::clamp(y, 0.0, s - 1.0)};
  };
  face.landmarks = {
      clamp_point(cx - eye_dx - 0.5, eye_y - 0.5),
      clamp_point(cx + eye_dx - 0.5, eye_y - 0.5),
      clamp_point(cx - 0.5, nose_y - 0.5),
      clamp_point(cx - mouth.rx - 0.5, mouth_y - 0.5),
      clamp_point(cx + mouth.rx - 0.5, mouth_y - 0.5),
      clamp_point(cx - 0.5, cy + head.ry - 0.5),
  };
  return face;
}

std::vector<Face> make_faces(int count, int size, std::uint64_t seed) {
  std::vector<Face> faces;
  faces.reserve(count);
  for (int i = 0; i < count; ++i) {
    faces.push_back(make_face(size, seed, i));
  }
  return faces;
}

}  // namespace privlens::synthetic
