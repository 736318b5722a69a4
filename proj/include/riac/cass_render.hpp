#pragma once
// Compact Action Skeleton Sequence images: one part's joint trajectories
// projected onto the x-y plane and drawn frame by frame with a colour that
// encodes time. Also the image-space augmentation menu and PPM I/O.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "riac/error.hpp"
#include "riac/skeleton_io.hpp"

namespace riac::cass {

using skeleton::Part;
using skeleton::PartTrajectory;

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

struct CassImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;  // row-major, 3 bytes per pixel
  Part part = Part::FS;
  std::string sequence_id;
  std::string augmentation;  // empty for the original rendering

  CassImage() = default;
  CassImage(std::size_t w, std::size_t h) : width(w), height(h), pixels(w * h * 3, 0) {}

  std::uint8_t& at(std::size_t x, std::size_t y, std::size_t c) { return pixels[(y * width + x) * 3 + c]; }
  std::uint8_t at(std::size_t x, std::size_t y, std::size_t c) const { return pixels[(y * width + x) * 3 + c]; }
  Rgb rgb(std::size_t x, std::size_t y) const { return {at(x, y, 0), at(x, y, 1), at(x, y, 2)}; }
  void set(std::size_t x, std::size_t y, Rgb c) {
    at(x, y, 0) = c.r;
    at(x, y, 1) = c.g;
    at(x, y, 2) = c.b;
  }
};

struct RenderConfig {
  std::size_t size = 224;
  double hue_start = 240.0;
  double hue_end = 0.0;
  int line_width = 1;
  double margin = 0.10;

  void validate() const {
    if (size < 2) throw DomainError("image size must be at least 2");
    if (!(margin >= 0.0 && margin <= 0.4)) throw DomainError("render margin must lie in [0, 0.4]");
    for (double h : {hue_start, hue_end})
      if (!(h >= 0.0 && h < 360.0)) throw DomainError("hue endpoints must lie in [0, 360)");
    if (line_width < 1) throw DomainError("line width must be at least 1");
  }
};

// Full saturation and value.
inline Rgb hsv_to_rgb(double hue_degrees) {
  double h = std::fmod(hue_degrees, 360.0);
  if (h < 0) h += 360.0;
  h /= 60.0;
  const int sector = static_cast<int>(std::floor(h)) % 6;
  const double f = h - std::floor(h);
  double r = 0, g = 0, b = 0;
  switch (sector) {
    case 0: r = 1; g = f; b = 0; break;
    case 1: r = 1 - f; g = 1; b = 0; break;
    case 2: r = 0; g = 1; b = f; break;
    case 3: r = 0; g = 1 - f; b = 1; break;
    case 4: r = f; g = 0; b = 1; break;
    default: r = 1; g = 0; b = 1 - f; break;
  }
  auto to_byte = [](double v) { return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)); };
  return {to_byte(r), to_byte(g), to_byte(b)};
}

inline double temporal_hue(std::size_t t, std::size_t n, double hue_start = 240.0, double hue_end = 0.0) {
  if (n < 2) throw DomainError("temporal colour needs at least 2 frames");
  if (t >= n) throw DomainError("frame index " + std::to_string(t) + " outside sequence of " + std::to_string(n));
  return hue_start + (hue_end - hue_start) * static_cast<double>(t) / static_cast<double>(n - 1);
}

inline Rgb temporal_color(std::size_t t, std::size_t n, double hue_start = 240.0, double hue_end = 0.0) {
  return hsv_to_rgb(temporal_hue(t, n, hue_start, hue_end));
}

namespace detail {

inline void stamp(CassImage& img, long x, long y, int width, Rgb c) {
  const long lo = -(width - 1) / 2;
  const long hi = width / 2;
  for (long dy = lo; dy <= hi; ++dy)
    for (long dx = lo; dx <= hi; ++dx) {
      const long px = x + dx, py = y + dy;
      if (px >= 0 && py >= 0 && px < static_cast<long>(img.width) && py < static_cast<long>(img.height))
        img.set(static_cast<std::size_t>(px), static_cast<std::size_t>(py), c);
    }
}

// Bresenham, endpoints inclusive.
inline void line(CassImage& img, long x0, long y0, long x1, long y1, int width, Rgb c) {
  const long dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
  const long sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
  long err = dx + dy;
  while (true) {
    stamp(img, x0, y0, width, c);
    if (x0 == x1 && y0 == y1) break;
    const long e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
}

}  // namespace detail

inline CassImage render_cass(const PartTrajectory& traj, const RenderConfig& cfg = {}) {
  cfg.validate();
  const std::size_t n = traj.frame_count();
  if (n < 2) throw DomainError("CASS rendering needs at least 2 frames, sequence '" + traj.sequence_id + "' has " + std::to_string(n));
  double min_x = std::numeric_limits<double>::infinity(), max_x = -min_x;
  double min_y = min_x, max_y = -min_x;
  for (const auto& row : traj.rows) {
    if (row.size() != n) throw DomainError("ragged trajectory matrix");
    for (const auto& j : row) {
      if (!j.finite()) throw DomainError("non-finite coordinate in sequence '" + traj.sequence_id + "'");
      min_x = std::min(min_x, j.x);
      max_x = std::max(max_x, j.x);
      min_y = std::min(min_y, j.y);
      max_y = std::max(max_y, j.y);
    }
  }

  const double extent = std::max(max_x - min_x, max_y - min_y);
  const double span = static_cast<double>(cfg.size - 1);
  const double scale = extent > 0.0 ? span * (1.0 - 2.0 * cfg.margin) / extent : 0.0;
  const double centre = span / 2.0;
  const double mid_x = 0.5 * (min_x + max_x), mid_y = 0.5 * (min_y + max_y);
  // Image rows grow downwards, world y grows upwards.
  auto to_px = [&](const skeleton::Joint3D& j) {
    return std::array<long, 2>{static_cast<long>(std::floor(centre + (j.x - mid_x) * scale + 0.5)),
                               static_cast<long>(std::floor(centre - (j.y - mid_y) * scale + 0.5))};
  };

  CassImage img(cfg.size, cfg.size);
  img.part = traj.part;
  img.sequence_id = traj.sequence_id;
  for (std::size_t t = 0; t < n; ++t) {
    const Rgb colour = temporal_color(t, n, cfg.hue_start, cfg.hue_end);
    for (const auto& chain : traj.chains) {
      if (chain.size() == 1) {
        const auto p = to_px(traj.rows[chain[0]][t]);
        detail::stamp(img, p[0], p[1], cfg.line_width, colour);
        continue;
      }
      for (std::size_t i = 0; i + 1 < chain.size(); ++i) {
        const auto a = to_px(traj.rows[chain[i]][t]);
        const auto b = to_px(traj.rows[chain[i + 1]][t]);
        detail::line(img, a[0], a[1], b[0], b[1], cfg.line_width, colour);
      }
    }
  }
  return img;
}

// ---------------------------------------------------------------------------
// Augmentation

enum class Transform { Crop, HFlip, VFlip, RotPos45, RotNeg45 };

inline constexpr std::array<Transform, 5> kTransformMenu = {Transform::Crop, Transform::HFlip, Transform::VFlip,
                                                            Transform::RotPos45, Transform::RotNeg45};

inline std::string transform_name(Transform t) {
  switch (t) {
    case Transform::Crop: return "crop";
    case Transform::HFlip: return "hflip";
    case Transform::VFlip: return "vflip";
    case Transform::RotPos45: return "rotp45";
    case Transform::RotNeg45: return "rotm45";
  }
  return "?";
}

inline double rotation_degrees(Transform t) {
  if (t == Transform::RotPos45) return 45.0;
  if (t == Transform::RotNeg45) return -45.0;
  return 0.0;
}

struct AugmentationSpec {
  std::vector<Transform> transforms;
  bool keep_original = true;

  static AugmentationSpec none() { return {{}, true}; }
  static AugmentationSpec full() { return {{kTransformMenu.begin(), kTransformMenu.end()}, true}; }

  // "none", "all", or a comma list of crop,hflip,vflip,rot+45,rot-45.
  static AugmentationSpec parse(const std::string& text, bool keep_original = true) {
    if (text == "none" || text.empty()) return {{}, keep_original};
    if (text == "all") return {{kTransformMenu.begin(), kTransformMenu.end()}, keep_original};
    AugmentationSpec spec;
    spec.keep_original = keep_original;
    std::size_t start = 0;
    while (start <= text.size()) {
      const std::size_t end = std::min(text.find(',', start), text.size());
      const std::string tok = text.substr(start, end - start);
      Transform t;
      if (tok == "crop") t = Transform::Crop;
      else if (tok == "hflip") t = Transform::HFlip;
      else if (tok == "vflip") t = Transform::VFlip;
      else if (tok == "rot+45" || tok == "rotp45") t = Transform::RotPos45;
      else if (tok == "rot-45" || tok == "rotm45") t = Transform::RotNeg45;
      else throw UsageError("unknown augmentation '" + tok + "'");
      if (std::find(spec.transforms.begin(), spec.transforms.end(), t) == spec.transforms.end()) spec.transforms.push_back(t);
      start = end + 1;
    }
    return spec;
  }
};

namespace detail {

// Bilinear sample at continuous pixel coordinates; outside pixels are black.
inline std::array<double, 3> sample(const CassImage& img, double sx, double sy) {
  const double fx = std::floor(sx), fy = std::floor(sy);
  const double wx = sx - fx, wy = sy - fy;
  const long x0 = static_cast<long>(fx), y0 = static_cast<long>(fy);
  std::array<double, 3> acc{0, 0, 0};
  for (int dy = 0; dy < 2; ++dy)
    for (int dx = 0; dx < 2; ++dx) {
      const long x = x0 + dx, y = y0 + dy;
      const double w = (dx ? wx : 1 - wx) * (dy ? wy : 1 - wy);
      if (w == 0.0 || x < 0 || y < 0 || x >= static_cast<long>(img.width) || y >= static_cast<long>(img.height)) continue;
      for (std::size_t c = 0; c < 3; ++c) acc[c] += w * img.at(static_cast<std::size_t>(x), static_cast<std::size_t>(y), c);
    }
  return acc;
}

inline std::uint8_t to_byte(double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)); }

}  // namespace detail

inline CassImage flip_horizontal(const CassImage& img) {
  CassImage out = img;
  for (std::size_t y = 0; y < img.height; ++y)
    for (std::size_t x = 0; x < img.width; ++x) out.set(x, y, img.rgb(img.width - 1 - x, y));
  return out;
}

inline CassImage flip_vertical(const CassImage& img) {
  CassImage out = img;
  for (std::size_t y = 0; y < img.height; ++y)
    for (std::size_t x = 0; x < img.width; ++x) out.set(x, y, img.rgb(x, img.height - 1 - y));
  return out;
}

// Central crop of `fraction` of the side, resized back bilinearly.
inline CassImage center_crop_resize(const CassImage& img, double fraction = 0.9) {
  CassImage out = img;
  const double side = fraction * static_cast<double>(img.width);
  const double offset = 0.5 * (static_cast<double>(img.width) - side);
  const double step = side / static_cast<double>(img.width);
  for (std::size_t y = 0; y < img.height; ++y)
    for (std::size_t x = 0; x < img.width; ++x) {
      const auto v = detail::sample(img, offset + (static_cast<double>(x) + 0.5) * step - 0.5,
                                    offset + (static_cast<double>(y) + 0.5) * step - 0.5);
      out.set(x, y, {detail::to_byte(v[0]), detail::to_byte(v[1]), detail::to_byte(v[2])});
    }
  return out;
}

// Counter-clockwise (as displayed) rotation about the image centre.
inline CassImage rotate(const CassImage& img, double degrees) {
  CassImage out = img;
  const double th = degrees * std::numbers::pi / 180.0;
  const double c = std::cos(th), s = std::sin(th);
  const double cx = 0.5 * static_cast<double>(img.width - 1), cy = 0.5 * static_cast<double>(img.height - 1);
  for (std::size_t y = 0; y < img.height; ++y)
    for (std::size_t x = 0; x < img.width; ++x) {
      const double dx = static_cast<double>(x) - cx, dy = static_cast<double>(y) - cy;
      const auto v = detail::sample(img, cx + dx * c - dy * s, cy + dx * s + dy * c);
      out.set(x, y, {detail::to_byte(v[0]), detail::to_byte(v[1]), detail::to_byte(v[2])});
    }
  return out;
}

inline CassImage apply_transform(const CassImage& img, Transform t) {
  CassImage out;
  switch (t) {
    case Transform::Crop: out = center_crop_resize(img, 0.9); break;
    case Transform::HFlip: out = flip_horizontal(img); break;
    case Transform::VFlip: out = flip_vertical(img); break;
    case Transform::RotPos45:
    case Transform::RotNeg45: out = rotate(img, rotation_degrees(t)); break;
  }
  out.augmentation = transform_name(t);
  return out;
}

inline std::vector<CassImage> augment(const CassImage& img, const AugmentationSpec& spec) {
  if (img.width != img.height) throw DomainError("augmentation expects a square image");
  std::vector<CassImage> out;
  if (spec.keep_original) out.push_back(img);
  for (Transform t : spec.transforms) out.push_back(apply_transform(img, t));
  return out;
}

// ---------------------------------------------------------------------------
// Binary PPM (P6, maxval 255)

inline std::string cass_filename(const std::string& dataset, const std::string& sequence_id, Part part,
                                 const std::string& augmentation = {}) {
  std::string name = dataset + "_" + sequence_id + "_" + std::string(skeleton::part_name(part));
  if (!augmentation.empty()) name += "_" + augmentation;
  return name + ".ppm";
}

inline void write_ppm(const std::filesystem::path& path, const CassImage& img) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write '" + path.string() + "'");
  os << "P6\n" << img.width << ' ' << img.height << "\n255\n";
  os.write(reinterpret_cast<const char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
  if (!os) throw IoError("short write to '" + path.string() + "'");
}

inline CassImage read_ppm(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open '" + path.string() + "'");
  auto next_token = [&]() {
    std::string tok;
    char ch;
    while (is.get(ch)) {
      if (ch == '#') {
        while (is.get(ch) && ch != '\n') {}
        continue;
      }
      if (std::isspace(static_cast<unsigned char>(ch))) {
        if (!tok.empty()) break;
        continue;
      }
      tok.push_back(ch);
    }
    return tok;
  };
  if (next_token() != "P6") throw ParseError(path.string(), 1, "not a binary PPM (P6)");
  std::size_t w = 0, h = 0, maxval = 0;
  try {
    w = std::stoul(next_token());
    h = std::stoul(next_token());
    maxval = std::stoul(next_token());
  } catch (const std::exception&) {
    throw ParseError(path.string(), 1, "malformed PPM header");
  }
  if (maxval != 255) throw ParseError(path.string(), 1, "PPM maxval must be 255");
  CassImage img(w, h);
  is.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
  if (is.gcount() != static_cast<std::streamsize>(img.pixels.size())) throw ParseError(path.string(), 1, "truncated PPM payload");
  return img;
}

}  // namespace riac::cass
