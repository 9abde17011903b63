#include "edgeloc/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>

#include <png.h>

namespace edgeloc {

namespace {

std::uint8_t luma(int r, int g, int b) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(0.299 * r + 0.587 * g + 0.114 * b), 0L, 255L));
}

void skipComments(std::istream& in) {
  in >> std::ws;
  while (in.peek() == '#') {
    std::string dummy;
    std::getline(in, dummy);
    in >> std::ws;
  }
}

GrayImage readNetpbm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open image file: " + path.string());
  std::string magic;
  in >> magic;
  int w = 0, h = 0, maxval = 0;
  skipComments(in);
  in >> w;
  skipComments(in);
  in >> h;
  skipComments(in);
  in >> maxval;
  if (!in || w <= 0 || h <= 0 || maxval <= 0 || maxval > 255)
    throw IoError("unsupported or malformed netpbm header: " + path.string());
  const bool color = magic == "P3" || magic == "P6";
  const bool binary = magic == "P5" || magic == "P6";
  if (magic != "P2" && magic != "P3" && magic != "P5" && magic != "P6")
    throw IoError("unsupported netpbm format " + magic + ": " + path.string());
  const int channels = color ? 3 : 1;
  std::vector<int> values(static_cast<std::size_t>(w) * h * channels);
  if (binary) {
    in.get();
    std::vector<char> raw(values.size());
    if (!in.read(raw.data(), static_cast<std::streamsize>(raw.size()))) throw IoError("truncated image: " + path.string());
    for (std::size_t i = 0; i < raw.size(); ++i) values[i] = static_cast<unsigned char>(raw[i]);
  } else {
    for (int& v : values)
      if (!(in >> v)) throw IoError("truncated image: " + path.string());
  }
  GrayImage img(h, w);
  const double scale = 255.0 / maxval;
  for (int i = 0; i < w * h; ++i) {
    if (color) {
      img.data()[i] = luma(static_cast<int>(values[3 * i] * scale), static_cast<int>(values[3 * i + 1] * scale),
                           static_cast<int>(values[3 * i + 2] * scale));
    } else {
      img.data()[i] = static_cast<std::uint8_t>(std::lround(values[i] * scale));
    }
  }
  return img;
}


GrayImage readPng(const std::filesystem::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str()))
    throw IoError("cannot read PNG " + path.string() + ": " + image.message);
  image.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> rgb(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, rgb.data(), 0, nullptr)) {
    png_image_free(&image);
    throw IoError("cannot decode PNG " + path.string() + ": " + image.message);
  }
  GrayImage img(image.height, image.width);
  for (std::size_t i = 0; i < static_cast<std::size_t>(img.size()); ++i)
    img.data()[i] = luma(rgb[3 * i], rgb[3 * i + 1], rgb[3 * i + 2]);
  return img;
}

void writePngRaw(const std::filesystem::path& path, int w, int h, std::uint32_t format, const std::uint8_t* data) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = w;
  image.height = h;
  image.format = format;
  if (!png_image_write_to_file(&image, path.c_str(), 0, data, 0, nullptr))
    throw IoError("cannot write PNG " + path.string() + ": " + image.message);
}

}  // namespace

GrayImage readGray(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw IoError("image file not found: " + path.string());
  std::ifstream probe(path, std::ios::binary);
  char sig[4] = {};
  probe.read(sig, 4);
  if (static_cast<unsigned char>(sig[0]) == 0x89 && sig[1] == 'P' && sig[2] == 'N' && sig[3] == 'G') return readPng(path);
  return readNetpbm(path);
}

void writePgm(const std::filesystem::path& path, const GrayImage& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write image file: " + path.string());
  out << "P5\n" << img.cols() << ' ' << img.rows() << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.data()), img.size());
}

void writePgm16(const std::filesystem::path& path, const Grid<std::uint16_t>& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write image file: " + path.string());
  out << "P5\n" << img.cols() << ' ' << img.rows() << "\n65535\n";
  for (Eigen::Index i = 0; i < img.size(); ++i) {
    const std::uint16_t v = img.data()[i];
    const char bytes[2] = {static_cast<char>(v >> 8), static_cast<char>(v & 0xff)};
    out.write(bytes, 2);
  }
}

void writePpm(const std::filesystem::path& path, const RgbImage& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write image file: " + path.string());
  out << "P6\n" << img.width << ' ' << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.data.data()), static_cast<std::streamsize>(img.data.size()));
}

void writePng(const std::filesystem::path& path, const GrayImage& img) {
  writePngRaw(path, static_cast<int>(img.cols()), static_cast<int>(img.rows()), PNG_FORMAT_GRAY, img.data());
}

void writePng(const std::filesystem::path& path, const RgbImage& img) {
  writePngRaw(path, img.width, img.height, PNG_FORMAT_RGB, img.data.data());
}

GrayImage edgeImage(const EdgeMap& edges) { return (edges != 0).cast<std::uint8_t>() * std::uint8_t(255); }

Grid<std::uint16_t> depthImage(const GeometryBuffer& buf) {
  Grid<std::uint16_t> out(buf.height(), buf.width());
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    const double d = buf.depth.data()[i];
    out.data()[i] = std::isfinite(d) ? static_cast<std::uint16_t>(std::clamp(std::lround(d), 0L, 65535L)) : 0;
  }
  return out;
}

RgbImage normalImage(const GeometryBuffer& buf) {
  RgbImage out{buf.width(), buf.height(), std::vector<std::uint8_t>(3 * static_cast<std::size_t>(buf.depth.size()), 0)};
  for (int y = 0; y < buf.height(); ++y)
    for (int x = 0; x < buf.width(); ++x) {
      if (!buf.rendered(x, y)) continue;
      const Eigen::Vector3d n = buf.normal(x, y);
      const std::size_t i = 3 * (static_cast<std::size_t>(y) * buf.width() + x);
      for (int c = 0; c < 3; ++c) out.data[i + c] = static_cast<std::uint8_t>(std::lround((n[c] + 1.0) * 127.5));
    }
  return out;
}

RgbImage overlay(const GrayImage& gray, const EdgeMap& edges, std::array<std::uint8_t, 3> color) {
  RgbImage out{static_cast<int>(gray.cols()), static_cast<int>(gray.rows()),
               std::vector<std::uint8_t>(3 * static_cast<std::size_t>(gray.size()))};
  for (Eigen::Index i = 0; i < gray.size(); ++i) {
    const bool edge = edges.size() == gray.size() && edges.data()[i];
    for (int c = 0; c < 3; ++c) out.data[3 * i + c] = edge ? color[c] : gray.data()[i];
  }
  return out;
}

}  // namespace edgeloc
