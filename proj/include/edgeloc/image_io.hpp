#pragma once

#include <array>
#include <filesystem>
#include <vector>

#include "edgeloc/rasterizer.hpp"
#include "edgeloc/types.hpp"

namespace edgeloc {

/// RGB image, three interleaved 8-bit channels per pixel.
struct RgbImage {
  int width = 0, height = 0;
  std::vector<std::uint8_t> data;
};

/// Reads 8-bit PGM (P2/P5), PPM (P3/P6) or PNG; color is converted with luma weights.
GrayImage readGray(const std::filesystem::path& path);

void writePgm(const std::filesystem::path& path, const GrayImage& img);
void writePgm16(const std::filesystem::path& path, const Grid<std::uint16_t>& img);
void writePpm(const std::filesystem::path& path, const RgbImage& img);
void writePng(const std::filesystem::path& path, const GrayImage& img);
void writePng(const std::filesystem::path& path, const RgbImage& img);

/// Edge map scaled to 0/255.
GrayImage edgeImage(const EdgeMap& edges);
/// Depth in whole millimetres, clamped to [0, 65535]; background is 0.
Grid<std::uint16_t> depthImage(const GeometryBuffer& buf);
/// Normals mapped from [-1, 1] to [0, 255] per channel; background black.
RgbImage normalImage(const GeometryBuffer& buf);
/// Gray test image with edge pixels painted in `color`.
RgbImage overlay(const GrayImage& gray, const EdgeMap& edges, std::array<std::uint8_t, 3> color = {0, 255, 0});

}  // namespace edgeloc
