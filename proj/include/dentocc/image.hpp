#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

namespace dentocc {

/// Row-major grayscale image.
struct GrayImage {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> pixels;

    GrayImage() = default;
    GrayImage(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), pixels(r * c, fill) {}

    double& at(std::size_t r, std::size_t c) { return pixels[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return pixels[r * cols + c]; }
    bool same_size(const GrayImage& o) const { return rows == o.rows && cols == o.cols; }
};

/// Binary (P5) 8-bit portable graymap; intensities in [0,1] are rounded to 0..255.
void write_pgm(const GrayImage& image, const std::filesystem::path& path);
GrayImage read_pgm(const std::filesystem::path& path);

}  // namespace dentocc
