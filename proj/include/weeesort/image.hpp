#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace weeesort {

/// 8-bit RGB image, row-major HWC layout.
struct Image {
    int height = 0;
    int width = 0;
    int channels = 3;
    std::vector<std::uint8_t> data;

    Image() = default;
    Image(int h, int w, int c = 3)
        : height(h), width(w), channels(c),
          data(static_cast<std::size_t>(h) * w * c, 0) {}

    std::uint8_t& at(int y, int x, int c) {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    std::uint8_t at(int y, int x, int c) const {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    bool same_shape(const Image& other) const {
        return height == other.height && width == other.width && channels == other.channels;
    }
    std::size_t size_bytes() const { return data.size(); }
};

Image load_png(const std::filesystem::path& path);
void save_png(const std::filesystem::path& path, const Image& image);

/// Bilinear resize with half-pixel centers and edge clamping. Returns a copy
/// when the size already matches.
Image resize_bilinear(const Image& image, int out_height, int out_width);

/// Axis-aligned crop; the rectangle must lie inside the image.
Image crop(const Image& image, int x0, int y0, int width, int height);

/// Pads by replicating the border row/column into the new bands.
Image pad_replicate(const Image& image, int left, int right, int top, int bottom);

void flip_horizontal(Image& image);
void flip_vertical(Image& image);

/// Applies the inverse of the 2x2 matrix `forward` about the image center and
/// resamples bilinearly; out-of-range samples clamp to the border (replication).
Image warp_affine_center(const Image& image, const std::array<double, 4>& forward);

}  // namespace weeesort
