#include "weeesort/image.hpp"

#include <algorithm>
#include <cmath>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "weeesort/errors.hpp"

namespace weeesort {

Image load_png(const std::filesystem::path& path) {
    cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
    if (bgr.empty()) {
        throw IoError("cannot load image: " + path.string());
    }
    cv::Mat rgb;
    cv::cvtColor(bgr, rgb, cv::COLOR_BGR2RGB);
    Image out(rgb.rows, rgb.cols, 3);
    if (rgb.isContinuous()) {
        std::copy_n(rgb.ptr<std::uint8_t>(0), out.size_bytes(), out.data.data());
    } else {
        for (int y = 0; y < rgb.rows; ++y) {
            std::copy_n(rgb.ptr<std::uint8_t>(y), static_cast<std::size_t>(rgb.cols) * 3,
                        out.data.data() + static_cast<std::size_t>(y) * rgb.cols * 3);
        }
    }
    return out;
}

void save_png(const std::filesystem::path& path, const Image& image) {
    if (image.channels != 3 || image.height <= 0 || image.width <= 0) {
        throw ArgumentError("save_png expects a non-empty 3-channel image");
    }
    cv::Mat rgb(image.height, image.width, CV_8UC3,
                const_cast<std::uint8_t*>(image.data.data()));
    cv::Mat bgr;
    cv::cvtColor(rgb, bgr, cv::COLOR_RGB2BGR);
    if (!cv::imwrite(path.string(), bgr)) {
        throw IoError("cannot write image: " + path.string());
    }
}

Image resize_bilinear(const Image& image, int out_height, int out_width) {
    if (out_height <= 0 || out_width <= 0) {
        throw ArgumentError("resize target must be positive");
    }
    if (out_height == image.height && out_width == image.width) {
        return image;
    }
    Image out(out_height, out_width, image.channels);
    const double scale_y = static_cast<double>(image.height) / out_height;
    const double scale_x = static_cast<double>(image.width) / out_width;
    for (int y = 0; y < out_height; ++y) {
        double sy = (y + 0.5) * scale_y - 0.5;
        sy = std::clamp(sy, 0.0, static_cast<double>(image.height - 1));
        const int y0 = static_cast<int>(sy);
        const int y1 = std::min(y0 + 1, image.height - 1);
        const double fy = sy - y0;
        for (int x = 0; x < out_width; ++x) {
            double sx = (x + 0.5) * scale_x - 0.5;
            sx = std::clamp(sx, 0.0, static_cast<double>(image.width - 1));
            const int x0 = static_cast<int>(sx);
            const int x1 = std::min(x0 + 1, image.width - 1);
            const double fx = sx - x0;
            for (int c = 0; c < image.channels; ++c) {
                const double top = image.at(y0, x0, c) * (1 - fx) + image.at(y0, x1, c) * fx;
                const double bot = image.at(y1, x0, c) * (1 - fx) + image.at(y1, x1, c) * fx;
                const double v = top * (1 - fy) + bot * fy;
                out.at(y, x, c) = static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
            }
        }
    }
    return out;
}

Image crop(const Image& image, int x0, int y0, int width, int height) {
    if (width <= 0 || height <= 0 || x0 < 0 || y0 < 0 ||
        x0 + width > image.width || y0 + height > image.height) {
        throw ArgumentError("crop rectangle out of bounds");
    }
    Image out(height, width, image.channels);
    const std::size_t row_bytes = static_cast<std::size_t>(width) * image.channels;
    for (int y = 0; y < height; ++y) {
        const std::uint8_t* src =
            image.data.data() +
            ((static_cast<std::size_t>(y0 + y) * image.width) + x0) * image.channels;
        std::copy_n(src, row_bytes, out.data.data() + static_cast<std::size_t>(y) * row_bytes);
    }
    return out;
}

Image pad_replicate(const Image& image, int left, int right, int top, int bottom) {
    if (left < 0 || right < 0 || top < 0 || bottom < 0) {
        throw ArgumentError("padding must be non-negative");
    }
    if (left == 0 && right == 0 && top == 0 && bottom == 0) return image;
    Image out(image.height + top + bottom, image.width + left + right, image.channels);
    for (int y = 0; y < out.height; ++y) {
        const int sy = std::clamp(y - top, 0, image.height - 1);
        for (int x = 0; x < out.width; ++x) {
            const int sx = std::clamp(x - left, 0, image.width - 1);
            for (int c = 0; c < image.channels; ++c) {
                out.at(y, x, c) = image.at(sy, sx, c);
            }
        }
    }
    return out;
}

void flip_horizontal(Image& image) {
    const int c = image.channels;
    for (int y = 0; y < image.height; ++y) {
        for (int x = 0; x < image.width / 2; ++x) {
            for (int k = 0; k < c; ++k) {
                std::swap(image.at(y, x, k), image.at(y, image.width - 1 - x, k));
            }
        }
    }
}

void flip_vertical(Image& image) {
    const int c = image.channels;
    for (int y = 0; y < image.height / 2; ++y) {
        for (int x = 0; x < image.width; ++x) {
            for (int k = 0; k < c; ++k) {
                std::swap(image.at(y, x, k), image.at(image.height - 1 - y, x, k));
            }
        }
    }
}

Image warp_affine_center(const Image& image, const std::array<double, 4>& forward) {
    const double det = forward[0] * forward[3] - forward[1] * forward[2];
    if (std::abs(det) < 1e-12) {
        throw ArgumentError("affine matrix is singular");
    }
    // Inverse map: for each output pixel, find its source location.
    const double inv[4] = {forward[3] / det, -forward[1] / det,
                           -forward[2] / det, forward[0] / det};
    const double cx = (image.width - 1) / 2.0;
    const double cy = (image.height - 1) / 2.0;

    Image out(image.height, image.width, image.channels);
    for (int y = 0; y < image.height; ++y) {
        const double vy = y - cy;
        for (int x = 0; x < image.width; ++x) {
            const double vx = x - cx;
            double sx = inv[0] * vx + inv[1] * vy + cx;
            double sy = inv[2] * vx + inv[3] * vy + cy;
            sx = std::clamp(sx, 0.0, static_cast<double>(image.width - 1));
            sy = std::clamp(sy, 0.0, static_cast<double>(image.height - 1));
            const int x0 = static_cast<int>(sx);
            const int y0 = static_cast<int>(sy);
            const int x1 = std::min(x0 + 1, image.width - 1);
            const int y1 = std::min(y0 + 1, image.height - 1);
            const double fx = sx - x0;
            const double fy = sy - y0;
            for (int c = 0; c < image.channels; ++c) {
                const double top = image.at(y0, x0, c) * (1 - fx) + image.at(y0, x1, c) * fx;
                const double bot = image.at(y1, x0, c) * (1 - fx) + image.at(y1, x1, c) * fx;
                const double v = top * (1 - fy) + bot * fy;
                out.at(y, x, c) =
                    static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
            }
        }
    }
    return out;
}

}  // namespace weeesort
