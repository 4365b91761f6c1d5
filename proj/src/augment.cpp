#include "weeesort/augment.hpp"

#include <cmath>

#include <fmt/format.h>

#include "weeesort/errors.hpp"

namespace weeesort {

void AugmentationPolicy::validate() const {
    if (rotation_deg < 0 || shear_deg < 0 || channel_shift < 0) {
        throw ConfigError("augmentation ranges must be non-negative");
    }
    if (!(zoom_min > 0) || zoom_max < zoom_min) {
        throw ConfigError("zoom range must satisfy 0 < zoom_min <= zoom_max");
    }
    if (std::abs((zoom_min + zoom_max) / 2.0 - 1.0) > 1e-9) {
        throw ConfigError("zoom range must be symmetric about 1");
    }
    if (h_flip_prob < 0 || h_flip_prob > 1 || v_flip_prob < 0 || v_flip_prob > 1) {
        throw ConfigError("flip probabilities must be in [0, 1]");
    }
}

bool AugmentationParams::is_identity() const {
    return rotation_deg == 0.0 && shear_deg == 0.0 && zoom == 1.0 &&
           channel_shift[0] == 0.0 && channel_shift[1] == 0.0 && channel_shift[2] == 0.0 &&
           !h_flip && !v_flip;
}

AugmentationParams sample_params(const AugmentationPolicy& policy, RngStream& rng) {
    policy.validate();
    AugmentationParams params;
    if (!policy.enabled) {
        return params;
    }
    params.rotation_deg = rng.uniform(-policy.rotation_deg, policy.rotation_deg);
    params.shear_deg = rng.uniform(-policy.shear_deg, policy.shear_deg);
    params.zoom = rng.uniform(policy.zoom_min, policy.zoom_max);
    for (int c = 0; c < 3; ++c) {
        params.channel_shift[static_cast<std::size_t>(c)] =
            rng.uniform(-policy.channel_shift, policy.channel_shift);
    }
    params.h_flip = rng.bernoulli(policy.h_flip_prob);
    params.v_flip = rng.bernoulli(policy.v_flip_prob);
    return params;
}

namespace {

void check_bounds(const AugmentationParams& p, const AugmentationPolicy& bounds) {
    constexpr double tol = 1e-9;
    if (std::abs(p.rotation_deg) > bounds.rotation_deg + tol) {
        throw ArgumentError(fmt::format("rotation {} exceeds the policy range +/-{}",
                                        p.rotation_deg, bounds.rotation_deg));
    }
    if (std::abs(p.shear_deg) > bounds.shear_deg + tol) {
        throw ArgumentError(fmt::format("shear {} exceeds the policy range +/-{}",
                                        p.shear_deg, bounds.shear_deg));
    }
    if (p.zoom < bounds.zoom_min - tol || p.zoom > bounds.zoom_max + tol) {
        throw ArgumentError(fmt::format("zoom {} outside the policy range [{}, {}]", p.zoom,
                                        bounds.zoom_min, bounds.zoom_max));
    }
    for (double shift : p.channel_shift) {
        if (std::abs(shift) > bounds.channel_shift + tol) {
            throw ArgumentError(fmt::format("channel shift {} exceeds the policy range +/-{}",
                                            shift, bounds.channel_shift));
        }
    }
}

}  // namespace

Image apply_augmentation(const Image& image, const AugmentationParams& params,
                         const AugmentationPolicy& bounds) {
    check_bounds(params, bounds);

    Image out = image;
    if (params.h_flip) flip_horizontal(out);
    if (params.v_flip) flip_vertical(out);

    const bool needs_warp =
        params.rotation_deg != 0.0 || params.shear_deg != 0.0 || params.zoom != 1.0;
    if (needs_warp) {
        const double a = params.rotation_deg * M_PI / 180.0;
        const double s = params.shear_deg * M_PI / 180.0;
        const double z = params.zoom;
        // Forward map, applied in order: rotate, shear (along x), zoom.
        const double rot[4] = {std::cos(a), -std::sin(a), std::sin(a), std::cos(a)};
        const double shear[4] = {1.0, std::tan(s), 0.0, 1.0};
        const double m00 = shear[0] * rot[0] + shear[1] * rot[2];
        const double m01 = shear[0] * rot[1] + shear[1] * rot[3];
        const double m10 = shear[2] * rot[0] + shear[3] * rot[2];
        const double m11 = shear[2] * rot[1] + shear[3] * rot[3];
        out = warp_affine_center(out, {z * m00, z * m01, z * m10, z * m11});
    }

    const auto& shift = params.channel_shift;
    if (shift[0] != 0.0 || shift[1] != 0.0 || shift[2] != 0.0) {
        const int channels = out.channels;
        for (std::size_t i = 0; i < out.data.size(); ++i) {
            const double delta = shift[i % static_cast<std::size_t>(channels)];
            const double v = std::clamp(out.data[i] + delta, 0.0, 255.0);
            out.data[i] = static_cast<std::uint8_t>(std::lround(v));
        }
    }
    return out;
}

}  // namespace weeesort
