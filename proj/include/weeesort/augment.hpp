#pragma once

#include <array>

#include "weeesort/image.hpp"
#include "weeesort/rng.hpp"

namespace weeesort {

/// Per-epoch random transform ranges. Defaults are the training protocol's
/// values; all ranges are symmetric about the identity.
struct AugmentationPolicy {
    double rotation_deg = 45.0;    // rotation in [-rotation_deg, +rotation_deg]
    double shear_deg = 5.0;        // shear in [-shear_deg, +shear_deg]
    double zoom_min = 0.8;         // scale factor range [zoom_min, zoom_max]
    double zoom_max = 1.2;
    double channel_shift = 10.0;   // per-channel shift in [-channel_shift, +channel_shift]
    double h_flip_prob = 0.5;
    double v_flip_prob = 0.5;
    bool enabled = true;

    void validate() const;

    static AugmentationPolicy disabled_policy() {
        AugmentationPolicy p;
        p.enabled = false;
        return p;
    }
};

struct AugmentationParams {
    double rotation_deg = 0.0;
    double shear_deg = 0.0;
    double zoom = 1.0;
    std::array<double, 3> channel_shift{0.0, 0.0, 0.0};
    bool h_flip = false;
    bool v_flip = false;

    bool is_identity() const;
};

/// Draws each parameter uniformly and independently from the policy ranges.
/// A disabled policy yields identity params without consuming the stream.
AugmentationParams sample_params(const AugmentationPolicy& policy, RngStream& rng);

/// Applies flips, then rotation/shear/zoom about the image center (bilinear,
/// edge replication), then the channel shift with clipping to [0, 255].
/// Params must lie within `bounds`.
Image apply_augmentation(const Image& image, const AugmentationParams& params,
                         const AugmentationPolicy& bounds = AugmentationPolicy{});

}  // namespace weeesort
