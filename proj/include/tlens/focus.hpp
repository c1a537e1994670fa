// Copyright 2026 The tlens Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

#include "tlens/error.hpp"
#include "tlens/exif.hpp"
#include "tlens/image.hpp"
#include "tlens/lens.hpp"

namespace tlens {

enum class FocusSource { SaliencyWeighted, UserOverride, Stub };

constexpr const char* to_string(FocusSource s) noexcept {
    switch (s) {
    case FocusSource::SaliencyWeighted: return "saliency_weighted";
    case FocusSource::UserOverride: return "user_override";
    case FocusSource::Stub: return "stub";
    }
    return "unknown";
}

struct FocusEstimate {
    double focus_distance = 0.0;
    FocusSource source = FocusSource::SaliencyWeighted;
};

/// Saliency-weighted mean depth: sum(d * s) / sum(s).
template <typename T>
FocusEstimate focus_from_saliency(const DepthMap<T>& depth, const SaliencyMap<T>& saliency) {
    if (!saliency.same_size(depth) || saliency.channels() != 1 || depth.channels() != 1)
        throw Error(ErrorCode::DimensionMismatch, "depth and saliency dimensions differ");
    auto d = depth.samples();
    auto s = saliency.samples();
    double mass = 0.0;
    double weighted = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        const double w = static_cast<double>(s[i]);
        if (!(w >= 0.0) || !std::isfinite(w))
            throw Error(ErrorCode::InvalidArgument, "saliency values must be non-negative and finite");
        mass += w;
        weighted += w * static_cast<double>(d[i]);
    }
    if (mass < 1e-12)
        throw Error(ErrorCode::ZeroSaliencyMass, "saliency map has no positive mass");
    // Rounding can push a convex combination a hair outside the hull.
    auto [lo, hi] = min_max(depth);
    const double fd = std::clamp(weighted / mass, static_cast<double>(lo), static_cast<double>(hi));
    return {fd, FocusSource::SaliencyWeighted};
}

/**
 * Non-learned saliency stand-in: a Gaussian center prior with
 * sigma = 0.25 * min(H, W), multiplied by min(depth) / depth so nearer pixels
 * weigh more. Strictly positive everywhere; a flat depth map leaves the pure
 * center prior.
 */
template <typename T>
SaliencyMap<T> stub_saliency(const Image<T>& image, const DepthMap<T>& depth) {
    if (!image.same_size(depth))
        throw Error(ErrorCode::DimensionMismatch, "image and depth dimensions differ");
    validate_depth(depth);
    const int w = depth.width();
    const int h = depth.height();
    const double sigma = 0.25 * std::min(w, h);
    const double cx = (w - 1) / 2.0;
    const double cy = (h - 1) / 2.0;
    const double nearest = static_cast<double>(min_max(depth).first);
    SaliencyMap<T> out(w, h, 1);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double r2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
            const double prior = std::exp(-r2 / (2.0 * sigma * sigma));
            // Floor keeps far corners of large images from underflowing to zero.
            out(x, y) = static_cast<T>(std::max(prior * nearest / static_cast<double>(depth(x, y)), 1e-30));
        }
    return out;
}

/// Focus distance supervision loss; delta defaults to 0.1 depth units.
inline double huber_loss(double predicted, double reference, double delta = 0.1) {
    if (!(delta > 0.0))
        throw Error(ErrorCode::InvalidArgument, "huber delta must be positive");
    const double e = std::abs(predicted - reference);
    return e <= delta ? 0.5 * e * e : delta * (e - 0.5 * delta);
}

/// Partially specified lens settings; anything set here wins over EXIF.
struct LensOverrides {
    std::optional<double> focal_length;
    std::optional<double> f_number;
    std::optional<double> focus_distance;
    std::optional<double> focus_scale;
    std::optional<double> pixels_per_unit;
    std::optional<double> coc_max_px;
};

struct ResolveOptions {
    /// When false, fields missing from both overrides and EXIF are an error
    /// instead of falling back to f = 50 mm, N = 8.
    bool allow_defaults = true;
};

/**
 * Merges overrides > EXIF > defaults into a validated LensParams.
 *
 * The focus distance is taken from the overrides or, failing that, from
 * @p saliency_focus (normally focus_from_saliency on the session rasters).
 */
inline LensParams resolve_lens_params(const std::optional<ExifRecord>& exif, const LensOverrides& overrides,
                                      int image_width, std::optional<FocusEstimate> saliency_focus = std::nullopt,
                                      const ResolveOptions& options = {}) {
    if (image_width < 1)
        throw Error(ErrorCode::InvalidArgument, "image width must be positive");
    auto pick = [&](std::optional<double> override_value, std::optional<double> exif_value, double fallback,
                    const char* name) {
        if (override_value)
            return *override_value;
        if (exif_value)
            return *exif_value;
        if (options.allow_defaults)
            return fallback;
        throw Error(ErrorCode::MissingParameter, name);
    };
    const ExifRecord none{};
    const ExifRecord& rec = exif ? *exif : none;

    LensParams lens;
    lens.focal_length = pick(overrides.focal_length, rec.focal_length_mm, 50.0, "focal_length");
    lens.f_number = pick(overrides.f_number, rec.f_number, 8.0, "f_number");
    lens.focus_scale = overrides.focus_scale.value_or(1.0);
    lens.pixels_per_unit = overrides.pixels_per_unit.value_or(default_pixels_per_unit(image_width));
    lens.coc_max_px = overrides.coc_max_px.value_or(default_coc_max(image_width));
    if (overrides.focus_distance)
        lens.focus_distance = *overrides.focus_distance;
    else if (saliency_focus)
        lens.focus_distance = saliency_focus->focus_distance;
    else
        throw Error(ErrorCode::MissingParameter, "focus_distance");
    validate(lens);
    return lens;
}

} // namespace tlens
