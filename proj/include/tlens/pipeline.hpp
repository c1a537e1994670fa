// Copyright 2026 The tlens Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

/**
 * @file pipeline.hpp
 * @brief image + depth -> focus distance -> lens -> defocused image.
 *
 * The CLI and the HTTP service both go through render_scene() and
 * encode_png16(), which is what makes their outputs byte-identical.
 */

#include <algorithm>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "tlens/focus.hpp"
#include "tlens/image.hpp"
#include "tlens/lens.hpp"

namespace tlens {

/// An image with its depth and saliency; the three rasters share dimensions.
struct Scene {
    Image<float> image;
    DepthMap<float> depth;
    SaliencyMap<float> saliency;
    FocusEstimate default_focus;
};

/// Validates the rasters and fills in the stub saliency when none is given.
inline Scene make_scene(Image<float> image, DepthMap<float> depth, std::optional<SaliencyMap<float>> saliency = {}) {
    if (!image.same_size(depth))
        throw Error(ErrorCode::DimensionMismatch, "image and depth dimensions differ");
    if (!image.all_finite())
        throw Error(ErrorCode::InvalidArgument, "image samples must be finite");
    validate_depth(depth);
    Scene scene;
    if (saliency) {
        if (!saliency->same_size(depth) || saliency->channels() != 1)
            throw Error(ErrorCode::DimensionMismatch, "saliency dimensions differ from depth");
        scene.saliency = std::move(*saliency);
        scene.default_focus = focus_from_saliency(depth, scene.saliency);
    } else {
        scene.saliency = stub_saliency(image, depth);
        scene.default_focus = focus_from_saliency(depth, scene.saliency);
        scene.default_focus.source = FocusSource::Stub;
    }
    scene.image = std::move(image);
    scene.depth = std::move(depth);
    return scene;
}

enum class RenderOutput { Image, CocHeatmap, InFocusMask };

inline RenderOutput parse_render_output(const std::string& name) {
    if (name == "image")
        return RenderOutput::Image;
    if (name == "coc_heatmap")
        return RenderOutput::CocHeatmap;
    if (name == "in_focus_mask")
        return RenderOutput::InFocusMask;
    throw Error(ErrorCode::InvalidArgument, "unknown output kind '" + name + "'");
}

struct RenderSettings {
    std::optional<ExifRecord> exif;
    LensOverrides overrides;
    ResolveOptions resolve;
    RenderOutput output = RenderOutput::Image;
};

struct CocStats {
    double min = 0.0;
    double mean = 0.0;
    double max = 0.0;
};

struct RenderResult {
    Image<float> image;
    LensParams lens;
    FocusEstimate focus;
    CocStats coc;
};

template <typename T>
CocStats coc_stats(const CocMap<T>& coc) {
    CocStats s;
    auto [lo, hi] = min_max(coc);
    s.min = lo;
    s.max = hi;
    double sum = 0.0;
    for (T v : coc.samples())
        sum += v;
    s.mean = sum / static_cast<double>(coc.pixel_count());
    return s;
}

/// Pixels whose CoC is under one pixel render sharp; a disk kernel only
/// spreads light once its diameter exceeds one pixel.
inline constexpr double kInFocusCocPx = 1.0;

template <typename Model = ThinLensSplat>
    requires DefocusModel<Model, float>
RenderResult render_scene(const Scene& scene, const RenderSettings& settings, const Model& model = {}) {
    RenderResult result;
    result.focus = settings.overrides.focus_distance
                       ? FocusEstimate{*settings.overrides.focus_distance, FocusSource::UserOverride}
                       : scene.default_focus;
    result.lens = resolve_lens_params(settings.exif, settings.overrides, scene.image.width(), scene.default_focus,
                                      settings.resolve);
    const CocMap<float> coc = compute_coc_map(scene.depth, result.lens);
    result.coc = coc_stats(coc);
    switch (settings.output) {
    case RenderOutput::Image:
        result.image = model.render(scene.image, scene.depth, result.lens);
        break;
    case RenderOutput::CocHeatmap: {
        result.image = Image<float>(coc.width(), coc.height(), 1);
        const double ceiling = result.lens.coc_max_px > 0.0 ? result.lens.coc_max_px : 1.0;
        std::transform(coc.samples().begin(), coc.samples().end(), result.image.samples().begin(),
                       [&](float c) { return static_cast<float>(c / ceiling); });
        break;
    }
    case RenderOutput::InFocusMask:
        result.image = Image<float>(coc.width(), coc.height(), 1);
        std::transform(coc.samples().begin(), coc.samples().end(), result.image.samples().begin(),
                       [](float c) { return c < kInFocusCocPx ? 1.0f : 0.0f; });
        break;
    }
    return result;
}

/// Ordered key=value report, one pair per line.
class Report {
public:
    void set(const std::string& key, const std::string& value) { entries_.emplace_back(key, value); }

    void set(const std::string& key, double value) {
        std::ostringstream os;
        os << std::setprecision(10) << value;
        set(key, os.str());
    }

    void add_render(const RenderResult& r) {
        set("focus_distance", r.focus.focus_distance);
        set("focus_source", to_string(r.focus.source));
        set("f_number", r.lens.f_number);
        set("focal_length_mm", r.lens.focal_length);
        set("focus_scale", r.lens.focus_scale);
        set("pixels_per_unit", r.lens.pixels_per_unit);
        set("coc_max_px", r.lens.coc_max_px);
        set("coc_min_px", r.coc.min);
        set("coc_mean_px", r.coc.mean);
        set("coc_max_observed_px", r.coc.max);
    }

    const std::vector<std::pair<std::string, std::string>>& entries() const noexcept { return entries_; }

    friend std::ostream& operator<<(std::ostream& os, const Report& r) {
        for (const auto& [k, v] : r.entries_)
            os << k << '=' << v << '\n';
        return os;
    }

private:
    std::vector<std::pair<std::string, std::string>> entries_;
};

/// Parses "key=value" lines back into a map; later keys win.
inline std::map<std::string, std::string> parse_report(std::istream& in) {
    std::map<std::string, std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        const auto eq = line.find('=');
        if (eq != std::string::npos)
            out[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return out;
}

} // namespace tlens
