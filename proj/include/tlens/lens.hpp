// Copyright 2026 The tlens Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

/**
 * @file lens.hpp
 * @brief Thin-lens defocus: circle of confusion, soft disk kernels, normalized
 * splat rendering and its analytic adjoint.
 *
 * The circle of confusion for a pixel at depth d is
 *
 *     coc = |d - fd| / d * f^2 / (N * |fs * fd - f|)
 *
 * converted to pixels with pixels_per_unit and clamped to coc_max_px. Each
 * source pixel spreads its value over a unit-sum disk of that diameter whose
 * rim is a one-pixel linear ramp, and the accumulated weight renormalizes the
 * output:
 *
 *     out(p) = sum_q x(q) W_q(p - q) / sum_q W_q(p - q)
 *
 * Splat weights ignore depth ordering (no occlusion handling). Taps that land
 * outside the image are dropped.
 */

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <span>
#include <vector>

#include "tlens/error.hpp"
#include "tlens/image.hpp"
#include "tlens/parallel.hpp"

namespace tlens {

/// Sensor width assumed when converting millimetres on the sensor to pixels.
inline constexpr double kSensorWidthMm = 36.0;
/// CoC ceiling at a 1024-pixel-wide image; scaled linearly with width.
inline constexpr double kCocMaxAt1024 = 64.0;
/// Below this |fs * fd - f| the CoC formula is treated as singular.
inline constexpr double kSingularTolerance = 1e-9;

inline double default_pixels_per_unit(int image_width) { return image_width / kSensorWidthMm; }
inline double default_coc_max(int image_width) { return kCocMaxAt1024 * image_width / 1024.0; }

struct LensParams {
    double focal_length = 50.0;     ///< f, millimetres
    double f_number = 8.0;          ///< N
    double focus_distance = 1.0;    ///< fd, depth-map units
    double focus_scale = 1.0;       ///< fs
    double pixels_per_unit = 1.0;   ///< sensor pixels per CoC length unit
    double coc_max_px = 64.0;       ///< CoC clamp ceiling
};

inline void validate(const LensParams& lens) {
    auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
    if (!positive(lens.focal_length))
        throw Error(ErrorCode::InvalidArgument, "focal length must be positive");
    if (!positive(lens.f_number))
        throw Error(ErrorCode::InvalidArgument, "f-number must be positive");
    if (!positive(lens.focus_scale))
        throw Error(ErrorCode::InvalidArgument, "focus scale must be positive");
    if (!positive(lens.pixels_per_unit))
        throw Error(ErrorCode::InvalidArgument, "pixels per unit must be positive");
    if (!std::isfinite(lens.focus_distance))
        throw Error(ErrorCode::InvalidArgument, "focus distance must be finite");
    if (!(lens.coc_max_px >= 0.0) || !std::isfinite(lens.coc_max_px))
        throw Error(ErrorCode::InvalidArgument, "coc_max_px must be non-negative");
    if (std::abs(lens.focus_scale * lens.focus_distance - lens.focal_length) < kSingularTolerance)
        throw Error(ErrorCode::SingularLens, "focus_scale * focus_distance equals the focal length");
}

/// CoC diameter in pixels before the clamp.
inline double coc_unclamped_px(double depth, const LensParams& lens) {
    const double f = lens.focal_length;
    const double denom = std::abs(lens.focus_scale * lens.focus_distance - f);
    const double length = std::abs(depth - lens.focus_distance) / depth * (f * f) / (lens.f_number * denom);
    return length * lens.pixels_per_unit;
}

inline double coc_px(double depth, const LensParams& lens) {
    return std::min(coc_unclamped_px(depth, lens), lens.coc_max_px);
}

/// d(coc_px)/d(parameter) for one pixel, honoring the clamp and the fixed
/// subgradient choices: zero slope of |d - fd| at d == fd, unclamped branch
/// at coc == coc_max.
struct CocSlopes {
    double fd = 0.0;
    double fs = 0.0;
    double n = 0.0;
    double f = 0.0;
};

inline CocSlopes coc_slopes(double depth, const LensParams& lens) {
    if (coc_unclamped_px(depth, lens) > lens.coc_max_px)
        return {};
    const double f = lens.focal_length;
    const double fd = lens.focus_distance;
    const double fs = lens.focus_scale;
    const double n = lens.f_number;
    const double ppu = lens.pixels_per_unit;
    const double signed_denom = fs * fd - f;
    const double denom = std::abs(signed_denom);
    const double denom_sign = signed_denom > 0.0 ? 1.0 : -1.0;
    const double gap = depth - fd;
    const double gap_abs = std::abs(gap);
    const double gap_sign = gap > 0.0 ? 1.0 : (gap < 0.0 ? -1.0 : 0.0);
    const double scale = ppu * f * f / (n * depth); // coc = scale * gap_abs / denom

    CocSlopes s;
    s.fd = scale * (-gap_sign / denom - gap_abs * denom_sign * fs / (denom * denom));
    s.fs = -scale * gap_abs * denom_sign * fd / (denom * denom);
    s.n = -(scale * gap_abs / denom) / n;
    s.f = ppu * gap_abs / (n * depth) * (2.0 * f / denom + f * f * denom_sign / (denom * denom));
    return s;
}

/// Per-pixel CoC diameters in pixels, clamped to [0, coc_max_px].
template <typename T>
CocMap<T> compute_coc_map(const DepthMap<T>& depth, const LensParams& lens) {
    validate(lens);
    validate_depth(depth);
    CocMap<T> out(depth.width(), depth.height(), 1);
    auto src = depth.samples();
    auto dst = out.samples();
    for (std::size_t i = 0; i < src.size(); ++i)
        dst[i] = static_cast<T>(coc_px(static_cast<double>(src[i]), lens));
    return out;
}

// ---------------------------------------------------------------------------
// Soft disk kernel

inline int kernel_radius(double coc) { return static_cast<int>(std::ceil(coc / 2.0 + 0.5)); }

/// Unnormalized tap at distance rho from the kernel center.
inline double raw_tap(double coc, double rho) { return std::clamp(coc / 2.0 - rho + 0.5, 0.0, 1.0); }

/// d(raw_tap)/d(coc). The ramp branch is taken at both clamp kinks.
inline double raw_tap_slope(double coc, double rho) {
    const double v = coc / 2.0 - rho + 0.5;
    return (v >= 0.0 && v <= 1.0) ? 0.5 : 0.0;
}

struct SoftDiskKernel {
    int radius = 0;
    std::vector<double> weights; ///< (2r+1)^2 taps, row-major, center at (r, r)

    int size() const noexcept { return 2 * radius + 1; }
    double tap(int dx, int dy) const { return weights[static_cast<std::size_t>(dy + radius) * size() + (dx + radius)]; }
};

inline SoftDiskKernel build_soft_disk_kernel(double coc) {
    if (!(coc >= 0.0) || !std::isfinite(coc))
        throw Error(ErrorCode::InvalidArgument, "coc diameter must be non-negative");
    SoftDiskKernel k;
    k.radius = kernel_radius(coc);
    const int n = k.size();
    k.weights.resize(static_cast<std::size_t>(n) * n);
    double sum = 0.0;
    for (int dy = -k.radius; dy <= k.radius; ++dy)
        for (int dx = -k.radius; dx <= k.radius; ++dx) {
            const double v = raw_tap(coc, std::hypot(double(dx), double(dy)));
            k.weights[static_cast<std::size_t>(dy + k.radius) * n + (dx + k.radius)] = v;
            sum += v;
        }
    for (double& w : k.weights)
        w /= sum;
    return k;
}

namespace detail {

/// Distances |(dx, dy)| for 0 <= dx, dy <= radius.
class DistanceTable {
public:
    explicit DistanceTable(int radius) : stride_(radius + 1), rho_(static_cast<std::size_t>(stride_) * stride_) {
        for (int y = 0; y <= radius; ++y)
            for (int x = 0; x <= radius; ++x)
                rho_[static_cast<std::size_t>(y) * stride_ + x] = std::hypot(double(x), double(y));
    }
    double operator()(int dx, int dy) const { return rho_[static_cast<std::size_t>(std::abs(dy)) * stride_ + std::abs(dx)]; }

private:
    int stride_;
    std::vector<double> rho_;
};

/// Per-pixel kernel description shared by the forward and adjoint passes.
struct KernelPlan {
    std::vector<double> coc;
    std::vector<int> radius;
    std::vector<double> raw_sum;   ///< sum of raw taps over the full support
    std::vector<double> raw_slope; ///< d(raw_sum)/d(coc)
    int max_radius = 0;
};

inline KernelPlan plan_kernels(std::span<const double> coc) {
    KernelPlan plan;
    plan.coc.assign(coc.begin(), coc.end());
    plan.radius.resize(coc.size());
    plan.raw_sum.resize(coc.size());
    plan.raw_slope.resize(coc.size());
    for (std::size_t i = 0; i < coc.size(); ++i)
        plan.max_radius = std::max(plan.max_radius, plan.radius[i] = kernel_radius(coc[i]));
    const DistanceTable rho(plan.max_radius);
    for (std::size_t i = 0; i < coc.size(); ++i) {
        const int r = plan.radius[i];
        double sum = 0.0;
        double slope = 0.0;
        for (int dy = -r; dy <= r; ++dy)
            for (int dx = -r; dx <= r; ++dx) {
                sum += raw_tap(coc[i], rho(dx, dy));
                slope += raw_tap_slope(coc[i], rho(dx, dy));
            }
        plan.raw_sum[i] = sum;
        plan.raw_slope[i] = slope;
    }
    return plan;
}

/// Accumulated numerator (per channel) and weight per output pixel.
struct SplatBuffers {
    std::vector<double> numerator;
    std::vector<double> weight;
};

/// Source rows are split into a fixed number of bands so the summation order
/// is the same for any worker count.
inline constexpr int kSplatBands = 16;

template <typename T>
SplatBuffers splat(const Image<T>& image, const KernelPlan& plan) {
    const int w = image.width();
    const int h = image.height();
    const int ch = image.channels();
    const int reach = plan.max_radius;
    const DistanceTable rho(reach);
    const int bands = std::min(h, kSplatBands);

    struct Band {
        int row0 = 0; // first output row covered by this band's buffer
        int rows = 0;
        std::vector<double> numerator;
        std::vector<double> weight;
    };
    std::vector<Band> parts(bands);
    auto samples = image.samples();

    parallel_for(bands, [&](int b) {
        const int y0 = static_cast<int>(static_cast<long long>(h) * b / bands);
        const int y1 = static_cast<int>(static_cast<long long>(h) * (b + 1) / bands);
        Band& band = parts[b];
        band.row0 = std::max(0, y0 - reach);
        band.rows = std::min(h, y1 + reach) - band.row0;
        band.numerator.assign(static_cast<std::size_t>(band.rows) * w * ch, 0.0);
        band.weight.assign(static_cast<std::size_t>(band.rows) * w, 0.0);
        for (int qy = y0; qy < y1; ++qy)
            for (int qx = 0; qx < w; ++qx) {
                const std::size_t q = static_cast<std::size_t>(qy) * w + qx;
                const double c = plan.coc[q];
                const int r = plan.radius[q];
                const double norm = 1.0 / plan.raw_sum[q];
                for (int dy = -r; dy <= r; ++dy) {
                    const int py = qy + dy;
                    if (py < 0 || py >= h)
                        continue;
                    for (int dx = -r; dx <= r; ++dx) {
                        const int px = qx + dx;
                        if (px < 0 || px >= w)
                            continue;
                        const double tap = raw_tap(c, rho(dx, dy));
                        if (tap == 0.0)
                            continue;
                        const double wgt = tap * norm;
                        const std::size_t p = static_cast<std::size_t>(py - band.row0) * w + px;
                        band.weight[p] += wgt;
                        for (int k = 0; k < ch; ++k)
                            band.numerator[p * ch + k] += wgt * static_cast<double>(samples[q * ch + k]);
                    }
                }
            }
    });

    SplatBuffers out;
    out.numerator.assign(image.pixel_count() * ch, 0.0);
    out.weight.assign(image.pixel_count(), 0.0);
    for (const Band& band : parts) {
        const std::size_t offset = static_cast<std::size_t>(band.row0) * w;
        for (std::size_t i = 0; i < band.weight.size(); ++i)
            out.weight[offset + i] += band.weight[i];
        for (std::size_t i = 0; i < band.numerator.size(); ++i)
            out.numerator[offset * ch + i] += band.numerator[i];
    }
    return out;
}

template <typename T>
std::vector<double> coc_values(const DepthMap<T>& depth, const LensParams& lens) {
    validate(lens);
    validate_depth(depth);
    std::vector<double> coc(depth.pixel_count());
    auto d = depth.samples();
    for (std::size_t i = 0; i < coc.size(); ++i)
        coc[i] = coc_px(static_cast<double>(d[i]), lens);
    return coc;
}

template <typename T>
void check_render_inputs(const Image<T>& image, const DepthMap<T>& depth) {
    if (!image.same_size(depth) || depth.channels() != 1)
        throw Error(ErrorCode::DimensionMismatch, "image and depth dimensions differ");
    if (!image.all_finite())
        throw Error(ErrorCode::InvalidArgument, "image samples must be finite");
}

} // namespace detail

/// Defocus rendering with a precomputed CoC map (pixels).
template <typename T>
Image<T> render_with_coc(const Image<T>& image, const CocMap<T>& coc) {
    if (!image.same_size(coc) || coc.channels() != 1)
        throw Error(ErrorCode::DimensionMismatch, "image and coc dimensions differ");
    std::vector<double> c(coc.samples().begin(), coc.samples().end());
    for (double v : c)
        if (!(v >= 0.0) || !std::isfinite(v))
            throw Error(ErrorCode::InvalidArgument, "coc values must be non-negative");
    const auto plan = detail::plan_kernels(c);
    const auto acc = detail::splat(image, plan);
    Image<T> out(image.width(), image.height(), image.channels());
    auto dst = out.samples();
    const int ch = image.channels();
    for (std::size_t p = 0; p < acc.weight.size(); ++p)
        for (int k = 0; k < ch; ++k)
            dst[p * ch + k] = static_cast<T>(acc.numerator[p * ch + k] / acc.weight[p]);
    return out;
}

template <typename T>
Image<T> render_defocus(const Image<T>& image, const DepthMap<T>& depth, const LensParams& lens) {
    detail::check_render_inputs(image, depth);
    return render_with_coc(image, compute_coc_map(depth, lens));
}

/// Pullback of a scalar loss L through render_defocus.
template <typename T>
struct LensGradients {
    Image<T> d_image;
    double d_focus_distance = 0.0;
    double d_focus_scale = 0.0;
    double d_f_number = 0.0;
    double d_focal_length = 0.0;
};

/**
 * Exact gradients of L = sum(upstream * render_defocus(image, depth, lens))
 * with respect to the image samples and the scalar lens parameters.
 *
 * With A_p = sum_q x_q w_q(p-q) and B_p = sum_q w_q(p-q):
 *   dL/dx_q   = sum_p u_p w_q(p-q) / B_p
 *   dL/dcoc_q = sum_p dw_q(p-q)/dcoc_q * sum_c u_pc (x_qc - out_pc) / B_p
 * and the parameter gradients follow from the chain rule through coc_q.
 */
template <typename T>
LensGradients<T> render_adjoint(const Image<T>& image, const DepthMap<T>& depth, const LensParams& lens,
                                const Image<T>& upstream) {
    detail::check_render_inputs(image, depth);
    if (!upstream.same_size(image) || upstream.channels() != image.channels())
        throw Error(ErrorCode::DimensionMismatch, "upstream gradient shape differs from image");

    const auto coc = detail::coc_values(depth, lens);
    const auto plan = detail::plan_kernels(coc);
    const auto acc = detail::splat(image, plan);
    const detail::DistanceTable rho(plan.max_radius);

    const int w = image.width();
    const int h = image.height();
    const int ch = image.channels();
    const std::size_t n = image.pixel_count();
    auto x = image.samples();
    auto u = upstream.samples();

    // v_pc = u_pc / B_p and s_p = sum_c u_pc out_pc / B_p
    std::vector<double> v(n * ch);
    std::vector<double> s(n, 0.0);
    for (std::size_t p = 0; p < n; ++p) {
        const double inv = 1.0 / acc.weight[p];
        for (int k = 0; k < ch; ++k) {
            const double out = acc.numerator[p * ch + k] * inv;
            v[p * ch + k] = static_cast<double>(u[p * ch + k]) * inv;
            s[p] += v[p * ch + k] * out;
        }
    }

    std::vector<double> d_image(n * ch, 0.0);
    std::vector<double> d_coc(n, 0.0);
    detail::parallel_for(h, [&](int qy) {
        for (int qx = 0; qx < w; ++qx) {
            const std::size_t q = static_cast<std::size_t>(qy) * w + qx;
            const double c = plan.coc[q];
            const int r = plan.radius[q];
            const double sum = plan.raw_sum[q];
            const double sum_slope = plan.raw_slope[q];
            double g = 0.0;
            for (int dy = -r; dy <= r; ++dy) {
                const int py = qy + dy;
                if (py < 0 || py >= h)
                    continue;
                for (int dx = -r; dx <= r; ++dx) {
                    const int px = qx + dx;
                    if (px < 0 || px >= w)
                        continue;
                    const double dist = rho(dx, dy);
                    const double tap = raw_tap(c, dist);
                    const double tap_slope = raw_tap_slope(c, dist);
                    if (tap == 0.0 && tap_slope == 0.0)
                        continue;
                    const std::size_t p = static_cast<std::size_t>(py) * w + px;
                    const double wgt = tap / sum;
                    const double dwgt = (tap_slope * sum - tap * sum_slope) / (sum * sum);
                    double xv = 0.0;
                    for (int k = 0; k < ch; ++k) {
                        d_image[q * ch + k] += wgt * v[p * ch + k];
                        xv += static_cast<double>(x[q * ch + k]) * v[p * ch + k];
                    }
                    g += dwgt * (xv - s[p]);
                }
            }
            d_coc[q] = g;
        }
    });

    LensGradients<T> grads;
    grads.d_image = Image<T>(w, h, ch);
    std::transform(d_image.begin(), d_image.end(), grads.d_image.samples().begin(),
                   [](double g) { return static_cast<T>(g); });
    auto d = depth.samples();
    for (std::size_t q = 0; q < n; ++q) {
        if (d_coc[q] == 0.0)
            continue;
        const CocSlopes slope = coc_slopes(static_cast<double>(d[q]), lens);
        grads.d_focus_distance += d_coc[q] * slope.fd;
        grads.d_focus_scale += d_coc[q] * slope.fs;
        grads.d_f_number += d_coc[q] * slope.n;
        grads.d_focal_length += d_coc[q] * slope.f;
    }
    return grads;
}

/// Anything that turns (image, depth, lens) into a defocused image. Lets the
/// pipeline swap lens models without touching callers.
template <typename M, typename T>
concept DefocusModel = requires(const M& model, const Image<T>& image, const DepthMap<T>& depth, const LensParams& lens) {
    { model.render(image, depth, lens) } -> std::same_as<Image<T>>;
};

/// The default differentiable thin-lens model.
struct ThinLensSplat {
    template <typename T>
    Image<T> render(const Image<T>& image, const DepthMap<T>& depth, const LensParams& lens) const {
        return render_defocus(image, depth, lens);
    }
};

/// f-number list used for aperture sweeps and blur monotonicity.
inline const std::vector<double>& default_apertures() {
    static const std::vector<double> stops{1.8, 2.8, 4.0, 5.6, 8.0, 11.0, 16.0, 22.0};
    return stops;
}

/// One render per f-number; every other lens parameter is held fixed.
template <typename T, typename Model = ThinLensSplat>
    requires DefocusModel<Model, T>
std::vector<Image<T>> sweep_apertures(const Image<T>& image, const DepthMap<T>& depth, const LensParams& base,
                                      std::span<const double> f_numbers, const Model& model = {}) {
    for (std::size_t i = 1; i < f_numbers.size(); ++i)
        if (!(f_numbers[i] > f_numbers[i - 1]))
            throw Error(ErrorCode::InvalidArgument, "f-numbers must be strictly increasing");
    std::vector<Image<T>> renders;
    renders.reserve(f_numbers.size());
    for (double n : f_numbers) {
        LensParams lens = base;
        lens.f_number = n;
        renders.push_back(model.render(image, depth, lens));
    }
    return renders;
}

} // namespace tlens
