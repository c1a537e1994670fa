// Copyright 2026 The tlens Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

/**
 * @file metrics.hpp
 * @brief Signal-energy blur metrics, content consistency, and a circular
 * convolution check of the energy-decrease bound E(f * h) <= E(f).
 */

#include <fftw3.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include "tlens/error.hpp"
#include "tlens/image.hpp"

namespace tlens {

enum class EnergyDomain { Spatial, Spectral };

struct EnergyValue {
    double energy = 0.0;
    EnergyDomain domain = EnergyDomain::Spatial;
};

namespace detail {

// The FFTW planner is not reentrant; execution with a private plan is.
inline std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

struct FftwDeleter {
    void operator()(fftw_complex* p) const noexcept { fftw_free(p); }
    void operator()(fftw_plan_s* p) const noexcept {
        std::lock_guard lock(fftw_planner_mutex());
        fftw_destroy_plan(p);
    }
};

/// Unnormalized forward 2-D DFT of a real h x w plane (row-major).
inline std::vector<std::complex<double>> dft2(std::span<const double> plane, int w, int h) {
    const std::size_t n = static_cast<std::size_t>(w) * h;
    std::unique_ptr<fftw_complex, FftwDeleter> buf(fftw_alloc_complex(n));
    std::unique_ptr<fftw_plan_s, FftwDeleter> plan;
    {
        std::lock_guard lock(fftw_planner_mutex());
        plan.reset(fftw_plan_dft_2d(h, w, buf.get(), buf.get(), FFTW_FORWARD, FFTW_ESTIMATE));
    }
    for (std::size_t i = 0; i < n; ++i) {
        buf.get()[i][0] = plane[i];
        buf.get()[i][1] = 0.0;
    }
    fftw_execute(plan.get());
    std::vector<std::complex<double>> out(n);
    for (std::size_t i = 0; i < n; ++i)
        out[i] = {buf.get()[i][0], buf.get()[i][1]};
    return out;
}

template <typename T>
std::vector<double> channel_plane(const Image<T>& image, int c) {
    std::vector<double> plane(image.pixel_count());
    auto s = image.samples();
    for (std::size_t i = 0; i < plane.size(); ++i)
        plane[i] = static_cast<double>(s[i * image.channels() + c]);
    return plane;
}

} // namespace detail

/**
 * Sum of squared samples over all pixels and channels (spatial), or the
 * per-channel sum of |FFT2(x)_k|^2 / (H*W) over all frequencies (spectral).
 * The two agree by Parseval up to rounding.
 */
template <typename T>
EnergyValue signal_energy(const Image<T>& image, EnergyDomain domain = EnergyDomain::Spatial) {
    double e = 0.0;
    if (domain == EnergyDomain::Spatial) {
        for (T v : image.samples())
            e += static_cast<double>(v) * static_cast<double>(v);
    } else {
        const double n = static_cast<double>(image.pixel_count());
        for (int c = 0; c < image.channels(); ++c) {
            const auto spectrum = detail::dft2(detail::channel_plane(image, c), image.width(), image.height());
            double sum = 0.0;
            for (const auto& z : spectrum)
                sum += std::norm(z);
            e += sum / n;
        }
    }
    return {e, domain};
}

/// Percentage of adjacent pairs whose energy strictly increases.
inline double blur_monotonicity(std::span<const double> energies) {
    if (energies.size() < 2)
        throw Error(ErrorCode::TooFewImages, "blur monotonicity needs at least two images");
    std::size_t increasing = 0;
    for (std::size_t i = 1; i < energies.size(); ++i)
        if (energies[i - 1] < energies[i])
            ++increasing;
    return 100.0 * static_cast<double>(increasing) / static_cast<double>(energies.size() - 1);
}

/// Images must be ordered by ascending f-number.
template <typename T>
double blur_monotonicity(std::span<const Image<T>> images) {
    if (images.size() < 2)
        throw Error(ErrorCode::TooFewImages, "blur monotonicity needs at least two images");
    std::vector<double> energies;
    energies.reserve(images.size());
    for (const auto& img : images) {
        if (!img.same_size(images.front()) || img.channels() != images.front().channels())
            throw Error(ErrorCode::DimensionMismatch, "sweep images differ in shape");
        energies.push_back(signal_energy(img).energy);
    }
    return blur_monotonicity(energies);
}

/// Top-3 segmentation class IDs per pixel.
class LabelStack {
public:
    using Top3 = std::array<std::uint16_t, 3>;

    LabelStack(int width, int height, std::vector<Top3> labels) : width_(width), height_(height), labels_(std::move(labels)) {
        if (width < 1 || height < 1)
            throw Error(ErrorCode::InvalidArgument, "label stack dimensions must be positive");
        if (labels_.size() != static_cast<std::size_t>(width) * height)
            throw Error(ErrorCode::DimensionMismatch, "label count does not match dimensions");
        for (const Top3& t : labels_)
            if (t[0] == t[1] || t[0] == t[2] || t[1] == t[2])
                throw Error(ErrorCode::InvalidArgument, "duplicate class id within a pixel's top-3");
    }

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    const Top3& at(std::size_t pixel) const { return labels_[pixel]; }
    const std::vector<Top3>& labels() const noexcept { return labels_; }

private:
    int width_;
    int height_;
    std::vector<Top3> labels_;
};

/// Default f-numbers for the content consistency sweep.
inline const std::vector<double>& consistency_apertures() {
    static const std::vector<double> stops{4.0, 5.6, 8.0, 11.0, 16.0, 22.0};
    return stops;
}

enum class ConsistencyMode {
    /// A pixel is consistent when one class is in every stack's top-3.
    Intersection,
    /// A pixel is consistent when every adjacent pair of stacks shares a class.
    AdjacentPairs,
};

namespace detail {
inline bool shares_class(const LabelStack::Top3& a, const LabelStack::Top3& b) {
    return std::any_of(a.begin(), a.end(), [&](std::uint16_t id) { return std::find(b.begin(), b.end(), id) != b.end(); });
}
} // namespace detail

inline double content_consistency(std::span<const LabelStack> stacks, ConsistencyMode mode = ConsistencyMode::Intersection) {
    if (stacks.size() < 2)
        throw Error(ErrorCode::TooFewImages, "content consistency needs at least two label stacks");
    for (const auto& s : stacks)
        if (s.width() != stacks[0].width() || s.height() != stacks[0].height())
            throw Error(ErrorCode::DimensionMismatch, "label stacks differ in size");

    const std::size_t pixels = stacks[0].labels().size();
    std::size_t consistent = 0;
    for (std::size_t p = 0; p < pixels; ++p) {
        bool ok = true;
        if (mode == ConsistencyMode::Intersection) {
            const auto& first = stacks[0].at(p);
            ok = std::any_of(first.begin(), first.end(), [&](std::uint16_t id) {
                return std::all_of(stacks.begin() + 1, stacks.end(), [&](const LabelStack& s) {
                    const auto& t = s.at(p);
                    return std::find(t.begin(), t.end(), id) != t.end();
                });
            });
        } else {
            for (std::size_t i = 1; i < stacks.size() && ok; ++i)
                ok = detail::shares_class(stacks[i - 1].at(p), stacks[i].at(p));
        }
        consistent += ok ? 1 : 0;
    }
    return 100.0 * static_cast<double>(consistent) / static_cast<double>(pixels);
}

/// Dense 2-D kernel with its anchor at the center tap (width/2, height/2).
struct ConvKernel {
    int width = 1;
    int height = 1;
    std::vector<double> taps{1.0};
};

struct CircularEnergyCheck {
    double energy_before = 0.0;
    double energy_after = 0.0;
    /// Some frequency has |F_k| > 0 and |H_k| < 1, so the decrease is strict.
    bool strict_expected = false;
};

/**
 * Circular (wrap-around) convolution g = f (*) h per channel, returning the
 * spatial energies of f and g and whether the bound is predicted strict.
 *
 * Uses its own direct convolver instead of the zero-boundary renderer so the
 * convolution theorem holds exactly.
 */
template <typename T>
CircularEnergyCheck circular_energy_oracle(const Image<T>& f, const ConvKernel& h) {
    if (h.width < 1 || h.height < 1 || h.taps.size() != static_cast<std::size_t>(h.width) * h.height)
        throw Error(ErrorCode::InvalidKernel, "kernel taps do not match kernel dimensions");
    if (h.width > f.width() || h.height > f.height())
        throw Error(ErrorCode::InvalidKernel, "kernel larger than the image");
    double sum = 0.0;
    for (double v : h.taps) {
        if (!(v >= 0.0) || !std::isfinite(v))
            throw Error(ErrorCode::InvalidKernel, "kernel taps must be non-negative");
        sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw Error(ErrorCode::InvalidKernel, "kernel taps must sum to 1");

    const int w = f.width();
    const int hgt = f.height();
    const int ax = h.width / 2;
    const int ay = h.height / 2;

    // Kernel embedded in an image-sized periodic grid.
    std::vector<double> h_plane(f.pixel_count(), 0.0);
    for (int ky = 0; ky < h.height; ++ky)
        for (int kx = 0; kx < h.width; ++kx) {
            const int x = ((kx - ax) % w + w) % w;
            const int y = ((ky - ay) % hgt + hgt) % hgt;
            h_plane[static_cast<std::size_t>(y) * w + x] += h.taps[static_cast<std::size_t>(ky) * h.width + kx];
        }
    const auto h_spec = detail::dft2(h_plane, w, hgt);

    CircularEnergyCheck out;
    for (int c = 0; c < f.channels(); ++c) {
        const auto plane = detail::channel_plane(f, c);
        const auto f_spec = detail::dft2(plane, w, hgt);
        double scale = 0.0;
        for (const auto& z : f_spec)
            scale = std::max(scale, std::abs(z));
        for (std::size_t k = 0; k < f_spec.size(); ++k)
            if (std::abs(f_spec[k]) > 1e-12 * std::max(scale, 1.0) && std::abs(h_spec[k]) < 1.0 - 1e-12)
                out.strict_expected = true;

        for (int y = 0; y < hgt; ++y)
            for (int x = 0; x < w; ++x) {
                const double v = plane[static_cast<std::size_t>(y) * w + x];
                out.energy_before += v * v;
                double g = 0.0;
                for (int ky = 0; ky < h.height; ++ky)
                    for (int kx = 0; kx < h.width; ++kx) {
                        const int sx = ((x - (kx - ax)) % w + w) % w;
                        const int sy = ((y - (ky - ay)) % hgt + hgt) % hgt;
                        g += h.taps[static_cast<std::size_t>(ky) * h.width + kx] * plane[static_cast<std::size_t>(sy) * w + sx];
                    }
                out.energy_after += g * g;
            }
    }
    return out;
}

} // namespace tlens
