// Copyright 2026 The tlens Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tlens/error.hpp"

namespace tlens {

/**
 * Row-major interleaved raster with 1 or 3 channels of linear-light samples.
 *
 * The sample type is a template parameter so the renderer and its adjoint can
 * be driven in double precision for gradient checks while file I/O stays in
 * float.
 */
template <typename T = float>
class Image {
public:
    using value_type = T;

    Image() = default;

    Image(int width, int height, int channels, T fill = T(0)) : width_(width), height_(height), channels_(channels) {
        if (width < 1 || height < 1)
            throw Error(ErrorCode::InvalidArgument, "image dimensions must be positive");
        if (channels != 1 && channels != 3)
            throw Error(ErrorCode::InvalidArgument, "image must have 1 or 3 channels");
        data_.assign(static_cast<std::size_t>(width) * height * channels, fill);
    }

    Image(int width, int height, int channels, std::vector<T> data) : Image(width, height, channels) {
        if (data.size() != data_.size())
            throw Error(ErrorCode::DimensionMismatch, "sample count does not match dimensions");
        data_ = std::move(data);
    }

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    int channels() const noexcept { return channels_; }
    std::size_t pixel_count() const noexcept { return static_cast<std::size_t>(width_) * height_; }
    bool empty() const noexcept { return data_.empty(); }

    T& operator()(int x, int y, int c = 0) noexcept { return data_[index(x, y, c)]; }
    const T& operator()(int x, int y, int c = 0) const noexcept { return data_[index(x, y, c)]; }

    std::span<T> samples() noexcept { return data_; }
    std::span<const T> samples() const noexcept { return data_; }

    bool same_size(int w, int h) const noexcept { return width_ == w && height_ == h; }
    template <typename U>
    bool same_size(const Image<U>& other) const noexcept { return same_size(other.width(), other.height()); }

    bool all_finite() const noexcept {
        return std::all_of(data_.begin(), data_.end(), [](T v) { return std::isfinite(v); });
    }

    template <typename U>
    Image<U> cast() const {
        Image<U> out(width_, height_, channels_);
        std::transform(data_.begin(), data_.end(), out.samples().begin(), [](T v) { return static_cast<U>(v); });
        return out;
    }

    friend bool operator==(const Image&, const Image&) = default;

private:
    std::size_t index(int x, int y, int c) const noexcept {
        return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
    }

    int width_ = 0;
    int height_ = 0;
    int channels_ = 0;
    std::vector<T> data_;
};

/// Single-channel scalar field; depth, saliency and CoC maps share this layout.
template <typename T = float>
using Field = Image<T>;

/// Depth in the same length unit as the focus distance. Every value > 0.
template <typename T = float>
using DepthMap = Field<T>;

/// Non-negative per-pixel importance weights.
template <typename T = float>
using SaliencyMap = Field<T>;

/// Circle-of-confusion diameters in pixels.
template <typename T = float>
using CocMap = Field<T>;

template <typename T>
void require_same_size(const Image<T>& a, int w, int h, const char* what) {
    if (!a.same_size(w, h))
        throw Error(ErrorCode::DimensionMismatch, std::string(what) + " dimensions do not match");
}

template <typename T>
void validate_depth(const DepthMap<T>& depth) {
    if (depth.channels() != 1)
        throw Error(ErrorCode::InvalidDepth, "depth map must have one channel");
    for (T d : depth.samples())
        if (!(d > T(0)) || !std::isfinite(d))
            throw Error(ErrorCode::InvalidDepth, "depth values must be positive and finite");
}

template <typename T>
std::pair<T, T> min_max(const Field<T>& field) {
    auto [lo, hi] = std::minmax_element(field.samples().begin(), field.samples().end());
    return {*lo, *hi};
}

} // namespace tlens
