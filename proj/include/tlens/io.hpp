// Copyright 2026 The tlens Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

/**
 * @file io.hpp
 * @brief Raster file formats.
 *
 *  - PNG, 8 or 16 bit gray/RGB in, 16 bit out. Codes map linearly to [0, 1]
 *    by dividing by the maximum code value; no gamma curve is applied.
 *  - PFM ("Pf" single channel), little-endian (scale -1.0) when written.
 *  - TLDEPTH1: "TLDEPTH1" + u32 width + u32 height (LE) + float32 LE samples.
 *  - TLSEG1: "TLSEG1" + u32 width + u32 height + 3 x u16 LE class IDs/pixel.
 */

#include <png.h>

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "tlens/error.hpp"
#include "tlens/image.hpp"
#include "tlens/metrics.hpp"

namespace tlens::io {

using Bytes = std::vector<std::uint8_t>;

inline Bytes read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorCode::IoError, "cannot open " + path);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::string& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error(ErrorCode::IoError, "cannot create " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out)
        throw Error(ErrorCode::IoError, "short write to " + path);
}

namespace detail {

inline void put_u32le(Bytes& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i)
        out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline std::uint32_t get_u32le(std::span<const std::uint8_t> b, std::size_t at) {
    return static_cast<std::uint32_t>(b[at]) | static_cast<std::uint32_t>(b[at + 1]) << 8 |
           static_cast<std::uint32_t>(b[at + 2]) << 16 | static_cast<std::uint32_t>(b[at + 3]) << 24;
}

inline float get_f32(std::span<const std::uint8_t> b, std::size_t at, bool big_endian) {
    std::uint32_t bits = big_endian ? (static_cast<std::uint32_t>(b[at]) << 24 | static_cast<std::uint32_t>(b[at + 1]) << 16 |
                                       static_cast<std::uint32_t>(b[at + 2]) << 8 | b[at + 3])
                                    : get_u32le(b, at);
    return std::bit_cast<float>(bits);
}

inline void put_f32le(Bytes& out, float v) { put_u32le(out, std::bit_cast<std::uint32_t>(v)); }

struct PngReadState {
    std::span<const std::uint8_t> bytes;
    std::size_t pos = 0;
};

inline void png_read_cb(png_structp png, png_bytep out, png_size_t length) {
    auto* st = static_cast<PngReadState*>(png_get_io_ptr(png));
    if (st->pos + length > st->bytes.size())
        png_error(png, "unexpected end of PNG data");
    std::memcpy(out, st->bytes.data() + st->pos, length);
    st->pos += length;
}

inline void png_write_cb(png_structp png, png_bytep data, png_size_t length) {
    auto* out = static_cast<Bytes*>(png_get_io_ptr(png));
    out->insert(out->end(), data, data + length);
}

inline void png_flush_cb(png_structp) {}

inline void png_silent_warning(png_structp, png_const_charp) {}

struct PngRaw {
    int width = 0;
    int height = 0;
    int channels = 0;
    int bit_depth = 0;
    std::vector<std::uint8_t> rows; // width * channels * (bit_depth / 8) per row, big-endian for 16 bit
};

// Kept free of objects with destructors between setjmp and any longjmp.
inline bool png_decode_raw(std::span<const std::uint8_t> bytes, PngRaw& raw, std::vector<png_bytep>& row_ptrs) {
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, png_silent_warning);
    if (!png)
        return false;
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        return false;
    }
    PngReadState state{bytes, 0};
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        return false;
    }
    png_set_read_fn(png, &state, png_read_cb);
    png_read_info(png, info);

    const int color = png_get_color_type(png, info);
    const int depth = png_get_bit_depth(png, info);
    if (color == PNG_COLOR_TYPE_PALETTE)
        png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8)
        png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS))
        png_set_tRNS_to_alpha(png);
    png_set_strip_alpha(png);
    png_read_update_info(png, info);

    raw.width = static_cast<int>(png_get_image_width(png, info));
    raw.height = static_cast<int>(png_get_image_height(png, info));
    raw.channels = png_get_channels(png, info);
    raw.bit_depth = png_get_bit_depth(png, info);
    const std::size_t rowbytes = png_get_rowbytes(png, info);
    raw.rows.resize(rowbytes * raw.height);
    row_ptrs.resize(raw.height);
    for (int y = 0; y < raw.height; ++y)
        row_ptrs[y] = raw.rows.data() + rowbytes * y;
    png_read_image(png, row_ptrs.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return true;
}

inline bool png_encode_raw(const PngRaw& raw, std::vector<png_bytep>& row_ptrs, Bytes& out) {
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, png_silent_warning);
    if (!png)
        return false;
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        return false;
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        return false;
    }
    png_set_write_fn(png, &out, png_write_cb, png_flush_cb);
    png_set_IHDR(png, info, raw.width, raw.height, raw.bit_depth,
                 raw.channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    png_write_image(png, row_ptrs.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    return true;
}

} // namespace detail

inline Image<float> decode_png(std::span<const std::uint8_t> bytes) {
    static constexpr std::uint8_t kSignature[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};
    if (bytes.size() < 8 || std::memcmp(bytes.data(), kSignature, 8) != 0)
        throw Error(ErrorCode::FormatError, "not a PNG stream");
    detail::PngRaw raw;
    std::vector<png_bytep> rows;
    if (!detail::png_decode_raw(bytes, raw, rows))
        throw Error(ErrorCode::FormatError, "corrupt PNG stream");
    // Gray+alpha loses its alpha above and arrives as 1 channel.
    if (raw.channels != 1 && raw.channels != 3)
        throw Error(ErrorCode::FormatError, "unsupported PNG channel layout");
    Image<float> img(raw.width, raw.height, raw.channels);
    auto dst = img.samples();
    if (raw.bit_depth == 16) {
        for (std::size_t i = 0; i < dst.size(); ++i)
            dst[i] = static_cast<float>((raw.rows[2 * i] << 8 | raw.rows[2 * i + 1]) / 65535.0);
    } else {
        for (std::size_t i = 0; i < dst.size(); ++i)
            dst[i] = static_cast<float>(raw.rows[i] / 255.0);
    }
    return img;
}

/// 16-bit PNG; samples are clamped to [0, 1] and rounded to the nearest code.
template <typename T>
Bytes encode_png16(const Image<T>& image) {
    detail::PngRaw raw;
    raw.width = image.width();
    raw.height = image.height();
    raw.channels = image.channels();
    raw.bit_depth = 16;
    auto src = image.samples();
    raw.rows.resize(src.size() * 2);
    for (std::size_t i = 0; i < src.size(); ++i) {
        const double v = std::isfinite(static_cast<double>(src[i])) ? std::clamp(static_cast<double>(src[i]), 0.0, 1.0) : 0.0;
        const auto code = static_cast<std::uint16_t>(std::lround(v * 65535.0));
        raw.rows[2 * i] = static_cast<std::uint8_t>(code >> 8);
        raw.rows[2 * i + 1] = static_cast<std::uint8_t>(code & 0xFF);
    }
    std::vector<png_bytep> rows(raw.height);
    const std::size_t stride = static_cast<std::size_t>(raw.width) * raw.channels * 2;
    for (int y = 0; y < raw.height; ++y)
        rows[y] = raw.rows.data() + stride * y;
    Bytes out;
    if (!detail::png_encode_raw(raw, rows, out))
        throw Error(ErrorCode::FormatError, "PNG encoding failed");
    return out;
}

inline Image<float> read_png(const std::string& path) { return decode_png(read_file(path)); }

template <typename T>
void write_png16(const std::string& path, const Image<T>& image) {
    write_file(path, encode_png16(image));
}

// ---------------------------------------------------------------------------
// Scalar fields: PFM and TLDEPTH1

inline constexpr std::string_view kDepthMagic = "TLDEPTH1";

inline bool is_raw_depth(std::span<const std::uint8_t> b) {
    return b.size() >= 8 && std::memcmp(b.data(), kDepthMagic.data(), 8) == 0;
}

inline Field<float> decode_raw_depth(std::span<const std::uint8_t> b) {
    if (b.size() < 16 || !is_raw_depth(b))
        throw Error(ErrorCode::FormatError, "not a TLDEPTH1 stream");
    const std::uint32_t w = detail::get_u32le(b, 8);
    const std::uint32_t h = detail::get_u32le(b, 12);
    if (w == 0 || h == 0 || w > (1u << 16) || h > (1u << 16))
        throw Error(ErrorCode::FormatError, "implausible TLDEPTH1 dimensions");
    const std::size_t n = static_cast<std::size_t>(w) * h;
    if (b.size() != 16 + 4 * n)
        throw Error(ErrorCode::FormatError, "TLDEPTH1 payload size mismatch");
    Field<float> f(static_cast<int>(w), static_cast<int>(h), 1);
    auto dst = f.samples();
    for (std::size_t i = 0; i < n; ++i)
        dst[i] = detail::get_f32(b, 16 + 4 * i, false);
    return f;
}

template <typename T>
Bytes encode_raw_depth(const Field<T>& field) {
    Bytes out(kDepthMagic.begin(), kDepthMagic.end());
    detail::put_u32le(out, static_cast<std::uint32_t>(field.width()));
    detail::put_u32le(out, static_cast<std::uint32_t>(field.height()));
    for (T v : field.samples())
        detail::put_f32le(out, static_cast<float>(v));
    return out;
}

/// Reads a "Pf" (or "PF", reduced to its first channel) map. Scanlines are
/// stored bottom-to-top; the result is top-to-bottom.
inline Field<float> decode_pfm(std::span<const std::uint8_t> b) {
    std::size_t pos = 0;
    auto token = [&]() {
        while (pos < b.size() && std::isspace(b[pos]))
            ++pos;
        std::string t;
        while (pos < b.size() && !std::isspace(b[pos]) && t.size() < 32)
            t.push_back(static_cast<char>(b[pos++]));
        return t;
    };
    const std::string magic = token();
    if (magic != "Pf" && magic != "PF")
        throw Error(ErrorCode::FormatError, "not a PFM stream");
    const int channels = magic == "PF" ? 3 : 1;
    long w = 0, h = 0;
    double scale = 0.0;
    try {
        w = std::stol(token());
        h = std::stol(token());
        scale = std::stod(token());
    } catch (const std::exception&) {
        throw Error(ErrorCode::FormatError, "bad PFM header");
    }
    if (pos >= b.size() || !std::isspace(b[pos]))
        throw Error(ErrorCode::FormatError, "bad PFM header");
    ++pos; // single whitespace before the raster
    if (w <= 0 || h <= 0 || w > (1 << 16) || h > (1 << 16) || scale == 0.0)
        throw Error(ErrorCode::FormatError, "implausible PFM header");
    const bool big_endian = scale > 0.0;
    const std::size_t n = static_cast<std::size_t>(w) * h;
    if (b.size() - pos != 4 * n * channels)
        throw Error(ErrorCode::FormatError, "PFM payload size mismatch");
    Field<float> f(static_cast<int>(w), static_cast<int>(h), 1);
    for (long y = 0; y < h; ++y)
        for (long x = 0; x < w; ++x) {
            const std::size_t src = pos + 4 * channels * (static_cast<std::size_t>(h - 1 - y) * w + x);
            f(static_cast<int>(x), static_cast<int>(y)) = detail::get_f32(b, src, big_endian);
        }
    return f;
}

template <typename T>
Bytes encode_pfm(const Field<T>& field) {
    const std::string header = "Pf\n" + std::to_string(field.width()) + " " + std::to_string(field.height()) + "\n-1.0\n";
    Bytes out(header.begin(), header.end());
    out.reserve(out.size() + 4 * field.pixel_count());
    for (int y = field.height() - 1; y >= 0; --y)
        for (int x = 0; x < field.width(); ++x)
            detail::put_f32le(out, static_cast<float>(field(x, y)));
    return out;
}

/// Depth or saliency from PFM or TLDEPTH1, detected by magic.
inline Field<float> decode_field(std::span<const std::uint8_t> b) {
    if (is_raw_depth(b))
        return decode_raw_depth(b);
    return decode_pfm(b);
}

inline Field<float> read_field(const std::string& path) { return decode_field(read_file(path)); }

template <typename T>
void write_pfm(const std::string& path, const Field<T>& field) {
    write_file(path, encode_pfm(field));
}

// ---------------------------------------------------------------------------
// TLSEG1 label stacks

inline constexpr std::string_view kSegMagic = "TLSEG1";

inline LabelStack decode_label_stack(std::span<const std::uint8_t> b) {
    if (b.size() < 14 || std::memcmp(b.data(), kSegMagic.data(), 6) != 0)
        throw Error(ErrorCode::FormatError, "not a TLSEG1 stream");
    const std::uint32_t w = detail::get_u32le(b, 6);
    const std::uint32_t h = detail::get_u32le(b, 10);
    if (w == 0 || h == 0 || w > (1u << 16) || h > (1u << 16))
        throw Error(ErrorCode::FormatError, "implausible TLSEG1 dimensions");
    const std::size_t n = static_cast<std::size_t>(w) * h;
    if (b.size() != 14 + 6 * n)
        throw Error(ErrorCode::FormatError, "TLSEG1 payload size mismatch");
    std::vector<LabelStack::Top3> labels(n);
    for (std::size_t i = 0; i < n; ++i)
        for (int k = 0; k < 3; ++k) {
            const std::size_t at = 14 + 6 * i + 2 * k;
            labels[i][k] = static_cast<std::uint16_t>(b[at] | b[at + 1] << 8);
        }
    return LabelStack(static_cast<int>(w), static_cast<int>(h), std::move(labels));
}

inline Bytes encode_label_stack(const LabelStack& stack) {
    Bytes out(kSegMagic.begin(), kSegMagic.end());
    detail::put_u32le(out, static_cast<std::uint32_t>(stack.width()));
    detail::put_u32le(out, static_cast<std::uint32_t>(stack.height()));
    for (const auto& t : stack.labels())
        for (std::uint16_t id : t) {
            out.push_back(static_cast<std::uint8_t>(id & 0xFF));
            out.push_back(static_cast<std::uint8_t>(id >> 8));
        }
    return out;
}

} // namespace tlens::io
