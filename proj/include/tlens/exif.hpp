// Copyright 2026 The tlens Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

/**
 * @file exif.hpp
 * @brief Minimal EXIF reader for the five tags the dataset filters need.
 *
 * Accepts a JPEG stream (the first APP1 segment carrying "Exif\0\0") or a bare
 * TIFF stream. Every read goes through ByteView, which bounds-checks against
 * the TIFF block, so malformed input raises an Error and never reads outside
 * the supplied bytes.
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>

#include "tlens/error.hpp"

namespace tlens {

struct ExifRecord {
    std::optional<double> f_number;
    std::optional<double> focal_length_mm;
    std::optional<double> exposure_time_s;
    std::optional<std::string> make;
    std::optional<std::string> model;

    friend bool operator==(const ExifRecord&, const ExifRecord&) = default;
};

namespace exif_tag {
inline constexpr std::uint16_t kMake = 0x010F;
inline constexpr std::uint16_t kModel = 0x0110;
inline constexpr std::uint16_t kExposureTime = 0x829A;
inline constexpr std::uint16_t kFNumber = 0x829D;
inline constexpr std::uint16_t kExifIfd = 0x8769;
inline constexpr std::uint16_t kFocalLength = 0x920A;
} // namespace exif_tag

namespace exif_type {
inline constexpr std::uint16_t kAscii = 2;
inline constexpr std::uint16_t kShort = 3;
inline constexpr std::uint16_t kLong = 4;
inline constexpr std::uint16_t kRational = 5;
inline constexpr std::uint16_t kSRational = 10;
inline constexpr std::uint16_t kIfd = 13;
} // namespace exif_type

namespace detail {

class ByteView {
public:
    ByteView(std::span<const std::uint8_t> bytes, bool big_endian) : bytes_(bytes), big_endian_(big_endian) {}

    std::size_t size() const noexcept { return bytes_.size(); }

    void require(std::size_t offset, std::size_t length) const {
        if (offset > bytes_.size() || length > bytes_.size() - offset)
            throw Error(ErrorCode::TruncatedExif, "offset " + std::to_string(offset) + " out of bounds");
    }

    std::uint16_t u16(std::size_t offset) const {
        require(offset, 2);
        const std::uint16_t a = bytes_[offset];
        const std::uint16_t b = bytes_[offset + 1];
        return big_endian_ ? static_cast<std::uint16_t>(a << 8 | b) : static_cast<std::uint16_t>(b << 8 | a);
    }

    std::uint32_t u32(std::size_t offset) const {
        require(offset, 4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) {
            const std::uint32_t byte = bytes_[offset + i];
            v |= big_endian_ ? byte << (8 * (3 - i)) : byte << (8 * i);
        }
        return v;
    }

    std::span<const std::uint8_t> slice(std::size_t offset, std::size_t length) const {
        require(offset, length);
        return bytes_.subspan(offset, length);
    }

private:
    std::span<const std::uint8_t> bytes_;
    bool big_endian_;
};

struct IfdEntry {
    std::uint16_t tag;
    std::uint16_t type;
    std::uint32_t count;
    std::size_t value_offset; ///< where the value bytes start within the TIFF block
};

inline std::size_t type_size(std::uint16_t type) {
    switch (type) {
    case 1: case 2: case 6: case 7: return 1;
    case 3: case 8: return 2;
    case 4: case 9: case 11: case 13: return 4;
    case 5: case 10: case 12: return 8;
    default: return 0;
    }
}

inline double read_rational(const ByteView& tiff, const IfdEntry& e) {
    if ((e.type != exif_type::kRational && e.type != exif_type::kSRational) || e.count < 1)
        throw Error(ErrorCode::MalformedIfd, "tag " + std::to_string(e.tag) + " is not a rational");
    const std::uint32_t num = tiff.u32(e.value_offset);
    const std::uint32_t den = tiff.u32(e.value_offset + 4);
    if (den == 0)
        throw Error(ErrorCode::ZeroDenominator, "tag " + std::to_string(e.tag) + " has a zero denominator");
    if (e.type == exif_type::kSRational)
        return static_cast<double>(static_cast<std::int32_t>(num)) / static_cast<std::int32_t>(den);
    return static_cast<double>(num) / den;
}

inline std::string read_ascii(const ByteView& tiff, const IfdEntry& e) {
    if (e.type != exif_type::kAscii)
        throw Error(ErrorCode::MalformedIfd, "tag " + std::to_string(e.tag) + " is not ASCII");
    auto raw = tiff.slice(e.value_offset, e.count);
    std::string s(raw.begin(), raw.end());
    if (auto nul = s.find('\0'); nul != std::string::npos)
        s.resize(nul);
    while (!s.empty() && s.back() == ' ')
        s.pop_back();
    return s;
}

/// Zero and non-finite values carry no information; they read as absent.
inline std::optional<double> positive_or_absent(double v) {
    if (std::isfinite(v) && v > 0.0)
        return v;
    return std::nullopt;
}

inline void walk_ifd(const ByteView& tiff, std::size_t offset, ExifRecord& rec, std::set<std::size_t>& visited) {
    if (!visited.insert(offset).second)
        throw Error(ErrorCode::MalformedIfd, "IFD chain loops back to offset " + std::to_string(offset));
    tiff.require(offset, 2);
    const std::uint16_t count = tiff.u16(offset);
    const std::size_t entries_bytes = static_cast<std::size_t>(count) * 12;
    if (offset + 2 + entries_bytes > tiff.size())
        throw Error(ErrorCode::MalformedIfd, std::to_string(count) + " entries overrun the EXIF segment");

    std::optional<std::size_t> exif_ifd;
    for (std::uint16_t i = 0; i < count; ++i) {
        const std::size_t at = offset + 2 + static_cast<std::size_t>(i) * 12;
        IfdEntry e{tiff.u16(at), tiff.u16(at + 2), tiff.u32(at + 4), at + 8};
        const std::size_t unit = type_size(e.type);
        if (unit != 0 && static_cast<std::uint64_t>(unit) * e.count > 4)
            e.value_offset = tiff.u32(at + 8);

        switch (e.tag) {
        case exif_tag::kFNumber: rec.f_number = positive_or_absent(read_rational(tiff, e)); break;
        case exif_tag::kFocalLength: rec.focal_length_mm = positive_or_absent(read_rational(tiff, e)); break;
        case exif_tag::kExposureTime: rec.exposure_time_s = positive_or_absent(read_rational(tiff, e)); break;
        case exif_tag::kMake: rec.make = read_ascii(tiff, e); break;
        case exif_tag::kModel: rec.model = read_ascii(tiff, e); break;
        case exif_tag::kExifIfd:
            if (e.type != exif_type::kLong && e.type != exif_type::kIfd)
                throw Error(ErrorCode::MalformedIfd, "Exif IFD pointer has type " + std::to_string(e.type));
            exif_ifd = tiff.u32(at + 8);
            break;
        default: break;
        }
    }
    if (exif_ifd)
        walk_ifd(tiff, *exif_ifd, rec, visited);
}

inline ExifRecord parse_tiff(std::span<const std::uint8_t> block) {
    if (block.size() < 8)
        throw Error(ErrorCode::TruncatedExif, "TIFF header is shorter than 8 bytes");
    bool big_endian;
    if (block[0] == 'I' && block[1] == 'I')
        big_endian = false;
    else if (block[0] == 'M' && block[1] == 'M')
        big_endian = true;
    else
        throw Error(ErrorCode::MalformedIfd, "unknown TIFF byte order");
    const ByteView tiff(block, big_endian);
    if (tiff.u16(2) != 42)
        throw Error(ErrorCode::MalformedIfd, "bad TIFF magic");
    ExifRecord rec;
    std::set<std::size_t> visited;
    walk_ifd(tiff, tiff.u32(4), rec, visited);
    return rec;
}

} // namespace detail

inline bool looks_like_tiff(std::span<const std::uint8_t> b) {
    return b.size() >= 4 &&
           ((b[0] == 'I' && b[1] == 'I' && b[2] == 42 && b[3] == 0) ||
            (b[0] == 'M' && b[1] == 'M' && b[2] == 0 && b[3] == 42));
}

/**
 * Extracts FNumber, FocalLength, ExposureTime, Make and Model.
 * Tags that are absent stay absent; a JPEG without an Exif APP1 segment
 * yields an empty record.
 */
inline ExifRecord parse_exif(std::span<const std::uint8_t> bytes) {
    if (looks_like_tiff(bytes))
        return detail::parse_tiff(bytes);
    if (bytes.size() < 2 || bytes[0] != 0xFF || bytes[1] != 0xD8)
        throw Error(ErrorCode::NotAnImage, "neither a JPEG nor a TIFF stream");

    std::size_t pos = 2;
    while (pos + 4 <= bytes.size()) {
        if (bytes[pos] != 0xFF)
            throw Error(ErrorCode::TruncatedExif, "lost JPEG marker sync at " + std::to_string(pos));
        const std::uint8_t marker = bytes[pos + 1];
        if (marker == 0xFF) { // fill byte
            ++pos;
            continue;
        }
        if (marker == 0xD9 || marker == 0xDA) // EOI, or SOS: no more metadata
            break;
        if (marker == 0x01 || (marker >= 0xD0 && marker <= 0xD7)) { // standalone
            pos += 2;
            continue;
        }
        const std::size_t length = static_cast<std::size_t>(bytes[pos + 2]) << 8 | bytes[pos + 3];
        if (length < 2 || pos + 2 + length > bytes.size())
            throw Error(ErrorCode::TruncatedExif, "JPEG segment overruns the stream");
        const auto payload = bytes.subspan(pos + 4, length - 2);
        static constexpr std::uint8_t kExifHeader[6] = {'E', 'x', 'i', 'f', 0, 0};
        if (marker == 0xE1 && payload.size() >= 6 && std::equal(kExifHeader, kExifHeader + 6, payload.begin()))
            return detail::parse_tiff(payload.subspan(6));
        pos += 2 + length;
    }
    return {};
}

} // namespace tlens
