// Copyright 2026 The tlens Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Byte-by-byte TIFF/EXIF blob construction for parser fixtures.
//
// Layout: 8-byte header, IFD0 at offset 8, IFD0's out-of-line values, then the
// Exif sub-IFD and its out-of-line values. Entries are written in the order
// given (callers pass them sorted by tag).

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace tlens::fixtures {

using Bytes = std::vector<std::uint8_t>;

struct TagValue {
    std::uint16_t tag;
    std::uint16_t type;
    std::uint32_t count;
    Bytes payload; // already in the blob's byte order
};

class TiffBuilder {
public:
    explicit TiffBuilder(bool big_endian) : big_(big_endian) {}

    TiffBuilder& ascii0(std::uint16_t tag, const std::string& s) { return ascii(ifd0_, tag, s); }
    TiffBuilder& rational0(std::uint16_t tag, std::uint32_t num, std::uint32_t den) { return rational(ifd0_, tag, num, den); }
    TiffBuilder& ascii_exif(std::uint16_t tag, const std::string& s) { return ascii(exif_, tag, s); }
    TiffBuilder& rational_exif(std::uint16_t tag, std::uint32_t num, std::uint32_t den) {
        return rational(exif_, tag, num, den);
    }

    Bytes build() const {
        Bytes out;
        if (big_) {
            out = {'M', 'M', 0, 42};
        } else {
            out = {'I', 'I', 42, 0};
        }
        put32(out, 8);

        std::vector<TagValue> ifd0 = ifd0_;
        const bool with_exif = !exif_.empty();
        if (with_exif)
            ifd0.push_back({0x8769, 4, 1, {}}); // pointer patched below
        const std::uint32_t ifd0_size = 2 + 12 * static_cast<std::uint32_t>(ifd0.size()) + 4;
        const std::uint32_t data0 = 8 + ifd0_size;
        const std::uint32_t exif_at = data0 + out_of_line_size(ifd0);
        if (with_exif)
            put32(ifd0.back().payload, exif_at);
        write_ifd(out, ifd0, 8);
        if (with_exif)
            write_ifd(out, exif_, exif_at);
        return out;
    }

private:
    TiffBuilder& ascii(std::vector<TagValue>& ifd, std::uint16_t tag, const std::string& s) {
        Bytes b(s.begin(), s.end());
        b.push_back(0);
        ifd.push_back({tag, 2, static_cast<std::uint32_t>(b.size()), b});
        return *this;
    }

    TiffBuilder& rational(std::vector<TagValue>& ifd, std::uint16_t tag, std::uint32_t num, std::uint32_t den) {
        Bytes b;
        put32(b, num);
        put32(b, den);
        ifd.push_back({tag, 5, 1, b});
        return *this;
    }

    static std::uint32_t padded(std::size_t n) { return static_cast<std::uint32_t>((n + 1) & ~std::size_t{1}); }

    static std::uint32_t out_of_line_size(const std::vector<TagValue>& ifd) {
        std::uint32_t n = 0;
        for (const auto& e : ifd)
            if (e.payload.size() > 4)
                n += padded(e.payload.size());
        return n;
    }

    void write_ifd(Bytes& out, const std::vector<TagValue>& ifd, std::uint32_t at) const {
        out.resize(at, 0);
        put16(out, static_cast<std::uint16_t>(ifd.size()));
        std::uint32_t data = at + 2 + 12 * static_cast<std::uint32_t>(ifd.size()) + 4;
        Bytes tail;
        for (const auto& e : ifd) {
            put16(out, e.tag);
            put16(out, e.type);
            put32(out, e.count);
            if (e.payload.size() > 4) {
                put32(out, data);
                tail.insert(tail.end(), e.payload.begin(), e.payload.end());
                tail.resize(padded(tail.size()), 0);
                data += padded(e.payload.size());
            } else {
                Bytes inl = e.payload;
                inl.resize(4, 0);
                out.insert(out.end(), inl.begin(), inl.end());
            }
        }
        put32(out, 0); // no next IFD
        out.insert(out.end(), tail.begin(), tail.end());
    }

    void put16(Bytes& b, std::uint16_t v) const {
        if (big_) {
            b.push_back(static_cast<std::uint8_t>(v >> 8));
            b.push_back(static_cast<std::uint8_t>(v));
        } else {
            b.push_back(static_cast<std::uint8_t>(v));
            b.push_back(static_cast<std::uint8_t>(v >> 8));
        }
    }

    void put32(Bytes& b, std::uint32_t v) const {
        for (int i = 0; i < 4; ++i)
            b.push_back(static_cast<std::uint8_t>(big_ ? v >> (8 * (3 - i)) : v >> (8 * i)));
    }

    bool big_;
    std::vector<TagValue> ifd0_;
    std::vector<TagValue> exif_;
};

/// SOI, JFIF APP0, optional Exif APP1, a stub SOS and EOI.
inline Bytes wrap_jpeg(const Bytes* tiff) {
    Bytes out = {0xFF, 0xD8, 0xFF, 0xE0, 0x00, 0x10, 'J', 'F', 'I', 'F', 0x00, 0x01, 0x01, 0x00, 0x00, 0x01, 0x00, 0x01, 0x00, 0x00};
    if (tiff) {
        const std::size_t len = 2 + 6 + tiff->size();
        out.insert(out.end(), {0xFF, 0xE1, static_cast<std::uint8_t>(len >> 8), static_cast<std::uint8_t>(len & 0xFF),
                               'E', 'x', 'i', 'f', 0, 0});
        out.insert(out.end(), tiff->begin(), tiff->end());
    }
    out.insert(out.end(), {0xFF, 0xDA, 0x00, 0x08, 0x01, 0x01, 0x00, 0x00, 0x3F, 0x00, 0x12, 0x34, 0xFF, 0xD9});
    return out;
}

/// A camera body record: Make/Model in IFD0, exposure/aperture/focal length
/// in the Exif sub-IFD.
inline TiffBuilder camera_record(bool big_endian, const std::string& make, const std::string& model,
                                 std::uint32_t exp_num, std::uint32_t exp_den, std::uint32_t fn_num,
                                 std::uint32_t fn_den, std::uint32_t fl_num, std::uint32_t fl_den) {
    TiffBuilder b(big_endian);
    b.ascii0(0x010F, make).ascii0(0x0110, model);
    b.rational_exif(0x829A, exp_num, exp_den).rational_exif(0x829D, fn_num, fn_den).rational_exif(0x920A, fl_num, fl_den);
    return b;
}

/// The committed fixture set, keyed by file name.
inline std::map<std::string, Bytes> exif_fixture_set() {
    std::map<std::string, Bytes> set;
    const Bytes canon_ii = camera_record(false, "Canon", "Canon EOS R5", 1, 200, 9, 5, 50, 1).build();
    const Bytes canon_mm = camera_record(true, "Canon", "Canon EOS R5", 1, 200, 9, 5, 50, 1).build();
    set["01_canon_ii.tif"] = canon_ii;
    set["02_canon_mm.tif"] = canon_mm;
    set["03_canon_ii.jpg"] = wrap_jpeg(&canon_ii);
    set["04_canon_mm.jpg"] = wrap_jpeg(&canon_mm);
    set["05_no_app1.jpg"] = wrap_jpeg(nullptr);
    {
        TiffBuilder b(false);
        b.rational_exif(0x829D, 9, 5);
        set["06_fnumber_only_ii.tif"] = b.build();
    }
    set["07_iphone_mm.jpg"] = [] {
        const Bytes t = camera_record(true, "Apple", "iPhone 15 Pro", 1, 120, 178, 100, 686, 100).build();
        return wrap_jpeg(&t);
    }();
    set["08_nikon_long_exposure_ii.tif"] = camera_record(false, "NIKON CORPORATION", "NIKON D850", 1, 2, 11, 1, 24, 1).build();
    {
        Bytes b = canon_ii; // IFD0 offset pointed past the end
        b[4] = 0x00;
        b[5] = 0x10;
        b[6] = 0x00;
        b[7] = 0x00;
        set["09_bad_ifd_offset_ii.tif"] = b;
    }
    {
        Bytes b = canon_mm; // IFD0 entry count inflated
        b[8] = 0xFF;
        b[9] = 0xFF;
        set["10_bad_entry_count_mm.tif"] = b;
    }
    {
        TiffBuilder b(false);
        b.ascii0(0x010F, "Canon").rational_exif(0x829D, 9, 0);
        set["11_zero_denominator_ii.tif"] = b.build();
    }
    set["12_not_an_image.bin"] = Bytes{'G', 'I', 'F', '8', '9', 'a', 0x01, 0x00, 0x01, 0x00};
    return set;
}

} // namespace tlens::fixtures
