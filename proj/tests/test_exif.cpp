// Copyright 2026 The tlens Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <filesystem>

#include "exif_builder.hpp"
#include "scenes.hpp"
#include "tlens/dataset.hpp"
#include "tlens/exif.hpp"

namespace tlens {
namespace {

using fixtures::Bytes;

ErrorCode parse_error_code(const Bytes& b) {
    try {
        parse_exif(b);
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "parse succeeded";
    return ErrorCode::InvalidArgument;
}

TEST(Exif, MinimalFNumberBlob) {
    // II*\0, IFD0 @8 = {ExifIFD -> 26}, Exif IFD @26 = {FNumber RATIONAL @44}, 9/5
    const Bytes expected = {
        'I', 'I', 42, 0, 8, 0, 0, 0,                   // header
        1, 0,                                          // IFD0: 1 entry
        0x69, 0x87, 4, 0, 1, 0, 0, 0, 26, 0, 0, 0,     // 0x8769 LONG 1 -> 26
        0, 0, 0, 0,                                    // next IFD
        1, 0,                                          // Exif IFD: 1 entry
        0x9D, 0x82, 5, 0, 1, 0, 0, 0, 44, 0, 0, 0,     // 0x829D RATIONAL 1 -> 44
        0, 0, 0, 0,                                    // next IFD
        9, 0, 0, 0, 5, 0, 0, 0,                        // 9/5
    };
    fixtures::TiffBuilder b(false);
    b.rational_exif(0x829D, 9, 5);
    EXPECT_EQ(b.build(), expected);

    const auto rec = parse_exif(expected);
    ASSERT_TRUE(rec.f_number);
    EXPECT_DOUBLE_EQ(*rec.f_number, 1.8);
    EXPECT_FALSE(rec.focal_length_mm);
    EXPECT_FALSE(rec.exposure_time_s);
    EXPECT_FALSE(rec.make);
    EXPECT_FALSE(rec.model);
}

TEST(Exif, FullRecordBothByteOrders) {
    const auto ii = fixtures::camera_record(false, "Canon", "Canon EOS R5", 1, 200, 9, 5, 50, 1).build();
    const auto mm = fixtures::camera_record(true, "Canon", "Canon EOS R5", 1, 200, 9, 5, 50, 1).build();
    EXPECT_NE(ii, mm);
    const auto a = parse_exif(ii);
    EXPECT_EQ(a, parse_exif(mm));
    EXPECT_DOUBLE_EQ(*a.f_number, 1.8);
    EXPECT_DOUBLE_EQ(*a.focal_length_mm, 50.0);
    EXPECT_DOUBLE_EQ(*a.exposure_time_s, 0.005);
    EXPECT_EQ(*a.make, "Canon");
    EXPECT_EQ(*a.model, "Canon EOS R5");
}

TEST(Exif, ByteOrderSymmetryProperty) {
    fixtures::Rng rng(77);
    for (int trial = 0; trial < 200; ++trial) {
        const auto num = [&] { return static_cast<std::uint32_t>(1 + rng.index(100000)); };
        std::string make(1 + rng.index(12), 'a');
        for (char& c : make)
            c = static_cast<char>('A' + rng.index(26));
        const std::uint32_t v[6] = {num(), num(), num(), num(), num(), num()};
        const auto ii = fixtures::camera_record(false, make, make + " X", v[0], v[1], v[2], v[3], v[4], v[5]).build();
        const auto mm = fixtures::camera_record(true, make, make + " X", v[0], v[1], v[2], v[3], v[4], v[5]).build();
        const auto rec = parse_exif(ii);
        EXPECT_EQ(rec, parse_exif(mm));
        EXPECT_DOUBLE_EQ(*rec.f_number, double(v[2]) / v[3]);
        EXPECT_EQ(*rec.make, make);
    }
}

TEST(Exif, JpegWithoutApp1HasNoFields) {
    const auto rec = parse_exif(fixtures::wrap_jpeg(nullptr));
    EXPECT_EQ(rec, ExifRecord{});
}

TEST(Exif, JpegWrapsTiff) {
    const auto tiff = fixtures::camera_record(true, "Apple", "iPhone 15 Pro", 1, 120, 178, 100, 686, 100).build();
    const auto rec = parse_exif(fixtures::wrap_jpeg(&tiff));
    EXPECT_DOUBLE_EQ(*rec.f_number, 1.78);
    EXPECT_EQ(*rec.make, "Apple");
}

TEST(Exif, IfdOffsetPastEndIsTruncated) {
    auto b = fixtures::camera_record(false, "Canon", "R5", 1, 200, 9, 5, 50, 1).build();
    b[4] = static_cast<std::uint8_t>(b.size() + 4);
    b[5] = 0;
    EXPECT_EQ(parse_error_code(b), ErrorCode::TruncatedExif);
}

TEST(Exif, InflatedEntryCountIsMalformed) {
    auto b = fixtures::camera_record(true, "Canon", "R5", 1, 200, 9, 5, 50, 1).build();
    b[8] = 0x01;
    b[9] = 0x00;
    EXPECT_EQ(parse_error_code(b), ErrorCode::MalformedIfd);
}

TEST(Exif, ZeroDenominator) {
    fixtures::TiffBuilder b(false);
    b.rational_exif(0x920A, 50, 0);
    EXPECT_EQ(parse_error_code(b.build()), ErrorCode::ZeroDenominator);
}

TEST(Exif, NotAnImage) {
    EXPECT_EQ(parse_error_code({'G', 'I', 'F', '8', '9', 'a'}), ErrorCode::NotAnImage);
    EXPECT_EQ(parse_error_code({}), ErrorCode::NotAnImage);
}

TEST(Exif, ExifPointerLoopIsRejected) {
    // IFD0 whose Exif pointer refers back to IFD0 itself.
    Bytes b = {'I', 'I', 42, 0, 8, 0, 0, 0, 1, 0, 0x69, 0x87, 4, 0, 1, 0, 0, 0, 8, 0, 0, 0, 0, 0, 0, 0};
    EXPECT_EQ(parse_error_code(b), ErrorCode::MalformedIfd);
}

TEST(Exif, TruncatedJpegSegment) {
    const auto tiff = fixtures::camera_record(false, "Canon", "R5", 1, 200, 9, 5, 50, 1).build();
    auto jpeg = fixtures::wrap_jpeg(&tiff);
    jpeg.resize(40);
    EXPECT_EQ(parse_error_code(jpeg), ErrorCode::TruncatedExif);
}

TEST(Exif, ZeroValuedRationalReadsAsAbsent) {
    fixtures::TiffBuilder b(false);
    b.rational_exif(0x829D, 0, 1);
    EXPECT_FALSE(parse_exif(b.build()).f_number);
}

TEST(Exif, CommittedFixturesAreByteExact) {
    namespace fs = std::filesystem;
    const fs::path dir = fs::path(TLENS_TEST_DATA) / "exif";
    const auto set = fixtures::exif_fixture_set();
    EXPECT_EQ(set.size(), 12u);
    for (const auto& [name, bytes] : set) {
        const auto committed = read_file_bytes((dir / name).string());
        EXPECT_EQ(committed, bytes) << name;
    }
}

/// Random byte flips, insertions and truncations of valid blobs. Built with
/// AddressSanitizer so any out-of-range read aborts the test.
TEST(Exif, MutationFuzz) {
    std::vector<Bytes> seeds;
    for (const auto& [name, bytes] : fixtures::exif_fixture_set())
        seeds.push_back(bytes);
    fixtures::Rng rng(2024);
    int parsed = 0, rejected = 0;
    for (int iter = 0; iter < 10000; ++iter) {
        Bytes b = seeds[static_cast<std::size_t>(rng.index(static_cast<int>(seeds.size())))];
        const int mutations = 1 + rng.index(6);
        for (int m = 0; m < mutations && !b.empty(); ++m) {
            const auto at = static_cast<std::size_t>(rng.index(static_cast<int>(b.size())));
            switch (rng.index(4)) {
            case 0: b[at] = static_cast<std::uint8_t>(rng.index(256)); break;
            case 1: b[at] ^= static_cast<std::uint8_t>(1u << rng.index(8)); break;
            case 2: b.resize(at); break;
            default: b.insert(b.begin() + static_cast<std::ptrdiff_t>(at), static_cast<std::uint8_t>(rng.index(256))); break;
            }
        }
        // Copy into an exactly-sized heap buffer so ASan flags overreads.
        auto exact = std::make_unique<std::uint8_t[]>(b.size() + (b.empty() ? 1 : 0));
        std::copy(b.begin(), b.end(), exact.get());
        try {
            const auto rec = parse_exif(std::span<const std::uint8_t>(exact.get(), b.size()));
            for (const auto& v : {rec.f_number, rec.focal_length_mm, rec.exposure_time_s}) {
                if (v) {
                    EXPECT_TRUE(std::isfinite(*v) && *v > 0.0);
                }
            }
            ++parsed;
        } catch (const Error&) {
            ++rejected;
        }
    }
    EXPECT_EQ(parsed + rejected, 10000);
}

} // namespace
} // namespace tlens
