// Copyright 2026 The tlens Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <png.h>

#include "scenes.hpp"
#include "tlens/io.hpp"

namespace tlens {
namespace {

Image<float> random_image(int w, int h, int c, std::uint64_t seed) {
    fixtures::Rng rng(seed);
    Image<float> img(w, h, c);
    for (float& v : img.samples())
        v = static_cast<float>(rng.uniform());
    return img;
}

ErrorCode error_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error";
    return ErrorCode::InvalidArgument;
}

TEST(Png, SixteenBitRoundTripWithinHalfCode) {
    for (int c : {1, 3}) {
        const auto img = random_image(13, 7, c, 5 + c);
        const auto back = io::decode_png(io::encode_png16(img));
        ASSERT_TRUE(back.same_size(img));
        ASSERT_EQ(back.channels(), c);
        for (std::size_t i = 0; i < img.samples().size(); ++i)
            EXPECT_NEAR(back.samples()[i], img.samples()[i], 0.5 / 65535.0 + 1e-7);
    }
}

TEST(Png, EncodingIsDeterministicAndClamps) {
    Image<float> img(2, 1, 1);
    img(0, 0) = -0.5f;
    img(1, 0) = 2.0f;
    const auto a = io::encode_png16(img);
    EXPECT_EQ(a, io::encode_png16(img));
    const auto back = io::decode_png(a);
    EXPECT_EQ(back(0, 0), 0.0f);
    EXPECT_EQ(back(1, 0), 1.0f);
}

TEST(Png, ReadsEightBitGray) {
    // Hand-encode an 8-bit gray PNG through libpng directly.
    io::Bytes out;
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    png_set_write_fn(png, &out, io::detail::png_write_cb, io::detail::png_flush_cb);
    png_set_IHDR(png, info, 3, 1, 8, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    png_byte row[3] = {0, 51, 255};
    png_write_row(png, row);
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);

    const auto img = io::decode_png(out);
    EXPECT_EQ(img.width(), 3);
    EXPECT_EQ(img.channels(), 1);
    EXPECT_FLOAT_EQ(img(1, 0), 0.2f);
    EXPECT_FLOAT_EQ(img(2, 0), 1.0f);
}

TEST(Png, RejectsGarbage) {
    EXPECT_EQ(error_of([] { io::decode_png(io::Bytes{1, 2, 3}); }), ErrorCode::FormatError);
    auto good = io::encode_png16(random_image(4, 4, 3, 1));
    good.resize(good.size() / 2);
    EXPECT_EQ(error_of([&] { io::decode_png(good); }), ErrorCode::FormatError);
}

TEST(Pfm, RoundTripIsExact) {
    const auto f = random_image(9, 5, 1, 11);
    EXPECT_EQ(io::decode_pfm(io::encode_pfm(f)), f);
}

TEST(Pfm, FirstStoredRowIsTheBottomRow) {
    Field<float> f(2, 2, 1);
    f(0, 0) = 1.0f; // top-left
    f(0, 1) = 2.0f; // bottom-left
    const auto b = io::encode_pfm(f);
    const std::string header = "Pf\n2 2\n-1.0\n";
    ASSERT_EQ(std::string(b.begin(), b.begin() + header.size()), header);
    float first;
    std::memcpy(&first, b.data() + header.size(), 4);
    EXPECT_EQ(first, 2.0f);
}

TEST(Pfm, ReadsBigEndianAndColor) {
    std::string header = "PF\n1 2\n1.0\n";
    io::Bytes b(header.begin(), header.end());
    // bottom row then top row; each pixel r,g,b as big-endian floats.
    for (float v : {3.0f, 0.0f, 0.0f, 7.0f, 0.0f, 0.0f}) {
        const auto u = std::bit_cast<std::uint32_t>(v);
        for (int s = 24; s >= 0; s -= 8)
            b.push_back(static_cast<std::uint8_t>(u >> s));
    }
    const auto f = io::decode_pfm(b);
    EXPECT_EQ(f(0, 0), 7.0f);
    EXPECT_EQ(f(0, 1), 3.0f);
}

TEST(Pfm, RejectsBadPayload) {
    auto b = io::encode_pfm(random_image(3, 3, 1, 2));
    b.pop_back();
    EXPECT_EQ(error_of([&] { io::decode_pfm(b); }), ErrorCode::FormatError);
    const std::string bad = "Pf\n0 3\n-1.0\n";
    EXPECT_EQ(error_of([&] { io::decode_pfm(io::Bytes(bad.begin(), bad.end())); }), ErrorCode::FormatError);
}

TEST(RawDepth, RoundTripAndDetection) {
    const auto f = random_image(6, 4, 1, 3);
    const auto b = io::encode_raw_depth(f);
    EXPECT_EQ(b.size(), 16u + 4u * 24u);
    EXPECT_EQ(io::decode_field(b), f);
    EXPECT_EQ(io::decode_field(io::encode_pfm(f)), f);
    auto short_b = b;
    short_b.resize(20);
    EXPECT_EQ(error_of([&] { io::decode_raw_depth(short_b); }), ErrorCode::FormatError);
}

TEST(LabelStackFormat, RoundTrip) {
    std::vector<LabelStack::Top3> labels;
    for (std::uint16_t i = 0; i < 6; ++i)
        labels.push_back({i, static_cast<std::uint16_t>(i + 300), static_cast<std::uint16_t>(i + 1000)});
    const LabelStack s(3, 2, labels);
    const auto back = io::decode_label_stack(io::encode_label_stack(s));
    EXPECT_EQ(back.width(), 3);
    EXPECT_EQ(back.height(), 2);
    EXPECT_TRUE(std::equal(back.labels().begin(), back.labels().end(), labels.begin(), labels.end()));
}

TEST(Files, MissingFileIsIoError) {
    EXPECT_EQ(error_of([] { io::read_file("/nonexistent/tlens/file.png"); }), ErrorCode::IoError);
}

} // namespace
} // namespace tlens
