// Copyright 2026 The tlens Authors
// SPDX-License-Identifier: Apache-2.0

// Regenerates the committed test fixtures: golden scenes and EXIF blobs.
// usage: make_fixtures <tests/data directory>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "exif_builder.hpp"
#include "scenes.hpp"
#include "tlens/io.hpp"
#include "tlens/pipeline.hpp"

int main(int argc, char** argv) {
    if (argc != 2) {
        std::cerr << "usage: make_fixtures <data-dir>\n";
        return 2;
    }
    namespace fs = std::filesystem;
    const fs::path root = argv[1];
    fs::create_directories(root / "golden");
    fs::create_directories(root / "exif");

    for (int i = 0; i < tlens::fixtures::kGoldenCount; ++i) {
        const auto scene = tlens::fixtures::golden_scene(i);
        const std::string stem = "scene_" + std::string(i < 10 ? "0" : "") + std::to_string(i);
        tlens::io::write_png16((root / "golden" / (stem + ".png")).string(), scene.image);
        tlens::io::write_pfm((root / "golden" / (stem + ".pfm")).string(), scene.depth);
    }
    const auto lens = tlens::fixtures::golden_lens();
    tlens::Report report;
    report.set("focal_length_mm", lens.focal_length);
    report.set("focus_distance", lens.focus_distance);
    report.set("focus_scale", lens.focus_scale);
    report.set("pixels_per_unit", lens.pixels_per_unit);
    report.set("coc_max_px", lens.coc_max_px);
    std::ofstream(root / "golden" / "lens.txt") << report;

    for (const auto& [name, bytes] : tlens::fixtures::exif_fixture_set())
        tlens::io::write_file((root / "exif" / name).string(), bytes);
    std::cout << "fixtures written to " << root << '\n';
    return 0;
}
