// Copyright 2026 The tlens Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

/**
 * @file dataset.hpp
 * @brief Deep / shallow depth-of-field corpus partitioning from EXIF.
 *
 * Shallow: f-number < 10, not a smartphone, blur label absent or "desirable".
 * Deep:    10 <= f-number <= 50, exposure absent or <= 0.1 s, blur label
 *          absent or "none".
 * Everything else is rejected with the first rule it failed.
 */

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iterator>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "tlens/exif.hpp"

namespace tlens {

enum class BlurLabel { None, Desirable, Undesirable };

enum class RejectReason {
    NoAperture,
    ApertureOutOfRange,
    Smartphone,
    LongExposure,
    BlurLabelMismatch,
    ParseError,
};

constexpr std::string_view reason_code(RejectReason r) noexcept {
    switch (r) {
    case RejectReason::NoAperture: return "no_aperture";
    case RejectReason::ApertureOutOfRange: return "aperture_out_of_range";
    case RejectReason::Smartphone: return "smartphone";
    case RejectReason::LongExposure: return "long_exposure";
    case RejectReason::BlurLabelMismatch: return "blur_label_mismatch";
    case RejectReason::ParseError: return "parse_error";
    }
    return "unknown";
}

struct DofBucket {
    enum class Kind { DeepDoF, ShallowDoF, Rejected };
    Kind kind = Kind::Rejected;
    RejectReason reason = RejectReason::NoAperture; ///< meaningful only when rejected

    static DofBucket deep() { return {Kind::DeepDoF, {}}; }
    static DofBucket shallow() { return {Kind::ShallowDoF, {}}; }
    static DofBucket rejected(RejectReason r) { return {Kind::Rejected, r}; }

    bool is_rejected() const noexcept { return kind == Kind::Rejected; }

    friend bool operator==(const DofBucket& a, const DofBucket& b) noexcept {
        return a.kind == b.kind && (a.kind != Kind::Rejected || a.reason == b.reason);
    }
};

inline constexpr double kShallowApertureBelow = 10.0;
inline constexpr double kDeepApertureMax = 50.0;
inline constexpr double kDeepExposureMaxSeconds = 0.1;

inline std::vector<std::string> default_smartphone_makes() { return {"Apple", "samsung", "Google", "Xiaomi"}; }

inline std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

/// Case-insensitive substring match of the camera make against the denylist.
inline bool is_smartphone(const std::optional<std::string>& make, const std::vector<std::string>& denylist) {
    if (!make)
        return false;
    const std::string m = to_lower(*make);
    return std::any_of(denylist.begin(), denylist.end(), [&](const std::string& name) {
        return !name.empty() && m.find(to_lower(name)) != std::string::npos;
    });
}

inline DofBucket classify_dof_bucket(const ExifRecord& rec, const std::vector<std::string>& denylist,
                                     std::optional<BlurLabel> blur_label = std::nullopt) {
    if (!rec.f_number)
        return DofBucket::rejected(RejectReason::NoAperture);
    const double n = *rec.f_number;
    if (n < kShallowApertureBelow) {
        if (is_smartphone(rec.make, denylist))
            return DofBucket::rejected(RejectReason::Smartphone);
        if (blur_label && *blur_label != BlurLabel::Desirable)
            return DofBucket::rejected(RejectReason::BlurLabelMismatch);
        return DofBucket::shallow();
    }
    if (n <= kDeepApertureMax) {
        if (rec.exposure_time_s && *rec.exposure_time_s > kDeepExposureMaxSeconds)
            return DofBucket::rejected(RejectReason::LongExposure);
        if (blur_label && *blur_label != BlurLabel::None)
            return DofBucket::rejected(RejectReason::BlurLabelMismatch);
        return DofBucket::deep();
    }
    return DofBucket::rejected(RejectReason::ApertureOutOfRange);
}

struct PartitionConfig {
    std::vector<std::string> denylist = default_smartphone_makes();
    std::map<std::string, BlurLabel> blur_labels; ///< keyed by manifest path
};

struct PartitionEntry {
    std::string path;
    ExifRecord exif;
    DofBucket bucket;
};

struct PartitionReport {
    std::vector<PartitionEntry> entries; ///< input order
    std::size_t deep = 0;
    std::size_t shallow = 0;
    std::size_t rejected = 0;
    std::map<std::string, std::size_t> reasons;
};

inline std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorCode::IoError, "cannot open " + path);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Parses and classifies every path in order. Per-file failures become
/// parse_error rejections; the stream never aborts.
inline PartitionReport partition_corpus(const std::vector<std::string>& manifest, const PartitionConfig& config = {}) {
    PartitionReport report;
    report.entries.reserve(manifest.size());
    for (const std::string& path : manifest) {
        PartitionEntry entry{path, {}, DofBucket::rejected(RejectReason::ParseError)};
        try {
            const auto bytes = read_file_bytes(path);
            entry.exif = parse_exif(bytes);
            std::optional<BlurLabel> label;
            if (auto it = config.blur_labels.find(path); it != config.blur_labels.end())
                label = it->second;
            entry.bucket = classify_dof_bucket(entry.exif, config.denylist, label);
        } catch (const Error&) {
            entry.exif = {};
        }
        switch (entry.bucket.kind) {
        case DofBucket::Kind::DeepDoF: ++report.deep; break;
        case DofBucket::Kind::ShallowDoF: ++report.shallow; break;
        case DofBucket::Kind::Rejected:
            ++report.rejected;
            ++report.reasons[std::string(reason_code(entry.bucket.reason))];
            break;
        }
        report.entries.push_back(std::move(entry));
    }
    return report;
}

namespace detail {
inline std::string field_or_na(const std::optional<double>& v) {
    if (!v)
        return "NA";
    std::ostringstream os;
    os.precision(10);
    os << *v;
    return os.str();
}
} // namespace detail

/// "path<TAB>f_number<TAB>focal_length<TAB>exposure"; absent values print as NA.
inline void write_manifest(std::ostream& out, const PartitionReport& report, DofBucket::Kind kind) {
    for (const auto& e : report.entries)
        if (e.bucket.kind == kind)
            out << e.path << '\t' << detail::field_or_na(e.exif.f_number) << '\t'
                << detail::field_or_na(e.exif.focal_length_mm) << '\t' << detail::field_or_na(e.exif.exposure_time_s)
                << '\n';
}

/// "path<TAB>reason_code" per rejected file.
inline void write_rejection_log(std::ostream& out, const PartitionReport& report) {
    for (const auto& e : report.entries)
        if (e.bucket.is_rejected())
            out << e.path << '\t' << reason_code(e.bucket.reason) << '\n';
}

/// Non-empty, non-comment lines with trailing whitespace and CR stripped.
inline std::vector<std::string> read_lines(std::istream& in) {
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t'))
            line.pop_back();
        if (!line.empty() && line.front() != '#')
            lines.push_back(line);
    }
    return lines;
}

} // namespace tlens
