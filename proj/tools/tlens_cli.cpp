// Copyright 2026 The tlens Authors
// SPDX-License-Identifier: Apache-2.0

// tlens: command-line front end for defocus rendering, blur metrics, corpus
// partitioning and the HTTP render service.

#include <CLI11.hpp>

#include <csignal>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "tlens/service.hpp"
#include "tlens/tlens.hpp"

namespace {

using namespace tlens;

struct LensFlags {
    std::string image;
    std::string depth;
    std::string saliency;
    std::string exif;
    std::optional<double> f_number;
    std::optional<double> focal;
    std::optional<double> fd;
    std::optional<double> fs;
    std::optional<double> coc_max;
    std::optional<double> ppu;
    bool no_defaults = false;
};

void add_lens_flags(CLI::App* cmd, LensFlags& f) {
    cmd->add_option("--image", f.image, "All-in-focus PNG (8 or 16 bit)")->required();
    cmd->add_option("--depth", f.depth, "Depth map (PFM or TLDEPTH1)")->required();
    cmd->add_option("--saliency", f.saliency, "Saliency map (PFM or TLDEPTH1); stub saliency when omitted");
    cmd->add_option("--exif", f.exif, "JPEG/TIFF file to take FNumber and FocalLength from");
    cmd->add_option("--fnumber", f.f_number, "Aperture f-number N");
    cmd->add_option("--focal", f.focal, "Focal length in mm");
    cmd->add_option("--fd", f.fd, "Focus distance in depth-map units; saliency-weighted when omitted");
    cmd->add_option("--fs", f.fs, "Focus distance scale");
    cmd->add_option("--coc-max", f.coc_max, "CoC clamp in pixels (default 64 px per 1024 px of width)");
    cmd->add_option("--ppu", f.ppu, "Pixels per length unit on the sensor (default width/36)");
    cmd->add_flag("--no-defaults", f.no_defaults, "Fail instead of falling back to f=50mm, N=8");
}

Scene load_scene(const LensFlags& f) {
    std::optional<SaliencyMap<float>> saliency;
    if (!f.saliency.empty())
        saliency = io::read_field(f.saliency);
    return make_scene(io::read_png(f.image), io::read_field(f.depth), std::move(saliency));
}

RenderSettings settings_from(const LensFlags& f) {
    RenderSettings s;
    if (!f.exif.empty())
        s.exif = parse_exif(io::read_file(f.exif));
    s.overrides.f_number = f.f_number;
    s.overrides.focal_length = f.focal;
    s.overrides.focus_distance = f.fd;
    s.overrides.focus_scale = f.fs;
    s.overrides.coc_max_px = f.coc_max;
    s.overrides.pixels_per_unit = f.ppu;
    s.resolve.allow_defaults = !f.no_defaults;
    return s;
}

std::string replace_extension(const std::string& path, const std::string& ext) {
    const auto slash = path.find_last_of('/');
    const auto dot = path.find_last_of('.');
    if (dot != std::string::npos && (slash == std::string::npos || dot > slash))
        return path.substr(0, dot) + ext;
    return path + ext;
}

void write_report(const std::string& path, const Report& report) {
    std::ofstream out(path);
    if (!out)
        throw Error(ErrorCode::IoError, "cannot create " + path);
    out << report;
}

std::vector<double> parse_list(const std::string& text) {
    std::vector<double> values;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            values.push_back(std::stod(item, &used));
            if (used != item.size())
                throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw Error(ErrorCode::InvalidArgument, "bad number '" + item + "' in list");
        }
    }
    return values;
}

std::vector<std::string> read_list_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw Error(ErrorCode::IoError, "cannot open " + path);
    return read_lines(in);
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out)
        throw Error(ErrorCode::IoError, "cannot create " + path);
    return out;
}

service::RenderService* g_service = nullptr;

extern "C" void stop_service(int) {
    if (g_service)
        g_service->stop();
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Thin-lens defocus rendering and blur metrics"};
    app.require_subcommand(1);

    // render
    LensFlags render_flags;
    std::string render_out;
    std::string render_report;
    std::string render_output = "image";
    auto* render = app.add_subcommand("render", "Render one defocused image");
    add_lens_flags(render, render_flags);
    render->add_option("--out", render_out, "Output PNG (16 bit)")->required();
    render->add_option("--report", render_report, "Report path (default: <out>.report)");
    render->add_option("--output", render_output, "image | coc_heatmap | in_focus_mask");

    // sweep
    LensFlags sweep_flags;
    std::string sweep_out;
    std::string sweep_report;
    std::string sweep_apertures_text = "1.8,2.8,4,5.6,8,11,16,22";
    auto* sweep = app.add_subcommand("sweep", "Render an aperture sweep and report blur monotonicity");
    add_lens_flags(sweep, sweep_flags);
    sweep->add_option("--apertures", sweep_apertures_text, "Comma-separated ascending f-numbers");
    sweep->add_option("--out", sweep_out, "Output prefix; frames are <prefix>_NN.png")->required();
    sweep->add_option("--report", sweep_report, "Report path (default: <prefix>.report)");

    // metrics
    auto* metrics = app.add_subcommand("metrics", "Blur and consistency metrics on files");
    metrics->require_subcommand(1);
    std::string energy_image;
    std::string energy_domain = "spatial";
    auto* energy = metrics->add_subcommand("energy", "Signal energy of an image");
    energy->add_option("--image", energy_image)->required();
    energy->add_option("--domain", energy_domain, "spatial | spectral | both");

    std::vector<std::string> mono_images;
    auto* mono = metrics->add_subcommand("monotonicity", "Blur monotonicity over images ordered by ascending f-number");
    mono->add_option("--images", mono_images)->required();

    std::vector<std::string> consistency_stacks;
    std::string consistency_mode = "intersection";
    auto* consistency = metrics->add_subcommand("consistency", "Top-3 content consistency over TLSEG1 label stacks");
    consistency->add_option("--stacks", consistency_stacks)->required();
    consistency->add_option("--mode", consistency_mode, "intersection | adjacent");

    std::string theorem_image;
    std::string theorem_kernel;
    int theorem_box = 3;
    auto* theorem = metrics->add_subcommand("theorem-check", "Circular convolution energy bound E(f*h) <= E(f)");
    theorem->add_option("--image", theorem_image)->required();
    theorem->add_option("--kernel", theorem_kernel, "Kernel taps as PFM/TLDEPTH1 (non-negative, unit sum)");
    theorem->add_option("--box", theorem_box, "Box kernel size when --kernel is not given");

    // ingest
    std::string manifest_path, deep_path, shallow_path, rejected_path, denylist_path, labels_path, ingest_report;
    auto* ingest = app.add_subcommand("ingest", "Partition images into deep / shallow depth-of-field sets by EXIF");
    ingest->add_option("--manifest", manifest_path, "Newline-delimited image paths")->required();
    ingest->add_option("--deep", deep_path, "Deep DoF manifest output")->required();
    ingest->add_option("--shallow", shallow_path, "Shallow DoF manifest output")->required();
    ingest->add_option("--rejected", rejected_path, "Rejection log output")->required();
    ingest->add_option("--denylist", denylist_path, "Smartphone makes, one per line");
    ingest->add_option("--labels", labels_path, "path<TAB>none|desirable|undesirable blur labels");
    ingest->add_option("--report", ingest_report, "Count report (key=value)");

    // serve
    auto config = service::ServiceConfig::from_env();
    auto* serve = app.add_subcommand("serve", "Run the HTTP render service");
    serve->add_option("--host", config.host);
    serve->add_option("--port", config.port, "Port (env TLENS_PORT)");
    serve->add_option("--max-sessions", config.max_sessions, "LRU capacity (env TLENS_MAX_SESSIONS)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*render) {
            const Scene scene = load_scene(render_flags);
            RenderSettings settings = settings_from(render_flags);
            settings.output = parse_render_output(render_output);
            const RenderResult result = render_scene(scene, settings);
            io::write_png16(render_out, result.image);
            Report report;
            report.set("output", render_out);
            report.add_render(result);
            report.set("signal_energy", signal_energy(result.image).energy);
            write_report(render_report.empty() ? replace_extension(render_out, ".report") : render_report, report);
        } else if (*sweep) {
            const auto stops = parse_list(sweep_apertures_text);
            for (std::size_t i = 1; i < stops.size(); ++i)
                if (!(stops[i] > stops[i - 1]))
                    throw Error(ErrorCode::InvalidArgument, "apertures must be strictly ascending");
            if (stops.size() < 2)
                throw Error(ErrorCode::TooFewImages, "a sweep needs at least two apertures");
            const Scene scene = load_scene(sweep_flags);
            const RenderSettings settings = settings_from(sweep_flags);
            const LensParams base = resolve_lens_params(settings.exif, settings.overrides, scene.image.width(),
                                                        scene.default_focus, settings.resolve);
            const auto frames = sweep_apertures(scene.image, scene.depth, base, stops);
            Report report;
            report.set("focus_distance", base.focus_distance);
            std::vector<double> energies;
            for (std::size_t i = 0; i < frames.size(); ++i) {
                std::ostringstream name;
                name << sweep_out << '_' << std::setw(2) << std::setfill('0') << i << ".png";
                io::write_png16(name.str(), frames[i]);
                energies.push_back(signal_energy(frames[i]).energy);
                report.set("frame_" + std::to_string(i), name.str());
                report.set("f_number_" + std::to_string(i), stops[i]);
                report.set("energy_" + std::to_string(i), energies.back());
            }
            report.set("blur_monotonicity", blur_monotonicity(energies));
            write_report(sweep_report.empty() ? sweep_out + ".report" : sweep_report, report);
            std::cout << "blur_monotonicity=" << report.entries().back().second << '\n';
        } else if (*energy) {
            const auto img = io::read_png(energy_image);
            if (energy_domain == "spatial" || energy_domain == "both")
                std::cout << "energy_spatial=" << std::setprecision(12) << signal_energy(img, EnergyDomain::Spatial).energy << '\n';
            if (energy_domain == "spectral" || energy_domain == "both")
                std::cout << "energy_spectral=" << std::setprecision(12) << signal_energy(img, EnergyDomain::Spectral).energy << '\n';
            if (energy_domain != "spatial" && energy_domain != "spectral" && energy_domain != "both")
                throw Error(ErrorCode::InvalidArgument, "unknown domain '" + energy_domain + "'");
        } else if (*mono) {
            std::vector<Image<float>> images;
            for (const auto& p : mono_images)
                images.push_back(io::read_png(p));
            std::cout << "blur_monotonicity=" << std::setprecision(10)
                      << blur_monotonicity(std::span<const Image<float>>(images)) << '\n';
        } else if (*consistency) {
            std::vector<LabelStack> stacks;
            for (const auto& p : consistency_stacks)
                stacks.push_back(io::decode_label_stack(io::read_file(p)));
            ConsistencyMode mode;
            if (consistency_mode == "intersection")
                mode = ConsistencyMode::Intersection;
            else if (consistency_mode == "adjacent")
                mode = ConsistencyMode::AdjacentPairs;
            else
                throw Error(ErrorCode::InvalidArgument, "unknown mode '" + consistency_mode + "'");
            std::cout << "content_consistency=" << std::setprecision(10) << content_consistency(stacks, mode) << '\n';
        } else if (*theorem) {
            const auto img = io::read_png(theorem_image).cast<double>();
            ConvKernel kernel;
            if (!theorem_kernel.empty()) {
                const auto taps = io::read_field(theorem_kernel);
                kernel.width = taps.width();
                kernel.height = taps.height();
                kernel.taps.assign(taps.samples().begin(), taps.samples().end());
                // float storage: renormalize to an exact unit sum
                double sum = 0.0;
                for (double t : kernel.taps)
                    sum += t;
                if (sum > 0.0 && std::abs(sum - 1.0) < 1e-5)
                    for (double& t : kernel.taps)
                        t /= sum;
            } else {
                if (theorem_box < 1)
                    throw Error(ErrorCode::InvalidKernel, "box size must be positive");
                kernel.width = kernel.height = theorem_box;
                kernel.taps.assign(static_cast<std::size_t>(theorem_box) * theorem_box, 1.0 / (theorem_box * theorem_box));
            }
            const auto check = circular_energy_oracle(img, kernel);
            const bool holds = check.energy_after <= check.energy_before &&
                               (!check.strict_expected || check.energy_after < check.energy_before);
            std::cout << std::setprecision(12) << "energy_before=" << check.energy_before << '\n'
                      << "energy_after=" << check.energy_after << '\n'
                      << "strict_expected=" << (check.strict_expected ? "true" : "false") << '\n'
                      << "bound_holds=" << (holds ? "true" : "false") << '\n';
            if (!holds)
                return 1;
        } else if (*ingest) {
            PartitionConfig cfg;
            if (!denylist_path.empty())
                cfg.denylist = read_list_file(denylist_path);
            if (!labels_path.empty())
                for (const auto& line : read_list_file(labels_path)) {
                    const auto tab = line.rfind('\t');
                    if (tab == std::string::npos)
                        throw Error(ErrorCode::FormatError, "label line lacks a TAB: " + line);
                    const std::string value = line.substr(tab + 1);
                    BlurLabel label;
                    if (value == "none")
                        label = BlurLabel::None;
                    else if (value == "desirable")
                        label = BlurLabel::Desirable;
                    else if (value == "undesirable")
                        label = BlurLabel::Undesirable;
                    else
                        throw Error(ErrorCode::FormatError, "unknown blur label '" + value + "'");
                    cfg.blur_labels[line.substr(0, tab)] = label;
                }
            const auto report = partition_corpus(read_list_file(manifest_path), cfg);
            auto deep_out = open_out(deep_path);
            write_manifest(deep_out, report, DofBucket::Kind::DeepDoF);
            auto shallow_out = open_out(shallow_path);
            write_manifest(shallow_out, report, DofBucket::Kind::ShallowDoF);
            auto rejected_out = open_out(rejected_path);
            write_rejection_log(rejected_out, report);
            Report counts;
            counts.set("deep", std::to_string(report.deep));
            counts.set("shallow", std::to_string(report.shallow));
            counts.set("rejected", std::to_string(report.rejected));
            for (const auto& [reason, n] : report.reasons)
                counts.set("rejected_" + reason, std::to_string(n));
            if (!ingest_report.empty())
                write_report(ingest_report, counts);
            std::cout << counts;
        } else if (*serve) {
            service::RenderService svc(config);
            g_service = &svc;
            std::signal(SIGINT, stop_service);
            std::signal(SIGTERM, stop_service);
            std::cerr << "listening on " << config.host << ':' << config.port << '\n';
            if (!svc.listen())
                throw Error(ErrorCode::IoError, "cannot listen on port " + std::to_string(config.port));
        }
    } catch (const Error& e) {
        std::cerr << "error=" << code_name(e.code()) << " message=\"" << e.what() << "\"\n";
        return exit_status(e.code());
    } catch (const std::exception& e) {
        std::cerr << "error=internal message=\"" << e.what() << "\"\n";
        return 1;
    }
    return 0;
}
