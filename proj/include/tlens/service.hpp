// Copyright 2026 The tlens Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

/**
 * @file service.hpp
 * @brief HTTP render service for interactive aperture / focus control.
 *
 *   POST   /session            multipart: image (PNG), depth (PFM or TLDEPTH1),
 *                              optional saliency (PFM or TLDEPTH1)
 *   POST   /render             JSON render request -> 16-bit PNG
 *   POST   /sweep              JSON render request + f_numbers -> energies
 *   GET    /session/{id}/meta  JSON session summary
 *   DELETE /session/{id}
 *
 * Errors are JSON {"error": code, "message": text} with 400 for validation,
 * 404 for unknown sessions and 422 for a singular lens.
 */

#include <httplib.h>
#include <json.hpp>

#include <cstdlib>
#include <iomanip>
#include <list>
#include <memory>
#include <mutex>
#include <random>
#include <sstream>
#include <string>
#include <unordered_map>

#include "tlens/io.hpp"
#include "tlens/metrics.hpp"
#include "tlens/pipeline.hpp"

namespace tlens::service {

using json = nlohmann::json;

struct ServiceConfig {
    std::string host = "127.0.0.1";
    int port = 8080;
    std::size_t max_sessions = 8;
    int histogram_bins = 32;

    /// TLENS_PORT, TLENS_HOST and TLENS_MAX_SESSIONS override the defaults.
    static ServiceConfig from_env() {
        ServiceConfig c;
        if (const char* v = std::getenv("TLENS_PORT"))
            c.port = std::atoi(v);
        if (const char* v = std::getenv("TLENS_HOST"))
            c.host = v;
        if (const char* v = std::getenv("TLENS_MAX_SESSIONS"))
            c.max_sessions = static_cast<std::size_t>(std::max(1, std::atoi(v)));
        return c;
    }
};

/// Memory-resident sessions with least-recently-used eviction. Scenes are
/// immutable once stored, so renders share them without further locking.
class SessionStore {
public:
    explicit SessionStore(std::size_t capacity) : capacity_(std::max<std::size_t>(1, capacity)) {}

    std::string add(Scene scene) {
        auto ptr = std::make_shared<const Scene>(std::move(scene));
        std::lock_guard lock(mutex_);
        std::string id = next_id();
        lru_.push_front(id);
        sessions_[id] = {ptr, lru_.begin()};
        while (sessions_.size() > capacity_) {
            sessions_.erase(lru_.back());
            lru_.pop_back();
        }
        return id;
    }

    std::shared_ptr<const Scene> get(const std::string& id) {
        std::lock_guard lock(mutex_);
        auto it = sessions_.find(id);
        if (it == sessions_.end())
            throw Error(ErrorCode::UnknownSession, "no session '" + id + "'");
        lru_.splice(lru_.begin(), lru_, it->second.position);
        return it->second.scene;
    }

    bool erase(const std::string& id) {
        std::lock_guard lock(mutex_);
        auto it = sessions_.find(id);
        if (it == sessions_.end())
            return false;
        lru_.erase(it->second.position);
        sessions_.erase(it);
        return true;
    }

    std::size_t size() const {
        std::lock_guard lock(mutex_);
        return sessions_.size();
    }

private:
    struct Slot {
        std::shared_ptr<const Scene> scene;
        std::list<std::string>::iterator position;
    };

    std::string next_id() {
        std::ostringstream os;
        os << std::hex << std::setw(16) << std::setfill('0') << rng_();
        return os.str();
    }

    std::size_t capacity_;
    mutable std::mutex mutex_;
    std::list<std::string> lru_;
    std::unordered_map<std::string, Slot> sessions_;
    std::mt19937_64 rng_{std::random_device{}()};
};

inline int http_status(ErrorCode code) {
    switch (code) {
    case ErrorCode::UnknownSession: return 404;
    case ErrorCode::SingularLens: return 422;
    default: return 400;
    }
}

inline std::string format_number(double v) {
    std::ostringstream os;
    os << std::setprecision(10) << v;
    return os.str();
}

inline json session_summary(const std::string& id, const Scene& scene, int bins) {
    auto [lo, hi] = min_max(scene.depth);
    std::vector<std::size_t> counts(static_cast<std::size_t>(bins), 0);
    const double span = static_cast<double>(hi) - lo;
    for (float d : scene.depth.samples()) {
        int b = span > 0.0 ? static_cast<int>((d - lo) / span * bins) : 0;
        counts[static_cast<std::size_t>(std::clamp(b, 0, bins - 1))]++;
    }
    return json{
        {"session_id", id},
        {"width", scene.image.width()},
        {"height", scene.image.height()},
        {"channels", scene.image.channels()},
        {"depth_min", lo},
        {"depth_max", hi},
        {"depth_histogram", counts},
        {"default_focus_distance", scene.default_focus.focus_distance},
        {"focus_source", to_string(scene.default_focus.source)},
    };
}

namespace detail {

inline std::optional<double> optional_number(const json& body, const char* key) {
    auto it = body.find(key);
    if (it == body.end() || it->is_null())
        return std::nullopt;
    if (!it->is_number())
        throw Error(ErrorCode::InvalidArgument, std::string(key) + " must be a number");
    return it->get<double>();
}

} // namespace detail

struct RenderRequest {
    std::string session_id;
    RenderSettings settings;
};

/// Fields: session_id, f_number, focal_length_mm, focus_distance,
/// focus_scale, coc_max_px, pixels_per_unit, output, allow_defaults.
inline RenderRequest parse_render_request(const std::string& text) {
    json body;
    try {
        body = json::parse(text);
    } catch (const json::exception&) {
        throw Error(ErrorCode::InvalidArgument, "request body is not valid JSON");
    }
    if (!body.is_object())
        throw Error(ErrorCode::InvalidArgument, "request body must be a JSON object");
    RenderRequest req;
    auto sid = body.find("session_id");
    if (sid == body.end() || !sid->is_string())
        throw Error(ErrorCode::InvalidArgument, "session_id is required");
    req.session_id = sid->get<std::string>();
    auto& o = req.settings.overrides;
    o.f_number = detail::optional_number(body, "f_number");
    o.focal_length = detail::optional_number(body, "focal_length_mm");
    o.focus_distance = detail::optional_number(body, "focus_distance");
    o.focus_scale = detail::optional_number(body, "focus_scale");
    o.coc_max_px = detail::optional_number(body, "coc_max_px");
    o.pixels_per_unit = detail::optional_number(body, "pixels_per_unit");
    if (auto it = body.find("output"); it != body.end() && !it->is_null()) {
        if (!it->is_string())
            throw Error(ErrorCode::InvalidArgument, "output must be a string");
        req.settings.output = parse_render_output(it->get<std::string>());
    }
    if (auto it = body.find("allow_defaults"); it != body.end() && it->is_boolean())
        req.settings.resolve.allow_defaults = it->get<bool>();
    return req;
}

class RenderService {
public:
    explicit RenderService(ServiceConfig config = {}) : config_(std::move(config)), sessions_(config_.max_sessions) {
        routes();
    }

    httplib::Server& server() noexcept { return server_; }
    SessionStore& sessions() noexcept { return sessions_; }
    const ServiceConfig& config() const noexcept { return config_; }

    /// Blocks until stop().
    bool listen() { return server_.listen(config_.host, config_.port); }

    /// Binds an ephemeral port and returns it; call listen_after_bind() next.
    int bind_any_port() { return server_.bind_to_any_port(config_.host); }
    bool listen_after_bind() { return server_.listen_after_bind(); }

    void stop() { server_.stop(); }

private:
    static void send_error(httplib::Response& res, ErrorCode code, const std::string& message) {
        res.status = http_status(code);
        res.set_content(json{{"error", code_name(code)}, {"message", message}}.dump(), "application/json");
    }

    template <typename Fn>
    static auto guarded(Fn fn) {
        return [fn](const httplib::Request& req, httplib::Response& res) {
            try {
                fn(req, res);
            } catch (const Error& e) {
                send_error(res, e.code(), e.what());
            }
        };
    }

    void routes() {
        server_.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                     {"Access-Control-Allow-Headers", "Content-Type"},
                                     {"Access-Control-Allow-Methods", "GET, POST, DELETE, OPTIONS"},
                                     {"Access-Control-Expose-Headers",
                                      "X-Focus-Distance, X-Focus-Source, X-Coc-Min, X-Coc-Mean, X-Coc-Max, X-Signal-Energy"}});
        server_.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
        server_.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
            std::string what = "internal error";
            try {
                std::rethrow_exception(ep);
            } catch (const std::exception& e) {
                what = e.what();
            } catch (...) {
            }
            res.status = 500;
            res.set_content(json{{"error", "internal"}, {"message", what}}.dump(), "application/json");
        });

        server_.Post("/session", guarded([this](const httplib::Request& req, httplib::Response& res) {
            if (!req.is_multipart_form_data() || !req.has_file("image") || !req.has_file("depth"))
                throw Error(ErrorCode::InvalidArgument, "multipart fields 'image' and 'depth' are required");
            auto bytes = [](const std::string& s) {
                return std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(s.data()), s.size());
            };
            auto image = io::decode_png(bytes(req.get_file_value("image").content));
            auto depth = io::decode_field(bytes(req.get_file_value("depth").content));
            std::optional<SaliencyMap<float>> saliency;
            if (req.has_file("saliency"))
                saliency = io::decode_field(bytes(req.get_file_value("saliency").content));
            Scene scene = make_scene(std::move(image), std::move(depth), std::move(saliency));
            json summary = session_summary("", scene, config_.histogram_bins);
            summary["session_id"] = sessions_.add(std::move(scene));
            res.status = 201;
            res.set_content(summary.dump(), "application/json");
        }));

        server_.Get(R"(/session/([0-9a-f]+)/meta)", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const std::string id = req.matches[1];
            auto scene = sessions_.get(id);
            res.set_content(session_summary(id, *scene, config_.histogram_bins).dump(), "application/json");
        }));

        server_.Delete(R"(/session/([0-9a-f]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const std::string id = req.matches[1];
            if (!sessions_.erase(id))
                throw Error(ErrorCode::UnknownSession, "no session '" + id + "'");
            res.status = 204;
        }));

        server_.Post("/render", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const RenderRequest request = parse_render_request(req.body);
            auto scene = sessions_.get(request.session_id);
            const RenderResult result = render_scene(*scene, request.settings);
            const auto png = io::encode_png16(result.image);
            res.set_header("X-Focus-Distance", format_number(result.focus.focus_distance));
            res.set_header("X-Focus-Source", to_string(result.focus.source));
            res.set_header("X-Coc-Min", format_number(result.coc.min));
            res.set_header("X-Coc-Mean", format_number(result.coc.mean));
            res.set_header("X-Coc-Max", format_number(result.coc.max));
            res.set_header("X-Signal-Energy", format_number(signal_energy(result.image).energy));
            res.set_content(std::string(png.begin(), png.end()), "image/png");
        }));

        server_.Post("/sweep", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const RenderRequest request = parse_render_request(req.body);
            std::vector<double> stops = default_apertures();
            const json body = json::parse(req.body);
            if (auto it = body.find("f_numbers"); it != body.end() && !it->is_null()) {
                if (!it->is_array())
                    throw Error(ErrorCode::InvalidArgument, "f_numbers must be an array");
                stops.clear();
                for (const auto& v : *it) {
                    if (!v.is_number())
                        throw Error(ErrorCode::InvalidArgument, "f_numbers must hold numbers");
                    stops.push_back(v.get<double>());
                }
            }
            auto scene = sessions_.get(request.session_id);
            RenderSettings settings = request.settings;
            settings.output = RenderOutput::Image;
            const LensParams base = resolve_lens_params(settings.exif, settings.overrides, scene->image.width(),
                                                        scene->default_focus, settings.resolve);
            const auto frames = sweep_apertures(scene->image, scene->depth, base, stops);
            std::vector<double> energies;
            for (const auto& f : frames)
                energies.push_back(signal_energy(f).energy);
            json out{{"f_numbers", stops},
                     {"energies", energies},
                     {"focus_distance", base.focus_distance},
                     {"blur_monotonicity", blur_monotonicity(energies)}};
            // Frames are opt-in: base64 PNGs in aperture order.
            if (auto it = body.find("frames"); it != body.end() && it->is_boolean() && it->get<bool>()) {
                json pngs = json::array();
                for (const auto& f : frames) {
                    const io::Bytes png = io::encode_png16(f);
                    pngs.push_back(httplib::detail::base64_encode(std::string(png.begin(), png.end())));
                }
                out["frames"] = std::move(pngs);
            }
            res.set_content(out.dump(), "application/json");
        }));
    }

    ServiceConfig config_;
    SessionStore sessions_;
    httplib::Server server_;
};

} // namespace tlens::service
