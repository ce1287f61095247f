#include "vizex/service.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <iostream>

#include <httplib.h>

#include "vizex/io.hpp"
#include "vizex/ppm.hpp"
#include "vizex/series.hpp"

namespace vizex {

namespace {

using nlohmann::json;

ApiResponse json_response(const json& j, int status = 200) { return {status, "application/json", j.dump()}; }

std::vector<std::string> split_path(const std::string& path) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (start <= path.size()) {
        const auto slash = path.find('/', start);
        const auto end = slash == std::string::npos ? path.size() : slash;
        if (end > start) parts.push_back(path.substr(start, end - start));
        if (slash == std::string::npos) break;
        start = slash + 1;
    }
    return parts;
}

int int_param(const std::map<std::string, std::string>& params, const std::string& key, int fallback) {
    auto it = params.find(key);
    if (it == params.end() || it->second.empty()) return fallback;
    int v = 0;
    const auto& s = it->second;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size()) {
        throw Error(ErrorCode::InvalidArgument, "query parameter '" + key + "' must be an integer");
    }
    return v;
}

json series_json(const std::string& name, const Series& s) {
    json frames = json::array(), values = json::array();
    for (const auto& p : s) {
        frames.push_back(p.frame);
        values.push_back(json_number(p.value));
    }
    return {{"name", name}, {"frames", frames}, {"values", values}};
}

[[noreturn]] void not_found(const std::string& what) { throw Error(ErrorCode::UnknownSeries, "no route for " + what); }

}  // namespace

std::string api_code(ErrorCode code) {
    std::string out;
    for (char c : to_string(code)) {
        if (std::isupper(static_cast<unsigned char>(c)) && !out.empty()) out += '_';
        out += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    }
    return out;
}

int http_status(ErrorCode code) {
    switch (code) {
        case ErrorCode::SyntaxError:
        case ErrorCode::InvalidArgument:
            return 400;
        case ErrorCode::FramesDisabled:
            return 403;
        case ErrorCode::UnknownProject:
        case ErrorCode::UnknownSeries:
        case ErrorCode::MissingFrame:
        case ErrorCode::FrameOutOfRange:
            return 404;
        case ErrorCode::IoError:
        case ErrorCode::ProjectInvalid:
        case ErrorCode::PortInUse:
            return 500;
        default:
            return 422;
    }
}

json api_error_json(const Error& e) {
    json j{{"code", api_code(e.code())}, {"message", e.what()}};
    if (e.position()) {
        j["line"] = e.position()->line;
        j["col"] = e.position()->col;
    }
    return j;
}

QueryRun run_query(const Project& project, const std::string& text, const QueryConfig& config) {
    const auto ast = parse_query(text);
    QueryRun run;
    run.result = execute(ast, project, config);
    run.file_name = result_file_name(run.result.query, config);
    run.body = result_to_json(run.result).dump(2) + "\n";
    if (project.on_disk()) write_file(ProjectLayout{project.root()}.results_dir() / run.file_name, run.body);
    return run;
}

Service::Service(std::vector<std::shared_ptr<Project>> projects, ServiceOptions options)
    : projects_(std::move(projects)), options_(std::move(options)) {}

const Project& Service::find(const std::string& id) const {
    for (const auto& p : projects_) {
        if (p->id() == id) return *p;
    }
    throw Error(ErrorCode::UnknownProject, "unknown project '" + id + "'");
}

json Service::project_summary(const Project& p) const {
    const auto& m = p.manifest();
    return {{"id", p.id()},
            {"name", p.name()},
            {"root", p.root().generic_string()},
            {"width", m.width},
            {"height", m.height},
            {"frame_count", m.frame_count},
            {"fps", m.fps.value()},
            {"label_of_interest", m.label_of_interest},
            {"has_frames", p.has_frames()},
            {"frames_enabled", options_.frames_enabled && p.has_frames()}};
}

ApiResponse Service::handle(const std::string& method, const std::string& path,
                            const std::map<std::string, std::string>& params, const std::string& body) const {
    try {
        return route(method, split_path(path), params, body);
    } catch (const Error& e) {
        return json_response(api_error_json(e), http_status(e.code()));
    } catch (const std::exception& e) {
        return json_response({{"code", "INTERNAL"}, {"message", e.what()}}, 500);
    }
}

ApiResponse Service::route(const std::string& method, const std::vector<std::string>& parts,
                           const std::map<std::string, std::string>& params, const std::string& body) const {
    const std::string where = method + " /" + [&] {
        std::string s;
        for (std::size_t i = 0; i < parts.size(); ++i) s += (i ? "/" : "") + parts[i];
        return s;
    }();
    if (parts.size() < 2 || parts[0] != "api" || parts[1] != "projects") not_found(where);
    if (parts.size() == 2) {
        if (method != "GET") not_found(where);
        json list = json::array();
        for (const auto& p : projects_) list.push_back(project_summary(*p));
        return json_response(list);
    }
    const Project& p = find(parts[2]);
    if (parts.size() == 3 && method == "GET") {
        auto j = project_summary(p);
        json kpis = json::array();
        for (const auto& k : p.kpi_names()) kpis.push_back(kpi_to_json(p.kpi_definition(k)));
        j["kpis"] = kpis;
        j["metrics"] = p.metric_names();
        return json_response(j);
    }
    if (parts.size() < 4) not_found(where);
    const auto& what = parts[3];

    if (method == "POST" && what == "query" && parts.size() == 4) return query(p, body);
    if (method != "GET") not_found(where);

    if (what == "series" && parts.size() == 4) {
        return json_response({{"kpis", p.kpi_names()}, {"metrics", p.metric_names()}});
    }
    if ((what == "series" || what == "metrics") && parts.size() == 5) {
        const auto& name = parts[4];
        const Series& s = what == "metrics" ? p.metric(name)->points : p.series(name);
        const int from = int_param(params, "from", std::numeric_limits<int>::min());
        const int to = int_param(params, "to", std::numeric_limits<int>::max());
        return json_response(series_json(name, slice_series(s, from, to)));
    }
    if (what == "heatmap" && parts.size() == 4) {
        const auto kind_it = params.find("kind");
        const std::string kind = kind_it == params.end() ? "undercount" : kind_it->second;
        if (kind != "overcount" && kind != "undercount") {
            throw Error(ErrorCode::InvalidArgument, "kind must be overcount or undercount");
        }
        const auto maps = p.heatmap(int_param(params, "grid", 4));
        return json_response(heatmap_to_json(kind == "overcount" ? maps.overcount : maps.undercount));
    }
    if (what == "frames" && parts.size() == 5) {
        if (!options_.frames_enabled) throw Error(ErrorCode::FramesDisabled, "frame serving is disabled (--no-frames)");
        if (!p.has_frames()) throw Error(ErrorCode::MissingFrame, "project has no frames (log-only)");
        int n = 0;
        const auto& s = parts[4];
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), n);
        if (ec != std::errc{} || ptr != s.data() + s.size()) throw Error(ErrorCode::InvalidArgument, "frame index must be an integer");
        if (n < 0 || n >= p.manifest().frame_count) {
            throw Error(ErrorCode::FrameOutOfRange, "frame " + s + " outside [0, " + std::to_string(p.manifest().frame_count) + ")");
        }
        return {200, "image/x-portable-pixmap", encode_ppm((*p.data().frames)[static_cast<std::size_t>(n)])};
    }
    if (what == "results" && parts.size() == 4) return json_response(results_index(p));
    not_found(where);
}

ApiResponse Service::query(const Project& p, const std::string& body) const {
    json req;
    try {
        req = json::parse(body);
    } catch (const json::exception&) {
        throw Error(ErrorCode::InvalidArgument, "request body must be JSON {\"text\": ..., \"options\"?: {...}}");
    }
    if (!req.is_object() || !req.contains("text") || !req["text"].is_string()) {
        throw Error(ErrorCode::InvalidArgument, "request needs a string field 'text'");
    }
    QueryConfig cfg = options_.query_config;
    if (req.contains("options")) cfg = config_from_json(req["options"], cfg);
    const std::string text = req["text"].get<std::string>();
    const std::string key = p.id() + "\n" + text + "\n" + config_to_json(cfg).dump();

    std::promise<std::shared_ptr<const QueryRun>> promise;
    std::shared_future<std::shared_ptr<const QueryRun>> fut;
    bool owner = false;
    {
        std::lock_guard lock(mu_);
        if (auto it = runs_.find(key); it != runs_.end()) {
            fut = it->second;
        } else {
            fut = promise.get_future().share();
            runs_.emplace(key, fut);
            owner = true;
        }
    }
    if (owner) {
        try {
            promise.set_value(std::make_shared<const QueryRun>(run_query(p, text, cfg)));
        } catch (...) {
            promise.set_exception(std::current_exception());
            std::lock_guard lock(mu_);
            runs_.erase(key);
        }
    }
    const auto run = fut.get();
    return {200, "application/json", run->body};
}

json Service::results_index(const Project& p) const {
    json index = json::array();
    std::map<std::string, json> entries;
    if (p.on_disk()) {
        const auto dir = ProjectLayout{p.root()}.results_dir();
        if (fs::is_directory(dir)) {
            for (const auto& e : fs::directory_iterator(dir)) {
                const auto name = e.path().filename().string();
                if (name.rfind("query_", 0) != 0 || e.path().extension() != ".json") continue;
                try {
                    const auto j = json::parse(read_file(e.path()));
                    entries[name] = {{"file", name}, {"query", j.value("query", "")}, {"windows", j.value("windows", json::array()).size()}};
                } catch (const json::exception&) {
                    continue;  // partially written or foreign file
                }
            }
        }
    } else {
        std::lock_guard lock(mu_);
        for (const auto& [key, fut] : runs_) {
            if (key.rfind(p.id() + "\n", 0) != 0) continue;
            if (fut.wait_for(std::chrono::seconds(0)) != std::future_status::ready) continue;
            const auto run = fut.get();
            entries[run->file_name] = {{"file", run->file_name}, {"query", run->result.query}, {"windows", run->result.windows.size()}};
        }
    }
    for (auto& [name, e] : entries) index.push_back(std::move(e));
    return index;
}

void serve(const Service& service, const std::string& host, int port, std::stop_token stop) {
    httplib::Server server;
    // The library default adds SO_REUSEPORT, which would let a second server share a busy port.
    server.set_socket_options([](socket_t sock) {
        int yes = 1;
        setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
    });
    auto adapt = [&service](const char* method) {
        return [&service, method](const httplib::Request& req, httplib::Response& res) {
            std::map<std::string, std::string> params;
            for (const auto& [k, v] : req.params) params.emplace(k, v);
            const auto r = service.handle(method, req.path, params, req.body);
            res.status = r.status;
            res.set_content(r.body, r.content_type);
        };
    };
    server.Get(R"(/api/.*)", adapt("GET"));
    server.Post(R"(/api/.*)", adapt("POST"));
    if (!server.bind_to_port(host, port)) {
        throw Error(ErrorCode::PortInUse, "cannot bind " + host + ":" + std::to_string(port));
    }
    std::cerr << "vizex: serving " << service.projects().size() << " project(s) on http://" << host << ":" << port << "/api\n";
    std::stop_callback on_stop(stop, [&server] { server.stop(); });
    if (!stop.stop_requested()) server.listen_after_bind();
}

}  // namespace vizex
