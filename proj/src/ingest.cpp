#include "vizex/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <set>

#include <json.hpp>

#include "vizex/error.hpp"
#include "vizex/io.hpp"
#include "vizex/ppm.hpp"

namespace vizex {

using nlohmann::json;

namespace {

[[noreturn]] void bad_manifest(const std::string& what) {
    throw Error(ErrorCode::MalformedManifest, "manifest: " + what);
}

Fps parse_fps(const json& j) {
    Fps fps;
    if (j.is_number_integer()) {
        fps.num = j.get<std::int64_t>();
    } else if (j.is_string()) {
        const auto s = j.get<std::string>();
        const auto slash = s.find('/');
        if (slash == std::string::npos) bad_manifest("fps must be an integer or \"num/den\"");
        const auto* b = s.data();
        auto r1 = std::from_chars(b, b + slash, fps.num);
        auto r2 = std::from_chars(b + slash + 1, b + s.size(), fps.den);
        if (r1.ec != std::errc{} || r1.ptr != b + slash || r2.ec != std::errc{} || r2.ptr != b + s.size()) {
            bad_manifest("fps must be an integer or \"num/den\"");
        }
    } else {
        bad_manifest("fps must be an integer or \"num/den\"");
    }
    if (fps.num <= 0 || fps.den <= 0) bad_manifest("fps must be positive");
    return fps;
}

// Locates the single integer conversion in a frame pattern.
struct PatternSpec {
    std::size_t start = 0;
    std::size_t end = 0;
    int width = 0;
    bool zero_pad = false;
};

std::optional<PatternSpec> find_conversion(const std::string& pattern) {
    std::optional<PatternSpec> found;
    for (std::size_t i = 0; i < pattern.size(); ++i) {
        if (pattern[i] != '%') continue;
        if (i + 1 < pattern.size() && pattern[i + 1] == '%') {
            ++i;
            continue;
        }
        PatternSpec spec;
        spec.start = i;
        std::size_t j = i + 1;
        if (j < pattern.size() && pattern[j] == '0') {
            spec.zero_pad = true;
            ++j;
        }
        while (j < pattern.size() && std::isdigit(static_cast<unsigned char>(pattern[j]))) {
            spec.width = spec.width * 10 + (pattern[j] - '0');
            if (spec.width > 32) return std::nullopt;
            ++j;
        }
        if (j >= pattern.size() || pattern[j] != 'd' || found) return std::nullopt;
        spec.end = j + 1;
        found = spec;
        i = j;
    }
    return found;
}

std::string unescape_percent(std::string_view s) {
    std::string out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        out.push_back(s[i]);
        if (s[i] == '%' && i + 1 < s.size() && s[i + 1] == '%') ++i;
    }
    return out;
}

[[noreturn]] void bad_record(std::size_t line_no, const std::string& what) {
    throw Error(ErrorCode::MalformedRecord, "line " + std::to_string(line_no) + ": " + what);
}

int require_int(const json& obj, const char* key, std::size_t line_no) {
    auto it = obj.find(key);
    if (it == obj.end() || !it->is_number_integer()) bad_record(line_no, std::string("missing integer '") + key + "'");
    const auto v = it->get<std::int64_t>();
    if (v < INT32_MIN || v > INT32_MAX) bad_record(line_no, std::string("'") + key + "' out of range");
    return static_cast<int>(v);
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

}  // namespace

bool is_identifier(std::string_view text) {
    if (text.empty()) return false;
    const auto head = static_cast<unsigned char>(text.front());
    if (!(std::isalpha(head) || head == '_')) return false;
    return std::all_of(text.begin() + 1, text.end(), [](char c) {
        const auto u = static_cast<unsigned char>(c);
        return std::isalnum(u) || u == '_';
    });
}

void validate_manifest(const Manifest& m) {
    if (m.width < 1 || m.height < 1) bad_manifest("width and height must be >= 1");
    if (m.frame_count < 1) bad_manifest("frame_count must be >= 1");
    if (m.fps.num <= 0 || m.fps.den <= 0) bad_manifest("fps must be positive");
    if (!find_conversion(m.frame_pattern)) {
        bad_manifest("frame_pattern needs exactly one %d or %0Nd conversion");
    }
    if (m.label_of_interest.empty()) bad_manifest("label_of_interest must be non-empty");
}

Manifest parse_manifest(std::string_view json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        bad_manifest(e.what());
    }
    if (!j.is_object()) bad_manifest("top level must be an object");
    Manifest m;
    auto get_int = [&](const char* key) {
        auto it = j.find(key);
        if (it == j.end() || !it->is_number_integer()) bad_manifest(std::string("missing integer '") + key + "'");
        const auto v = it->get<std::int64_t>();
        if (v < INT32_MIN || v > INT32_MAX) bad_manifest(std::string("'") + key + "' out of range");
        return static_cast<int>(v);
    };
    m.width = get_int("width");
    m.height = get_int("height");
    m.frame_count = get_int("frame_count");
    if (auto it = j.find("fps"); it != j.end()) m.fps = parse_fps(*it);
    if (auto it = j.find("frame_pattern"); it != j.end()) {
        if (!it->is_string()) bad_manifest("frame_pattern must be a string");
        m.frame_pattern = it->get<std::string>();
    }
    if (auto it = j.find("label_of_interest"); it != j.end()) {
        if (!it->is_string()) bad_manifest("label_of_interest must be a string");
        m.label_of_interest = it->get<std::string>();
    }
    validate_manifest(m);
    return m;
}

Manifest load_manifest(const fs::path& path) {
    std::string text;
    try {
        text = read_file(path);
    } catch (const Error&) {
        bad_manifest("cannot read " + path.string());
    }
    return parse_manifest(text);
}

void write_manifest(const Manifest& m, const fs::path& path) {
    json j;
    j["width"] = m.width;
    j["height"] = m.height;
    j["frame_count"] = m.frame_count;
    if (m.fps.den == 1) {
        j["fps"] = m.fps.num;
    } else {
        j["fps"] = std::to_string(m.fps.num) + "/" + std::to_string(m.fps.den);
    }
    j["frame_pattern"] = m.frame_pattern;
    j["label_of_interest"] = m.label_of_interest;
    write_file(path, j.dump(2) + "\n");
}

std::string format_frame_path(const std::string& pattern, int index) {
    const auto spec = find_conversion(pattern);
    if (!spec) bad_manifest("frame_pattern needs exactly one %d or %0Nd conversion");
    std::string digits = std::to_string(index);
    if (static_cast<int>(digits.size()) < spec->width) {
        digits.insert(0, static_cast<std::size_t>(spec->width) - digits.size(), spec->zero_pad ? '0' : ' ');
    }
    return unescape_percent(std::string_view(pattern).substr(0, spec->start)) + digits +
           unescape_percent(std::string_view(pattern).substr(spec->end));
}

FrameSequence load_frame_sequence(const fs::path& manifest_path) {
    FrameSequence seq;
    seq.manifest = load_manifest(manifest_path);
    const auto root = manifest_path.parent_path();
    seq.frames.reserve(static_cast<std::size_t>(seq.manifest.frame_count));
    for (int i = 0; i < seq.manifest.frame_count; ++i) {
        const auto path = root / format_frame_path(seq.manifest.frame_pattern, i);
        if (!fs::exists(path)) {
            throw Error(ErrorCode::MissingFrame, "frame " + std::to_string(i) + " missing: " + path.string());
        }
        auto img = read_pnm(path);
        if (img.width != seq.manifest.width || img.height != seq.manifest.height) {
            throw Error(ErrorCode::DimensionMismatch,
                        "frame " + std::to_string(i) + " is " + std::to_string(img.width) + "x" +
                            std::to_string(img.height) + ", manifest says " + std::to_string(seq.manifest.width) +
                            "x" + std::to_string(seq.manifest.height));
        }
        seq.frames.push_back(Frame{i, img.width, img.height, std::move(img.rgb)});
    }
    return seq;
}

bool clip_box(Box& box, int width, int height) {
    const int x0 = std::max(box.x, 0);
    const int y0 = std::max(box.y, 0);
    const long x1 = std::min<long>(static_cast<long>(box.x) + box.w, width);
    const long y1 = std::min<long>(static_cast<long>(box.y) + box.h, height);
    if (x1 <= x0 || y1 <= y0) return false;
    box.x = x0;
    box.y = y0;
    box.w = static_cast<int>(x1 - x0);
    box.h = static_cast<int>(y1 - y0);
    return true;
}

PredictionLog parse_log(std::string_view text, const Manifest& manifest, Provenance provenance) {
    PredictionLog log;
    log.provenance = provenance;
    log.frames.assign(static_cast<std::size_t>(manifest.frame_count), {});
    std::vector<bool> seen(log.frames.size(), false);

    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto eol = text.find('\n', pos);
        const auto line = trim(text.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos));
        ++line_no;
        pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
        if (line.empty()) continue;

        json rec;
        try {
            rec = json::parse(line);
        } catch (const json::parse_error&) {
            bad_record(line_no, "not valid JSON");
        }
        if (!rec.is_object()) bad_record(line_no, "record must be an object");
        const int frame = require_int(rec, "frame", line_no);
        if (frame < 0 || frame >= manifest.frame_count) {
            throw Error(ErrorCode::FrameOutOfRange,
                        "line " + std::to_string(line_no) + ": frame " + std::to_string(frame) + " outside [0, " +
                            std::to_string(manifest.frame_count) + ")");
        }
        if (seen[static_cast<std::size_t>(frame)]) bad_record(line_no, "duplicate record for frame " + std::to_string(frame));
        seen[static_cast<std::size_t>(frame)] = true;

        auto it = rec.find("boxes");
        if (it == rec.end() || !it->is_array()) bad_record(line_no, "missing array 'boxes'");
        auto& boxes = log.frames[static_cast<std::size_t>(frame)];
        for (const auto& jb : *it) {
            if (!jb.is_object()) bad_record(line_no, "box must be an object");
            Box b;
            b.x = require_int(jb, "x", line_no);
            b.y = require_int(jb, "y", line_no);
            b.w = require_int(jb, "w", line_no);
            b.h = require_int(jb, "h", line_no);
            auto lab = jb.find("label");
            if (lab == jb.end() || !lab->is_string()) bad_record(line_no, "missing string 'label'");
            b.label = lab->get<std::string>();
            if (provenance == Provenance::ground_truth) {
                b.score = 1.0;
            } else {
                auto sc = jb.find("score");
                if (sc == jb.end() || !sc->is_number()) bad_record(line_no, "missing number 'score'");
                b.score = sc->get<double>();
                if (!(b.score >= 0.0 && b.score <= 1.0)) bad_record(line_no, "score outside [0,1]");
            }
            if (b.w <= 0 || b.h <= 0) bad_record(line_no, "box extents must be positive");
            if (!clip_box(b, manifest.width, manifest.height)) bad_record(line_no, "box lies outside the frame");
            boxes.push_back(std::move(b));
        }
    }
    return log;
}

PredictionLog load_detection_log(const fs::path& path, const Manifest& manifest) {
    return parse_log(read_file(path), manifest, Provenance::prediction);
}

PredictionLog load_ground_truth(const fs::path& path, const Manifest& manifest) {
    return parse_log(read_file(path), manifest, Provenance::ground_truth);
}

std::string serialize_log(const PredictionLog& log) {
    std::string out;
    for (std::size_t f = 0; f < log.frames.size(); ++f) {
        json rec;
        rec["frame"] = f;
        rec["boxes"] = json::array();
        for (const auto& b : log.frames[f]) {
            rec["boxes"].push_back({{"x", b.x}, {"y", b.y}, {"w", b.w}, {"h", b.h}, {"label", b.label}, {"score", b.score}});
        }
        out += rec.dump();
        out += '\n';
    }
    return out;
}

void write_log(const PredictionLog& log, const fs::path& path) {
    write_file(path, serialize_log(log));
}

ExternalSeries parse_external_series(std::string_view text, const std::string& name) {
    ExternalSeries series;
    series.name = name;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    bool header_seen = false;
    while (pos <= text.size()) {
        const auto eol = text.find('\n', pos);
        const auto line = trim(text.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos));
        ++line_no;
        pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
        if (line.empty()) continue;
        if (!header_seen) {
            if (line != "frame,value") {
                throw Error(ErrorCode::MalformedRow, "line " + std::to_string(line_no) + ": expected header 'frame,value'");
            }
            header_seen = true;
            continue;
        }
        const auto comma = line.find(',');
        auto bad = [&] {
            throw Error(ErrorCode::MalformedRow, "line " + std::to_string(line_no) + ": expected '<frame>,<value>'");
        };
        if (comma == std::string_view::npos) bad();
        const auto f_txt = trim(line.substr(0, comma));
        const auto v_txt = trim(line.substr(comma + 1));
        ExternalSample s;
        auto r1 = std::from_chars(f_txt.data(), f_txt.data() + f_txt.size(), s.frame);
        auto r2 = std::from_chars(v_txt.data(), v_txt.data() + v_txt.size(), s.value);
        if (r1.ec != std::errc{} || r1.ptr != f_txt.data() + f_txt.size() || r2.ec != std::errc{} ||
            r2.ptr != v_txt.data() + v_txt.size() || s.frame < 0 || !std::isfinite(s.value)) {
            bad();
        }
        series.samples.push_back(s);
    }
    if (!header_seen) {
        throw Error(ErrorCode::MalformedRow, "line 1: expected header 'frame,value'");
    }
    std::stable_sort(series.samples.begin(), series.samples.end(),
                     [](const ExternalSample& a, const ExternalSample& b) { return a.frame < b.frame; });
    for (std::size_t i = 1; i < series.samples.size(); ++i) {
        if (series.samples[i].frame == series.samples[i - 1].frame) {
            throw Error(ErrorCode::DuplicateFrame, "duplicate frame " + std::to_string(series.samples[i].frame));
        }
    }
    return series;
}

ExternalSeries load_external_series(const fs::path& path, const std::string& name) {
    return parse_external_series(read_file(path), name);
}

}  // namespace vizex
