#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace vizex {

namespace fs = std::filesystem;

struct Fps {
    std::int64_t num = 1;
    std::int64_t den = 1;

    double value() const { return static_cast<double>(num) / static_cast<double>(den); }
    bool operator==(const Fps&) const = default;
};

struct Manifest {
    int width = 0;
    int height = 0;
    int frame_count = 0;
    Fps fps;
    std::string frame_pattern = "frames/%06d.ppm";
    std::string label_of_interest = "person";

    bool operator==(const Manifest&) const = default;
};

// Row-major RGB, 8 bits per channel.
struct Frame {
    int index = 0;
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> rgb;

    std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
    bool operator==(const Frame&) const = default;
};

struct FrameSequence {
    Manifest manifest;
    std::vector<Frame> frames;
};

struct Box {
    int x = 0;
    int y = 0;
    int w = 0;
    int h = 0;
    std::string label;
    double score = 1.0;

    double center_x() const { return x + w / 2.0; }
    double center_y() const { return y + h / 2.0; }
    bool operator==(const Box&) const = default;
};

enum class Provenance { prediction, ground_truth };

struct PredictionLog {
    Provenance provenance = Provenance::prediction;
    // Indexed by frame; frames without a record hold an empty list.
    std::vector<std::vector<Box>> frames;

    bool operator==(const PredictionLog&) const = default;
};

struct ExternalSample {
    int frame = 0;
    double value = 0.0;
    bool operator==(const ExternalSample&) const = default;
};

struct ExternalSeries {
    std::string name;
    std::vector<ExternalSample> samples;
};

// Fixed on-disk layout of a project directory.
struct ProjectLayout {
    fs::path root;

    fs::path manifest() const { return root / "manifest.json"; }
    fs::path predictions() const { return root / "logs" / "predictions.jsonl"; }
    fs::path ground_truth() const { return root / "logs" / "ground_truth.jsonl"; }
    fs::path series_dir() const { return root / "series"; }
    fs::path results_dir() const { return root / "results"; }
    fs::path kpi_config() const { return root / "kpis.json"; }
};

Manifest load_manifest(const fs::path& path);
Manifest parse_manifest(std::string_view json_text);
void write_manifest(const Manifest& manifest, const fs::path& path);
void validate_manifest(const Manifest& manifest);

// Expands the single %d / %0Nd conversion in the pattern.
std::string format_frame_path(const std::string& pattern, int index);

FrameSequence load_frame_sequence(const fs::path& manifest_path);

PredictionLog load_detection_log(const fs::path& path, const Manifest& manifest);
PredictionLog load_ground_truth(const fs::path& path, const Manifest& manifest);
PredictionLog parse_log(std::string_view text, const Manifest& manifest, Provenance provenance);
void write_log(const PredictionLog& log, const fs::path& path);
std::string serialize_log(const PredictionLog& log);

ExternalSeries load_external_series(const fs::path& path, const std::string& name);
ExternalSeries parse_external_series(std::string_view text, const std::string& name);

// Clips a box to the frame; returns false when nothing remains.
bool clip_box(Box& box, int width, int height);

bool is_identifier(std::string_view text);

}  // namespace vizex
