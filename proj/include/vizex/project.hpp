#pragma once

#include <filesystem>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "vizex/ingest.hpp"
#include "vizex/kpi.hpp"
#include "vizex/metrics.hpp"

namespace vizex {

// Everything a project is computed from. Frames are absent in log-only projects.
struct ProjectData {
    std::string name;
    Manifest manifest;
    std::optional<std::vector<Frame>> frames;
    PredictionLog predictions;
    PredictionLog ground_truth;
    std::map<std::string, ExternalSeries> externals;
    KpiConfig config;
};

// Immutable snapshot of a project with a lazily filled, race-free series cache.
class Project {
public:
    // Loads <root>/manifest.json, frames/ (optional), logs/, series/*.csv and
    // kpis.json. `config` replaces the project's kpis.json when given.
    static std::shared_ptr<Project> open(const fs::path& root, const std::optional<fs::path>& config = std::nullopt);
    static std::shared_ptr<Project> from_data(ProjectData data, fs::path root = {});

    const std::string& id() const { return id_; }
    const std::string& name() const { return data_.name; }
    const fs::path& root() const { return root_; }
    bool on_disk() const { return !root_.empty(); }
    const ProjectData& data() const { return data_; }
    const Manifest& manifest() const { return data_.manifest; }
    bool has_frames() const { return data_.frames.has_value(); }

    std::vector<std::string> kpi_names() const;
    std::vector<std::string> metric_names() const;
    bool has_kpi(const std::string& name) const;
    bool has_metric(const std::string& name) const;
    const KpiDefinition& kpi_definition(const std::string& name) const;

    // Throws UnknownKpi / UnknownMetric. Concurrent callers share one computation.
    std::shared_ptr<const KpiSeries> kpi(const std::string& name) const;
    std::shared_ptr<const MetricSeries> metric(const std::string& name) const;
    // KPI first, then metric; throws UnknownSeries.
    const Series& series(const std::string& name) const;

    HeatmapPair heatmap(int grid) const;

private:
    Project(ProjectData data, fs::path root);

    template <class T, class F>
    std::shared_ptr<const T> cached(std::map<std::string, std::shared_future<std::shared_ptr<const T>>>& cache,
                                    const std::string& key, F&& compute) const;

    ProjectData data_;
    fs::path root_;
    std::string id_;
    std::map<std::string, KpiDefinition> kpis_;

    mutable std::mutex mu_;
    mutable std::map<std::string, std::shared_future<std::shared_ptr<const KpiSeries>>> kpi_cache_;
    mutable std::map<std::string, std::shared_future<std::shared_ptr<const MetricSeries>>> metric_cache_;
};

// Short stable id of a canonical project path.
std::string project_id(const fs::path& root);

// Name under which the project's per-frame counting-error series is exposed;
// "metrics" is accepted as an alias.
inline constexpr const char* kCountErrorMetric = "count_error";
inline constexpr const char* kCorrectRateMetric = "correct_rate";

}  // namespace vizex
