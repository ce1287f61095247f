#include "vizex/project.hpp"

#include <algorithm>

#include <json.hpp>

#include "vizex/error.hpp"
#include "vizex/io.hpp"

namespace vizex {

namespace {

std::string canonical_metric(const std::string& name) { return name == "metrics" ? kCountErrorMetric : name; }

}  // namespace

std::string project_id(const fs::path& root) {
    std::error_code ec;
    auto canon = fs::weakly_canonical(root, ec);
    if (ec) canon = fs::absolute(root);
    return hex64(fnv1a64(canon.generic_string()), 12);
}

Project::Project(ProjectData data, fs::path root) : data_(std::move(data)), root_(std::move(root)) {
    id_ = on_disk() ? project_id(root_) : hex64(fnv1a64("memory:" + data_.name), 12);
    for (const auto& d : data_.config.kpis) {
        validate_definition(d, data_.externals);
        if (!kpis_.emplace(d.name, d).second) {
            throw Error(ErrorCode::InvalidArgument, "duplicate KPI name '" + d.name + "'");
        }
    }
    // External series double as KPIs unless a definition already uses the name.
    for (const auto& [name, ext] : data_.externals) {
        KpiDefinition d;
        d.name = name;
        d.lambda = Lambda::external;
        d.external = name;
        kpis_.emplace(name, d);
    }
}

std::shared_ptr<Project> Project::from_data(ProjectData data, fs::path root) {
    validate_manifest(data.manifest);
    const auto n = static_cast<std::size_t>(data.manifest.frame_count);
    if (data.predictions.frames.size() != n || data.ground_truth.frames.size() != n) {
        throw Error(ErrorCode::ProjectInvalid, "logs must cover every frame of the manifest");
    }
    if (data.frames && data.frames->size() != n) throw Error(ErrorCode::ProjectInvalid, "frame count differs from manifest");
    return std::shared_ptr<Project>(new Project(std::move(data), std::move(root)));
}

std::shared_ptr<Project> Project::open(const fs::path& root, const std::optional<fs::path>& config) {
    const ProjectLayout layout{root};
    if (!fs::is_directory(root)) throw Error(ErrorCode::ProjectInvalid, "not a project directory: " + root.string());
    if (!fs::exists(layout.manifest())) throw Error(ErrorCode::ProjectInvalid, "missing manifest.json in " + root.string());
    ProjectData d;
    d.name = fs::weakly_canonical(root).filename().string();
    if (fs::is_directory(root / "frames")) {
        auto seq = load_frame_sequence(layout.manifest());
        d.manifest = seq.manifest;
        d.frames = std::move(seq.frames);
    } else {
        d.manifest = load_manifest(layout.manifest());
    }
    d.predictions = load_detection_log(layout.predictions(), d.manifest);
    d.ground_truth = load_ground_truth(layout.ground_truth(), d.manifest);
    if (fs::is_directory(layout.series_dir())) {
        std::vector<fs::path> csvs;
        for (const auto& e : fs::directory_iterator(layout.series_dir())) {
            if (e.path().extension() == ".csv") csvs.push_back(e.path());
        }
        std::sort(csvs.begin(), csvs.end());
        for (const auto& p : csvs) {
            auto sidecar = p;
            sidecar.replace_extension(".meta.json");
            if (fs::exists(sidecar)) continue;  // a computed series we wrote, not an input
            const auto name = p.stem().string();
            d.externals.emplace(name, load_external_series(p, name));
        }
    }
    const fs::path cfg = config ? *config : layout.kpi_config();
    if (fs::exists(cfg)) {
        try {
            d.config = parse_kpi_config(nlohmann::json::parse(read_file(cfg)));
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::InvalidArgument, "bad KPI config " + cfg.string() + ": " + e.what());
        }
    } else if (config) {
        throw Error(ErrorCode::IoError, "cannot read " + cfg.string());
    } else {
        d.config.kpis = default_kpis();
    }
    return from_data(std::move(d), root);
}

std::vector<std::string> Project::kpi_names() const {
    std::vector<std::string> out;
    for (const auto& [name, def] : kpis_) out.push_back(name);
    return out;
}

std::vector<std::string> Project::metric_names() const {
    std::vector<std::string> out{kCorrectRateMetric, kCountErrorMetric};
    for (const auto& [name, ext] : data_.externals) {
        if (name != kCountErrorMetric && name != kCorrectRateMetric && name != "metrics") out.push_back(name);
    }
    return out;
}

bool Project::has_kpi(const std::string& name) const { return kpis_.contains(name); }

bool Project::has_metric(const std::string& name) const {
    const auto n = canonical_metric(name);
    return n == kCountErrorMetric || n == kCorrectRateMetric || data_.externals.contains(n);
}

const KpiDefinition& Project::kpi_definition(const std::string& name) const {
    auto it = kpis_.find(name);
    if (it == kpis_.end()) throw Error(ErrorCode::UnknownKpi, "unknown KPI '" + name + "'");
    return it->second;
}

template <class T, class F>
std::shared_ptr<const T> Project::cached(std::map<std::string, std::shared_future<std::shared_ptr<const T>>>& cache,
                                         const std::string& key, F&& compute) const {
    std::promise<std::shared_ptr<const T>> promise;
    std::shared_future<std::shared_ptr<const T>> fut;
    bool owner = false;
    {
        std::lock_guard lock(mu_);
        auto it = cache.find(key);
        if (it == cache.end()) {
            fut = promise.get_future().share();
            cache.emplace(key, fut);
            owner = true;
        } else {
            fut = it->second;
        }
    }
    if (owner) {
        try {
            promise.set_value(std::make_shared<const T>(compute()));
        } catch (...) {
            promise.set_exception(std::current_exception());
            std::lock_guard lock(mu_);
            cache.erase(key);
        }
    }
    return fut.get();
}

std::shared_ptr<const KpiSeries> Project::kpi(const std::string& name) const {
    const auto& def = kpi_definition(name);
    return cached(kpi_cache_, name, [&] {
        KpiInputs in;
        in.manifest = &data_.manifest;
        in.frames = data_.frames ? &*data_.frames : nullptr;
        in.predictions = &data_.predictions;
        in.ground_truth = &data_.ground_truth;
        in.externals = &data_.externals;
        in.canny = data_.config.canny;
        return compute_kpi_series(def, in);
    });
}

std::shared_ptr<const MetricSeries> Project::metric(const std::string& requested) const {
    const auto name = canonical_metric(requested);
    if (!has_metric(name)) throw Error(ErrorCode::UnknownMetric, "unknown metric '" + requested + "'");
    return cached(metric_cache_, name, [&]() -> MetricSeries {
        if (name == kCountErrorMetric) {
            return error_series(data_.predictions, data_.ground_truth, data_.manifest.label_of_interest);
        }
        if (name == kCorrectRateMetric) {
            return correct_rate(*metric(kCountErrorMetric), data_.config.correct_rate_window);
        }
        const auto& ext = data_.externals.at(name);
        MetricSeries m;
        m.name = name;
        m.kind = MetricKind::custom;
        const auto values = resample_locf(ext, data_.manifest.frame_count);
        for (std::size_t f = 0; f < values.size(); ++f) m.points.push_back({static_cast<int>(f), values[f]});
        return m;
    });
}

const Series& Project::series(const std::string& name) const {
    if (has_kpi(name)) return kpi(name)->points;
    if (has_metric(name)) return metric(name)->points;
    throw Error(ErrorCode::UnknownSeries, "unknown series '" + name + "'");
}

HeatmapPair Project::heatmap(int grid) const {
    if (grid < 1 || grid > 64) throw Error(ErrorCode::InvalidArgument, "grid must lie in [1, 64]");
    return error_heatmap(data_.predictions, data_.ground_truth, data_.manifest, data_.manifest.label_of_interest, grid, grid);
}

}  // namespace vizex
