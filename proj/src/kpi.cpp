#include "vizex/kpi.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace vizex {

using nlohmann::json;

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string series_to_csv(std::span<const SeriesPoint> points) {
    std::string out = "frame,value\n";
    for (const auto& p : points) {
        out += std::to_string(p.frame);
        out += ',';
        out += format_double(p.value);
        out += '\n';
    }
    return out;
}

Series slice_series(std::span<const SeriesPoint> points, int from, int to) {
    Series out;
    for (const auto& p : points) {
        if (p.frame >= from && p.frame <= to) out.push_back(p);
    }
    return out;
}

std::pair<double, double> lambda_range(Lambda lambda) {
    switch (lambda) {
        case Lambda::luminosity:
        case Lambda::avg_r:
        case Lambda::avg_g:
        case Lambda::avg_b: return {0.0, 255.0};
        case Lambda::edge_fraction: return {0.0, 1.0};
        case Lambda::detection_count: return {0.0, std::numeric_limits<double>::infinity()};
        case Lambda::external: break;
    }
    return {-std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
}

std::string_view to_string(Lambda l) {
    switch (l) {
        case Lambda::luminosity: return "luminosity";
        case Lambda::avg_r: return "avg_r";
        case Lambda::avg_g: return "avg_g";
        case Lambda::avg_b: return "avg_b";
        case Lambda::edge_fraction: return "edge_fraction";
        case Lambda::detection_count: return "detection_count";
        case Lambda::external: return "external";
    }
    return "?";
}

std::string_view to_string(RegionSelector r) {
    switch (r) {
        case RegionSelector::whole_frame: return "whole_frame";
        case RegionSelector::grid_cell: return "grid_cell";
        case RegionSelector::gt_boxes: return "gt_boxes";
        case RegionSelector::detected_boxes: return "detected_boxes";
    }
    return "?";
}

std::string_view to_string(Aggregator a) {
    switch (a) {
        case Aggregator::mean: return "mean";
        case Aggregator::min: return "min";
        case Aggregator::max: return "max";
    }
    return "?";
}

namespace {

[[noreturn]] void bad_def(const std::string& what) {
    throw Error(ErrorCode::InvalidArgument, "KPI definition: " + what);
}

template <class E, std::size_t N>
E parse_enum(const std::string& text, const std::array<E, N>& values, const char* what) {
    for (E v : values) {
        if (to_string(v) == text) return v;
    }
    bad_def(std::string("unknown ") + what + " '" + text + "'");
}

constexpr std::array kLambdas{Lambda::luminosity, Lambda::avg_r, Lambda::avg_g, Lambda::avg_b,
                              Lambda::edge_fraction, Lambda::detection_count, Lambda::external};
constexpr std::array kRegions{RegionSelector::whole_frame, RegionSelector::grid_cell, RegionSelector::gt_boxes,
                              RegionSelector::detected_boxes};
constexpr std::array kAggregators{Aggregator::mean, Aggregator::min, Aggregator::max};

int json_int(const json& j, const char* key, int fallback) {
    auto it = j.find(key);
    if (it == j.end()) return fallback;
    if (!it->is_number_integer()) bad_def(std::string("'") + key + "' must be an integer");
    return it->get<int>();
}

bool is_visual(Lambda l) {
    return l != Lambda::detection_count && l != Lambda::external;
}

}  // namespace

KpiDefinition kpi_from_json(const json& j) {
    if (!j.is_object()) bad_def("must be an object");
    KpiDefinition d;
    auto name = j.find("name");
    if (name == j.end() || !name->is_string()) bad_def("missing string 'name'");
    d.name = name->get<std::string>();
    auto lam = j.find("lambda");
    if (lam == j.end() || !lam->is_string()) bad_def("missing string 'lambda'");
    d.lambda = parse_enum(lam->get<std::string>(), kLambdas, "lambda");
    if (d.lambda == Lambda::external) {
        auto src = j.find("source");
        if (src == j.end() || !src->is_string()) bad_def("external lambda needs string 'source'");
        d.external = src->get<std::string>();
    }
    if (auto reg = j.find("region"); reg != j.end()) {
        if (reg->is_string()) {
            d.region = parse_enum(reg->get<std::string>(), kRegions, "region");
        } else if (reg->is_object()) {
            auto kind = reg->find("kind");
            if (kind == reg->end() || !kind->is_string()) bad_def("region needs string 'kind'");
            d.region = parse_enum(kind->get<std::string>(), kRegions, "region");
            d.grid = json_int(*reg, "grid", 4);
            d.row = json_int(*reg, "row", 0);
            d.col = json_int(*reg, "col", 0);
        } else {
            bad_def("region must be a string or an object");
        }
    }
    d.w = json_int(j, "w", 1);
    if (auto agg = j.find("aggregator"); agg != j.end()) {
        if (!agg->is_string()) bad_def("aggregator must be a string");
        d.aggregator = parse_enum(agg->get<std::string>(), kAggregators, "aggregator");
    }
    return d;
}

json kpi_to_json(const KpiDefinition& d) {
    json j;
    j["name"] = d.name;
    j["lambda"] = std::string(to_string(d.lambda));
    if (d.lambda == Lambda::external) j["source"] = d.external;
    if (d.region == RegionSelector::grid_cell) {
        j["region"] = {{"kind", "grid_cell"}, {"grid", d.grid}, {"row", d.row}, {"col", d.col}};
    } else {
        j["region"] = std::string(to_string(d.region));
    }
    j["w"] = d.w;
    j["aggregator"] = std::string(to_string(d.aggregator));
    return j;
}

KpiConfig parse_kpi_config(const json& j) {
    KpiConfig cfg;
    const json* list = &j;
    if (j.is_object()) {
        auto it = j.find("kpis");
        if (it == j.end()) bad_def("config object needs 'kpis'");
        list = &*it;
        if (auto c = j.find("canny"); c != j.end()) {
            cfg.canny.sigma = c->value("sigma", cfg.canny.sigma);
            cfg.canny.low = c->value("low", cfg.canny.low);
            cfg.canny.high = c->value("high", cfg.canny.high);
            if (!(cfg.canny.sigma > 0) || !(cfg.canny.low >= 0) || !(cfg.canny.high >= cfg.canny.low)) {
                bad_def("canny needs sigma > 0 and 0 <= low <= high");
            }
        }
        cfg.correct_rate_window = json_int(j, "correct_rate_window", cfg.correct_rate_window);
        if (cfg.correct_rate_window < 1) bad_def("correct_rate_window must be >= 1");
    }
    if (!list->is_array()) bad_def("'kpis' must be an array");
    for (const auto& item : *list) cfg.kpis.push_back(kpi_from_json(item));
    for (std::size_t i = 0; i < cfg.kpis.size(); ++i) {
        for (std::size_t k = 0; k < i; ++k) {
            if (cfg.kpis[i].name == cfg.kpis[k].name) bad_def("duplicate KPI name '" + cfg.kpis[i].name + "'");
        }
    }
    return cfg;
}

json kpi_config_to_json(const KpiConfig& cfg) {
    json j;
    j["canny"] = {{"sigma", cfg.canny.sigma}, {"low", cfg.canny.low}, {"high", cfg.canny.high}};
    j["correct_rate_window"] = cfg.correct_rate_window;
    j["kpis"] = json::array();
    for (const auto& d : cfg.kpis) j["kpis"].push_back(kpi_to_json(d));
    return j;
}

std::vector<KpiDefinition> default_kpis() {
    std::vector<KpiDefinition> out;
    for (Lambda l : {Lambda::luminosity, Lambda::avg_r, Lambda::avg_g, Lambda::avg_b, Lambda::edge_fraction,
                     Lambda::detection_count}) {
        KpiDefinition d;
        d.name = std::string(to_string(l));
        d.lambda = l;
        out.push_back(d);
    }
    return out;
}

void validate_definition(const KpiDefinition& d, const std::map<std::string, ExternalSeries>& externals) {
    if (!is_identifier(d.name)) bad_def("name '" + d.name + "' is not an identifier");
    if (d.w < 1) bad_def("w must be >= 1");
    if (d.region == RegionSelector::grid_cell) {
        if (d.grid < 1 || d.row < 0 || d.row >= d.grid || d.col < 0 || d.col >= d.grid) {
            bad_def("grid cell outside the grid");
        }
    }
    if (d.lambda == Lambda::external) {
        if (d.region != RegionSelector::whole_frame) bad_def("external lambdas take no region");
        if (!externals.contains(d.external)) {
            throw Error(ErrorCode::UnknownExternal, "unknown external series '" + d.external + "'");
        }
    }
}

std::vector<double> resample_locf(const ExternalSeries& series, int frame_count) {
    if (series.samples.empty()) {
        throw Error(ErrorCode::InvalidArgument, "external series '" + series.name + "' has no samples");
    }
    std::vector<double> out(static_cast<std::size_t>(frame_count));
    std::size_t next = 0;
    double current = series.samples.front().value;
    for (int f = 0; f < frame_count; ++f) {
        while (next < series.samples.size() && series.samples[next].frame <= f) {
            current = series.samples[next].value;
            ++next;
        }
        out[static_cast<std::size_t>(f)] = current;
    }
    return out;
}

std::vector<double> per_frame_values(const KpiDefinition& def, const KpiInputs& in) {
    const Manifest& m = *in.manifest;
    const int n = m.frame_count;
    std::vector<double> values(static_cast<std::size_t>(n));

    if (def.lambda == Lambda::external) {
        const ExternalSeries* ext = nullptr;
        if (in.externals) {
            if (auto it = in.externals->find(def.external); it != in.externals->end()) ext = &it->second;
        }
        if (!ext) throw Error(ErrorCode::UnknownExternal, "unknown external series '" + def.external + "'");
        return resample_locf(*ext, n);
    }

    if (def.lambda == Lambda::detection_count) {
        const bool use_gt = def.region == RegionSelector::gt_boxes;
        const PredictionLog* log = use_gt ? in.ground_truth : in.predictions;
        if (!log) throw Error(ErrorCode::InvalidArgument, "detection_count needs a log");
        std::optional<Region> cell;
        if (def.region == RegionSelector::grid_cell) cell = Region::grid_cell(m.width, m.height, def.grid, def.grid, def.row, def.col);
        for (int f = 0; f < n; ++f) {
            int count = 0;
            for (const auto& b : log->frames[static_cast<std::size_t>(f)]) {
                if (b.label != m.label_of_interest) continue;
                if (cell) {
                    const auto& r = cell->rect;
                    const double cx = b.center_x(), cy = b.center_y();
                    if (cx < r.x || cx >= r.x + r.w || cy < r.y || cy >= r.y + r.h) continue;
                }
                ++count;
            }
            values[static_cast<std::size_t>(f)] = count;
        }
        return values;
    }

    if (!in.frames) throw Error(ErrorCode::InvalidArgument, "KPI '" + def.name + "' needs frames (log-only project)");
    const bool needs_mask = def.lambda == Lambda::edge_fraction;
    const bool box_region = def.region == RegionSelector::gt_boxes || def.region == RegionSelector::detected_boxes;

    Region region = Region::whole_frame(m.width, m.height);
    if (def.region == RegionSelector::grid_cell) region = Region::grid_cell(m.width, m.height, def.grid, def.grid, def.row, def.col);
    if (needs_mask && !box_region && (region.rect.w < 5 || region.rect.h < 5)) {
        throw Error(ErrorCode::RegionTooSmall, "edge_fraction needs a region of at least 5x5");
    }

    for (int f = 0; f < n; ++f) {
        const Frame& frame = (*in.frames)[static_cast<std::size_t>(f)];
        std::vector<std::uint8_t> mask;
        if (needs_mask || box_region) mask = canny_edge_mask(frame, in.canny);
        double v = 0.0;
        if (box_region) {
            const PredictionLog* log = def.region == RegionSelector::gt_boxes ? in.ground_truth : in.predictions;
            std::vector<Box> boxes;
            if (log) {
                for (const auto& b : log->frames[static_cast<std::size_t>(f)]) {
                    if (b.label == m.label_of_interest) boxes.push_back(b);
                }
            }
            const auto feat = box_region_features(frame, boxes, mask);
            switch (def.lambda) {
                case Lambda::luminosity: v = feat.luminosity; break;
                case Lambda::avg_r: v = feat.color.r; break;
                case Lambda::avg_g: v = feat.color.g; break;
                case Lambda::avg_b: v = feat.color.b; break;
                case Lambda::edge_fraction: v = feat.edge_fraction; break;
                default: break;
            }
        } else {
            switch (def.lambda) {
                case Lambda::luminosity: v = luminosity(frame, region); break;
                case Lambda::avg_r: v = average_color(frame, region).r; break;
                case Lambda::avg_g: v = average_color(frame, region).g; break;
                case Lambda::avg_b: v = average_color(frame, region).b; break;
                case Lambda::edge_fraction: v = edge_fraction_from_mask(mask, frame.width, region.rect); break;
                default: break;
            }
        }
        values[static_cast<std::size_t>(f)] = v;
    }
    return values;
}

Series window_aggregate(std::span<const double> per_frame, int w, Aggregator aggregator) {
    if (w < 1) throw Error(ErrorCode::InvalidArgument, "window must be >= 1");
    Series out;
    const int n = static_cast<int>(per_frame.size());
    for (int t = w - 1; t < n; ++t) {
        double v = 0.0;
        switch (aggregator) {
            case Aggregator::mean: {
                double s = 0.0;
                for (int k = t - w + 1; k <= t; ++k) s += per_frame[static_cast<std::size_t>(k)];
                v = s / w;
                break;
            }
            case Aggregator::min:
                v = *std::min_element(per_frame.begin() + (t - w + 1), per_frame.begin() + t + 1);
                break;
            case Aggregator::max:
                v = *std::max_element(per_frame.begin() + (t - w + 1), per_frame.begin() + t + 1);
                break;
        }
        out.push_back({t, v});
    }
    return out;
}

KpiSeries compute_kpi_series(const KpiDefinition& def, const KpiInputs& in) {
    static const std::map<std::string, ExternalSeries> kNoExternals;
    validate_definition(def, in.externals ? *in.externals : kNoExternals);
    const auto per_frame = per_frame_values(def, in);

    KpiSeries s;
    s.definition = def;
    s.points = window_aggregate(per_frame, def.w, def.aggregator);

    const auto [lo, hi] = lambda_range(def.lambda);
    for (const auto& p : s.points) {
        if (!std::isfinite(p.value) || p.value < lo - 1e-9 || p.value > hi + 1e-9) {
            throw std::logic_error("KPI '" + def.name + "' produced out-of-range value at frame " + std::to_string(p.frame));
        }
    }

    s.metadata["definition"] = kpi_to_json(def);
    s.metadata["alignment"] = "window_end";
    if (def.lambda == Lambda::edge_fraction || def.region == RegionSelector::gt_boxes ||
        def.region == RegionSelector::detected_boxes) {
        const auto taps = gaussian_taps(in.canny.sigma);
        s.metadata["canny"] = {{"sigma", in.canny.sigma},
                               {"low", in.canny.low},
                               {"high", in.canny.high},
                               {"kernel", "5x5 separable"},
                               {"taps", std::vector<int>(taps.begin(), taps.end())},
                               {"magnitude", "normalized to frame max = 255"}};
    }
    if (def.region == RegionSelector::gt_boxes || def.region == RegionSelector::detected_boxes) {
        s.metadata["empty_box_fallback"] = "whole_frame";
    }
    if (def.lambda == Lambda::external) s.metadata["resampling"] = "locf";
    if (is_visual(def.lambda) && def.lambda != Lambda::edge_fraction) s.metadata["luma"] = "rec601";
    return s;
}

}  // namespace vizex
