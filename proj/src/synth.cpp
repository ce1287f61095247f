#include "vizex/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "vizex/error.hpp"
#include "vizex/io.hpp"
#include "vizex/ppm.hpp"
#include "vizex/rdd.hpp"

namespace vizex {

namespace {

using nlohmann::json;

// Generator stream tags; each (tag, frame) pair gets an independent generator.
constexpr std::uint64_t kSetupStream = 0x7365747570ULL;
constexpr std::uint64_t kNoiseStream = 0x6e6f697365ULL;
constexpr std::uint64_t kDetectStream = 0x646574656374ULL;
constexpr std::uint64_t kFalsePosStream = 0x66616c7365ULL;
constexpr int kBorder = 4;  // keeps edge responses of people clear of the frame border

std::mt19937_64 stream(std::uint64_t seed, std::uint64_t tag, int t) {
    return std::mt19937_64(derive_seed(seed ^ derive_seed(tag, 0), static_cast<std::uint64_t>(t)));
}

[[noreturn]] void invalid(const std::string& msg) { throw Error(ErrorCode::InvalidSpec, msg); }

bool in_unit(double p) { return p >= 0.0 && p <= 1.0; }

struct Walker {
    int y = 0;
    int x0 = 0;
    int v = 1;
};

struct Layout {
    int x_lo = 0;
    int span = 0;
    std::vector<Walker> walkers;

    int x_at(const Walker& w, int t) const {
        if (span == 0) return x_lo;
        const long long period = 2LL * span;
        long long p = (static_cast<long long>(w.x0) + static_cast<long long>(w.v) * t) % period;
        if (p < 0) p += period;
        return x_lo + static_cast<int>(p <= span ? p : period - p);
    }
};

Layout make_layout(const ScenarioSpec& s) {
    Layout l;
    l.x_lo = kBorder;
    l.span = s.width - 2 * kBorder - s.person_width;
    auto gen = stream(s.seed, kSetupStream, 0);
    std::uniform_int_distribution<int> start(0, std::max(0, 2 * l.span - 1));
    std::uniform_int_distribution<int> speed(1, 2);
    std::bernoulli_distribution flip(0.5);
    for (int i = 0; i < s.people; ++i) {
        const int band_lo = i * s.height / s.people;
        const int band_hi = (i + 1) * s.height / s.people;
        Walker w;
        w.y = band_lo + (band_hi - band_lo - s.person_height) / 2;
        w.x0 = start(gen);
        w.v = speed(gen) * (flip(gen) ? -1 : 1);
        l.walkers.push_back(w);
    }
    return l;
}

std::string_view to_string(EventFeature f) {
    return f == EventFeature::luminosity_background ? "luminosity_background" : "none";
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
    auto it = j.find(key);
    if (it == j.end()) return fallback;
    try {
        return it->get<T>();
    } catch (const json::exception&) {
        invalid(std::string("field '") + key + "' has the wrong type");
    }
}

}  // namespace

bool in_zone(const Zone& z, const Box& b, int width, int height) {
    const auto r = Region::grid_cell(width, height, z.grid, z.grid, z.row, z.col).rect;
    const double cx = b.center_x(), cy = b.center_y();
    return cx >= r.x && cx < r.x + r.w && cy >= r.y && cy < r.y + r.h;
}

void validate_spec(const ScenarioSpec& s) {
    if (s.frame_count < 1) invalid("frame_count must be >= 1");
    if (s.people < 0) invalid("people must be >= 0");
    if (s.person_width < 1 || s.person_height < 1) invalid("person size must be positive");
    if (s.width < s.person_width + 2 * kBorder) invalid("frame too narrow for the people");
    if (s.height < 1 || s.width < 1) invalid("frame size must be positive");
    if (s.people > 0 && s.height / s.people < s.person_height) invalid("lanes too narrow for the people");
    if (!(s.background >= 0.0 && s.background <= 255.0)) invalid("background must lie in [0, 255]");
    for (int c : s.person_color) {
        if (c < 0 || c > 255) invalid("person_color channels must lie in [0, 255]");
    }
    if (!(s.noise_sigma >= 0.0)) invalid("noise_sigma must be >= 0");
    const auto& d = s.detector;
    if (!in_unit(d.base_detect_prob) || !in_unit(d.degraded_detect_prob)) invalid("detection probabilities must lie in [0, 1]");
    if (d.degraded_detect_prob > d.base_detect_prob) invalid("degraded_detect_prob must not exceed base_detect_prob");
    if (!(d.false_positive_rate >= 0.0)) invalid("false_positive_rate must be >= 0");
    for (const auto& e : s.events) {
        if (e.frame <= s.margin || e.frame >= s.frame_count - s.margin) {
            invalid("event frame " + std::to_string(e.frame) + " must lie strictly inside (" + std::to_string(s.margin) +
                    ", " + std::to_string(s.frame_count - s.margin) + ")");
        }
        if (e.feature != EventFeature::none && e.magnitude == 0.0) invalid("non-null events need a non-zero magnitude");
        if (e.ramp < 0) invalid("ramp must be >= 0");
    }
    for (const auto& z : s.zones) {
        if (z.grid < 1 || z.row < 0 || z.row >= z.grid || z.col < 0 || z.col >= z.grid) invalid("zone outside its grid");
        if (!in_unit(z.detect_prob)) invalid("zone detect_prob must lie in [0, 1]");
        if (!in_unit(z.duplicate_prob)) invalid("zone duplicate_prob must lie in [0, 1]");
    }
}

ScenarioSpec spec_from_json(const json& j) {
    if (!j.is_object()) invalid("scenario spec must be an object");
    ScenarioSpec s;
    s.name = get_or(j, "name", s.name);
    s.frame_count = get_or(j, "frame_count", s.frame_count);
    s.width = get_or(j, "width", s.width);
    s.height = get_or(j, "height", s.height);
    s.seed = get_or(j, "seed", s.seed);
    s.background = get_or(j, "background", s.background);
    s.person_color = get_or(j, "person_color", s.person_color);
    s.people = get_or(j, "people", s.people);
    s.person_width = get_or(j, "person_width", s.person_width);
    s.person_height = get_or(j, "person_height", s.person_height);
    s.noise_sigma = get_or(j, "noise_sigma", s.noise_sigma);
    s.margin = get_or(j, "margin", s.margin);
    if (auto it = j.find("detector_model"); it != j.end()) {
        if (!it->is_object()) invalid("detector_model must be an object");
        auto& d = s.detector;
        d.base_detect_prob = get_or(*it, "base_detect_prob", d.base_detect_prob);
        d.luminosity_knee = get_or(*it, "luminosity_knee", d.luminosity_knee);
        d.degraded_detect_prob = get_or(*it, "degraded_detect_prob", d.degraded_detect_prob);
        d.false_positive_rate = get_or(*it, "false_positive_rate", d.false_positive_rate);
    }
    for (const auto& e : j.value("events", json::array())) {
        StepEvent ev;
        ev.frame = get_or(e, "frame", 0);
        const auto feature = get_or<std::string>(e, "feature", "luminosity_background");
        if (feature == "luminosity_background") ev.feature = EventFeature::luminosity_background;
        else if (feature == "none") ev.feature = EventFeature::none;
        else invalid("unknown event feature '" + feature + "'");
        ev.magnitude = get_or(e, "magnitude", 0.0);
        ev.ramp = get_or(e, "ramp", 0);
        s.events.push_back(ev);
    }
    for (const auto& z : j.value("zones", json::array())) {
        Zone zone;
        zone.grid = get_or(z, "grid", zone.grid);
        zone.row = get_or(z, "row", zone.row);
        zone.col = get_or(z, "col", zone.col);
        zone.detect_prob = get_or(z, "detect_prob", zone.detect_prob);
        zone.duplicate_prob = get_or(z, "duplicate_prob", zone.duplicate_prob);
        s.zones.push_back(zone);
    }
    validate_spec(s);
    return s;
}

json spec_to_json(const ScenarioSpec& s) {
    json events = json::array(), zones = json::array();
    for (const auto& e : s.events) {
        events.push_back({{"frame", e.frame}, {"feature", std::string(to_string(e.feature))}, {"magnitude", e.magnitude}, {"ramp", e.ramp}});
    }
    for (const auto& z : s.zones) {
        zones.push_back({{"grid", z.grid}, {"row", z.row}, {"col", z.col}, {"detect_prob", z.detect_prob},
                         {"duplicate_prob", z.duplicate_prob}});
    }
    const auto& d = s.detector;
    return {{"name", s.name},
            {"frame_count", s.frame_count},
            {"width", s.width},
            {"height", s.height},
            {"seed", s.seed},
            {"background", s.background},
            {"person_color", s.person_color},
            {"people", s.people},
            {"person_width", s.person_width},
            {"person_height", s.person_height},
            {"noise_sigma", s.noise_sigma},
            {"margin", s.margin},
            {"detector_model",
             {{"base_detect_prob", d.base_detect_prob},
              {"luminosity_knee", d.luminosity_knee},
              {"degraded_detect_prob", d.degraded_detect_prob},
              {"false_positive_rate", d.false_positive_rate}}},
            {"events", events},
            {"zones", zones}};
}

json truth_to_json(const PlantedTruth& t) {
    json pairs = json::array();
    for (const auto& p : t.pairs) pairs.push_back({{"kpi", p.kpi}, {"metric", p.metric}, {"cut", p.cut}, {"sign", p.sign}});
    return {{"pairs", pairs}, {"null_kpis", t.null_kpis}};
}

double background_level(const ScenarioSpec& s, int t) {
    double level = s.background;
    for (const auto& e : s.events) {
        if (e.feature != EventFeature::luminosity_background || t < e.frame) continue;
        const double frac = e.ramp == 0 ? 1.0 : std::min(1.0, static_cast<double>(t - e.frame + 1) / (e.ramp + 1));
        level += frac * e.magnitude;
    }
    return level;
}

GeneratedScenario generate_scenario(const ScenarioSpec& s, bool with_frames) {
    validate_spec(s);
    GeneratedScenario out;
    ProjectData& d = out.data;
    d.name = s.name;
    d.manifest.width = s.width;
    d.manifest.height = s.height;
    d.manifest.frame_count = s.frame_count;
    d.manifest.fps = {10, 1};
    d.predictions.provenance = Provenance::prediction;
    d.ground_truth.provenance = Provenance::ground_truth;
    d.config = synth_kpi_config();
    if (with_frames) d.frames.emplace();

    const Layout layout = make_layout(s);
    const auto& det = s.detector;
    for (int t = 0; t < s.frame_count; ++t) {
        auto noise_gen = stream(s.seed, kNoiseStream, t);
        std::normal_distribution<double> normal(0.0, 1.0);
        const double jitter = s.noise_sigma > 0.0 ? s.noise_sigma * normal(noise_gen) : 0.0;
        const int level = static_cast<int>(std::clamp(std::round(background_level(s, t) + jitter), 0.0, 255.0));

        std::vector<Box> truth;
        for (const auto& w : layout.walkers) truth.push_back({layout.x_at(w, t), w.y, s.person_width, s.person_height, "person", 1.0});

        auto det_gen = stream(s.seed, kDetectStream, t);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        std::vector<Box> detected;
        for (const auto& b : truth) {
            double p = level >= det.luminosity_knee ? det.base_detect_prob : det.degraded_detect_prob;
            double dup = 0.0;
            for (const auto& z : s.zones) {
                if (!in_zone(z, b, s.width, s.height)) continue;
                p = std::min(p, z.detect_prob);
                dup = std::max(dup, z.duplicate_prob);
            }
            // both draws are always taken so the stream stays aligned across specs
            const bool hit = unit(det_gen) < p;
            const bool twice = unit(det_gen) < dup;
            if (hit) {
                Box box = b;
                box.score = 0.9;
                detected.push_back(box);
                if (twice) {
                    box.score = 0.6;
                    detected.push_back(box);
                }
            }
        }
        if (det.false_positive_rate > 0.0) {
            auto fp_gen = stream(s.seed, kFalsePosStream, t);
            std::poisson_distribution<int> count(det.false_positive_rate);
            std::uniform_int_distribution<int> fx(0, s.width - s.person_width);
            std::uniform_int_distribution<int> fy(0, s.height - s.person_height);
            for (int k = count(fp_gen); k > 0; --k) {
                const int x = fx(fp_gen);
                detected.push_back({x, fy(fp_gen), s.person_width, s.person_height, "person", 0.5});
            }
        }

        if (with_frames) {
            Frame f;
            f.index = t;
            f.width = s.width;
            f.height = s.height;
            f.rgb.assign(f.pixel_count() * 3, static_cast<std::uint8_t>(level));
            for (const auto& b : truth) {
                for (int y = b.y; y < b.y + b.h; ++y) {
                    for (int x = b.x; x < b.x + b.w; ++x) {
                        const auto i = 3 * (static_cast<std::size_t>(y) * s.width + x);
                        for (int c = 0; c < 3; ++c) f.rgb[i + c] = static_cast<std::uint8_t>(s.person_color[c]);
                    }
                }
            }
            d.frames->push_back(std::move(f));
        }
        d.ground_truth.frames.push_back(std::move(truth));
        d.predictions.frames.push_back(std::move(detected));
    }

    for (const auto& e : s.events) {
        if (e.feature != EventFeature::luminosity_background) continue;
        const double before = background_level(s, e.frame - 1);
        const double after = background_level(s, e.frame + e.ramp);
        const bool crosses = (before >= det.luminosity_knee) != (after >= det.luminosity_knee);
        if (crosses && det.base_detect_prob != det.degraded_detect_prob) {
            out.truth.pairs.push_back({"luminosity", kCountErrorMetric, e.frame, e.magnitude > 0 ? 1 : -1});
        }
    }
    out.truth.null_kpis.push_back("edge_fraction");
    const bool lit = std::any_of(s.events.begin(), s.events.end(),
                                 [](const StepEvent& e) { return e.feature == EventFeature::luminosity_background; });
    if (!lit) out.truth.null_kpis.push_back("luminosity");
    return out;
}

PlantedTruth write_scenario(const ScenarioSpec& spec, const fs::path& dir) {
    auto g = generate_scenario(spec, true);
    const ProjectLayout layout{dir};
    write_manifest(g.data.manifest, layout.manifest());
    for (const auto& f : *g.data.frames) write_ppm(f, dir / format_frame_path(g.data.manifest.frame_pattern, f.index));
    write_log(g.data.predictions, layout.predictions());
    write_log(g.data.ground_truth, layout.ground_truth());
    write_file(layout.kpi_config(), kpi_config_to_json(g.data.config).dump(2) + "\n");
    write_file(dir / "truth.json", truth_to_json(g.truth).dump(2) + "\n");
    write_file(dir / "spec.json", spec_to_json(spec).dump(2) + "\n");
    return g.truth;
}

KpiConfig synth_kpi_config() {
    KpiConfig cfg;
    cfg.kpis = default_kpis();
    KpiDefinition k1;
    k1.name = "kpi_1";
    k1.lambda = Lambda::luminosity;
    KpiDefinition k2;
    k2.name = "kpi_2";
    k2.lambda = Lambda::edge_fraction;
    cfg.kpis.push_back(k1);
    cfg.kpis.push_back(k2);
    return cfg;
}

RecoveryReport score_recovery(const PlantedTruth& truth, const QueryResult& result, int tol) {
    RecoveryReport r;
    auto names = [](const EvidenceWindow& w, const std::string& kpi) {
        return std::any_of(w.matched_atoms.begin(), w.matched_atoms.end(), [&](const AtomEvidence& a) { return a.kpi == kpi; });
    };
    for (const auto& p : truth.pairs) {
        ++r.pairs;
        const bool hit = std::any_of(result.windows.begin(), result.windows.end(), [&](const EvidenceWindow& w) {
            return w.start_frame - tol <= p.cut && p.cut <= w.end_frame + tol && names(w, p.kpi);
        });
        if (hit) ++r.hits;
    }
    for (const auto& k : truth.null_kpis) {
        ++r.null_kpis;
        if (std::any_of(result.windows.begin(), result.windows.end(), [&](const EvidenceWindow& w) { return names(w, k); })) {
            ++r.false_alarms;
        }
    }
    return r;
}

bool top_window_contains(const QueryResult& result, int frame, int tol) {
    if (result.windows.empty()) return false;
    const auto& w = result.windows.front();
    return w.start_frame - tol <= frame && frame <= w.end_frame + tol;
}

ScenarioSpec lighting_scenario(std::uint64_t seed) {
    ScenarioSpec s;
    s.name = "lighting";
    s.seed = seed;
    s.events.push_back({1000, EventFeature::luminosity_background, -80.0, 0});
    return s;
}

ScenarioSpec zoned_scenario(std::uint64_t seed) {
    ScenarioSpec s;
    s.name = "zoned";
    s.seed = seed;
    s.frame_count = 600;
    s.zones.push_back({4, 1, 2, 0.1});
    return s;
}

std::vector<ScenarioSpec> cross_scene_scenarios(std::uint64_t seed) {
    // Same look everywhere; each camera has its own cells where people are
    // missed (detect 0.05) or reported twice (duplicate 0.9). scene_c misses
    // people in two cells the training scenes double and doubles them in two
    // cells they miss, so position cues learned on a and b point the wrong way.
    struct Scene {
        const char* name;
        std::vector<Zone> zones;
    };
    const std::vector<Scene> scenes{
        {"scene_a", {{4, 0, 1, 0.05}, {4, 2, 2, 0.05}, {4, 1, 3, 1.0, 0.9}, {4, 3, 0, 1.0, 0.9}}},
        {"scene_b", {{4, 1, 0, 0.05}, {4, 3, 3, 0.05}, {4, 0, 2, 1.0, 0.9}, {4, 2, 1, 1.0, 0.9}}},
        {"scene_c", {{4, 1, 3, 0.05}, {4, 2, 1, 0.05}, {4, 0, 1, 1.0, 0.9}, {4, 3, 3, 1.0, 0.9}}},
    };
    std::vector<ScenarioSpec> out;
    for (std::size_t i = 0; i < scenes.size(); ++i) {
        ScenarioSpec s;
        s.name = scenes[i].name;
        s.seed = derive_seed(seed, i);
        s.frame_count = 1500;
        s.background = 120.0;
        s.person_color = {230, 210, 190};
        s.zones = scenes[i].zones;
        s.detector.luminosity_knee = 0.0;
        s.detector.false_positive_rate = 0.0;
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace vizex
