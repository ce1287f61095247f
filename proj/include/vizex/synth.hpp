#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "vizex/project.hpp"
#include "vizex/query.hpp"

namespace vizex {

enum class EventFeature { luminosity_background, none };

struct StepEvent {
    int frame = 0;
    EventFeature feature = EventFeature::luminosity_background;
    double magnitude = 0.0;  // gray levels
    int ramp = 0;            // frames over which the step is spread; 0 = instantaneous
};

struct DetectorModel {
    double base_detect_prob = 0.95;
    double luminosity_knee = 90.0;
    double degraded_detect_prob = 0.45;
    double false_positive_rate = 0.02;  // expected spurious boxes per frame
};

// A grid cell in which people are detected with probability at most detect_prob.
// A detection inside the cell is reported twice with probability duplicate_prob.
struct Zone {
    int grid = 4;
    int row = 0;
    int col = 0;
    double detect_prob = 0.1;
    double duplicate_prob = 0.0;
};

// True when the box centre lies inside the zone's grid cell.
bool in_zone(const Zone& z, const Box& b, int width, int height);

struct ScenarioSpec {
    std::string name = "scene";
    int frame_count = 2000;
    int width = 64;
    int height = 64;
    std::uint64_t seed = 1;
    double background = 140.0;
    std::array<int, 3> person_color{230, 210, 190};
    int people = 4;  // one per horizontal lane
    int person_width = 5;
    int person_height = 8;
    std::vector<StepEvent> events;
    DetectorModel detector;
    std::vector<Zone> zones;
    double noise_sigma = 2.0;  // per-frame background jitter, gray levels
    int margin = 20;           // events must lie in (margin, frame_count - margin)
};

void validate_spec(const ScenarioSpec& spec);
ScenarioSpec spec_from_json(const nlohmann::json& j);
nlohmann::json spec_to_json(const ScenarioSpec& spec);

struct PlantedPair {
    std::string kpi;
    std::string metric;
    int cut = 0;
    int sign = 0;  // sign of the KPI step
};

struct PlantedTruth {
    std::vector<PlantedPair> pairs;
    std::vector<std::string> null_kpis;
};

nlohmann::json truth_to_json(const PlantedTruth& truth);

struct GeneratedScenario {
    ProjectData data;
    PlantedTruth truth;
};

// Uniform gray background whose level follows the events, with bright
// rectangles walking one lane each. Deterministic in spec.seed; every frame
// draws from its own generator streams.
GeneratedScenario generate_scenario(const ScenarioSpec& spec, bool with_frames = true);

// Writes manifest, frames, logs, kpis.json and truth.json under dir.
PlantedTruth write_scenario(const ScenarioSpec& spec, const fs::path& dir);

// KPI config shipped with synthetic projects: the default KPIs plus kpi_1
// (luminosity) and kpi_2 (edge_fraction).
KpiConfig synth_kpi_config();

// Background level at frame t before noise.
double background_level(const ScenarioSpec& spec, int t);

struct RecoveryReport {
    int pairs = 0;
    int hits = 0;
    int null_kpis = 0;
    int false_alarms = 0;
    double hit_rate() const { return pairs ? static_cast<double>(hits) / pairs : 0.0; }
    double false_alarm_rate() const { return null_kpis ? static_cast<double>(false_alarms) / null_kpis : 0.0; }
};

RecoveryReport score_recovery(const PlantedTruth& truth, const QueryResult& result, int tolerance_frames);

// True when the top-ranked window, widened by the tolerance, contains the frame.
bool top_window_contains(const QueryResult& result, int frame, int tolerance_frames);

// Lighting drop 140 -> 60 at frame 1000 with a knee at 90.
ScenarioSpec lighting_scenario(std::uint64_t seed);

// No lighting events; one failure zone at (1, 2) of the 4x4 grid.
ScenarioSpec zoned_scenario(std::uint64_t seed);

// Three cameras with the same look but their own miss and duplicate zones; the last is the test scene.
std::vector<ScenarioSpec> cross_scene_scenarios(std::uint64_t seed);

}  // namespace vizex
