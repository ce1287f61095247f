#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "vizex/error.hpp"
#include "vizex/rdd.hpp"

namespace vizex {

class Project;

enum class Comparator { eq, ne, lt, le, gt, ge };
enum class SignConstraint { any, rising, falling };

std::string_view to_string(Comparator c);
std::string_view to_string(SignConstraint s);
bool compare(double value, Comparator c, double literal);

// Source positions are carried for diagnostics and ignored by ==.
struct KpiAtom {
    std::string kpi;
    SignConstraint sign = SignConstraint::any;
    SourcePosition pos;

    bool operator==(const KpiAtom& o) const { return kpi == o.kpi && sign == o.sign; }
};

struct Conjunction {
    std::vector<KpiAtom> atoms;
    bool operator==(const Conjunction&) const = default;
};

struct MetricPredicate {
    std::string metric;
    Comparator cmp = Comparator::eq;
    double literal = 0.0;
    SourcePosition pos;

    bool operator==(const MetricPredicate& o) const {
        return metric == o.metric && cmp == o.cmp && literal == o.literal;
    }
};

struct QueryOptions {
    std::optional<double> bandwidth;
    std::optional<double> delta;
    std::optional<double> alpha;
    bool operator==(const QueryOptions&) const = default;
};

struct QueryAst {
    bool select_all = true;
    std::vector<std::string> select_list;
    std::string source;
    MetricPredicate predicate;
    std::vector<Conjunction> because;  // disjunction of conjunctions
    QueryOptions options;

    bool operator==(const QueryAst&) const = default;
};

// Throws SyntaxError carrying the line/column of the first violation and the
// set of tokens that would have been accepted there.
QueryAst parse_query(std::string_view text);

// Canonical one-line form with uppercase keywords; parse_query inverts it.
std::string pretty_print(const QueryAst& ast);

bool is_keyword(std::string_view word);

struct QueryConfig {
    std::vector<int> bandwidths{10, 20, 40};
    int delta = 5;
    double alpha = 0.05;
    int n_sims = 500;
    std::uint64_t calibration_seed = 0x5eedULL;
    int min_separation = 0;           // 0: one bandwidth
    int metric_bandwidth_factor = 2;  // bandwidth of the metric test anchored at KPI cuts
    int sample_frames = 4;
};

// WITH options override the configuration; BANDWIDTH replaces the list.
QueryConfig apply_options(QueryConfig config, const QueryOptions& options);
nlohmann::json config_to_json(const QueryConfig& c);
// Fields absent from j keep their values in `base`.
QueryConfig config_from_json(const nlohmann::json& j, QueryConfig base = {});

struct AtomEvidence {
    std::string kpi;
    SignConstraint sign = SignConstraint::any;
    AssociationEvidence evidence;
};

struct DisjunctMatch {
    int disjunct = 0;
    std::vector<AtomEvidence> atoms;
    double score = 0.0;  // min over atoms
    int bandwidth = 0;
};

struct EvidenceWindow {
    int start_frame = 0;
    int end_frame = 0;
    double score = 0.0;  // max over matches
    std::vector<DisjunctMatch> matches;
    std::vector<AtomEvidence> matched_atoms;  // flattened, in match order
    std::vector<int> sample_frames;
};

struct KpiSummary {
    std::string kpi;
    int windows = 0;
    double mean_abs_tau = 0.0;
    double mean_score = 0.0;
    int strongest_window = -1;  // index into windows
};

struct QueryResult {
    std::string query;  // canonical text
    std::string project_id;
    QueryConfig config;
    std::vector<EvidenceWindow> windows;
    std::vector<KpiSummary> summary;
    nlohmann::json plot_data = nlohmann::json::array();
};

QueryResult execute(const QueryAst& ast, const Project& project, const QueryConfig& config = {});

// Per-KPI statistics over the windows, sorted by KPI name; each window
// contributes the KPI's strongest atom evidence. Names in `kpis` get a row
// even when no window mentions them.
std::vector<KpiSummary> summarize_windows(const std::vector<EvidenceWindow>& windows,
                                          const std::vector<std::string>& kpis = {});

std::string summarize(const QueryResult& result);

nlohmann::json result_to_json(const QueryResult& result);

// Content address of a query under a configuration: query_<hash>.json.
std::string result_file_name(const std::string& canonical_query, const QueryConfig& config);

}  // namespace vizex
