#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <tuple>

#include "vizex/io.hpp"
#include "vizex/project.hpp"
#include "vizex/query.hpp"
#include "vizex/series.hpp"

namespace vizex {

namespace {

using nlohmann::json;

// A strict majority of the side's window satisfies the predicate.
bool holds_on_side(const Series& m, int cut, int bw, Side side, const MetricPredicate& p) {
    const int lo = side == Side::left ? cut - bw : cut;
    const int hi = side == Side::left ? cut - 1 : cut + bw - 1;
    int total = 0, ok = 0;
    for (const auto& pt : m) {
        if (pt.frame < lo || pt.frame > hi) continue;
        ++total;
        if (compare(pt.value, p.cmp, p.literal)) ++ok;
    }
    return total > 0 && 2 * ok > total;
}

bool predicate_holds(const Series& m, int cut, int bw, const MetricPredicate& p) {
    return holds_on_side(m, cut, bw, Side::left, p) || holds_on_side(m, cut, bw, Side::right, p);
}

bool sign_ok(SignConstraint s, double tau) {
    switch (s) {
        case SignConstraint::any: return true;
        case SignConstraint::rising: return tau > 0.0;
        case SignConstraint::falling: return tau < 0.0;
    }
    return false;
}

void check_config(const QueryConfig& c) {
    auto bad = [](const std::string& m) { throw Error(ErrorCode::InvalidArgument, m); };
    if (c.bandwidths.empty()) bad("at least one bandwidth is required");
    for (int b : c.bandwidths) {
        if (b < 2) bad("bandwidth must be >= 2");
    }
    if (c.delta < 0) bad("delta must be >= 0");
    if (!(c.alpha > 0.0 && c.alpha < 1.0)) bad("alpha must lie in (0, 1)");
    if (c.n_sims < 100) bad("n_sims must be >= 100");
    if (c.min_separation < 0) bad("min_separation must be >= 0");
    if (c.metric_bandwidth_factor < 0) bad("metric_bandwidth_factor must be >= 0");
    if (c.sample_frames < 1) bad("sample_frames must be >= 1");
}

int integral_option(double v, const char* name) {
    if (v != std::floor(v) || v < 0 || v > 1e6) {
        throw Error(ErrorCode::InvalidArgument, std::string(name) + " must be a non-negative integer");
    }
    return static_cast<int>(v);
}

std::vector<int> cuts_of(const DisjunctMatch& m) {
    std::vector<int> cuts;
    for (const auto& a : m.atoms) {
        cuts.push_back(a.evidence.kpi_disc.cutpoint);
        cuts.push_back(a.evidence.metric_disc.cutpoint);
    }
    return cuts;
}

// Metric cut with the largest |t| within +/-delta of `anchor` at bandwidth bm.
std::optional<DiscontinuityEstimate> anchored_metric_test(const Series& m, int anchor, int bm, int delta, double thr,
                                                         const MetricPredicate& pred, const std::string& name) {
    std::optional<DiscontinuityEstimate> best;
    for (int c = anchor - delta; c <= anchor + delta; ++c) {
        if (c - bm < m.front().frame || c + bm - 1 > m.back().frame) continue;
        if (!predicate_holds(m, c, bm, pred)) continue;
        auto d = discontinuity_at(m, c, bm, name);
        if (!best || std::abs(d.t_stat) > std::abs(best->t_stat)) best = std::move(d);
    }
    if (best && std::abs(best->t_stat) > 0.0 && std::abs(best->t_stat) >= thr) return best;
    return std::nullopt;
}

void match_disjunct(const std::vector<std::vector<AtomEvidence>>& per_atom, int delta, std::size_t i,
                    std::vector<AtomEvidence>& chosen, int disjunct, int bandwidth, std::vector<DisjunctMatch>& out) {
    if (i == per_atom.size()) {
        DisjunctMatch m{disjunct, chosen, std::numeric_limits<double>::infinity(), bandwidth};
        for (const auto& a : chosen) m.score = std::min(m.score, a.evidence.score);
        out.push_back(std::move(m));
        return;
    }
    for (const auto& e : per_atom[i]) {
        const bool compatible = std::all_of(chosen.begin(), chosen.end(), [&](const AtomEvidence& c) {
            return std::abs(c.evidence.kpi_disc.cutpoint - e.evidence.kpi_disc.cutpoint) <= delta &&
                   std::abs(c.evidence.metric_disc.cutpoint - e.evidence.metric_disc.cutpoint) <= delta;
        });
        if (!compatible) continue;
        chosen.push_back(e);
        match_disjunct(per_atom, delta, i + 1, chosen, disjunct, bandwidth, out);
        chosen.pop_back();
    }
}

std::vector<int> sample_frames(int start, int end, int k) {
    std::vector<int> out;
    if (k == 1 || start == end) return {start + (end - start) / 2};
    for (int i = 0; i < k; ++i) {
        const int f = start + static_cast<int>(std::lround(static_cast<double>(i) * (end - start) / (k - 1)));
        if (out.empty() || out.back() != f) out.push_back(f);
    }
    return out;
}

json segment_json(const std::string& name, const char* role, const Series& s, int from, int to) {
    json frames = json::array(), values = json::array();
    for (const auto& p : slice_series(s, from, to)) {
        frames.push_back(p.frame);
        values.push_back(p.value);
    }
    return {{"name", name}, {"role", role}, {"frames", frames}, {"values", values}};
}

json fit_line_json(const DiscontinuityEstimate& d) {
    const int c = d.cutpoint, w = d.bandwidth;
    auto line = [&](const LinearFit& f, int t0, int t1) {
        return json{{"x0", t0}, {"y0", f.value_at(t0, c)}, {"x1", t1}, {"y1", f.value_at(t1, c)}};
    };
    return {{"series", d.series_name},
            {"cutpoint", c},
            {"bandwidth", w},
            {"tau", d.tau},
            {"t_stat", json_number(d.t_stat)},
            {"left", line(d.left, c - w, c - 1)},
            {"right", line(d.right, c, c + w - 1)}};
}

json atom_json(const AtomEvidence& a) {
    return {{"kpi", a.kpi}, {"sign", std::string(to_string(a.sign))}, {"evidence", to_json(a.evidence)}};
}

}  // namespace

QueryConfig apply_options(QueryConfig c, const QueryOptions& o) {
    if (o.bandwidth) c.bandwidths = {integral_option(*o.bandwidth, "BANDWIDTH")};
    if (o.delta) c.delta = integral_option(*o.delta, "DELTA");
    if (o.alpha) c.alpha = *o.alpha;
    return c;
}

json config_to_json(const QueryConfig& c) {
    return {{"bandwidths", c.bandwidths},
            {"delta", c.delta},
            {"alpha", c.alpha},
            {"n_sims", c.n_sims},
            {"calibration_seed", c.calibration_seed},
            {"min_separation", c.min_separation},
            {"metric_bandwidth_factor", c.metric_bandwidth_factor},
            {"sample_frames", c.sample_frames}};
}

QueryConfig config_from_json(const json& j, QueryConfig c) {
    if (!j.is_object()) throw Error(ErrorCode::InvalidArgument, "options must be an object");
    try {
        for (const auto& [key, v] : j.items()) {
            if (key == "bandwidths") c.bandwidths = v.get<std::vector<int>>();
            else if (key == "bandwidth") c.bandwidths = {v.get<int>()};
            else if (key == "delta") c.delta = v.get<int>();
            else if (key == "alpha") c.alpha = v.get<double>();
            else if (key == "n_sims") c.n_sims = v.get<int>();
            else if (key == "calibration_seed") c.calibration_seed = v.get<std::uint64_t>();
            else if (key == "min_separation") c.min_separation = v.get<int>();
            else if (key == "metric_bandwidth_factor") c.metric_bandwidth_factor = v.get<int>();
            else if (key == "sample_frames") c.sample_frames = v.get<int>();
            else throw Error(ErrorCode::InvalidArgument, "unknown option '" + key + "'");
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidArgument, std::string("bad option value: ") + e.what());
    }
    return c;
}

QueryResult execute(const QueryAst& ast, const Project& project, const QueryConfig& base) {
    const QueryConfig cfg = apply_options(base, ast.options);
    check_config(cfg);

    const auto& pred = ast.predicate;
    if (!project.has_metric(pred.metric)) {
        throw Error(ErrorCode::UnknownMetric, "unknown metric '" + pred.metric + "'", pred.pos);
    }
    std::vector<std::string> kpi_names;
    for (const auto& conj : ast.because) {
        for (const auto& a : conj.atoms) {
            if (!project.has_kpi(a.kpi)) throw Error(ErrorCode::UnknownKpi, "unknown KPI '" + a.kpi + "'", a.pos);
            if (std::find(kpi_names.begin(), kpi_names.end(), a.kpi) == kpi_names.end()) kpi_names.push_back(a.kpi);
        }
    }
    for (const auto& s : ast.select_list) {
        if (!project.has_kpi(s) && !project.has_metric(s)) throw Error(ErrorCode::UnknownKpi, "unknown series '" + s + "'");
    }

    const Series& metric = project.metric(pred.metric)->points;
    std::map<std::string, const Series*> kpi_series;
    for (const auto& k : kpi_names) kpi_series[k] = &project.kpi(k)->points;

    std::size_t shortest = metric.size();
    for (const auto& [k, s] : kpi_series) shortest = std::min(shortest, s->size());
    std::vector<int> bandwidths;
    for (int b : cfg.bandwidths) {
        if (shortest >= static_cast<std::size_t>(2 * b) || ast.options.bandwidth) bandwidths.push_back(b);
    }
    if (bandwidths.empty()) {
        throw Error(ErrorCode::SeriesTooShort, "series have " + std::to_string(shortest) + " points, too short for every bandwidth");
    }

    auto threshold = [&](std::size_t n, int b) {
        return cached_null_threshold(static_cast<int>(n), b, cfg.alpha, cfg.n_sims, cfg.calibration_seed);
    };

    std::vector<DisjunctMatch> matches;
    for (int b : bandwidths) {
        const int min_sep = cfg.min_separation > 0 ? cfg.min_separation : b;
        std::map<std::string, std::vector<DiscontinuityEstimate>> kpi_discs;
        for (const auto& [k, s] : kpi_series) {
            kpi_discs[k] = scan_discontinuities(*s, b, threshold(s->size(), b), min_sep, k);
        }

        std::vector<DiscontinuityEstimate> metric_discs;
        for (auto& d : scan_discontinuities(metric, b, threshold(metric.size(), b), min_sep, pred.metric)) {
            if (predicate_holds(metric, d.cutpoint, b, pred)) metric_discs.push_back(std::move(d));
        }
        const int bm = cfg.metric_bandwidth_factor * b;
        if (bm >= 2 && metric.size() >= static_cast<std::size_t>(2 * bm)) {
            const double thr = threshold(static_cast<std::size_t>(2 * bm + 2 * cfg.delta), bm);
            std::set<int> anchors;
            for (const auto& [k, discs] : kpi_discs) {
                for (const auto& d : discs) anchors.insert(d.cutpoint);
            }
            std::set<int> seen;
            for (int a : anchors) {
                auto d = anchored_metric_test(metric, a, bm, cfg.delta, thr, pred, pred.metric);
                if (d && seen.insert(d->cutpoint).second) metric_discs.push_back(std::move(*d));
            }
        }

        for (std::size_t di = 0; di < ast.because.size(); ++di) {
            std::vector<std::vector<AtomEvidence>> per_atom;
            for (const auto& atom : ast.because[di].atoms) {
                std::vector<DiscontinuityEstimate> signed_discs;
                for (const auto& d : kpi_discs[atom.kpi]) {
                    if (sign_ok(atom.sign, d.tau)) signed_discs.push_back(d);
                }
                std::vector<AtomEvidence> ev;
                for (auto& e : associate(signed_discs, metric_discs, cfg.delta)) ev.push_back({atom.kpi, atom.sign, std::move(e)});
                per_atom.push_back(std::move(ev));
            }
            std::vector<AtomEvidence> chosen;
            match_disjunct(per_atom, cfg.delta, 0, chosen, static_cast<int>(di), b, matches);
        }
    }

    // Matches become [min cut - b, max cut + b]; overlapping intervals coalesce.
    const int last_frame = project.manifest().frame_count - 1;
    struct Interval {
        int start, end;
        std::size_t match;
    };
    std::vector<Interval> intervals;
    for (std::size_t i = 0; i < matches.size(); ++i) {
        const auto cuts = cuts_of(matches[i]);
        const auto [lo, hi] = std::minmax_element(cuts.begin(), cuts.end());
        intervals.push_back({std::max(0, *lo - matches[i].bandwidth), std::min(last_frame, *hi + matches[i].bandwidth), i});
    }
    std::sort(intervals.begin(), intervals.end(),
              [](const Interval& a, const Interval& b) { return std::tie(a.start, a.end, a.match) < std::tie(b.start, b.end, b.match); });

    QueryResult result;
    result.query = pretty_print(ast);
    result.project_id = project.id();
    result.config = cfg;
    for (const auto& iv : intervals) {
        if (result.windows.empty() || iv.start > result.windows.back().end_frame) {
            EvidenceWindow w;
            w.start_frame = iv.start;
            w.end_frame = iv.end;
            result.windows.push_back(std::move(w));
        }
        auto& w = result.windows.back();
        w.end_frame = std::max(w.end_frame, iv.end);
        w.matches.push_back(matches[iv.match]);
    }
    for (auto& w : result.windows) {
        std::stable_sort(w.matches.begin(), w.matches.end(), [](const DisjunctMatch& a, const DisjunctMatch& b) {
            return std::tie(b.score, a.disjunct, a.bandwidth) < std::tie(a.score, b.disjunct, b.bandwidth);
        });
        w.score = w.matches.front().score;
        for (const auto& m : w.matches) w.matched_atoms.insert(w.matched_atoms.end(), m.atoms.begin(), m.atoms.end());
        w.sample_frames = sample_frames(w.start_frame, w.end_frame, cfg.sample_frames);
    }
    std::stable_sort(result.windows.begin(), result.windows.end(), [](const EvidenceWindow& a, const EvidenceWindow& b) {
        return std::tie(b.score, a.start_frame) < std::tie(a.score, b.start_frame);
    });
    result.summary = summarize_windows(result.windows, kpi_names);

    auto selected = [&](const std::string& name) {
        return ast.select_all || std::find(ast.select_list.begin(), ast.select_list.end(), name) != ast.select_list.end();
    };
    for (std::size_t i = 0; i < result.windows.size(); ++i) {
        const auto& w = result.windows[i];
        int from = w.start_frame, to = w.end_frame;
        std::vector<const DiscontinuityEstimate*> discs;
        std::set<std::tuple<std::string, int, int>> seen;
        for (const auto& a : w.matched_atoms) {
            for (const auto* d : {&a.evidence.kpi_disc, &a.evidence.metric_disc}) {
                if (!seen.emplace(d->series_name, d->cutpoint, d->bandwidth).second) continue;
                discs.push_back(d);
                from = std::min(from, d->cutpoint - d->bandwidth);
                to = std::max(to, d->cutpoint + d->bandwidth - 1);
            }
        }
        json series = json::array(), fits = json::array();
        std::set<std::string> kpis_in_window;
        for (const auto& a : w.matched_atoms) kpis_in_window.insert(a.kpi);
        for (const auto& k : kpis_in_window) {
            if (selected(k)) series.push_back(segment_json(k, "kpi", *kpi_series.at(k), from, to));
        }
        if (selected(pred.metric)) series.push_back(segment_json(pred.metric, "metric", metric, from, to));
        for (const auto* d : discs) {
            if (selected(d->series_name)) fits.push_back(fit_line_json(*d));
        }
        result.plot_data.push_back({{"window", i},
                                    {"start_frame", w.start_frame},
                                    {"end_frame", w.end_frame},
                                    {"series", series},
                                    {"fits", fits}});
    }
    return result;
}

std::vector<KpiSummary> summarize_windows(const std::vector<EvidenceWindow>& windows, const std::vector<std::string>& kpis) {
    std::map<std::string, KpiSummary> by_name;
    std::map<std::string, double> best_score;
    for (const auto& k : kpis) by_name[k].kpi = k;
    for (std::size_t wi = 0; wi < windows.size(); ++wi) {
        std::map<std::string, const AtomEvidence*> strongest;
        for (const auto& a : windows[wi].matched_atoms) {
            auto& s = strongest[a.kpi];
            if (!s || a.evidence.score > s->evidence.score) s = &a;
        }
        for (const auto& [k, a] : strongest) {
            auto& row = by_name[k];
            row.kpi = k;
            ++row.windows;
            row.mean_abs_tau += std::abs(a->evidence.kpi_disc.tau);
            row.mean_score += a->evidence.score;
            if (row.strongest_window < 0 || a->evidence.score > best_score[k]) {
                row.strongest_window = static_cast<int>(wi);
                best_score[k] = a->evidence.score;
            }
        }
    }
    std::vector<KpiSummary> out;
    for (auto& [k, row] : by_name) {
        if (row.windows > 0) {
            row.mean_abs_tau /= row.windows;
            row.mean_score /= row.windows;
        }
        out.push_back(row);
    }
    return out;
}

std::string summarize(const QueryResult& r) {
    std::string out = "query: " + r.query + "\n";
    out += std::to_string(r.windows.size()) + " evidence window" + (r.windows.size() == 1 ? "" : "s") + "\n";
    if (r.summary.empty()) return out;
    char line[256];
    std::snprintf(line, sizeof line, "%-24s %8s %12s %12s  %s\n", "kpi", "windows", "mean |tau|", "mean score", "strongest");
    out += line;
    for (const auto& s : r.summary) {
        std::string strongest = "-";
        if (s.strongest_window >= 0) {
            const auto& w = r.windows[static_cast<std::size_t>(s.strongest_window)];
            strongest = "[" + std::to_string(w.start_frame) + ", " + std::to_string(w.end_frame) + "]";
        }
        std::snprintf(line, sizeof line, "%-24s %8d %12.6g %12.6g  %s\n", s.kpi.c_str(), s.windows, s.mean_abs_tau,
                      s.mean_score, strongest.c_str());
        out += line;
    }
    return out;
}

json result_to_json(const QueryResult& r) {
    json windows = json::array();
    for (const auto& w : r.windows) {
        json matches = json::array(), atoms = json::array();
        for (const auto& m : w.matches) {
            json ma = json::array();
            for (const auto& a : m.atoms) ma.push_back(atom_json(a));
            matches.push_back({{"disjunct", m.disjunct}, {"bandwidth", m.bandwidth}, {"score", json_number(m.score)}, {"atoms", ma}});
        }
        for (const auto& a : w.matched_atoms) atoms.push_back(atom_json(a));
        windows.push_back({{"start_frame", w.start_frame},
                           {"end_frame", w.end_frame},
                           {"score", json_number(w.score)},
                           {"sample_frames", w.sample_frames},
                           {"matches", matches},
                           {"matched_atoms", atoms}});
    }
    json summary = json::array();
    for (const auto& s : r.summary) {
        summary.push_back({{"kpi", s.kpi},
                           {"windows", s.windows},
                           {"mean_abs_tau", s.mean_abs_tau},
                           {"mean_score", json_number(s.mean_score)},
                           {"strongest_window", s.strongest_window}});
    }
    return {{"query", r.query},
            {"project", r.project_id},
            {"config", config_to_json(r.config)},
            {"windows", windows},
            {"summary", summary},
            {"plot_data", r.plot_data}};
}

std::string result_file_name(const std::string& canonical_query, const QueryConfig& config) {
    return "query_" + hex64(fnv1a64(canonical_query + "\n" + config_to_json(config).dump())) + ".json";
}

}  // namespace vizex
