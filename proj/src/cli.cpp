#include "vizex/cli.hpp"

#include <cmath>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "vizex/io.hpp"
#include "vizex/project.hpp"
#include "vizex/rdd.hpp"
#include "vizex/service.hpp"
#include "vizex/surrogate.hpp"
#include "vizex/synth.hpp"

namespace vizex {

namespace {

using nlohmann::json;

std::optional<fs::path> opt_path(const std::string& s) {
    if (s.empty()) return std::nullopt;
    return fs::path(s);
}

void write_series(const fs::path& root, const std::string& name, const Series& s, const json& meta) {
    const auto dir = ProjectLayout{root}.series_dir();
    write_file(dir / (name + ".csv"), series_to_csv(s));
    write_file(dir / (name + ".meta.json"), meta.dump(2) + "\n");
}

FeatureTable table_for(const ProjectData& d, int stride, const std::string& scene) {
    if (!d.frames) throw Error(ErrorCode::InvalidArgument, "the baseline needs frames; '" + scene + "' is log-only");
    return build_feature_table(*d.frames, d.manifest, d.predictions, d.ground_truth, stride, scene, d.config.canny);
}

int default_stride(const Manifest& m) { return std::max(1, static_cast<int>(std::lround(m.fps.value()))); }

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"vizex: explain detector errors with regression discontinuities over KPI series", "vizex"};
    app.require_subcommand(1);

    std::string project, config, series_name, text, spec_file, preset, out_dir, host = "127.0.0.1", report_out;
    std::vector<std::string> names, projects, train_dirs, test_dirs;
    int bandwidth = 20, n_sims = 500, min_sep = 0, grid = 4, port = 8650, stride = 0, depth = 10;
    double alpha = 0.05, threshold = -1.0;
    std::uint64_t seed = 1;
    bool no_frames = false, synth_baseline = false;

    auto* ingest = app.add_subcommand("ingest", "Validate a project and print its inventory");
    ingest->add_option("--project", project, "Project directory")->required();

    auto* kpi = app.add_subcommand("kpi", "Compute KPI series into series/");
    kpi->add_option("--project", project, "Project directory")->required();
    kpi->add_option("--config", config, "KPI definitions (kpis.json)");
    kpi->add_option("--name", names, "KPI to compute (default: all)");

    auto* eval = app.add_subcommand("eval", "Compute error series and heatmaps");
    eval->add_option("--project", project, "Project directory")->required();
    eval->add_option("--grid", grid, "Heatmap grid size")->check(CLI::Range(1, 64));

    auto* scan = app.add_subcommand("scan", "Scan one series for discontinuities");
    scan->add_option("--project", project, "Project directory")->required();
    scan->add_option("--config", config, "KPI definitions (kpis.json)");
    scan->add_option("--series", series_name, "KPI or metric name")->required();
    scan->add_option("--bandwidth", bandwidth, "Frames per side")->check(CLI::Range(2, 1000000));
    scan->add_option("--alpha", alpha, "Family-wise false-alarm rate")->check(CLI::Range(0.0, 1.0));
    scan->add_option("--threshold", threshold, "Fixed |t| threshold (skips calibration)");
    scan->add_option("--n-sims", n_sims, "Null simulations for calibration")->check(CLI::Range(100, 1000000));
    scan->add_option("--min-separation", min_sep, "Minimum frames between reported cuts (default: bandwidth)");

    auto* query = app.add_subcommand("query", "Run a causal query and write results/query_<hash>.json");
    query->add_option("text", text, "Query text")->required();
    query->add_option("--project", project, "Project directory")->required();
    query->add_option("--config", config, "KPI definitions (kpis.json)");
    query->add_option("--n-sims", n_sims, "Null simulations for calibration")->check(CLI::Range(100, 1000000));

    auto* baseline = app.add_subcommand("baseline", "Decision-tree surrogate: train on some scenes, test on others");
    baseline->add_option("--train", train_dirs, "Training project directories");
    baseline->add_option("--test", test_dirs, "Testing project directories");
    baseline->add_flag("--synth", synth_baseline, "Use the synthetic cross-scene scenario instead of projects");
    baseline->add_option("--seed", seed, "Scenario seed (with --synth) and tree seed");
    baseline->add_option("--stride", stride, "Frames per sampled row (default: one per second)");
    baseline->add_option("--depth", depth, "Maximum tree depth")->check(CLI::Range(0, 64));
    baseline->add_option("--out", report_out, "Write the report JSON here");

    auto* synth = app.add_subcommand("synth", "Generate a synthetic project with planted causes");
    synth->add_option("--spec", spec_file, "ScenarioSpec JSON");
    synth->add_option("--preset", preset, "lighting, zoned or cross")->check(CLI::IsMember({"lighting", "zoned", "cross"}));
    synth->add_option("--seed", seed, "Seed for presets");
    synth->add_option("--out", out_dir, "Output directory")->required();

    auto* serve_cmd = app.add_subcommand("serve", "Serve the HTTP API");
    serve_cmd->add_option("--project", projects, "Project directory (repeatable)")->required();
    serve_cmd->add_option("--port", port, "TCP port")->check(CLI::Range(1, 65535));
    serve_cmd->add_option("--host", host, "Bind address");
    serve_cmd->add_flag("--no-frames", no_frames, "Never serve frame pixels");
    serve_cmd->add_option("--config", config, "KPI definitions applied to every project");
    serve_cmd->add_option("--n-sims", n_sims, "Null simulations for calibration")->check(CLI::Range(100, 1000000));

    std::vector<std::string> argv_store{"vizex"};
    argv_store.insert(argv_store.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& a : argv_store) argv.push_back(a.data());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*ingest) {
            const auto p = Project::open(project);
            const auto& d = p->data();
            auto count = [](const PredictionLog& log) {
                std::size_t n = 0;
                for (const auto& f : log.frames) n += f.size();
                return n;
            };
            json j{{"id", p->id()},
                   {"name", p->name()},
                   {"frame_count", d.manifest.frame_count},
                   {"width", d.manifest.width},
                   {"height", d.manifest.height},
                   {"has_frames", p->has_frames()},
                   {"prediction_boxes", count(d.predictions)},
                   {"ground_truth_boxes", count(d.ground_truth)},
                   {"externals", json::array()},
                   {"kpis", p->kpi_names()}};
            for (const auto& [name, e] : d.externals) j["externals"].push_back(name);
            out << j.dump(2) << "\n";
        } else if (*kpi) {
            const auto p = Project::open(project, opt_path(config));
            if (names.empty()) {
                for (const auto& d : p->data().config.kpis) names.push_back(d.name);
            }
            for (const auto& n : names) {
                const auto s = p->kpi(n);
                write_series(project, n, s->points, s->metadata);
                out << n << ": " << s->points.size() << " points -> series/" << n << ".csv\n";
            }
        } else if (*eval) {
            const auto p = Project::open(project);
            for (const char* n : {kCountErrorMetric, kCorrectRateMetric}) {
                const auto m = p->metric(n);
                write_series(project, n, m->points, {{"metric", n}, {"kind", std::string(to_string(m->kind))}});
            }
            const auto maps = p->heatmap(grid);
            const json hm{{"overcount", heatmap_to_json(maps.overcount)}, {"undercount", heatmap_to_json(maps.undercount)}};
            write_file(ProjectLayout{project}.results_dir() / "heatmap.json", hm.dump(2) + "\n");
            long long under = 0, over = 0;
            for (const auto& pt : p->metric(kCountErrorMetric)->points) {
                under += pt.value < 0;
                over += pt.value > 0;
            }
            out << "frames: " << p->manifest().frame_count << "\nundercount frames: " << under
                << "\novercount frames: " << over << "\nunmatched ground truth: " << maps.undercount.total_count()
                << "\nunmatched detections: " << maps.overcount.total_count() << "\n";
        } else if (*scan) {
            const auto p = Project::open(project, opt_path(config));
            const Series& s = p->series(series_name);
            const double thr = threshold >= 0.0
                                   ? threshold
                                   : cached_null_threshold(static_cast<int>(s.size()), bandwidth, alpha, n_sims, QueryConfig{}.calibration_seed);
            const auto discs = scan_discontinuities(s, bandwidth, thr, min_sep > 0 ? min_sep : bandwidth, series_name);
            json list = json::array();
            for (const auto& d : discs) list.push_back(to_json(d));
            out << json{{"series", series_name}, {"bandwidth", bandwidth}, {"threshold", thr}, {"discontinuities", list}}.dump(2)
                << "\n";
        } else if (*query) {
            parse_query(text);  // syntax errors take precedence over project problems
            const auto p = Project::open(project, opt_path(config));
            QueryConfig cfg;
            cfg.n_sims = n_sims;
            const auto run = run_query(*p, text, cfg);
            out << summarize(run.result) << "wrote results/" << run.file_name << "\n";
        } else if (*baseline) {
            std::map<std::string, FeatureTable> tables;
            std::vector<std::string> train, test;
            if (synth_baseline) {
                const auto specs = cross_scene_scenarios(seed);
                for (std::size_t i = 0; i < specs.size(); ++i) {
                    const auto g = generate_scenario(specs[i]);
                    tables[specs[i].name] = table_for(g.data, stride > 0 ? stride : default_stride(g.data.manifest), specs[i].name);
                    (i + 1 < specs.size() ? train : test).push_back(specs[i].name);
                }
            } else {
                if (train_dirs.empty() || test_dirs.empty()) throw Error(ErrorCode::InvalidArgument, "--train and --test are required without --synth");
                auto load = [&](const std::vector<std::string>& dirs, std::vector<std::string>& ids) {
                    for (const auto& dir : dirs) {
                        const auto p = Project::open(dir);
                        const auto key = dir;
                        tables[key] = table_for(p->data(), stride > 0 ? stride : default_stride(p->manifest()), key);
                        ids.push_back(key);
                    }
                };
                load(train_dirs, train);
                load(test_dirs, test);
            }
            const auto report = evaluate_split(tables, train, test, depth, seed);
            const auto j = report_to_json(report).dump(2) + "\n";
            if (!report_out.empty()) write_file(report_out, j);
            out << j;
        } else if (*synth) {
            if (spec_file.empty() == preset.empty()) throw Error(ErrorCode::InvalidArgument, "give exactly one of --spec or --preset");
            if (!spec_file.empty()) {
                json j;
                try {
                    j = json::parse(read_file(spec_file));
                } catch (const json::exception& e) {
                    throw Error(ErrorCode::InvalidSpec, std::string("spec is not JSON: ") + e.what());
                }
                const auto truth = write_scenario(spec_from_json(j), out_dir);
                out << truth_to_json(truth).dump(2) << "\n";
            } else if (preset == "cross") {
                for (const auto& s : cross_scene_scenarios(seed)) {
                    write_scenario(s, fs::path(out_dir) / s.name);
                    out << "wrote " << (fs::path(out_dir) / s.name).string() << "\n";
                }
            } else {
                const auto spec = preset == "lighting" ? lighting_scenario(seed) : zoned_scenario(seed);
                out << truth_to_json(write_scenario(spec, out_dir)).dump(2) << "\n";
            }
        } else if (*serve_cmd) {
            std::vector<std::shared_ptr<Project>> loaded;
            for (const auto& dir : projects) {
                try {
                    loaded.push_back(Project::open(dir, opt_path(config)));
                } catch (const Error& e) {
                    throw Error(ErrorCode::ProjectInvalid, dir + ": " + e.what());
                }
            }
            ServiceOptions opts;
            opts.frames_enabled = !no_frames;
            opts.query_config.n_sims = n_sims;
            const Service service(std::move(loaded), opts);
            serve(service, host, port);
        }
    } catch (const Error& e) {
        err << "vizex: " << api_code(e.code()) << ": " << e.what() << "\n";
        return e.code() == ErrorCode::SyntaxError ? 2 : 1;
    } catch (const std::exception& e) {
        err << "vizex: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

int cli_main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return run_cli(args, std::cout, std::cerr);
}

}  // namespace vizex
