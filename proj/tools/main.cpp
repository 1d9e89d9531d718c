// ctxrace command-line tool: track utilities, raceline computation, single
// races, evaluation grids and the environment server.

#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <unistd.h>

#include <CLI11.hpp>

#include "ctxrace/config.hpp"
#include "ctxrace/error.hpp"
#include "ctxrace/eval.hpp"
#include "ctxrace/policy.hpp"
#include "ctxrace/server.hpp"
#include "ctxrace/trace.hpp"
#include "svg.hpp"

namespace fs = std::filesystem;
using namespace ctxrace;

namespace {

struct ScenarioArgs {
    std::string config;
    std::string track;
    int adversaries = -1;

    void add_to(CLI::App* app) {
        app->add_option("--config", config, "Environment configuration file");
        app->add_option("--track", track, "Track CSV (overrides the config)");
        app->add_option("--adversaries", adversaries, "Number of adversaries (overrides the config)");
    }

    ScenarioConfig resolve() const {
        ScenarioConfig cfg = config.empty() ? ScenarioConfig{} : load_config(config);
        if (!track.empty()) {
            cfg.track = track;
            cfg.raceline_file.reset();
        }
        if (adversaries >= 0) cfg.env.n_adversaries = adversaries;
        if (cfg.track.empty()) throw ConfigError("no track given (use --track or a config with 'track = ...')");
        return cfg;
    }
};

Context parse_context(const std::string& text) {
    const auto comma = text.find(',');
    if (comma == std::string::npos) throw ConfigError("context must be 'c_v,c_theta'");
    try {
        return {std::stod(text.substr(0, comma)), std::stod(text.substr(comma + 1))};
    } catch (const std::exception&) {
        throw ConfigError("context must be 'c_v,c_theta', got '" + text + "'");
    }
}

std::tuple<double, double, double> parse_range(const std::string& text) {
    double v[3];
    std::istringstream in(text);
    std::string part;
    for (int i = 0; i < 3; ++i) {
        if (!std::getline(in, part, ':')) throw ConfigError("range must be 'lo:hi:step'");
        try {
            v[i] = std::stod(part);
        } catch (const std::exception&) {
            throw ConfigError("range must be 'lo:hi:step', got '" + text + "'");
        }
    }
    return {v[0], v[1], v[2]};
}

void write_file(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << content;
}

std::vector<Vec2> polyline(std::span<const Vec2> pts, bool closed) {
    std::vector<Vec2> out(pts.begin(), pts.end());
    if (closed && !out.empty()) out.push_back(out.front());
    return out;
}

std::vector<tools::Series> track_series(const Track& track) {
    return {{"", "#555", polyline(track.left_boundary(), true), 1.0},
            {"", "#555", polyline(track.right_boundary(), true), 1.0}};
}

// One lap of a lone adversary starting on the first raceline point.
struct Lap {
    std::vector<Vec2> path;
    std::vector<Vec2> speed;  // (distance along the raceline, v)
};

Lap adversary_lap(const Scenario& sc, const Context& ctx) {
    const Raceline& line = *sc.raceline;
    const RacelinePoint& p0 = line.points().front();
    VehicleState start;
    start.x = p0.x;
    start.y = p0.y;
    start.yaw = p0.heading;
    const int max_steps = sc.env.max_steps;
    const auto states = simulate_adversary(line, sc.env.adversary, ctx, sc.env.vehicle, start, max_steps,
                                           sc.env.substeps, sc.env.dt);
    Lap lap;
    LapCounter counter(line.total_length(), line.project(start.position()));
    ProjectionCache cache;
    for (const VehicleState& s : states) {
        counter.update(line.project(s.position(), &cache));
        if (counter.laps() >= 1) break;
        lap.path.push_back(s.position());
        lap.speed.push_back({counter.distance(), s.v});
    }
    return lap;
}

std::string context_label(const char* name, double c) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%s = %+.1f", name, c);
    return buf;
}

int cmd_track_gen(const std::string& kind, const std::string& out) {
    const auto make = [&] {
        if (kind == "oval") return tracks::oval();
        if (kind == "circle") return tracks::circle();
        if (kind == "square") return tracks::square();
        if (kind == "corner") return tracks::single_corner();
        throw ConfigError("unknown track kind '" + kind + "' (oval, circle, square, corner)");
    };
    const Track t = make();
    save_track(out, t);
    std::printf("wrote %s: %zu points, %.3f m\n", out.c_str(), t.size(), t.total_length());
    return 0;
}

int cmd_track_validate(const std::string& path) {
    const Track t = load_track(path);
    std::printf("ok: %zu points, %.3f m, hash %016llx\n", t.size(), t.total_length(),
                static_cast<unsigned long long>(t.hash()));
    return 0;
}

int cmd_raceline(const ScenarioArgs& args, const std::string& out) {
    const ScenarioConfig cfg = args.resolve();
    const Track track = load_track(cfg.track);
    const Raceline line = compute_raceline(track, cfg.env.raceline);
    save_raceline(out, line);
    double v_min = line.points().front().target_speed, v_max = v_min;
    for (const auto& p : line.points()) {
        v_min = std::min(v_min, p.target_speed);
        v_max = std::max(v_max, p.target_speed);
    }
    std::printf("wrote %s: %zu points, %.3f m, speed %.3f..%.3f m/s\n", out.c_str(), line.size(),
                line.total_length(), v_min, v_max);
    return 0;
}

struct RaceArgs {
    ScenarioArgs scenario;
    std::string agent = "raceline:0.5";
    std::string context;
    std::uint64_t seed = 0;
    std::string trace;
    std::string svg;
};

int cmd_race_run(const RaceArgs& args) {
    const Scenario sc = load_scenario(args.scenario.resolve());
    RaceEnv env = sc.make_env();
    const auto policy = make_policy(args.agent, sc);
    std::optional<Context> ctx;
    if (!args.context.empty()) ctx = parse_context(args.context);

    std::ofstream trace_file;
    std::optional<TraceWriter> writer;
    if (!args.trace.empty()) {
        if (fs::path(args.trace).has_parent_path()) fs::create_directories(fs::path(args.trace).parent_path());
        trace_file.open(args.trace, std::ios::binary);
        if (!trace_file) throw Error("cannot write " + args.trace);
        writer.emplace(trace_file);
    }

    // Stepped here rather than through run_episode to keep the driven paths.
    const ResetResult reset = env.reset(args.seed, ctx);
    if (writer) writer->reset(args.seed, reset);
    policy->begin_episode(args.seed, reset);
    const std::size_t n = reset.info.vehicles.size();
    std::vector<std::vector<Vec2>> paths(n), speeds(n);
    for (std::size_t k = 0; k < n; ++k) paths[k].push_back(reset.info.vehicles[k].position());
    LidarScan obs = reset.obs;
    StepInfo info = reset.info;
    double reward = 0.0, total = 0.0;
    StepResult r;
    do {
        const Action a = policy->act(obs, info, reward);
        r = env.step(a);
        if (writer) writer->step(a, r);
        for (std::size_t k = 0; k < n; ++k) {
            paths[k].push_back(r.info.vehicles[k].position());
            speeds[k].push_back({r.info.step * sc.env.dt * sc.env.substeps, r.info.vehicles[k].v});
        }
        total += r.reward;
        obs = r.obs;
        info = r.info;
        reward = r.reward;
    } while (!r.done);

    std::printf("cause=%s steps=%d progress=%.4f overtakes=%d return=%.4f context=%.3f,%.3f\n",
                std::string(to_string(r.info.cause)).c_str(), r.info.step, r.info.max_progress,
                r.info.overtake_score, total, env.context().c_v, env.context().c_theta);

    if (!args.svg.empty()) {
        std::vector<tools::Series> map = track_series(*sc.track);
        std::vector<tools::Series> profile;
        for (std::size_t k = 0; k < n; ++k) {
            const std::string label = k == 0 ? "agent" : "adversary " + std::to_string(k);
            map.push_back({label, tools::context_color(static_cast<int>(k)), paths[k]});
            profile.push_back({label, tools::context_color(static_cast<int>(k)), speeds[k]});
        }
        const fs::path svg = args.svg;
        write_file(svg, tools::svg_plot("Driven paths", "x [m]", "y [m]", map, true));
        fs::path speed_svg = svg;
        speed_svg.replace_filename(svg.stem().string() + "_speed.svg");
        write_file(speed_svg, tools::svg_plot("Speed", "time [s]", "v [m/s]", profile));
    }
    return 0;
}

int cmd_race_figures(const ScenarioArgs& args, const std::string& out_dir) {
    const Scenario sc = load_scenario(args.resolve());
    const double cs[] = {-0.3, 0.0, 0.3};
    std::vector<tools::Series> profiles, lines = track_series(*sc.track);
    std::ostringstream csv;
    csv << "figure,c,x,y,distance,v\n";
    for (int i = 0; i < 3; ++i) {
        const Lap lap = adversary_lap(sc, {cs[i], 0.0});
        profiles.push_back({context_label("c_v", cs[i]), tools::context_color(i), lap.speed});
        for (std::size_t k = 0; k < lap.path.size(); ++k)
            csv << "speed," << cs[i] << ',' << lap.path[k].x << ',' << lap.path[k].y << ',' << lap.speed[k].x << ','
                << lap.speed[k].y << '\n';
    }
    std::vector<Vec2> ref;
    for (const auto& p : sc.raceline->points()) ref.push_back(p.position());
    ref.push_back(ref.front());
    lines.push_back({"raceline", "#000", ref, 1.0, true});
    for (int i = 0; i < 3; ++i) {
        const Lap lap = adversary_lap(sc, {0.0, cs[i]});
        lines.push_back({context_label("c_theta", cs[i]), tools::context_color(i), lap.path});
        for (std::size_t k = 0; k < lap.path.size(); ++k)
            csv << "line," << cs[i] << ',' << lap.path[k].x << ',' << lap.path[k].y << ',' << lap.speed[k].x << ','
                << lap.speed[k].y << '\n';
    }
    const fs::path dir = out_dir;
    write_file(dir / "speed_profiles.svg",
               tools::svg_plot("Adversary velocity profiles", "distance along raceline [m]", "v [m/s]", profiles));
    write_file(dir / "racelines.svg", tools::svg_plot("Adversary race lines", "x [m]", "y [m]", lines, true));
    write_file(dir / "figures.csv", csv.str());
    std::printf("wrote %s/{speed_profiles.svg,racelines.svg,figures.csv}\n", out_dir.c_str());
    return 0;
}

struct EvalArgs {
    ScenarioArgs scenario;
    std::string agent = "raceline:0.5";
    int laps = 50;
    std::string range = "-0.3:0.3:0.1";
    std::string out;
    std::uint64_t seed = 0;
    int jobs = 1;
    std::string label;
};

int cmd_eval_grid(const EvalArgs& args) {
    const ScenarioConfig cfg = args.scenario.resolve();
    const Scenario sc = load_scenario(cfg);
    const auto [lo, hi, step] = parse_range(args.range);
    const ContextGrid grid = build_grid(lo, hi, step, args.laps);
    make_policy(args.agent, sc);  // fail fast on a bad agent spec
    const fs::path out = args.out;
    fs::create_directories(out);
    GridOptions opts;
    opts.seed = args.seed;
    opts.jobs = args.jobs;
    opts.trace_dir = out / "traces";
    const std::vector<MetricsCell> cells =
        run_grid([&] { return make_policy(args.agent, sc); }, sc, grid, opts);

    std::ostringstream cells_csv;
    write_cells_csv(cells_csv, cells);
    write_file(out / "cells.csv", cells_csv.str());

    int failed = 0;
    for (const MetricsCell& c : cells) {
        if (c.failed) {
            ++failed;
            std::fprintf(stderr, "cell %zu (%.2f, %.2f) failed: %s\n", c.index, c.context.c_v, c.context.c_theta,
                         c.diagnostic.c_str());
        }
    }
    const std::string label =
        args.label.empty()
            ? args.agent + " / " + std::to_string(sc.env.n_adversaries) + " adv / " + cfg.track.stem().string()
            : args.label;
    std::vector<SummaryRow> rows;
    try {
        rows.push_back({label, aggregate(cells)});
    } catch (const ValidationError& e) {
        std::fprintf(stderr, "no summary: %s\n", e.what());
        return 1;
    }
    std::ostringstream summary, relative;
    write_summary_csv(summary, rows);
    write_relative_csv(relative, rows);
    write_file(out / "summary.csv", summary.str());
    write_file(out / "relative.csv", relative.str());
    const std::string table = format_table(rows);
    write_file(out / "summary.txt", table);
    std::cout << table;
    std::printf("%zu cells (%d failed), %d laps each; results in %s\n", cells.size(), failed, grid.laps,
                out.string().c_str());
    return failed == 0 ? 0 : 1;
}

int cmd_serve(const ScenarioArgs& args, const std::string& transport) {
    const Scenario sc = load_scenario(args.resolve());
    std::signal(SIGPIPE, SIG_IGN);
    if (transport == "stdio") {
        serve_fd(sc, STDIN_FILENO, STDOUT_FILENO);
        return 0;
    }
    if (transport.rfind("tcp:", 0) == 0) {
        const std::string port_text = transport.substr(4);
        int port = -1;
        try {
            port = std::stoi(port_text);
        } catch (const std::exception&) {
        }
        if (port < 0 || port > 65535) throw ConfigError("invalid port in '" + transport + "'");
        TcpServer server(sc, static_cast<std::uint16_t>(port));
        std::fprintf(stderr, "listening on 127.0.0.1:%u\n", server.port());
        server.run();
        return 0;
    }
    throw ConfigError("transport must be 'stdio' or 'tcp:<port>'");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Head-to-head racing environment with context-parameterised adversaries"};
    app.require_subcommand(1);

    auto* track = app.add_subcommand("track", "Generate or validate track files");
    track->require_subcommand(1);
    std::string gen_kind = "oval", gen_out, validate_path;
    auto* gen = track->add_subcommand("gen", "Write a synthetic track");
    gen->add_option("--kind", gen_kind, "oval, circle, square or corner")->capture_default_str();
    gen->add_option("--out", gen_out, "Output CSV")->required();
    auto* validate = track->add_subcommand("validate", "Check a track CSV");
    validate->add_option("file", validate_path, "Track CSV")->required();

    auto* raceline = app.add_subcommand("raceline", "Raceline utilities");
    raceline->require_subcommand(1);
    ScenarioArgs raceline_args;
    std::string raceline_out;
    auto* compute = raceline->add_subcommand("compute", "Optimise the minimum-curvature raceline of a track");
    raceline_args.add_to(compute);
    compute->add_option("--out", raceline_out, "Output raceline CSV")->required();

    auto* race = app.add_subcommand("race", "Single races and figures");
    race->require_subcommand(1);
    RaceArgs race_args;
    auto* run = race->add_subcommand("run", "Run one scripted episode");
    race_args.scenario.add_to(run);
    run->add_option("--agent", race_args.agent, "idle, random, raceline[:scale], centerline[:scale], tcp:host:port")
        ->capture_default_str();
    run->add_option("--context", race_args.context, "c_v,c_theta (sampled from the training range if absent)");
    run->add_option("--seed", race_args.seed, "Episode seed")->capture_default_str();
    run->add_option("--trace", race_args.trace, "Write the episode trace (JSON lines)");
    run->add_option("--svg", race_args.svg, "Write driven paths (and <name>_speed.svg)");
    ScenarioArgs figure_args;
    std::string figure_out = "figures";
    auto* figures = race->add_subcommand("figures", "Adversary speed profiles and race lines for c in {-0.3, 0, 0.3}");
    figure_args.add_to(figures);
    figures->add_option("--out", figure_out, "Output directory")->capture_default_str();

    auto* eval = app.add_subcommand("eval", "Evaluation protocol");
    eval->require_subcommand(1);
    EvalArgs eval_args;
    auto* grid = eval->add_subcommand("grid", "Run the context grid and write cells/summary/relative CSVs");
    eval_args.scenario.add_to(grid);
    grid->add_option("--agent", eval_args.agent, "Agent spec (see race run)")->capture_default_str();
    grid->add_option("--laps", eval_args.laps, "Episodes per cell")->capture_default_str();
    grid->add_option("--range", eval_args.range, "lo:hi:step")->capture_default_str();
    grid->add_option("--out", eval_args.out, "Output directory")->required();
    grid->add_option("--seed", eval_args.seed, "Grid seed")->capture_default_str();
    grid->add_option("--jobs", eval_args.jobs, "Cells run in parallel")->capture_default_str();
    grid->add_option("--label", eval_args.label, "Row label in the summary");

    auto* serve = app.add_subcommand("serve", "Serve the environment line protocol");
    ScenarioArgs serve_args;
    std::string transport = "stdio";
    serve_args.add_to(serve);
    serve->add_option("--transport", transport, "stdio or tcp:<port>")->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return cmd_track_gen(gen_kind, gen_out);
        if (validate->parsed()) return cmd_track_validate(validate_path);
        if (compute->parsed()) return cmd_raceline(raceline_args, raceline_out);
        if (run->parsed()) return cmd_race_run(race_args);
        if (figures->parsed()) return cmd_race_figures(figure_args, figure_out);
        if (grid->parsed()) return cmd_eval_grid(eval_args);
        if (serve->parsed()) return cmd_serve(serve_args, transport);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
