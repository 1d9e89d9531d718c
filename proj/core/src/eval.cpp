#include "ctxrace/eval.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

#include "ctxrace/error.hpp"

namespace ctxrace {

namespace {

std::string shortest(double v) {
    char buf[40];
    const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

double snap(double v) { return std::round(v * 1e12) / 1e12 + 0.0; }

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

double csv_double(const std::string& s, std::size_t line) {
    double v = 0.0;
    const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || end != s.data() + s.size())
        throw ParseError("expected a number, got '" + s + "'", line);
    return v;
}

long long csv_int(const std::string& s, std::size_t line) {
    long long v = 0;
    const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || end != s.data() + s.size())
        throw ParseError("expected an integer, got '" + s + "'", line);
    return v;
}

std::string sanitize(std::string s) {
    for (char& c : s) {
        if (c == ',' || c == '\n' || c == '\r') c = ';';
    }
    return s;
}

std::string episode_failure(std::size_t episode, std::uint64_t seed, const std::string& what) {
    return "episode " + std::to_string(episode) + " (seed " + std::to_string(seed) + "): " + what;
}

}  // namespace

ContextGrid build_grid(double lo, double hi, double step, int laps) {
    if (laps <= 0) throw ConfigError("grid lap count must be > 0");
    if (!std::isfinite(lo) || !std::isfinite(hi) || lo > hi) throw ConfigError("grid range must satisfy lo <= hi");
    std::vector<double> values;
    if (lo == hi) {
        values.push_back(snap(lo));
    } else {
        if (!(step > 0.0)) throw ConfigError("grid step must be > 0");
        const double span = hi - lo;
        const double n = std::round(span / step);
        if (n < 1.0 || std::abs(n * step - span) > 1e-9 * std::max(1.0, span))
            throw ConfigError("grid step " + shortest(step) + " does not divide [" + shortest(lo) + ", " +
                              shortest(hi) + "]");
        const auto count = static_cast<std::size_t>(n);
        for (std::size_t i = 0; i <= count; ++i) values.push_back(snap(lo + span * static_cast<double>(i) / n));
    }
    ContextGrid grid;
    grid.laps = laps;
    for (double c_v : values) {
        for (double c_theta : values) grid.cells.push_back({c_v, c_theta});
    }
    return grid;
}

bool in_distribution(const Context& c, double range) {
    return std::abs(c.c_v) <= range + 1e-9 && std::abs(c.c_theta) <= range + 1e-9;
}

MetricsCell cell_metrics(std::size_t index, const Context& ctx, std::span<const EpisodeSummary> episodes,
                         double training_range) {
    MetricsCell cell;
    cell.index = index;
    cell.context = ctx;
    cell.in_distribution = in_distribution(ctx, training_range);
    cell.n_episodes = static_cast<int>(episodes.size());
    if (episodes.empty()) return cell;
    double pg = 0.0, ot = 0.0;
    for (const EpisodeSummary& e : episodes) {
        pg += std::min(1.0, e.max_progress);
        ot += e.overtake_score;
        if (e.cause == Termination::agent_collision) ++cell.a2a_count;
    }
    cell.pg_mean = pg / static_cast<double>(episodes.size());
    cell.ot_mean = ot / static_cast<double>(episodes.size());
    return cell;
}

EpisodeSummary run_episode(RaceEnv& env, Policy& policy, std::uint64_t seed, std::optional<Context> ctx,
                           TraceWriter* trace) {
    const ResetResult reset = env.reset(seed, ctx);
    if (trace != nullptr) trace->reset(seed, reset);
    policy.begin_episode(seed, reset);

    EpisodeSummary summary;
    summary.seed = seed;
    summary.context = reset.context;
    LidarScan obs = reset.obs;
    StepInfo info = reset.info;
    double reward = 0.0;
    for (;;) {
        const Action action = policy.act(obs, info, reward);
        StepResult r = env.step(action);
        if (trace != nullptr) trace->step(action, r);
        ++summary.steps;
        summary.max_progress = std::max(summary.max_progress, r.info.progress);
        summary.overtake_score += r.info.overtake_delta;
        summary.total_reward += r.reward;
        if (r.done) {
            summary.cause = r.info.cause;
            return summary;
        }
        obs = std::move(r.obs);
        info = std::move(r.info);
        reward = r.reward;
    }
}

MetricsCell run_cell(Policy& policy, const Scenario& scenario, std::size_t index, const Context& ctx, int laps,
                     std::uint64_t seed_base, std::ostream* trace) {
    RaceEnv env = scenario.make_env();
    std::optional<TraceWriter> writer;
    if (trace != nullptr) writer.emplace(*trace);
    std::vector<EpisodeSummary> episodes;
    std::string diagnostic;
    for (int k = 0; k < laps; ++k) {
        const std::uint64_t seed = seed_base + static_cast<std::uint64_t>(k);
        try {
            episodes.push_back(run_episode(env, policy, seed, ctx, writer ? &*writer : nullptr));
        } catch (const std::exception& e) {
            diagnostic = episode_failure(static_cast<std::size_t>(k), seed, e.what());
            break;
        }
    }
    MetricsCell cell = cell_metrics(index, ctx, episodes, scenario.env.context_high);
    if (!diagnostic.empty()) {
        cell.failed = true;
        cell.diagnostic = diagnostic;
    }
    return cell;
}

std::uint64_t cell_seed(std::uint64_t grid_seed, std::size_t index) { return mix_seed(grid_seed, index); }

std::filesystem::path cell_trace_path(const std::filesystem::path& dir, std::size_t index) {
    char name[32];
    std::snprintf(name, sizeof name, "cell_%03zu.jsonl", index);
    return dir / name;
}

std::vector<MetricsCell> run_grid(const PolicyFactory& make, const Scenario& scenario, const ContextGrid& grid,
                                  const GridOptions& opts) {
    if (opts.trace_dir) std::filesystem::create_directories(*opts.trace_dir);
    std::vector<MetricsCell> cells(grid.cells.size());
    std::atomic<std::size_t> next{0};
    const auto worker = [&] {
        for (std::size_t i = next++; i < grid.cells.size(); i = next++) {
            const Context& ctx = grid.cells[i];
            std::ofstream trace;
            if (opts.trace_dir) {
                trace.open(cell_trace_path(*opts.trace_dir, i));
                if (!trace) {
                    cells[i] = cell_metrics(i, ctx, {}, scenario.env.context_high);
                    cells[i].failed = true;
                    cells[i].diagnostic = "cannot write " + cell_trace_path(*opts.trace_dir, i).string();
                    continue;
                }
            }
            try {
                const auto policy = make();
                cells[i] = run_cell(*policy, scenario, i, ctx, grid.laps, cell_seed(opts.seed, i),
                                    opts.trace_dir ? &trace : nullptr);
            } catch (const std::exception& e) {
                cells[i] = cell_metrics(i, ctx, {}, scenario.env.context_high);
                cells[i].failed = true;
                cells[i].diagnostic = std::string("agent unavailable: ") + e.what();
            }
        }
    };
    const int jobs = std::max(1, std::min<int>(opts.jobs, static_cast<int>(grid.cells.size())));
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    }
    return cells;
}

std::vector<MetricsCell> metrics_from_traces(const std::filesystem::path& trace_dir, const ContextGrid& grid,
                                             double training_range) {
    std::vector<MetricsCell> cells;
    for (std::size_t i = 0; i < grid.cells.size(); ++i) {
        const auto path = cell_trace_path(trace_dir, i);
        std::ifstream in(path);
        if (!in) throw Error("cannot open trace " + path.string());
        std::vector<EpisodeSummary> episodes = summarize_trace(in);
        bool incomplete = false;
        if (!episodes.empty() && episodes.back().cause == Termination::none) {
            episodes.pop_back();
            incomplete = true;
        }
        MetricsCell cell = cell_metrics(i, grid.cells[i], episodes, training_range);
        if (incomplete || cell.n_episodes < grid.laps) {
            cell.failed = true;
            cell.diagnostic = "trace holds " + std::to_string(cell.n_episodes) + " of " + std::to_string(grid.laps) +
                              " completed episodes";
        }
        cells.push_back(std::move(cell));
    }
    return cells;
}

Aggregate aggregate(std::span<const MetricsCell> cells) {
    Aggregate out;
    for (const MetricsCell& c : cells) {
        if (c.failed) continue;
        SplitMeans& m = c.in_distribution ? out.id : out.ood;
        m.pg += c.pg_mean;
        m.ot += c.ot_mean;
        m.a2a += c.a2a_count;
        ++m.cells;
    }
    for (SplitMeans* m : {&out.id, &out.ood}) {
        if (m->cells == 0) throw ValidationError("aggregate needs at least one cell in each split");
        m->pg /= m->cells;
        m->ot /= m->cells;
        m->a2a /= m->cells;
    }
    return out;
}

double relative_change(double id_value, double ood_value) {
    if (id_value == 0.0) throw ValidationError("relative change is undefined for an in-distribution value of 0");
    return (ood_value - id_value) / id_value * 100.0;
}

void write_cells_csv(std::ostream& out, std::span<const MetricsCell> cells) {
    out << "index,c_v,c_theta,split,pg_mean,ot_mean,a2a_count,n_episodes,failed,diagnostic\n";
    for (const MetricsCell& c : cells) {
        out << c.index << ',' << shortest(c.context.c_v) << ',' << shortest(c.context.c_theta) << ','
            << (c.in_distribution ? "id" : "ood") << ',' << shortest(c.pg_mean) << ',' << shortest(c.ot_mean) << ','
            << c.a2a_count << ',' << c.n_episodes << ',' << (c.failed ? 1 : 0) << ',' << sanitize(c.diagnostic)
            << '\n';
    }
}

std::vector<MetricsCell> parse_cells_csv(std::istream& in) {
    std::vector<MetricsCell> cells;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1 || line.empty()) continue;
        const auto f = split_csv(line);
        if (f.size() != 10) throw ParseError("expected 10 columns", line_no);
        MetricsCell c;
        c.index = static_cast<std::size_t>(csv_int(f[0], line_no));
        c.context = {csv_double(f[1], line_no), csv_double(f[2], line_no)};
        if (f[3] != "id" && f[3] != "ood") throw ParseError("split must be id or ood", line_no);
        c.in_distribution = f[3] == "id";
        c.pg_mean = csv_double(f[4], line_no);
        c.ot_mean = csv_double(f[5], line_no);
        c.a2a_count = static_cast<int>(csv_int(f[6], line_no));
        c.n_episodes = static_cast<int>(csv_int(f[7], line_no));
        c.failed = csv_int(f[8], line_no) != 0;
        c.diagnostic = f[9];
        cells.push_back(std::move(c));
    }
    return cells;
}

void write_summary_csv(std::ostream& out, std::span<const SummaryRow> rows) {
    out << "label,split,cells,pg,ot,a2a\n";
    for (const SummaryRow& r : rows) {
        for (const auto& [split, m] : {std::pair{"id", &r.means.id}, std::pair{"ood", &r.means.ood}}) {
            out << sanitize(r.label) << ',' << split << ',' << m->cells << ',' << shortest(m->pg) << ','
                << shortest(m->ot) << ',' << shortest(m->a2a) << '\n';
        }
    }
}

std::vector<SummaryRow> parse_summary_csv(std::istream& in) {
    std::vector<SummaryRow> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1 || line.empty()) continue;
        const auto f = split_csv(line);
        if (f.size() != 6) throw ParseError("expected 6 columns", line_no);
        SplitMeans m;
        m.cells = static_cast<int>(csv_int(f[2], line_no));
        m.pg = csv_double(f[3], line_no);
        m.ot = csv_double(f[4], line_no);
        m.a2a = csv_double(f[5], line_no);
        if (f[1] == "id") {
            rows.push_back({f[0], {m, {}}});
        } else if (f[1] == "ood") {
            if (rows.empty() || rows.back().label != f[0]) throw ParseError("ood line without its id line", line_no);
            rows.back().means.ood = m;
        } else {
            throw ParseError("split must be id or ood", line_no);
        }
    }
    return rows;
}

void write_relative_csv(std::ostream& out, std::span<const SummaryRow> rows) {
    out << "label,metric,id,ood,relative_change_percent\n";
    for (const SummaryRow& r : rows) {
        const auto emit = [&](const char* metric, double id, double ood) {
            out << sanitize(r.label) << ',' << metric << ',' << shortest(id) << ',' << shortest(ood) << ',';
            if (id == 0.0) out << "nan";
            else out << shortest(relative_change(id, ood));
            out << '\n';
        };
        emit("pg", r.means.id.pg, r.means.ood.pg);
        emit("a2a", r.means.id.a2a, r.means.ood.a2a);
    }
}

std::string format_table(std::span<const SummaryRow> rows) {
    std::size_t width = 10;
    for (const SummaryRow& r : rows) width = std::max(width, r.label.size());
    std::ostringstream out;
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-*s  %-5s  %5s  %8s  %8s  %8s\n", static_cast<int>(width), "experiment", "split",
                  "cells", "PG", "OT", "A2A");
    out << buf;
    for (const SummaryRow& r : rows) {
        for (const auto& [split, m] : {std::pair{"ID", &r.means.id}, std::pair{"OOD", &r.means.ood}}) {
            const bool first = split[0] == 'I';
            std::snprintf(buf, sizeof buf, "%-*s  %-5s  %5d  %8.4f  %8.4f  %8.4f\n", static_cast<int>(width),
                          first ? r.label.c_str() : "", split, m->cells, m->pg, m->ot, m->a2a);
            out << buf;
        }
    }
    return out.str();
}

}  // namespace ctxrace
