#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "ctxrace/error.hpp"
#include "ctxrace/eval.hpp"

using namespace ctxrace;

namespace {

const std::filesystem::path kData = std::filesystem::path(CTXRACE_TEST_DIR) / "data";

std::vector<EpisodeSummary> read_trace(const std::string& name) {
    std::ifstream in(kData / name);
    return summarize_trace(in);
}

const Scenario& oval_scenario() {
    static const Scenario s = [] {
        EnvConfig env;
        env.n_adversaries = 1;
        env.max_steps = 600;
        return make_scenario(env, tracks::oval());
    }();
    return s;
}

MetricsCell cell(double cv, double ct, double pg, double ot, int a2a, bool failed = false) {
    MetricsCell c;
    c.context = {cv, ct};
    c.in_distribution = in_distribution(c.context);
    c.pg_mean = pg;
    c.ot_mean = ot;
    c.a2a_count = a2a;
    c.n_episodes = 50;
    c.failed = failed;
    return c;
}

class ThrowingPolicy final : public Policy {
  public:
    void begin_episode(std::uint64_t, const ResetResult&) override {}
    Action act(const LidarScan&, const StepInfo& info, double) override {
        if (info.step >= 2) throw ProtocolError("peer sent garbage");
        return {-1, 0};
    }
};

}  // namespace

TEST(Grid, DefaultHas49CellsSplit9And40) {
    const ContextGrid g = build_grid();
    EXPECT_EQ(g.cells.size(), 49u);
    EXPECT_EQ(g.laps, 50);
    // Independent enumeration of the lattice.
    const double lattice[] = {-0.3, -0.2, -0.1, 0.0, 0.1, 0.2, 0.3};
    int id = 0, ood = 0;
    std::size_t i = 0;
    for (double cv : lattice) {
        for (double ct : lattice) {
            ASSERT_EQ(g.cells[i].c_v, cv);
            ASSERT_EQ(g.cells[i].c_theta, ct);
            const bool inside = std::abs(cv) <= 0.15 && std::abs(ct) <= 0.15;
            ASSERT_EQ(in_distribution(g.cells[i]), inside);
            (inside ? id : ood)++;
            ++i;
        }
    }
    EXPECT_EQ(id, 9);
    EXPECT_EQ(ood, 40);
}

TEST(Grid, DegenerateAndInvalid) {
    const ContextGrid one = build_grid(0.0, 0.0, 0.37, 1);
    ASSERT_EQ(one.cells.size(), 1u);
    EXPECT_EQ(one.cells[0], (Context{0.0, 0.0}));
    EXPECT_EQ(one.laps, 1);
    EXPECT_THROW(build_grid(-0.3, 0.3, 0.25), ConfigError);
    EXPECT_THROW(build_grid(0.3, -0.3, 0.1), ConfigError);
    EXPECT_THROW(build_grid(-0.3, 0.3, 0.0), ConfigError);
    EXPECT_EQ(build_grid(-0.2, 0.2, 0.2, 3).cells.size(), 9u);
}

TEST(Metrics, HandAuthoredTraces) {
    const auto lap = read_trace("lap_one_overtake.jsonl");
    const auto wall = read_trace("wall_crash.jsonl");
    const auto hit = read_trace("overtaken_collision.jsonl");
    ASSERT_EQ(lap.size(), 1u);
    ASSERT_EQ(wall.size(), 1u);
    ASSERT_EQ(hit.size(), 1u);

    const MetricsCell a = cell_metrics(0, lap[0].context, lap);
    EXPECT_EQ(a.pg_mean, 1.0);  // 1.004 capped at a full lap
    EXPECT_EQ(a.ot_mean, 1.0);
    EXPECT_EQ(a.a2a_count, 0);
    EXPECT_TRUE(a.in_distribution);

    const MetricsCell b = cell_metrics(1, wall[0].context, wall);
    EXPECT_EQ(b.pg_mean, 0.25);
    EXPECT_EQ(b.ot_mean, 0.0);
    EXPECT_EQ(b.a2a_count, 0);
    EXPECT_FALSE(b.in_distribution);

    const MetricsCell c = cell_metrics(2, hit[0].context, hit);
    EXPECT_EQ(c.pg_mean, 0.15);  // running maximum, not the final 0.14
    EXPECT_EQ(c.ot_mean, -1.0);
    EXPECT_EQ(c.a2a_count, 1);

    std::vector<EpisodeSummary> all{lap[0], wall[0], hit[0]};
    const MetricsCell m = cell_metrics(3, {}, all);
    EXPECT_EQ(m.n_episodes, 3);
    EXPECT_EQ(m.pg_mean, (1.0 + 0.25 + 0.15) / 3.0);
    EXPECT_EQ(m.ot_mean, 0.0);
    EXPECT_EQ(m.a2a_count, 1);
}

TEST(Metrics, ScriptedCrashAtQuarterLap) {
    std::vector<EpisodeSummary> eps(50);
    for (EpisodeSummary& e : eps) {
        e.max_progress = 0.25;
        e.cause = Termination::wall_collision;
    }
    const MetricsCell c = cell_metrics(0, {}, eps);
    EXPECT_EQ(c.pg_mean, 0.25);
    EXPECT_EQ(c.a2a_count, 0);
    EXPECT_EQ(c.n_episodes, 50);
}

TEST(RunCell, LapAgentNeverPasses) {
    // Slower than the adversary ahead: every episode is a clean lap.
    const Scenario& sc = oval_scenario();
    const auto policy = make_policy("raceline:0.25", sc);
    const MetricsCell c = run_cell(*policy, sc, 0, {0.0, 0.0}, 3, 100);
    EXPECT_FALSE(c.failed) << c.diagnostic;
    EXPECT_EQ(c.n_episodes, 3);
    EXPECT_EQ(c.pg_mean, 1.0);
    EXPECT_EQ(c.ot_mean, 0.0);
    EXPECT_EQ(c.a2a_count, 0);
}

TEST(RunCell, PolicyFailureMarksCellFailed) {
    ThrowingPolicy p;
    const MetricsCell c = run_cell(p, oval_scenario(), 4, {0.1, 0.1}, 3, 7);
    EXPECT_TRUE(c.failed);
    EXPECT_NE(c.diagnostic.find("peer sent garbage"), std::string::npos) << c.diagnostic;
    EXPECT_EQ(c.n_episodes, 0);
}

TEST(RunCell, SeedsAreConsecutiveFromBase) {
    std::ostringstream trace;
    const auto policy = make_policy("idle", oval_scenario());
    EnvConfig env = oval_scenario().env;
    env.max_steps = 2;
    const Scenario short_sc{env, oval_scenario().track, oval_scenario().raceline};
    run_cell(*policy, short_sc, 0, {}, 3, 40, &trace);
    std::istringstream in(trace.str());
    const auto eps = summarize_trace(in);
    ASSERT_EQ(eps.size(), 3u);
    for (std::size_t k = 0; k < 3; ++k) EXPECT_EQ(eps[k].seed, 40 + k);
    EXPECT_EQ(cell_seed(9, 3), cell_seed(9, 3));
    EXPECT_NE(cell_seed(9, 3), cell_seed(9, 4));
    EXPECT_NE(cell_seed(9, 3), cell_seed(10, 3));
}

TEST(RunGrid, ParallelMatchesSerialAndTraces) {
    const Scenario& sc = oval_scenario();
    const ContextGrid grid = build_grid(-0.3, 0.3, 0.3, 2);  // 9 cells
    const PolicyFactory make = [&] { return make_policy("random", sc); };
    const auto dir = std::filesystem::temp_directory_path() / "ctxrace_grid_test";
    std::filesystem::remove_all(dir);

    GridOptions serial;
    serial.seed = 5;
    const auto a = run_grid(make, sc, grid, serial);
    GridOptions parallel = serial;
    parallel.jobs = 4;
    parallel.trace_dir = dir;
    const auto b = run_grid(make, sc, grid, parallel);
    EXPECT_EQ(a, b);
    EXPECT_EQ(metrics_from_traces(dir, grid), b);

    // Any single cell re-run on its own reproduces the grid result.
    const auto policy = make();
    EXPECT_EQ(run_cell(*policy, sc, 6, grid.cells[6], grid.laps, cell_seed(5, 6)), a[6]);

    // A truncated trace marks its cell failed.
    std::filesystem::resize_file(cell_trace_path(dir, 2), 10);
    EXPECT_THROW(metrics_from_traces(dir, grid), ParseError);
    std::ofstream(cell_trace_path(dir, 2)).close();
    const auto c = metrics_from_traces(dir, grid);
    EXPECT_TRUE(c[2].failed);
    std::filesystem::remove_all(dir);
}

TEST(Aggregate, Cases) {
    std::vector<MetricsCell> same{cell(0, 0, 0.4, 1, 2), cell(0.3, 0, 0.4, 1, 2), cell(0, -0.3, 0.4, 1, 2)};
    const Aggregate s = aggregate(same);
    EXPECT_EQ(s.id.pg, 0.4);
    EXPECT_EQ(s.ood.pg, 0.4);
    EXPECT_EQ(s.ood.a2a, 2.0);
    EXPECT_EQ(s.id.cells, 1);
    EXPECT_EQ(s.ood.cells, 2);

    std::vector<MetricsCell> two{cell(0, 0, 0.2, 0, 0), cell(0.1, 0, 0.4, 0, 0), cell(0.3, 0.3, 0.9, 0, 0),
                                 cell(0.2, 0.2, 0.1, 0, 0, true)};
    const Aggregate t = aggregate(two);
    EXPECT_DOUBLE_EQ(t.id.pg, 0.3);
    EXPECT_EQ(t.ood.pg, 0.9);  // the failed cell is skipped
    EXPECT_EQ(t.ood.cells, 1);

    std::vector<MetricsCell> shuffled = two;
    std::mt19937 rng(1);
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    EXPECT_DOUBLE_EQ(aggregate(shuffled).id.pg, t.id.pg);

    std::vector<MetricsCell> only_id{cell(0, 0, 0.5, 0, 0)};
    EXPECT_THROW(aggregate(only_id), ValidationError);
}

TEST(RelativeChange, Cases) {
    EXPECT_NEAR(relative_change(0.5515, 0.5255), -4.714415231187670, 1e-12);
    EXPECT_EQ(relative_change(0.7, 0.7), 0.0);
    EXPECT_EQ(relative_change(10, 5), -50.0);
    EXPECT_THROW(relative_change(0.0, 1.0), ValidationError);
}

TEST(Reports, PublishedMeansRoundTrip) {
    SummaryRow row;
    row.label = "DreamerV3 / 1 adv / ESP";
    row.means.id = {0.5515, 0.1, 0.25, 9};
    row.means.ood = {0.5255, -0.05, 0.5, 40};
    std::vector<SummaryRow> rows{row};
    std::stringstream buf;
    write_summary_csv(buf, rows);
    EXPECT_EQ(parse_summary_csv(buf), rows);

    std::ostringstream rel;
    write_relative_csv(rel, rows);
    EXPECT_NE(rel.str().find("DreamerV3 / 1 adv / ESP,pg,0.5515,0.5255,-4.7144152311876"), std::string::npos)
        << rel.str();

    const std::string table = format_table(rows);
    EXPECT_NE(table.find("0.5515"), std::string::npos);
    EXPECT_NE(table.find("0.5255"), std::string::npos);
}

TEST(Reports, CellsCsvRoundTrip) {
    std::vector<MetricsCell> cells{cell(-0.3, 0.1, 0.123456789012345, -0.02, 3), cell(0, 0, 1.0, 0, 0, true)};
    cells[0].index = 0;
    cells[1].index = 1;
    cells[1].diagnostic = "agent unavailable: connection refused";
    std::stringstream buf;
    write_cells_csv(buf, cells);
    EXPECT_EQ(parse_cells_csv(buf), cells);
}
