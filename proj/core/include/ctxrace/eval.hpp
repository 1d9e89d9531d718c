#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ctxrace/config.hpp"
#include "ctxrace/policy.hpp"
#include "ctxrace/trace.hpp"

namespace ctxrace {

struct ContextGrid {
    std::vector<Context> cells;  // c_v major, c_theta minor
    int laps = 50;
};

/// Cartesian square of {lo, lo + step, ..., hi}. `lo == hi` gives one value.
/// Lattice values are snapped to 1e-12 so 0.1 steps land on decimal values.
/// Throws ConfigError when `step` does not divide the range.
ContextGrid build_grid(double lo = -0.3, double hi = 0.3, double step = 0.1, int laps = 50);

/// Both coordinates within [-range, range] (1e-9 slack).
bool in_distribution(const Context& c, double range = kTrainingRange);

struct MetricsCell {
    std::size_t index = 0;
    Context context;
    double pg_mean = 0.0;
    double ot_mean = 0.0;
    int a2a_count = 0;
    int n_episodes = 0;
    bool in_distribution = false;
    bool failed = false;
    std::string diagnostic;

    bool operator==(const MetricsCell&) const = default;
};

/// PG is the mean of per-episode max progress (capped at 1), OT the mean
/// overtake score, A2A the number of agent-collision endings.
MetricsCell cell_metrics(std::size_t index, const Context& ctx, std::span<const EpisodeSummary> episodes,
                         double training_range = kTrainingRange);

/// Runs one episode to completion and returns its summary.
EpisodeSummary run_episode(RaceEnv& env, Policy& policy, std::uint64_t seed, std::optional<Context> ctx,
                           TraceWriter* trace = nullptr);

/// `laps` episodes with seeds seed_base .. seed_base + laps - 1. A policy
/// failure marks the cell failed instead of throwing.
MetricsCell run_cell(Policy& policy, const Scenario& scenario, std::size_t index, const Context& ctx, int laps,
                     std::uint64_t seed_base, std::ostream* trace = nullptr);

/// Seed of cell `index`; independent of how many cells the grid has.
std::uint64_t cell_seed(std::uint64_t grid_seed, std::size_t index);

using PolicyFactory = std::function<std::unique_ptr<Policy>()>;

struct GridOptions {
    std::uint64_t seed = 0;
    int jobs = 1;
    std::optional<std::filesystem::path> trace_dir;  // one cell_<index>.jsonl per cell
};

/// Runs every cell, `jobs` at a time, each with a fresh policy. Results are
/// ordered by cell index whatever the execution order.
std::vector<MetricsCell> run_grid(const PolicyFactory& make, const Scenario& scenario, const ContextGrid& grid,
                                  const GridOptions& opts = {});

/// Recomputes cell metrics from the per-cell traces written by run_grid.
std::vector<MetricsCell> metrics_from_traces(const std::filesystem::path& trace_dir, const ContextGrid& grid,
                                             double training_range = kTrainingRange);
std::filesystem::path cell_trace_path(const std::filesystem::path& dir, std::size_t index);

struct SplitMeans {
    double pg = 0.0;
    double ot = 0.0;
    double a2a = 0.0;
    int cells = 0;

    bool operator==(const SplitMeans&) const = default;
};

struct Aggregate {
    SplitMeans id;
    SplitMeans ood;

    bool operator==(const Aggregate&) const = default;
};

/// Unweighted mean over cells within each split. Failed cells are skipped.
/// Throws ValidationError if a split has no cells.
Aggregate aggregate(std::span<const MetricsCell> cells);

/// (ood - id) / id * 100. Throws ValidationError when id == 0.
double relative_change(double id_value, double ood_value);

void write_cells_csv(std::ostream& out, std::span<const MetricsCell> cells);
std::vector<MetricsCell> parse_cells_csv(std::istream& in);

/// One labelled experiment row block of the summary.
struct SummaryRow {
    std::string label;
    Aggregate means;

    bool operator==(const SummaryRow&) const = default;
};

void write_summary_csv(std::ostream& out, std::span<const SummaryRow> rows);
std::vector<SummaryRow> parse_summary_csv(std::istream& in);
/// Relative change of PG and A2A per row; OT is left out.
void write_relative_csv(std::ostream& out, std::span<const SummaryRow> rows);
/// Aligned text table with an in-distribution and an OOD line per row.
std::string format_table(std::span<const SummaryRow> rows);

}  // namespace ctxrace
