#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "ctxrace/env.hpp"

namespace ctxrace {

/// Line-delimited JSON episode log. Each episode is a `reset` record followed
/// by one `step` record per agent step; several episodes may share a stream.
class TraceWriter {
  public:
    explicit TraceWriter(std::ostream& out) : out_(&out) {}

    void reset(std::uint64_t seed, const ResetResult& r);
    void step(const Action& action, const StepResult& r);

  private:
    std::ostream* out_;
};

/// What the metrics need from one episode.
struct EpisodeSummary {
    std::uint64_t seed = 0;
    Context context;
    int steps = 0;
    double max_progress = 0.0;
    int overtake_score = 0;  // sum of per-step overtake deltas
    Termination cause = Termination::none;
    double total_reward = 0.0;

    bool operator==(const EpisodeSummary&) const = default;
};

/// Reads a trace and summarises every episode in it. Only `type`, `seed`,
/// `context` (reset) and `progress`, `overtake_delta`, `reward`, `cause`
/// (step) are required; other fields are ignored. Throws ParseError with the
/// offending line number.
std::vector<EpisodeSummary> summarize_trace(std::istream& in);

}  // namespace ctxrace
