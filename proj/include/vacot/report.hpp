// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "vacot/engine.hpp"
#include "vacot/toy_env.hpp"

#include <map>
#include <span>
#include <string_view>

namespace vacot {

struct TerminationHistogram {
    std::size_t episodes = 0;
    std::size_t satisfied = 0;
    std::size_t max_iterations = 0;
    std::map<int, std::size_t> steps_used; // refinement calls -> episodes

    bool operator==(const TerminationHistogram&) const = default;
};

TerminationHistogram termination_histogram(std::span<const EpisodeTrace> traces);

/// Columns: steps_used, episodes. Then satisfied / max_iterations totals as
/// trailing rows keyed "satisfied" and "max_iterations".
std::string to_tsv(const TerminationHistogram& hist);

struct IterationRewardRow {
    int iteration = 0; // 1-based refinement step
    std::size_t episodes = 0;
    double mean_r_total = 0.0;
    double mean_r_visual = 0.0;
    double mean_r_text = 0.0;

    bool operator==(const IterationRewardRow&) const = default;
};

/// Mean reward per refinement step over traces that recorded rewards.
std::vector<IterationRewardRow> per_iteration_rewards(std::span<const EpisodeTrace> traces);
std::string to_tsv(const std::vector<IterationRewardRow>& rows);

struct CurveSummary {
    std::size_t iterations = 0;
    double first_mean_reward = 0.0;
    double last_mean_reward = 0.0;
    double first_eval_reward = 0.0;
    double last_eval_reward = 0.0;
    double max_mean_reward = 0.0;
    double max_kl = 0.0;
    double mean_clip_fraction = 0.0;

    bool operator==(const CurveSummary&) const = default;
};

CurveSummary summarize_curve(const std::vector<TrainingRow>& rows);
std::string to_tsv(const CurveSummary& summary);

/// Line plot of mean_reward and eval_reward against iteration.
std::string render_curve_svg(const std::vector<TrainingRow>& rows);
/// Bar chart of episodes per steps_used.
std::string render_histogram_svg(const TerminationHistogram& hist);

/// Accepts one trace document, or one compact trace per line. Throws
/// MalformedInput with the record index.
std::vector<EpisodeTrace> load_traces(std::string_view text);
std::string traces_to_jsonl(std::span<const EpisodeTrace> traces);

} // namespace vacot
