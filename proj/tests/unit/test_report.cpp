// SPDX-License-Identifier: Apache-2.0
#include "support.hpp"

#include "vacot/report.hpp"

#include <doctest.h>

using namespace vacot;
using vacot::testing::error_code_of;
using vacot::testing::ScriptedBackend;

namespace {

EpisodeTrace episode(std::vector<bool> script)
{
    ScriptedBackend b(std::move(script));
    return run_episode(b, Prompt("p"), VisualContext {{ImageRef::from_vector({1})}}, EngineConfig {});
}

} // namespace

TEST_CASE("empty inputs give header-only tables")
{
    std::vector<EpisodeTrace> const none;
    CHECK(to_tsv(termination_histogram(none)) == "steps_used\tepisodes\n");
    CHECK(to_tsv(per_iteration_rewards(none)) == "iteration\tepisodes\tmean_r_total\tmean_r_visual\tmean_r_text\n");
    auto const summary = to_tsv(summarize_curve({}));
    CHECK(std::count(summary.begin(), summary.end(), '\n') == 1);
    CHECK(load_traces("").empty());
    CHECK(render_histogram_svg(termination_histogram(none)).find("<svg") == 0);
}

TEST_CASE("histogram of steps used")
{
    std::vector<EpisodeTrace> const traces {episode({true}), episode({false, true}), episode({false, true})};
    auto const h = termination_histogram(traces);
    CHECK(h.steps_used == std::map<int, std::size_t> {{1, 1}, {2, 2}});
    CHECK(h.satisfied == 3);
    CHECK(h.max_iterations == 0);
    CHECK(to_tsv(h) == "steps_used\tepisodes\n1\t1\n2\t2\nsatisfied\t3\nmax_iterations\t0\n");
    CHECK(render_histogram_svg(h).find("<rect x=") != std::string::npos);
}

TEST_CASE("monotone training curve")
{
    std::vector<TrainingRow> rows;
    for (int i = 0; i < 5; ++i)
        rows.push_back({i, 0.1 * (i + 1), 0.01 * i, 0.0, 0.0, 0.1 * (i + 1)});
    auto const s = summarize_curve(rows);
    CHECK(s.max_mean_reward == rows.back().mean_reward);
    CHECK(s.last_mean_reward == rows.back().mean_reward);
    CHECK(s.iterations == 5);
    auto const svg = render_curve_svg(rows);
    CHECK(svg.find("<polyline") != std::string::npos);
    CHECK(svg == render_curve_svg(rows));
}

TEST_CASE("trace loading")
{
    std::vector<EpisodeTrace> const traces {episode({true}), episode({false, false, true})};
    CHECK(load_traces(traces_to_jsonl(traces)) == traces);
    CHECK(load_traces(serialize(traces[1])).size() == 1);
    try {
        load_traces(traces_to_jsonl(traces) + "{\"nope\": 1}\n");
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::MalformedInput);
        CHECK(e.index() == 2u);
    }
}
