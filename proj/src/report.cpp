// SPDX-License-Identifier: Apache-2.0
#include "vacot/report.hpp"

#include "vacot/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <sstream>

namespace vacot {

using nlohmann::json;

TerminationHistogram termination_histogram(std::span<const EpisodeTrace> traces)
{
    TerminationHistogram h;
    for (auto const& t : traces) {
        ++h.episodes;
        ++h.steps_used[static_cast<int>(t.steps.size())];
        if (t.terminated_by == Termination::Satisfied)
            ++h.satisfied;
        else
            ++h.max_iterations;
    }
    return h;
}

std::string to_tsv(const TerminationHistogram& h)
{
    std::string out = "steps_used\tepisodes\n";
    for (auto const& [steps, n] : h.steps_used)
        out += fmt::format("{}\t{}\n", steps, n);
    if (h.episodes > 0) {
        out += fmt::format("satisfied\t{}\n", h.satisfied);
        out += fmt::format("max_iterations\t{}\n", h.max_iterations);
    }
    return out;
}

std::vector<IterationRewardRow> per_iteration_rewards(std::span<const EpisodeTrace> traces)
{
    std::map<int, IterationRewardRow> acc;
    for (auto const& t : traces) {
        for (auto const& s : t.steps) {
            if (!s.reward)
                continue;
            auto& row = acc[s.iteration];
            row.iteration = s.iteration;
            ++row.episodes;
            row.mean_r_total += s.reward->r_total;
            row.mean_r_visual += s.reward->r_visual;
            row.mean_r_text += s.reward->r_text;
        }
    }
    std::vector<IterationRewardRow> rows;
    for (auto& [_, row] : acc) {
        auto const n = static_cast<double>(row.episodes);
        row.mean_r_total /= n;
        row.mean_r_visual /= n;
        row.mean_r_text /= n;
        rows.push_back(row);
    }
    return rows;
}

std::string to_tsv(const std::vector<IterationRewardRow>& rows)
{
    std::string out = "iteration\tepisodes\tmean_r_total\tmean_r_visual\tmean_r_text\n";
    for (auto const& r : rows)
        out += fmt::format("{}\t{}\t{:.6f}\t{:.6f}\t{:.6f}\n", r.iteration, r.episodes, r.mean_r_total,
                           r.mean_r_visual, r.mean_r_text);
    return out;
}

CurveSummary summarize_curve(const std::vector<TrainingRow>& rows)
{
    CurveSummary s;
    s.iterations = rows.size();
    if (rows.empty())
        return s;
    s.first_mean_reward = rows.front().mean_reward;
    s.last_mean_reward = rows.back().mean_reward;
    s.first_eval_reward = rows.front().eval_reward;
    s.last_eval_reward = rows.back().eval_reward;
    s.max_mean_reward = rows.front().mean_reward;
    for (auto const& r : rows) {
        s.max_mean_reward = std::max(s.max_mean_reward, r.mean_reward);
        s.max_kl = std::max(s.max_kl, r.kl);
        s.mean_clip_fraction += r.clip_fraction;
    }
    s.mean_clip_fraction /= static_cast<double>(rows.size());
    return s;
}

std::string to_tsv(const CurveSummary& s)
{
    std::string out = "iterations\tfirst_mean_reward\tlast_mean_reward\tfirst_eval_reward\tlast_eval_reward\t"
                      "max_mean_reward\tmax_kl\tmean_clip_fraction\n";
    if (s.iterations == 0)
        return out;
    out += fmt::format("{}\t{:.6f}\t{:.6f}\t{:.6f}\t{:.6f}\t{:.6f}\t{:.6g}\t{:.6f}\n", s.iterations,
                       s.first_mean_reward, s.last_mean_reward, s.first_eval_reward, s.last_eval_reward,
                       s.max_mean_reward, s.max_kl,
                       s.mean_clip_fraction);
    return out;
}

namespace {

constexpr double kWidth = 640, kHeight = 400, kMargin = 50;

std::string svg_open(std::string_view title)
{
    return fmt::format("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" "
                       "viewBox=\"0 0 {0} {1}\">\n"
                       "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
                       "<text x=\"{2}\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\">{3}</text>\n"
                       "<line x1=\"{2}\" y1=\"{4}\" x2=\"{5}\" y2=\"{4}\" stroke=\"black\"/>\n"
                       "<line x1=\"{2}\" y1=\"{2}\" x2=\"{2}\" y2=\"{4}\" stroke=\"black\"/>\n",
                       kWidth, kHeight, kMargin, title, kHeight - kMargin, kWidth - kMargin);
}

} // namespace

std::string render_curve_svg(const std::vector<TrainingRow>& rows)
{
    auto out = svg_open("reward vs iteration");
    if (!rows.empty()) {
        double lo = rows.front().mean_reward, hi = lo;
        for (auto const& r : rows) {
            lo = std::min({lo, r.mean_reward, r.eval_reward});
            hi = std::max({hi, r.mean_reward, r.eval_reward});
        }
        if (hi - lo < 1e-12)
            hi = lo + 1.0;
        auto const span_x = std::max<double>(1.0, static_cast<double>(rows.size() - 1));
        auto const px = [&](std::size_t i) { return kMargin + (kWidth - 2 * kMargin) * static_cast<double>(i) / span_x; };
        auto const py = [&](double v) { return kHeight - kMargin - (kHeight - 2 * kMargin) * (v - lo) / (hi - lo); };
        auto const line = [&](auto get, std::string_view colour, std::string_view label, double ly) {
            std::string pts;
            for (std::size_t i = 0; i < rows.size(); ++i)
                pts += fmt::format("{:.2f},{:.2f} ", px(i), py(get(rows[i])));
            out += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
                               colour, pts);
            out += fmt::format("<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" "
                               "fill=\"{}\">{}</text>\n",
                               kWidth - kMargin - 100, ly, colour, label);
        };
        line([](const TrainingRow& r) { return r.mean_reward; }, "steelblue", "mean_reward", 44);
        line([](const TrainingRow& r) { return r.eval_reward; }, "darkorange", "eval_reward", 60);
        out += fmt::format("<text x=\"4\" y=\"{:.2f}\" font-size=\"10\">{:.3f}</text>\n", py(hi) + 4, hi);
        out += fmt::format("<text x=\"4\" y=\"{:.2f}\" font-size=\"10\">{:.3f}</text>\n", py(lo), lo);
    }
    return out + "</svg>\n";
}

std::string render_histogram_svg(const TerminationHistogram& h)
{
    auto out = svg_open("episodes by refinement steps");
    if (!h.steps_used.empty()) {
        std::size_t peak = 0;
        for (auto const& [_, n] : h.steps_used)
            peak = std::max(peak, n);
        auto const slot = (kWidth - 2 * kMargin) / static_cast<double>(h.steps_used.size());
        std::size_t i = 0;
        for (auto const& [steps, n] : h.steps_used) {
            auto const height = (kHeight - 2 * kMargin) * static_cast<double>(n) / static_cast<double>(peak);
            auto const x = kMargin + slot * static_cast<double>(i) + slot * 0.15;
            out += fmt::format("<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" height=\"{:.2f}\" "
                               "fill=\"steelblue\"/>\n",
                               x, kHeight - kMargin - height, slot * 0.7, height);
            out += fmt::format("<text x=\"{:.2f}\" y=\"{}\" font-size=\"11\">{} ({})</text>\n", x,
                               kHeight - kMargin + 16, steps, n);
            ++i;
        }
    }
    return out + "</svg>\n";
}

std::vector<EpisodeTrace> load_traces(std::string_view text)
{
    std::vector<EpisodeTrace> out;
    if (text.find_first_not_of(" \t\r\n") == std::string_view::npos)
        return out;

    // A single (possibly pretty-printed) document parses whole; JSONL does not.
    json whole;
    bool single = true;
    try {
        whole = json::parse(text);
    } catch (const json::exception&) {
        single = false;
    }
    if (single) {
        try {
            out.push_back(trace_from_json(whole));
        } catch (const json::exception& e) {
            throw Error(Errc::MalformedInput, fmt::format("trace 0: {}", e.what()), 0);
        } catch (const Error& e) {
            throw Error(Errc::MalformedInput, fmt::format("trace 0: {}: {}", e.name(), e.what()), 0);
        }
        return out;
    }

    std::istringstream in {std::string(text)};
    std::size_t record = 0;
    for (std::string line; std::getline(in, line);) {
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        try {
            out.push_back(trace_from_json(json::parse(line)));
        } catch (const json::exception& e) {
            throw Error(Errc::MalformedInput, fmt::format("trace {}: {}", record, e.what()), record);
        } catch (const Error& e) {
            throw Error(Errc::MalformedInput, fmt::format("trace {}: {}: {}", record, e.name(), e.what()), record);
        }
        ++record;
    }
    return out;
}

std::string traces_to_jsonl(std::span<const EpisodeTrace> traces)
{
    std::string out;
    for (auto const& t : traces)
        out += to_json(t).dump() + "\n";
    return out;
}

} // namespace vacot
