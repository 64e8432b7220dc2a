// Copyright 2026 The phibench Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "phibench/error.hpp"
#include "phibench/evaluator.hpp"
#include "phibench/mann_whitney.hpp"
#include "phibench/pipeline.hpp"

namespace phibench {

enum class ReportFormat { csv, json, markdown };

inline ReportFormat parse_report_format(std::string_view s) {
    if (s == "csv") return ReportFormat::csv;
    if (s == "json") return ReportFormat::json;
    if (s == "markdown" || s == "md") return ReportFormat::markdown;
    throw ConfigError("unknown report format '" + std::string(s) + "' (expected csv, json or markdown)");
}

inline const char* file_extension(ReportFormat f) {
    switch (f) {
        case ReportFormat::csv: return "csv";
        case ReportFormat::json: return "json";
        case ReportFormat::markdown: return "md";
    }
    return "csv";
}

struct MetricRow {
    SetupKind setup = SetupKind::s1;
    AggregateMetrics agg;
};

struct StatsRow {
    SetupKind setup = SetupKind::s1;
    std::vector<RunStats> runs;
};

struct SignificanceRow {
    Level level = Level::case_level;
    Target target;
    std::string metric;  // "precision" or "recall"
    SetupKind setup_a = SetupKind::s1;
    SetupKind setup_b = SetupKind::s1;
    double p_value = 1.0;
};

struct Report {
    std::vector<MetricRow> rows;
    std::vector<StatsRow> stats;
    std::vector<SignificanceRow> significance;
};

struct EvalOptions {
    double iou_threshold = 0.5;
    std::vector<Target> targets = all_targets();
    bool case_level = true;
    bool instance_level = true;
};

namespace detail {

inline std::size_t target_rank(const Target& t) {
    const auto all = all_targets();
    return static_cast<std::size_t>(std::find(all.begin(), all.end(), t) - all.begin());
}

inline auto row_key(const MetricRow& r) {
    return std::make_tuple(static_cast<int>(r.agg.level), target_rank(r.agg.target), static_cast<int>(r.setup));
}

}  // namespace detail

/// Pairwise significance between setups for every (level, target) present.
inline std::vector<SignificanceRow> compute_significance(const std::vector<MetricRow>& rows) {
    std::vector<SignificanceRow> out;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = i + 1; j < rows.size(); ++j) {
            const auto& a = rows[i];
            const auto& b = rows[j];
            if (a.agg.level != b.agg.level || !(a.agg.target == b.agg.target) || a.setup == b.setup) continue;
            for (const char* metric : {"precision", "recall"}) {
                std::vector<double> xa, xb;
                const bool precision = std::string(metric) == "precision";
                for (const auto& m : a.agg.runs) xa.push_back(precision ? m.precision : m.recall);
                for (const auto& m : b.agg.runs) xb.push_back(precision ? m.precision : m.recall);
                out.push_back({a.agg.level, a.agg.target, metric, a.setup, b.setup, significance_test(xa, xb)});
            }
        }
    }
    return out;
}

inline void finalize(Report& report) {
    std::stable_sort(report.rows.begin(), report.rows.end(),
                     [](const MetricRow& a, const MetricRow& b) { return detail::row_key(a) < detail::row_key(b); });
    for (std::size_t i = 1; i < report.rows.size(); ++i) {
        if (detail::row_key(report.rows[i]) == detail::row_key(report.rows[i - 1])) {
            throw HeterogeneousRuns("duplicate rows for setup " + std::string(render_name(report.rows[i].setup)));
        }
    }
    std::stable_sort(report.stats.begin(), report.stats.end(),
                     [](const StatsRow& a, const StatsRow& b) { return a.setup < b.setup; });
    report.significance = compute_significance(report.rows);
}

/// Scores runs against a manifest. Instance rows are skipped, with a warning,
/// for setups that are not instance-evaluable.
inline Report build_report(const std::vector<RunArtifacts>& runs, const DatasetManifest& manifest,
                           const EvalOptions& options, std::vector<std::string>* warnings = nullptr) {
    std::map<SetupKind, std::vector<const RunArtifacts*>> by_setup;
    for (const auto& r : runs) by_setup[r.setup].push_back(&r);
    Report report;
    for (const auto& [setup, group] : by_setup) {
        for (const auto* r : group) {
            if (r->policy_hash != group.front()->policy_hash) {
                throw HeterogeneousRuns("setup " + std::string(render_name(setup)) + " mixes policies");
            }
        }
        StatsRow stats{setup, {}};
        for (const auto* r : group) stats.runs.push_back(r->stats);
        report.stats.push_back(std::move(stats));
        for (Level level : {Level::case_level, Level::instance_level}) {
            if (level == Level::case_level && !options.case_level) continue;
            if (level == Level::instance_level && !options.instance_level) continue;
            for (const auto& target : options.targets) {
                std::vector<Metrics> per_run;
                try {
                    for (const auto* r : group) {
                        per_run.push_back(level == Level::case_level
                                              ? case_metrics(*r, manifest, target)
                                              : instance_metrics(*r, manifest, target, options.iou_threshold));
                    }
                } catch (const NotInstanceEvaluable& e) {
                    if (warnings) {
                        warnings->push_back("setup " + std::string(render_name(setup)) +
                                            ": instance level omitted (" + e.what() + ")");
                    }
                    break;
                }
                report.rows.push_back({setup, aggregate_runs(per_run)});
            }
        }
    }
    finalize(report);
    return report;
}

// ---------------------------------------------------------------------------
// Formatting

/// Four decimals, as used for precision and recall.
inline std::string format_metric(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", x);
    return buf;
}

/// One decimal with a trailing ".0" dropped: 0 -> "0", 0.4 -> "0.4".
inline std::string format_count_mean(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f", x);
    std::string s = buf;
    if (s.size() >= 2 && s.compare(s.size() - 2, 2, ".0") == 0) s.resize(s.size() - 2);
    if (s == "-0") s = "0";
    return s;
}

inline std::string format_fixed(double x, int decimals) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, x);
    return buf;
}

inline std::string precision_cell(const AggregateMetrics& a) {
    return format_metric(a.mean_precision) + " [" + format_count_mean(a.mean_fp) + "]";
}

inline std::string recall_cell(const AggregateMetrics& a) {
    return format_metric(a.mean_recall) + " [" + format_count_mean(a.mean_fn) + "]";
}

struct StatsSummary {
    double error_rate = 0.0, error_rate_std = 0.0, total_time = 0.0, prompt_tokens = 0.0, response_tokens = 0.0;
    std::size_t image_count = 0;
};

inline StatsSummary summarize(const StatsRow& row) {
    StatsSummary s;
    if (row.runs.empty()) return s;
    std::vector<double> er, tt, pt, rt;
    for (const auto& r : row.runs) {
        er.push_back(r.error_rate);
        tt.push_back(r.total_time);
        pt.push_back(static_cast<double>(r.prompt_tokens));
        rt.push_back(static_cast<double>(r.response_tokens));
    }
    std::tie(s.error_rate, s.error_rate_std) = mean_std(er);
    s.total_time = mean_std(tt).first;
    s.prompt_tokens = mean_std(pt).first;
    s.response_tokens = mean_std(rt).first;
    s.image_count = row.runs.front().image_count;
    return s;
}

// ---------------------------------------------------------------------------
// JSON form, also the input of report merging.

inline nlohmann::ordered_json report_to_json(const Report& report) {
    using oj = nlohmann::ordered_json;
    oj rows = oj::array();
    for (const auto& r : report.rows) {
        const auto& a = r.agg;
        oj per_run = oj::array();
        for (const auto& m : a.runs) {
            per_run.push_back(oj{{"tp", m.tp}, {"fp", m.fp}, {"fn", m.fn}, {"precision", m.precision},
                                 {"recall", m.recall}});
        }
        rows.push_back(oj{{"level", render_name(a.level)},
                          {"target", a.target.name()},
                          {"setup", render_name(r.setup)},
                          {"runs", a.runs.size()},
                          {"precision", precision_cell(a)},
                          {"recall", recall_cell(a)},
                          {"mean_precision", a.mean_precision},
                          {"std_precision", a.std_precision},
                          {"mean_recall", a.mean_recall},
                          {"std_recall", a.std_recall},
                          {"mean_fp", a.mean_fp},
                          {"std_fp", a.std_fp},
                          {"mean_fn", a.mean_fn},
                          {"std_fn", a.std_fn},
                          {"per_run", per_run}});
    }
    oj stats = oj::array();
    for (const auto& s : report.stats) {
        oj per_run = oj::array();
        for (const auto& r : s.runs) per_run.push_back(stats_to_json(r));
        const auto sum = summarize(s);
        stats.push_back(oj{{"setup", render_name(s.setup)},
                           {"runs", s.runs.size()},
                           {"mean_error_rate", sum.error_rate},
                           {"std_error_rate", sum.error_rate_std},
                           {"mean_total_time", sum.total_time},
                           {"mean_prompt_tokens", sum.prompt_tokens},
                           {"mean_response_tokens", sum.response_tokens},
                           {"per_run", per_run}});
    }
    oj sig = oj::array();
    for (const auto& s : report.significance) {
        sig.push_back(oj{{"level", render_name(s.level)},
                         {"target", s.target.name()},
                         {"metric", s.metric},
                         {"setup_a", render_name(s.setup_a)},
                         {"setup_b", render_name(s.setup_b)},
                         {"p_value", s.p_value}});
    }
    return oj{{"rows", rows}, {"stats", stats}, {"significance", sig}};
}

inline Report report_from_json(const nlohmann::json& j) {
    Report report;
    try {
        for (const auto& r : j.at("rows")) {
            const Level level = parse_level(r.at("level").get<std::string>());
            const Target target = parse_target(r.at("target").get<std::string>());
            std::vector<Metrics> per_run;
            for (const auto& m : r.at("per_run")) {
                per_run.push_back(make_metrics(level, target, m.at("tp").get<std::size_t>(),
                                               m.at("fp").get<std::size_t>(), m.at("fn").get<std::size_t>()));
            }
            report.rows.push_back({parse_setup(r.at("setup").get<std::string>()), aggregate_runs(per_run)});
        }
        for (const auto& s : j.at("stats")) {
            StatsRow row{parse_setup(s.at("setup").get<std::string>()), {}};
            for (const auto& r : s.at("per_run")) {
                row.runs.push_back({r.at("image_count").get<std::size_t>(), r.at("failed_count").get<std::size_t>(),
                                    r.at("error_rate").get<double>(), r.at("total_time").get<double>(),
                                    r.at("prompt_tokens").get<std::int64_t>(),
                                    r.at("response_tokens").get<std::int64_t>()});
            }
            report.stats.push_back(std::move(row));
        }
    } catch (const ConfigError& e) {
        throw IoError(std::string("invalid report document: ") + e.what());
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("invalid report document: ") + e.what());
    }
    finalize(report);
    return report;
}

/// Combines reports, e.g. one per setup, and recomputes significance.
inline Report merge_reports(const std::vector<Report>& parts) {
    Report out;
    for (const auto& p : parts) {
        out.rows.insert(out.rows.end(), p.rows.begin(), p.rows.end());
        out.stats.insert(out.stats.end(), p.stats.begin(), p.stats.end());
    }
    std::stable_sort(out.stats.begin(), out.stats.end(),
                     [](const StatsRow& a, const StatsRow& b) { return a.setup < b.setup; });
    for (std::size_t i = 1; i < out.stats.size(); ++i) {
        if (out.stats[i].setup == out.stats[i - 1].setup) {
            throw HeterogeneousRuns("setup " + std::string(render_name(out.stats[i].setup)) + " appears twice");
        }
    }
    finalize(out);
    return out;
}

// ---------------------------------------------------------------------------
// Emission

inline std::string emit_report(const Report& report, ReportFormat format) {
    std::ostringstream out;
    switch (format) {
        case ReportFormat::json:
            out << report_to_json(report).dump(2) << '\n';
            break;
        case ReportFormat::csv:
            out << "level,target,setup,runs,precision,recall\n";
            for (const auto& r : report.rows) {
                out << render_name(r.agg.level) << ',' << r.agg.target.name() << ',' << render_name(r.setup) << ','
                    << r.agg.runs.size() << ',' << precision_cell(r.agg) << ',' << recall_cell(r.agg) << '\n';
            }
            out << "\nsetup,runs,images,error_rate,total_time,prompt_tokens,response_tokens\n";
            for (const auto& s : report.stats) {
                const auto sum = summarize(s);
                out << render_name(s.setup) << ',' << s.runs.size() << ',' << sum.image_count << ','
                    << format_metric(sum.error_rate) << ',' << format_fixed(sum.total_time, 2) << ','
                    << format_fixed(sum.prompt_tokens, 1) << ',' << format_fixed(sum.response_tokens, 1) << '\n';
            }
            out << "\nlevel,target,metric,setup_a,setup_b,p_value\n";
            for (const auto& s : report.significance) {
                out << render_name(s.level) << ',' << s.target.name() << ',' << s.metric << ','
                    << render_name(s.setup_a) << ',' << render_name(s.setup_b) << ',' << format_metric(s.p_value)
                    << '\n';
            }
            break;
        case ReportFormat::markdown:
            out << "## Detection\n\n| Level | Target | Setup | Runs | Precision [FP] | Recall [FN] |\n"
                   "|---|---|---|---|---|---|\n";
            for (const auto& r : report.rows) {
                out << "| " << render_name(r.agg.level) << " | " << r.agg.target.name() << " | "
                    << render_name(r.setup) << " | " << r.agg.runs.size() << " | " << precision_cell(r.agg) << " | "
                    << recall_cell(r.agg) << " |\n";
            }
            out << "\n## Run statistics\n\n| Setup | Runs | Images | Error rate | Total time (s) | Prompt tokens | "
                   "Response tokens |\n|---|---|---|---|---|---|---|\n";
            for (const auto& s : report.stats) {
                const auto sum = summarize(s);
                out << "| " << render_name(s.setup) << " | " << s.runs.size() << " | " << sum.image_count << " | "
                    << format_fixed(sum.error_rate * 100.0, 2) << " % | " << format_fixed(sum.total_time, 2)
                    << " | " << format_fixed(sum.prompt_tokens, 1) << " | " << format_fixed(sum.response_tokens, 1)
                    << " |\n";
            }
            if (report.significance.empty()) break;
            out << "\n## Significance (two-sided Mann-Whitney U)\n\n| Level | Target | Metric | Setups | p |\n"
                   "|---|---|---|---|---|\n";
            for (const auto& s : report.significance) {
                out << "| " << render_name(s.level) << " | " << s.target.name() << " | " << s.metric << " | "
                    << render_name(s.setup_a) << " vs " << render_name(s.setup_b) << " | "
                    << format_metric(s.p_value) << (s.p_value < 0.05 ? " *" : "") << " |\n";
            }
            break;
    }
    return out.str();
}

inline void write_report(const Report& report, ReportFormat format, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << emit_report(report, format);
    if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace phibench
