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

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "phibench/evaluator.hpp"
#include "phibench/mann_whitney.hpp"
#include "phibench/report.hpp"
#include "test_support.hpp"

namespace phibench {
namespace {

using phibench::testing::slurp;
using phibench::testing::source_path;

DetectedInstance inst(AnalyzerType t, std::optional<BoundingBox> box = std::nullopt, std::string text = "x") {
    return {box, text, {t, text, "r", "en"}};
}

ImageResult result(const std::string& id, std::vector<DetectedInstance> instances, bool ok = true) {
    ImageResult r;
    r.image_id = id;
    r.ok = ok;
    if (!ok) r.failure = "refused";
    r.instances = std::move(instances);
    return r;
}

RunArtifacts make_run(SetupKind setup, std::vector<ImageResult> results, std::string hash = "h") {
    RunArtifacts run;
    run.setup = setup;
    run.policy_hash = std::move(hash);
    run.results = std::move(results);
    run.stats = compute_run_stats(run.results, 1.0);
    return run;
}

ManifestEntry entry(const std::string& id, std::vector<LabelRecord> labels) {
    return {id, id + ".png", 400, 300, std::move(labels)};
}

// Four images, counted by hand:
//   img1  date + marker       predicted date            TP
//   img2  marker only         predicted identifier      FP
//   img3  email               predicted non-phi         FN
//   img4  patient name        image failed              FN
struct CaseFixture {
    DatasetManifest manifest;
    RunArtifacts run;

    CaseFixture() {
        manifest.entries = {
            entry("img1", {make_label({10, 10, 100, 20}, Category::date, "DOB 01-01-2023"),
                           make_label({10, 50, 30, 20}, Category::marker, "R")}),
            entry("img2", {make_label({10, 10, 30, 20}, Category::marker, "L")}),
            entry("img3", {make_label({10, 10, 200, 20}, Category::email, "Email: a@b.org")}),
            entry("img4", {make_label({10, 10, 120, 20}, Category::patient_name, "Name: John Doe")}),
        };
        run = make_run(SetupKind::s2,
                       {result("img1", {inst(AnalyzerType::date), inst(AnalyzerType::non_phi)}),
                        result("img2", {inst(AnalyzerType::identifier)}),
                        result("img3", {inst(AnalyzerType::non_phi)}),
                        result("img4", {inst(AnalyzerType::patient_name)}, false)});
    }
};

void expect_counts(const Metrics& m, std::size_t tp, std::size_t fp, std::size_t fn) {
    EXPECT_EQ(m.tp, tp) << m.target.name();
    EXPECT_EQ(m.fp, fp) << m.target.name();
    EXPECT_EQ(m.fn, fn) << m.target.name();
}

TEST(CaseMetrics, HandCountedFixture) {
    const CaseFixture f;
    const auto any = case_metrics(f.run, f.manifest, Target::phi_presence());
    expect_counts(any, 1, 1, 2);
    EXPECT_DOUBLE_EQ(any.precision, 0.5);
    EXPECT_DOUBLE_EQ(any.recall, 1.0 / 3.0);

    const auto date = case_metrics(f.run, f.manifest, Target::of(AnalyzerType::date));
    expect_counts(date, 1, 0, 0);
    EXPECT_DOUBLE_EQ(date.precision, 1.0);
    EXPECT_DOUBLE_EQ(date.recall, 1.0);

    // No predictions: precision defaults to 1.
    const auto email = case_metrics(f.run, f.manifest, Target::of(AnalyzerType::email));
    expect_counts(email, 0, 0, 1);
    EXPECT_DOUBLE_EQ(email.precision, 1.0);
    EXPECT_DOUBLE_EQ(email.recall, 0.0);

    // No positives: recall defaults to 1.
    const auto id = case_metrics(f.run, f.manifest, Target::of(AnalyzerType::identifier));
    expect_counts(id, 0, 1, 0);
    EXPECT_DOUBLE_EQ(id.precision, 0.0);
    EXPECT_DOUBLE_EQ(id.recall, 1.0);

    // A failed image predicts nothing even though its instances say otherwise.
    const auto name = case_metrics(f.run, f.manifest, Target::of(AnalyzerType::patient_name));
    expect_counts(name, 0, 0, 1);
}

TEST(CaseMetrics, WrongClassAndOther) {
    DatasetManifest m;
    m.entries = {entry("a", {make_label({0, 0, 50, 10}, Category::email, "a@b.org")}),
                 entry("b", {make_label({0, 0, 50, 10}, Category::identifier, "123456")})};
    const auto run = make_run(SetupKind::s4, {result("a", {inst(AnalyzerType::phone_nr)}),
                                              result("b", {inst(AnalyzerType::other)})});
    expect_counts(case_metrics(run, m, Target::phi_presence()), 2, 0, 0);
    expect_counts(case_metrics(run, m, Target::of(AnalyzerType::email)), 0, 0, 1);
    expect_counts(case_metrics(run, m, Target::of(AnalyzerType::phone_nr)), 0, 1, 0);
    // "other" counts toward presence only.
    expect_counts(case_metrics(run, m, Target::of(AnalyzerType::identifier)), 0, 0, 1);
}

TEST(CaseMetrics, PermutationInvariant) {
    CaseFixture f;
    const auto base = case_metrics(f.run, f.manifest, Target::phi_presence());
    std::mt19937 gen(5);
    for (int i = 0; i < 10; ++i) {
        std::shuffle(f.run.results.begin(), f.run.results.end(), gen);
        std::shuffle(f.manifest.entries.begin(), f.manifest.entries.end(), gen);
        const auto m = case_metrics(f.run, f.manifest, Target::phi_presence());
        expect_counts(m, base.tp, base.fp, base.fn);
    }
}

TEST(CaseMetrics, IdMismatch) {
    CaseFixture f;
    auto missing = f.run;
    missing.results.pop_back();
    EXPECT_THROW(case_metrics(missing, f.manifest, Target::phi_presence()), IdMismatch);
    auto renamed = f.run;
    renamed.results.back().image_id = "img9";
    EXPECT_THROW(case_metrics(renamed, f.manifest, Target::phi_presence()), IdMismatch);
    auto dup = f.run;
    dup.results.back().image_id = "img1";
    EXPECT_THROW(case_metrics(dup, f.manifest, Target::phi_presence()), IdMismatch);
}

// Instance fixture with disjoint ground truth, counted by hand:
//   date   jittered box, predicted date       TP
//   name   exact box, predicted non-phi       FN
//   marker exact box, predicted identifier    FP
//   (none) disjoint box, predicted phone      FP
struct InstanceFixture {
    DatasetManifest manifest;
    RunArtifacts run;

    InstanceFixture() {
        manifest.entries = {entry("img1", {make_label({10, 10, 100, 20}, Category::date, "DOB 01-01-2023"),
                                           make_label({10, 50, 100, 20}, Category::patient_name, "Name: Jo Doe"),
                                           make_label({10, 90, 40, 20}, Category::marker, "R")})};
        run = make_run(SetupKind::s1, {result("img1", {inst(AnalyzerType::date, BoundingBox{12, 11, 100, 20}),
                                                       inst(AnalyzerType::non_phi, BoundingBox{10, 50, 100, 20}),
                                                       inst(AnalyzerType::identifier, BoundingBox{10, 90, 40, 20}),
                                                       inst(AnalyzerType::phone_nr, BoundingBox{150, 150, 30, 10})})});
    }
};

TEST(InstanceMetrics, HandCountedFixture) {
    const InstanceFixture f;
    const auto any = instance_metrics(f.run, f.manifest, Target::phi_presence());
    expect_counts(any, 1, 2, 1);
    EXPECT_DOUBLE_EQ(any.precision, 1.0 / 3.0);
    EXPECT_DOUBLE_EQ(any.recall, 0.5);
    expect_counts(instance_metrics(f.run, f.manifest, Target::of(AnalyzerType::date)), 1, 0, 0);
    expect_counts(instance_metrics(f.run, f.manifest, Target::of(AnalyzerType::patient_name)), 0, 0, 1);
    expect_counts(instance_metrics(f.run, f.manifest, Target::of(AnalyzerType::identifier)), 0, 1, 0);
    // The same run is a true positive at case level.
    expect_counts(case_metrics(f.run, f.manifest, Target::phi_presence()), 1, 0, 0);
}

TEST(InstanceMetrics, ThresholdMatters) {
    InstanceFixture f;
    // IoU of the jittered date box is 1862 / 2138, about 0.871.
    expect_counts(instance_metrics(f.run, f.manifest, Target::of(AnalyzerType::date), 0.87), 1, 0, 0);
    expect_counts(instance_metrics(f.run, f.manifest, Target::of(AnalyzerType::date), 0.88), 0, 1, 1);
    EXPECT_THROW(instance_metrics(f.run, f.manifest, Target::phi_presence(), 0.0), ConfigError);
}

TEST(InstanceMetrics, NotEvaluable) {
    InstanceFixture f;
    auto s2 = f.run;
    s2.setup = SetupKind::s2;
    EXPECT_THROW(instance_metrics(s2, f.manifest, Target::phi_presence()), NotInstanceEvaluable);
    auto s4 = f.run;
    s4.setup = SetupKind::s4;
    EXPECT_THROW(instance_metrics(s4, f.manifest, Target::phi_presence()), NotInstanceEvaluable);
    auto boxless = f.run;
    boxless.results[0].instances[0].bbox.reset();
    EXPECT_THROW(instance_metrics(boxless, f.manifest, Target::phi_presence()), NotInstanceEvaluable);
}

TEST(InstanceMetrics, FailedImageTurnsPositivesIntoMisses) {
    InstanceFixture f;
    f.run.results[0].ok = false;
    expect_counts(instance_metrics(f.run, f.manifest, Target::phi_presence()), 0, 0, 2);
}

// Maximum matching by exhaustive search over assignments.
std::size_t brute_force_max_matching(const std::vector<BoundingBox>& preds, const std::vector<BoundingBox>& gts,
                                     double thr, std::size_t i = 0, std::vector<bool>* used = nullptr) {
    std::vector<bool> local(gts.size(), false);
    if (!used) used = &local;
    if (i == preds.size()) return 0;
    std::size_t best = brute_force_max_matching(preds, gts, thr, i + 1, used);
    for (std::size_t j = 0; j < gts.size(); ++j) {
        if ((*used)[j] || iou(preds[i], gts[j]) < thr) continue;
        (*used)[j] = true;
        best = std::max(best, 1 + brute_force_max_matching(preds, gts, thr, i + 1, used));
        (*used)[j] = false;
    }
    return best;
}

TEST(Matching, AgreesWithBruteForceOnDisjointTruth) {
    std::mt19937 gen(17);
    std::uniform_int_distribution<int> jitter(-3, 3), coin(0, 2);
    for (int trial = 0; trial < 300; ++trial) {
        // Ground truth on a grid, so boxes never overlap.
        std::vector<BoundingBox> gts, preds;
        const int n = 1 + trial % 5;
        for (int k = 0; k < n; ++k) gts.push_back({10 + 60 * k, 10 + 40 * (k % 2), 40, 20});
        for (const auto& g : gts) {
            switch (coin(gen)) {
                case 0: preds.push_back({g.x + jitter(gen) + 3, g.y + jitter(gen) + 3, g.w, g.h}); break;
                case 1: break;
                default: preds.push_back({g.x, g.y + 200, g.w, g.h}); break;
            }
        }
        std::shuffle(preds.begin(), preds.end(), gen);
        const auto m = match_instances(preds, gts, 0.5);
        EXPECT_EQ(m.pairs.size(), brute_force_max_matching(preds, gts, 0.5));
        EXPECT_EQ(m.pairs.size() + m.unmatched_preds.size(), preds.size());
        EXPECT_EQ(m.pairs.size() + m.unmatched_gts.size(), gts.size());
    }
}

TEST(Matching, OneToOneAndMaximal) {
    std::mt19937 gen(23);
    std::uniform_int_distribution<int> pos(0, 60), size(10, 40);
    for (int trial = 0; trial < 300; ++trial) {
        std::vector<BoundingBox> preds, gts;
        for (int k = 0; k < 4; ++k) preds.push_back({pos(gen), pos(gen), size(gen), size(gen)});
        for (int k = 0; k < 4; ++k) gts.push_back({pos(gen), pos(gen), size(gen), size(gen)});
        const auto m = match_instances(preds, gts, 0.3);
        std::vector<bool> pu(4), gu(4);
        for (const auto& [i, j] : m.pairs) {
            EXPECT_FALSE(pu[i]);
            EXPECT_FALSE(gu[j]);
            pu[i] = gu[j] = true;
            EXPECT_GE(iou(preds[i], gts[j]), 0.3);
        }
        // No unmatched pair could still be added.
        for (auto i : m.unmatched_preds) {
            for (auto j : m.unmatched_gts) EXPECT_LT(iou(preds[i], gts[j]), 0.3);
        }
        EXPECT_LE(m.pairs.size(), brute_force_max_matching(preds, gts, 0.3));
    }
}

TEST(Matching, PrefersHigherOverlap) {
    const std::vector<BoundingBox> gts = {{0, 0, 100, 20}};
    const std::vector<BoundingBox> preds = {{10, 0, 100, 20}, {1, 0, 100, 20}};
    const auto m = match_instances(preds, gts, 0.5);
    ASSERT_EQ(m.pairs.size(), 1u);
    EXPECT_EQ(m.pairs[0].first, 1u);
    EXPECT_EQ(m.unmatched_preds, std::vector<std::size_t>{0});
}

TEST(Aggregate, MeanAndSampleStd) {
    std::vector<Metrics> runs;
    for (std::size_t fp : {0, 1, 0, 0, 0}) {
        runs.push_back(make_metrics(Level::case_level, Target::phi_presence(), 100 - fp, fp, 0));
    }
    const auto a = aggregate_runs(runs);
    EXPECT_NEAR(a.mean_precision, 0.998, 1e-12);
    EXPECT_NEAR(a.std_precision, std::sqrt(2e-5), 1e-12);
    EXPECT_DOUBLE_EQ(a.mean_recall, 1.0);
    EXPECT_DOUBLE_EQ(a.std_recall, 0.0);
    EXPECT_DOUBLE_EQ(a.mean_fp, 0.2);
    EXPECT_EQ(mean_std({0.7}).second, 0.0);

    runs.push_back(make_metrics(Level::instance_level, Target::phi_presence(), 1, 0, 0));
    EXPECT_THROW(aggregate_runs(runs), HeterogeneousRuns);
    EXPECT_THROW(aggregate_runs({}), HeterogeneousRuns);
}

TEST(Targets, ParsingAndOrder) {
    const auto all = all_targets();
    ASSERT_EQ(all.size(), 7u);
    EXPECT_EQ(all.front().name(), "phi_presence");
    for (const auto& t : all) EXPECT_EQ(parse_target(t.name()), t);
    EXPECT_THROW(parse_target("non-phi"), ConfigError);
    EXPECT_THROW(parse_target("other"), ConfigError);
    EXPECT_EQ(parse_level("instance"), Level::instance_level);
    EXPECT_THROW(parse_level("image"), ConfigError);
}

// Mann-Whitney U

// p-value by enumerating every split of the pooled sample, written
// independently of the library's exact and tied paths.
double enumerated_p(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> pooled(a);
    pooled.insert(pooled.end(), b.begin(), b.end());
    const std::size_t m = a.size(), n = pooled.size();
    auto u_of = [&](const std::vector<bool>& in_a) {
        double u = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (!in_a[i]) continue;
            for (std::size_t j = 0; j < n; ++j) {
                if (in_a[j]) continue;
                u += pooled[i] > pooled[j] ? 1.0 : (pooled[i] == pooled[j] ? 0.5 : 0.0);
            }
        }
        return u;
    };
    std::vector<bool> obs(n, false);
    std::fill(obs.begin(), obs.begin() + static_cast<std::ptrdiff_t>(m), true);
    const double u_obs = u_of(obs);
    std::vector<bool> sel(n, false);
    std::fill(sel.end() - static_cast<std::ptrdiff_t>(m), sel.end(), true);
    double below = 0, above = 0, total = 0;
    do {
        const double u = u_of(sel);
        total += 1;
        below += u <= u_obs + 1e-9 ? 1 : 0;
        above += u >= u_obs - 1e-9 ? 1 : 0;
    } while (std::next_permutation(sel.begin(), sel.end()));
    return std::min(1.0, 2.0 * std::min(below, above) / total);
}

TEST(MannWhitney, SeparatedTiedSamples) {
    const std::vector<double> lo(5, 0.1), hi(5, 0.9);
    EXPECT_NEAR(significance_test(lo, hi), 2.0 / 252.0, 1e-12);
    EXPECT_NEAR(significance_test(hi, lo), 2.0 / 252.0, 1e-12);
}

TEST(MannWhitney, IdenticalSamples) {
    EXPECT_DOUBLE_EQ(significance_test({0.5, 0.5, 0.5}, {0.5, 0.5, 0.5}), 1.0);
    EXPECT_DOUBLE_EQ(significance_test({1.0}, {1.0}), 1.0);
}

TEST(MannWhitney, ExactSmallTables) {
    EXPECT_NEAR(significance_test({1, 2, 3}, {4, 5, 6}), 0.1, 1e-12);
    EXPECT_NEAR(significance_test({1, 2, 3, 4, 5}, {6, 7, 8, 9, 10}), 2.0 / 252.0, 1e-12);
    EXPECT_DOUBLE_EQ(significance_test({1}, {2}), 1.0);
}

TEST(MannWhitney, AgreesWithEnumeration) {
    std::mt19937 gen(11);
    std::uniform_int_distribution<int> level(0, 4), size(1, 5);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> a(static_cast<std::size_t>(size(gen))), b(static_cast<std::size_t>(size(gen)));
        // Coarse levels give frequent ties; every few trials use continuous values.
        const bool continuous = trial % 4 == 0;
        std::uniform_real_distribution<double> real(0.0, 1.0);
        for (auto& x : a) x = continuous ? real(gen) : level(gen) / 4.0;
        for (auto& x : b) x = continuous ? real(gen) : level(gen) / 4.0;
        const double p = significance_test(a, b);
        EXPECT_NEAR(p, enumerated_p(a, b), 1e-12);
        EXPECT_GT(p, 0.0);
        EXPECT_LE(p, 1.0);
        EXPECT_NEAR(p, significance_test(b, a), 1e-12);
    }
}

TEST(MannWhitney, MonteCarloCloseToEnumeration) {
    const std::vector<double> a = {0.9, 0.95, 0.95, 1.0, 0.9, 0.85}, b = {0.8, 0.85, 0.9, 0.8, 0.85, 0.75};
    const double exact = significance_test(a, b);
    const double mc = significance_test(a, b, 1, 200'000);
    EXPECT_NEAR(mc, exact, 0.01);
    EXPECT_THROW(significance_test({}, {1.0}), ConfigError);
}

// Reports

Report golden_report() {
    auto rows = [](std::vector<std::array<std::size_t, 3>> counts) {
        std::vector<Metrics> out;
        for (const auto& c : counts) out.push_back(make_metrics(Level::case_level, Target::phi_presence(), c[0], c[1], c[2]));
        return aggregate_runs(out);
    };
    Report r;
    r.rows.push_back({SetupKind::s4, rows({{{10, 0, 0}}, {{10, 0, 0}}})});
    r.rows.push_back({SetupKind::s1, rows({{{9, 1, 0}}, {{9, 0, 1}}})});
    r.stats.push_back({SetupKind::s4, {{10, 0, 0.0, 4.0, 1000, 50}, {10, 0, 0.0, 6.0, 1200, 70}}});
    r.stats.push_back({SetupKind::s1, {{10, 0, 0.0, 1.0, 100, 10}, {10, 1, 0.1, 2.0, 200, 30}}});
    finalize(r);
    return r;
}

TEST(Report, GoldenCsv) {
    EXPECT_EQ(emit_report(golden_report(), ReportFormat::csv), slurp(source_path("tests/golden/report.csv")));
}

TEST(Report, JsonRoundTripPreservesCsv) {
    const auto r = golden_report();
    const auto back = report_from_json(nlohmann::json::parse(emit_report(r, ReportFormat::json)));
    EXPECT_EQ(emit_report(back, ReportFormat::csv), emit_report(r, ReportFormat::csv));
    EXPECT_THROW(report_from_json(nlohmann::json::parse("{\"rows\": 3}")), IoError);
}

TEST(Report, MarkdownSections) {
    const auto md = emit_report(golden_report(), ReportFormat::markdown);
    EXPECT_NE(md.find("## Detection"), std::string::npos);
    EXPECT_NE(md.find("| case | phi_presence | s1 | 2 | 0.9500 [0.5] | 0.9500 [0.5] |"), std::string::npos);
    EXPECT_NE(md.find("5.00 %"), std::string::npos);
    EXPECT_NE(md.find("Mann-Whitney"), std::string::npos);
}

TEST(Report, Formatting) {
    EXPECT_EQ(format_count_mean(0.0), "0");
    EXPECT_EQ(format_count_mean(0.4), "0.4");
    EXPECT_EQ(format_count_mean(2.0), "2");
    EXPECT_EQ(format_count_mean(-0.01), "0");
    EXPECT_EQ(format_metric(0.99976), "0.9998");
    EXPECT_EQ(parse_report_format("md"), ReportFormat::markdown);
    EXPECT_THROW(parse_report_format("xml"), ConfigError);
}

TEST(Report, BuildSkipsInstanceRowsForS2) {
    const CaseFixture f;
    std::vector<std::string> warnings;
    const auto r = build_report({f.run}, f.manifest, EvalOptions{}, &warnings);
    EXPECT_EQ(warnings.size(), 1u);
    EXPECT_EQ(r.rows.size(), 7u);
    for (const auto& row : r.rows) EXPECT_EQ(row.agg.level, Level::case_level);
}

TEST(Report, BuildWithInstanceRows) {
    const InstanceFixture f;
    std::vector<std::string> warnings;
    EvalOptions opts;
    opts.targets = {Target::phi_presence()};
    const auto r = build_report({f.run, f.run}, f.manifest, opts, &warnings);
    EXPECT_TRUE(warnings.empty());
    ASSERT_EQ(r.rows.size(), 2u);
    EXPECT_EQ(r.rows[1].agg.level, Level::instance_level);
    EXPECT_EQ(r.rows[1].agg.runs.size(), 2u);
    EXPECT_EQ(precision_cell(r.rows[1].agg), "0.3333 [2]");
}

TEST(Report, HeterogeneousInputs) {
    InstanceFixture f;
    auto other = f.run;
    other.policy_hash = "different";
    EXPECT_THROW(build_report({f.run, other}, f.manifest, {}), HeterogeneousRuns);
    const auto r = golden_report();
    EXPECT_THROW(merge_reports({r, r}), HeterogeneousRuns);
}

TEST(Report, MergeRecomputesSignificance) {
    const auto full = golden_report();
    Report s1, s4;
    s1.rows = {full.rows[0]};
    s1.stats = {full.stats[0]};
    s4.rows = {full.rows[1]};
    s4.stats = {full.stats[1]};
    finalize(s1);
    finalize(s4);
    EXPECT_TRUE(s1.significance.empty());
    const auto merged = merge_reports({s4, s1});
    EXPECT_EQ(emit_report(merged, ReportFormat::csv), emit_report(full, ReportFormat::csv));
}

}  // namespace
}  // namespace phibench
