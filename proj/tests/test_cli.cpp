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

#include <sstream>

#include <gtest/gtest.h>

#include "phibench/cli.hpp"
#include "test_support.hpp"

namespace phibench {
namespace {

using phibench::testing::slurp;
using phibench::testing::TempDir;

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome cli(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = cli::run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        dir_ = new TempDir("phibench-cli");
        const auto data = (dir_->path() / "data").string();
        const auto r = cli({"generate", "--seed", "3", "--count", "30", "--out-dir", data, "--workers", "2"});
        ASSERT_EQ(r.code, 0) << r.err;
        manifest_ = new std::string(data + "/manifest.jsonl");
    }
    static void TearDownTestSuite() {
        delete manifest_;
        delete dir_;
    }

    static const std::string& manifest() { return *manifest_; }
    static std::filesystem::path scratch() { return dir_->path(); }

    static inline TempDir* dir_ = nullptr;
    static inline std::string* manifest_ = nullptr;
};

TEST(Cli, GenerateQuota) {
    TempDir dir;
    const auto r = cli({"generate", "--count", "100", "--seed", "7", "--out-dir", dir.path().string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.out, (dir.path() / "manifest.jsonl").string() + "\n");
    const auto m = read_manifest(dir.path() / "manifest.jsonl");
    std::size_t phi = 0;
    for (const auto& e : m.entries) phi += e.has_phi() ? 1 : 0;
    EXPECT_EQ(m.entries.size(), 100u);
    EXPECT_EQ(phi, 85u);
}

TEST(Cli, GenerateEdgeCases) {
    TempDir dir;
    EXPECT_EQ(cli({"generate", "--count", "0", "--out-dir", dir.path().string()}).code, 0);
    EXPECT_TRUE(read_manifest(dir.path() / "manifest.jsonl").entries.empty());
    EXPECT_EQ(cli({"generate", "--phi-ratio", "1.5", "--out-dir", dir.path().string()}).code, 2);
    EXPECT_EQ(cli({"generate", "--count", "5", "--placement", "diagonal", "--out-dir", dir.path().string()}).code, 2);
    EXPECT_EQ(cli({"generate"}).code, 2);
    EXPECT_EQ(cli({}).code, 2);
    EXPECT_EQ(cli({"generate", "--count", "2", "--backgrounds", (dir.path() / "none").string(), "--out-dir",
                   dir.path().string()})
                  .code,
              3);
}

TEST(Cli, GenerateWithCategoryWeights) {
    TempDir dir;
    const auto weights = dir.path() / "w.json";
    std::ofstream(weights) << R"({"email": 1.0, "marker": 1.0})";
    const auto r = cli({"generate", "--count", "8", "--phi-ratio", "1", "--category-weights", weights.string(),
                        "--out-dir", (dir.path() / "d").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    for (const auto& e : read_manifest(dir.path() / "d" / "manifest.jsonl").entries) {
        for (const auto& l : e.labels) EXPECT_TRUE(l.category == Category::email || l.category == Category::marker);
    }
    std::ofstream(weights) << R"({"ssn": 1.0})";
    EXPECT_EQ(cli({"generate", "--count", "1", "--category-weights", weights.string(), "--out-dir",
                   (dir.path() / "e").string()})
                  .code,
              2);
}

TEST_F(CliTest, RunS1WritesResults) {
    const auto out = (scratch() / "s1").string();
    const auto r = cli({"run", "--setup", "s1", "--manifest", manifest(), "--localizer", "oracle", "--extractor",
                        "oracle", "--analyzer", "rule", "--out-dir", out});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("run 0 setup s1: error_rate 0.0000"), std::string::npos) << r.out;
    const auto run = read_results(std::filesystem::path(out) / "results_s1_0.jsonl");
    EXPECT_EQ(run.results.size(), 30u);
    EXPECT_EQ(run.policy_hash, policy_hash(default_policy()));
}

TEST_F(CliTest, RunRoleAndConfigErrors) {
    const auto out = (scratch() / "bad").string();
    EXPECT_EQ(cli({"run", "--setup", "s4", "--manifest", manifest(), "--analyzer", "rule", "--out-dir", out}).code, 4);
    EXPECT_EQ(cli({"run", "--setup", "s1", "--manifest", manifest(), "--analyzer", "rule", "--out-dir", out}).code, 4);
    EXPECT_EQ(cli({"run", "--setup", "s9", "--manifest", manifest(), "--out-dir", out}).code, 2);
    EXPECT_EQ(cli({"run", "--setup", "s1", "--manifest", manifest(), "--localizer", "magic", "--extractor", "oracle",
                   "--analyzer", "rule", "--out-dir", out})
                  .code,
              2);
    EXPECT_EQ(cli({"run", "--manifest", (scratch() / "missing.jsonl").string(), "--out-dir", out}).code, 3);
    EXPECT_EQ(cli({"run", "--manifest", manifest(), "--policy", (scratch() / "nope.json").string(), "--out-dir", out})
                  .code,
              3);
    EXPECT_EQ(cli({"run", "--manifest", manifest(), "--runs", "0", "--out-dir", out}).code, 2);
}

TEST_F(CliTest, RepeatedRunsAndEvaluation) {
    const auto out = (scratch() / "s4").string();
    const auto r = cli({"run", "--setup", "s4", "--manifest", manifest(), "--analyzer", "truth-echo", "--runs", "3",
                        "--out-dir", out});
    ASSERT_EQ(r.code, 0) << r.err;
    for (int i = 0; i < 3; ++i) {
        EXPECT_TRUE(std::filesystem::exists(std::filesystem::path(out) / ("results_s4_" + std::to_string(i) + ".jsonl")));
    }
    // Truth echo is perfect at case level; s4 has no instance rows.
    const auto e = cli({"eval", "--results", out, "--manifest", manifest(), "--targets", "phi_presence,instance,case"});
    ASSERT_EQ(e.code, 0) << e.err;
    EXPECT_NE(e.err.find("warning"), std::string::npos);
    EXPECT_NE(e.out.find("case,phi_presence,s4,3,1.0000 [0],1.0000 [0]"), std::string::npos) << e.out;
    EXPECT_EQ(e.out.find("instance,"), std::string::npos);
}

TEST_F(CliTest, EvalOracleS1IsPerfect) {
    const auto out = (scratch() / "echo").string();
    ASSERT_EQ(cli({"run", "--setup", "s1", "--manifest", manifest(), "--localizer", "oracle", "--extractor", "oracle",
                   "--analyzer", "truth-echo", "--out-dir", out})
                  .code,
              0);
    const auto e = cli({"eval", "--results", out + "/results_*.jsonl", "--manifest", manifest(), "--format", "json"});
    ASSERT_EQ(e.code, 0) << e.err;
    const auto j = nlohmann::json::parse(e.out);
    ASSERT_EQ(j["rows"].size(), 14u);
    for (const auto& row : j["rows"]) {
        EXPECT_EQ(row["mean_precision"], 1.0) << row.dump();
        EXPECT_EQ(row["mean_recall"], 1.0) << row.dump();
    }
}

TEST_F(CliTest, EvalMismatchAndMissingInputs) {
    const auto out = (scratch() / "mm").string();
    ASSERT_EQ(cli({"run", "--setup", "s2", "--manifest", manifest(), "--extractor", "oracle", "--analyzer", "rule",
                   "--out-dir", out})
                  .code,
              0);
    TempDir other;
    ASSERT_EQ(cli({"generate", "--count", "4", "--out-dir", other.path().string()}).code, 0);
    EXPECT_EQ(cli({"eval", "--results", out, "--manifest", (other.path() / "manifest.jsonl").string()}).code, 5);
    EXPECT_EQ(cli({"eval", "--results", (scratch() / "empty-dir").string(), "--manifest", manifest()}).code, 3);
    EXPECT_EQ(cli({"eval", "--results", out, "--manifest", manifest(), "--iou", "0"}).code, 2);
    EXPECT_EQ(cli({"eval", "--results", out, "--manifest", manifest(), "--targets", "ssn"}).code, 2);
}

TEST_F(CliTest, ReportMergesEvalDocuments) {
    const auto a = (scratch() / "rep_a").string();
    const auto b = (scratch() / "rep_b").string();
    ASSERT_EQ(cli({"run", "--setup", "s1", "--manifest", manifest(), "--localizer", "oracle", "--extractor", "oracle",
                   "--analyzer", "rule", "--runs", "2", "--out-dir", a})
                  .code,
              0);
    ASSERT_EQ(cli({"run", "--setup", "s2", "--manifest", manifest(), "--extractor", "oracle", "--analyzer", "rule",
                   "--runs", "2", "--out-dir", b})
                  .code,
              0);
    const auto ja = (scratch() / "a.json").string();
    const auto jb = (scratch() / "b.json").string();
    ASSERT_EQ(cli({"eval", "--results", a, "--manifest", manifest(), "--format", "json", "--out", ja}).code, 0);
    ASSERT_EQ(cli({"eval", "--results", b, "--manifest", manifest(), "--format", "json", "--out", jb}).code, 0);
    const auto md = (scratch() / "report.md").string();
    const auto r = cli({"report", "--inputs", ja, jb, "--out", md});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto text = slurp(md);
    EXPECT_NE(text.find("| case | phi_presence | s1 |"), std::string::npos);
    EXPECT_NE(text.find("| case | phi_presence | s2 |"), std::string::npos);
    EXPECT_NE(text.find("s1 vs s2"), std::string::npos);
    EXPECT_EQ(cli({"report", "--inputs", ja, ja}).code, 5);
}

TEST(Cli, StubServeOnBusyPort) {
    StubEngine engine(StubBehavior{});
    StubServer busy(engine);
    const int port = busy.start("127.0.0.1", 0);
    const auto r = cli({"stub-serve", "--port", std::to_string(port)});
    EXPECT_EQ(r.code, 6) << r.err;
    EXPECT_EQ(r.out.find("listening"), std::string::npos);
    busy.stop();
}

TEST(Cli, StubServeRejectsBadBehavior) {
    TempDir dir;
    const auto path = dir.path() / "b.json";
    std::ofstream(path) << R"({"refuse_rate": 3})";
    EXPECT_EQ(cli({"stub-serve", "--port", "0", "--behavior", path.string()}).code, 2);
    EXPECT_EQ(cli({"stub-serve", "--behavior", (dir.path() / "none.json").string()}).code, 3);
}

TEST(Cli, TargetsParsing) {
    const auto o = cli::parse_targets({"date", "email", "date", "instance"}, 0.5);
    EXPECT_EQ(o.targets.size(), 2u);
    EXPECT_FALSE(o.case_level);
    EXPECT_TRUE(o.instance_level);
    const auto all = cli::parse_targets({}, 0.7);
    EXPECT_EQ(all.targets.size(), 7u);
    EXPECT_TRUE(all.case_level && all.instance_level);
    EXPECT_DOUBLE_EQ(all.iou_threshold, 0.7);
}

TEST(Cli, ExitCodeMapping) {
    EXPECT_EQ(cli::exit_code_for(MissingRole("x")), 4);
    EXPECT_EQ(cli::exit_code_for(IdMismatch("x")), 5);
    EXPECT_EQ(cli::exit_code_for(HeterogeneousRuns("x")), 5);
    EXPECT_EQ(cli::exit_code_for(BindError("x")), 6);
    EXPECT_EQ(cli::exit_code_for(IoError("x")), 3);
    EXPECT_EQ(cli::exit_code_for(ConfigError("x")), 2);
    EXPECT_EQ(cli::exit_code_for(UnknownCategory("x")), 2);
    EXPECT_EQ(cli::exit_code_for(BackendUnavailable("x")), 1);
}

}  // namespace
}  // namespace phibench
