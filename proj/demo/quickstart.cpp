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

// Generates a small dataset, runs setup 1 with oracle backends and the rule
// analyzer, and prints a markdown report.
//
//   phibench_quickstart [out_dir]

#include <iostream>

#include "phibench/dataset.hpp"
#include "phibench/pipeline.hpp"
#include "phibench/report.hpp"

int main(int argc, char** argv) {
    using namespace phibench;
    const std::filesystem::path out = argc > 1 ? argv[1] : "quickstart";
    try {
        GenerationConfig cfg;
        cfg.seed = 11;
        cfg.image_count = 40;
        cfg.synthetic_min_side = 384;
        cfg.synthetic_max_side = 640;
        const auto manifest = generate_dataset(cfg, out / "data");

        Backends backends;
        backends.localizer = std::make_shared<OracleLocalizer>();
        backends.extractor = std::make_shared<OracleExtractor>(0.02, 3);
        backends.analyzer = std::make_shared<RuleAnalyzer>();
        RunOptions options;
        options.runs = 3;
        const auto runs = run_dataset(SetupKind::s1, backends, default_policy(), manifest, options);
        for (const auto& run : runs) write_results(run, out / "results");

        std::cout << emit_report(build_report(runs, manifest, EvalOptions{}), ReportFormat::markdown);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
