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
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <regex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "phibench/backends.hpp"
#include "phibench/dataset.hpp"
#include "phibench/error.hpp"
#include "phibench/pipeline.hpp"
#include "phibench/policy.hpp"
#include "phibench/remote.hpp"
#include "phibench/report.hpp"
#include "phibench/stub.hpp"

namespace phibench::cli {

enum ExitCode : int { kOk = 0, kFailure = 1, kConfig = 2, kIo = 3, kRole = 4, kMismatch = 5, kBind = 6 };

inline int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const MissingRole*>(&e)) return kRole;
    if (dynamic_cast<const IdMismatch*>(&e) || dynamic_cast<const HeterogeneousRuns*>(&e)) return kMismatch;
    if (dynamic_cast<const BindError*>(&e)) return kBind;
    if (dynamic_cast<const IoError*>(&e)) return kIo;
    if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const UnknownCategory*>(&e) ||
        dynamic_cast<const EmptyRun*>(&e)) {
        return kConfig;
    }
    return kFailure;
}

inline bool is_url(const std::string& s) { return s.rfind("http://", 0) == 0 || s.rfind("https://", 0) == 0; }

/// Settings shared by every remote backend built by `run`.
struct RemoteSettings {
    double timeout_seconds = 60.0;
    int max_retries = 2;
    double backoff_seconds = 0.25;
    std::string token_env = "PHI_ANALYZER_TOKEN";
};

struct RunFlags {
    std::string setup = "s1";
    std::string manifest;
    std::string localizer;
    std::string extractor;
    std::string analyzer;
    std::optional<double> low_text = 0.2;
    double noise = 0.0;
    std::uint64_t noise_seed = 0;
    double flip_rate = 0.0;
    std::uint64_t flip_seed = 0;
    std::string policy = "default";
    int runs = 1;
    int first_run = 0;
    std::size_t parallelism = 8;
    std::string out_dir = "results";
    RemoteSettings remote;
};

inline AnalysisPolicy resolve_policy(const std::string& name) {
    if (name == "default") return default_policy();
    if (name == "midi") return midi_adapted_policy();
    return load_policy(name);
}

/// Builds the backends named on the command line. Names: "oracle" for the
/// localizer and extractor; "rule" and "truth-echo" for the analyzer; an
/// http(s) URL for any role. Roles the setup does not use stay empty.
inline Backends resolve_backends(SetupKind setup, const RunFlags& f, const DatasetManifest& manifest) {
    auto transport = [&](const std::string& url) {
        BackendEndpoint e{url, f.remote.timeout_seconds, f.remote.max_retries, f.remote.backoff_seconds,
                          f.remote.token_env};
        e.validate();
        return std::make_shared<HttpTransport>(e);
    };
    const RetryPolicy retry{f.remote.max_retries, f.remote.backoff_seconds};
    Backends b;
    if (!f.localizer.empty()) {
        if (f.localizer == "oracle") b.localizer = std::make_shared<OracleLocalizer>();
        else if (is_url(f.localizer)) b.localizer = std::make_shared<RemoteLocalizer>(transport(f.localizer), retry);
        else throw ConfigError("unknown localizer '" + f.localizer + "'");
    }
    if (!f.extractor.empty()) {
        if (f.extractor == "oracle") {
            b.extractor = std::make_shared<OracleExtractor>(f.noise, f.noise_seed);
        } else if (is_url(f.extractor)) {
            b.extractor = std::make_shared<RemoteExtractor>(transport(f.extractor), retry, f.low_text);
        } else {
            throw ConfigError("unknown extractor '" + f.extractor + "'");
        }
    }
    if (!f.analyzer.empty()) {
        std::shared_ptr<TextAnalyzer> text;
        if (f.analyzer == "rule") {
            text = std::make_shared<RuleAnalyzer>();
        } else if (f.analyzer == "truth-echo") {
            auto echo = std::make_shared<TruthEchoAnalyzer>(manifest);
            text = echo;
            b.image_analyzer = echo;
        } else if (is_url(f.analyzer)) {
            auto remote = std::make_shared<RemoteAnalyzer>(transport(f.analyzer), retry);
            text = remote;
            b.image_analyzer = remote;
        } else {
            throw ConfigError("unknown analyzer '" + f.analyzer + "'");
        }
        if (f.flip_rate > 0.0) text = std::make_shared<FlippingAnalyzer>(text, f.flip_rate, f.flip_seed);
        b.analyzer = text;
    }
    b.require_roles(setup);
    return b;
}

/// Expands result arguments: files as given, directories to their
/// results_*.jsonl files, and '*' wildcards in the file name part.
inline std::vector<std::filesystem::path> expand_results(const std::vector<std::string>& args) {
    namespace fs = std::filesystem;
    std::vector<fs::path> out;
    auto match_dir = [&](const fs::path& dir, const std::regex& pattern) {
        std::vector<fs::path> found;
        std::error_code ec;
        for (const auto& e : fs::directory_iterator(dir, ec)) {
            if (e.is_regular_file() && std::regex_match(e.path().filename().string(), pattern)) found.push_back(e.path());
        }
        std::sort(found.begin(), found.end());
        return found;
    };
    for (const auto& a : args) {
        const fs::path p(a);
        if (fs::is_directory(p)) {
            auto found = match_dir(p, std::regex(R"(results_s[1-4]_\d+\.jsonl)"));
            out.insert(out.end(), found.begin(), found.end());
        } else if (a.find('*') != std::string::npos) {
            std::string re;
            for (char c : p.filename().string()) {
                if (c == '*') re += ".*";
                else if (std::string(".+?^$()[]{}|\\").find(c) != std::string::npos) re += std::string("\\") + c;
                else re += c;
            }
            const fs::path dir = p.has_parent_path() ? p.parent_path() : fs::path(".");
            auto found = match_dir(dir, std::regex(re));
            out.insert(out.end(), found.begin(), found.end());
        } else {
            out.push_back(p);
        }
    }
    if (out.empty()) throw IoError("no results files found");
    return out;
}

/// Turns --targets items into evaluation options. Items are target names,
/// "all", or the level selectors "case" and "instance".
inline EvalOptions parse_targets(const std::vector<std::string>& items, double iou) {
    EvalOptions o;
    o.iou_threshold = iou;
    if (!(iou > 0.0 && iou <= 1.0)) throw ConfigError("--iou must lie in (0, 1]");
    std::vector<Target> targets;
    bool any_level = false, want_case = false, want_instance = false;
    for (const auto& item : items) {
        if (item == "case") {
            any_level = want_case = true;
        } else if (item == "instance") {
            any_level = want_instance = true;
        } else if (item == "all") {
            targets = all_targets();
        } else {
            const Target t = parse_target(item);
            if (std::find(targets.begin(), targets.end(), t) == targets.end()) targets.push_back(t);
        }
    }
    if (!targets.empty()) o.targets = targets;
    if (any_level) {
        o.case_level = want_case;
        o.instance_level = want_instance;
    }
    return o;
}

inline void write_output(const std::string& text, const std::string& path, std::ostream& out) {
    if (path.empty() || path == "-") {
        out << text;
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write " + path);
    f << text;
    if (!f) throw IoError("write failed for " + path);
}

/// Entry point shared by the tool and the tests. args excludes the program name.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Benchmark harness for PHI detection in medical images", "phibench"};
    app.require_subcommand(1);
    app.set_config("--config", "", "Read flags from a TOML or INI file");
    int verbosity = 0;
    app.add_flag("-v,--verbose", verbosity, "Print progress details");

    // generate
    GenerationConfig gen;
    std::string gen_out, gen_backgrounds, gen_pools, gen_weights, gen_placement = "non_overlapping";
    std::size_t gen_workers = std::max(1u, std::thread::hardware_concurrency());
    auto* generate = app.add_subcommand("generate", "Synthesize a labeled imprint dataset");
    generate->add_option("--seed", gen.seed, "Random seed")->capture_default_str();
    generate->add_option("--count", gen.image_count, "Number of images")->capture_default_str();
    generate->add_option("--phi-ratio", gen.phi_ratio, "Share of images with at least one PHI imprint")
        ->capture_default_str();
    generate->add_option("--max-imprints", gen.max_imprints, "Maximum imprints per image")->capture_default_str();
    generate->add_option("--omission-prob", gen.accompanying_omission_prob,
                         "Probability of dropping the accompanying text")
        ->capture_default_str();
    generate->add_option("--empty-ratio", gen.empty_ratio, "Share of non-PHI images without imprints")
        ->capture_default_str();
    generate->add_option("--out-dir", gen_out, "Output directory")->required();
    generate->add_option("--backgrounds", gen_backgrounds, "Directory of background images (default: synthetic)");
    generate->add_option("--pools", gen_pools, "Directory of <field>.txt content pool overrides");
    generate->add_option("--category-weights", gen_weights, "JSON object of relative category frequencies");
    generate->add_option("--placement", gen_placement, "non_overlapping or unconstrained")->capture_default_str();
    generate->add_option("--workers", gen_workers, "Rendering threads");

    // run
    RunFlags rf;
    auto* run = app.add_subcommand("run", "Run a pipeline setup over a dataset");
    run->add_option("--setup", rf.setup, "s1, s2, s3 or s4")->capture_default_str();
    run->add_option("--manifest", rf.manifest, "Dataset manifest")->required();
    run->add_option("--localizer", rf.localizer, "oracle or URL");
    run->add_option("--extractor", rf.extractor, "oracle or URL");
    run->add_option("--analyzer", rf.analyzer, "rule, truth-echo or URL");
    run->add_option("--low-text", rf.low_text, "Text threshold forwarded to remote extractors")->capture_default_str();
    run->add_option("--noise", rf.noise, "Character error rate of the oracle extractor")->capture_default_str();
    run->add_option("--noise-seed", rf.noise_seed, "Seed of the oracle extractor noise");
    run->add_option("--flip-rate", rf.flip_rate, "Flip analyzer verdicts with this probability");
    run->add_option("--flip-seed", rf.flip_seed, "Seed of verdict flips (combined with the run index)");
    run->add_option("--policy", rf.policy, "Policy file, or 'default' or 'midi'")->capture_default_str();
    run->add_option("--runs", rf.runs, "Repetitions")->capture_default_str();
    run->add_option("--first-run", rf.first_run, "Index of the first run");
    run->add_option("--parallelism", rf.parallelism, "Concurrent images")->capture_default_str();
    run->add_option("--out-dir", rf.out_dir, "Directory for results files")->capture_default_str();
    run->add_option("--timeout", rf.remote.timeout_seconds, "Remote request timeout in seconds")
        ->capture_default_str();
    run->add_option("--max-retries", rf.remote.max_retries, "Retries per remote request")->capture_default_str();
    run->add_option("--retry-backoff", rf.remote.backoff_seconds, "Backoff between retries in seconds");
    run->add_option("--token-env", rf.remote.token_env, "Environment variable holding a bearer token")
        ->capture_default_str();

    // eval
    std::vector<std::string> eval_results, eval_targets;
    std::string eval_manifest, eval_format = "csv", eval_out;
    double eval_iou = 0.5;
    auto* eval = app.add_subcommand("eval", "Score results files against a manifest");
    eval->add_option("--results", eval_results, "Results files, directories or patterns")->required();
    eval->add_option("--manifest", eval_manifest, "Dataset manifest")->required();
    eval->add_option("--iou", eval_iou, "IoU threshold for instance matching")->capture_default_str();
    eval->add_option("--targets", eval_targets, "Targets and levels, e.g. phi_presence,date,case")->delimiter(',');
    eval->add_option("--format", eval_format, "csv, json or markdown")->capture_default_str();
    eval->add_option("--out", eval_out, "Output file (default: stdout)");

    // report
    std::vector<std::string> report_inputs;
    std::string report_format = "markdown", report_out;
    auto* report = app.add_subcommand("report", "Combine evaluation JSON documents into one report");
    report->add_option("--inputs", report_inputs, "Evaluation documents written by eval --format json")->required();
    report->add_option("--format", report_format, "csv, json or markdown")->capture_default_str();
    report->add_option("--out", report_out, "Output file (default: stdout)");

    // stub-serve
    std::string stub_host = "127.0.0.1", stub_behavior, stub_manifest;
    int stub_port = 8080;
    auto* stub = app.add_subcommand("stub-serve", "Serve the wire protocol from a manifest with injected faults");
    stub->add_option("--host", stub_host, "Listen address")->capture_default_str();
    stub->add_option("--port", stub_port, "Listen port")->capture_default_str();
    stub->add_option("--behavior", stub_behavior, "Behavior JSON file");
    stub->add_option("--manifest", stub_manifest, "Manifest to echo (overrides the behavior file)");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::Success& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kConfig;
    }

    try {
        if (*generate) {
            gen.placement = gen_placement == "unconstrained" ? PlacementPolicy::unconstrained
                                                             : PlacementPolicy::non_overlapping;
            if (gen_placement != "unconstrained" && gen_placement != "non_overlapping") {
                throw ConfigError("--placement must be non_overlapping or unconstrained");
            }
            if (!gen_backgrounds.empty()) gen.background_dir = gen_backgrounds;
            if (!gen_pools.empty()) gen.pools = load_pools(gen_pools);
            if (!gen_weights.empty()) {
                std::ifstream in(gen_weights);
                if (!in) throw IoError("cannot open " + gen_weights);
                const auto j = nlohmann::json::parse(in, nullptr, false);
                if (j.is_discarded() || !j.is_object()) throw ConfigError(gen_weights + " is not a JSON object");
                for (const auto& [k, v] : j.items()) {
                    if (!v.is_number()) throw ConfigError("weight of '" + k + "' is not a number");
                    gen.category_weights[parse_category(k)] = v.get<double>();
                }
            }
            gen.validate();
            const auto manifest = generate_dataset(gen, gen_out, gen_workers);
            std::size_t phi = 0;
            for (const auto& e : manifest.entries) phi += e.has_phi() ? 1 : 0;
            if (verbosity > 0) {
                err << "generated " << manifest.entries.size() << " images, " << phi << " with PHI\n";
            }
            out << (std::filesystem::path(gen_out) / "manifest.jsonl").string() << '\n';
            return kOk;
        }

        if (*run) {
            const SetupKind setup = parse_setup(rf.setup);
            if (rf.runs < 1) throw ConfigError("--runs must be at least 1");
            if (rf.parallelism < 1) throw ConfigError("--parallelism must be at least 1");
            const AnalysisPolicy policy = resolve_policy(rf.policy);
            const DatasetManifest manifest = read_manifest(rf.manifest);
            const Backends backends = resolve_backends(setup, rf, manifest);
            RunOptions opts;
            opts.runs = rf.runs;
            opts.first_run_index = rf.first_run;
            opts.parallelism = rf.parallelism;
            const auto artifacts = run_dataset(setup, backends, policy, manifest, opts);
            for (const auto& a : artifacts) {
                const auto path = write_results(a, std::filesystem::path(rf.out_dir));
                out << "run " << a.run_index << " setup " << render_name(a.setup) << ": error_rate "
                    << format_metric(a.stats.error_rate) << ", time " << format_fixed(a.stats.total_time, 2)
                    << " s, prompt_tokens " << a.stats.prompt_tokens << ", response_tokens "
                    << a.stats.response_tokens << " -> " << path.string() << '\n';
            }
            return kOk;
        }

        if (*eval) {
            const EvalOptions opts = parse_targets(eval_targets, eval_iou);
            const ReportFormat format = parse_report_format(eval_format);
            const DatasetManifest manifest = read_manifest(eval_manifest);
            std::vector<RunArtifacts> runs;
            for (const auto& p : expand_results(eval_results)) runs.push_back(read_results(p));
            std::vector<std::string> warnings;
            const Report rep = build_report(runs, manifest, opts, &warnings);
            for (const auto& w : warnings) err << "warning: " << w << '\n';
            write_output(emit_report(rep, format), eval_out, out);
            return kOk;
        }

        if (*report) {
            const ReportFormat format = parse_report_format(report_format);
            std::vector<Report> parts;
            for (const auto& p : report_inputs) {
                std::ifstream in(p);
                if (!in) throw IoError("cannot open " + p);
                const auto j = nlohmann::json::parse(in, nullptr, false);
                if (j.is_discarded()) throw IoError(p + " is not valid JSON");
                parts.push_back(report_from_json(j));
            }
            write_output(emit_report(merge_reports(parts), format), report_out, out);
            return kOk;
        }

        if (*stub) {
            StubBehavior behavior = stub_behavior.empty() ? StubBehavior{} : load_behavior(stub_behavior);
            if (!stub_manifest.empty()) behavior.manifest = stub_manifest;
            StubEngine engine(behavior);
            StubServer server(engine);
            const int port = server.bind(stub_host, stub_port);
            out << "listening on " << stub_host << ':' << port << std::endl;
            server.listen();
            return kOk;
        }
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return exit_code_for(e);
    }
    return kOk;
}

inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run_cli(args, out, err);
}

}  // namespace phibench::cli
