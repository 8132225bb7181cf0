/*
 * gsft - Shape-from-Template with generalised cameras.
 *
 * File: tools/gsft.cpp
 *
 * Copyright 2026 The gsft Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include "gsft/gsft.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace gsft;

namespace {

// exit codes
constexpr int kOk = 0;
constexpr int kOther = 1;
constexpr int kParse = 2;
constexpr int kInfeasible = 3;
constexpr int kNonConvergence = 4;

struct Options
{
    std::string config;
    std::uint64_t seed = 0;
    bool seed_set = false;
    double eps_prime = kDefaultTraceWeight;
    double lambda = kDefaultLambda;
    int max_iters = kDefaultMaxIterations;
    double min_depth = kDefaultMinDepth;
    std::string out;
    int repeats = 3;
    std::string method = "ns";

    std::string model;
    std::string rays;
    std::string corr;
    std::string silhouettes;
    std::string population;
    std::string dump;
    std::vector<int> configs = {1, 2, 3, 4, 5};
    int density = 0;
    bool nsc_ladder = false;
    bool timing = false;
    double variance_fraction = 0.99;
    int points = 50;
    int modes = 3;
};

void write_or_print(const nlohmann::json& j, const std::string& out)
{
    if (out.empty()) {
        std::cout << j.dump(1) << '\n';
    } else {
        detail::write_text_file(out, j.dump(1) + "\n");
    }
}

ScenarioConfig load_config(const Options& o)
{
    ScenarioConfig c;
    if (!o.config.empty()) {
        c = config_from_json(detail::parse_json_text(detail::read_text_file(o.config), o.config), o.nsc_ladder);
    }
    if (o.seed_set) {
        c.seed = o.seed;
    }
    if (o.density > 0) {
        c.density = o.density;
    }
    c.validate();
    return c;
}

int run_synth(const Options& o)
{
    const ScenarioConfig c = load_config(o);
    const Scenario sc = generate_scenario(c);
    const fs::path dir = o.out.empty() ? fs::path(".") : fs::path(o.out);
    fs::create_directories(dir);
    save_model(sc.model, dir / "model.json");
    detail::write_text_file(dir / "rays.json", viewpoints_to_json(sc.ns.viewpoints).dump(1) + "\n");
    detail::write_text_file(dir / "correspondences.json", correspondences_to_json(sc.ns.correspondences).dump(1) + "\n");
    if (sc.nsc) {
        std::vector<Viewpoint> local;
        for (const auto& r : sc.nsc->rays) {
            local.push_back({r, std::nullopt, ProjectionModel::perspective});
        }
        detail::write_text_file(dir / "rays_local.json", viewpoints_to_json(local).dump(1) + "\n");
    }
    if (!sc.silhouettes.empty()) {
        detail::write_text_file(dir / "silhouettes.json", silhouettes_to_json(sc.silhouettes).dump(1) + "\n");
    }
    detail::write_text_file(dir / "gt.json", ground_truth_json(sc).dump(1) + "\n");
    detail::write_text_file(dir / "config.json", config_to_json(sc.config).dump(1) + "\n");
    std::cout << "wrote scenario (seed " << c.seed << ", " << c.view_count() << " views) to " << dir.string() << '\n';
    return kOk;
}

NsProblem load_ns(const Options& o)
{
    NsProblem p;
    p.model = load_model(o.model);
    p.viewpoints = viewpoints_from_json(detail::load_json(o.rays));
    p.correspondences = correspondences_from_json(detail::load_json(o.corr));
    p.trace_weight = o.eps_prime;
    return p;
}

int run_ns(const Options& o)
{
    const NsProblem p = load_ns(o);
    InteriorPointBackend backend;
    nlohmann::json dump;
    const NsSolution s = solve_ns(p, backend, o.dump.empty() ? nullptr : &dump);
    if (!o.dump.empty()) {
        detail::write_text_file(o.dump, dump.dump(1) + "\n");
    }
    write_or_print(solution_json(s), o.out);
    return is_usable(s.status) ? kOk : kNonConvergence;
}

int run_nsc(const Options& o)
{
    NscProblem p;
    p.model = load_model(o.model);
    for (auto& v : viewpoints_from_json(detail::load_json(o.rays))) {
        p.rays.push_back(std::move(v.rays));
    }
    p.correspondences = correspondences_from_json(detail::load_json(o.corr));
    p.min_depths.assign(p.rays.size(), o.min_depth);
    p.trace_weight = o.eps_prime;
    InteriorPointBackend backend;
    nlohmann::json dump;
    const NscSolution s = solve_nsc(p, backend, o.dump.empty() ? nullptr : &dump);
    if (!o.dump.empty()) {
        detail::write_text_file(o.dump, dump.dump(1) + "\n");
    }
    write_or_print(solution_json(s, p.model), o.out);
    return is_usable(s.status) ? kOk : kNonConvergence;
}

int run_silh(const Options& o)
{
    const NsProblem p = load_ns(o);
    const auto obs = silhouettes_from_json(detail::load_json(o.silhouettes));
    InteriorPointBackend backend;
    const BoostResult r = solve_silhouette_boosted_ns(p, obs, o.lambda, o.max_iters, backend);
    nlohmann::json j = solution_json(r.solution);
    j["converged"] = r.converged;
    j["boost_iterations"] = r.iterations;
    nlohmann::json trace = nlohmann::json::array();
    for (const auto& t : r.trace) {
        trace.push_back({{"objective", t.objective}, {"pairs", t.pair_count}, {"new_pairs", t.new_pairs}});
    }
    j["trace"] = trace;
    write_or_print(j, o.out);
    if (!r.converged) {
        std::cerr << "silhouette boosting did not converge in " << o.max_iters << " iterations; best iterate written\n";
        return kNonConvergence;
    }
    return kOk;
}

int run_bench(const Options& o)
{
    const Method method = method_from_string(o.method);
    ExperimentOptions eo;
    eo.lambda = o.lambda;
    eo.max_iters = o.max_iters;
    eo.timing = o.timing;
    const bool nsc = method == Method::nsc || o.nsc_ladder;
    std::vector<ScenarioConfig> configs;
    if (!o.config.empty()) {
        configs.push_back(load_config(o));
    } else {
        for (int id : o.configs) {
            configs.push_back(ladder_config(id, nsc, o.seed));
        }
    }
    std::vector<MetricReport> reports;
    for (const auto& c : configs) {
        const auto rs = run_experiment(c, method, o.repeats, eo);
        reports.insert(reports.end(), rs.begin(), rs.end());
    }
    const fs::path dir = o.out.empty() ? fs::path(".") : fs::path(o.out);
    fs::create_directories(dir);
    emit_report(reports, dir / "bench.csv", dir / "bench.svg");
    std::cout << report_csv(reports);
    return kOk;
}

int run_ssm_build(const Options& o)
{
    std::vector<Points3> samples;
    if (!o.population.empty()) {
        samples = population_from_json(detail::load_json(o.population));
    } else {
        samples = generate_population(o.seed, o.points, o.modes, 0.2);
    }
    const ShapeModel m = build_ssm(samples, o.variance_fraction);
    if (o.out.empty()) {
        std::cout << model_to_json(m).dump(1) << '\n';
    } else {
        save_model(m, o.out);
    }
    std::cerr << "model: N = " << m.point_count() << ", M = " << m.basis_count() << '\n';
    return kOk;
}

int exit_code(const Error& e)
{
    switch (e.code()) {
    case ErrorCode::ParseError:
    case ErrorCode::InvalidArgument:
    case ErrorCode::DimensionMismatch:
    case ErrorCode::ConfigInfeasible: return kParse;
    case ErrorCode::SolverInfeasible: return kInfeasible;
    case ErrorCode::SolverFailure: return kNonConvergence;
    default: return kOther;
    }
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"gsft: shape-from-template with generalised cameras"};
    app.require_subcommand(1);
    Options o;

    auto add_common = [&o](CLI::App* sub) {
        sub->add_option("--eps-prime", o.eps_prime, "trace weight of the relaxation")->check(CLI::NonNegativeNumber);
        sub->add_option("--out", o.out, "output file (solvers) or directory (synth, bench)");
    };
    auto add_inputs = [&o](CLI::App* sub) {
        sub->add_option("--model", o.model, "shape-model JSON")->required()->check(CLI::ExistingFile);
        sub->add_option("--rays", o.rays, "rays JSON")->required()->check(CLI::ExistingFile);
        sub->add_option("--corr", o.corr, "correspondences JSON")->required()->check(CLI::ExistingFile);
        sub->add_option("--dump-problem", o.dump, "write the conic problem as JSON");
    };
    auto add_seed = [&o](CLI::App* sub) {
        sub->add_option_function<std::uint64_t>(
            "--seed",
            [&o](std::uint64_t s) {
                o.seed = s;
                o.seed_set = true;
            },
            "random seed");
    };

    auto* synth = app.add_subcommand("synth", "generate a synthetic scenario and write its files");
    synth->add_option("--config", o.config, "scenario config JSON")->check(CLI::ExistingFile);
    add_seed(synth);
    synth->add_option("--density", o.density, "dense point count for silhouettes");
    synth->add_flag("--nsc-ladder", o.nsc_ladder, "expand config_id with the NSC ladder");
    synth->add_option("--out", o.out, "output directory");

    auto* ns = app.add_subcommand("ns", "solve NS (known viewpoint poses)");
    add_inputs(ns);
    add_common(ns);

    auto* nsc = app.add_subcommand("nsc", "solve NSC (unknown viewpoint poses, camera-frame rays)");
    add_inputs(nsc);
    add_common(nsc);
    nsc->add_option("--min-depth", o.min_depth, "minimum depth per view")->check(CLI::PositiveNumber);

    auto* silh = app.add_subcommand("silh-ns", "silhouette-boosted NS");
    add_inputs(silh);
    add_common(silh);
    silh->add_option("--silhouettes", o.silhouettes, "silhouette JSON")->required()->check(CLI::ExistingFile);
    silh->add_option("--lambda", o.lambda, "correspondence weight")->check(CLI::Range(0.0, 1.0));
    silh->add_option("--max-iters", o.max_iters, "iteration cap")->check(CLI::PositiveNumber);

    auto* bench = app.add_subcommand("bench", "run the configuration ladder and write bench.csv / bench.svg");
    bench->add_option("--config", o.config, "single scenario config JSON instead of the ladder")
        ->check(CLI::ExistingFile);
    add_seed(bench);
    bench->add_option("--repeats", o.repeats, "repeats per configuration")->check(CLI::NonNegativeNumber);
    bench->add_option("--method", o.method, "ns, nsc, silhouette_ns or trivial_repeated_sft");
    bench->add_option("--configs", o.configs, "ladder entries")->delimiter(',')->check(CLI::Range(1, 5));
    bench->add_option("--lambda", o.lambda, "correspondence weight (silhouette_ns)")->check(CLI::Range(0.0, 1.0));
    bench->add_option("--max-iters", o.max_iters, "iteration cap (silhouette_ns)")->check(CLI::PositiveNumber);
    bench->add_flag("--nsc-ladder", o.nsc_ladder, "use the NSC ladder");
    bench->add_flag("--timing", o.timing, "record wall_ms (otherwise 0)");
    bench->add_option("--out", o.out, "output directory");

    auto* ssm = app.add_subcommand("ssm", "statistical shape models");
    ssm->require_subcommand(1);
    auto* build = ssm->add_subcommand("build", "population JSON -> shape-model JSON");
    build->add_option("--population", o.population, "{\"samples\": [...]} file; synthetic when omitted")
        ->check(CLI::ExistingFile);
    add_seed(build);
    build->add_option("--points", o.points, "synthetic population: N")->check(CLI::PositiveNumber);
    build->add_option("--modes", o.modes, "synthetic population: M")->check(CLI::PositiveNumber);
    build->add_option("--variance-fraction", o.variance_fraction, "retained variance")
        ->check(CLI::Range(0.0, 1.0));
    build->add_option("--out", o.out, "output model file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kParse;
    }

    try {
        if (*synth) {
            return run_synth(o);
        }
        if (*ns) {
            return run_ns(o);
        }
        if (*nsc) {
            return run_nsc(o);
        }
        if (*silh) {
            return run_silh(o);
        }
        if (*bench) {
            return run_bench(o);
        }
        if (*build) {
            return run_ssm_build(o);
        }
    } catch (const Error& e) {
        std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << '\n';
        return exit_code(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kOther;
    }
    return kOther;
}
