// SPDX-License-Identifier: Apache-2.0
//---------------------------------------------------------------------------//
//! \file mbsde_cli.cpp
//! mbsde run | study | bench
//---------------------------------------------------------------------------//
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "mbsde/config.hpp"
#include "mbsde/experiment.hpp"
#include "mbsde/types.hpp"

namespace
{
struct Overrides
{
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
    std::optional<std::string> out;

    void apply(mbsde::ExperimentConfig& cfg) const
    {
        if (seed)
        {
            cfg.seed = *seed;
        }
        if (workers)
        {
            cfg.workers = *workers;
        }
        if (out)
        {
            cfg.out_dir = *out;
        }
    }
};

int print_report(mbsde::RunReport const& rep, std::string const& dir)
{
    for (auto const& c : rep.criteria)
    {
        std::cout << (c.passed ? "PASS " : "FAIL ") << std::left
                  << std::setw(26) << c.name << " value=" << std::setprecision(6)
                  << c.value << "  (" << c.rule << ")\n";
    }
    std::cout << "config " << rep.config_hash << " -> " << dir
              << "/report.json\n";
    return rep.all_passed() ? 0 : 1;
}

int run_config(mbsde::ExperimentConfig cfg, Overrides const& ov)
{
    ov.apply(cfg);
    auto const rep = mbsde::run_experiment(cfg);
    return print_report(rep, cfg.out_dir);
}
}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Manifold-valued BSDEs via penalized heat flows"};
    app.require_subcommand(1);

    Overrides ov;
    auto add_overrides = [&ov](CLI::App* sub) {
        sub->add_option("--seed", ov.seed, "RNG seed");
        sub->add_option("--workers", ov.workers, "Worker threads")
            ->check(CLI::PositiveNumber);
        sub->add_option("--out", ov.out, "Output directory");
    };

    std::string config_path;
    auto* run = app.add_subcommand("run", "Run an experiment config");
    run->add_option("config", config_path, "TOML or JSON config")
        ->required();
    add_overrides(run);

    std::string axis;
    auto* study = app.add_subcommand("study", "Convergence study on one axis");
    study->add_option("--axis", axis, "eps, dt or dx")
        ->required()
        ->transform(CLI::Transformer({{"ε", "eps"}, {"epsilon", "eps"}}))
        ->check(CLI::IsMember({"eps", "dt", "dx"}));
    study->add_option("config", config_path, "TOML or JSON config")
        ->required();
    add_overrides(study);

    auto* bench = app.add_subcommand("bench", "Built-in benchmarks");
    bench->require_subcommand(1);
    bench->add_subcommand("list", "List benchmark ids");
    std::string bench_id;
    auto* bench_run = bench->add_subcommand("run", "Run a benchmark");
    bench_run->add_option("id", bench_id, "Benchmark id")->required();
    add_overrides(bench_run);

    CLI11_PARSE(app, argc, argv);

    try
    {
        if (run->parsed())
        {
            return run_config(mbsde::load_config(config_path), ov);
        }
        if (study->parsed())
        {
            auto cfg = mbsde::load_config(config_path);
            ov.apply(cfg);
            auto const table = mbsde::convergence_study(cfg, axis);
            std::cout << "level,defect\n" << std::setprecision(10);
            for (std::size_t i = 0; i < table.levels.size(); ++i)
            {
                std::cout << table.levels[i] << ',' << table.defects[i]
                          << '\n';
            }
            auto const rep = mbsde::write_study(cfg, table);
            return print_report(rep, cfg.out_dir);
        }
        if (bench->got_subcommand("list"))
        {
            for (auto const& b : mbsde::list_benchmarks())
            {
                std::cout << std::left << std::setw(30) << b.id
                          << b.description << '\n';
            }
            return 0;
        }
        if (bench_run->parsed())
        {
            return run_config(mbsde::find_benchmark(bench_id).config, ov);
        }
    }
    catch (mbsde::Error const& e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    catch (std::exception const& e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
