// SPDX-License-Identifier: Apache-2.0
//---------------------------------------------------------------------------//
//! \file mbsde/experiment.hpp
//! End-to-end runs: solve, assemble, check, persist.
//---------------------------------------------------------------------------//
#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "config.hpp"
#include "generator.hpp"
#include "initial_map.hpp"
#include "manifold.hpp"
#include "pde.hpp"

namespace mbsde
{
//! Manifold, driver and initial map described by a config. The initial map
//! may refer to the manifold, so keep the Problem alive while using it.
struct Problem
{
    std::unique_ptr<EmbeddedManifold> manifold;
    Generator generator;
    InitialMap initial;
};

Problem make_problem(ExperimentConfig const& cfg);

//! Configured dt, or the largest stable one dividing T.
double resolve_dt(ExperimentConfig const& cfg);

//! Least-squares slope of log(defect) against log(level); NaN if any entry
//! is not positive or fewer than two levels are given.
double fit_order(std::vector<double> const& levels,
                 std::vector<double> const& defects);

struct Criterion
{
    std::string name;
    bool passed{false};
    double value{0};
    std::string rule;
};

struct RunReport
{
    std::string config_hash;
    std::vector<Criterion> criteria;
    nlohmann::json details;
    std::vector<std::string> files;
    std::string status{"ok"};

    bool all_passed() const;
    nlohmann::json to_json() const;
};

//! Runs the full pipeline and writes report.json, monitor.csv, ensemble.csv,
//! scan.json (and trajectory.bin on request) into cfg.out_dir.
//! Validation errors (ConfigInvalid, CflViolated) are raised before any
//! file is written; later failures leave a report marked "failed".
RunReport run_experiment(ExperimentConfig const& cfg);

struct StudyTable
{
    std::string axis;
    std::vector<double> levels;
    std::vector<double> defects;
    double order{0};
    double expected_low{0};
    double expected_high{0};
    bool passed{false};

    nlohmann::json to_json() const;
};

//! axis: "eps" (max dist_N), "dt" (mean max BSDE residual over nested
//! paths), "dx" (sup deviation from h, stationary runs). Three levels.
StudyTable convergence_study(ExperimentConfig const& cfg, std::string_view axis);

//! Writes the study as report.json into cfg.out_dir.
RunReport write_study(ExperimentConfig const& cfg, StudyTable const& table);

struct Benchmark
{
    std::string id;
    std::string description;
    ExperimentConfig config;
};

std::vector<Benchmark> list_benchmarks();
//! Throws NotFound.
Benchmark find_benchmark(std::string_view id);

}  // namespace mbsde
