// SPDX-License-Identifier: Apache-2.0
//---------------------------------------------------------------------------//
//! \file mbsde/config.hpp
//! Experiment configuration: TOML subset or JSON, validation and hashing.
//---------------------------------------------------------------------------//
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace mbsde
{
struct ExperimentConfig
{
    // [problem]
    std::string manifold{"sphere2"};
    double tube_radius{0.25};
    std::string generator{"zero"};
    double generator_param{0};
    //! constant | great_circle | sphere_collapse | fourier
    std::string initial_map{"great_circle"};
    int wave_number{1};
    std::vector<double> constant_point;
    std::vector<double> fourier_offset;
    std::vector<std::vector<int>> fourier_waves;
    std::vector<std::vector<double>> fourier_cos;
    std::vector<std::vector<double>> fourier_sin;

    // [grid]
    int dim{1};
    int nodes{64};
    double final_time{0.25};
    //! Empty means the largest stable step that divides T.
    std::optional<double> dt;
    //! penalized | intrinsic
    std::string solver{"penalized"};
    //! imex | explicit
    std::string scheme{"imex"};
    std::vector<double> epsilons{1e-2, 1e-3, 1e-4};
    int record_stride{1};

    // [ensemble]
    std::size_t paths{100};
    double path_dt{1e-3};
    //! Start points per axis of the audit grid.
    int starts{8};
    std::uint64_t seed{1};
    std::vector<double> checkpoints;
    std::size_t martingale_paths{0};
    bool negative_control{false};

    // [diagnostics]
    double theta0{0.1};
    double scan_radius{0.05};
    double kappa{0.5};
    double cap{1e3};
    std::vector<double> radii{0.02, 0.04, 0.08};
    int scan_time_points{8};
    int scan_space_points{8};

    // [output]
    std::string out_dir{"out"};
    int workers{1};
    bool write_trajectory{false};
};

//! Parse the TOML subset: [section] headers, key = value with strings,
//! numbers, booleans and (nested) arrays, '#' comments. Numbers are read
//! with std::from_chars, independent of the locale. Throws ConfigInvalid.
nlohmann::json parse_toml(std::string_view text);

//! Sections as nested objects, the same shape parse_toml produces.
nlohmann::json to_json(ExperimentConfig const& cfg);
ExperimentConfig config_from_json(nlohmann::json const& j);

//! .json files are read as JSON, anything else as TOML.
ExperimentConfig load_config(std::filesystem::path const& path);
ExperimentConfig parse_config(std::string_view text, bool json);

//! Throws ConfigInvalid on the first violated rule.
void validate(ExperimentConfig const& cfg);

//! FNV-1a 64 of the canonical JSON without output directory and workers,
//! as 16 hex digits.
std::string config_hash(ExperimentConfig const& cfg);

}  // namespace mbsde
