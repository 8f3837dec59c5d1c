// SPDX-License-Identifier: Apache-2.0
//---------------------------------------------------------------------------//
//! \file mbsde/types.hpp
//! Shared vocabulary: ambient vectors and the library error type.
//---------------------------------------------------------------------------//
#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <string>
#include <string_view>

namespace mbsde
{
//! Largest ambient dimension L supported by the built-in manifolds.
inline constexpr int kMaxAmbientDim = 4;

//! Point or vector of R^L. Fixed capacity, so no heap traffic in hot loops.
using AmbientVector
    = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxAmbientDim, 1>;

//! L x L matrix (projector, rotation generator, Jacobian).
using AmbientMatrix = Eigen::Matrix<double,
                                    Eigen::Dynamic,
                                    Eigen::Dynamic,
                                    0,
                                    kMaxAmbientDim,
                                    kMaxAmbientDim>;

enum class ErrorCode
{
    outside_tube,
    not_on_manifold,
    not_tangent,
    initial_data_off_manifold,
    cfl_violated,
    node_left_tube,
    diverged,
    projection_outside_tube,
    grid_mismatch,
    insufficient_paths,
    degenerate_time,
    window_out_of_range,
    config_invalid,
    not_found,
    io_failure,
};

std::string_view to_string(ErrorCode code);

//! Every recoverable failure in the library is reported through this type.
class Error : public std::runtime_error
{
  public:
    Error(ErrorCode code, std::string const& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what)
        , code_(code)
    {
    }

    ErrorCode code() const noexcept { return code_; }

  private:
    ErrorCode code_;
};

inline std::string_view to_string(ErrorCode code)
{
    switch (code)
    {
        case ErrorCode::outside_tube:
            return "OutsideTube";
        case ErrorCode::not_on_manifold:
            return "NotOnManifold";
        case ErrorCode::not_tangent:
            return "NotTangent";
        case ErrorCode::initial_data_off_manifold:
            return "InitialDataOffManifold";
        case ErrorCode::cfl_violated:
            return "CflViolated";
        case ErrorCode::node_left_tube:
            return "NodeLeftTube";
        case ErrorCode::diverged:
            return "Diverged";
        case ErrorCode::projection_outside_tube:
            return "ProjectionOutsideTube";
        case ErrorCode::grid_mismatch:
            return "GridMismatch";
        case ErrorCode::insufficient_paths:
            return "InsufficientPaths";
        case ErrorCode::degenerate_time:
            return "DegenerateTime";
        case ErrorCode::window_out_of_range:
            return "WindowOutOfRange";
        case ErrorCode::config_invalid:
            return "ConfigInvalid";
        case ErrorCode::not_found:
            return "NotFound";
        case ErrorCode::io_failure:
            return "IoFailure";
    }
    return "Unknown";
}

}  // namespace mbsde
