// SPDX-License-Identifier: Apache-2.0
//---------------------------------------------------------------------------//
//! \file mbsde/trajectory_io.hpp
//! Trajectory export and import.
//!
//! Binary layout, all little-endian:
//! \verbatim
//!   char[8]  magic "NBSDTRJ1"
//!   u32      version (1)
//!   u32      m, nodes per axis, L, number of states
//!   f64      epsilon (NaN for intrinsic runs), solver step, record spacing
//!   per state: f64 t, then n^m * L f64 values, node-major
//! \endverbatim
//---------------------------------------------------------------------------//
#pragma once

#include <filesystem>
#include <iosfwd>

#include "field.hpp"

namespace mbsde
{
void write_trajectory_binary(Trajectory const& traj, std::ostream& os);
void write_trajectory_binary(Trajectory const& traj,
                             std::filesystem::path const& path);

//! Inverse of write_trajectory_binary; generator/manifold ids are not stored.
Trajectory read_trajectory_binary(std::istream& is);
Trajectory read_trajectory_binary(std::filesystem::path const& path);

//! CSV with header "t,node,c0,...,c{L-1}"; values printed with 17 digits.
void write_trajectory_csv(Trajectory const& traj, std::ostream& os);

}  // namespace mbsde
