// SPDX-License-Identifier: Apache-2.0
//---------------------------------------------------------------------------//
//! \file mbsde/diagnostics.hpp
//! Energies, the backward heat kernel, localized monotonicity quantities
//! Phi/Psi, the Bochner-type density and the epsilon-regularity scans.
//!
//! Conventions: the energy density is e = 1/2 |grad v|^2 + G(v)/eps with the
//! central-difference gradient (G term dropped for intrinsic runs); in time
//! it is interpolated linearly between stored states.
//---------------------------------------------------------------------------//
#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "field.hpp"
#include "manifold.hpp"

namespace mbsde
{
//! Monitor quantities of `state`; with `prev` the time-derivative energy is
//! int |(v - v_prev) / dt|^2 dx for the forward difference.
MonitorRecord energy_record(FieldState const& state,
                            std::optional<double> epsilon,
                            EmbeddedManifold const& m,
                            FieldState const* prev = nullptr);

//! Shortest representative of x - x0 on T^m (componentwise in [-1/2, 1/2]).
double torus_distance(std::span<double const> x, std::span<double const> x0);

//! rho_{z0}(t, x) = (2 pi |t0 - t|)^{-m/2} exp(-|x - x0|^2 / 2|t0 - t|), m =
//! x.size(), |x - x0| the torus distance. Throws DegenerateTime when
//! |t0 - t| < 1e-12.
double heat_kernel(double t0,
                   std::span<double const> x0,
                   double t,
                   std::span<double const> x);

//! phi_{x0}: 1 on B(x0, 1/4), 0 off B(x0, 1/2), quintic smoothstep between.
double window_cutoff(std::span<double const> x, std::span<double const> x0);

//---------------------------------------------------------------------------//
struct ParabolicWindow
{
    double t0{0};
    std::array<double, kMaxTorusDim> x0{};
    double radius{0};

    //! 0 < R < min(1/2, sqrt(t0)/2) and t0 <= final_time.
    bool valid(double final_time) const;
    //! Throws WindowOutOfRange unless valid.
    void require_valid(double final_time) const;
};

//! Node densities e of a state.
std::vector<double>
energy_density(FieldState const& state,
               std::optional<double> epsilon,
               EmbeddedManifold const& m);

/*!
 * Quadrature engine for Phi and Psi over a fixed trajectory.
 *
 * Energy densities of every stored state are computed once. The time
 * integral of Psi is the trapezoid rule on the stored times inside
 * (t0 - 4R^2, t0 - R^2) plus the two interpolated endpoints.
 */
class MonotonicityQuadrature
{
  public:
    MonotonicityQuadrature(Trajectory const& traj,
                           std::optional<double> epsilon,
                           EmbeddedManifold const& m);

    double phi(ParabolicWindow const& w) const;
    double psi(ParabolicWindow const& w) const;

    //! max of |grad v|^2 + G/eps over stored states and nodes in
    //! Q_r(z0); falls back to the state nearest t0 if none is inside.
    double local_sup(ParabolicWindow const& w, double r) const;

    double final_time() const { return traj_->final_time(); }

  private:
    //! int e(t, x) rho(t, x) phi^2(x) dx at an arbitrary time.
    double weighted_slice(ParabolicWindow const& w, double t) const;

    Trajectory const* traj_;
    std::vector<std::vector<double>> density_;
    std::vector<std::vector<double>> sup_density_;
};

double phi_quantity(Trajectory const& traj,
                    std::optional<double> epsilon,
                    EmbeddedManifold const& m,
                    ParabolicWindow const& w);
double psi_quantity(Trajectory const& traj,
                    std::optional<double> epsilon,
                    EmbeddedManifold const& m,
                    ParabolicWindow const& w);

//! Independent Psi: recomputes densities with its own stencil and sums the
//! same quadrature rule in a plain double loop.
double psi_quantity_naive(Trajectory const& traj,
                          std::optional<double> epsilon,
                          EmbeddedManifold const& m,
                          ParabolicWindow const& w);

//---------------------------------------------------------------------------//
//! e = 1/2 |grad v|^2 + (R^2 / eps) G(v) per node.
std::vector<double> bochner_density(FieldState const& state,
                                    std::optional<double> epsilon,
                                    double r_scale,
                                    EmbeddedManifold const& m);

struct BochnerReport
{
    //! max over nodes with e > 1e-10 of (d_t - 1/2 Lap) e / (e (R^2 + e))
    double max_ratio{0};
    std::size_t nodes_counted{0};
};

BochnerReport bochner_ratio(FieldState const& prev,
                            FieldState const& state,
                            std::optional<double> epsilon,
                            double r_scale,
                            EmbeddedManifold const& m);

//---------------------------------------------------------------------------//
struct ScanOptions
{
    double theta0{0.1};
    double radius{0.1};
    double kappa{0.5};
    //! Trial cap on the local sup inside Q_{kappa R}.
    double cap{1e3};
    int time_points{8};
    int space_points{8};
};

struct ScanEntry
{
    ParabolicWindow window;
    bool valid{false};
    double psi{0};
    double local_sup{0};
};

struct ScanReport
{
    std::vector<ScanEntry> entries;
    std::size_t small_psi{0};
    //! Among windows with Psi < theta0, how many exceed the cap.
    std::size_t small_psi_above_cap{0};
    double fraction_bounded{1};
    //! Windows with Psi >= theta0.
    std::vector<std::size_t> candidates;
};

//! Lattice z0 = (T (k+1) / nt, i / nx [, j / nx]); windows violating the
//! radius constraint are kept with valid = false.
std::vector<ParabolicWindow>
scan_lattice(double final_time, int dim, double radius, int nt, int nx);

ScanReport regularity_scan(Trajectory const& traj,
                           std::optional<double> epsilon,
                           EmbeddedManifold const& m,
                           ScanOptions const& options);

struct SingularSetReport
{
    std::vector<ParabolicWindow> lattice;
    std::vector<bool> mask;
    std::size_t marked{0};
    double fraction{0};
    //! marked count times the lattice cell volume (T / nt)(1 / nx)^m
    double measure{0};
};

//! Marks z0 when, for every admissible R of the ladder, the minimum of Psi
//! over the smaller half of the epsilon ladder is at least theta0.
//! Throws ConfigInvalid with fewer than two trajectories.
SingularSetReport
singular_set_detect(std::vector<Trajectory> const& family,
                    EmbeddedManifold const& m,
                    double theta0,
                    std::vector<double> const& radii,
                    int nt = 8,
                    int nx = 8);

//---------------------------------------------------------------------------//
//! Smallest C >= 0 with Psi(R) <= exp(C (R0 - R)) Psi(R0) + C (R0 - R) for
//! all ladder entries, R0 the largest radius. Infinity if none up to 1e6.
double fit_monotonicity_constant(std::vector<double> const& radii,
                                 std::vector<double> const& values);

//! Smallest C >= 0 with E(t) + int_0^t int |d_t v|^2 <= exp(Ct)(Ct + E(0)).
double fit_energy_constant(std::vector<MonitorRecord> const& monitors);

}  // namespace mbsde
