// SPDX-License-Identifier: Apache-2.0
//---------------------------------------------------------------------------//
//! \file mbsde/bsde.hpp
//! Assembly of (Y, Z) along Brownian paths from a solved field, and the
//! checks run on the result: backward-equation residuals, martingale
//! statistics, tangency and constraint defects.
//---------------------------------------------------------------------------//
#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "brownian.hpp"
#include "field.hpp"
#include "generator.hpp"
#include "initial_map.hpp"
#include "manifold.hpp"

namespace mbsde
{
//---------------------------------------------------------------------------//
/*!
 * One path with its assembled pair.
 *
 * y[j] = v(T - t_j, B_{t_j} + x), z[j] = grad_x v at the same point,
 * terminal = h(B_T + x). The path increments are copied so the sample is
 * self-contained.
 */
struct BSDESample
{
    std::array<double, kMaxTorusDim> start{};
    int dim{1};
    double dt{0};
    std::vector<double> increments;
    std::vector<AmbientVector> y;
    std::vector<GradientMatrix> z;
    AmbientVector terminal;

    std::size_t steps() const { return y.empty() ? 0 : y.size() - 1; }
    double increment(std::size_t j, int axis) const
    {
        return increments[j * dim + axis];
    }
};

//! Throws GridMismatch when T or m of the path and the field disagree.
BSDESample assemble_bsde_sample(SpaceTimeField const& field,
                                BrownianPath const& path,
                                std::span<double const> x,
                                InitialMap const& h);

//---------------------------------------------------------------------------//
/*!
 * Residual of the backward equation along one sample.
 *
 * r_j = Y_j - [Y_K - sum_{k>=j} Z_k dB_k - 1/2 sum_{k>=j} Abar(Y_k)(Z_k, Z_k)
 * dt + sum_{k>=j} fbar(Y_k, Z_k) dt], left-point sums. The sums are anchored
 * at the assembled Y_K, so r_K = 0 identically; the mismatch between Y_K and
 * h(B_T + x) is interpolation error and is reported on its own.
 */
struct ResidualLedger
{
    std::vector<double> residual;
    double max_abs{0};
    double terminal_residual{0};
    double terminal_mismatch{0};
    //! |sum over the whole path| of each term, for scale.
    double stochastic_integral{0};
    double sff_drift{0};
    double generator_drift{0};
};

ResidualLedger bsde_residual(BSDESample const& sample,
                             Generator const& g,
                             EmbeddedManifold const& m);

//! Test function psi : T^m -> R^L.
using TestFunction = std::function<AmbientVector(std::span<double const>)>;

/*!
 * Tested form of the backward equation at time t:
 *   int <Y_t^x, psi> dx - int <h(B_T + x) - sum Z dB - 1/2 sum Abar dt
 *                                 + sum fbar dt, psi> dx,
 * with the x-integral replaced by the equal-weight average over the samples
 * (which share one path and sit on a uniform grid of start points).
 */
double weak_residual(std::span<BSDESample const> samples,
                     TestFunction const& psi,
                     double t,
                     Generator const& g,
                     EmbeddedManifold const& m);

//---------------------------------------------------------------------------//
/*!
 * Scalar observable on N given through an ambient extension gbar.
 *
 * Hess g(p)(u, u) on N is gbar''(p)(u, u) + <grad gbar(p), Abar(p)(u, u)>.
 */
struct Observable
{
    std::string name;
    std::function<double(AmbientVector const&)> value;
    std::function<AmbientVector(AmbientVector const&)> gradient;
    std::function<double(AmbientVector const&, AmbientVector const&)>
        ambient_hessian;
};

//! g(p) = <p, e_axis>; linear, so the ambient Hessian vanishes.
Observable coordinate_observable(int axis, int ambient_dim);
//! g = 1.
Observable constant_observable(int ambient_dim);

struct MartingaleOptions
{
    //! -1 flips the sign of the curvature drift (negative control).
    double sff_sign{1};
};

//! M^g_j = g(Y_j) - g(Y_0) - 1/2 sum_{k<j} sum_i Hess g(Z^i_k, Z^i_k) dt
//!         + sum_{k<j} <grad g(Y_k), fbar(Y_k, Z_k)> dt.
std::vector<double> martingale_path(BSDESample const& sample,
                                    Observable const& obs,
                                    Generator const& g,
                                    EmbeddedManifold const& m,
                                    MartingaleOptions const& options = {});

struct MartingaleStats
{
    std::vector<double> times;
    std::vector<double> mean;
    std::vector<double> std_error;
    std::vector<double> z;
    bool passed{true};
};

//! z = |mean| / stderr per checkpoint; passes when every z <= 4.
//! values[p][c] is M^g of path p at checkpoint c. Throws InsufficientPaths
//! below 100 paths.
MartingaleStats martingale_test(std::vector<std::vector<double>> const& values,
                                std::vector<double> const& checkpoints);

inline constexpr double kMartingaleZThreshold = 4.0;
inline constexpr std::size_t kMinMartingalePaths = 100;

//---------------------------------------------------------------------------//
//! sum_j |normal part of Z_j at P_N(Y_j)|^2 / sum_j |Z_j|^2; 0 when Z = 0.
double tangency_defect(BSDESample const& sample, EmbeddedManifold const& m);

//! max_j dist_N(Y_j).
double on_manifold_defect(BSDESample const& sample, EmbeddedManifold const& m);

//---------------------------------------------------------------------------//
// Ensembles
//---------------------------------------------------------------------------//

//! Seed of path `index` in an ensemble keyed by `seed`.
std::uint64_t path_seed(std::uint64_t seed, std::uint64_t index);

//! n^m start points x = i / n on T^m.
std::vector<std::array<double, kMaxTorusDim>> uniform_starts(int dim, int n);

struct EnsembleOptions
{
    std::uint64_t seed{1};
    std::size_t paths{100};
    double dt{1e-3};
    //! Path p starts at starts[p % starts.size()]; empty means x = 0.
    std::vector<std::array<double, kMaxTorusDim>> starts;
    std::vector<double> checkpoints;
    std::vector<Observable> observables;
    //! Also run every observable with the curvature drift sign flipped.
    bool negative_control{false};
    //! Sample at dt / 2 and coarsen, so that the dt and dt/2 residuals come
    //! from the same Brownian motion.
    bool refine{false};
    int workers{1};
};

struct PathSummary
{
    std::uint64_t seed{0};
    std::array<double, kMaxTorusDim> start{};
    double max_residual{0};
    double terminal_residual{0};
    double terminal_mismatch{0};
    double tangency{0};
    double on_manifold{0};
    //! Residual on the dt / 2 refinement of the same path (refine only).
    double fine_max_residual{0};
};

struct EnsembleResult
{
    std::vector<PathSummary> paths;
    std::vector<MartingaleStats> martingale;
    std::vector<MartingaleStats> negative_control;
    double mean_max_residual{0};
    double mean_fine_max_residual{0};
    double max_terminal_residual{0};
    double max_tangency{0};
    double max_on_manifold{0};
    //! Indices of paths whose max residual exceeds 5x the median.
    std::vector<std::size_t> outliers;
};

//! Runs the ensemble over `workers` threads; results are reduced in path
//! order, so they do not depend on the worker count.
EnsembleResult run_ensemble(SpaceTimeField const& field,
                            InitialMap const& h,
                            Generator const& g,
                            EmbeddedManifold const& m,
                            EnsembleOptions const& options);

}  // namespace mbsde
