// SPDX-License-Identifier: Apache-2.0
//---------------------------------------------------------------------------//
//! \file mbsde/manifold.hpp
//! Compact submanifolds N of R^L: nearest-point projection, distance,
//! second fundamental form, penalty potential and the globally defined
//! extensions used by the ambient BSDE.
//---------------------------------------------------------------------------//
#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <string_view>

#include "types.hpp"

namespace mbsde
{
//---------------------------------------------------------------------------//
//! Finite-difference steps shared by every derived geometric quantity.
inline constexpr double kFirstDerivativeStep = 1e-5;
inline constexpr double kSecondDerivativeStep = 1e-4;
//! Tolerance for "p lies on N" and "u is tangent at p".
inline constexpr double kOnManifoldTol = 1e-9;

//! C^2 quintic smoothstep 6t^5 - 15t^4 + 10t^3, clamped to [0, 1].
double smoothstep5(double t);
double smoothstep5_prime(double t);

//---------------------------------------------------------------------------//
/*!
 * Cutoff phi and truncation chi built from quintic splines.
 *
 * phi(s) = 1 for s <= d0, 0 for s >= 2 d0, monotone bridge in between.
 * chi(s) = s for s <= d0^2, 4 d0^2 for s >= 4 d0^2; on the bridge chi is
 * the quintic Hermite interpolant matching value, slope and curvature at
 * both ends. Its slope is (1-t)^2 (15t^2 + 2t + 1) >= 0 in the bridge
 * coordinate t.
 */
struct CutoffProfile
{
    double inner_radius{0.25};

    double outer_radius() const { return 2 * inner_radius; }

    double phi(double s) const;
    double phi_prime(double s) const;
    double chi(double s) const;
    double chi_prime(double s) const;
    double chi_second(double s) const;
};

//---------------------------------------------------------------------------//
/*!
 * Geometry descriptor for a compact N of dimension n inside R^L.
 *
 * Subclasses supply the nearest-point map and the distance; everything else
 * has a finite-difference default. Closed forms override the defaults where
 * they exist. All members are const and free of shared state.
 */
class EmbeddedManifold
{
  public:
    virtual ~EmbeddedManifold() = default;

    std::string const& id() const { return id_; }
    int ambient_dim() const { return ambient_dim_; }
    int intrinsic_dim() const { return intrinsic_dim_; }
    //! delta_0: P_N and dist^2 are smooth on the 3 delta_0 tube.
    double tube_radius() const { return cutoff_.inner_radius; }
    CutoffProfile const& cutoff() const { return cutoff_; }

    //! Nearest point without tube checks; callers guarantee dist < 3 delta_0.
    virtual AmbientVector nearest_point(AmbientVector const& p) const = 0;
    //! Euclidean distance to N, defined everywhere.
    virtual double distance(AmbientVector const& p) const = 0;
    //! Uniform-ish random point of N, used by sampling diagnostics.
    virtual AmbientVector sample_point(std::mt19937_64& rng) const = 0;

    //! Orthogonal projector onto T_q N (q on N). Default: symmetrized
    //! central-difference Jacobian of the nearest-point map.
    virtual AmbientMatrix tangent_projector(AmbientVector const& q) const;

    //! Quadratic form sum_ij d^2 P_N / dp_i dp_j (q) u_i u_j at any q of the
    //! tube. Default: central second difference along u.
    virtual AmbientVector
    projection_hessian(AmbientVector const& q, AmbientVector const& u) const;

    virtual bool has_closed_form() const { return false; }

  protected:
    EmbeddedManifold(std::string id,
                     int ambient_dim,
                     int intrinsic_dim,
                     double tube_radius);

  private:
    std::string id_;
    int ambient_dim_;
    int intrinsic_dim_;
    CutoffProfile cutoff_;
};

//---------------------------------------------------------------------------//
//! Unit sphere S^{L-1} in R^L with closed-form projection and curvature.
class Sphere final : public EmbeddedManifold
{
  public:
    explicit Sphere(int ambient_dim, double tube_radius = 0.25);

    AmbientVector nearest_point(AmbientVector const& p) const final;
    double distance(AmbientVector const& p) const final;
    AmbientVector sample_point(std::mt19937_64& rng) const final;
    AmbientMatrix tangent_projector(AmbientVector const& q) const final;
    AmbientVector projection_hessian(AmbientVector const& q,
                                     AmbientVector const& u) const final;
    bool has_closed_form() const final { return true; }
};

//! Product of two unit circles S^1 x S^1 in R^4 (coordinates (0,1), (2,3)).
class ProductTorus final : public EmbeddedManifold
{
  public:
    explicit ProductTorus(double tube_radius = 0.25);

    AmbientVector nearest_point(AmbientVector const& p) const final;
    double distance(AmbientVector const& p) const final;
    AmbientVector sample_point(std::mt19937_64& rng) const final;
    AmbientMatrix tangent_projector(AmbientVector const& q) const final;
    AmbientVector projection_hessian(AmbientVector const& q,
                                     AmbientVector const& u) const final;
    bool has_closed_form() const final { return true; }
};

//! User-supplied N: only projection, distance and a sampler are given.
class CustomManifold final : public EmbeddedManifold
{
  public:
    using ProjectFn = std::function<AmbientVector(AmbientVector const&)>;
    using DistFn = std::function<double(AmbientVector const&)>;
    using SampleFn = std::function<AmbientVector(std::mt19937_64&)>;

    CustomManifold(std::string id,
                   int ambient_dim,
                   int intrinsic_dim,
                   double tube_radius,
                   ProjectFn project,
                   DistFn dist,
                   SampleFn sample);

    AmbientVector nearest_point(AmbientVector const& p) const final;
    double distance(AmbientVector const& p) const final;
    AmbientVector sample_point(std::mt19937_64& rng) const final;

  private:
    ProjectFn project_;
    DistFn dist_;
    SampleFn sample_;
};

//! Built-in manifolds: "sphere1" (S^1 in R^2), "sphere2" (S^2 in R^3),
//! "sphere3" (S^3 in R^4), "torus2" (S^1 x S^1 in R^4).
std::unique_ptr<EmbeddedManifold>
make_manifold(std::string_view id, std::optional<double> tube_radius = {});

//---------------------------------------------------------------------------//
// Checked operations
//---------------------------------------------------------------------------//

//! P_N(p). Throws OutsideTube when dist(p) >= 3 delta_0.
AmbientVector
project_to_manifold(EmbeddedManifold const& m, AmbientVector const& p);

double dist_to_manifold(EmbeddedManifold const& m, AmbientVector const& p);

//! Tangential part of v at a point of N. Throws NotOnManifold.
AmbientVector tangent_project(EmbeddedManifold const& m,
                              AmbientVector const& p_on_n,
                              AmbientVector const& v);

//! A(p)(u, w) by polarization of the projection Hessian.
//! Throws NotOnManifold / NotTangent.
AmbientVector second_fundamental_form(EmbeddedManifold const& m,
                                      AmbientVector const& p_on_n,
                                      AmbientVector const& u,
                                      AmbientVector const& w);

//! Projection Hessian quadratic form by central differences, ignoring any
//! closed form the manifold provides. Independent oracle route.
AmbientVector projection_hessian_fd(EmbeddedManifold const& m,
                                    AmbientVector const& q,
                                    AmbientVector const& u,
                                    double step = kSecondDerivativeStep);

struct ExtendedSffOptions
{
    //! Evaluate the Hessian at P_N(p) (the global extension) or at p itself.
    bool hessian_at_foot_point{true};
    //! Apply Pi_N(P_N(p)) to u first. Off by default: the extension is
    //! defined for raw ambient u.
    bool preproject_tangent{false};
};

//! Abar(p)(u, u): phi(dist) times the projection Hessian inside the
//! 2 delta_0 tube, zero outside.
AmbientVector extended_sff(EmbeddedManifold const& m,
                           AmbientVector const& p,
                           AmbientVector const& u,
                           ExtendedSffOptions const& options = {});

//! G(p) = chi(dist^2(p)).
double penalty_potential(EmbeddedManifold const& m, AmbientVector const& p);

//! g(p) = grad G(p) = 2 chi'(dist^2) (p - P_N(p)); zero past 2 delta_0.
AmbientVector
penalty_gradient(EmbeddedManifold const& m, AmbientVector const& p);

//! Directional second derivative of G along u by central differences.
double penalty_hessian_fd(EmbeddedManifold const& m,
                          AmbientVector const& p,
                          AmbientVector const& u,
                          double step = kSecondDerivativeStep);

//! Orthonormal basis of T_q N (columns), from the tangent projector.
AmbientMatrix tangent_basis(EmbeddedManifold const& m, AmbientVector const& q);

//---------------------------------------------------------------------------//
}  // namespace mbsde
