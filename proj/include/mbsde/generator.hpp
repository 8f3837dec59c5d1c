// SPDX-License-Identifier: Apache-2.0
//---------------------------------------------------------------------------//
//! \file mbsde/generator.hpp
//! Tangent-valued drivers f(p, u) and their ambient extensions.
//---------------------------------------------------------------------------//
#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "manifold.hpp"
#include "types.hpp"

namespace mbsde
{
//! Largest torus dimension m supported by the solvers.
inline constexpr int kMaxTorusDim = 2;

//! L x m matrix whose column i is a partial derivative d_{x_i} v (or Z^i).
using GradientMatrix = Eigen::
    Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxAmbientDim, kMaxTorusDim>;

enum class GeneratorKind
{
    zero,
    rotation,
    shear,
    custom,
};

//---------------------------------------------------------------------------//
/*!
 * Driver f : N x (TN)^m -> TN.
 *
 * Built-ins:
 * - zero: f = 0.
 * - rotation: f(p, u) = c * Omega p for a skew-symmetric Omega; independent
 *   of u and tangent on spheres and on the product torus.
 * - shear: f(p, u) = c * Pi_N(p) u_1.
 *
 * The declared growth constant C0 is advisory and cross-checked by
 * estimate_growth_constants.
 */
class Generator
{
  public:
    using Fn = std::function<AmbientVector(
        EmbeddedManifold const&, AmbientVector const&, GradientMatrix const&)>;

    static Generator zero();
    //! Rotation with the block-diagonal Omega = diag(J, J, ...), J the
    //! quarter turn of the (x_0, x_1), (x_2, x_3) planes.
    static Generator rotation(double c, int ambient_dim);
    static Generator rotation(double c, AmbientMatrix omega);
    static Generator shear(double c);
    static Generator custom(std::string name, Fn fn, double declared_c0);

    GeneratorKind kind() const { return kind_; }
    std::string const& name() const { return name_; }
    double parameter() const { return c_; }
    double declared_c0() const { return declared_c0_; }
    AmbientMatrix const& omega() const { return omega_; }

    //! Unchecked evaluation at p in N with tangent columns u.
    AmbientVector raw(EmbeddedManifold const& m,
                      AmbientVector const& p,
                      GradientMatrix const& u) const;

  private:
    Generator() = default;

    GeneratorKind kind_{GeneratorKind::zero};
    std::string name_{"zero"};
    double c_{0};
    double declared_c0_{0};
    AmbientMatrix omega_;
    Fn fn_;
};

//! f(p, u) with p on N and tangent columns. Throws NotOnManifold/NotTangent.
AmbientVector eval_generator(Generator const& g,
                             EmbeddedManifold const& m,
                             AmbientVector const& p_on_n,
                             GradientMatrix const& u);

//! fbar(p, u) = phi(dist) f(P_N p, Pi_N(P_N p) u) inside 2 delta_0, else 0.
AmbientVector eval_extended_generator(Generator const& g,
                                      EmbeddedManifold const& m,
                                      AmbientVector const& p,
                                      GradientMatrix const& u);

struct GrowthEstimate
{
    //! max |fbar| / (1 + |u|)
    double c0_hat{0};
    //! max of (|fbar| + |d_p fbar|) / (1 + |u|) and |d_u fbar|
    double c1_hat{0};
    std::size_t samples{0};
};

//! Empirical growth constants over random tube samples (report only).
GrowthEstimate estimate_growth_constants(Generator const& g,
                                         EmbeddedManifold const& m,
                                         std::size_t n_samples,
                                         int torus_dim = 1,
                                         std::uint64_t seed = 0x5eed);

//---------------------------------------------------------------------------//
}  // namespace mbsde
