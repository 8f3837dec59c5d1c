// SPDX-License-Identifier: Apache-2.0
//---------------------------------------------------------------------------//
//! \file mbsde/key_inequality.hpp
//! Sampled audit of the inequality
//!   Hess G(p)(u,u) + <g(p), Abar(p)(u,u) - 2 fbar(p,u)> >= -c G(p)(1+|u|^2)
//! that keeps solutions of the ambient BSDE on N.
//---------------------------------------------------------------------------//
#pragma once

#include <span>
#include <vector>

#include "generator.hpp"
#include "manifold.hpp"

namespace mbsde
{
struct KeyInequalitySample
{
    double distance{0};
    double potential{0};
    //! LHS with Abar evaluated at the foot point P_N(p).
    double lhs_foot{0};
    //! Same LHS with the projection Hessian evaluated at p itself.
    double lhs_point{0};
    //! <g(p), fbar(p,u)>, zero inside the tube in exact arithmetic.
    double gradient_dot_generator{0};
};

struct KeyInequalityReport
{
    std::vector<KeyInequalitySample> samples;
    //! min of LHS / (G (1 + |u|^2)) over samples with G > 0.
    double min_ratio_foot{0};
    double min_ratio_point{0};
    //! max |<g, fbar>| over samples inside the 2 delta_0 tube.
    double max_orthogonality_defect{0};
    bool orthogonality_holds{true};
};

//! Pairs points[i] with vectors[i]; u enters fbar as a single column.
KeyInequalityReport verify_key_inequality(EmbeddedManifold const& m,
                                          Generator const& g,
                                          std::span<AmbientVector const> points,
                                          std::span<AmbientVector const> vectors,
                                          double orthogonality_tol = 1e-9);

}  // namespace mbsde
