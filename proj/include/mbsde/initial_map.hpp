// SPDX-License-Identifier: Apache-2.0
//---------------------------------------------------------------------------//
//! \file mbsde/initial_map.hpp
//! Initial / terminal data h : T^m -> N.
//---------------------------------------------------------------------------//
#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "generator.hpp"
#include "manifold.hpp"

namespace mbsde
{
//! One term a cos(2 pi k.x) + b sin(2 pi k.x) of an ambient Fourier series.
struct FourierTerm
{
    std::vector<int> wave;
    AmbientVector cos_coef;
    AmbientVector sin_coef;
};

class InitialMap
{
  public:
    using Fn = std::function<AmbientVector(std::span<double const>)>;

    //! h = p0 everywhere.
    static InitialMap constant(AmbientVector p0);
    //! h(x) = (cos 2 pi k x_0, sin 2 pi k x_0, 0...) on spheres, and
    //! (cos 2 pi k x_0, sin 2 pi k x_0, 1, 0) on the product torus.
    static InitialMap great_circle(int k, EmbeddedManifold const& m);
    //! h = P_N(offset + sum of Fourier terms). m must outlive the map.
    static InitialMap fourier(AmbientVector offset,
                              std::vector<FourierTerm> terms,
                              EmbeddedManifold const& m);
    //! T^2 -> S^2 with polar angle pi (1 - cos 2 pi x_0) / 2 and azimuth
    //! 2 pi x_1: the whole x_1-circle collapses onto a pole at x_0 = 0, 1/2.
    static InitialMap sphere_collapse();
    static InitialMap custom(std::string id, Fn fn);

    std::string const& id() const { return id_; }

    //! x is a point of R^m; h is 1-periodic in each coordinate.
    AmbientVector operator()(std::span<double const> x) const;
    //! Columns d h / d x_i by central differences.
    GradientMatrix derivative(std::span<double const> x) const;

  private:
    InitialMap(std::string id, Fn fn);

    std::string id_;
    Fn fn_;
};

}  // namespace mbsde
