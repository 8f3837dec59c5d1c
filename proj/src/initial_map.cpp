// SPDX-License-Identifier: Apache-2.0
//---------------------------------------------------------------------------//
//! \file initial_map.cpp
//---------------------------------------------------------------------------//
#include "mbsde/initial_map.hpp"

#include <cmath>
#include <numbers>

namespace mbsde
{
namespace
{
constexpr double two_pi = 2 * std::numbers::pi;
}

InitialMap::InitialMap(std::string id, Fn fn)
    : id_(std::move(id)), fn_(std::move(fn))
{
}

InitialMap InitialMap::constant(AmbientVector p0)
{
    return InitialMap("constant",
                      [p0](std::span<double const>) { return p0; });
}

InitialMap InitialMap::great_circle(int k, EmbeddedManifold const& m)
{
    int const dim = m.ambient_dim();
    bool const torus = m.id() == "torus2";
    return InitialMap(
        "great_circle_k" + std::to_string(k),
        [k, dim, torus](std::span<double const> x) {
            AmbientVector v = AmbientVector::Zero(dim);
            double const angle = two_pi * k * x[0];
            v[0] = std::cos(angle);
            v[1] = std::sin(angle);
            if (torus)
            {
                v[2] = 1;
            }
            return v;
        });
}

InitialMap InitialMap::fourier(AmbientVector offset,
                               std::vector<FourierTerm> terms,
                               EmbeddedManifold const& m)
{
    return InitialMap(
        "fourier",
        [offset, terms = std::move(terms), &m](std::span<double const> x) {
            AmbientVector v = offset;
            for (auto const& term : terms)
            {
                double phase = 0;
                for (std::size_t i = 0; i < term.wave.size() && i < x.size();
                     ++i)
                {
                    phase += term.wave[i] * x[i];
                }
                phase *= two_pi;
                v += std::cos(phase) * term.cos_coef
                     + std::sin(phase) * term.sin_coef;
            }
            double const d = m.distance(v);
            if (!(d < 3 * m.tube_radius()))
            {
                throw Error(ErrorCode::initial_data_off_manifold,
                            "Fourier series leaves the projection tube");
            }
            return m.nearest_point(v);
        });
}

InitialMap InitialMap::sphere_collapse()
{
    return InitialMap("sphere_collapse", [](std::span<double const> x) {
        double const theta
            = 0.5 * std::numbers::pi * (1 - std::cos(two_pi * x[0]));
        double const phi = x.size() > 1 ? two_pi * x[1] : 0.0;
        AmbientVector v(3);
        v << std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi),
            std::cos(theta);
        return v;
    });
}

InitialMap InitialMap::custom(std::string id, Fn fn)
{
    return InitialMap(std::move(id), std::move(fn));
}

AmbientVector InitialMap::operator()(std::span<double const> x) const
{
    return fn_(x);
}

GradientMatrix InitialMap::derivative(std::span<double const> x) const
{
    double const h = 1e-5;
    std::vector<double> xp(x.begin(), x.end());
    std::vector<double> xm(x.begin(), x.end());
    AmbientVector const center = fn_(x);
    GradientMatrix out(center.size(), static_cast<int>(x.size()));
    for (std::size_t i = 0; i < x.size(); ++i)
    {
        xp[i] = x[i] + h;
        xm[i] = x[i] - h;
        out.col(static_cast<int>(i)) = (fn_(xp) - fn_(xm)) / (2 * h);
        xp[i] = x[i];
        xm[i] = x[i];
    }
    return out;
}

}  // namespace mbsde
