// SPDX-License-Identifier: Apache-2.0
//---------------------------------------------------------------------------//
//! \file generator.cpp
//---------------------------------------------------------------------------//
#include "mbsde/generator.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <random>

namespace mbsde
{
Generator Generator::zero()
{
    return Generator{};
}

Generator Generator::rotation(double c, int ambient_dim)
{
    AmbientMatrix omega = AmbientMatrix::Zero(ambient_dim, ambient_dim);
    for (int i = 0; i + 1 < ambient_dim; i += 2)
    {
        omega(i, i + 1) = -1;
        omega(i + 1, i) = 1;
    }
    return rotation(c, omega);
}

Generator Generator::rotation(double c, AmbientMatrix omega)
{
    if ((omega + omega.transpose()).norm() > 1e-14)
    {
        throw Error(ErrorCode::config_invalid,
                    "rotation generator needs a skew-symmetric matrix");
    }
    Generator g;
    g.kind_ = GeneratorKind::rotation;
    g.name_ = "rotation";
    g.c_ = c;
    // |Omega p| <= |Omega|_op |p| and the built-in N are unit-scale
    Eigen::JacobiSVD<AmbientMatrix> svd(omega);
    g.declared_c0_ = std::abs(c) * svd.singularValues()(0);
    g.omega_ = std::move(omega);
    return g;
}

Generator Generator::shear(double c)
{
    Generator g;
    g.kind_ = GeneratorKind::shear;
    g.name_ = "shear";
    g.c_ = c;
    g.declared_c0_ = std::abs(c);
    return g;
}

Generator Generator::custom(std::string name, Fn fn, double declared_c0)
{
    Generator g;
    g.kind_ = GeneratorKind::custom;
    g.name_ = std::move(name);
    g.declared_c0_ = declared_c0;
    g.fn_ = std::move(fn);
    return g;
}

AmbientVector Generator::raw(EmbeddedManifold const& m,
                             AmbientVector const& p,
                             GradientMatrix const& u) const
{
    switch (kind_)
    {
        case GeneratorKind::zero:
            return AmbientVector::Zero(p.size());
        case GeneratorKind::rotation:
            return c_ * (omega_ * p);
        case GeneratorKind::shear:
            return c_ * (m.tangent_projector(p) * u.col(0));
        case GeneratorKind::custom:
            return fn_(m, p, u);
    }
    return AmbientVector::Zero(p.size());
}

//---------------------------------------------------------------------------//
AmbientVector eval_generator(Generator const& g,
                             EmbeddedManifold const& m,
                             AmbientVector const& p_on_n,
                             GradientMatrix const& u)
{
    double const d = m.distance(p_on_n);
    if (!(d <= kOnManifoldTol))
    {
        throw Error(ErrorCode::not_on_manifold,
                    "generator evaluated at distance " + std::to_string(d));
    }
    AmbientMatrix const proj = m.tangent_projector(p_on_n);
    for (int i = 0; i < u.cols(); ++i)
    {
        double const normal = (u.col(i) - proj * u.col(i)).norm();
        if (!(normal <= kOnManifoldTol * std::max(1.0, u.col(i).norm())))
        {
            throw Error(ErrorCode::not_tangent,
                        "argument column " + std::to_string(i)
                            + " has normal part " + std::to_string(normal));
        }
    }
    return g.raw(m, p_on_n, u);
}

AmbientVector eval_extended_generator(Generator const& g,
                                      EmbeddedManifold const& m,
                                      AmbientVector const& p,
                                      GradientMatrix const& u)
{
    if (g.kind() == GeneratorKind::zero)
    {
        return AmbientVector::Zero(p.size());
    }
    double const d = m.distance(p);
    if (!(d < m.cutoff().outer_radius()))
    {
        return AmbientVector::Zero(p.size());
    }
    AmbientVector const foot = m.nearest_point(p);
    GradientMatrix const tangent_u = m.tangent_projector(foot) * u;
    return m.cutoff().phi(d) * g.raw(m, foot, tangent_u);
}

//---------------------------------------------------------------------------//
GrowthEstimate estimate_growth_constants(Generator const& g,
                                         EmbeddedManifold const& m,
                                         std::size_t n_samples,
                                         int torus_dim,
                                         std::uint64_t seed)
{
    int const dim = m.ambient_dim();
    double const h = kFirstDerivativeStep;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> uniform;

    GrowthEstimate est;
    est.samples = n_samples;
    for (std::size_t s = 0; s < n_samples; ++s)
    {
        AmbientVector const q = m.sample_point(rng);
        AmbientVector dir(dim);
        for (int i = 0; i < dim; ++i)
        {
            dir[i] = normal(rng);
        }
        double const offset = uniform(rng) * m.cutoff().outer_radius();
        AmbientVector const p = q + offset * dir.normalized();

        GradientMatrix u(dim, torus_dim);
        double const u_scale = (s % 2 == 0) ? 0.0 : 4 * uniform(rng);
        for (int j = 0; j < torus_dim; ++j)
        {
            for (int i = 0; i < dim; ++i)
            {
                u(i, j) = u_scale * normal(rng);
            }
        }
        double const weight = 1 + u.norm();
        AmbientVector const f = eval_extended_generator(g, m, p, u);

        double dp = 0;
        for (int i = 0; i < dim; ++i)
        {
            AmbientVector e = AmbientVector::Zero(dim);
            e[i] = h;
            AmbientVector const diff = eval_extended_generator(g, m, p + e, u)
                                       - eval_extended_generator(g, m, p - e, u);
            dp = std::max(dp, diff.norm() / (2 * h));
        }
        double du = 0;
        for (int j = 0; j < torus_dim; ++j)
        {
            for (int i = 0; i < dim; ++i)
            {
                GradientMatrix e = GradientMatrix::Zero(dim, torus_dim);
                e(i, j) = h;
                AmbientVector const diff
                    = eval_extended_generator(g, m, p, u + e)
                      - eval_extended_generator(g, m, p, u - e);
                du = std::max(du, diff.norm() / (2 * h));
            }
        }
        est.c0_hat = std::max(est.c0_hat, f.norm() / weight);
        est.c1_hat
            = std::max({est.c1_hat, (f.norm() + dp) / weight, du});
    }
    return est;
}

}  // namespace mbsde
