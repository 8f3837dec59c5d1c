// SPDX-License-Identifier: Apache-2.0
//---------------------------------------------------------------------------//
//! \file test_manifold.cpp
//---------------------------------------------------------------------------//
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "mbsde/manifold.hpp"

using namespace mbsde;

namespace
{
AmbientVector vec(std::initializer_list<double> v)
{
    AmbientVector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v)
    {
        out[i++] = x;
    }
    return out;
}

void expect_near(AmbientVector const& a, AmbientVector const& b, double tol)
{
    ASSERT_EQ(a.size(), b.size());
    EXPECT_LE((a - b).norm(), tol) << a.transpose() << " vs " << b.transpose();
}

AmbientVector random_tangent(EmbeddedManifold const& m,
                             AmbientVector const& q,
                             std::mt19937_64& rng)
{
    std::normal_distribution<double> n;
    AmbientVector v(m.ambient_dim());
    for (int i = 0; i < v.size(); ++i)
    {
        v[i] = n(rng);
    }
    return m.tangent_projector(q) * v;
}
}  // namespace

TEST(Smoothstep, EndpointsAndMonotone)
{
    EXPECT_EQ(smoothstep5(0), 0);
    EXPECT_EQ(smoothstep5(1), 1);
    EXPECT_DOUBLE_EQ(smoothstep5(0.5), 0.5);
    double prev = 0;
    for (int i = 1; i <= 100; ++i)
    {
        double const s = smoothstep5(i / 100.0);
        EXPECT_GE(s, prev);
        prev = s;
    }
}

TEST(Cutoff, PhiAndChiShape)
{
    CutoffProfile c;
    EXPECT_EQ(c.phi(0.1), 1);
    EXPECT_EQ(c.phi(0.25), 1);
    EXPECT_EQ(c.phi(0.5), 0);
    EXPECT_EQ(c.phi(1.0), 0);
    EXPECT_DOUBLE_EQ(c.chi(0.01), 0.01);
    EXPECT_DOUBLE_EQ(c.chi(1.0), 0.25);
    // C^2 matching at both bridge ends
    double const a = 0.0625, b = 0.25, h = 1e-7;
    EXPECT_NEAR(c.chi(a + h), a + h, 1e-12);
    EXPECT_NEAR(c.chi_prime(a), 1, 1e-12);
    EXPECT_NEAR(c.chi_prime(b), 0, 1e-12);
    EXPECT_NEAR(c.chi_second(a), 0, 1e-9);
    EXPECT_NEAR(c.chi_second(b), 0, 1e-9);
    for (int i = 0; i <= 50; ++i)
    {
        double const s = a + (b - a) * i / 50.0;
        EXPECT_GE(c.chi_prime(s), -1e-14);
        EXPECT_GE(c.chi(s), a - 1e-15);
        EXPECT_LE(c.chi(s), b + 1e-15);
    }
}

TEST(Project, SphereExamples)
{
    Sphere s(3);
    expect_near(project_to_manifold(s, vec({0.5, 0, 0})), vec({1, 0, 0}), 1e-15);
    expect_near(project_to_manifold(s, vec({0, 1.7, 0})), vec({0, 1, 0}), 1e-15);
    // dist 1 >= 3 delta_0: the guarded projection refuses, the radial map
    // itself is still well defined
    expect_near(s.nearest_point(vec({2, 0, 0})), vec({1, 0, 0}), 1e-15);
    for (auto const& p : {vec({2, 0, 0}), vec({0, 0, 0})})
    {
        try
        {
            project_to_manifold(s, p);
            FAIL() << "expected OutsideTube";
        }
        catch (Error const& e)
        {
            EXPECT_EQ(e.code(), ErrorCode::outside_tube);
        }
    }
}

TEST(Project, MinimizesDistanceOverDenseSample)
{
    Sphere s(3);
    AmbientVector const p = vec({0.6, 0.8, 0.5});
    double const d = (project_to_manifold(s, p) - p).norm();
    std::mt19937_64 rng(3);
    for (int i = 0; i < 20000; ++i)
    {
        EXPECT_GE((s.sample_point(rng) - p).norm(), d - 1e-12);
    }
}

TEST(Distance, SphereExamples)
{
    Sphere s(3);
    EXPECT_DOUBLE_EQ(dist_to_manifold(s, vec({2, 0, 0})), 1.0);
    EXPECT_EQ(dist_to_manifold(s, vec({1, 0, 0})), 0.0);
    EXPECT_NEAR(dist_to_manifold(s, vec({0.6, 0.8, 0.5})), 0.118034, 1e-6);
    // Dense-sampling oracle
    std::mt19937_64 rng(11);
    double best = 1e9;
    for (int i = 0; i < 200000; ++i)
    {
        best = std::min(best, (s.sample_point(rng) - vec({0.6, 0.8, 0.5})).norm());
    }
    EXPECT_NEAR(best, 0.118034, 2e-3);
}

TEST(Distance, UnitGradientInsideTube)
{
    Sphere s(3);
    ProductTorus t;
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> r(-0.2, 0.2);
    for (EmbeddedManifold const* m : {static_cast<EmbeddedManifold const*>(&s),
                                       static_cast<EmbeddedManifold const*>(&t)})
    {
        for (int i = 0; i < 200; ++i)
        {
            AmbientVector q = m->sample_point(rng);
            AmbientVector p = q;
            for (int k = 0; k < p.size(); ++k)
            {
                p[k] += r(rng) * 0.5;
            }
            if (m->distance(p) < 1e-3)
            {
                continue;
            }
            AmbientVector grad(p.size());
            double const h = 1e-6;
            for (int k = 0; k < p.size(); ++k)
            {
                AmbientVector e = AmbientVector::Zero(p.size());
                e[k] = h;
                grad[k] = (m->distance(p + e) - m->distance(p - e)) / (2 * h);
            }
            EXPECT_NEAR(grad.norm(), 1.0, 1e-6);
        }
    }
}

TEST(TangentProject, SphereExamples)
{
    Sphere s(3);
    expect_near(tangent_project(s, vec({1, 0, 0}), vec({3, 1, 0})), vec({0, 1, 0}), 1e-15);
    expect_near(tangent_project(s, vec({1, 0, 0}), vec({5, 0, 0})), vec({0, 0, 0}), 1e-15);
    expect_near(tangent_project(s, vec({0, 0, 1}), vec({1, 1, 1})), vec({1, 1, 0}), 1e-15);
}

TEST(TangentProject, IdempotentSymmetric)
{
    ProductTorus t;
    std::mt19937_64 rng(9);
    for (int i = 0; i < 100; ++i)
    {
        AmbientVector const q = t.sample_point(rng);
        AmbientMatrix const p = t.tangent_projector(q);
        EXPECT_LE((p * p - p).norm(), 1e-14);
        EXPECT_LE((p - p.transpose()).norm(), 1e-14);
        EXPECT_NEAR(p.trace(), 2.0, 1e-14);
    }
}

TEST(TangentProject, OffManifoldPoint)
{
    Sphere s(3);
    EXPECT_THROW(tangent_project(s, vec({1.1, 0, 0}), vec({0, 1, 0})), Error);
}

TEST(SecondFundamentalForm, SphereExamples)
{
    Sphere s(3);
    expect_near(second_fundamental_form(s, vec({1, 0, 0}), vec({0, 1, 0}), vec({0, 1, 0})),
                vec({-1, 0, 0}), 1e-14);
    expect_near(second_fundamental_form(s, vec({0, 0, 1}), vec({1, 0, 0}), vec({0, 1, 0})),
                vec({0, 0, 0}), 1e-14);
    expect_near(second_fundamental_form(s, vec({0, 0, 1}), vec({0, 0, 0}), vec({1, 0, 0})),
                vec({0, 0, 0}), 1e-14);
    // Finite-difference Hessian of q / |q|
    expect_near(projection_hessian_fd(s, vec({1, 0, 0}), vec({0, 1, 0})),
                vec({-1, 0, 0}), 1e-6);
}

TEST(SecondFundamentalForm, NormalSymmetricBilinear)
{
    Sphere s(3);
    ProductTorus t;
    std::mt19937_64 rng(21);
    for (EmbeddedManifold const* m : {static_cast<EmbeddedManifold const*>(&s),
                                       static_cast<EmbeddedManifold const*>(&t)})
    {
        for (int i = 0; i < 200; ++i)
        {
            AmbientVector const q = m->sample_point(rng);
            AmbientVector const u = random_tangent(*m, q, rng);
            AmbientVector const w = random_tangent(*m, q, rng);
            AmbientVector const a = second_fundamental_form(*m, q, u, w);
            EXPECT_LE((m->tangent_projector(q) * a).norm(), 1e-12);
            expect_near(a, second_fundamental_form(*m, q, w, u), 1e-13);
            expect_near(second_fundamental_form(*m, q, 2.5 * u, w), 2.5 * a, 1e-12);
        }
    }
}

TEST(SecondFundamentalForm, NonTangentArgument)
{
    Sphere s(3);
    try
    {
        second_fundamental_form(s, vec({1, 0, 0}), vec({1, 0, 0}), vec({0, 1, 0}));
        FAIL();
    }
    catch (Error const& e)
    {
        EXPECT_EQ(e.code(), ErrorCode::not_tangent);
    }
}

TEST(SecondFundamentalForm, CustomManifoldUsesFiniteDifferences)
{
    // Sphere of radius 2 through the generic route: A(u,u) = -|u|^2 p / 4
    CustomManifold c(
        "sphere_r2", 3, 2, 0.25,
        [](AmbientVector const& p) { return AmbientVector(2 * p.normalized()); },
        [](AmbientVector const& p) { return std::abs(p.norm() - 2); },
        [](std::mt19937_64& rng) {
            std::normal_distribution<double> n;
            AmbientVector v(3);
            v << n(rng), n(rng), n(rng);
            return AmbientVector(2 * v.normalized());
        });
    AmbientVector const p = vec({0, 0, 2});
    AmbientVector const u = vec({1, 0, 0});
    expect_near(second_fundamental_form(c, p, u, u), vec({0, 0, -0.5}), 1e-5);
}

TEST(ExtendedSff, Examples)
{
    Sphere s(3);
    expect_near(extended_sff(s, vec({1, 0, 0}), vec({0, 1, 0})), vec({-1, 0, 0}), 1e-14);
    expect_near(extended_sff(s, vec({3, 0, 0}), vec({0, 1, 0})), vec({0, 0, 0}), 0);
    expect_near(extended_sff(s, vec({1.125, 0, 0}), vec({0, 1, 0})),
                vec({-1, 0, 0}), 1e-14);
}

TEST(ExtendedSff, VanishesOutsideOuterTube)
{
    Sphere s(3);
    for (double r : {1.5, 1.75, 2.0, 0.45})
    {
        EXPECT_EQ(extended_sff(s, vec({r, 0, 0}), vec({0, 1, 0})).norm(), 0);
    }
}

TEST(Penalty, Examples)
{
    Sphere s(3, 0.25);
    EXPECT_NEAR(penalty_potential(s, vec({1.1, 0, 0})), 0.01, 1e-15);
    EXPECT_EQ(penalty_potential(s, vec({0, 1, 0})), 0);
    EXPECT_DOUBLE_EQ(penalty_potential(s, vec({3, 0, 0})), 0.25);
    expect_near(penalty_gradient(s, vec({1.1, 0, 0})), vec({0.2, 0, 0}), 1e-15);
    expect_near(penalty_gradient(s, vec({0, 1, 0})), vec({0, 0, 0}), 0);
    expect_near(penalty_gradient(s, vec({0.9, 0, 0})), vec({-0.2, 0, 0}), 1e-15);
}

TEST(Penalty, GradientMatchesFiniteDifferenceAndIsNormal)
{
    Sphere s(3);
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> r(0.55, 1.7);
    for (int i = 0; i < 300; ++i)
    {
        AmbientVector const p = r(rng) * s.sample_point(rng);
        AmbientVector fd(3);
        double const h = 1e-6;
        for (int k = 0; k < 3; ++k)
        {
            AmbientVector e = AmbientVector::Zero(3);
            e[k] = h;
            fd[k] = (penalty_potential(s, p + e) - penalty_potential(s, p - e)) / (2 * h);
        }
        AmbientVector const g = penalty_gradient(s, p);
        EXPECT_LE((g - fd).norm(), 1e-7);
        // Normal: parallel to p for the sphere
        EXPECT_LE((g - g.dot(p) / p.squaredNorm() * p).norm(), 1e-12);
    }
}

TEST(Penalty, HessianFdOnInnerTube)
{
    // G = dist^2 inside delta_0: Hess G(p)(u,u) = 2|u_normal|^2 + 2 d <...>,
    // on N it is 2|u_normal|^2.
    Sphere s(3);
    EXPECT_NEAR(penalty_hessian_fd(s, vec({1, 0, 0}), vec({1, 0, 0})), 2.0, 1e-6);
    EXPECT_NEAR(penalty_hessian_fd(s, vec({1, 0, 0}), vec({0, 1, 0})), 0.0, 1e-6);
}

TEST(TangentBasis, Orthonormal)
{
    ProductTorus t;
    Sphere s(3);
    std::mt19937_64 rng(2);
    for (EmbeddedManifold const* m : {static_cast<EmbeddedManifold const*>(&s),
                                       static_cast<EmbeddedManifold const*>(&t)})
    {
        AmbientVector const q = m->sample_point(rng);
        AmbientMatrix const b = tangent_basis(*m, q);
        ASSERT_EQ(b.cols(), m->intrinsic_dim());
        EXPECT_LE((b.transpose() * b - AmbientMatrix::Identity(b.cols(), b.cols())).norm(),
                  1e-13);
        EXPECT_LE((m->tangent_projector(q) * b - b).norm(), 1e-13);
    }
}

TEST(MakeManifold, IdsAndErrors)
{
    EXPECT_EQ(make_manifold("sphere1")->ambient_dim(), 2);
    EXPECT_EQ(make_manifold("sphere2")->ambient_dim(), 3);
    EXPECT_EQ(make_manifold("sphere3")->ambient_dim(), 4);
    EXPECT_EQ(make_manifold("torus2")->intrinsic_dim(), 2);
    EXPECT_THROW(make_manifold("klein"), Error);
    EXPECT_THROW(make_manifold("sphere2", 0.4), Error);
}
