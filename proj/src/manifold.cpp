// SPDX-License-Identifier: Apache-2.0
//---------------------------------------------------------------------------//
//! \file manifold.cpp
//---------------------------------------------------------------------------//
#include "mbsde/manifold.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace mbsde
{
namespace
{
//! Hessian quadratic form of q -> q/|q| along u, valid for any q != 0.
AmbientVector radial_hessian(AmbientVector const& q, AmbientVector const& u)
{
    double const r2 = q.squaredNorm();
    double const r = std::sqrt(r2);
    double const b = q.dot(u) / r2;
    double const c = u.squaredNorm() / r2;
    return (q / r) * (3 * b * b - c) - (2 * b / r) * u;
}

AmbientMatrix radial_projector(AmbientVector const& q)
{
    AmbientVector const n = q.normalized();
    return AmbientMatrix::Identity(q.size(), q.size()) - n * n.transpose();
}

AmbientVector gaussian_vector(int dim, std::mt19937_64& rng)
{
    std::normal_distribution<double> normal;
    AmbientVector v(dim);
    for (int i = 0; i < dim; ++i)
    {
        v[i] = normal(rng);
    }
    return v;
}

}  // namespace

//---------------------------------------------------------------------------//
double smoothstep5(double t)
{
    t = std::clamp(t, 0.0, 1.0);
    return t * t * t * (10 + t * (-15 + 6 * t));
}

double smoothstep5_prime(double t)
{
    if (t <= 0 || t >= 1)
    {
        return 0;
    }
    double const s = t * (1 - t);
    return 30 * s * s;
}

double CutoffProfile::phi(double s) const
{
    return 1 - smoothstep5((s - inner_radius) / inner_radius);
}

double CutoffProfile::phi_prime(double s) const
{
    return -smoothstep5_prime((s - inner_radius) / inner_radius)
           / inner_radius;
}

// On [a, b] = [d0^2, 4 d0^2], chi = a + w q(t), w = b - a, t = (s - a) / w,
// q(t) = t + 4t^3 - 7t^4 + 3t^5.
double CutoffProfile::chi(double s) const
{
    double const a = inner_radius * inner_radius;
    double const b = 4 * a;
    if (s <= a)
    {
        return s;
    }
    if (s >= b)
    {
        return b;
    }
    double const w = b - a;
    double const t = (s - a) / w;
    double const q = t + t * t * t * (4 + t * (-7 + 3 * t));
    return a + w * q;
}

double CutoffProfile::chi_prime(double s) const
{
    double const a = inner_radius * inner_radius;
    double const b = 4 * a;
    if (s <= a)
    {
        return 1;
    }
    if (s >= b)
    {
        return 0;
    }
    double const t = (s - a) / (b - a);
    double const omt = 1 - t;
    return omt * omt * (15 * t * t + 2 * t + 1);
}

double CutoffProfile::chi_second(double s) const
{
    double const a = inner_radius * inner_radius;
    double const b = 4 * a;
    if (s <= a || s >= b)
    {
        return 0;
    }
    double const t = (s - a) / (b - a);
    // d/dt of 1 + 12t^2 - 28t^3 + 15t^4
    return (24 * t - 84 * t * t + 60 * t * t * t) / (b - a);
}

//---------------------------------------------------------------------------//
EmbeddedManifold::EmbeddedManifold(std::string id,
                                   int ambient_dim,
                                   int intrinsic_dim,
                                   double tube_radius)
    : id_(std::move(id))
    , ambient_dim_(ambient_dim)
    , intrinsic_dim_(intrinsic_dim)
    , cutoff_{tube_radius}
{
    if (ambient_dim < 2 || ambient_dim > kMaxAmbientDim)
    {
        throw Error(ErrorCode::config_invalid,
                    "ambient dimension must lie in [2, "
                        + std::to_string(kMaxAmbientDim) + "]");
    }
    if (intrinsic_dim < 1 || intrinsic_dim >= ambient_dim)
    {
        throw Error(ErrorCode::config_invalid,
                    "intrinsic dimension must lie in [1, L)");
    }
    if (!(tube_radius > 0))
    {
        throw Error(ErrorCode::config_invalid, "tube radius must be positive");
    }
}

AmbientMatrix EmbeddedManifold::tangent_projector(AmbientVector const& q) const
{
    int const dim = ambient_dim();
    double const h = kFirstDerivativeStep;
    AmbientMatrix jac(dim, dim);
    for (int j = 0; j < dim; ++j)
    {
        AmbientVector step = AmbientVector::Zero(dim);
        step[j] = h;
        jac.col(j) = (nearest_point(q + step) - nearest_point(q - step))
                     / (2 * h);
    }
    return 0.5 * (jac + jac.transpose());
}

AmbientVector EmbeddedManifold::projection_hessian(AmbientVector const& q,
                                                   AmbientVector const& u) const
{
    return projection_hessian_fd(*this, q, u);
}

//---------------------------------------------------------------------------//
Sphere::Sphere(int ambient_dim, double tube_radius)
    : EmbeddedManifold("sphere" + std::to_string(ambient_dim - 1),
                       ambient_dim,
                       ambient_dim - 1,
                       tube_radius)
{
    if (3 * tube_radius >= 1)
    {
        throw Error(ErrorCode::config_invalid,
                    "sphere tube radius must satisfy 3 delta_0 < 1");
    }
}

AmbientVector Sphere::nearest_point(AmbientVector const& p) const
{
    return p / p.norm();
}

double Sphere::distance(AmbientVector const& p) const
{
    return std::abs(p.norm() - 1);
}

AmbientVector Sphere::sample_point(std::mt19937_64& rng) const
{
    return gaussian_vector(ambient_dim(), rng).normalized();
}

AmbientMatrix Sphere::tangent_projector(AmbientVector const& q) const
{
    return radial_projector(q);
}

AmbientVector Sphere::projection_hessian(AmbientVector const& q,
                                         AmbientVector const& u) const
{
    return radial_hessian(q, u);
}

//---------------------------------------------------------------------------//
ProductTorus::ProductTorus(double tube_radius)
    : EmbeddedManifold("torus2", 4, 2, tube_radius)
{
    if (3 * tube_radius >= 1)
    {
        throw Error(ErrorCode::config_invalid,
                    "torus tube radius must satisfy 3 delta_0 < 1");
    }
}

AmbientVector ProductTorus::nearest_point(AmbientVector const& p) const
{
    AmbientVector q(4);
    q.head<2>() = p.head<2>().normalized();
    q.tail<2>() = p.tail<2>().normalized();
    return q;
}

double ProductTorus::distance(AmbientVector const& p) const
{
    double const d1 = p.head<2>().norm() - 1;
    double const d2 = p.tail<2>().norm() - 1;
    return std::sqrt(d1 * d1 + d2 * d2);
}

AmbientVector ProductTorus::sample_point(std::mt19937_64& rng) const
{
    return nearest_point(gaussian_vector(4, rng));
}

AmbientMatrix ProductTorus::tangent_projector(AmbientVector const& q) const
{
    AmbientMatrix proj = AmbientMatrix::Zero(4, 4);
    proj.topLeftCorner(2, 2) = radial_projector(q.head<2>());
    proj.bottomRightCorner(2, 2) = radial_projector(q.tail<2>());
    return proj;
}

AmbientVector ProductTorus::projection_hessian(AmbientVector const& q,
                                               AmbientVector const& u) const
{
    AmbientVector out(4);
    out.head<2>() = radial_hessian(q.head<2>(), u.head<2>());
    out.tail<2>() = radial_hessian(q.tail<2>(), u.tail<2>());
    return out;
}

//---------------------------------------------------------------------------//
CustomManifold::CustomManifold(std::string id,
                               int ambient_dim,
                               int intrinsic_dim,
                               double tube_radius,
                               ProjectFn project,
                               DistFn dist,
                               SampleFn sample)
    : EmbeddedManifold(std::move(id), ambient_dim, intrinsic_dim, tube_radius)
    , project_(std::move(project))
    , dist_(std::move(dist))
    , sample_(std::move(sample))
{
}

AmbientVector CustomManifold::nearest_point(AmbientVector const& p) const
{
    return project_(p);
}

double CustomManifold::distance(AmbientVector const& p) const
{
    return dist_(p);
}

AmbientVector CustomManifold::sample_point(std::mt19937_64& rng) const
{
    return sample_(rng);
}

//---------------------------------------------------------------------------//
std::unique_ptr<EmbeddedManifold>
make_manifold(std::string_view id, std::optional<double> tube_radius)
{
    double const d0 = tube_radius.value_or(0.25);
    if (id == "sphere1")
    {
        return std::make_unique<Sphere>(2, d0);
    }
    if (id == "sphere2")
    {
        return std::make_unique<Sphere>(3, d0);
    }
    if (id == "sphere3")
    {
        return std::make_unique<Sphere>(4, d0);
    }
    if (id == "torus2")
    {
        return std::make_unique<ProductTorus>(d0);
    }
    throw Error(ErrorCode::not_found, "unknown manifold id '"
                                          + std::string(id) + "'");
}

//---------------------------------------------------------------------------//
AmbientVector
project_to_manifold(EmbeddedManifold const& m, AmbientVector const& p)
{
    double const d = m.distance(p);
    if (!(d < 3 * m.tube_radius()))
    {
        throw Error(ErrorCode::outside_tube,
                    "distance " + std::to_string(d)
                        + " is not below 3 delta_0 = "
                        + std::to_string(3 * m.tube_radius()));
    }
    return m.nearest_point(p);
}

double dist_to_manifold(EmbeddedManifold const& m, AmbientVector const& p)
{
    return m.distance(p);
}

namespace
{
void require_on_manifold(EmbeddedManifold const& m, AmbientVector const& p)
{
    double const d = m.distance(p);
    if (!(d <= kOnManifoldTol))
    {
        throw Error(ErrorCode::not_on_manifold,
                    "point is at distance " + std::to_string(d) + " from N");
    }
}

void require_tangent(AmbientMatrix const& proj, AmbientVector const& u)
{
    double const normal = (u - proj * u).norm();
    if (!(normal <= kOnManifoldTol * std::max(1.0, u.norm())))
    {
        throw Error(ErrorCode::not_tangent,
                    "normal component " + std::to_string(normal));
    }
}
}  // namespace

AmbientVector tangent_project(EmbeddedManifold const& m,
                              AmbientVector const& p_on_n,
                              AmbientVector const& v)
{
    require_on_manifold(m, p_on_n);
    return m.tangent_projector(p_on_n) * v;
}

AmbientVector second_fundamental_form(EmbeddedManifold const& m,
                                      AmbientVector const& p_on_n,
                                      AmbientVector const& u,
                                      AmbientVector const& w)
{
    require_on_manifold(m, p_on_n);
    AmbientMatrix const proj = m.tangent_projector(p_on_n);
    require_tangent(proj, u);
    require_tangent(proj, w);
    AmbientVector const plus = m.projection_hessian(p_on_n, u + w);
    AmbientVector const minus = m.projection_hessian(p_on_n, u - w);
    return 0.25 * (plus - minus);
}

AmbientVector projection_hessian_fd(EmbeddedManifold const& m,
                                    AmbientVector const& q,
                                    AmbientVector const& u,
                                    double step)
{
    double const scale = u.norm();
    if (scale == 0)
    {
        return AmbientVector::Zero(q.size());
    }
    AmbientVector const dir = u / scale;
    AmbientVector const fwd = m.nearest_point(q + step * dir);
    AmbientVector const bwd = m.nearest_point(q - step * dir);
    AmbientVector const mid = m.nearest_point(q);
    return ((fwd + bwd) - 2 * mid) * (scale * scale / (step * step));
}

AmbientVector extended_sff(EmbeddedManifold const& m,
                           AmbientVector const& p,
                           AmbientVector const& u,
                           ExtendedSffOptions const& options)
{
    double const d = m.distance(p);
    if (!(d < m.cutoff().outer_radius()))
    {
        return AmbientVector::Zero(p.size());
    }
    AmbientVector const foot = m.nearest_point(p);
    AmbientVector const arg = options.preproject_tangent
                                  ? AmbientVector(m.tangent_projector(foot) * u)
                                  : u;
    AmbientVector const& at = options.hessian_at_foot_point ? foot : p;
    double const weight = m.cutoff().phi(d);
    if (weight == 1)
    {
        return m.projection_hessian(at, arg);
    }
    return weight * m.projection_hessian(at, arg);
}

double penalty_potential(EmbeddedManifold const& m, AmbientVector const& p)
{
    double const d = m.distance(p);
    return m.cutoff().chi(d * d);
}

AmbientVector penalty_gradient(EmbeddedManifold const& m, AmbientVector const& p)
{
    double const d = m.distance(p);
    if (!(d < m.cutoff().outer_radius()))
    {
        return AmbientVector::Zero(p.size());
    }
    return 2 * m.cutoff().chi_prime(d * d) * (p - m.nearest_point(p));
}

double penalty_hessian_fd(EmbeddedManifold const& m,
                          AmbientVector const& p,
                          AmbientVector const& u,
                          double step)
{
    double const scale = u.norm();
    if (scale == 0)
    {
        return 0;
    }
    AmbientVector const dir = u / scale;
    double const fwd = penalty_potential(m, p + step * dir);
    double const bwd = penalty_potential(m, p - step * dir);
    double const mid = penalty_potential(m, p);
    return ((fwd + bwd) - 2 * mid) * (scale * scale / (step * step));
}

AmbientMatrix tangent_basis(EmbeddedManifold const& m, AmbientVector const& q)
{
    AmbientMatrix const proj = m.tangent_projector(q);
    Eigen::SelfAdjointEigenSolver<AmbientMatrix> eig(proj);
    // Eigenvalues ascend: the last n belong to the tangent space.
    int const n = m.intrinsic_dim();
    return eig.eigenvectors().rightCols(n);
}

//---------------------------------------------------------------------------//
}  // namespace mbsde
