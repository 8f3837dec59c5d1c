// SPDX-License-Identifier: Apache-2.0
//---------------------------------------------------------------------------//
//! \file key_inequality.cpp
//---------------------------------------------------------------------------//
#include "mbsde/key_inequality.hpp"

#include <algorithm>
#include <cmath>

namespace mbsde
{
KeyInequalityReport verify_key_inequality(EmbeddedManifold const& m,
                                          Generator const& g,
                                          std::span<AmbientVector const> points,
                                          std::span<AmbientVector const> vectors,
                                          double orthogonality_tol)
{
    KeyInequalityReport report;
    report.samples.reserve(points.size());
    bool have_ratio = false;
    std::size_t const count = std::min(points.size(), vectors.size());
    for (std::size_t i = 0; i < count; ++i)
    {
        AmbientVector const& p = points[i];
        AmbientVector const& u = vectors[i];
        GradientMatrix const u_col = u;

        KeyInequalitySample s;
        s.distance = m.distance(p);
        s.potential = penalty_potential(m, p);
        AmbientVector const grad = penalty_gradient(m, p);
        AmbientVector const fbar = eval_extended_generator(g, m, p, u_col);
        double const hess = penalty_hessian_fd(m, p, u);

        AmbientVector const sff_foot = extended_sff(m, p, u);
        ExtendedSffOptions at_point;
        at_point.hessian_at_foot_point = false;
        AmbientVector const sff_point
            = s.distance < m.cutoff().outer_radius()
                  ? extended_sff(m, p, u, at_point)
                  : AmbientVector::Zero(p.size());

        s.lhs_foot = hess + grad.dot(sff_foot - 2 * fbar);
        s.lhs_point = hess + grad.dot(sff_point - 2 * fbar);
        s.gradient_dot_generator = grad.dot(fbar);

        if (s.distance < m.cutoff().outer_radius())
        {
            double const defect = std::abs(s.gradient_dot_generator);
            report.max_orthogonality_defect
                = std::max(report.max_orthogonality_defect, defect);
        }
        if (s.potential > 0)
        {
            double const denom = s.potential * (1 + u.squaredNorm());
            double const rf = s.lhs_foot / denom;
            double const rp = s.lhs_point / denom;
            if (!have_ratio)
            {
                report.min_ratio_foot = rf;
                report.min_ratio_point = rp;
                have_ratio = true;
            }
            report.min_ratio_foot = std::min(report.min_ratio_foot, rf);
            report.min_ratio_point = std::min(report.min_ratio_point, rp);
        }
        report.samples.push_back(s);
    }
    report.orthogonality_holds
        = report.max_orthogonality_defect <= orthogonality_tol;
    return report;
}

}  // namespace mbsde
