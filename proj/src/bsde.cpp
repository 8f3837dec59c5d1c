// SPDX-License-Identifier: Apache-2.0
//---------------------------------------------------------------------------//
//! \file bsde.cpp
//---------------------------------------------------------------------------//
#include "mbsde/bsde.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <thread>

namespace mbsde
{
namespace
{
std::uint64_t mix(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

//! Backward sums S_j = sum_{k>=j} [-Z_k dB_k - 1/2 Abar dt + fbar dt],
//! j = 0..K, with S_K = 0.
struct BackwardSums
{
    std::vector<AmbientVector> total;
    AmbientVector stochastic;
    AmbientVector sff;
    AmbientVector generator;
};

BackwardSums backward_sums(BSDESample const& s,
                           Generator const& g,
                           EmbeddedManifold const& m)
{
    std::size_t const K = s.steps();
    int const dim = static_cast<int>(s.y.front().size());
    BackwardSums out;
    out.total.assign(K + 1, AmbientVector::Zero(dim));
    out.stochastic = AmbientVector::Zero(dim);
    out.sff = AmbientVector::Zero(dim);
    out.generator = AmbientVector::Zero(dim);
    for (std::size_t j = K; j-- > 0;)
    {
        AmbientVector dz = AmbientVector::Zero(dim);
        AmbientVector da = AmbientVector::Zero(dim);
        for (int i = 0; i < s.dim; ++i)
        {
            AmbientVector const zi = s.z[j].col(i);
            dz += zi * s.increment(j, i);
            da += extended_sff(m, s.y[j], zi);
        }
        da *= 0.5 * s.dt;
        AmbientVector const df
            = s.dt * eval_extended_generator(g, m, s.y[j], s.z[j]);
        out.stochastic += dz;
        out.sff += da;
        out.generator += df;
        out.total[j] = out.total[j + 1] - dz - da + df;
    }
    return out;
}

std::size_t checkpoint_index(double t, double dt, std::size_t steps)
{
    double const r = std::round(t / dt);
    if (!(t >= 0) || r > static_cast<double>(steps)
        || std::abs(r * dt - t) > 1e-9 * std::max(1.0, t))
    {
        throw Error(ErrorCode::config_invalid,
                    "checkpoint is not on the path time grid");
    }
    return static_cast<std::size_t>(r);
}
}  // namespace

//---------------------------------------------------------------------------//
BSDESample assemble_bsde_sample(SpaceTimeField const& field,
                                BrownianPath const& path,
                                std::span<double const> x,
                                InitialMap const& h)
{
    double const T = field.final_time();
    if (path.dim != field.dim()
        || std::abs(path.final_time() - T) > 1e-12 * std::max(1.0, T)
        || static_cast<int>(x.size()) < field.dim())
    {
        throw Error(ErrorCode::grid_mismatch,
                    "Brownian path and trajectory do not share [0, T] and m");
    }
    int const m = field.dim();
    std::size_t const K = path.steps;
    BSDESample s;
    s.dim = m;
    s.dt = path.dt;
    s.increments = path.increments;
    std::copy(x.begin(), x.begin() + m, s.start.begin());
    s.y.reserve(K + 1);
    s.z.reserve(K + 1);
    std::array<double, kMaxTorusDim> p{};
    for (std::size_t j = 0; j <= K; ++j)
    {
        for (int i = 0; i < m; ++i)
        {
            p[i] = path.position(j, i) + x[i];
        }
        std::span<double const> ps(p.data(), m);
        double const t = static_cast<double>(K - j) * path.dt;
        s.y.push_back(field.value(t, ps));
        s.z.push_back(field.gradient(t, ps));
        if (j == K)
        {
            s.terminal = h(ps);
        }
    }
    return s;
}

ResidualLedger bsde_residual(BSDESample const& sample,
                             Generator const& g,
                             EmbeddedManifold const& m)
{
    std::size_t const K = sample.steps();
    BackwardSums const sums = backward_sums(sample, g, m);
    ResidualLedger out;
    out.residual.resize(K + 1);
    AmbientVector const& anchor = sample.y[K];
    for (std::size_t j = 0; j <= K; ++j)
    {
        out.residual[j] = (sample.y[j] - (anchor + sums.total[j])).norm();
        out.max_abs = std::max(out.max_abs, out.residual[j]);
    }
    out.terminal_residual = out.residual[K];
    out.terminal_mismatch = (sample.y[K] - sample.terminal).norm();
    out.stochastic_integral = sums.stochastic.norm();
    out.sff_drift = sums.sff.norm();
    out.generator_drift = sums.generator.norm();
    return out;
}

double weak_residual(std::span<BSDESample const> samples,
                     TestFunction const& psi,
                     double t,
                     Generator const& g,
                     EmbeddedManifold const& m)
{
    if (samples.empty())
    {
        return 0;
    }
    double acc = 0;
    for (auto const& s : samples)
    {
        std::size_t const j = checkpoint_index(t, s.dt, s.steps());
        AmbientVector const test
            = psi(std::span<double const>(s.start.data(), s.dim));
        if (test.isZero(0))
        {
            continue;
        }
        BackwardSums const sums = backward_sums(s, g, m);
        AmbientVector const diff = s.y[j] - (s.terminal + sums.total[j]);
        acc += diff.dot(test);
    }
    return acc / static_cast<double>(samples.size());
}

//---------------------------------------------------------------------------//
Observable coordinate_observable(int axis, int ambient_dim)
{
    Observable obs;
    obs.name = "coord" + std::to_string(axis);
    obs.value = [axis](AmbientVector const& p) { return p[axis]; };
    obs.gradient = [axis, ambient_dim](AmbientVector const&) {
        AmbientVector e = AmbientVector::Zero(ambient_dim);
        e[axis] = 1;
        return e;
    };
    obs.ambient_hessian
        = [](AmbientVector const&, AmbientVector const&) { return 0.0; };
    return obs;
}

Observable constant_observable(int ambient_dim)
{
    Observable obs;
    obs.name = "one";
    obs.value = [](AmbientVector const&) { return 1.0; };
    obs.gradient = [ambient_dim](AmbientVector const&) {
        return AmbientVector::Zero(ambient_dim).eval();
    };
    obs.ambient_hessian
        = [](AmbientVector const&, AmbientVector const&) { return 0.0; };
    return obs;
}

std::vector<double> martingale_path(BSDESample const& sample,
                                    Observable const& obs,
                                    Generator const& g,
                                    EmbeddedManifold const& m,
                                    MartingaleOptions const& options)
{
    std::size_t const K = sample.steps();
    std::vector<double> out(K + 1, 0.0);
    double const g0 = obs.value(sample.y[0]);
    double drift = 0;
    for (std::size_t j = 0; j <= K; ++j)
    {
        out[j] = obs.value(sample.y[j]) - g0 + drift;
        if (j == K)
        {
            break;
        }
        AmbientVector const& y = sample.y[j];
        AmbientVector const grad = obs.gradient(y);
        double hess = 0;
        for (int i = 0; i < sample.dim; ++i)
        {
            AmbientVector const zi = sample.z[j].col(i);
            hess += obs.ambient_hessian(y, zi)
                    + options.sff_sign * grad.dot(extended_sff(m, y, zi));
        }
        double const f = grad.dot(eval_extended_generator(g, m, y, sample.z[j]));
        drift += (-0.5 * hess + f) * sample.dt;
    }
    return out;
}

MartingaleStats martingale_test(std::vector<std::vector<double>> const& values,
                                std::vector<double> const& checkpoints)
{
    if (values.size() < kMinMartingalePaths)
    {
        throw Error(ErrorCode::insufficient_paths,
                    "the martingale test needs at least 100 paths, got "
                        + std::to_string(values.size()));
    }
    MartingaleStats out;
    out.times = checkpoints;
    auto const n = static_cast<double>(values.size());
    for (std::size_t c = 0; c < checkpoints.size(); ++c)
    {
        double sum = 0;
        for (auto const& row : values)
        {
            sum += row.at(c);
        }
        double const mean = sum / n;
        double sq = 0;
        for (auto const& row : values)
        {
            sq += (row[c] - mean) * (row[c] - mean);
        }
        double const se = std::sqrt(sq / (n - 1) / n);
        double z = 0;
        if (se > 0)
        {
            z = std::abs(mean) / se;
        }
        else if (mean != 0)
        {
            z = std::numeric_limits<double>::infinity();
        }
        out.mean.push_back(mean);
        out.std_error.push_back(se);
        out.z.push_back(z);
        if (!(z <= kMartingaleZThreshold))
        {
            out.passed = false;
        }
    }
    return out;
}

//---------------------------------------------------------------------------//
double tangency_defect(BSDESample const& sample, EmbeddedManifold const& m)
{
    double normal = 0;
    double total = 0;
    for (std::size_t j = 0; j < sample.y.size(); ++j)
    {
        GradientMatrix const& z = sample.z[j];
        double const zz = z.squaredNorm();
        if (zz == 0)
        {
            continue;
        }
        AmbientVector const foot = project_to_manifold(m, sample.y[j]);
        AmbientMatrix const proj = m.tangent_projector(foot);
        normal += (z - proj * z).squaredNorm();
        total += zz;
    }
    return total > 0 ? normal / total : 0.0;
}

double on_manifold_defect(BSDESample const& sample, EmbeddedManifold const& m)
{
    double out = 0;
    for (auto const& y : sample.y)
    {
        out = std::max(out, m.distance(y));
    }
    return out;
}

//---------------------------------------------------------------------------//
std::uint64_t path_seed(std::uint64_t seed, std::uint64_t index)
{
    return mix(mix(seed) + index);
}

std::vector<std::array<double, kMaxTorusDim>> uniform_starts(int dim, int n)
{
    std::vector<std::array<double, kMaxTorusDim>> out;
    int const outer = dim == 2 ? n : 1;
    for (int j = 0; j < outer; ++j)
    {
        for (int i = 0; i < n; ++i)
        {
            out.push_back({static_cast<double>(i) / n,
                           dim == 2 ? static_cast<double>(j) / n : 0.0});
        }
    }
    return out;
}

namespace
{
struct PathOutput
{
    PathSummary summary;
    std::vector<std::vector<double>> martingale;
    std::vector<std::vector<double>> negative;
};

PathOutput run_path(std::size_t index,
                    SpaceTimeField const& field,
                    InitialMap const& h,
                    Generator const& g,
                    EmbeddedManifold const& m,
                    EnsembleOptions const& opts)
{
    PathOutput out;
    auto& sum = out.summary;
    sum.seed = path_seed(opts.seed, index);
    if (!opts.starts.empty())
    {
        sum.start = opts.starts[index % opts.starts.size()];
    }
    std::span<double const> x(sum.start.data(), field.dim());
    double const T = field.final_time();

    BrownianPath path;
    if (opts.refine)
    {
        BrownianPath const fine
            = sample_brownian(sum.seed, opts.dt / 2, T, field.dim());
        BSDESample const fs = assemble_bsde_sample(field, fine, x, h);
        sum.fine_max_residual = bsde_residual(fs, g, m).max_abs;
        path = coarsen(fine, 2);
    }
    else
    {
        path = sample_brownian(sum.seed, opts.dt, T, field.dim());
    }
    BSDESample const s = assemble_bsde_sample(field, path, x, h);
    ResidualLedger const ledger = bsde_residual(s, g, m);
    sum.max_residual = ledger.max_abs;
    sum.terminal_residual = ledger.terminal_residual;
    sum.terminal_mismatch = ledger.terminal_mismatch;
    sum.tangency = tangency_defect(s, m);
    sum.on_manifold = on_manifold_defect(s, m);

    std::vector<std::size_t> idx;
    for (double t : opts.checkpoints)
    {
        idx.push_back(checkpoint_index(t, s.dt, s.steps()));
    }
    auto at_checkpoints = [&idx](std::vector<double> const& mg) {
        std::vector<double> row;
        row.reserve(idx.size());
        for (auto j : idx)
        {
            row.push_back(mg[j]);
        }
        return row;
    };
    for (auto const& obs : opts.observables)
    {
        out.martingale.push_back(at_checkpoints(martingale_path(s, obs, g, m)));
        if (opts.negative_control)
        {
            out.negative.push_back(
                at_checkpoints(martingale_path(s, obs, g, m, {-1.0})));
        }
    }
    return out;
}
}  // namespace

EnsembleResult run_ensemble(SpaceTimeField const& field,
                            InitialMap const& h,
                            Generator const& g,
                            EmbeddedManifold const& m,
                            EnsembleOptions const& options)
{
    std::size_t const n = options.paths;
    std::vector<PathOutput> outputs(n);
    auto const workers = static_cast<std::size_t>(
        std::clamp<int>(options.workers, 1, static_cast<int>(std::max<std::size_t>(n, 1))));
    std::vector<std::exception_ptr> errors(workers);
    auto work = [&](std::size_t w) {
        try
        {
            for (std::size_t p = w; p < n; p += workers)
            {
                outputs[p] = run_path(p, field, h, g, m, options);
            }
        }
        catch (...)
        {
            errors[w] = std::current_exception();
        }
    };
    if (workers == 1)
    {
        work(0);
    }
    else
    {
        std::vector<std::thread> threads;
        for (std::size_t w = 0; w < workers; ++w)
        {
            threads.emplace_back(work, w);
        }
        for (auto& t : threads)
        {
            t.join();
        }
    }
    for (auto const& e : errors)
    {
        if (e)
        {
            std::rethrow_exception(e);
        }
    }

    EnsembleResult out;
    out.paths.reserve(n);
    std::size_t const n_obs = options.observables.size();
    std::vector<std::vector<std::vector<double>>> mg(n_obs), neg(n_obs);
    for (auto& o : outputs)
    {
        auto const& s = o.summary;
        out.mean_max_residual += s.max_residual;
        out.mean_fine_max_residual += s.fine_max_residual;
        out.max_terminal_residual
            = std::max(out.max_terminal_residual, s.terminal_residual);
        out.max_tangency = std::max(out.max_tangency, s.tangency);
        out.max_on_manifold = std::max(out.max_on_manifold, s.on_manifold);
        for (std::size_t k = 0; k < n_obs; ++k)
        {
            mg[k].push_back(std::move(o.martingale[k]));
            if (options.negative_control)
            {
                neg[k].push_back(std::move(o.negative[k]));
            }
        }
        out.paths.push_back(s);
    }
    if (n > 0)
    {
        out.mean_max_residual /= static_cast<double>(n);
        out.mean_fine_max_residual /= static_cast<double>(n);

        std::vector<double> sorted;
        for (auto const& s : out.paths)
        {
            sorted.push_back(s.max_residual);
        }
        std::nth_element(sorted.begin(), sorted.begin() + n / 2, sorted.end());
        double const median = sorted[n / 2];
        for (std::size_t p = 0; p < n; ++p)
        {
            if (out.paths[p].max_residual > 5 * median && median > 0)
            {
                out.outliers.push_back(p);
            }
        }
    }
    if (n_obs > 0 && !options.checkpoints.empty())
    {
        for (std::size_t k = 0; k < n_obs; ++k)
        {
            out.martingale.push_back(martingale_test(mg[k], options.checkpoints));
            if (options.negative_control)
            {
                out.negative_control.push_back(
                    martingale_test(neg[k], options.checkpoints));
            }
        }
    }
    return out;
}

}  // namespace mbsde
