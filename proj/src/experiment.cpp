// SPDX-License-Identifier: Apache-2.0
//---------------------------------------------------------------------------//
//! \file experiment.cpp
//---------------------------------------------------------------------------//
#include "mbsde/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "mbsde/bsde.hpp"
#include "mbsde/diagnostics.hpp"
#include "mbsde/trajectory_io.hpp"

namespace mbsde
{
namespace fs = std::filesystem;

namespace
{
double const kNaN = std::numeric_limits<double>::quiet_NaN();

void write_atomic(fs::path const& path, std::string const& content)
{
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary);
        if (!os)
        {
            throw Error(ErrorCode::io_failure, "cannot write " + tmp.string());
        }
        os << content;
        if (!os)
        {
            throw Error(ErrorCode::io_failure, "cannot write " + tmp.string());
        }
    }
    fs::rename(tmp, path);
}

std::string csv_number(double v)
{
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

AmbientVector default_point(EmbeddedManifold const& m)
{
    AmbientVector p = AmbientVector::Zero(m.ambient_dim());
    if (m.id() == "torus2")
    {
        p[0] = 1;
        p[2] = 1;
    }
    else
    {
        p[m.ambient_dim() - 1] = 1;
    }
    return p;
}

AmbientVector to_vector(std::vector<double> const& v, int dim)
{
    if (static_cast<int>(v.size()) != dim)
    {
        throw Error(ErrorCode::config_invalid,
                    "vector length does not match the ambient dimension");
    }
    AmbientVector out(dim);
    for (int i = 0; i < dim; ++i)
    {
        out[i] = v[i];
    }
    return out;
}

nlohmann::json stats_json(MartingaleStats const& s)
{
    return {{"times", s.times},
            {"mean", s.mean},
            {"std_error", s.std_error},
            {"z", s.z},
            {"passed", s.passed}};
}

double max_z(MartingaleStats const& s)
{
    double z = 0;
    for (double v : s.z)
    {
        z = std::max(z, v);
    }
    return z;
}

double max_monitor_dist(Trajectory const& traj)
{
    double out = 0;
    for (auto const& rec : traj.monitors)
    {
        out = std::max(out, rec.max_dist);
    }
    return out;
}

//! Largest per-step relative energy increase.
double energy_increase(Trajectory const& traj)
{
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k < traj.monitors.size(); ++k)
    {
        double const e0 = traj.monitors[k - 1].total_energy();
        double const e1 = traj.monitors[k].total_energy();
        double const rel = e0 > 0 ? (e1 - e0) / e0 : (e1 > 0 ? 1.0 : 0.0);
        worst = std::max(worst, rel);
    }
    return traj.monitors.size() > 1 ? worst : 0.0;
}

struct Run
{
    std::optional<double> epsilon;
    Trajectory traj;
};

std::vector<Run> solve_all(ExperimentConfig const& cfg,
                           Problem const& pb,
                           TorusGrid const& grid,
                           double dt,
                           int monitor_stride)
{
    SolveOptions opts;
    opts.record_stride = cfg.record_stride;
    opts.monitor_stride = monitor_stride;
    opts.scheme = cfg.scheme == "explicit" ? PenaltyScheme::explicit_euler
                                           : PenaltyScheme::imex_relaxation;
    std::vector<Run> runs;
    if (cfg.solver == "intrinsic")
    {
        runs.push_back({std::nullopt,
                        solve_intrinsic_m1(pb.initial, cfg.final_time, grid,
                                           dt, pb.generator, *pb.manifold,
                                           opts)});
        return runs;
    }
    for (double eps : cfg.epsilons)
    {
        runs.push_back({eps,
                        solve_penalized(pb.initial, eps, cfg.final_time, grid,
                                        dt, pb.generator, *pb.manifold,
                                        opts)});
    }
    return runs;
}

//! Intrinsic run, or the penalized run with the smallest epsilon.
std::size_t main_run(std::vector<Run> const& runs)
{
    std::size_t best = 0;
    for (std::size_t i = 1; i < runs.size(); ++i)
    {
        if (*runs[i].epsilon < *runs[best].epsilon)
        {
            best = i;
        }
    }
    return best;
}

std::string run_label(Run const& r)
{
    if (!r.epsilon)
    {
        return "intrinsic";
    }
    std::ostringstream os;
    os << "eps=" << *r.epsilon;
    return os.str();
}

void check_step(ExperimentConfig const& cfg, double dt)
{
    TorusGrid const grid(cfg.dim, cfg.nodes);
    double max_dt = 0;
    if (cfg.solver == "intrinsic")
    {
        max_dt = intrinsic_max_dt(grid);
    }
    else
    {
        auto const scheme = cfg.scheme == "explicit"
                                ? PenaltyScheme::explicit_euler
                                : PenaltyScheme::imex_relaxation;
        double const eps
            = *std::min_element(cfg.epsilons.begin(), cfg.epsilons.end());
        max_dt = cfl_max_dt(grid, eps, scheme);
    }
    if (dt > max_dt * (1 + 1e-12))
    {
        std::ostringstream os;
        os << "dt = " << dt << " exceeds the stable step " << max_dt;
        throw Error(ErrorCode::cfl_violated, os.str());
    }
}

nlohmann::json canonical_config(ExperimentConfig const& cfg)
{
    nlohmann::json j = to_json(cfg);
    j["output"].erase("dir");
    j["output"].erase("workers");
    return j;
}

void write_failed(fs::path const& dir,
                  ExperimentConfig const& cfg,
                  Error const& e,
                  std::vector<std::string> const& files)
{
    RunReport rep;
    rep.config_hash = config_hash(cfg);
    rep.status = "failed";
    rep.files = files;
    rep.details["error"] = {{"code", std::string(to_string(e.code()))},
                            {"message", e.what()}};
    rep.details["config"] = canonical_config(cfg);
    write_atomic(dir / "report.json", rep.to_json().dump(2) + "\n");
}
}  // namespace

//---------------------------------------------------------------------------//
Problem make_problem(ExperimentConfig const& cfg)
{
    auto manifold = make_manifold(cfg.manifold, cfg.tube_radius);
    EmbeddedManifold const& m = *manifold;
    int const dim = m.ambient_dim();

    Generator gen = Generator::zero();
    if (cfg.generator == "rotation")
    {
        gen = Generator::rotation(cfg.generator_param, dim);
    }
    else if (cfg.generator == "shear")
    {
        gen = Generator::shear(cfg.generator_param);
    }
    else if (cfg.generator != "zero")
    {
        throw Error(ErrorCode::not_found, "generator " + cfg.generator);
    }

    auto make_map = [&]() {
        if (cfg.initial_map == "constant")
        {
            return InitialMap::constant(cfg.constant_point.empty()
                                            ? default_point(m)
                                            : to_vector(cfg.constant_point,
                                                        dim));
        }
        if (cfg.initial_map == "great_circle")
        {
            return InitialMap::great_circle(cfg.wave_number, m);
        }
        if (cfg.initial_map == "sphere_collapse")
        {
            return InitialMap::sphere_collapse();
        }
        if (cfg.initial_map == "fourier")
        {
            std::vector<FourierTerm> terms;
            for (std::size_t i = 0; i < cfg.fourier_waves.size(); ++i)
            {
                terms.push_back({cfg.fourier_waves[i],
                                 to_vector(cfg.fourier_cos[i], dim),
                                 to_vector(cfg.fourier_sin[i], dim)});
            }
            AmbientVector const offset
                = cfg.fourier_offset.empty()
                      ? default_point(m)
                      : to_vector(cfg.fourier_offset, dim);
            return InitialMap::fourier(offset, std::move(terms), m);
        }
        throw Error(ErrorCode::not_found, "initial map " + cfg.initial_map);
    };
    InitialMap map = make_map();
    return Problem{std::move(manifold), std::move(gen), std::move(map)};
}

double resolve_dt(ExperimentConfig const& cfg)
{
    if (cfg.dt)
    {
        return *cfg.dt;
    }
    TorusGrid const grid(cfg.dim, cfg.nodes);
    double max_dt = intrinsic_max_dt(grid);
    if (cfg.solver != "intrinsic")
    {
        auto const scheme = cfg.scheme == "explicit"
                                ? PenaltyScheme::explicit_euler
                                : PenaltyScheme::imex_relaxation;
        double const eps
            = *std::min_element(cfg.epsilons.begin(), cfg.epsilons.end());
        max_dt = cfl_max_dt(grid, eps, scheme);
    }
    return fit_step(cfg.final_time, max_dt);
}

double fit_order(std::vector<double> const& levels,
                 std::vector<double> const& defects)
{
    std::size_t const n = std::min(levels.size(), defects.size());
    if (n < 2)
    {
        return kNaN;
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i)
    {
        if (!(levels[i] > 0) || !(defects[i] > 0))
        {
            return kNaN;
        }
        double const x = std::log(levels[i]);
        double const y = std::log(defects[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    double const dn = static_cast<double>(n);
    double const den = dn * sxx - sx * sx;
    return den != 0 ? (dn * sxy - sx * sy) / den : kNaN;
}

bool RunReport::all_passed() const
{
    return status == "ok"
           && std::all_of(criteria.begin(), criteria.end(),
                          [](Criterion const& c) { return c.passed; });
}

nlohmann::json RunReport::to_json() const
{
    nlohmann::json crit = nlohmann::json::array();
    for (auto const& c : criteria)
    {
        crit.push_back({{"name", c.name},
                        {"passed", c.passed},
                        {"value", c.value},
                        {"rule", c.rule}});
    }
    return {{"config_hash", config_hash},
            {"status", status},
            {"all_passed", all_passed()},
            {"criteria", crit},
            {"details", details},
            {"files", files}};
}

//---------------------------------------------------------------------------//
RunReport run_experiment(ExperimentConfig const& cfg)
{
    validate(cfg);
    Problem const pb = make_problem(cfg);
    EmbeddedManifold const& m = *pb.manifold;
    Generator const& g = pb.generator;
    double const dt = resolve_dt(cfg);
    check_step(cfg, dt);
    TorusGrid const grid(cfg.dim, cfg.nodes);
    // Catch off-manifold data before touching the file system.
    initialize_from_map(pb.initial, grid, m);

    fs::path const dir(cfg.out_dir);
    fs::create_directories(dir);
    std::vector<std::string> files;

    RunReport rep;
    rep.config_hash = config_hash(cfg);
    try
    {
        auto& det = rep.details;
        det["config"] = canonical_config(cfg);
        det["dt"] = dt;

        std::vector<Run> const runs = solve_all(cfg, pb, grid, dt, 1);
        std::size_t const main = main_run(runs);
        Trajectory const& main_traj = runs[main].traj;

        // Per-run audit ensembles
        EnsembleOptions audit;
        audit.seed = cfg.seed;
        audit.paths = cfg.paths;
        audit.dt = cfg.path_dt;
        audit.starts = uniform_starts(cfg.dim, cfg.starts);
        audit.workers = cfg.workers;

        std::ostringstream monitor_csv;
        monitor_csv << "run,epsilon,t,dirichlet_energy,penalty_energy,"
                       "time_derivative_energy,max_dist,max_gradient_sq\n";
        nlohmann::json run_json = nlohmann::json::array();
        std::vector<double> eps_levels, max_dists, tangencies;
        double worst_energy = -std::numeric_limits<double>::infinity();
        double worst_terminal = 0;
        for (auto const& r : runs)
        {
            for (auto const& rec : r.traj.monitors)
            {
                monitor_csv << run_label(r) << ','
                            << (r.epsilon ? csv_number(*r.epsilon) : "")
                            << ',' << csv_number(rec.time) << ','
                            << csv_number(rec.dirichlet_energy) << ','
                            << csv_number(rec.penalty_energy) << ','
                            << csv_number(rec.time_derivative_energy) << ','
                            << csv_number(rec.max_dist) << ','
                            << csv_number(rec.max_gradient_sq) << '\n';
            }
            nlohmann::json rj;
            rj["label"] = run_label(r);
            rj["epsilon"] = r.epsilon ? nlohmann::json(*r.epsilon) : nullptr;
            rj["max_dist"] = max_monitor_dist(r.traj);
            rj["energy_max_relative_increase"] = energy_increase(r.traj);
            rj["energy_constant_fit"] = fit_energy_constant(r.traj.monitors);
            worst_energy = std::max(worst_energy, energy_increase(r.traj));

            if (cfg.paths > 0)
            {
                SpaceTimeField const field(r.traj);
                EnsembleResult const ens
                    = run_ensemble(field, pb.initial, g, m, audit);
                double mean_tan = 0;
                double mean_mismatch = 0;
                for (auto const& p : ens.paths)
                {
                    mean_tan += p.tangency;
                    mean_mismatch += p.terminal_mismatch;
                }
                mean_tan /= static_cast<double>(ens.paths.size());
                mean_mismatch /= static_cast<double>(ens.paths.size());
                rj["ensemble"] = {
                    {"paths", ens.paths.size()},
                    {"mean_max_residual", ens.mean_max_residual},
                    {"max_terminal_residual", ens.max_terminal_residual},
                    {"mean_terminal_mismatch", mean_mismatch},
                    {"max_tangency_defect", ens.max_tangency},
                    {"mean_tangency_defect", mean_tan},
                    {"max_on_manifold_defect", ens.max_on_manifold},
                    {"outliers", ens.outliers},
                };
                worst_terminal
                    = std::max(worst_terminal, ens.max_terminal_residual);
                tangencies.push_back(ens.max_tangency);
            }
            if (r.epsilon)
            {
                eps_levels.push_back(*r.epsilon);
                max_dists.push_back(max_monitor_dist(r.traj));
            }
            run_json.push_back(rj);
        }
        det["runs"] = run_json;

        if (g.kind() == GeneratorKind::zero)
        {
            rep.criteria.push_back({"energy_dissipation",
                                    worst_energy <= 1e-3, worst_energy,
                                    "per-step relative energy increase <= 1e-3"});
        }
        if (cfg.paths > 0)
        {
            rep.criteria.push_back({"terminal_residual_exact",
                                    worst_terminal == 0, worst_terminal,
                                    "r_K == 0"});
        }

        // Tangency
        if (cfg.paths > 0 && cfg.solver == "intrinsic")
        {
            rep.criteria.push_back({"tangency_intrinsic",
                                    tangencies.front() <= 1e-4,
                                    tangencies.front(),
                                    "normalized tangency defect <= 1e-4"});
        }
        else if (cfg.paths > 0 && runs.size() >= 2)
        {
            // Along decreasing epsilon
            std::vector<std::size_t> order(runs.size());
            for (std::size_t i = 0; i < order.size(); ++i)
            {
                order[i] = i;
            }
            std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) {
                return *runs[a].epsilon > *runs[b].epsilon;
            });
            bool ok = true;
            double worst = 0;
            for (std::size_t k = 1; k < order.size(); ++k)
            {
                double const prev = tangencies[order[k - 1]];
                double const cur = tangencies[order[k]];
                ok = ok && cur <= 1.2 * prev + 1e-14;
                if (prev > 0)
                {
                    worst = std::max(worst, cur / prev);
                }
            }
            rep.criteria.push_back({"tangency_ladder", ok, worst,
                                    "defect non-increasing along the eps "
                                    "ladder, 20% slack"});
        }

        // Constraint scaling
        if (eps_levels.size() >= 3)
        {
            double const exponent = fit_order(eps_levels, max_dists);
            nlohmann::json table = nlohmann::json::array();
            for (std::size_t i = 0; i < eps_levels.size(); ++i)
            {
                table.push_back({{"epsilon", eps_levels[i]},
                                 {"max_dist", max_dists[i]},
                                 {"K", max_dists[i] / std::sqrt(eps_levels[i])}});
            }
            det["sqrt_eps_table"] = table;
            det["sqrt_eps_exponent"] = exponent;
            rep.criteria.push_back({"sqrt_eps_exponent",
                                    std::abs(exponent - 0.5) <= 0.15,
                                    exponent,
                                    "fitted exponent of max dist in eps "
                                    "within 0.5 +/- 0.15"});
        }

        // Penalized against intrinsic
        if (cfg.solver == "penalized" && cfg.dim == 1
            && dt <= intrinsic_max_dt(grid) * (1 + 1e-12))
        {
            SolverComparison const cmp
                = compare_solvers(pb.initial, cfg.final_time, grid, dt,
                                  cfg.epsilons, g, m, cfg.record_stride);
            nlohmann::json final_dev = nlohmann::json::array();
            for (auto const& row : cmp.deviations)
            {
                final_dev.push_back(row.back());
            }
            det["solver_comparison"] = {{"epsilons", cmp.epsilons},
                                        {"final_l2_deviation", final_dev},
                                        {"monotone", cmp.monotone}};
            rep.criteria.push_back({"penalized_to_intrinsic", cmp.monotone,
                                    final_dev.empty() ? 0.0
                                                      : final_dev.back().get<double>(),
                                    "L2 deviation non-increasing along the "
                                    "eps ladder, 20% slack"});
        }

        // Martingale tests on the main run, fixed start x = 0
        std::ostringstream ensemble_csv;
        ensemble_csv << "run,observable,control,t,mean,std_error,z\n";
        if (cfg.martingale_paths > 0 && !cfg.checkpoints.empty())
        {
            SpaceTimeField const field(main_traj);
            EnsembleOptions mopt;
            mopt.seed = cfg.seed ^ 0x6d617274ULL;
            mopt.paths = cfg.martingale_paths;
            mopt.dt = cfg.path_dt;
            mopt.checkpoints = cfg.checkpoints;
            mopt.negative_control = cfg.negative_control;
            mopt.workers = cfg.workers;
            for (int a = 0; a < m.ambient_dim(); ++a)
            {
                mopt.observables.push_back(coordinate_observable(a, m.ambient_dim()));
            }
            EnsembleResult const ens
                = run_ensemble(field, pb.initial, g, m, mopt);
            nlohmann::json mj = nlohmann::json::array();
            double worst = 0;
            double control = 0;
            bool ok = true;
            for (std::size_t k = 0; k < ens.martingale.size(); ++k)
            {
                auto const& obs = mopt.observables[k];
                auto const& st = ens.martingale[k];
                for (std::size_t c = 0; c < st.times.size(); ++c)
                {
                    ensemble_csv << run_label(runs[main]) << ',' << obs.name
                                 << ",0," << csv_number(st.times[c]) << ','
                                 << csv_number(st.mean[c]) << ','
                                 << csv_number(st.std_error[c]) << ','
                                 << csv_number(st.z[c]) << '\n';
                }
                nlohmann::json oj = {{"observable", obs.name},
                                     {"stats", stats_json(st)}};
                worst = std::max(worst, max_z(st));
                ok = ok && st.passed;
                if (cfg.negative_control)
                {
                    auto const& nst = ens.negative_control[k];
                    for (std::size_t c = 0; c < nst.times.size(); ++c)
                    {
                        ensemble_csv << run_label(runs[main]) << ','
                                     << obs.name << ",1,"
                                     << csv_number(nst.times[c]) << ','
                                     << csv_number(nst.mean[c]) << ','
                                     << csv_number(nst.std_error[c]) << ','
                                     << csv_number(nst.z[c]) << '\n';
                    }
                    oj["negative_control"] = stats_json(nst);
                    control = std::max(control, max_z(nst));
                }
                mj.push_back(oj);
            }
            det["martingale"] = mj;
            rep.criteria.push_back({"martingale_z", ok, worst,
                                    "z <= 4 at every checkpoint"});
            if (cfg.negative_control)
            {
                rep.criteria.push_back({"negative_control",
                                        control > kMartingaleZThreshold,
                                        control,
                                        "sign-flipped drift gives z > 4"});
            }
        }

        // Monotonicity quantities and scans on the main run
        MonotonicityQuadrature const quad(main_traj, runs[main].epsilon, m);
        double oracle_gap = 0;
        std::size_t oracle_windows = 0;
        for (auto const& w : scan_lattice(cfg.final_time, cfg.dim,
                                          cfg.scan_radius, cfg.scan_time_points,
                                          cfg.scan_space_points))
        {
            if (oracle_windows == 3)
            {
                break;
            }
            if (!w.valid(cfg.final_time))
            {
                continue;
            }
            double const a = quad.psi(w);
            double const b
                = psi_quantity_naive(main_traj, runs[main].epsilon, m, w);
            oracle_gap = std::max(oracle_gap, std::abs(a - b));
            ++oracle_windows;
        }
        if (oracle_windows > 0)
        {
            rep.criteria.push_back({"psi_oracle", oracle_gap <= 1e-12,
                                    oracle_gap,
                                    "production vs naive Psi <= 1e-12"});
        }

        ParabolicWindow top;
        top.t0 = cfg.final_time;
        std::vector<double> radii, psis, phis;
        for (double r : cfg.radii)
        {
            top.radius = r;
            if (top.valid(cfg.final_time))
            {
                radii.push_back(r);
                psis.push_back(quad.psi(top));
                phis.push_back(quad.phi(top));
            }
        }
        nlohmann::json fitted;
        fitted["psi_ladder"] = {{"radii", radii}, {"psi", psis}, {"phi", phis}};
        fitted["psi_monotonicity_constant"]
            = radii.empty() ? kNaN : fit_monotonicity_constant(radii, psis);
        fitted["phi_monotonicity_constant"]
            = radii.empty() ? kNaN : fit_monotonicity_constant(radii, phis);
        fitted["energy_constant"] = fit_energy_constant(main_traj.monitors);
        GrowthEstimate const growth
            = estimate_growth_constants(g, m, 1000, cfg.dim, cfg.seed);
        fitted["c0_hat"] = growth.c0_hat;
        fitted["c1_hat"] = growth.c1_hat;
        fitted["c0_declared"] = g.declared_c0();
        fitted["c0_warning"] = growth.c0_hat > g.declared_c0() * (1 + 1e-6) + 1e-12;
        if (main_traj.states.size() >= 2)
        {
            auto const& st = main_traj.states;
            BochnerReport const b = bochner_ratio(
                st[st.size() - 2], st.back(), runs[main].epsilon, 1.0, m);
            fitted["bochner_max_ratio"] = b.max_ratio;
        }
        det["fitted"] = fitted;

        ScanOptions sopt;
        sopt.theta0 = cfg.theta0;
        sopt.radius = cfg.scan_radius;
        sopt.kappa = cfg.kappa;
        sopt.cap = cfg.cap;
        sopt.time_points = cfg.scan_time_points;
        sopt.space_points = cfg.scan_space_points;
        ScanReport const scan
            = regularity_scan(main_traj, runs[main].epsilon, m, sopt);
        nlohmann::json sj;
        nlohmann::json entries = nlohmann::json::array();
        for (auto const& e : scan.entries)
        {
            entries.push_back({{"t0", e.window.t0},
                               {"x0", e.window.x0},
                               {"valid", e.valid},
                               {"psi", e.psi},
                               {"local_sup", e.local_sup}});
        }
        sj["regularity"] = {{"theta0", sopt.theta0},
                            {"radius", sopt.radius},
                            {"kappa", sopt.kappa},
                            {"cap", sopt.cap},
                            {"entries", entries},
                            {"small_psi", scan.small_psi},
                            {"small_psi_above_cap", scan.small_psi_above_cap},
                            {"fraction_bounded", scan.fraction_bounded},
                            {"candidates", scan.candidates}};
        det["regularity_fraction_bounded"] = scan.fraction_bounded;
        det["regularity_candidates"] = scan.candidates.size();
        if (runs.size() >= 2)
        {
            std::vector<Trajectory> family;
            for (auto const& r : runs)
            {
                family.push_back(r.traj);
            }
            SingularSetReport const sing
                = singular_set_detect(family, m, cfg.theta0, cfg.radii,
                                      cfg.scan_time_points,
                                      cfg.scan_space_points);
            std::vector<int> mask(sing.mask.begin(), sing.mask.end());
            sj["singular_set"] = {{"mask", mask},
                                  {"marked", sing.marked},
                                  {"fraction", sing.fraction},
                                  {"measure", sing.measure}};
            det["singular_fraction"] = sing.fraction;
        }

        // Files
        write_atomic(dir / "monitor.csv", monitor_csv.str());
        files.push_back("monitor.csv");
        write_atomic(dir / "ensemble.csv", ensemble_csv.str());
        files.push_back("ensemble.csv");
        write_atomic(dir / "scan.json", sj.dump(2) + "\n");
        files.push_back("scan.json");
        if (cfg.write_trajectory)
        {
            std::ostringstream bin(std::ios::binary);
            write_trajectory_binary(main_traj, bin);
            write_atomic(dir / "trajectory.bin", bin.str());
            files.push_back("trajectory.bin");
        }
        files.push_back("report.json");
        rep.files = files;
        write_atomic(dir / "report.json", rep.to_json().dump(2) + "\n");
    }
    catch (Error const& e)
    {
        write_failed(dir, cfg, e, files);
        throw;
    }
    return rep;
}

//---------------------------------------------------------------------------//
nlohmann::json StudyTable::to_json() const
{
    return {{"axis", axis},
            {"levels", levels},
            {"defects", defects},
            {"order", order},
            {"expected", {expected_low, expected_high}},
            {"passed", passed}};
}

StudyTable convergence_study(ExperimentConfig const& cfg, std::string_view axis)
{
    validate(cfg);
    Problem const pb = make_problem(cfg);
    EmbeddedManifold const& m = *pb.manifold;
    StudyTable out;
    out.axis = std::string(axis);

    if (axis == "eps")
    {
        if (cfg.solver != "penalized" || cfg.epsilons.size() < 3)
        {
            throw Error(ErrorCode::config_invalid,
                        "the eps study needs a penalized run with >= 3 eps");
        }
        double const dt = resolve_dt(cfg);
        check_step(cfg, dt);
        TorusGrid const grid(cfg.dim, cfg.nodes);
        for (auto const& r : solve_all(cfg, pb, grid, dt, 1))
        {
            out.levels.push_back(*r.epsilon);
            out.defects.push_back(max_monitor_dist(r.traj));
        }
        out.expected_low = 0.35;
        out.expected_high = 0.65;
    }
    else if (axis == "dt")
    {
        double const dt = resolve_dt(cfg);
        check_step(cfg, dt);
        TorusGrid const grid(cfg.dim, cfg.nodes);
        auto const runs = solve_all(cfg, pb, grid, dt, 0);
        Trajectory const& traj = runs[main_run(runs)].traj;
        SpaceTimeField const field(traj);
        auto const starts = uniform_starts(cfg.dim, cfg.starts);
        std::vector<double> sums(3, 0.0);
        for (std::size_t p = 0; p < cfg.paths; ++p)
        {
            auto const& x0 = starts[p % starts.size()];
            std::span<double const> x(x0.data(), cfg.dim);
            BrownianPath const fine = sample_brownian(
                path_seed(cfg.seed, p), cfg.path_dt / 4, cfg.final_time,
                cfg.dim);
            for (std::size_t level = 0; level < 3; ++level)
            {
                std::size_t const factor = std::size_t{4} >> level;
                BrownianPath const path = coarsen(fine, factor);
                BSDESample const s
                    = assemble_bsde_sample(field, path, x, pb.initial);
                sums[level] += bsde_residual(s, pb.generator, m).max_abs;
            }
        }
        for (std::size_t level = 0; level < 3; ++level)
        {
            out.levels.push_back(cfg.path_dt / static_cast<double>(1 << level));
            out.defects.push_back(sums[level]
                                  / static_cast<double>(std::max<std::size_t>(
                                      cfg.paths, 1)));
        }
        out.expected_low = 0.7;
        out.expected_high = 1.3;
    }
    else if (axis == "dx")
    {
        for (int level = 0; level < 3; ++level)
        {
            ExperimentConfig c = cfg;
            c.nodes = cfg.nodes << level;
            c.dt.reset();
            if (c.solver == "penalized")
            {
                c.epsilons = {*std::min_element(cfg.epsilons.begin(),
                                                cfg.epsilons.end())};
            }
            TorusGrid const grid(c.dim, c.nodes);
            double const dt = resolve_dt(c);
            auto const runs = solve_all(c, pb, grid, dt, 0);
            double defect = 0;
            for (auto const& s : runs.front().traj.states)
            {
                defect = std::max(defect, sup_deviation(s, [&](auto x) {
                                      return pb.initial(x);
                                  }));
            }
            out.levels.push_back(grid.spacing());
            out.defects.push_back(defect);
        }
        out.expected_low = 1.6;
        out.expected_high = 2.4;
    }
    else
    {
        throw Error(ErrorCode::config_invalid,
                    "study axis must be eps, dt or dx");
    }
    out.order = fit_order(out.levels, out.defects);
    out.passed = out.order >= out.expected_low && out.order <= out.expected_high;
    return out;
}

RunReport write_study(ExperimentConfig const& cfg, StudyTable const& table)
{
    fs::path const dir(cfg.out_dir);
    fs::create_directories(dir);
    RunReport rep;
    rep.config_hash = config_hash(cfg);
    rep.details["config"] = canonical_config(cfg);
    rep.details["study"] = table.to_json();
    std::ostringstream rule;
    rule << "fitted order in [" << table.expected_low << ", "
         << table.expected_high << "]";
    rep.criteria.push_back(
        {"study_" + table.axis, table.passed, table.order, rule.str()});
    rep.files = {"report.json"};
    write_atomic(dir / "report.json", rep.to_json().dump(2) + "\n");
    return rep;
}

//---------------------------------------------------------------------------//
std::vector<Benchmark> list_benchmarks()
{
    std::vector<Benchmark> out;
    {
        ExperimentConfig c;
        c.initial_map = "constant";
        c.nodes = 32;
        c.final_time = 0.1;
        c.epsilons = {1e-2, 1e-3};
        c.paths = 100;
        c.path_dt = 1e-3;
        c.starts = 4;
        c.checkpoints = {0.05, 0.1};
        c.martingale_paths = 100;
        c.radii = {0.02, 0.04};
        c.scan_radius = 0.02;
        c.out_dir = "out/constant";
        out.push_back({"constant", "constant map into S^2; every defect is 0",
                       c});
    }
    for (int k : {1, 2})
    {
        ExperimentConfig c;
        c.initial_map = "great_circle";
        c.wave_number = k;
        c.nodes = 64;
        c.final_time = 0.25;
        c.epsilons = {1e-2, 1e-3, 1e-4};
        c.paths = 200;
        c.path_dt = 1e-3;
        c.starts = 8;
        c.checkpoints = {0.05, 0.1, 0.25};
        c.martingale_paths = 2000;
        c.negative_control = true;
        c.record_stride = 10;
        c.radii = {0.05, 0.1, 0.2};
        c.scan_radius = 0.05;
        c.theta0 = 0.5;
        c.out_dir = "out/great_circle_k" + std::to_string(k);
        out.push_back({"great_circle_k" + std::to_string(k),
                       "degree-" + std::to_string(k)
                           + " great circle T^1 -> S^2, f = 0, penalized "
                             "eps ladder",
                       c});
    }
    {
        ExperimentConfig c;
        c.initial_map = "sphere_collapse";
        c.dim = 2;
        c.nodes = 32;
        c.final_time = 0.1;
        c.epsilons = {1e-2, 5e-3, 2.5e-3};
        c.paths = 100;
        c.path_dt = 1e-3;
        c.starts = 4;
        c.checkpoints = {0.05, 0.1};
        c.martingale_paths = 0;
        c.record_stride = 10;
        c.radii = {0.04, 0.08, 0.15};
        c.scan_radius = 0.04;
        c.theta0 = 0.5;
        c.out_dir = "out/torus2_to_sphere_degenerate";
        out.push_back({"torus2_to_sphere_degenerate",
                       "T^2 -> S^2 collapsing whole circles onto the poles",
                       c});
    }
    return out;
}

Benchmark find_benchmark(std::string_view id)
{
    for (auto& b : list_benchmarks())
    {
        if (b.id == id)
        {
            return b;
        }
    }
    throw Error(ErrorCode::not_found,
                "no benchmark named '" + std::string(id) + "'");
}

}  // namespace mbsde
