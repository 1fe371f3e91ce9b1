#pragma once

// laughlin_lab: one subcommand per module operation. Parameters come from
// built-in defaults, then --config (a JSON object or a previous run manifest),
// then LAUGHLIN_LAB_SEED, then command-line flags. Every run writes its outputs
// and <subcommand>.manifest.json into --out-dir.
//
// Exit codes: 0 success, 2 input error, 3 numerical non-convergence, 1 other.

#include <chrono>
#include <cstdlib>
#include <deque>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "laughlin/bathtub.hpp"
#include "laughlin/cli/params.hpp"
#include "laughlin/core/parallel.hpp"
#include "laughlin/coulomb_minimizer.hpp"
#include "laughlin/ed/delta.hpp"
#include "laughlin/ed/gap.hpp"
#include "laughlin/io/csv.hpp"
#include "laughlin/io/manifest.hpp"
#include "laughlin/io/region.hpp"
#include "laughlin/plasma_sampler.hpp"
#include "laughlin/screening.hpp"
#include "laughlin/theorem2.hpp"

namespace laughlin::cli {

namespace fs = std::filesystem;

/// Per-run state handed to a command body.
struct Context {
    Config cfg;
    fs::path out_dir;
    std::string out;  ///< primary output file name
    std::size_t threads = 1;
    std::uint64_t seed = 1;
    std::vector<std::string> outputs;
    std::ostream* log = &std::cerr;

    /// Registers an output and returns its path under out_dir.
    fs::path output(const std::string& name) {
        outputs.push_back(name);
        return out_dir / name;
    }

    /// Sibling of the primary output: "<stem><suffix>".
    std::string sibling(const std::string& suffix) const {
        const fs::path p(out);
        return (p.parent_path() / p.stem()).string() + suffix;
    }
};

/// Command result: 0, or 3 when the run finished without meeting its tolerance.
using Body = std::function<int(Context&)>;

struct Command {
    std::string name;
    std::string description;
    std::string default_out;
    std::vector<Param> params;
    Body body;
};

namespace detail {

inline std::vector<Param> plasma_params(int n, int ell) {
    return {{"n", Kind::integer, n, "particle number N"},
            {"ell", Kind::integer, ell, "Jastrow exponent ell (even: bosons, odd: fermions)"},
            {"b", Kind::number, 1.0, "field strength B"}};
}

inline std::vector<Param> chain_params(long sweeps, long burn_in, int chains) {
    return {{"sweeps", Kind::integer, sweeps, "sweeps per chain, burn-in included"},
            {"burn_in", Kind::integer, burn_in, "discarded sweeps per chain"},
            {"chains", Kind::integer, chains, "independent chains"},
            {"thin", Kind::integer, 1, "record every thin-th sweep"},
            {"proposal_scale", Kind::number, 0.0, "Gaussian proposal width (0: magnetic length)"},
            {"diagnostic_window", Kind::integer, 100, "sweeps without an accepted move before failing"}};
}

inline std::vector<Param> density_grid_params() {
    return {{"grid_cells", Kind::integer, 160, "density histogram cells per side"},
            {"grid_half_width", Kind::number, 0.0, "histogram half width (0: 1.5 droplet radii)"},
            {"coarse_radius", Kind::number, 0.0, "coarse-graining radius (0: three mean spacings)"}};
}

inline std::vector<Param> potential_params() {
    return {{"v", Kind::text, "quadratic", "external potential: zero, constant, quadratic, mexican_hat, double_well"},
            {"v_params", Kind::potential_params, json::object(), "external potential parameters, e.g. a=1"},
            {"w", Kind::text, "zero", "pair potential: zero, constant, gaussian"},
            {"w_params", Kind::potential_params, json::object(), "pair potential parameters, e.g. amplitude=1,width=0.5"},
            {"lambda", Kind::number, 0.0, "pair coupling lambda"}};
}

template <class... V>
std::vector<Param> concat(V&&... v) {
    std::vector<Param> out;
    (out.insert(out.end(), v.begin(), v.end()), ...);
    return out;
}

inline PlasmaParams plasma(const Context& c) {
    PlasmaParams p{c.cfg.number("b"), c.cfg.int32("ell"), c.cfg.int32("n")};
    p.validate();
    return p;
}

inline ChainConfig chain(const Context& c, std::uint64_t seed) {
    ChainConfig k;
    k.sweeps = c.cfg.integer("sweeps");
    k.burn_in = c.cfg.integer("burn_in");
    k.chains = c.cfg.int32("chains");
    k.thin = c.cfg.int32("thin");
    k.proposal_scale = c.cfg.number("proposal_scale");
    k.diagnostic_window = c.cfg.int32("diagnostic_window");
    k.seed = seed;
    k.validate();
    return k;
}

inline Grid2D density_grid(const Context& c, const PlasmaParams& p) {
    double half = c.cfg.number("grid_half_width");
    if (half <= 0.0) half = 1.5 * p.droplet_radius();
    return Grid2D::centered(Point{}, half, c.cfg.int32("grid_cells"));
}

inline double coarse_radius(const Context& c, const PlasmaParams& p) {
    const double r = c.cfg.number("coarse_radius");
    return r > 0.0 ? r : default_coarse_radius(p);
}

inline json chain_stats_json(const ChainStats& s) {
    return {{"acceptance", s.acceptance}, {"seeds", s.seeds}, {"recorded_samples", s.recorded}};
}

inline json incompressibility_json(const IncompressibilityReport& r) {
    return {{"cap", r.cap},
            {"coarse_radius", r.coarse_radius},
            {"max_coarse_density", r.max_coarse_density},
            {"excess_ratio", r.excess_ratio},
            {"argmax", io::points_to_json(r.argmax)}};
}

inline void write_density_csv(const fs::path& path, const DensityGrid& d) {
    io::CsvWriter w(path, {"x", "y", "rho"});
    for (std::size_t k = 0; k < d.grid.size(); ++k) {
        const Point c = d.grid.center(k);
        w.row() << c.real() << c.imag() << d.values[k];
    }
    w.close();
}

inline void write_profile_csv(const fs::path& path, const DensityProfile& d) {
    io::CsvWriter w(path, {"x", "y", "rho"});
    for (std::size_t k = 0; k < d.grid.size(); ++k) {
        const Point c = d.grid.center(k);
        w.row() << c.real() << c.imag() << d.rho[k];
    }
    w.close();
}

inline DensityGrid sample_density(const Context& c, const PlasmaParams& p, const QuasiHoleSet& holes,
                                  const Grid2D& g, ChainStats* stats = nullptr) {
    DensityAccumulator acc(g);
    const auto s = run_chains(p, CorrelationFactor::quasi_holes(holes), chain(c, c.seed), c.threads, acc);
    if (stats) *stats = s;
    return acc.result();
}

/// Maximum of the coarse-grained density outside D(0, r).
inline double max_coarse_beyond(const DensityGrid& d, double coarse_radius, double r) {
    const auto cg = coarse_grained(d, coarse_radius);
    double m = 0.0;
    for (std::size_t k = 0; k < cg.values.size(); ++k)
        if (std::isfinite(cg.values[k]) && std::abs(cg.grid.center(k)) > r) m = std::max(m, cg.values[k]);
    return m;
}

inline json deficit_json(const QuasiHole& h, double probe, double deficit, int ell) {
    return {{"x", h.position.real()},
            {"y", h.position.imag()},
            {"m", h.multiplicity},
            {"probe_radius", probe},
            {"deficit", deficit},
            {"expected", static_cast<double>(h.multiplicity) / ell}};
}

// ---------------------------------------------------------------------------
// Command bodies
// ---------------------------------------------------------------------------

inline int run_sample_density(Context& c) {
    const auto p = plasma(c);
    const auto holes = c.cfg.holes("holes");
    const auto g = density_grid(c, p);
    ChainStats stats;
    const auto d = sample_density(c, p, holes, g, &stats);
    const double cr = coarse_radius(c, p);
    const auto inc = incompressibility_check(d, p, cr);
    const double R = p.droplet_radius();
    json rep = incompressibility_json(inc);
    rep["plateau_density"] = d.mean_over_disk(Point{}, 0.5 * R);
    rep["plateau_ratio"] = d.mean_over_disk(Point{}, 0.5 * R) / p.cap_density();
    rep["max_coarse_density_beyond_1.3R"] = max_coarse_beyond(d, cr, 1.3 * R);
    rep["droplet_radius"] = R;
    rep["chains"] = chain_stats_json(stats);
    rep["holes"] = io::holes_to_json(holes);
    json deficits = json::array();
    if (c.cfg.boolean("baseline") && !holes.empty()) {
        const auto base = sample_density(c, p, {}, g);
        double probe = c.cfg.number("probe_radius");
        if (probe <= 0.0) probe = 0.5 * R;
        for (const auto& h : holes.holes) deficits.push_back(deficit_json(h, probe, quasihole_deficit(d, base, h, probe), p.ell));
    }
    rep["deficits"] = deficits;
    write_density_csv(c.output(c.out), d);
    io::write_json_file(c.output(c.sibling(".report.json")), rep);
    return 0;
}

inline int run_incompressibility(Context& c) {
    const auto p = plasma(c);
    const auto sets = c.cfg.hole_sets("hole_sets");
    if (sets.empty()) throw InputError("incompressibility: no hole sets");
    const auto g = density_grid(c, p);
    const double cr = coarse_radius(c, p);
    io::CsvWriter w(c.output(c.out), {"run", "holes", "max_coarse_density", "cap", "excess_ratio", "mean_acceptance"});
    json runs = json::array();
    double worst = 0.0;
    for (std::size_t i = 0; i < sets.size(); ++i) {
        ChainStats stats;
        const auto d = sample_density(c, p, sets[i], g, &stats);
        const auto inc = incompressibility_check(d, p, cr);
        worst = std::max(worst, inc.excess_ratio);
        w.row() << static_cast<int>(i) << describe(sets[i]) << inc.max_coarse_density << inc.cap << inc.excess_ratio
                << stats.mean_acceptance();
        json r = incompressibility_json(inc);
        r["holes"] = io::holes_to_json(sets[i]);
        r["chains"] = chain_stats_json(stats);
        runs.push_back(r);
    }
    w.close();
    io::write_json_file(c.output(c.sibling(".report.json")),
                        {{"runs", runs}, {"max_excess_ratio", worst}, {"cap", p.cap_density()}, {"coarse_radius", cr}});
    return 0;
}

inline int run_quasihole(Context& c) {
    const auto p = plasma(c);
    const auto holes = c.cfg.holes("holes");
    if (holes.empty()) throw InputError("quasihole: at least one hole is required");
    const auto g = density_grid(c, p);
    ChainStats s_holes, s_base;
    const auto d = sample_density(c, p, holes, g, &s_holes);
    const auto base = sample_density(c, p, {}, g, &s_base);
    double probe = c.cfg.number("probe_radius");
    if (probe <= 0.0) probe = 0.5 * p.droplet_radius();
    io::CsvWriter w(c.output(c.out), {"x", "y", "m", "probe_radius", "deficit", "expected"});
    json deficits = json::array();
    for (const auto& h : holes.holes) {
        const double def = quasihole_deficit(d, base, h, probe);
        w.row() << h.position.real() << h.position.imag() << h.multiplicity << probe << def
                << static_cast<double>(h.multiplicity) / p.ell;
        deficits.push_back(deficit_json(h, probe, def, p.ell));
    }
    w.close();
    write_density_csv(c.output(c.sibling(".density.csv")), d);
    io::write_json_file(c.output(c.sibling(".report.json")), {{"deficits", deficits},
                                                              {"holes", io::holes_to_json(holes)},
                                                              {"chains_holes", chain_stats_json(s_holes)},
                                                              {"chains_baseline", chain_stats_json(s_base)}});
    return 0;
}

inline MinimizeOptions minimize_options(const Context& c, int N) {
    MinimizeOptions o;
    o.max_iters = c.cfg.int32("max_iters");
    o.gradient_tol = c.cfg.number("gradient_tol");
    o.restarts = c.cfg.int32("restarts");
    o.quasi_newton = c.cfg.boolean("quasi_newton");
    o.memory = c.cfg.int32("memory");
    o.init_radius = c.cfg.number("init_radius");
    o.seed = c.seed;
    const auto init = c.cfg.text("init");
    if (init == "random") o.init = InitKind::random_disk;
    else if (init == "lattice") o.init = InitKind::lattice;
    else throw InputError("minimize: init must be 'random' or 'lattice'");
    o.validate(N);
    return o;
}

inline int run_minimize(Context& c) {
    const int N = c.cfg.int32("n");
    const auto holes = c.cfg.holes("qh");
    const auto W = holes.empty() ? SuperharmonicPotential::zero() : SuperharmonicPotential::quasi_holes(holes);
    const auto r = minimize(N, W, minimize_options(c, N), c.threads);
    const auto radii = c.cfg.numbers("count_radii");
    const auto centers = count_centers(r.points, c.cfg.number("count_spacing"));
    const auto counts = count_in_disks(r.points, centers, radii);
    io::write_json_file(c.output(c.out), io::points_to_json(r.points));
    io::CsvWriter w(c.output(c.sibling(".counts.csv")), {"cx", "cy", "R", "count", "bound", "excess"});
    for (const auto& e : counts.entries)
        w.row() << e.center.real() << e.center.imag() << e.radius << e.count << e.bound << e.excess;
    w.close();
    json g = json::array();
    for (const auto& [R, v] : counts.max_excess) g.push_back({{"R", R}, {"g_meas", v}});
    io::write_json_file(c.output(c.sibling(".report.json")), {{"energy", r.energy},
                                                              {"initial_energy", r.initial_energy},
                                                              {"gradient_norm", r.gradient_norm},
                                                              {"converged", r.converged},
                                                              {"iterations", r.iterations},
                                                              {"best_restart", r.best_restart},
                                                              {"restart_energies", r.restart_energies},
                                                              {"holes", io::holes_to_json(holes)},
                                                              {"count_bound", g}});
    if (!r.converged) {
        *c.log << "minimize: gradient tolerance not reached (|grad| = " << r.gradient_norm << ")\n";
        return 3;
    }
    return 0;
}

inline std::vector<Point> load_points(const Context& c) {
    const auto path = c.cfg.text("points");
    if (path.empty()) throw InputError("--points is required");
    return io::points_from_json(io::read_json_file(path));
}

inline const char* to_string(Membership m) {
    switch (m) {
        case Membership::inside: return "inside";
        case Membership::outside: return "outside";
        case Membership::inconclusive: return "inconclusive";
    }
    return "?";
}

inline int run_audit(Context& c) {
    auto pts = load_points(c);
    AuditOptions o;
    o.h = c.cfg.number("h");
    o.disk_radii = c.cfg.numbers("disk_radii");
    o.disk_stride = c.cfg.number("disk_stride");
    o.random_sizes = c.cfg.integers("random_sizes");
    o.random_per_size = c.cfg.int32("random_per_size");
    o.neighbor_sizes = c.cfg.integers("neighbor_sizes");
    o.seed = c.seed;
    json planted = nullptr;
    if (c.cfg.boolean("plant")) {
        const auto seed_point = static_cast<std::size_t>(c.cfg.integer("plant_seed_point"));
        const auto mover = static_cast<std::size_t>(c.cfg.integer("plant_mover"));
        const auto cluster = plant_violation(pts, seed_point, mover, c.cfg.int32("plant_k"));
        o.explicit_subsets.push_back(cluster);
        planted = {{"mover", mover}, {"cluster", cluster}, {"position", {pts[mover].real(), pts[mover].imag()}}};
    }
    const auto r = audit_exclusion(pts, o, c.threads);
    io::CsvWriter w(c.output(c.sibling(".findings.csv")), {"subset", "strategy", "point", "status", "depth_cells"});
    for (const auto* list : {&r.violations, &r.inconclusive})
        for (const auto& f : *list)
            w.row() << static_cast<unsigned long long>(f.subset) << r.subsets[f.subset].strategy
                    << static_cast<unsigned long long>(f.point) << to_string(f.status) << f.depth_cells;
    w.close();
    io::write_json_file(c.output(c.out), {{"points", pts.size()},
                                          {"subsets", r.subsets.size()},
                                          {"subsets_by_strategy", r.subsets_by_strategy},
                                          {"point_tests", r.point_tests},
                                          {"violations", r.violations.size()},
                                          {"inconclusive", r.inconclusive.size()},
                                          {"planted", planted}});
    return 0;
}

inline int run_screening(Context& c) {
    const auto pts = load_points(c);
    ScreeningOptions so;
    so.excess_tol = c.cfg.number("excess_tol");
    const auto region = screening_region_auto(pts, c.cfg.number("h"), so);
    const auto phi = potential_field(region, c.threads);
    const auto sign = sign_dichotomy(region, phi, c.cfg.int32("band"));
    json rep = {{"area", region.area()},
                {"sources", pts.size()},
                {"sweeps", region.sweeps},
                {"residual", region.residual},
                {"sign_check",
                 {{"tol", sign.tol},
                  {"violations", sign.violations},
                  {"band_cells", sign.band_cells},
                  {"checked_cells", sign.checked_cells},
                  {"min_phi", sign.min_phi},
                  {"max_abs_outside", sign.max_abs_outside}}}};
    if (const double r = c.cfg.number("support_radius"); r > 0.0) {
        const auto ctr = c.cfg.numbers("support_center");
        if (ctr.size() != 2) throw InputError("--support-center expects x,y");
        const auto s = support_bound_check(phi, region, Point(ctr[0], ctr[1]), r, c.cfg.number("support_constant"));
        rep["support_bound"] = {{"max_phi_on_circle", s.max_phi_on_circle},
                                {"predicted_radius", s.predicted_radius},
                                {"region_radius", s.region_radius},
                                {"contained", s.contained},
                                {"c_est", s.c_est}};
    }
    io::write_json_file(c.output(c.out), io::region_to_json(region));
    io::CsvWriter w(c.output(c.sibling(".phi.csv")), {"x", "y", "phi"});
    for (std::size_t k = 0; k < phi.grid.size(); ++k) {
        const Point p = phi.grid.center(k);
        w.row() << p.real() << p.imag() << phi.values[k];
    }
    w.close();
    io::write_json_file(c.output(c.sibling(".report.json")), rep);
    return 0;
}

inline PotentialSpec potential_spec(const Context& c) {
    return PotentialSpec::from_choices(c.cfg.potential("v", "v_params"), c.cfg.potential("w", "w_params"),
                                       c.cfg.number("lambda"));
}

inline FlockingOptions flocking_options(const Context& c) {
    FlockingOptions f;
    f.gap_tol = c.cfg.number("gap_tol");
    f.max_iters = c.cfg.int32("max_iters");
    f.polish = c.cfg.boolean("polish");
    return f;
}

inline Grid2D variational_grid(const Context& c, const PlasmaParams& p) {
    const double margin = c.cfg.number("grid_margin");
    if (!(margin > 1.0)) throw InputError("--grid-margin must exceed 1");
    return Grid2D::centered(Point{}, margin * p.droplet_radius(), c.cfg.int32("grid_cells"));
}

inline json flocking_json(const FlockingResult& f) {
    return {{"energy", f.energy},         {"fill_level", f.fill_level}, {"gap", f.gap},
            {"iterations", f.iterations}, {"converged", f.converged},   {"monotone", f.monotone},
            {"mass", f.density.mass()}};
}

/// bathtub: exact sorted fill at lambda = 0, Frank-Wolfe otherwise.
inline int run_variational(Context& c, bool force_flocking) {
    const auto p = plasma(c);
    const auto spec = potential_spec(c);
    const auto pots = scaled_potentials(spec, p.N);
    const auto g = variational_grid(c, p);
    const auto V = cell_average(g, pots.V);
    json rep = {{"N", p.N}, {"ell", p.ell}, {"B", p.B}, {"lambda", pots.lambda}, {"cap", p.cap_density()},
                {"grid", io::grid_to_json(g)}};
    int code = 0;
    if (pots.lambda == 0.0 && !force_flocking) {
        const auto b = bathtub_fill(g, V, p.cap_density(), p.N);
        rep["method"] = "bathtub";
        rep["energy"] = b.energy;
        rep["fill_level"] = b.fill_level;
        rep["mass"] = b.density.mass();
        write_profile_csv(c.output(c.sibling(".profile.csv")), b.density);
    } else {
        const auto f = flocking_solve(g, V, pots.W, pots.lambda, p.cap_density(), p.N, flocking_options(c));
        rep.update(flocking_json(f));
        rep["method"] = "frank-wolfe";
        write_profile_csv(c.output(c.sibling(".profile.csv")), f.density);
        io::CsvWriter w(c.output(c.sibling(".trace.csv")), {"iteration", "energy"});
        for (std::size_t i = 0; i < f.energy_trace.size(); ++i)
            w.row() << static_cast<unsigned long long>(i) << f.energy_trace[i];
        w.close();
        if (!f.converged) {
            *c.log << "flocking: duality gap " << f.gap << " above tolerance\n";
            code = 3;
        }
    }
    io::write_json_file(c.output(c.out), rep);
    return code;
}

inline int run_theorem2(Context& c) {
    const auto p = plasma(c);
    Theorem2Options o;
    o.max_holes = c.cfg.int32("max_holes");
    o.max_multiplicity = c.cfg.int32("max_multiplicity");
    o.nm_evals = c.cfg.int32("nm_evals");
    o.grid_cells = c.cfg.int32("grid_cells");
    o.grid_margin = c.cfg.number("grid_margin");
    o.window_hi = c.cfg.number("window_hi");
    o.threads = c.threads;
    o.flocking = flocking_options(c);
    o.search_chain = ChainConfig{c.cfg.integer("search_sweeps"), c.cfg.integer("search_burn_in"), 0.0, c.seed,
                                 c.cfg.int32("search_chains"), 1, 100};
    o.final_chain = ChainConfig{c.cfg.integer("final_sweeps"), c.cfg.integer("final_burn_in"), 0.0, c.seed + 1,
                                c.cfg.int32("final_chains"), 1, 100};
    const auto r = theorem2_harness(p, potential_spec(c), o);
    io::CsvWriter w(c.output(c.sibling(".search.csv")), {"evaluation", "holes", "energy", "std_error"});
    for (std::size_t i = 0; i < r.search_log.size(); ++i)
        w.row() << static_cast<unsigned long long>(i) << describe(r.search_log[i].holes) << r.search_log[i].energy.mean
                << r.search_log[i].energy.std_error;
    w.close();
    write_profile_csv(c.output(c.sibling(".flocking.csv")), r.flo.density);
    io::write_json_file(c.output(c.out), {{"N", p.N},
                                          {"ell", p.ell},
                                          {"B", p.B},
                                          {"lambda", r.lambda},
                                          {"e_flo", r.e_flo},
                                          {"e_est", r.e_est.mean},
                                          {"e_est_std_error", r.e_est.std_error},
                                          {"ratio", r.ratio},
                                          {"ratio_std_error", r.ratio_se},
                                          {"window", {r.window_lo, r.window_hi}},
                                          {"window_note", "lower edge 1 - 2 SE, upper edge fixed; a desk-scale choice"},
                                          {"within_window", r.within_window},
                                          {"best_holes", io::holes_to_json(r.best)},
                                          {"flocking", flocking_json(r.flo)},
                                          {"search_evaluations", r.search_log.size()}});
    return r.flo.converged ? 0 : 3;
}

inline int run_gap(Context& c) {
    ed::GapOptions o;
    o.k = c.cfg.int32("k");
    o.scan_factor = c.cfg.number("scan_factor");
    o.dense_limit = static_cast<std::size_t>(c.cfg.integer("dense_limit"));
    o.force_lanczos = c.cfg.boolean("force_lanczos");
    o.lanczos.tol = c.cfg.number("tol");
    o.lanczos.max_krylov = c.cfg.int32("max_krylov");
    o.lanczos.keep = c.cfg.int32("keep");
    o.lanczos.block = c.cfg.int32("block");
    o.lanczos.max_restarts = c.cfg.int32("max_restarts");
    o.lanczos.seed = c.seed;
    o.threads = c.threads;
    const auto r = ed::spectral_gap(c.cfg.int32("n"), c.cfg.int32("ell"), o);
    io::CsvWriter w(c.output(c.out), {"N", "ell", "L", "dim", "zero_modes", "lowest_nonzero"});
    json sectors = json::array();
    for (const auto& s : r.sectors) {
        const double low = s.spectrum.lowest_nonzero ? *s.spectrum.lowest_nonzero : std::nan("");
        w.row() << s.N << s.ell << s.L << static_cast<unsigned long long>(s.dim) << s.spectrum.zero_mode_count << low;
        sectors.push_back({{"L", s.L},
                           {"dim", s.dim},
                           {"method", s.spectrum.method},
                           {"eigenvalues", s.spectrum.eigenvalues},
                           {"residual", s.spectrum.residual},
                           {"matvecs", s.spectrum.matvecs}});
    }
    w.close();
    json sum = {{"N", r.N},
                {"ell", r.ell},
                {"m", r.m},
                {"statistics", to_string(r.statistics)},
                {"L_laughlin", r.L_laughlin},
                {"zero_tol", r.zero_tol},
                {"laughlin_zero_mode", r.laughlin_zero_mode},
                {"sigma", r.sigma ? json(*r.sigma) : json(nullptr)},
                {"sigma_L", r.sigma_L},
                {"sigma_scan", r.sigma_scan ? json(*r.sigma_scan) : json(nullptr)},
                {"sectors", sectors}};
    io::write_json_file(c.output(c.sibling(".summary.json")), sum);
    return 0;
}

inline int run_delta_check(Context& c) {
    const auto ns = c.cfg.integers("n");
    if (ns.empty()) throw InputError("delta-check: --n needs at least one particle number");
    io::CsvWriter w(c.output(c.out), {"N", "trial", "L", "dim", "error"});
    json per_n = json::array();
    double worst = 0.0;
    for (int N : ns) {
        const auto r = ed::delta_equivalence(N, c.cfg.int32("trials"), c.seed + static_cast<std::uint64_t>(N),
                                             c.cfg.int32("l_lo"), c.cfg.int32("l_hi"));
        for (std::size_t i = 0; i < r.trials.size(); ++i)
            w.row() << N << static_cast<int>(i) << r.trials[i].L << static_cast<unsigned long long>(r.trials[i].dim)
                    << r.trials[i].error;
        per_n.push_back({{"N", N}, {"scale", r.scale}, {"max_error", r.max_error}, {"trials", r.trials.size()}});
        worst = std::max(worst, r.max_error);
    }
    w.close();
    io::write_json_file(c.output(c.sibling(".report.json")),
                        {{"reference_scale", ed::kDeltaScale}, {"max_error", worst}, {"per_n", per_n}});
    return 0;
}

}  // namespace detail

inline std::vector<Command> commands() {
    using namespace detail;
    const std::vector<Param> density_extra = {
        {"holes", Kind::holes, json::array(), "quasi-holes x,y,m;x,y,m"},
        {"baseline", Kind::boolean, false, "also sample without holes and report density deficits"},
        {"probe_radius", Kind::number, 0.0, "deficit probe radius (0: half the droplet radius)"}};
    const std::vector<Param> flocking = {{"gap_tol", Kind::number, 1e-8, "Frank-Wolfe duality gap tolerance"},
                                         {"max_iters", Kind::integer, 20000, "Frank-Wolfe iterations"},
                                         {"polish", Kind::boolean, true, "active-set refinement"}};
    const std::vector<Param> variational_grid = {
        {"grid_cells", Kind::integer, 256, "cells per side"},
        {"grid_margin", Kind::number, 1.35, "grid half width in droplet radii"}};
    std::vector<Command> cmds;
    cmds.push_back({"sample-density", "Metropolis sampling of |Psi_F|^2 and its one-body density", "density.csv",
                    concat(plasma_params(64, 3), density_extra, chain_params(52000, 2000, 4), density_grid_params()),
                    run_sample_density});
    cmds.push_back({"incompressibility", "coarse-grained maximum density against the cap for several hole sets",
                    "incompressibility.csv",
                    concat(plasma_params(64, 3),
                           std::vector<Param>{{"hole_sets", Kind::hole_sets, parse_flag_value({"hole_sets", Kind::hole_sets, {}, ""}, "none|0,0,3|0,0,6"),
                                               "hole sets separated by |, e.g. none|0,0,3"}},
                           chain_params(52000, 2000, 4), density_grid_params()),
                    run_incompressibility});
    cmds.push_back({"quasihole", "density deficit around quasi-holes", "deficits.csv",
                    concat(plasma_params(64, 3),
                           std::vector<Param>{{"holes", Kind::holes, parse_flag_value({"holes", Kind::holes, {}, ""}, "0,0,3"),
                                               "quasi-holes x,y,m;x,y,m"},
                                              {"probe_radius", Kind::number, 0.0, "probe radius (0: half the droplet radius)"}},
                           chain_params(52000, 2000, 4), density_grid_params()),
                    run_quasihole});
    cmds.push_back({"minimize", "local minimizers of the cleaned Hamiltonian plus disk counts", "config.json",
                    {{"n", Kind::integer, 50, "number of points"},
                     {"qh", Kind::holes, json::array(), "phantom quasi-holes x,y,m (charge 2m)"},
                     {"restarts", Kind::integer, 4, "independent starts"},
                     {"init", Kind::text, "random", "random or lattice"},
                     {"init_radius", Kind::number, 0.0, "radius of the random start (0: sqrt(N/pi))"},
                     {"max_iters", Kind::integer, 20000, "iterations per start"},
                     {"gradient_tol", Kind::number, 1e-6, "stop when max_j |grad_j| is below"},
                     {"quasi_newton", Kind::boolean, true, "L-BFGS steps (false: gradient descent)"},
                     {"memory", Kind::integer, 10, "L-BFGS memory"},
                     {"count_radii", Kind::numbers, json::array({2.0, 3.0, 4.0}), "disk radii for the count bound"},
                     {"count_spacing", Kind::number, 0.25, "lattice spacing of extra count centers"}},
                    run_minimize});
    cmds.push_back({"audit", "exclusion-rule audit of a point configuration", "audit.json",
                    {{"points", Kind::text, "", "JSON file with a list of [x, y]"},
                     {"h", Kind::number, 0.025, "screening grid spacing"},
                     {"disk_radii", Kind::numbers, json::array({1.2, 2.0}), "sliding disk radii"},
                     {"disk_stride", Kind::number, 1.0, "sliding disk center spacing"},
                     {"random_sizes", Kind::integers, json::array({1, 2, 5, 10}), "random subset sizes"},
                     {"random_per_size", Kind::integer, 25, "random subsets per size"},
                     {"neighbor_sizes", Kind::integers, json::array({3, 4, 6}), "nearest-neighbour cluster sizes"},
                     {"plant", Kind::boolean, false, "move one point into the screening region of a cluster first"},
                     {"plant_seed_point", Kind::integer, 0, "cluster seed index"},
                     {"plant_mover", Kind::integer, 1, "index of the moved point"},
                     {"plant_k", Kind::integer, 4, "cluster size"}},
                    run_audit});
    cmds.push_back({"screening", "screening region of point charges and its potential", "region.json",
                    {{"points", Kind::text, "", "JSON file with a list of [x, y]"},
                     {"h", Kind::number, 0.02, "grid spacing"},
                     {"excess_tol", Kind::number, 1e-10, "toppling stopping tolerance"},
                     {"band", Kind::integer, 2, "boundary band (cells) excluded from the sign check"},
                     {"support_radius", Kind::number, 0.0, "circle radius for the support bound (0: skip)"},
                     {"support_center", Kind::numbers, json::array({0.0, 0.0}), "circle center x,y"},
                     {"support_constant", Kind::number, kDefaultSupportConstant, "support bound constant C"}},
                    run_screening});
    cmds.push_back({"bathtub", "capped-density minimization; exact fill at lambda = 0", "flo.json",
                    concat(plasma_params(64, 2), potential_params(), variational_grid, flocking),
                    [](Context& c) { return run_variational(c, false); }});
    cmds.push_back({"flocking", "Frank-Wolfe solution of the flocking problem", "flocking.json",
                    concat(plasma_params(64, 2), potential_params(), variational_grid, flocking),
                    [](Context& c) { return run_variational(c, true); }});
    cmds.push_back({"theorem2", "trial-state energy against the flocking energy", "theorem2.json",
                    concat(plasma_params(64, 2), potential_params(),
                           std::vector<Param>{{"grid_cells", Kind::integer, 512, "cells per side"},
                                              {"grid_margin", Kind::number, 1.35, "grid half width in droplet radii"},
                                              {"max_holes", Kind::integer, 8, "maximum number of holes"},
                                              {"max_multiplicity", Kind::integer, 0, "maximum multiplicity (0: 2 ell)"},
                                              {"nm_evals", Kind::integer, 30, "Nelder-Mead evaluations per hole"},
                                              {"search_sweeps", Kind::integer, 4000, "sweeps per search evaluation"},
                                              {"search_burn_in", Kind::integer, 500, "burn-in per search evaluation"},
                                              {"search_chains", Kind::integer, 2, "chains per search evaluation"},
                                              {"final_sweeps", Kind::integer, 52000, "sweeps of the final estimate"},
                                              {"final_burn_in", Kind::integer, 2000, "burn-in of the final estimate"},
                                              {"final_chains", Kind::integer, 4, "chains of the final estimate"},
                                              {"window_hi", Kind::number, 1.3, "upper edge of the ratio window"}},
                           flocking),
                    run_theorem2});
    cmds.push_back({"gap", "pseudo-potential spectra and the spectral gap", "gaps.csv",
                    {{"n", Kind::integer, 4, "particle number N"},
                     {"ell", Kind::integer, 2, "Laughlin exponent (H(ell - 2))"},
                     {"k", Kind::integer, 4, "eigenvalues per sector"},
                     {"scan_factor", Kind::number, 1.0, "scan sectors up to this multiple of the Laughlin momentum"},
                     {"dense_limit", Kind::integer, 2000, "largest dimension for dense diagonalization"},
                     {"force_lanczos", Kind::boolean, false, "use Lanczos in every sector"},
                     {"tol", Kind::number, 1e-10, "Lanczos residual tolerance"},
                     {"max_krylov", Kind::integer, 80, "Lanczos basis size"},
                     {"keep", Kind::integer, 40, "Ritz vectors kept at a restart"},
                     {"block", Kind::integer, 2, "Lanczos block size"},
                     {"max_restarts", Kind::integer, 500, "Lanczos restarts"}},
                    run_gap});
    cmds.push_back({"delta-check", "delta-function action against the m = 0 pseudo-potential", "delta.csv",
                    {{"n", Kind::integers, json::array({2, 3, 4}), "particle numbers"},
                     {"trials", Kind::integer, 20, "random vectors per N"},
                     {"l_lo", Kind::integer, 2, "smallest sector momentum"},
                     {"l_hi", Kind::integer, 6, "largest sector momentum"}},
                    run_delta_check});
    return cmds;
}

// ---------------------------------------------------------------------------
// Dispatch
// ---------------------------------------------------------------------------

inline json resolve_config(const Command& cmd, const std::optional<json>& file, const std::map<std::string, std::string>& flags,
                           std::optional<std::uint64_t> env_seed) {
    const Param seed_param{"seed", Kind::unsigned_integer, 1, "random seed"};
    json cfg = json::object();
    cfg["seed"] = seed_param.fallback;
    for (const auto& p : cmd.params) cfg[p.key] = p.fallback;
    auto find = [&](const std::string& key) -> const Param* {
        if (key == "seed") return &seed_param;
        for (const auto& p : cmd.params)
            if (p.key == key) return &p;
        return nullptr;
    };
    if (file) {
        if (!file->is_object()) throw InputError("config: expected a JSON object");
        for (const auto& [k, v] : file->items()) {
            const Param* p = find(k);
            if (!p) throw InputError("config: unknown key '" + k + "' for " + cmd.name);
            cfg[k] = normalize_config_value(*p, v);
        }
    }
    if (env_seed) cfg["seed"] = *env_seed;
    for (const auto& [k, v] : flags) cfg[k] = parse_flag_value(*find(k), v);
    return cfg;
}

inline std::optional<std::uint64_t> env_seed() {
    const char* s = std::getenv("LAUGHLIN_LAB_SEED");
    if (!s || !*s) return std::nullopt;
    return laughlin::cli::detail::parse_unsigned(s, "LAUGHLIN_LAB_SEED");
}

inline int dispatch(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    const auto cmds = commands();
    CLI::App app{"laughlin_lab: Laughlin-state numerics", "laughlin_lab"};
    app.require_subcommand(1);
    app.set_version_flag("--version", io::kVersion);

    struct Bound {
        const Command* cmd;
        CLI::App* sub;
        std::string config, out, out_dir = ".", seed;
        std::size_t threads = 0;
        std::deque<std::pair<const Param*, std::string>> values;
        std::vector<std::pair<const Param*, CLI::Option*>> options;
        CLI::Option* seed_opt = nullptr;
    };
    std::deque<Bound> bound;
    for (const auto& cmd : cmds) {
        auto& b = bound.emplace_back();
        b.cmd = &cmd;
        b.sub = app.add_subcommand(cmd.name, cmd.description);
        b.sub->set_help_flag("--help", "print this help and exit");
        b.sub->add_option("--config", b.config, "JSON config file or a previous run manifest");
        b.sub->add_option("--out", b.out, "primary output file (default " + cmd.default_out + ")");
        b.sub->add_option("--out-dir", b.out_dir, "directory for all outputs")->capture_default_str();
        b.sub->add_option("--threads", b.threads, "worker threads (default: logical cores)");
        b.seed_opt = b.sub->add_option("--seed", b.seed, "random seed (overrides config and LAUGHLIN_LAB_SEED)");
        for (const auto& p : cmd.params) {
            auto& slot = b.values.emplace_back(&p, std::string());
            std::string help = p.help + " [" + (p.fallback.is_string() ? p.fallback.get<std::string>() : p.fallback.dump()) + "]";
            auto* opt = b.sub->add_option(p.flag(), slot.second, help);
            if (p.kind == Kind::boolean) opt->expected(0, 1);
            b.options.emplace_back(&p, opt);
        }
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        app.exit(e, out, err);
        return 0;
    } catch (const CLI::CallForAllHelp& e) {
        app.exit(e, out, err);
        return 0;
    } catch (const CLI::CallForVersion& e) {
        app.exit(e, out, err);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        for (auto* s : app.get_subcommands())
            err << s->help();
        if (app.get_subcommands().empty()) err << app.help();
        return 2;
    }

    Bound* b = nullptr;
    for (auto& x : bound)
        if (x.sub->parsed()) b = &x;
    if (!b) return 2;
    const Command& cmd = *b->cmd;

    io::RunManifest manifest;
    manifest.subcommand = cmd.name;
    Context ctx{Config(json::object())};
    ctx.log = &err;
    try {
        std::optional<json> file;
        std::string out_name;
        if (!b->config.empty()) {
            if (!fs::exists(b->config)) throw InputError("config file not found: " + b->config);
            json j = io::read_json_file(b->config);
            if (io::RunManifest::looks_like_manifest(j)) {
                if (j.at("subcommand") != cmd.name)
                    throw InputError("manifest is for '" + j.at("subcommand").get<std::string>() + "', not '" + cmd.name + "'");
                out_name = j.value("primary_output", std::string());
                j = j.at("config");
            }
            file = std::move(j);
        }
        std::map<std::string, std::string> flags;
        for (const auto& [p, opt] : b->options)
            if (opt->count() > 0) flags[p->key] = opt->results().empty() ? std::string() : opt->as<std::string>();
        if (b->seed_opt->count() > 0) flags["seed"] = b->seed;
        const json cfg = resolve_config(cmd, file, flags, env_seed());
        ctx.cfg = Config(cfg);
        ctx.seed = cfg.at("seed").get<std::uint64_t>();
        ctx.threads = b->threads > 0 ? b->threads : default_thread_count();
        ctx.out_dir = b->out_dir;
        ctx.out = !b->out.empty() ? b->out : (!out_name.empty() ? out_name : cmd.default_out);
        fs::create_directories(ctx.out_dir);
        manifest.config = cfg;
        manifest.seed = ctx.seed;
        manifest.threads = ctx.threads;
        manifest.primary_output = ctx.out;
    } catch (const InputError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }

    const auto t0 = std::chrono::steady_clock::now();
    int code = 0;
    try {
        code = cmd.body(ctx);
    } catch (const InputError& e) {
        err << "error: " << e.what() << "\n";
        code = 2;
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << "\n";
        code = 3;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        code = 1;
    }
    manifest.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    manifest.outputs = ctx.outputs;
    manifest.exit_code = code;
    try {
        io::write_json_file(ctx.out_dir / io::manifest_name(cmd.name), manifest.to_json());
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return code == 0 ? 2 : code;
    }
    if (code == 0) out << cmd.name << ": wrote " << ctx.outputs.size() << " files to " << ctx.out_dir.string() << "\n";
    return code;
}

}  // namespace laughlin::cli
