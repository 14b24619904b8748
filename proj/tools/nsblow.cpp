// nsblow: command-line front end for the blow-up simulator and its analysis tools.
//
// Exit codes: 0 success, 1 unexpected failure, 2 configuration or usage error,
// 3 numerical failure, 4 I/O failure.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "nsblow/analysis.hpp"
#include "nsblow/analysis_io.hpp"
#include "nsblow/config.hpp"
#include "nsblow/csv.hpp"
#include "nsblow/initcond.hpp"
#include "nsblow/run.hpp"
#include "nsblow/theory.hpp"

namespace {

using namespace nsblow;

constexpr int kExitOk = 0;
constexpr int kExitOther = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitIo = 4;

int exit_code(const Error& e) {
    switch (e.kind()) {
        case ErrorKind::config: return kExitConfig;
        case ErrorKind::numeric: return kExitNumeric;
        case ErrorKind::io: return kExitIo;
    }
    return kExitOther;
}

std::vector<double> parse_list(const std::string& s) {
    std::vector<double> out;
    for (const auto& cell : split_csv_line(s)) {
        try {
            out.push_back(std::stod(cell));
        } catch (const std::exception&) {
            throw ConfigError("not a number in list: '" + cell + "'");
        }
    }
    if (out.empty()) throw ConfigError("empty list");
    return out;
}

/// "lo:hi,lo:hi,lo:hi" in units of h.
GridSpec parse_tiny_grid(const std::string& s, double h) {
    const auto parts = split_csv_line(s);
    if (parts.size() != 3) throw ConfigError("--grid expects lo:hi,lo:hi,lo:hi");
    Index3 lo{}, hi{};
    for (int a = 0; a < 3; ++a) {
        const auto colon = parts[static_cast<std::size_t>(a)].find(':');
        if (colon == std::string::npos) throw ConfigError("--grid axis " + std::to_string(a + 1) + " lacks ':'");
        try {
            lo[a] = std::stoll(parts[static_cast<std::size_t>(a)].substr(0, colon));
            hi[a] = std::stoll(parts[static_cast<std::size_t>(a)].substr(colon + 1));
        } catch (const std::exception&) {
            throw ConfigError("--grid axis " + std::to_string(a + 1) + " is not integer");
        }
    }
    return GridSpec::from_multiples(lo, hi, h);
}

/// Reads the init.a echoed into a run's manifest (for the default k3_lo = 20a).
double run_a(const std::filesystem::path& dir) {
    std::ifstream is(dir / "manifest.json");
    if (!is) throw IoError("cannot open " + (dir / "manifest.json").string());
    const auto m = nlohmann::json::parse(is, nullptr, false);
    if (m.is_discarded()) throw IoError("malformed manifest.json");
    return m.at("config").at("init").at("a").get<double>();
}

void write_text(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream os(path, std::ios::trunc);
    os << text;
    if (!os) throw IoError("cannot write " + path);
}

CriticalTimeEstimate tau_from_run(const std::filesystem::path& dir, double k3_lo, double t_min, std::vector<DecayFit>* used) {
    std::vector<std::string> skipped;
    std::vector<DecayFit> fits = decay_fits_from_run(dir, k3_lo, t_min, &skipped);
    for (const auto& s : skipped) std::cerr << "skipped snapshot " << s << '\n';
    fits = monotone_tail(fits);
    if (used) *used = fits;
    return estimate_critical_time(fits);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Simulator and analysis toolkit for complex blow-up solutions of the 3-D Navier-Stokes equations in Fourier space.\n"
                 "Exit codes: 0 ok, 1 unexpected, 2 config/usage, 3 numeric, 4 I/O. NSBLOW_THREADS sets the FFT worker count."};
    app.require_subcommand(1);

    // run
    auto* run = app.add_subcommand("run", "integrate from the configured initial data");
    std::string config_path, resume_ckpt, out_dir;
    bool quiet = false;
    run->add_option("--config", config_path, "config file (sections grid/init/solver/output)")->required();
    run->add_option("--resume", resume_ckpt, "checkpoint to continue from");
    run->add_option("--out", out_dir, "override output.dir");
    run->add_flag("--quiet", quiet, "no progress log");

    // resume
    auto* res = app.add_subcommand("resume", "continue a run from its latest (or a given) checkpoint");
    std::string res_dir, res_ckpt;
    res->add_option("--run", res_dir, "run directory")->required();
    res->add_option("--checkpoint", res_ckpt, "checkpoint file (default: latest in the run directory)");
    res->add_flag("--quiet", quiet, "no progress log");

    // analyze
    auto* ana = app.add_subcommand("analyze", "fit decay rates, critical time or power laws");
    ana->require_subcommand(1);
    std::string ana_dir, ana_out;
    double k3_lo = -1.0, t_min = 0.0;
    auto* decay = ana->add_subcommand("decay", "decay rate of the k3 energy marginal per snapshot");
    auto* tau = ana->add_subcommand("tau", "critical time from the decay-rate trend");
    auto* pl = ana->add_subcommand("powerlaw", "exponent of a diverging total against 1/(tau - t)");
    for (auto* sc : {decay, tau}) {
        sc->add_option("--run", ana_dir, "run directory")->required();
        sc->add_option("--k3-lo", k3_lo, "lowest k3 used for maxima (default 20a)");
        sc->add_option("--t-min", t_min, "ignore snapshots before this time");
        sc->add_option("--out", ana_out, "output CSV (default stdout)");
    }
    std::string pl_csv, pl_column = "S";
    double pl_tau = std::nan(""), win_lo = -std::numeric_limits<double>::infinity(), win_hi = std::nan("");
    pl->add_option("--run", ana_dir, "run directory (uses run.csv)");
    pl->add_option("--csv", pl_csv, "any CSV with a t column (e.g. tail output)");
    pl->add_option("--column", pl_column, "column to fit (default S)");
    pl->add_option("--tau", pl_tau, "critical time (default: estimated from the run)");
    pl->add_option("--k3-lo", k3_lo, "k3 threshold for the tau estimate (default 20a)");
    pl->add_option("--window-lo", win_lo, "first time in the fit window");
    pl->add_option("--window-hi", win_hi, "last time in the fit window (default: last sample before tau)");
    pl->add_option("--out", ana_out, "output CSV (default stdout)");

    // tail
    auto* tail = app.add_subcommand("tail", "energy and enstrophy of the asymptotic tail series");
    std::string tail_type = "I", tail_times;
    TailSeriesParams tp;
    tail->add_option("--type", tail_type, "I or II")->check(CLI::IsMember({"I", "II"}));
    tail->add_option("--kappa", tp.kappa, "log-derivative of Lambda at tau");
    tail->add_option("--tau", tp.tau, "critical time");
    tail->add_option("--p0", tp.p0, "first retained term");
    tail->add_option("--pmax", tp.p_max, "truncation");
    tail->add_option("--a", tp.a, "lobe spacing");
    tail->add_option("--const", tp.constant, "overall prefactor");
    tail->add_option("--times", tail_times, "comma-separated times < tau")->required();
    tail->add_option("--out", ana_out, "output CSV (default stdout)");

    // fixedpoint
    auto* fp = app.add_subcommand("fixedpoint", "least-squares amplitude and residual of the radial fixed point");
    FixedPointParams fpp;
    fp->add_option("--resolution", fpp.resolution, "quadrature nodes per dimension")->check(CLI::PositiveNumber);
    fp->add_option("--test-points", fpp.test_points, "test abscissae per axis");
    fp->add_option("--c", fpp.c, "amplitude at which to report the residual");

    // oracle
    auto* orc = app.add_subcommand("oracle", "solver against the truncated power series on a tiny grid");
    std::string orc_grid;
    double orc_a = 4.0, orc_r = 3.0, orc_energy = 0.0, orc_t = 1e-3;
    std::uint64_t orc_steps = 200;
    orc->add_option("--grid", orc_grid, "lo:hi,lo:hi,lo:hi (integers, h = 1)")->required();
    orc->add_option("--a", orc_a, "initial-data centre");
    orc->add_option("--r", orc_r, "initial-data radius");
    orc->add_option("--energy", orc_energy, "target initial energy (default: unit amplitude)");
    orc->add_option("--t", orc_t, "largest comparison time (halved twice)");
    orc->add_option("--steps", orc_steps, "solver steps per comparison");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (*run || *res) {
            RunConfig cfg;
            std::optional<std::filesystem::path> ck;
            if (*run) {
                cfg = load_config(config_path);
                if (!out_dir.empty()) cfg.output.dir = out_dir;
                if (!resume_ckpt.empty()) ck = resume_ckpt;
            } else {
                cfg = load_config((std::filesystem::path(res_dir) / "config.toml").string());
                cfg.output.dir = res_dir;
                ck = res_ckpt.empty() ? latest_checkpoint(res_dir) : std::filesystem::path(res_ckpt);
            }
            RunSession session(cfg, quiet ? nullptr : &std::cerr);
            const RunSummary s = session.execute(ck);
            std::cout << "termination: " << to_string(s.termination) << "\nlast_step: " << s.last_step
                      << "\nlast_reliable_time: " << fmt(s.last_time) << "\noutput: " << session.dir().string() << '\n';
            if (!s.message.empty()) std::cout << "message: " << s.message << '\n';
            return kExitOk;
        }

        if (*ana) {
            std::ostringstream os;
            if (*decay || *tau) {
                const double lo = k3_lo >= 0.0 ? k3_lo : 20.0 * run_a(ana_dir);
                if (*decay) {
                    std::vector<std::string> skipped;
                    const auto fits = decay_fits_from_run(ana_dir, lo, t_min, &skipped);
                    for (const auto& s : skipped) std::cerr << "skipped snapshot " << s << '\n';
                    os << "t,t_1e7,k3_lo,slope,slope_stderr,intercept,r_squared,n_points\n";
                    for (const auto& f : fits)
                        os << fmt(f.t) << ',' << fmt(f.t * 1e7) << ',' << fmt(lo) << ',' << fmt(f.slope) << ',' << fmt(f.slope_stderr) << ','
                           << fmt(f.intercept) << ',' << fmt(f.r_squared) << ',' << f.n_points << '\n';
                } else {
                    std::vector<DecayFit> used;
                    const auto e = tau_from_run(ana_dir, lo, t_min, &used);
                    os << "k3_lo,n_fits,window_lo,window_hi,tau_star,tau_star_1e7,stderr,r_squared,overestimate\n";
                    os << fmt(lo) << ',' << e.n_fits << ',' << fmt(e.window_lo) << ',' << fmt(e.window_hi) << ',' << fmt(e.tau_star) << ','
                       << fmt(e.tau_star * 1e7) << ',' << fmt(e.stderr) << ',' << fmt(e.r_squared) << ',' << (e.overestimate ? 1 : 0) << '\n';
                }
            } else {
                if (pl_csv.empty() && ana_dir.empty()) throw ConfigError("powerlaw needs --run or --csv");
                const std::filesystem::path src = pl_csv.empty() ? std::filesystem::path(ana_dir) / "run.csv" : std::filesystem::path(pl_csv);
                const CsvTable table = read_csv(src);
                const auto t = table.values("t");
                const auto q = table.values(pl_column);
                double tau_star = pl_tau;
                if (std::isnan(tau_star)) {
                    if (ana_dir.empty()) throw ConfigError("--tau is required without --run");
                    const double lo = k3_lo >= 0.0 ? k3_lo : 20.0 * run_a(ana_dir);
                    tau_star = tau_from_run(ana_dir, lo, 0.0, nullptr).tau_star;
                }
                double hi = win_hi;
                if (std::isnan(hi)) {
                    hi = -std::numeric_limits<double>::infinity();
                    for (double x : t)
                        if (x < tau_star) hi = std::max(hi, x);
                }
                const PowerLawFit f = fit_power_law(t, q, tau_star, win_lo, hi);
                os << "column,tau_star,window_lo,window_hi,n_points,alpha,alpha_stderr,log_prefactor,r_squared\n";
                os << pl_column << ',' << fmt(tau_star) << ',' << fmt(f.window_lo) << ',' << fmt(f.window_hi) << ',' << f.n_points << ','
                   << fmt(f.alpha) << ',' << fmt(f.alpha_stderr) << ',' << fmt(f.log_prefactor) << ',' << fmt(f.r_squared) << '\n';
            }
            write_text(ana_out, os.str());
            return kExitOk;
        }

        if (*tail) {
            tp.sol_type = tail_type == "I" ? SolutionType::I : SolutionType::II;
            const auto times = parse_list(tail_times);
            const auto rows = tail_energy_enstrophy(times, tp);
            std::ostringstream os;
            os << "t,tau_minus_t,E,S\n";
            for (const auto& r : rows) os << fmt(r.t) << ',' << fmt(tp.tau - r.t) << ',' << fmt(r.energy) << ',' << fmt(r.enstrophy) << '\n';
            write_text(ana_out, os.str());
            return kExitOk;
        }

        if (*fp) {
            const FixedPointResult r = fixed_point_residual(fpp);
            FixedPointParams twice = fpp;
            twice.resolution *= 2;
            const FixedPointResult r2 = fixed_point_residual(twice);
            std::cout << "resolution,c_star,residual,residual_at_c,c_star_doubled,relative_shift\n"
                      << fpp.resolution << ',' << fmt(r.c_star) << ',' << fmt(r.residual) << ',' << fmt(r.residual_at_c) << ','
                      << fmt(r2.c_star) << ',' << fmt(std::abs(r2.c_star / r.c_star - 1.0)) << '\n';
            return kExitOk;
        }

        if (*orc) {
            const GridSpec g = parse_tiny_grid(orc_grid, 1.0);
            InitialDataSpec spec;
            spec.a = orc_a;
            spec.r = orc_r;
            spec.C = 1.0;
            if (orc_energy > 0.0) {
                spec.target_energy = orc_energy;
                spec = calibrate_amplitude(spec, g);
            }
            const SpectralField<double> v0 = build_initial_field(spec, g);
            const SeriesOracle oracle(v0, SeriesOracleSpec{});
            std::cout << "t,steps,rel_err_1term,rel_err_2term,rel_err_3term\n";
            std::vector<double> e3;
            for (int i = 0; i < 3; ++i) {
                const double t = orc_t / std::pow(2.0, i);
                const SeriesComparison c = series_comparison(v0, t, orc_steps, oracle);
                e3.push_back(c.rel_error[2]);
                std::cout << fmt(t) << ',' << orc_steps << ',' << fmt(c.rel_error[0]) << ',' << fmt(c.rel_error[1]) << ','
                          << fmt(c.rel_error[2]) << '\n';
            }
            std::cout << "observed_order_3term," << fmt(std::log2(e3[1] / e3[2])) << '\n';
            return kExitOk;
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitOther;
    }
    return kExitOther;
}
