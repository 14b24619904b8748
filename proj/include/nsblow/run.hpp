#pragma once

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "nsblow/checkpoint.hpp"
#include "nsblow/config.hpp"
#include "nsblow/diagnostics.hpp"
#include "nsblow/initcond.hpp"
#include "nsblow/solver.hpp"

namespace nsblow {

inline constexpr const char* kCodeVersion = "nsblow 1.0.0";

enum class Termination { t_end, corrector_divergence, nonfinite };

inline const char* to_string(Termination t) {
    switch (t) {
        case Termination::t_end: return "t_end";
        case Termination::corrector_divergence: return "corrector_divergence";
        case Termination::nonfinite: return "nonfinite";
    }
    return "unknown";
}

struct RunSummary {
    Termination termination = Termination::t_end;
    std::string message;
    std::uint64_t last_step = 0;
    double last_time = 0.0;
    double E0 = 0.0;
    double C = 0.0;
    std::vector<std::string> checkpoints;
};

/// Round-trip decimal formatting shared by every CSV writer.
inline std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline std::string checkpoint_name(std::uint64_t step) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "ckpt_%012llu.lsns", static_cast<unsigned long long>(step));
    return buf;
}

inline const char* kRunCsvHeader =
    "step,t,t_1e7,E,S,E_q,S_q,max_S3_location,support_fraction,boundary_fraction,solenoidal_defect,corrector_iterations,"
    "corrector_residual";
inline const char* kMarginalCsvHeader = "step,t,t_1e7,axis_value,density";

namespace detail {

/// Keeps the header and rows whose leading step column is <= max_step.
inline void truncate_csv(const std::filesystem::path& path, std::uint64_t max_step) {
    if (!std::filesystem::exists(path)) return;
    std::ifstream is(path);
    std::vector<std::string> keep;
    std::string line;
    bool header = true;
    while (std::getline(is, line)) {
        if (header) {
            keep.push_back(line);
            header = false;
            continue;
        }
        const auto comma = line.find(',');
        if (comma == std::string::npos) continue;
        if (std::stoull(line.substr(0, comma)) <= max_step) keep.push_back(line);
    }
    is.close();
    std::ofstream os(path, std::ios::trunc);
    for (const auto& l : keep) os << l << '\n';
    if (!os) throw IoError("cannot rewrite " + path.string());
}

inline std::string utc_now() {
    const std::time_t now = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    return buf;
}

}  // namespace detail

/**
 * Drives one simulation and owns its output directory:
 *   run.csv                         one TimeSeriesRecord row per cadence tick and at termination
 *   {quantity}_{space}_{axis}.csv   long-format marginals (step, t, t_1e7, axis_value, density)
 *   ckpt_<step>.lsns                checkpoints
 *   config.toml, manifest.json      launch data and run metadata
 * Every CSV row depends only on the solver state, so resumed runs reproduce
 * straight-through output byte for byte.
 */
class RunSession {
public:
    explicit RunSession(RunConfig cfg, std::ostream* log = nullptr) : cfg_(std::move(cfg)), log_(log), dir_(cfg_.output.dir) {}

    const std::filesystem::path& dir() const { return dir_; }

    /// Runs from t = 0, or from a checkpoint when `resume` is set.
    RunSummary execute(const std::optional<std::filesystem::path>& resume = std::nullopt) {
        const GridSpec grid = cfg_.grid_spec();
        const InitialDataSpec init = calibrate_amplitude(cfg_.init, grid);
        SpectralField<double> v0 = build_initial_field(init, grid);
        summary_.E0 = totals(v0).energy;
        summary_.C = init.C;
        start_time_ = detail::utc_now();

        std::error_code ec;
        std::filesystem::create_directories(dir_, ec);
        if (ec) throw IoError("cannot create output directory " + dir_.string() + ": " + ec.message());

        SpectralField<double> v = v0;
        std::uint64_t step = 0;
        if (resume) {
            Checkpoint ck = read_checkpoint(*resume);
            if (!(ck.field.grid() == grid)) throw ConfigError("checkpoint grid does not match the configured grid");
            v = std::move(ck.field);
            step = ck.step;
            resumed_from_ = resume->string();
            for (const auto& f : std::filesystem::directory_iterator(dir_))
                if (f.path().extension() == ".csv") detail::truncate_csv(f.path(), step);
            if (!std::filesystem::exists(dir_ / "run.csv")) throw IoError("resume: run.csv missing in " + dir_.string());
        } else {
            for (const auto& f : std::filesystem::directory_iterator(dir_))
                if (f.path().extension() == ".csv" || f.path().extension() == ".lsns") std::filesystem::remove(f.path());
            write_header(dir_ / "run.csv", kRunCsvHeader);
        }
        {
            std::ofstream os(dir_ / "config.toml", std::ios::trunc);
            os << to_config_text(cfg_);
            if (!os) throw IoError("cannot write config.toml");
        }

        Stepper<double> stepper(grid, cfg_.solver);
        const std::uint64_t n_steps = cfg_.total_steps();
        StepReport last{};
        std::uint64_t last_recorded = resume ? step : std::numeric_limits<std::uint64_t>::max();
        if (!resume) {
            emit(v, step, last);
            last_recorded = step;
        }
        summary_.termination = Termination::t_end;
        const std::uint64_t first_step = step;
        while (step < n_steps) {
            try {
                last = stepper.step(v);
            } catch (const StepFailure& f) {
                summary_.termination = f.kind() == StepFailureKind::nonfinite ? Termination::nonfinite : Termination::corrector_divergence;
                summary_.message = f.what();
                break;
            }
            ++step;
            v.set_t(static_cast<double>(step) * cfg_.solver.dt);
            if (step % cfg_.output.cadence == 0) {
                emit(v, step, last);
                last_recorded = step;
            }
            if (cfg_.output.checkpoint_every && step % cfg_.output.checkpoint_every == 0) save_checkpoint(v, step);
        }
        // the terminal state always gets a row, marginals, an x-space snapshot and a checkpoint
        if (step != first_step || !resume) {
            if (last_recorded != step) emit(v, step, last, true);
            else if (step % cfg_.marginal_cadence() != 0) emit_marginals(v, step);
            if (cfg_.output.physical && last_physical_ != step) emit_physical(v, step);
            if (last_checkpoint_ != step) save_checkpoint(v, step);
        }

        summary_.last_step = step;
        summary_.last_time = v.t();
        write_manifest();
        final_state_ = std::move(v);
        return summary_;
    }

    const SpectralField<double>& final_state() const { return final_state_; }

private:
    static void write_header(const std::filesystem::path& p, const char* header) {
        std::ofstream os(p, std::ios::trunc);
        os << header << '\n';
        if (!os) throw IoError("cannot write " + p.string());
    }

    std::ofstream append(const std::string& name, const char* header) {
        const auto p = dir_ / name;
        const bool fresh = !std::filesystem::exists(p);
        std::ofstream os(p, std::ios::app);
        if (!os) throw IoError("cannot open " + p.string());
        if (fresh) os << header << '\n';
        return os;
    }

    void write_profile(const std::string& quantity, const MarginalProfile& m, std::uint64_t step) {
        const std::string name = quantity + "_" + to_string(m.space) + "_" + std::to_string(m.axis) + ".csv";
        std::ofstream os = append(name, kMarginalCsvHeader);
        const std::string head = std::to_string(step) + "," + fmt(m.t) + "," + fmt(m.t * 1e7) + ",";
        for (std::size_t i = 0; i < m.abscissa.size(); ++i) os << head << fmt(m.abscissa[i]) << ',' << fmt(m.density[i]) << '\n';
        if (!os) throw IoError("write failed: " + name);
    }

    void emit(const SpectralField<double>& v, std::uint64_t step, const StepReport& rep, bool final = false) {
        TimeSeriesRecord r = make_record(v, step);
        r.corrector_iterations = rep.corrector_iterations;
        r.corrector_residual = rep.final_residual;
        {
            std::ofstream os = append("run.csv", kRunCsvHeader);
            os << r.step << ',' << fmt(r.t) << ',' << fmt(r.t * 1e7) << ',' << fmt(r.E) << ',' << fmt(r.S) << ',' << fmt(r.E_q) << ','
               << fmt(r.S_q) << ',' << fmt(r.max_S3_location) << ',' << fmt(r.support_fraction) << ',' << fmt(r.boundary_fraction)
               << ',' << fmt(solenoidal_defect(v)) << ',' << r.corrector_iterations << ',' << fmt(r.corrector_residual) << '\n';
            if (!os) throw IoError("write failed: run.csv");
        }
        if (log_)
            *log_ << "step " << step << " t=" << fmt(r.t) << " E=" << r.E << " S=" << r.S << " iters=" << r.corrector_iterations << std::endl;
        const bool marg = final || step % cfg_.marginal_cadence() == 0;
        const bool phys = cfg_.output.physical && cfg_.output.physical_every && step % cfg_.output.physical_every == 0;
        if (marg) emit_marginals(v, step);
        if (phys) emit_physical(v, step);
    }

    void emit_marginals(const SpectralField<double>& v, std::uint64_t step) {
        const Densities d = densities(v);
        for (int axis : {1, 3}) {
            write_profile("energy", marginal(d.grid, d.e, axis, v.t()), step);
            write_profile("enstrophy", marginal(d.grid, d.s, axis, v.t()), step);
        }
    }

    void emit_physical(const SpectralField<double>& v, std::uint64_t step) {
        const XMesh xm = default_xmesh(v.grid(), cfg_.init.a);
        const VorticityFields vf = vorticity_and_stretching(v, xm, summary_.E0);
        const PhysicalField u = to_physical(v, xm);
        const std::vector<double> e = energy_density(u);
        for (int axis : {1, 3}) write_profile("energy", physical_marginal(xm, e, axis, v.t()), step);
        write_profile("enstrophy", vf.S3, step);
        write_profile("stretching", vf.W3, step);
        last_physical_ = step;
    }

    void save_checkpoint(const SpectralField<double>& v, std::uint64_t step) {
        write_checkpoint(dir_ / checkpoint_name(step), v, step);
        last_checkpoint_ = step;
    }

    void write_manifest() {
        nlohmann::ordered_json m;
        m["code_version"] = kCodeVersion;
        m["config_file"] = "config.toml";
        nlohmann::ordered_json c;
        c["grid"] = {{"k_min", cfg_.grid.k_min}, {"k_max", cfg_.grid.k_max}, {"h", cfg_.grid.h}};
        c["init"] = {{"a", cfg_.init.a}, {"r", cfg_.init.r}, {"sign", cfg_.init.sign}, {"target_energy", cfg_.init.target_energy},
                     {"type", to_string(cfg_.init.type())}};
        c["solver"] = {{"dt", cfg_.solver.dt}, {"tol", cfg_.solver.tol}, {"max_corrector_iters", cfg_.solver.max_corrector_iters},
                       {"nonlinear", cfg_.solver.nonlinear_enabled}, {"t_end", cfg_.t_end}};
        c["output"] = {{"cadence", cfg_.output.cadence}, {"marginal_every", cfg_.output.marginal_every},
                       {"physical_every", cfg_.output.physical_every}, {"checkpoint_every", cfg_.output.checkpoint_every},
                       {"physical", cfg_.output.physical}, {"dir", cfg_.output.dir}};
        m["config"] = c;
        m["amplitude_C"] = summary_.C;
        m["E0"] = summary_.E0;
        m["start_time"] = start_time_;
        m["end_time"] = detail::utc_now();
        m["termination_reason"] = to_string(summary_.termination);
        m["message"] = summary_.message;
        m["last_step"] = summary_.last_step;
        m["last_reliable_time"] = summary_.last_time;
        if (!resumed_from_.empty()) m["resumed_from"] = resumed_from_;
        std::vector<std::string> ck;
        for (const auto& f : std::filesystem::directory_iterator(dir_))
            if (f.path().extension() == ".lsns") ck.push_back(f.path().filename().string());
        std::sort(ck.begin(), ck.end());
        summary_.checkpoints = ck;
        m["checkpoints"] = ck;
        std::ofstream os(dir_ / "manifest.json", std::ios::trunc);
        os << m.dump(2) << '\n';
        if (!os) throw IoError("cannot write manifest.json");
    }

    RunConfig cfg_;
    std::ostream* log_;
    std::filesystem::path dir_;
    RunSummary summary_;
    std::string start_time_;
    std::string resumed_from_;
    std::uint64_t last_physical_ = std::numeric_limits<std::uint64_t>::max();
    std::uint64_t last_checkpoint_ = std::numeric_limits<std::uint64_t>::max();
    SpectralField<double> final_state_;
};

/// Latest checkpoint in a run directory (names sort by step).
inline std::filesystem::path latest_checkpoint(const std::filesystem::path& dir) {
    std::vector<std::filesystem::path> ck;
    if (!std::filesystem::is_directory(dir)) throw IoError("not a run directory: " + dir.string());
    for (const auto& f : std::filesystem::directory_iterator(dir))
        if (f.path().extension() == ".lsns") ck.push_back(f.path());
    if (ck.empty()) throw IoError("no checkpoint in " + dir.string());
    std::sort(ck.begin(), ck.end());
    return ck.back();
}

}  // namespace nsblow
