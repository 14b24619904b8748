#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "nsblow/analysis.hpp"
#include "nsblow/csv.hpp"

namespace nsblow {

/// Decay fits for every energy_spectral_3 snapshot with t >= t_min; snapshots with too few maxima are skipped.
inline std::vector<DecayFit> decay_fits_from_run(const std::filesystem::path& dir, double k3_lo, double t_min = 0.0,
                                                 std::vector<std::string>* skipped = nullptr) {
    std::vector<DecayFit> fits;
    for (const MarginalProfile& m : read_marginals(dir / "energy_spectral_3.csv", 3, Space::spectral)) {
        if (m.t < t_min) continue;
        try {
            fits.push_back(fit_decay_rate(m, k3_lo));
        } catch (const NumericError& e) {
            if (skipped) skipped->push_back("t=" + std::to_string(m.t) + ": " + e.what());
        }
    }
    return fits;
}

/// Keeps the trailing run of fits whose slopes strictly increase toward zero.
inline std::vector<DecayFit> monotone_tail(const std::vector<DecayFit>& fits) {
    if (fits.empty()) return {};
    std::size_t start = fits.size() - 1;
    while (start > 0 && fits[start - 1].slope < fits[start].slope && fits[start - 1].slope < 0.0) --start;
    return {fits.begin() + static_cast<std::ptrdiff_t>(start), fits.end()};
}

}  // namespace nsblow
