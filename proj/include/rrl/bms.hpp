#pragma once

#include <span>
#include <vector>

#include "rrl/rng.hpp"

namespace rrl {

// Random-effects group model comparison: a Dirichlet prior over model
// frequencies fitted by fixed-point variational updates, exceedance
// probabilities by Dirichlet Monte Carlo, and protection through the
// Bayes-omnibus-risk mixture with the equal-frequency null.
struct BmsResult {
    std::vector<double> alpha;           // Dirichlet posterior counts
    std::vector<double> model_freq;      // expected frequencies
    std::vector<double> exceedance;      // P(model most frequent)
    std::vector<double> pxp;             // protected exceedance
    double bor = 0.0;                    // P(equal frequencies | data)
};

// log_evidences: one row per subject, one column per model (row-major).
BmsResult group_bms_pxp(std::span<const double> log_evidences, int n_subjects, int n_models,
                        const Stream& rng, int n_mc = 100000);

}  // namespace rrl
