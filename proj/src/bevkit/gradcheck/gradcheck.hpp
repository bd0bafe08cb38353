#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace bevkit::gradcheck {

struct GradCheckConfig {
    int instances = 20;
    uint64_t seed = 0xC4EC4ull;
    double fd_step = 1e-4;
    double tol_abs = 1e-5;
    double tol_rel = 1e-3;
};

struct TermReport {
    std::string term;
    uint64_t checks = 0;
    double max_abs_dev = 0.0;
    double max_rel_dev = 0.0;
    bool pass = true;
};

struct GradCheckReport {
    std::vector<TermReport> terms;
    bool pass = true;
    double wall_seconds = 0.0;
};

// Compares every analytic gradient against central finite differences on
// random small instances, evaluated entirely in double precision.
GradCheckReport run_gradcheck(const GradCheckConfig& cfg);

std::string report_to_json(const GradCheckReport& report);
std::string report_to_text(const GradCheckReport& report);

} // namespace bevkit::gradcheck
