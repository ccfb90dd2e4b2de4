#pragma once

// Powell's direction-set method with golden-section line searches, written
// for maximization of a possibly noisy objective. The result is the best
// point ever evaluated, not the last iterate, so a run that stops early or
// wanders on noise still returns its best sample.

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace chbell {

struct PowellOptions {
    int max_iterations = 50;
    double tolerance = 1e-6;     // stop when one sweep improves the metric by less
    double initial_step = 0.3;   // bracketing step along each direction
    double line_tolerance = 1e-3;
    int max_line_evaluations = 60;
};

struct PowellResult {
    std::vector<double> x;
    double value = 0.0;
    int iterations = 0;
    std::uint64_t evaluations = 0;
    bool converged = false;
};

using Objective = std::function<double(std::span<const double>)>;

PowellResult powell_maximize(const Objective& f, std::vector<double> start, const PowellOptions& options = {});

} // namespace chbell
