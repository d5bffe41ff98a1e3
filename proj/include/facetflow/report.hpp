#pragma once

#include <string>
#include <vector>

namespace facetflow {

// progress record attached to every solve
struct SolveReport {
    std::string stage;
    int iterations = 0;
    bool converged = false;
    double residual_final = 0.0;
    double energy_final = 0.0;
    std::vector<double> residual_history;  // relative residual per iteration
    std::vector<double> energy_history;    // nonlinear solves only
};

}  // namespace facetflow
