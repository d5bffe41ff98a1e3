#pragma once

// Named analytic fields used as forcings and initial states.  A preset name
// may carry a trailing ":<value>" argument where noted.

#include <cmath>
#include <stdexcept>
#include <string>

#include "facetflow/grid.hpp"

namespace facetflow {

// constant:<v>        uniform field of value v
// gaussian-bump[:amp] centered bump, width 0.12 min(lx, ly), default amp 4
// cosine-ridge[:amp]  one arch across x, constant in y, default amp 1
// two-facet-ramp[:amp] smoothed step between -amp and +amp, default amp 1
inline ScalarField make_preset(const std::string& name, const Grid& g) {
    std::string base = name;
    double arg = 0.0;
    bool has_arg = false;
    if (auto pos = name.find(':'); pos != std::string::npos) {
        base = name.substr(0, pos);
        std::string tail = name.substr(pos + 1);
        char* end = nullptr;
        arg = std::strtod(tail.c_str(), &end);
        if (tail.empty() || !end || *end != '\0')
            throw std::invalid_argument("preset: bad argument in '" + name + "'");
        has_arg = true;
    }

    ScalarField f(g);
    if (base == "constant") {
        if (!has_arg) throw std::invalid_argument("preset: constant needs a value, e.g. constant:0.7");
        for (int k = 0; k < f.size(); ++k) f[k] = arg;
    } else if (base == "gaussian-bump") {
        double amp = has_arg ? arg : 4.0;
        double w = 0.12 * std::min(g.lx, g.ly);
        double cx = 0.5 * g.lx, cy = 0.5 * g.ly;
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                double dx = g.xc(i) - cx, dy = g.yc(j) - cy;
                f(i, j) = amp * std::exp(-(dx * dx + dy * dy) / (2.0 * w * w));
            }
    } else if (base == "cosine-ridge") {
        double amp = has_arg ? arg : 1.0;
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) f(i, j) = amp * std::cos(M_PI * g.xc(i) / g.lx);
    } else if (base == "two-facet-ramp") {
        double amp = has_arg ? arg : 1.0;
        double w = 0.1 * g.lx;
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i)
                f(i, j) = amp * std::tanh((g.xc(i) - 0.5 * g.lx) / w);
    } else {
        throw std::invalid_argument("preset: unknown name '" + name + "'");
    }
    return f;
}

}  // namespace facetflow
