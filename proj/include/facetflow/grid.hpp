#pragma once

// Cell-centered uniform grid, field containers, mirror-boundary discrete
// calculus, and quadrature-consistent norms.  All boundary conditions are
// zero-flux: ghost values mirror interior values, so boundary face fluxes
// vanish identically and flux_divergence always integrates to zero.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "facetflow/model.hpp"

namespace facetflow {

struct Grid {
    int nx = 0;
    int ny = 0;
    double lx = 0.0;
    double ly = 0.0;

    Grid() = default;
    Grid(int nx_, int ny_, double lx_, double ly_) : nx(nx_), ny(ny_), lx(lx_), ly(ly_) {
        if (nx < 4 || ny < 4)
            throw std::invalid_argument("grid: requires nx >= 4 and ny >= 4");
        if (static_cast<std::int64_t>(nx) * ny > (std::int64_t{1} << 22))
            throw std::invalid_argument("grid: cell count exceeds 2^22");
        if (!(lx > 0.0) || !(ly > 0.0))
            throw std::invalid_argument("grid: requires lx > 0 and ly > 0");
    }

    int ncells() const { return nx * ny; }
    double hx() const { return lx / nx; }
    double hy() const { return ly / ny; }
    double cell_area() const { return hx() * hy(); }
    double xc(int i) const { return (i + 0.5) * hx(); }
    double yc(int j) const { return (j + 0.5) * hy(); }
    int idx(int i, int j) const { return j * nx + i; }

    bool same_shape(const Grid& o) const {
        return nx == o.nx && ny == o.ny && lx == o.lx && ly == o.ly;
    }
};

class ScalarField {
  public:
    ScalarField() = default;
    explicit ScalarField(const Grid& g, double fill = 0.0) : g_(g), v_(g.ncells(), fill) {}

    const Grid& grid() const { return g_; }
    double& operator()(int i, int j) { return v_[g_.idx(i, j)]; }
    double operator()(int i, int j) const { return v_[g_.idx(i, j)]; }
    double& operator[](int k) { return v_[k]; }
    double operator[](int k) const { return v_[k]; }
    int size() const { return static_cast<int>(v_.size()); }
    std::vector<double>& data() { return v_; }
    const std::vector<double>& data() const { return v_; }

  private:
    Grid g_;
    std::vector<double> v_;
};

struct VectorField {
    VectorField() = default;
    explicit VectorField(const Grid& g) : grid(g), x(g, 0.0), y(g, 0.0) {}
    Grid grid;
    ScalarField x;
    ScalarField y;

    Vec2 at(int i, int j) const { return {x(i, j), y(i, j)}; }
};

struct TensorField {
    TensorField() = default;
    explicit TensorField(const Grid& g)
        : grid(g), a11(g, 0.0), a12(g, 0.0), a21(g, 0.0), a22(g, 0.0) {}
    Grid grid;
    ScalarField a11, a12, a21, a22;

    void set(int i, int j, const Mat2& m) {
        a11(i, j) = m.a11;
        a12(i, j) = m.a12;
        a21(i, j) = m.a21;
        a22(i, j) = m.a22;
    }
    Mat2 at(int i, int j) const { return {a11(i, j), a12(i, j), a21(i, j), a22(i, j)}; }
};

inline void require_same_grid(const Grid& a, const Grid& b, const char* where) {
    if (!a.same_shape(b)) throw std::invalid_argument(std::string(where) + ": grid mismatch");
}

// Cell-centered gradient by central differences.  At boundary cells the
// normal component uses the mirror image of the inward neighbor, which
// makes it exactly zero there: the discrete realization of grad u . n = 0.
inline VectorField gradient(const ScalarField& u) {
    const Grid& g = u.grid();
    VectorField out(g);
    const double ihx2 = 1.0 / (2.0 * g.hx());
    const double ihy2 = 1.0 / (2.0 * g.hy());
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            out.x(i, j) = (i == 0 || i == g.nx - 1) ? 0.0 : (u(i + 1, j) - u(i - 1, j)) * ihx2;
            out.y(i, j) = (j == 0 || j == g.ny - 1) ? 0.0 : (u(i, j + 1) - u(i, j - 1)) * ihy2;
        }
    }
    return out;
}

// Conservative discretization of div(coef grad v) with zero boundary flux.
//
// Diagonal entries: two-point differences across interior faces with the
// coefficient arithmetically averaged from the adjacent cells (the classic
// five-point form when coef is diagonal).
//
// Off-diagonal entries: corner quadrature on the quads spanned by four
// adjacent cell centers; at each corner the two one-sided edge differences
// give the face-level gradient reconstruction (the 6-cell neighborhood of
// a face) and the cell's own off-diagonal coefficient multiplies it.  The
// assembled bilinear form is symmetric, and together with the mirrored
// ghost layer it is a sum of pointwise quadratic forms of coef, so the
// operator is negative-semidefinite whenever coef is positive-definite.
inline ScalarField flux_divergence(const TensorField& coef, const ScalarField& v) {
    const Grid& g = v.grid();
    require_same_grid(coef.grid, g, "flux_divergence");
    const double hx = g.hx(), hy = g.hy();
    ScalarField out(g, 0.0);

    // symmetry of the per-cell tensor is a precondition; tolerate roundoff
    for (int k = 0; k < g.ncells(); ++k) {
        double scale = std::abs(coef.a12[k]) + std::abs(coef.a21[k]) + 1.0;
        if (std::abs(coef.a12[k] - coef.a21[k]) > 1e-12 * scale)
            throw std::invalid_argument("flux_divergence: coef must be symmetric per cell");
    }

    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i + 1 < g.nx; ++i) {
            double c = 0.5 * (coef.a11(i, j) + coef.a11(i + 1, j));
            double flux = c * (v(i + 1, j) - v(i, j)) / hx;
            out(i, j) += flux / hx;
            out(i + 1, j) -= flux / hx;
        }
    }
    for (int j = 0; j + 1 < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            double c = 0.5 * (coef.a22(i, j) + coef.a22(i, j + 1));
            double flux = c * (v(i, j + 1) - v(i, j)) / hy;
            out(i, j) += flux / hy;
            out(i, j + 1) -= flux / hy;
        }
    }

    // cross terms; each quad corner couples its two edges
    for (int j = 0; j + 1 < g.ny; ++j) {
        for (int i = 0; i + 1 < g.nx; ++i) {
            double gxb = (v(i + 1, j) - v(i, j)) / hx;          // bottom edge
            double gxt = (v(i + 1, j + 1) - v(i, j + 1)) / hx;  // top edge
            double gyl = (v(i, j + 1) - v(i, j)) / hy;          // left edge
            double gyr = (v(i + 1, j + 1) - v(i + 1, j)) / hy;  // right edge

            auto corner = [&](int ci, int cj, double gx, double gy, int xi0, int xj0, int xi1,
                              int xj1, int yi0, int yj0, int yi1, int yj1) {
                double c = 0.125 * (coef.a12(ci, cj) + coef.a21(ci, cj));  // 0.25 * mean
                // d/dw of gx(w): +1/hx at (xi1,xj1), -1/hx at (xi0,xj0)
                out(xi1, xj1) -= c * gy / hx;
                out(xi0, xj0) += c * gy / hx;
                out(yi1, yj1) -= c * gx / hy;
                out(yi0, yj0) += c * gx / hy;
            };

            corner(i, j, gxb, gyl, i, j, i + 1, j, i, j, i, j + 1);
            corner(i + 1, j, gxb, gyr, i, j, i + 1, j, i + 1, j, i + 1, j + 1);
            corner(i, j + 1, gxt, gyl, i, j + 1, i + 1, j + 1, i, j, i, j + 1);
            corner(i + 1, j + 1, gxt, gyr, i, j + 1, i + 1, j + 1, i + 1, j, i + 1, j + 1);
        }
    }
    return out;
}

inline double integrate(const ScalarField& u) {
    double s = 0.0;
    for (int k = 0; k < u.size(); ++k) s += u[k];
    return s * u.grid().cell_area();
}

inline double mean_value(const ScalarField& u) {
    return integrate(u) / (u.grid().lx * u.grid().ly);
}

inline double dot_grid(const ScalarField& u, const ScalarField& v) {
    require_same_grid(u.grid(), v.grid(), "dot_grid");
    double s = 0.0;
    for (int k = 0; k < u.size(); ++k) s += u[k] * v[k];
    return s * u.grid().cell_area();
}

inline double norm_lp(const ScalarField& u, double r) {
    if (!(r >= 1.0)) throw std::invalid_argument("norm_lp: requires r >= 1");
    double s = 0.0;
    for (int k = 0; k < u.size(); ++k) s += std::pow(std::abs(u[k]), r);
    return std::pow(s * u.grid().cell_area(), 1.0 / r);
}

inline double norm_inf(const ScalarField& u) {
    double m = 0.0;
    for (int k = 0; k < u.size(); ++k) m = std::max(m, std::abs(u[k]));
    return m;
}

inline double norm_inf_diff(const ScalarField& u, const ScalarField& v) {
    require_same_grid(u.grid(), v.grid(), "norm_inf_diff");
    double m = 0.0;
    for (int k = 0; k < u.size(); ++k) m = std::max(m, std::abs(u[k] - v[k]));
    return m;
}

inline double w1p_seminorm(const ScalarField& u, double r) {
    if (!(r >= 1.0)) throw std::invalid_argument("w1p_seminorm: requires r >= 1");
    VectorField gr = gradient(u);
    double s = 0.0;
    for (int k = 0; k < u.size(); ++k) {
        double m2 = gr.x[k] * gr.x[k] + gr.y[k] * gr.y[k];
        s += std::pow(m2, 0.5 * r);
    }
    return std::pow(s * u.grid().cell_area(), 1.0 / r);
}

// --- CSV serialization -----------------------------------------------------
// One header line `# nx=<n> ny=<n> lx=<f> ly=<f>`, then ny rows of nx
// comma-separated values, 17 significant digits; round-trips bit-exactly.

namespace detail {
inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}
}  // namespace detail

inline void write_field_csv(const ScalarField& u, std::ostream& os) {
    const Grid& g = u.grid();
    os << "# nx=" << g.nx << " ny=" << g.ny << " lx=" << detail::fmt17(g.lx)
       << " ly=" << detail::fmt17(g.ly) << "\n";
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            if (i) os << ",";
            os << detail::fmt17(u(i, j));
        }
        os << "\n";
    }
}

inline void dump_field(const ScalarField& u, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("dump_field: cannot open " + path);
    write_field_csv(u, os);
    if (!os) throw std::runtime_error("dump_field: write failed for " + path);
}

inline ScalarField read_field_csv(std::istream& is, const Grid& grid) {
    std::string header;
    if (!std::getline(is, header)) throw std::runtime_error("load_field: empty input");
    int nx = 0, ny = 0;
    double lx = 0.0, ly = 0.0;
    if (std::sscanf(header.c_str(), "# nx=%d ny=%d lx=%lf ly=%lf", &nx, &ny, &lx, &ly) != 4)
        throw std::runtime_error("load_field: malformed header: " + header);
    if (nx != grid.nx || ny != grid.ny)
        throw std::runtime_error("load_field: field shape " + std::to_string(nx) + "x" +
                                 std::to_string(ny) + " does not match grid " +
                                 std::to_string(grid.nx) + "x" + std::to_string(grid.ny));
    if (lx != grid.lx || ly != grid.ly)
        throw std::runtime_error("load_field: domain extent does not match grid");

    ScalarField u(grid, 0.0);
    std::string line;
    for (int j = 0; j < grid.ny; ++j) {
        if (!std::getline(is, line))
            throw std::runtime_error("load_field: expected " + std::to_string(grid.ny) +
                                     " rows, got " + std::to_string(j));
        std::stringstream ss(line);
        std::string cell;
        for (int i = 0; i < grid.nx; ++i) {
            if (!std::getline(ss, cell, ','))
                throw std::runtime_error("load_field: row " + std::to_string(j) + " has fewer than " +
                                         std::to_string(grid.nx) + " columns");
            char* end = nullptr;
            double val = std::strtod(cell.c_str(), &end);
            while (end && *end == ' ') ++end;
            if (!end || *end != '\0')
                throw std::runtime_error("load_field: bad number '" + cell + "'");
            if (std::isnan(val))
                throw std::runtime_error("load_field: NaN at row " + std::to_string(j) +
                                         " column " + std::to_string(i));
            u(i, j) = val;
        }
        if (std::getline(ss, cell, ','))
            throw std::runtime_error("load_field: row " + std::to_string(j) + " has more than " +
                                     std::to_string(grid.nx) + " columns");
    }
    return u;
}

inline ScalarField load_field(const std::string& path, const Grid& grid) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("load_field: cannot open " + path);
    return read_field_csv(is, grid);
}

}  // namespace facetflow
