#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "mstm/field/frame.hpp"
#include "mstm/hydro/geometry.hpp"
#include "mstm/hydro/state.hpp"

namespace mstm::hydro {

enum class EdgeCondition { reflective, outflow };

/// Conditions on the four domain edges.
struct BoundarySpec {
    EdgeCondition left = EdgeCondition::reflective;
    EdgeCondition right = EdgeCondition::reflective;
    EdgeCondition bottom = EdgeCondition::reflective;
    EdgeCondition top = EdgeCondition::reflective;

    static BoundarySpec for_kind(GeometryKind kind) {
        BoundarySpec bc;
        if (kind == GeometryKind::lattice) bc.left = EdgeCondition::outflow;
        return bc;
    }
};

namespace solver_detail {

struct Cell {
    double rho, mx, my, etot, rhom;
};

struct Prim {
    double u, v, p, c;
};

inline Prim primitive(const Cell& q, const IdealGas& eos) {
    const double u = q.mx / q.rho;
    const double v = q.my / q.rho;
    const double e_int = q.etot - 0.5 * q.rho * (u * u + v * v);
    const double p = eos.pressure(q.rho, e_int);
    return {u, v, p, eos.sound_speed(q.rho, p)};
}

/// Ghost value for an edge: reflective mirrors the interior cell with the
/// normal momentum negated; outflow copies the interior cell.
inline Cell ghost_cell(const Cell& interior, EdgeCondition cond, bool x_normal) {
    Cell g = interior;
    if (cond == EdgeCondition::reflective) {
        if (x_normal)
            g.mx = -g.mx;
        else
            g.my = -g.my;
    }
    return g;
}

/// HLLC flux along one axis. The star states are formed by scaling the
/// conserved vector with a single factor, so a stationary contact
/// (equal pressures, zero normal velocity) yields exactly zero mass and
/// energy flux and quiescent layered media stay in bitwise equilibrium.
/// The tracer rides on the mass flux with upwind selection, which keeps the
/// material fraction inside [0, 1].
template <bool XDir>
inline Cell hllc_flux(const Cell& ql, const Cell& qr, const Prim& pl, const Prim& pr) {
    const double ul = XDir ? pl.u : pl.v;
    const double ur = XDir ? pr.u : pr.v;
    const double sl = std::min(ul - pl.c, ur - pr.c);
    const double sr = std::max(ul + pl.c, ur + pr.c);

    auto physical = [](const Cell& q, const Prim& p) {
        const double un = XDir ? p.u : p.v;
        Cell f;
        f.rho = q.rho * un;
        if constexpr (XDir) {
            f.mx = q.mx * un + p.p;
            f.my = q.my * un;
        } else {
            f.mx = q.mx * un;
            f.my = q.my * un + p.p;
        }
        f.etot = (q.etot + p.p) * un;
        f.rhom = 0.0;  // filled below from the mass flux
        return f;
    };

    Cell f;
    if (sl >= 0.0) {
        f = physical(ql, pl);
    } else if (sr <= 0.0) {
        f = physical(qr, pr);
    } else {
        const double num = pr.p - pl.p + ql.rho * ul * (sl - ul) - qr.rho * ur * (sr - ur);
        const double den = ql.rho * (sl - ul) - qr.rho * (sr - ur);
        const double s_star = num / den;

        const bool left_star = s_star >= 0.0;
        const Cell& q = left_star ? ql : qr;
        const Prim& p = left_star ? pl : pr;
        const double s_k = left_star ? sl : sr;
        const double un = left_star ? ul : ur;

        const double factor = (s_k - un) / (s_k - s_star);
        Cell star;
        star.rho = q.rho * factor;
        if constexpr (XDir) {
            star.mx = star.rho * s_star;
            star.my = q.my * factor;
        } else {
            star.mx = q.mx * factor;
            star.my = star.rho * s_star;
        }
        star.etot = q.etot * factor +
                    star.rho * (s_star - un) * (s_star + p.p / (q.rho * (s_k - un)));
        star.rhom = 0.0;

        f = physical(q, p);
        f.rho += s_k * (star.rho - q.rho);
        f.mx += s_k * (star.mx - q.mx);
        f.my += s_k * (star.my - q.my);
        f.etot += s_k * (star.etot - q.etot);
    }
    const double ml = ql.rhom / ql.rho;
    const double mr = qr.rhom / qr.rho;
    f.rhom = f.rho * (f.rho >= 0.0 ? ml : mr);
    return f;
}

inline Cell load(const ConservedState& s, std::size_t idx) {
    return {s.rho[idx], s.mx[idx], s.my[idx], s.etot[idx], s.rhom[idx]};
}

/// Accumulates -div(F) * dt into `out` given `in`. Face fluxes are computed
/// once and applied to both neighbours, so interior sums telescope exactly.
inline void accumulate_fluxes(const ConservedState& in, const IdealGas& eos,
                              const BoundarySpec& bc, double dt, ConservedState& out) {
    const Grid& grid = in.grid;
    const std::size_t nx = grid.nx, ny = grid.ny;
    const double lam = dt / grid.dx;

    std::vector<Prim> prim(grid.cells());
    for (std::size_t idx = 0; idx < grid.cells(); ++idx) {
        if (!(in.rho[idx] > 0.0))
            throw PositivityError("positivity failure: density");
        Cell q = load(in, idx);
        Prim p = primitive(q, eos);
        if (!(p.p > 0.0)) throw PositivityError("positivity failure: pressure");
        if (!std::isfinite(p.c) || !std::isfinite(p.u) || !std::isfinite(p.v))
            throw PositivityError("non-finite wave speed");
        prim[idx] = p;
    }

    // Updates use per-cell flux differences: when the incoming and outgoing
    // face fluxes are bitwise equal the update is exactly zero, so uniform
    // and layered equilibria are preserved regardless of FMA contraction.
    auto add_scaled = [&](std::size_t idx, const Cell& fin, const Cell& fout) {
        out.rho[idx] += lam * (fin.rho - fout.rho);
        out.mx[idx] += lam * (fin.mx - fout.mx);
        out.my[idx] += lam * (fin.my - fout.my);
        out.etot[idx] += lam * (fin.etot - fout.etot);
        out.rhom[idx] += lam * (fin.rhom - fout.rhom);
    };

    // x sweep: one row of face fluxes at a time
    std::vector<Cell> face(nx + 1);
    for (std::size_t j = 0; j < ny; ++j) {
        {
            const Cell qi = load(in, grid.index(0, j));
            const Cell qg = ghost_cell(qi, bc.left, true);
            face[0] = hllc_flux<true>(qg, qi, primitive(qg, eos), prim[grid.index(0, j)]);
        }
        for (std::size_t i = 0; i + 1 < nx; ++i) {
            const std::size_t a = grid.index(i, j), b = grid.index(i + 1, j);
            face[i + 1] = hllc_flux<true>(load(in, a), load(in, b), prim[a], prim[b]);
        }
        {
            const Cell qi = load(in, grid.index(nx - 1, j));
            const Cell qg = ghost_cell(qi, bc.right, true);
            face[nx] =
                hllc_flux<true>(qi, qg, prim[grid.index(nx - 1, j)], primitive(qg, eos));
        }
        for (std::size_t i = 0; i < nx; ++i) add_scaled(grid.index(i, j), face[i], face[i + 1]);
    }

    // y sweep: two rolling rows of face fluxes
    std::vector<Cell> below(nx), above(nx);
    for (std::size_t i = 0; i < nx; ++i) {
        const Cell qi = load(in, grid.index(i, 0));
        const Cell qg = ghost_cell(qi, bc.bottom, false);
        below[i] = hllc_flux<false>(qg, qi, primitive(qg, eos), prim[grid.index(i, 0)]);
    }
    for (std::size_t j = 0; j < ny; ++j) {
        if (j + 1 < ny) {
            for (std::size_t i = 0; i < nx; ++i) {
                const std::size_t a = grid.index(i, j), b = grid.index(i, j + 1);
                above[i] = hllc_flux<false>(load(in, a), load(in, b), prim[a], prim[b]);
            }
        } else {
            for (std::size_t i = 0; i < nx; ++i) {
                const Cell qi = load(in, grid.index(i, ny - 1));
                const Cell qg = ghost_cell(qi, bc.top, false);
                above[i] =
                    hllc_flux<false>(qi, qg, prim[grid.index(i, ny - 1)], primitive(qg, eos));
            }
        }
        for (std::size_t i = 0; i < nx; ++i) add_scaled(grid.index(i, j), below[i], above[i]);
        std::swap(below, above);
    }
}

}  // namespace solver_detail

/// CFL timestep: cfl * min over cells of dx / (|u| + c).
inline double compute_dt(const ConservedState& state, double cfl, const IdealGas& eos) {
    if (!(cfl > 0.0 && cfl < 1.0)) throw std::invalid_argument("cfl must lie in (0, 1)");
    double min_dt = std::numeric_limits<double>::infinity();
    for (std::size_t idx = 0; idx < state.cells(); ++idx) {
        const solver_detail::Cell q = solver_detail::load(state, idx);
        const solver_detail::Prim p = solver_detail::primitive(q, eos);
        const double speed = std::hypot(p.u, p.v) + p.c;
        if (!std::isfinite(speed)) throw std::runtime_error("non-finite wave speed");
        min_dt = std::min(min_dt, state.grid.dx / speed);
    }
    return cfl * min_dt;
}

/// One Heun (RK2) step with HLL fluxes and piecewise-constant states.
/// Throws PositivityError if a stage produces non-positive density/pressure.
inline ConservedState step(const ConservedState& state, double dt, const IdealGas& eos,
                           const BoundarySpec& bc) {
    using namespace solver_detail;
    ConservedState u1 = state;
    accumulate_fluxes(state, eos, bc, dt, u1);
    u1.check_positivity();

    ConservedState u2 = u1;
    accumulate_fluxes(u1, eos, bc, dt, u2);
    ConservedState out = state;
    for (std::size_t idx = 0; idx < state.cells(); ++idx) {
        out.rho[idx] = 0.5 * (state.rho[idx] + u2.rho[idx]);
        out.mx[idx] = 0.5 * (state.mx[idx] + u2.mx[idx]);
        out.my[idx] = 0.5 * (state.my[idx] + u2.my[idx]);
        out.etot[idx] = 0.5 * (state.etot[idx] + u2.etot[idx]);
        out.rhom[idx] = 0.5 * (state.rhom[idx] + u2.rhom[idx]);
    }
    out.check_positivity();
    return out;
}

/// Derived seven fields block-averaged to the recording resolution, kept in
/// double precision so averaging commutes with grid-wide means exactly.
inline Tensor<double> record_frame_values(const ConservedState& state, const IdealGas& eos,
                                          std::size_t output_n) {
    const std::size_t n = state.grid.nx;
    const std::size_t block = n / output_n;
    Tensor<double> out({kNumFields, output_n, output_n});
    std::array<double, kNumFields> acc{};
    const double inv = 1.0 / static_cast<double>(block * block);
    for (std::size_t oj = 0; oj < output_n; ++oj) {
        for (std::size_t oi = 0; oi < output_n; ++oi) {
            acc.fill(0.0);
            for (std::size_t bj = 0; bj < block; ++bj) {
                for (std::size_t bi = 0; bi < block; ++bi) {
                    const std::size_t idx = state.grid.index(oi * block + bi, oj * block + bj);
                    const double rho = state.rho[idx];
                    const double ux = state.mx[idx] / rho;
                    const double uy = state.my[idx] / rho;
                    const double e_int = state.internal_energy_density(idx);
                    acc[0] += rho;
                    acc[1] += ux;
                    acc[2] += uy;
                    acc[3] += state.rhom[idx] / rho;
                    acc[4] += eos.pressure(rho, e_int);
                    acc[5] += state.etot[idx];
                    acc[6] += eos.temperature(e_int / rho);
                }
            }
            for (std::size_t f = 0; f < kNumFields; ++f)
                out.at(f, oj, oi) = acc[f] * inv;
        }
    }
    return out;
}

inline FieldFrame record_frame(const ConservedState& state, const IdealGas& eos,
                               std::size_t output_n) {
    return FieldFrame(record_frame_values(state, eos, output_n).cast<float>());
}

/// Advances the initial condition and emits frames at uniform intervals.
/// A positivity failure retries the step with a halved dt, up to 5 halvings.
inline Sequence run_simulation(const GeometryConfig& cfg) {
    cfg.validate();
    const IdealGas eos{cfg.gamma, cfg.cv};
    const BoundarySpec bc = BoundarySpec::for_kind(cfg.kind);
    ConservedState state = build_geometry(cfg);

    const std::size_t n_frames = cfg.frame_count();
    const double t_end = cfg.end_time();
    const double frame_dt = t_end / static_cast<double>(n_frames - 1);

    Sequence seq;
    seq.frame_interval = static_cast<float>(frame_dt);
    seq.params = cfg.metadata();
    seq.frames.reserve(n_frames);
    seq.frames.push_back(record_frame(state, eos, cfg.output_n));

    double t = 0.0;
    for (std::size_t k = 1; k < n_frames; ++k) {
        const double t_frame = frame_dt * static_cast<double>(k);
        while (t < t_frame - 1e-12 * t_end) {
            double dt = std::min(compute_dt(state, cfg.cfl, eos), t_frame - t);
            bool advanced = false;
            for (int attempt = 0; attempt <= 5; ++attempt) {
                try {
                    state = step(state, dt, eos, bc);
                    advanced = true;
                    break;
                } catch (const PositivityError&) {
                    if (attempt == 5) throw;
                    dt *= 0.5;
                }
            }
            if (!advanced) throw PositivityError("positivity failure after dt halvings");
            t += dt;

            // tracer bound check; advection keeps m in [0,1] up to round-off
            for (std::size_t idx = 0; idx < state.cells(); ++idx) {
                const double m = state.rhom[idx] / state.rho[idx];
                if (m < -1e-12 || m > 1.0 + 1e-12)
                    throw std::runtime_error("material fraction left [0,1]");
                state.rhom[idx] = std::clamp(m, 0.0, 1.0) * state.rho[idx];
            }
        }
        seq.frames.push_back(record_frame(state, eos, cfg.output_n));
    }
    return seq;
}

}  // namespace mstm::hydro
