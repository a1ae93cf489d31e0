#include "bque/elements.hpp"

#include <cmath>
#include <stdexcept>

#include "bque/parallel.hpp"

namespace bque {

BoundaryTrace boundary_trace(const EigenMode& mode, const ScalingBasis& basis,
                             std::span<const BoundaryNode> nodes, unsigned workers) {
    if (mode.coeffs.size() != basis.size())
        throw std::invalid_argument("mode coefficients do not match the basis size");
    const double scale = mode.k / mode.k_center;
    Eigen::MatrixXd V, Gx, Gy;
    basis.eval_block(nodes, scale, V, Gx, Gy, workers);
    BoundaryTrace t;
    t.u = V * mode.coeffs;
    t.ux = scale * (Gx * mode.coeffs);
    t.uy = scale * (Gy * mode.coeffs);
    t.un.resize(t.u.size());
    for (int i = 0; i < t.un.size(); ++i)
        t.un(i) = t.ux(i) * nodes[i].n.x + t.uy(i) * nodes[i].n.y;
    return t;
}

double overlap_equal_energy(const BoundaryTrace& a, const BoundaryTrace& b, double E,
                            std::span<const BoundaryNode> nodes) {
    if (a.u.size() != static_cast<int>(nodes.size()) || b.u.size() != a.u.size())
        throw std::invalid_argument("traces were sampled on a different curve");
    double sum = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const auto& nd = nodes[i];
        const double grad_dot = a.ux(i) * b.ux(i) + a.uy(i) * b.uy(i);
        const double ra = nd.r.x * a.ux(i) + nd.r.y * a.uy(i);
        const double rb = nd.r.x * b.ux(i) + nd.r.y * b.uy(i);
        sum += nd.w * (nd.rn * (E * a.u(i) * b.u(i) - grad_dot) + ra * b.un(i) + rb * a.un(i));
    }
    return sum / (2.0 * E);
}

double overlap_distinct_energy(const BoundaryTrace& a, double Ea, const BoundaryTrace& b,
                               double Eb, std::span<const BoundaryNode> nodes) {
    if (Ea == Eb) throw std::invalid_argument("distinct-energy overlap needs Ea != Eb");
    double sum = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (!nodes[i].on_chord) continue;  // Dirichlet data vanishes on the walls
        sum += nodes[i].w * (a.u(i) * b.un(i) - b.u(i) * a.un(i));
    }
    return sum / (Ea - Eb);
}

double quasi_orthogonality(const BoundaryTrace& a, const BoundaryTrace& b,
                           std::span<const BoundaryNode> nodes) {
    double sum = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i)
        sum += nodes[i].w * nodes[i].rn * a.un(i) * b.un(i);
    return sum;
}

double diffgen_boundary(const BoundaryTrace& a, double Ea, const BoundaryTrace& b, double Eb,
                        std::span<const BoundaryNode> nodes) {
    const double eps = Ea - Eb;
    if (eps == 0.0) throw std::invalid_argument("identity requires distinct energies");
    const double etot = Ea + Eb;
    double sum = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const auto& nd = nodes[i];
        const double r2 = nd.r.norm2();
        const double grad_dot = a.ux(i) * b.ux(i) + a.uy(i) * b.uy(i);
        const double ar = nd.r.x * a.ux(i) + nd.r.y * a.uy(i);
        const double br = nd.r.x * b.ux(i) + nd.r.y * b.uy(i);
        sum += nd.w * ((etot / eps - eps * r2 / 4.0) * (a.un(i) * b.u(i) - b.un(i) * a.u(i)) +
                       nd.rn * (etot * a.u(i) * b.u(i) / 2.0 - grad_dot) +
                       ar * b.un(i) + br * a.un(i));
    }
    return sum;
}

double verify_diffgen_identity(const BoundaryTrace& a, double Ea, const BoundaryTrace& b,
                               double Eb, double interior_lhs,
                               std::span<const BoundaryNode> nodes) {
    const double rhs = diffgen_boundary(a, Ea, b, Eb, nodes);
    const double lhs = (Ea - Eb) * (Ea - Eb) / 4.0 * interior_lhs;
    return std::abs(lhs - rhs) / (std::abs(lhs) + std::abs(rhs) + 1e-300);
}

TraceTable::TraceTable(const SpectrumCatalog& catalog, std::span<const BoundaryNode> curve,
                       unsigned workers) {
    nodes_.assign(curve.begin(), curve.end());
    const auto idx = catalog.sorted_index();
    k_.resize(idx.size());
    traces_.resize(idx.size());
    parallel_chunks(idx.size(), 1, workers, [&](std::size_t, std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
            const auto& window = catalog.windows[idx[i].first];
            const auto& mode = window.modes[idx[i].second];
            k_[i] = mode.k;
            traces_[i] = boundary_trace(mode, window.basis, nodes_, 1);
        }
    });
}

std::vector<DiagonalElement> diagonal_elements(const TraceTable& table, unsigned workers) {
    std::vector<DiagonalElement> out(table.size());
    parallel_chunks(table.size(), 8, workers, [&](std::size_t, std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
            const double k = table.wavenumbers()[i];
            out[i] = {static_cast<int>(i), k,
                      overlap_equal_energy(table.trace(i), table.trace(i), k * k, table.nodes())};
        }
    });
    return out;
}

ElementBlock offdiagonal_block(const TraceTable& table, int first, int last, double a_bar,
                               double degeneracy_tol, unsigned workers) {
    if (first < 0 || last > table.size() || first >= last)
        throw std::invalid_argument("invalid block range");
    const int n = last - first;
    ElementBlock block;
    block.a_bar = a_bar;
    block.index.resize(n);
    block.k.resize(n);
    for (int i = 0; i < n; ++i) {
        block.index[i] = first + i;
        block.k[i] = table.wavenumbers()[first + i];
    }
    block.values.resize(n, n);
    parallel_chunks(n, 4, workers, [&](std::size_t, std::size_t rb, std::size_t re) {
        for (std::size_t i = rb; i < re; ++i) {
            const double ki = block.k[i];
            block.values(i, i) =
                overlap_equal_energy(table.trace(first + i), table.trace(first + i), ki * ki,
                                     table.nodes());
            for (std::size_t j = 0; j < i; ++j) {
                const double kj = block.k[j];
                double v;
                if (std::abs(ki - kj) < degeneracy_tol) {
                    v = overlap_equal_energy(table.trace(first + i), table.trace(first + j),
                                             ki * kj, table.nodes());
                } else {
                    v = overlap_distinct_energy(table.trace(first + i), ki * ki,
                                                table.trace(first + j), kj * kj, table.nodes());
                }
                block.values(i, j) = v;
                block.values(j, i) = v;
            }
        }
    });
    return block;
}

}  // namespace bque
