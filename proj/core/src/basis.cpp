#include "bque/basis.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_sf_bessel.h>

#include <cmath>
#include <mutex>
#include <numbers>
#include <stdexcept>

#include "bque/parallel.hpp"

namespace bque {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kChargeProximity = 1e-10;

void disable_gsl_abort() {
    static std::once_flag flag;
    std::call_once(flag, [] { gsl_set_error_handler_off(); });
}

double wrap_pi(double a) {
    a = std::remainder(a, 2.0 * kPi);
    if (a <= -kPi) a += 2.0 * kPi;
    return a;
}
}  // namespace

void bessel_y01(double x, double& y0, double& y1) {
    disable_gsl_abort();
    gsl_sf_result r0, r1;
    const int s0 = gsl_sf_bessel_Y0_e(x, &r0);
    const int s1 = gsl_sf_bessel_Y1_e(x, &r1);
    if (s0 != GSL_SUCCESS || s1 != GSL_SUCCESS)
        throw std::runtime_error("Bessel Y evaluation failed at x = " + std::to_string(x));
    y0 = r0.val;
    y1 = r1.val;
}

double bessel_j(int n, double x) {
    disable_gsl_abort();
    gsl_sf_result r;
    if (gsl_sf_bessel_Jn_e(n, x, &r) != GSL_SUCCESS)
        throw std::runtime_error("Bessel J evaluation failed");
    return r.val;
}

// ------------------------------------------------------------ offset curve

OffsetCurve::OffsetCurve(const BilliardDomain& domain, double distance) {
    if (distance <= 0.0) throw std::invalid_argument("offset distance must be positive");
    const auto& segs = domain.segments();

    auto offset_of = [&](const BoundarySegment& seg) {
        Piece piece;
        if (seg.kind == BoundarySegment::Kind::line) {
            const Vec2 n = seg.outward_normal(0.0);
            piece.geom = BoundarySegment::line(seg.p0 + distance * n, seg.p1 + distance * n);
        } else {
            const bool outward_radial = seg.ang1 >= seg.ang0;
            const double r = outward_radial ? seg.radius + distance : seg.radius - distance;
            if (r <= 0.0)
                throw std::invalid_argument("offset distance exceeds a dispersing arc radius");
            piece.geom = BoundarySegment::arc(seg.center, r, seg.ang0, seg.ang1);
        }
        piece.length = piece.geom.length();
        return piece;
    };

    const int n = static_cast<int>(segs.size());
    for (int i = 0; i < n; ++i) {
        if (segs[i].is_symmetry_line) continue;
        pieces_.push_back(offset_of(segs[i]));
        const auto& nxt = segs[(i + 1) % n];
        if (nxt.is_symmetry_line || !(i + 1 < n)) continue;
        // wall junction: round a convex corner with a radius-D arc
        const Vec2 corner = segs[i].end();
        const double a0 = std::atan2(segs[i].outward_normal(segs[i].length()).y,
                                     segs[i].outward_normal(segs[i].length()).x);
        const Vec2 n1 = nxt.outward_normal(0.0);
        const double gap = wrap_pi(std::atan2(n1.y, n1.x) - a0);
        if (std::abs(gap) < 1e-9) continue;
        if (gap < 0.0)
            throw std::invalid_argument("re-entrant corner: offset curve not supported");
        Piece round;
        round.geom = BoundarySegment::arc(corner, distance, a0, a0 + gap);
        round.length = round.geom.length();
        pieces_.push_back(round);
    }
    if (pieces_.empty()) throw std::invalid_argument("domain has no walls to offset");
    for (const auto& p : pieces_) total_length_ += p.length;
}

Vec2 OffsetCurve::point_at(double s) const {
    for (const auto& p : pieces_) {
        if (s <= p.length) return p.geom.point(std::max(0.0, s));
        s -= p.length;
    }
    return pieces_.back().geom.point(pieces_.back().length);
}

std::vector<Vec2> build_offset_curve(const BilliardDomain& domain, double D, int N) {
    if (N <= 0) throw std::invalid_argument("charge count must be positive");
    const OffsetCurve curve(domain, D);
    std::vector<Vec2> charges;
    charges.reserve(N);
    const double L = curve.total_length();
    for (int j = 0; j < N; ++j) charges.push_back(curve.point_at((j + 0.5) * L / N));
    return charges;
}

// ------------------------------------------------------------ basis

ScalingBasis::ScalingBasis(double k, double D, std::vector<Vec2> charges)
    : k_(k), D_(D), charges_(std::move(charges)) {
    if (k_ <= 0.0) throw std::invalid_argument("basis wavenumber must be positive");
    if (charges_.empty()) throw std::invalid_argument("basis needs at least one charge");
}

namespace {
// image reflections with odd-odd signs (+, -, -, +)
constexpr double kImageSign[4] = {1.0, -1.0, -1.0, 1.0};
constexpr double kImageX[4] = {1.0, 1.0, -1.0, -1.0};
constexpr double kImageY[4] = {1.0, -1.0, 1.0, -1.0};
}  // namespace

void ScalingBasis::eval(Vec2 r, std::span<double> values, std::span<Vec2> gradients) const {
    const int n = size();
    if (static_cast<int>(values.size()) != n || static_cast<int>(gradients.size()) != n)
        throw std::invalid_argument("basis evaluation buffers have the wrong size");
    for (int l = 0; l < n; ++l) {
        double v = 0.0;
        Vec2 g{0.0, 0.0};
        for (int im = 0; im < 4; ++im) {
            const Vec2 q{charges_[l].x * kImageX[im], charges_[l].y * kImageY[im]};
            const Vec2 d = r - q;
            const double dist = d.norm();
            if (dist < kChargeProximity)
                throw std::runtime_error("evaluation point coincides with a basis charge");
            double y0, y1;
            bessel_y01(k_ * dist, y0, y1);
            v += kImageSign[im] * y0;
            const double c = kImageSign[im] * (-k_) * y1 / dist;
            g = g + c * d;
        }
        values[l] = v;
        gradients[l] = g;
    }
}

void ScalingBasis::eval_block(std::span<const BoundaryNode> nodes, double point_scale,
                              Eigen::MatrixXd& V, Eigen::MatrixXd& Gx, Eigen::MatrixXd& Gy,
                              unsigned workers) const {
    const int m = static_cast<int>(nodes.size());
    const int n = size();
    V.resize(m, n);
    Gx.resize(m, n);
    Gy.resize(m, n);
    parallel_chunks(m, 64, workers, [&](std::size_t, std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
            const Vec2 r = point_scale * nodes[i].r;
            for (int l = 0; l < n; ++l) {
                double v = 0.0;
                Vec2 g{0.0, 0.0};
                for (int im = 0; im < 4; ++im) {
                    const Vec2 q{charges_[l].x * kImageX[im], charges_[l].y * kImageY[im]};
                    const Vec2 d = r - q;
                    const double dist = d.norm();
                    if (dist < kChargeProximity)
                        throw std::runtime_error("evaluation point coincides with a basis charge");
                    double y0, y1;
                    bessel_y01(k_ * dist, y0, y1);
                    v += kImageSign[im] * y0;
                    const double c = kImageSign[im] * (-k_) * y1 / dist;
                    g = g + c * d;
                }
                V(i, l) = v;
                Gx(i, l) = g.x;
                Gy(i, l) = g.y;
            }
        }
    });
}

double semiclassical_basis_size(const BilliardDomain& domain, double k) {
    return k * domain.perimeter_desym() / kPi;
}

ScalingBasis build_basis(const BilliardDomain& domain, double k, double basis_factor, int n_min) {
    if (k <= 0.0) throw std::invalid_argument("wavenumber must be positive");
    const double D = 7.0 / k;
    const int N =
        std::max(n_min, static_cast<int>(std::lround(basis_factor * semiclassical_basis_size(domain, k))));
    return ScalingBasis(k, D, build_offset_curve(domain, D, N));
}

}  // namespace bque
