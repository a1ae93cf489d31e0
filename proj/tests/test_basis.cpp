#include "bque/basis.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"

using namespace bque;

namespace {
constexpr double kPi = std::numbers::pi;

// distance from a point to the desymmetrized boundary
double wall_distance(const BilliardDomain& dom, Vec2 p) {
    double best = 1e300;
    for (const auto& seg : dom.segments()) {
        if (seg.is_symmetry_line) continue;
        if (seg.kind == BoundarySegment::Kind::line) {
            const Vec2 d = seg.p1 - seg.p0;
            const double t = std::clamp((p - seg.p0).dot(d) / d.norm2(), 0.0, 1.0);
            best = std::min(best, (p - (seg.p0 + t * d)).norm());
        } else {
            const double ang = std::atan2(p.y - seg.center.y, p.x - seg.center.x);
            const double sweep = seg.ang1 - seg.ang0;
            double rel = std::remainder(ang - seg.ang0, 2 * kPi);
            const bool inside = (sweep >= 0) ? (rel >= 0 && rel <= sweep) : (rel <= 0 && rel >= sweep);
            if (inside)
                best = std::min(best, std::abs((p - seg.center).norm() - seg.radius));
            best = std::min({best, (p - seg.start()).norm(), (p - seg.end()).norm()});
        }
    }
    return best;
}
}  // namespace

TEST_CASE("bessel Y0/Y1 against high-precision references") {
    struct Ref {
        double x, y0, y1;
    };
    // mpmath, 40 significant digits
    const Ref refs[] = {
        {0.001, -4.471416611375923269, -636.62216723113942807},
        {0.5, -0.44451873350670655715, -1.4714723926702430692},
        {1.0, 0.088256964215676957983, -0.78121282130028871655},
        {2.0, 0.5103756726497451196, -0.10703243154093754689},
        {7.0, -0.025949743967209264884, -0.30266723702418487006},
        {10.0, 0.055671167283599391424, 0.24901542420695388392},
        {31.41592653589793, -0.10105153479931964375, -0.10187155059132507722},
        {100.0, -0.077244313365083152254, -0.020372312002759793305},
        {1000.0, 0.0047159179776228133998, -0.024784331292351778915},
        {100000.0, 0.0018467661588650641043, 0.001719210350088256301},
    };
    for (const auto& r : refs) {
        double y0, y1;
        bessel_y01(r.x, y0, y1);
        // relative to the local amplitude envelope, which stays bounded away
        // from zero even when one of Y0/Y1 crosses a root
        const double scale = std::max(std::abs(r.y0) + std::abs(r.y1), 1e-3);
        CHECK(std::abs(y0 - r.y0) / scale < 1e-13);
        CHECK(std::abs(y1 - r.y1) / scale < 1e-13);
    }
    CHECK(bessel_j(0, 1.0) == doctest::Approx(0.76519768655796655145).epsilon(1e-14));
}

TEST_CASE("offset curve: quarter disk is a concentric arc") {
    const auto dom = BilliardDomain::quarter_disk();
    const auto charges = build_offset_curve(dom, 0.1, 24);
    REQUIRE(charges.size() == 24);
    for (const auto& q : charges) {
        CHECK(q.norm() == doctest::Approx(1.1).epsilon(1e-12));
        CHECK(q.x > 0.0);
        CHECK(q.y > 0.0);
        CHECK(!dom.contains(q));
    }
}

TEST_CASE("offset curve: sinai charges sit at distance D outside the walls") {
    const auto dom = BilliardDomain::sinai(0.4, 0.7);
    const double D = 7.0 / 100.0;
    const auto charges = build_offset_curve(dom, D, 200);
    for (const auto& q : charges) {
        CHECK(wall_distance(dom, q) == doctest::Approx(D).epsilon(1e-6));
        CHECK(!dom.contains(q));
    }
    // a dispersing arc cannot be offset past its center
    CHECK_THROWS(build_offset_curve(dom, 1.6, 10));
}

TEST_CASE("basis size rule") {
    const auto sinai = BilliardDomain::sinai(0.4, 0.7);
    CHECK(semiclassical_basis_size(sinai, 100.0) == doctest::Approx(100.0 * sinai.perimeter_desym() / kPi));
    CHECK(build_basis(sinai, 100.0, 1.5).size() ==
          static_cast<int>(std::lround(1.5 * semiclassical_basis_size(sinai, 100.0))));

    const auto qd = BilliardDomain::quarter_disk();
    CHECK(semiclassical_basis_size(qd, 20.0) == doctest::Approx(10.0));
    CHECK(build_basis(qd, 20.0, 1.5).size() == 15);
    CHECK(build_basis(qd, 20.0).offset_distance() == doctest::Approx(7.0 / 20.0));
}

TEST_CASE("basis functions vanish on the axes and mirror antisymmetrically") {
    const auto dom = BilliardDomain::sinai(0.4, 0.7);
    const auto basis = build_basis(dom, 30.0);
    const int n = basis.size();
    std::vector<double> v(n);
    std::vector<Vec2> g(n);

    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.05, 0.9);
    for (int rep = 0; rep < 8; ++rep) {
        basis.eval({u(rng), 0.0}, v, g);
        for (double x : v) CHECK(std::abs(x) < 1e-12);
        basis.eval({0.0, u(rng)}, v, g);
        for (double x : v) CHECK(std::abs(x) < 1e-12);
    }

    const Vec2 p{u(rng), u(rng)};
    std::vector<double> vm(n);
    basis.eval(p, v, g);
    basis.eval({-p.x, p.y}, vm, g);
    for (int l = 0; l < n; ++l) CHECK(vm[l] == doctest::Approx(-v[l]).epsilon(1e-12));
    basis.eval({p.x, -p.y}, vm, g);
    for (int l = 0; l < n; ++l) CHECK(vm[l] == doctest::Approx(-v[l]).epsilon(1e-12));
}

TEST_CASE("basis gradients match central differences") {
    const auto dom = BilliardDomain::sinai(0.4, 0.7);
    const double k = 25.0;
    const auto basis = build_basis(dom, k);
    const int n = basis.size();
    std::vector<double> v0(n), vp(n), vm(n);
    std::vector<Vec2> g(n), gtmp(n);

    const double h = 1e-6 / k;
    for (const Vec2 p : {Vec2{0.3, 0.4}, Vec2{0.8, 0.2}, Vec2{0.5, 0.9}}) {
        basis.eval(p, v0, g);
        basis.eval({p.x + h, p.y}, vp, gtmp);
        basis.eval({p.x - h, p.y}, vm, gtmp);
        for (int l = 0; l < n; ++l) {
            const double fd = (vp[l] - vm[l]) / (2 * h);
            CHECK(std::abs(g[l].x - fd) / g[l].norm() < 1e-6);
        }
        basis.eval({p.x, p.y + h}, vp, gtmp);
        basis.eval({p.x, p.y - h}, vm, gtmp);
        for (int l = 0; l < n; ++l) {
            const double fd = (vp[l] - vm[l]) / (2 * h);
            CHECK(std::abs(g[l].y - fd) / g[l].norm() < 1e-6);
        }
    }
}

TEST_CASE("basis functions satisfy the Helmholtz equation (FD Laplacian)") {
    const auto dom = BilliardDomain::sinai(0.4, 0.7);
    const double k = 18.0;
    const auto basis = build_basis(dom, k);
    const int n = basis.size();
    std::vector<double> c(n), xp(n), xm(n), yp(n), ym(n);
    std::vector<Vec2> g(n);

    const double h = 2e-5;
    for (const Vec2 p : {Vec2{0.35, 0.45}, Vec2{0.7, 0.6}}) {
        basis.eval(p, c, g);
        basis.eval({p.x + h, p.y}, xp, g);
        basis.eval({p.x - h, p.y}, xm, g);
        basis.eval({p.x, p.y + h}, yp, g);
        basis.eval({p.x, p.y - h}, ym, g);
        for (int l = 0; l < n; ++l) {
            const double lap = (xp[l] + xm[l] + yp[l] + ym[l] - 4 * c[l]) / (h * h);
            CHECK(std::abs(lap + k * k * c[l]) / (k * k * std::abs(c[l]) + 1e-30) < 1e-4);
        }
    }
}

TEST_CASE("evaluation too close to a charge throws") {
    const auto dom = BilliardDomain::quarter_disk();
    const auto basis = build_basis(dom, 10.0);
    std::vector<double> v(basis.size());
    std::vector<Vec2> g(basis.size());
    CHECK_THROWS(basis.eval(basis.charges()[0], v, g));
}

TEST_CASE("eval_block matches pointwise eval and honors the scale factor") {
    const auto dom = BilliardDomain::sinai(0.4, 0.7);
    const auto basis = build_basis(dom, 40.0);
    const auto nodes = boundary_quadrature(dom, 40.0, 10, false);
    Eigen::MatrixXd V, Gx, Gy;
    const double scale = 0.997;
    basis.eval_block(nodes, scale, V, Gx, Gy, 2);

    std::vector<double> v(basis.size());
    std::vector<Vec2> g(basis.size());
    for (std::size_t i = 0; i < nodes.size(); i += 97) {
        basis.eval(scale * nodes[i].r, v, g);
        for (int l = 0; l < basis.size(); ++l) {
            CHECK(V(i, l) == v[l]);
            CHECK(Gx(i, l) == g[l].x);
            CHECK(Gy(i, l) == g[l].y);
        }
    }
}
