#include "doctest.h"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "thzris/conic.hpp"

using namespace thzris::conic;

namespace {

ConicProgram box_lp()
{
    ConicProgram p;
    p.add_variables(1);
    p.objective(0) = 1.0;
    AffineBuilder b;
    b.add(b.add_row(), 0, 1.0);
    b.add(b.add_row(1.0), 0, -1.0);
    p.add_block(b.finish(Cone::nonneg));
    return p;
}

} // namespace

TEST_CASE("linear program")
{
    const ConicSolution s = solve(box_lp());
    REQUIRE(s.status == SolveStatus::optimal);
    CHECK(s.x(0) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(s.gap <= 1e-6);
}

TEST_CASE("second-order cones")
{
    ConicProgram p; // max x + 2y, ||(x, y)|| <= 2
    p.add_variables(2);
    p.objective << 1.0, 2.0;
    AffineBuilder b;
    b.add_row(2.0);
    b.add(b.add_row(), 0, 1.0);
    b.add(b.add_row(), 1, 1.0);
    p.add_block(b.finish(Cone::soc));
    const ConicSolution s = solve(p);
    REQUIRE(s.status == SolveStatus::optimal);
    CHECK(s.objective == doctest::Approx(2.0 * std::sqrt(5.0)).epsilon(1e-6));

    ConicProgram r; // max s, 9 * 1 >= s^2
    r.add_variables(1);
    r.objective(0) = 1.0;
    AffineBuilder rb;
    rb.add_row(9.0);
    rb.add_row(1.0);
    rb.add(rb.add_row(), 0, 1.0);
    r.add_block(rb.finish(Cone::rsoc));
    const ConicSolution rs = solve(r);
    REQUIRE(rs.status == SolveStatus::optimal);
    CHECK(rs.x(0) == doctest::Approx(3.0).epsilon(1e-6));
}

TEST_CASE("exponential cone with an equality")
{
    ConicProgram p; // max u, 2^u <= 1 + v, v = 3
    p.add_variables(2);
    p.objective(0) = 1.0;
    AffineBuilder e;
    e.add(e.add_row(), 0, std::log(2.0));
    e.add_row(1.0);
    e.add(e.add_row(1.0), 1, 1.0);
    p.add_block(e.finish(Cone::exp));
    AffineBuilder z;
    z.add(z.add_row(-3.0), 1, 1.0);
    p.add_block(z.finish(Cone::zero));
    const ConicSolution s = solve(p);
    REQUIRE(s.status == SolveStatus::optimal);
    CHECK(s.x(0) == doctest::Approx(2.0).epsilon(1e-6));
    CHECK(s.x(1) == doctest::Approx(3.0).epsilon(1e-9));
    CHECK(s.primal_residual < 1e-9);
}

TEST_CASE("infeasible and unbounded")
{
    ConicProgram bad;
    bad.add_variables(1);
    bad.objective(0) = 1.0;
    AffineBuilder b;
    b.add(b.add_row(-2.0), 0, 1.0);
    b.add(b.add_row(1.0), 0, -1.0);
    bad.add_block(b.finish(Cone::nonneg));
    CHECK(solve(bad).status == SolveStatus::infeasible);

    ConicProgram open;
    open.add_variables(1);
    open.objective(0) = 1.0;
    AffineBuilder o;
    o.add(o.add_row(), 0, 1.0);
    open.add_block(o.finish(Cone::nonneg));
    CHECK(solve(open).status == SolveStatus::unbounded);
}

TEST_CASE("hint skips phase one")
{
    const std::vector<double> hint = {0.5};
    const ConicSolution warm = solve(box_lp(), {}, hint);
    const ConicSolution cold = solve(box_lp());
    REQUIRE(warm.status == SolveStatus::optimal);
    CHECK(warm.x(0) == doctest::Approx(cold.x(0)).epsilon(1e-6));
}

TEST_CASE("malformed programs")
{
    ConicProgram p;
    p.add_variables(2);
    ConeBlock e;
    e.cone = Cone::exp;
    e.cols = {0, 1};
    e.a = Eigen::MatrixXd::Identity(2, 2);
    e.b = Eigen::VectorXd::Zero(2);
    p.blocks.push_back(e);
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    CHECK_THROWS_AS(solve(p), std::invalid_argument);

    ConicProgram q;
    q.add_variables(1);
    ConeBlock nb;
    nb.cone = Cone::nonneg;
    nb.cols = {3};
    nb.a = Eigen::MatrixXd::Ones(1, 1);
    nb.b = Eigen::VectorXd::Zero(1);
    q.blocks.push_back(nb);
    CHECK_THROWS_AS(q.validate(), std::invalid_argument);

    CHECK_THROWS_AS(parse_cone("psd"), std::invalid_argument);
    CHECK(parse_cone(cone_name(Cone::rsoc)) == Cone::rsoc);
}

TEST_CASE("text format round trip")
{
    const ConicProgram p = box_lp();
    std::stringstream ss;
    write_program(ss, p);
    const ConicProgram back = read_program(ss);
    CHECK(back.n == p.n);
    REQUIRE(back.blocks.size() == p.blocks.size());
    CHECK(back.blocks[0].a == p.blocks[0].a);
    CHECK(back.blocks[0].b == p.blocks[0].b);
    std::stringstream junk("conelp 1\nvars x\n");
    CHECK_THROWS_AS(read_program(junk), std::invalid_argument);
}

TEST_CASE("cone interiors")
{
    CHECK(in_interior(Cone::nonneg, Eigen::Vector2d(1.0, 0.1)));
    CHECK_FALSE(in_interior(Cone::nonneg, Eigen::Vector2d(1.0, 0.0)));
    CHECK(in_interior(Cone::soc, Eigen::Vector3d(2.0, 1.0, 1.0)));
    CHECK_FALSE(in_interior(Cone::soc, Eigen::Vector3d(1.0, 1.0, 1.0)));
    CHECK(in_interior(Cone::rsoc, Eigen::Vector3d(2.0, 1.0, 1.0)));
    CHECK(in_interior(Cone::exp, Eigen::Vector3d(0.0, 1.0, 2.0)));
    CHECK_FALSE(in_interior(Cone::exp, Eigen::Vector3d(1.0, 1.0, 2.0)));
}

TEST_CASE("complex embedding")
{
    Eigen::VectorXcd z(3), coef(3);
    z << std::complex<double>(1, 2), std::complex<double>(-0.5, 0.1), std::complex<double>(0, -3);
    coef << std::complex<double>(0.3, -1), std::complex<double>(2, 0.5), std::complex<double>(-1, 1);
    const std::complex<double> off(0.7, -0.2);
    const Eigen::VectorXd x = to_real(z);
    CHECK(x(0) == 1.0);
    CHECK(x(1) == 2.0);
    const RealAffine ra = embed_abs_squared(coef, off);
    CHECK((ra.a * x + ra.b).squaredNorm() == doctest::Approx(std::norm(coef.dot(z) + off)).epsilon(1e-14));
    CHECK((to_complex(std::span<const double>(x.data(), 6)) - z).norm() == 0.0);

    AffineBuilder b;
    const int re = b.add_row(), im = b.add_row();
    const ComplexLayout layout{0, 3};
    add_complex_linear(b, re, im, layout, coef.transpose(), off);
    const ConeBlock blk = b.finish(Cone::nonneg);
    Eigen::VectorXd s = blk.b;
    for (size_t j = 0; j < blk.cols.size(); ++j)
        s += blk.a.col(static_cast<Eigen::Index>(j)) * x(blk.cols[j]);
    const std::complex<double> want = (coef.transpose() * z)(0) + off;
    CHECK(s(0) == doctest::Approx(want.real()).epsilon(1e-14));
    CHECK(s(1) == doctest::Approx(want.imag()).epsilon(1e-14));
}
