#include "thzris/conic.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace thzris::conic {

using Eigen::MatrixXd;
using Eigen::VectorXd;

const char *cone_name(Cone cone)
{
    switch (cone)
    {
    case Cone::zero:
        return "zero";
    case Cone::nonneg:
        return "nonneg";
    case Cone::soc:
        return "soc";
    case Cone::rsoc:
        return "rsoc";
    case Cone::exp:
        return "exp";
    }
    return "?";
}

Cone parse_cone(const std::string &name)
{
    if (name == "zero")
        return Cone::zero;
    if (name == "nonneg")
        return Cone::nonneg;
    if (name == "soc")
        return Cone::soc;
    if (name == "rsoc")
        return Cone::rsoc;
    if (name == "exp")
        return Cone::exp;
    throw std::invalid_argument("unknown cone '" + name + "'");
}

const char *to_string(SolveStatus status)
{
    switch (status)
    {
    case SolveStatus::optimal:
        return "optimal";
    case SolveStatus::infeasible:
        return "infeasible";
    case SolveStatus::unbounded:
        return "unbounded";
    case SolveStatus::max_iter:
        return "max_iter";
    case SolveStatus::numerical_failure:
        return "numerical_failure";
    }
    return "?";
}

int AffineBuilder::add_row(double offset)
{
    terms_.emplace_back();
    offsets_.push_back(offset);
    return rows() - 1;
}

void AffineBuilder::add(int row, int var, double coef)
{
    if (row < 0 || row >= rows() || var < 0)
        throw std::invalid_argument("AffineBuilder::add: bad row or variable index");
    if (coef != 0.0)
        terms_[static_cast<size_t>(row)].emplace_back(var, coef);
}

void AffineBuilder::add_offset(int row, double offset)
{
    if (row < 0 || row >= rows())
        throw std::invalid_argument("AffineBuilder::add_offset: bad row");
    offsets_[static_cast<size_t>(row)] += offset;
}

ConeBlock AffineBuilder::finish(Cone cone) const
{
    ConeBlock blk;
    blk.cone = cone;
    for (const auto &row : terms_)
        for (const auto &[var, coef] : row)
            blk.cols.push_back(var);
    std::sort(blk.cols.begin(), blk.cols.end());
    blk.cols.erase(std::unique(blk.cols.begin(), blk.cols.end()), blk.cols.end());

    std::map<int, int> local;
    for (size_t i = 0; i < blk.cols.size(); ++i)
        local[blk.cols[i]] = static_cast<int>(i);

    blk.a = MatrixXd::Zero(rows(), static_cast<Eigen::Index>(blk.cols.size()));
    blk.b.resize(rows());
    for (int r = 0; r < rows(); ++r)
    {
        blk.b(r) = offsets_[static_cast<size_t>(r)];
        for (const auto &[var, coef] : terms_[static_cast<size_t>(r)])
            blk.a(r, local[var]) += coef;
    }
    return blk;
}

int ConicProgram::add_variables(int count)
{
    if (count < 0)
        throw std::invalid_argument("add_variables: negative count");
    const int first = n;
    n += count;
    objective.conservativeResize(n);
    objective.tail(count).setZero();
    return first;
}

void ConicProgram::add_block(ConeBlock block) { blocks.push_back(std::move(block)); }

void ConicProgram::validate() const
{
    if (n < 1)
        throw std::invalid_argument("conic program has no variables");
    if (objective.size() != n)
        throw std::invalid_argument("objective length differs from variable count");
    if (!objective.allFinite())
        throw std::invalid_argument("objective has non-finite entries");
    for (const auto &blk : blocks)
    {
        const int rows = blk.rows();
        if (blk.a.rows() != rows || blk.a.cols() != static_cast<Eigen::Index>(blk.cols.size()))
            throw std::invalid_argument(std::string(cone_name(blk.cone)) + " block: A/b/cols size mismatch");
        if (rows < 1)
            throw std::invalid_argument("empty cone block");
        if (blk.cone == Cone::rsoc && rows < 2)
            throw std::invalid_argument("rsoc block needs at least 2 rows");
        if (blk.cone == Cone::exp && rows != 3)
            throw std::invalid_argument("exp block needs exactly 3 rows");
        for (size_t i = 0; i < blk.cols.size(); ++i)
        {
            if (blk.cols[i] < 0 || blk.cols[i] >= n)
                throw std::invalid_argument("cone block references variable out of range");
            if (i > 0 && blk.cols[i] <= blk.cols[i - 1])
                throw std::invalid_argument("cone block columns must be sorted and distinct");
        }
        if (!blk.a.allFinite() || !blk.b.allFinite())
            throw std::invalid_argument("cone block has non-finite data");
    }
}

namespace {

double cone_nu(Cone cone, int rows)
{
    switch (cone)
    {
    case Cone::zero:
        return 0.0;
    case Cone::nonneg:
        return rows;
    case Cone::soc:
    case Cone::rsoc:
        return 2.0;
    case Cone::exp:
        return 3.0;
    }
    return 0.0;
}

// q(s) = s^T J s; SOC: s0^2 - |s1|^2, RSOC: s0 s1 - |s2|^2.
MatrixXd quad_form(Cone cone, int rows)
{
    MatrixXd j = MatrixXd::Zero(rows, rows);
    if (cone == Cone::soc)
    {
        j.diagonal().setConstant(-1.0);
        j(0, 0) = 1.0;
    }
    else
    {
        j.diagonal().setConstant(-1.0);
        j(0, 0) = j(1, 1) = 0.0;
        j(0, 1) = j(1, 0) = 0.5;
    }
    return j;
}

} // namespace

double ConicProgram::barrier_parameter() const
{
    double nu = 0.0;
    for (const auto &blk : blocks)
        nu += cone_nu(blk.cone, blk.rows());
    return nu;
}

bool in_interior(Cone cone, const VectorXd &s)
{
    switch (cone)
    {
    case Cone::zero:
        return s.cwiseAbs().maxCoeff() <= 1e-9;
    case Cone::nonneg:
        return (s.array() > 0.0).all();
    case Cone::soc:
        return s(0) > 0.0 && s(0) * s(0) - s.tail(s.size() - 1).squaredNorm() > 0.0;
    case Cone::rsoc:
        return s(0) > 0.0 && s(1) > 0.0 && s(0) * s(1) - s.tail(s.size() - 2).squaredNorm() > 0.0;
    case Cone::exp:
        return s(1) > 0.0 && s(2) > 0.0 && s(1) * std::log(s(2) / s(1)) - s(0) > 0.0;
    }
    return false;
}

namespace {

struct Block
{
    Cone cone;
    std::vector<int> cols;
    MatrixXd a;
    VectorXd b;
    MatrixXd j; // soc / rsoc only
    MatrixXd p; // a^T j a
};

struct Problem
{
    int n = 0;
    VectorXd c;
    std::vector<Block> blocks;
    double nu = 0.0;
};

Block make_block(Cone cone, std::vector<int> cols, MatrixXd a, VectorXd b)
{
    Block blk{cone, std::move(cols), std::move(a), std::move(b), {}, {}};
    if (cone == Cone::soc || cone == Cone::rsoc)
    {
        blk.j = quad_form(cone, static_cast<int>(blk.b.size()));
        blk.p = blk.a.transpose() * blk.j * blk.a;
    }
    return blk;
}

VectorXd slack(const Block &blk, const VectorXd &x)
{
    VectorXd xl(static_cast<Eigen::Index>(blk.cols.size()));
    for (size_t i = 0; i < blk.cols.size(); ++i)
        xl(static_cast<Eigen::Index>(i)) = x(blk.cols[i]);
    return blk.a * xl + blk.b;
}

bool interior(const Problem &pr, const VectorXd &x)
{
    for (const auto &blk : pr.blocks)
        if (!in_interior(blk.cone, slack(blk, x)))
            return false;
    return true;
}

// Barrier gradient and Hessian; false if x leaves the domain.
bool barrier_derivatives(const Problem &pr, const VectorXd &x, VectorXd &g, MatrixXd &h)
{
    g.setZero(pr.n);
    h.setZero(pr.n, pr.n);
    VectorXd gl;
    MatrixXd hl;
    for (const auto &blk : pr.blocks)
    {
        const VectorXd s = slack(blk, x);
        if (!in_interior(blk.cone, s))
            return false;
        switch (blk.cone)
        {
        case Cone::nonneg: {
            const VectorXd inv = s.cwiseInverse();
            gl = -blk.a.transpose() * inv;
            hl = blk.a.transpose() * inv.cwiseAbs2().asDiagonal() * blk.a;
            break;
        }
        case Cone::soc:
        case Cone::rsoc: {
            const VectorXd js = blk.j * s;
            const double q = s.dot(js);
            gl = (-2.0 / q) * (blk.a.transpose() * js);
            hl = (-2.0 / q) * blk.p + gl * gl.transpose();
            break;
        }
        case Cone::exp: {
            const double u = s(0), y = s(1), z = s(2);
            const double lzy = std::log(z / y);
            const double psi = y * lzy - u;
            Eigen::Vector3d dpsi(-1.0, lzy - 1.0, y / z);
            Eigen::Matrix3d d2psi = Eigen::Matrix3d::Zero();
            d2psi(1, 1) = -1.0 / y;
            d2psi(1, 2) = d2psi(2, 1) = 1.0 / z;
            d2psi(2, 2) = -y / (z * z);
            Eigen::Vector3d gs = -dpsi / psi;
            gs(1) -= 1.0 / y;
            gs(2) -= 1.0 / z;
            Eigen::Matrix3d hs = -d2psi / psi + dpsi * dpsi.transpose() / (psi * psi);
            hs(1, 1) += 1.0 / (y * y);
            hs(2, 2) += 1.0 / (z * z);
            gl = blk.a.transpose() * gs;
            hl = blk.a.transpose() * hs * blk.a;
            break;
        }
        case Cone::zero:
            continue;
        }
        const auto m = blk.cols.size();
        for (size_t i = 0; i < m; ++i)
        {
            const int ci = blk.cols[i];
            g(ci) += gl(static_cast<Eigen::Index>(i));
            for (size_t k = 0; k < m; ++k)
                h(ci, blk.cols[k]) += hl(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
        }
    }
    return g.allFinite() && h.allFinite();
}

// Solves h d = -grad, adding a ridge if h is numerically singular.
bool newton_direction(const MatrixXd &h, const VectorXd &grad, VectorXd &d)
{
    const double scale = std::max(1.0, h.diagonal().cwiseAbs().maxCoeff());
    double ridge = 0.0;
    for (int attempt = 0; attempt < 6; ++attempt)
    {
        Eigen::LLT<MatrixXd> llt(h + MatrixXd::Identity(h.rows(), h.cols()) * ridge);
        if (llt.info() == Eigen::Success)
        {
            d = llt.solve(-grad);
            if (d.allFinite())
                return true;
        }
        ridge = ridge == 0.0 ? 1e-14 * scale : ridge * 100.0;
    }
    return false;
}

enum class Signal
{
    go,
    stop_feasible,
    stop_infeasible
};

struct PathResult
{
    SolveStatus status = SolveStatus::numerical_failure;
    VectorXd x;
    double t = 0.0;
    int steps = 0;
    double dual_residual = 0.0;
    bool early = false;
    Signal signal = Signal::go;
};

double initial_t(const Problem &pr, const VectorXd &x)
{
    VectorXd g;
    MatrixXd h;
    if (!barrier_derivatives(pr, x, g, h) || pr.c.squaredNorm() == 0.0)
        return 1.0;
    Eigen::LDLT<MatrixXd> ldlt(h + MatrixXd::Identity(pr.n, pr.n) * 1e-12 * std::max(1.0, h.diagonal().maxCoeff()));
    const VectorXd hc = ldlt.solve(pr.c);
    const double den = pr.c.dot(hc);
    const double t = den > 0.0 ? hc.dot(g) / den : 0.0;
    if (!std::isfinite(t) || t <= 0.0)
        return 1.0;
    return std::clamp(t, 1e-8, 1e8);
}

// Maximizes c^T x by minimizing -t c^T x + barrier for increasing t.
// `monitor(x, lower_gap)` is called after every Newton step (lower_gap < 0)
// and after every centring (lower_gap = nu / t).
template <class Monitor>
PathResult path_follow(const Problem &pr, VectorXd x, const SolverSettings &settings, double unbounded_norm,
                       Monitor monitor)
{
    constexpr double mu = 10.0;
    constexpr double center_tol = 1e-10;
    PathResult res;
    double t = initial_t(pr, x);
    VectorXd g, d, grad;
    MatrixXd h;

    for (;;)
    {
        // centring
        for (;;)
        {
            if (!barrier_derivatives(pr, x, g, h))
            {
                res.status = SolveStatus::numerical_failure;
                res.x = x;
                res.t = t;
                return res;
            }
            grad = g - t * pr.c;
            if (!newton_direction(h, grad, d))
            {
                res.status = SolveStatus::numerical_failure;
                res.x = x;
                res.t = t;
                return res;
            }
            const double lam2 = -grad.dot(d);
            if (!std::isfinite(lam2))
            {
                res.status = SolveStatus::numerical_failure;
                res.x = x;
                res.t = t;
                return res;
            }
            if (lam2 <= 2.0 * center_tol)
            {
                res.dual_residual = grad.lpNorm<Eigen::Infinity>() / t;
                break;
            }
            if (res.steps >= settings.max_iter)
            {
                res.status = SolveStatus::max_iter;
                res.x = x;
                res.t = t;
                res.dual_residual = grad.lpNorm<Eigen::Infinity>() / t;
                return res;
            }
            const double lam = std::sqrt(std::max(lam2, 0.0));
            double alpha = lam < 0.25 ? 1.0 : 1.0 / (1.0 + lam);
            VectorXd trial = x + alpha * d;
            int halvings = 0;
            while (!interior(pr, trial))
            {
                if (++halvings > 60)
                {
                    res.status = SolveStatus::numerical_failure;
                    res.x = x;
                    res.t = t;
                    return res;
                }
                alpha *= 0.5;
                trial = x + alpha * d;
            }
            if (halvings > 0 && alpha * lam < 1e-14 * (1.0 + x.norm()))
            {
                // stalled against the boundary
                res.dual_residual = grad.lpNorm<Eigen::Infinity>() / t;
                break;
            }
            x = std::move(trial);
            ++res.steps;
            if (x.norm() > unbounded_norm)
            {
                res.status = SolveStatus::unbounded;
                res.x = x;
                res.t = t;
                return res;
            }
            const Signal sig = monitor(x, -1.0);
            if (sig != Signal::go)
            {
                res.signal = sig;
                res.early = true;
                res.x = x;
                res.t = t;
                return res;
            }
        }

        const double gap = pr.nu / t;
        const Signal sig = monitor(x, gap);
        if (sig != Signal::go)
        {
            res.signal = sig;
            res.early = true;
            res.x = x;
            res.t = t;
            return res;
        }
        if (gap <= settings.tol * (1.0 + std::abs(pr.c.dot(x))))
        {
            res.status = SolveStatus::optimal;
            res.x = x;
            res.t = t;
            return res;
        }
        t *= mu;
    }
}

struct Reduction
{
    bool identity = true;
    MatrixXd basis; // n x r
    VectorXd offset;
    double residual = 0.0;
};

Reduction eliminate_equalities(const ConicProgram &prog)
{
    Reduction red;
    int rows = 0;
    for (const auto &blk : prog.blocks)
        if (blk.cone == Cone::zero)
            rows += blk.rows();
    red.offset = VectorXd::Zero(prog.n);
    if (rows == 0)
        return red;

    red.identity = false;
    MatrixXd e = MatrixXd::Zero(rows, prog.n);
    VectorXd e0(rows);
    int r0 = 0;
    for (const auto &blk : prog.blocks)
    {
        if (blk.cone != Cone::zero)
            continue;
        for (size_t i = 0; i < blk.cols.size(); ++i)
            e.block(r0, blk.cols[i], blk.rows(), 1) = blk.a.col(static_cast<Eigen::Index>(i));
        e0.segment(r0, blk.rows()) = blk.b;
        r0 += blk.rows();
    }
    Eigen::ColPivHouseholderQR<MatrixXd> qr(e.transpose());
    const auto rank = qr.rank();
    const MatrixXd q = qr.householderQ();
    red.basis = q.rightCols(prog.n - rank);
    Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(e);
    red.offset = cod.solve(-e0);
    red.residual = (e * red.offset + e0).lpNorm<Eigen::Infinity>();
    return red;
}

Problem reduce(const ConicProgram &prog, const Reduction &red)
{
    Problem pr;
    if (red.identity)
    {
        pr.n = prog.n;
        pr.c = prog.objective;
        for (const auto &blk : prog.blocks)
            pr.blocks.push_back(make_block(blk.cone, blk.cols, blk.a, blk.b));
    }
    else
    {
        pr.n = static_cast<int>(red.basis.cols());
        pr.c = red.basis.transpose() * prog.objective;
        std::vector<int> all(static_cast<size_t>(pr.n));
        for (int i = 0; i < pr.n; ++i)
            all[static_cast<size_t>(i)] = i;
        for (const auto &blk : prog.blocks)
        {
            if (blk.cone == Cone::zero)
                continue;
            MatrixXd a = MatrixXd::Zero(blk.rows(), pr.n);
            VectorXd b = blk.b;
            for (size_t i = 0; i < blk.cols.size(); ++i)
            {
                a += blk.a.col(static_cast<Eigen::Index>(i)) * red.basis.row(blk.cols[i]);
                b += blk.a.col(static_cast<Eigen::Index>(i)) * red.offset(blk.cols[i]);
            }
            pr.blocks.push_back(make_block(blk.cone, all, std::move(a), std::move(b)));
        }
    }
    pr.nu = 0.0;
    for (const auto &blk : pr.blocks)
        pr.nu += cone_nu(blk.cone, static_cast<int>(blk.b.size()));
    return pr;
}

// Offsets e with A x + b + sigma e in int K for sigma large enough.
VectorXd phase1_direction(Cone cone, int rows)
{
    VectorXd e = VectorXd::Zero(rows);
    switch (cone)
    {
    case Cone::nonneg:
        e.setOnes();
        break;
    case Cone::soc:
        e(0) = 1.0;
        break;
    case Cone::rsoc:
        e(0) = e(1) = 1.0;
        break;
    case Cone::exp:
        e << -1.0, 1.0, 1.0;
        break;
    case Cone::zero:
        break;
    }
    return e;
}

} // namespace

ConicSolution solve(const ConicProgram &program, const SolverSettings &settings, std::span<const double> hint)
{
    program.validate();
    if (!(settings.tol > 0.0) || settings.max_iter < 1)
        throw std::invalid_argument("solver settings: tol must be > 0 and max_iter >= 1");
    if (!hint.empty() && static_cast<int>(hint.size()) != program.n)
        throw std::invalid_argument("solver hint has wrong length");

    ConicSolution sol;
    const Reduction red = eliminate_equalities(program);
    auto lift = [&](const VectorXd &y) -> VectorXd {
        return red.identity ? y : VectorXd(red.offset + red.basis * y);
    };
    sol.primal_residual = red.residual;
    if (red.residual > settings.tol * (1.0 + red.offset.lpNorm<Eigen::Infinity>()))
    {
        sol.status = SolveStatus::infeasible;
        sol.x = red.offset;
        return sol;
    }

    const Problem pr = reduce(program, red);
    VectorXd y0 = VectorXd::Zero(pr.n);
    if (!hint.empty())
    {
        const VectorXd x0 = Eigen::Map<const VectorXd>(hint.data(), program.n);
        y0 = red.identity ? x0 : VectorXd(red.basis.transpose() * (x0 - red.offset));
    }
    const double unbounded_norm = 1e10 * (1.0 + y0.norm());

    VectorXd start = y0;
    if (!interior(pr, y0))
    {
        // phase I over (y, sigma)
        Problem p1;
        p1.n = pr.n + 1;
        p1.c = VectorXd::Zero(p1.n);
        p1.c(pr.n) = -1.0;
        double sigma0 = 1.0;
        for (const auto &blk : pr.blocks)
        {
            std::vector<int> cols = blk.cols;
            cols.push_back(pr.n);
            MatrixXd a(blk.a.rows(), blk.a.cols() + 1);
            a << blk.a, phase1_direction(blk.cone, static_cast<int>(blk.b.size()));
            p1.blocks.push_back(make_block(blk.cone, std::move(cols), std::move(a), blk.b));
        }
        const double radius = 1e4 * (1.0 + y0.norm());
        {
            std::vector<int> cols(static_cast<size_t>(pr.n));
            for (int i = 0; i < pr.n; ++i)
                cols[static_cast<size_t>(i)] = i;
            MatrixXd a = MatrixXd::Zero(pr.n + 1, pr.n);
            a.bottomRows(pr.n).setIdentity();
            VectorXd b(pr.n + 1);
            b << radius, -y0;
            p1.blocks.push_back(make_block(Cone::soc, std::move(cols), std::move(a), std::move(b)));
        }
        p1.blocks.push_back(make_block(Cone::nonneg, {pr.n}, MatrixXd::Ones(1, 1), VectorXd::Ones(1)));
        p1.nu = 0.0;
        for (const auto &blk : p1.blocks)
            p1.nu += cone_nu(blk.cone, static_cast<int>(blk.b.size()));

        VectorXd z0(p1.n);
        z0 << y0, sigma0;
        while (!interior(p1, z0))
        {
            sigma0 *= 2.0;
            if (sigma0 > 1e30)
            {
                sol.status = SolveStatus::numerical_failure;
                sol.x = lift(y0);
                return sol;
            }
            z0(pr.n) = sigma0;
        }

        const PathResult r1 =
            path_follow(p1, z0, settings, 1e10 * (1.0 + z0.norm()), [&](const VectorXd &z, double gap) {
                if (z(pr.n) < 0.0 && interior(pr, z.head(pr.n)))
                    return Signal::stop_feasible;
                if (gap > 0.0 && z(pr.n) - gap > 0.0)
                    return Signal::stop_infeasible;
                return Signal::go;
            });
        sol.iterations += r1.steps;
        if (r1.signal == Signal::stop_feasible)
            start = r1.x.head(pr.n);
        else
        {
            sol.x = lift(r1.x.head(pr.n));
            sol.objective = program.objective.dot(sol.x);
            if (r1.signal == Signal::stop_infeasible ||
                (r1.status == SolveStatus::optimal && r1.x(pr.n) >= 0.0))
                sol.status = SolveStatus::infeasible;
            else
                sol.status = r1.status == SolveStatus::optimal ? SolveStatus::infeasible : r1.status;
            return sol;
        }
    }

    const PathResult r2 =
        path_follow(pr, start, settings, unbounded_norm, [](const VectorXd &, double) { return Signal::go; });
    sol.iterations += r2.steps;
    sol.status = r2.status;
    sol.x = lift(r2.x);
    sol.objective = program.objective.dot(sol.x);
    sol.gap = r2.t > 0.0 ? pr.nu / r2.t : std::numeric_limits<double>::infinity();
    sol.dual_residual = r2.dual_residual;
    if (sol.status == SolveStatus::optimal &&
        sol.dual_residual > std::sqrt(settings.tol) * (1.0 + pr.c.lpNorm<Eigen::Infinity>()))
        sol.status = SolveStatus::numerical_failure;
    return sol;
}

void write_program(std::ostream &out, const ConicProgram &program)
{
    program.validate();
    std::ostringstream os;
    os.imbue(std::locale::classic());
    os << std::setprecision(17);
    os << "conelp 1\n";
    os << "vars " << program.n << "\n";
    os << "maximize";
    for (int i = 0; i < program.n; ++i)
        os << ' ' << program.objective(i);
    os << "\n";
    for (const auto &blk : program.blocks)
    {
        int nnz = 0;
        for (Eigen::Index r = 0; r < blk.a.rows(); ++r)
            for (Eigen::Index c = 0; c < blk.a.cols(); ++c)
                nnz += blk.a(r, c) != 0.0;
        os << cone_name(blk.cone) << ' ' << blk.rows() << " A " << nnz;
        for (Eigen::Index r = 0; r < blk.a.rows(); ++r)
            for (Eigen::Index c = 0; c < blk.a.cols(); ++c)
                if (blk.a(r, c) != 0.0)
                    os << ' ' << r << ' ' << blk.cols[static_cast<size_t>(c)] << ' ' << blk.a(r, c);
        os << " b";
        for (int r = 0; r < blk.rows(); ++r)
            os << ' ' << blk.b(r);
        os << "\n";
    }
    out << os.str();
}

ConicProgram read_program(std::istream &in)
{
    auto fail = [](const std::string &what) { throw std::invalid_argument("conelp parse error: " + what); };
    ConicProgram prog;
    std::string line;
    int line_no = 0;
    bool header = false, have_vars = false, have_obj = false;
    while (std::getline(in, line))
    {
        ++line_no;
        std::istringstream ls(line);
        ls.imbue(std::locale::classic());
        std::string word;
        if (!(ls >> word) || word[0] == '#')
            continue;
        if (!header)
        {
            int version = 0;
            if (word != "conelp" || !(ls >> version) || version != 1)
                fail("expected 'conelp 1' header");
            header = true;
            continue;
        }
        if (word == "vars")
        {
            if (!(ls >> prog.n) || prog.n < 1)
                fail("bad vars line");
            prog.objective = VectorXd::Zero(prog.n);
            have_vars = true;
            continue;
        }
        if (word == "maximize")
        {
            if (!have_vars)
                fail("maximize before vars");
            for (int i = 0; i < prog.n; ++i)
                if (!(ls >> prog.objective(i)))
                    fail("short objective");
            have_obj = true;
            continue;
        }
        if (!have_obj)
            fail("block before objective (line " + std::to_string(line_no) + ")");
        const Cone cone = parse_cone(word);
        int rows = 0, nnz = 0;
        std::string tag;
        if (!(ls >> rows) || rows < 1 || !(ls >> tag) || tag != "A" || !(ls >> nnz) || nnz < 0)
            fail("bad block header (line " + std::to_string(line_no) + ")");
        AffineBuilder builder;
        for (int r = 0; r < rows; ++r)
            builder.add_row();
        for (int i = 0; i < nnz; ++i)
        {
            int r = 0, c = 0;
            double v = 0.0;
            if (!(ls >> r >> c >> v) || r < 0 || r >= rows || c < 0 || c >= prog.n)
                fail("bad entry (line " + std::to_string(line_no) + ")");
            builder.add(r, c, v);
        }
        if (!(ls >> tag) || tag != "b")
            fail("missing b (line " + std::to_string(line_no) + ")");
        for (int r = 0; r < rows; ++r)
        {
            double v = 0.0;
            if (!(ls >> v))
                fail("short b (line " + std::to_string(line_no) + ")");
            builder.add_offset(r, v);
        }
        prog.add_block(builder.finish(cone));
    }
    if (!have_obj)
        fail("missing vars/maximize");
    prog.validate();
    return prog;
}

VectorXd to_real(const Eigen::VectorXcd &z)
{
    VectorXd x(2 * z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i)
    {
        x(2 * i) = z(i).real();
        x(2 * i + 1) = z(i).imag();
    }
    return x;
}

Eigen::VectorXcd to_complex(std::span<const double> x)
{
    if (x.size() % 2 != 0)
        throw std::invalid_argument("to_complex: odd length");
    Eigen::VectorXcd z(static_cast<Eigen::Index>(x.size() / 2));
    for (Eigen::Index i = 0; i < z.size(); ++i)
        z(i) = {x[static_cast<size_t>(2 * i)], x[static_cast<size_t>(2 * i + 1)]};
    return z;
}

RealAffine embed_abs_squared(const Eigen::VectorXcd &coef, std::complex<double> offset)
{
    // a^H z = sum conj(a_i) z_i
    RealAffine out;
    const auto n = coef.size();
    out.a = MatrixXd::Zero(2, 2 * n);
    for (Eigen::Index i = 0; i < n; ++i)
    {
        const double ar = coef(i).real(), ai = coef(i).imag();
        out.a(0, 2 * i) = ar;
        out.a(0, 2 * i + 1) = ai;
        out.a(1, 2 * i) = -ai;
        out.a(1, 2 * i + 1) = ar;
    }
    out.b = Eigen::Vector2d(offset.real(), offset.imag());
    return out;
}

void add_complex_linear(AffineBuilder &builder, int row_re, int row_im, const ComplexLayout &layout,
                        const Eigen::RowVectorXcd &row, std::complex<double> offset)
{
    if (row.size() != layout.count)
        throw std::invalid_argument("add_complex_linear: row length differs from layout");
    for (int i = 0; i < layout.count; ++i)
    {
        const double rr = row(i).real(), ri = row(i).imag();
        builder.add(row_re, layout.re(i), rr);
        builder.add(row_re, layout.im(i), -ri);
        builder.add(row_im, layout.re(i), ri);
        builder.add(row_im, layout.im(i), rr);
    }
    builder.add_offset(row_re, offset.real());
    builder.add_offset(row_im, offset.imag());
}

} // namespace thzris::conic
