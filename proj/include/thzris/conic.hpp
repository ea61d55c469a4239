#pragma once

#include <complex>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace thzris::conic {

// Cone membership of an affine block s = A x + b:
//   zero    s = 0
//   nonneg  s >= 0 elementwise
//   soc     s0 >= ||s[1:]||
//   rsoc    s0 * s1 >= ||s[2:]||^2, s0, s1 >= 0
//   exp     s1 * exp(s0 / s1) <= s2, s1 > 0 (closure included)
enum class Cone
{
    zero,
    nonneg,
    soc,
    rsoc,
    exp
};

const char *cone_name(Cone cone);
Cone parse_cone(const std::string &name);

// Dense block over the variable subset `cols` (sorted, distinct).
struct ConeBlock
{
    Cone cone = Cone::nonneg;
    std::vector<int> cols;
    Eigen::MatrixXd a; // rows x cols.size()
    Eigen::VectorXd b;

    int rows() const { return static_cast<int>(b.size()); }
};

// Accumulates sparse affine rows and emits a compact ConeBlock.
class AffineBuilder
{
  public:
    // Returns the index of the new row.
    int add_row(double offset = 0.0);
    void add(int row, int var, double coef);
    void add_offset(int row, double offset);
    int rows() const { return static_cast<int>(offsets_.size()); }
    ConeBlock finish(Cone cone) const;

  private:
    std::vector<std::vector<std::pair<int, double>>> terms_;
    std::vector<double> offsets_;
};

// maximize objective^T x  subject to  A_i x + b_i in K_i.
struct ConicProgram
{
    int n = 0;
    Eigen::VectorXd objective;
    std::vector<ConeBlock> blocks;

    // Appends `count` variables with zero objective; returns the first index.
    int add_variables(int count);
    void add_block(ConeBlock block);

    // Throws std::invalid_argument on malformed blocks.
    void validate() const;
    // Sum of barrier parameters of the inequality blocks.
    double barrier_parameter() const;
};

enum class SolveStatus
{
    optimal,
    infeasible,
    unbounded,
    max_iter,
    numerical_failure
};

const char *to_string(SolveStatus status);

struct ConicSolution
{
    SolveStatus status = SolveStatus::numerical_failure;
    Eigen::VectorXd x;
    double objective = 0.0;
    double primal_residual = 0.0; // equality residual; inequalities are kept strictly interior
    double dual_residual = 0.0;   // ||c + sum A_i^T z_i||_inf at the final centre
    double gap = 0.0;             // barrier parameter / t
    int iterations = 0;           // Newton steps, both phases
};

struct SolverSettings
{
    double tol = 1e-7;
    int max_iter = 200; // Newton steps per phase
};

// Path-following barrier method. Phase I is skipped when `hint` is strictly
// feasible. Infeasible or unbounded programs are reported, never returned as
// optimal.
ConicSolution solve(const ConicProgram &program, const SolverSettings &settings = {},
                    std::span<const double> hint = {});

// True if s lies in the interior of the cone (zero cone: |s| <= tol).
bool in_interior(Cone cone, const Eigen::VectorXd &s);

// Plain-text format, one block per line:
//   conelp 1
//   vars <n>
//   maximize <c_0> ... <c_{n-1}>
//   <cone> <rows> A <nnz> (<row> <col> <value>)* b <b_0> ... <b_{rows-1}>
void write_program(std::ostream &out, const ConicProgram &program);
ConicProgram read_program(std::istream &in);

// Complex variables are embedded as interleaved (re, im) pairs: complex
// entry i of a vector starting at real index `base` sits at base + 2i.
struct ComplexLayout
{
    int base = 0;
    int count = 0;

    int re(int i) const { return base + 2 * i; }
    int im(int i) const { return base + 2 * i + 1; }
};

Eigen::VectorXd to_real(const Eigen::VectorXcd &z);
Eigen::VectorXcd to_complex(std::span<const double> x);

// Real map with ||a x + b||^2 = |coef^H z + offset|^2 for x = to_real(z).
struct RealAffine
{
    Eigen::MatrixXd a; // 2 x 2n
    Eigen::VectorXd b; // 2
};

RealAffine embed_abs_squared(const Eigen::VectorXcd &coef, std::complex<double> offset);

// Appends Re and Im of (row . z + offset), z laid out per `layout`, to two
// existing builder rows.
void add_complex_linear(AffineBuilder &builder, int row_re, int row_im, const ComplexLayout &layout,
                        const Eigen::RowVectorXcd &row, std::complex<double> offset = 0.0);

} // namespace thzris::conic
