#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace transitgp::gp {

/// d * prod_l r_l^{a_l}. A zero-coefficient term is represented by omission.
struct Monomial {
    double coefficient = 1.0;
    std::vector<double> exponents;
};

struct Posynomial {
    std::vector<Monomial> terms;
};

/// Throws std::invalid_argument if any r_l <= 0 or the sizes disagree.
double eval_monomial(const Monomial& m, std::span<const double> r);
double eval_posynomial(const Posynomial& p, std::span<const double> r);

/// minimize f0(r)  s.t.  f_u(r) <= 1,  g_w(r) = 1,  r > 0.
struct GpProblem {
    std::vector<std::string> variable_names;
    Posynomial objective;
    std::vector<Posynomial> inequalities;
    std::vector<Monomial> equalities;

    std::size_t n_variables() const { return variable_names.size(); }

    /// Checks dimensions and coefficient signs; throws std::invalid_argument.
    void validate() const;
};

using SparseRows = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Log-space image of a posynomial: s -> sum_k exp(a_k . s + b_k).
struct SumExp {
    SparseRows exponents;            // K x L
    Eigen::VectorXd log_coefficients;  // K

    Eigen::Index n_terms() const { return log_coefficients.size(); }
};

struct ConvexGp {
    std::size_t n_variables = 0;
    SumExp objective;
    std::vector<SumExp> inequalities;
    Eigen::MatrixXd equality_exponents;  // W x L
    Eigen::VectorXd equality_offsets;    // W, b_w = ln d_w
};

SumExp to_sum_exp(const Posynomial& p, std::size_t n_variables);
ConvexGp to_convex_form(const GpProblem& p);

struct ValueGradHess {
    double value = 0.0;
    Eigen::VectorXd gradient;
    Eigen::MatrixXd hessian;
};

/// F(s) = sum_k exp(a_k . s + b_k) with its gradient and Hessian, evaluated
/// with a max shift. Throws std::overflow_error if F itself is not
/// representable.
ValueGradHess objective_value_grad_hess(const SumExp& f, const Eigen::VectorXd& s);
ValueGradHess objective_value_grad_hess(const ConvexGp& c, const Eigen::VectorXd& s);

/// ln F(s) with gradient and Hessian (softmax-weighted).
ValueGradHess log_sum_exp_value_grad_hess(const SumExp& f, const Eigen::VectorXd& s);

/// ln F(s), +inf never returned for finite s.
double log_sum_exp(const SumExp& f, const Eigen::VectorXd& s);

enum class SolveStatus { Optimal, Infeasible, Unbounded, MaxIterations };
const char* status_name(SolveStatus s);

struct SolveOptions {
    double t_initial = 1.0;
    double t_growth = 20.0;
    double gap_tolerance = 1e-9;        // U / t relative to the objective
    double newton_tolerance = 1e-10;    // half squared Newton decrement
    double polish_tolerance = 1e-24;    // same, for the final centering step
    double armijo = 0.01;
    double backtrack = 0.5;
    int max_newton_per_center = 200;
    int max_outer = 60;
    double stationarity_tolerance = 1e-6;
    double feasibility_tolerance = 1e-8;
    /// |ln r_l| beyond this bound is treated as divergence to 0 or infinity.
    double divergence_log_bound = 50.0;
};

struct KktReport {
    double stationarity = 0.0;            // scaled log-space Lagrangian gradient norm
    double primal_feasibility = 0.0;      // max_u f_u(r), 0 if no constraints
    double equality_residual = 0.0;       // max_w |g_w(r) - 1|
    double dual_min = 0.0;                // min_u lambda_u, 0 if no constraints
    double complementary_slackness = 0.0; // sum_u |lambda_u ln f_u(r)|
};

struct SolveReport {
    SolveStatus status = SolveStatus::MaxIterations;
    double objective = 0.0;
    int outer_iterations = 0;
    int newton_iterations = 0;
    KktReport kkt;
    double gap_bound = 0.0;       // U / t in objective units
    double relative_gap = 0.0;    // gap_bound / objective
    double wall_time_ms = 0.0;
    bool barrier_used = false;
    std::vector<double> duals;    // one per inequality, for ln f_u <= 0
    std::string message;
};

struct SolveResult {
    std::vector<double> r;
    SolveReport report;
};

/// Maps the unconstrained minimizer to a strictly feasible point, or returns
/// nullopt to fall back on the generic phase-I search.
using FeasibilityRepair =
    std::function<std::optional<std::vector<double>>(std::span<const double> r_unconstrained)>;

/// Unconstrained Newton first; if that point violates a constraint, a
/// strictly feasible start comes from `repair` (or phase I) and a log-barrier
/// interior-point method finishes the solve.
SolveResult solve_gp(const GpProblem& problem, const SolveOptions& opts = {},
                     const FeasibilityRepair& repair = {});

/// Barrier method from a caller-supplied strictly feasible point.
SolveResult solve_gp_from(const GpProblem& problem, std::span<const double> start,
                          const SolveOptions& opts = {});

/// Residuals of the log-space KKT system at r with inequality multipliers
/// `duals` (for the constraints ln f_u <= 0). Equality multipliers are
/// eliminated by projection. Stationarity is scaled by sum_k e_k |a_k|.
KktReport check_kkt(const GpProblem& problem, std::span<const double> r,
                    std::span<const double> duals);

/// Least-squares multipliers over the constraints with f_u >= 1 - active_tol,
/// clipped at zero; zeros elsewhere.
std::vector<double> estimate_duals(const GpProblem& problem, std::span<const double> r,
                                   double active_tol = 1e-6);

}  // namespace transitgp::gp
