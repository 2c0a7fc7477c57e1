#include <transitgp/gp.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/SVD>

namespace transitgp::gp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kMaxLogStep = 10.0;

// Problem after eliminating monomial equalities: s = s0 + basis * z.
struct Reduced {
    SumExp objective;
    std::vector<SumExp> constraints;
    Eigen::VectorXd s0;
    Eigen::MatrixXd basis;
    bool has_equalities = false;

    Eigen::VectorXd lift(const Eigen::VectorXd& z) const
    {
        return has_equalities ? Eigen::VectorXd(s0 + basis * z) : z;
    }
    Eigen::VectorXd project(const Eigen::VectorXd& s) const
    {
        return has_equalities ? Eigen::VectorXd(basis.transpose() * (s - s0)) : s;
    }
    Eigen::Index dim() const { return has_equalities ? basis.cols() : s0.size(); }
};

SumExp substitute(const SumExp& f, const Eigen::VectorXd& s0, const Eigen::MatrixXd& basis)
{
    SumExp g;
    g.log_coefficients = f.log_coefficients + f.exponents * s0;
    const Eigen::MatrixXd dense = f.exponents * basis;
    g.exponents = dense.sparseView(1.0, 1e-14);
    g.exponents.makeCompressed();
    return g;
}

// Returns false if the equality system is inconsistent.
bool reduce(const ConvexGp& c, Reduced& red)
{
    const auto n = static_cast<Eigen::Index>(c.n_variables);
    red.s0 = Eigen::VectorXd::Zero(n);
    if (c.equality_exponents.rows() == 0) {
        red.objective = c.objective;
        red.constraints = c.inequalities;
        return true;
    }
    red.has_equalities = true;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(c.equality_exponents,
                                          Eigen::ComputeFullU | Eigen::ComputeFullV);
    const double tol = 1e-12 * std::max<double>(1.0, svd.singularValues().maxCoeff());
    svd.setThreshold(tol / std::max<double>(1.0, svd.singularValues().maxCoeff()));
    const Eigen::Index rank = svd.rank();
    red.s0 = svd.solve(-c.equality_offsets);
    const double mismatch = (c.equality_exponents * red.s0 + c.equality_offsets).norm();
    if (mismatch > 1e-9 * std::max(1.0, c.equality_offsets.norm())) return false;
    red.basis = svd.matrixV().rightCols(n - rank);
    red.objective = substitute(c.objective, red.s0, red.basis);
    for (const auto& f : c.inequalities) red.constraints.push_back(substitute(f, red.s0, red.basis));
    return true;
}

double max_constraint(const std::vector<SumExp>& cons, const Eigen::VectorXd& z)
{
    double m = -kInf;
    for (const auto& f : cons) m = std::max(m, log_sum_exp(f, z));
    return m;
}

// phi(z) = t * exp(lse0(z) - log_scale) - sum_u log(-lse_u(z)).
struct BarrierFunction {
    const SumExp& objective;
    const std::vector<SumExp>& constraints;
    double log_scale = 0.0;
    double t = 1.0;

    double value(const Eigen::VectorXd& z) const
    {
        const double lf = log_sum_exp(objective, z) - log_scale;
        if (lf > 700.0) return kInf;
        double v = t * std::exp(lf);
        for (const auto& f : constraints) {
            const double cu = log_sum_exp(f, z);
            if (!(cu < 0.0)) return kInf;
            v -= std::log(-cu);
        }
        return v;
    }

    void grad_hess(const Eigen::VectorXd& z, Eigen::VectorXd& g, Eigen::MatrixXd& h) const
    {
        // F = exp(L): grad F = F grad L, hess F = F (hess L + grad L grad L^T).
        const ValueGradHess l = log_sum_exp_value_grad_hess(objective, z);
        const double weight = t * std::exp(l.value - log_scale);
        g = weight * l.gradient;
        h = weight * (l.hessian + l.gradient * l.gradient.transpose());
        for (const auto& c : constraints) {
            const ValueGradHess cu = log_sum_exp_value_grad_hess(c, z);
            const double inv = 1.0 / (-cu.value);
            g += inv * cu.gradient;
            h += inv * cu.hessian + (inv * inv) * (cu.gradient * cu.gradient.transpose());
        }
    }

    double normalized_objective(const Eigen::VectorXd& z) const
    {
        return std::exp(log_sum_exp(objective, z) - log_scale);
    }
};

// Phase I over x = (z, w): minimize t*w - sum_u log(w - lse_u(z)).
struct PhaseOneFunction {
    const std::vector<SumExp>& constraints;
    double t = 1.0;

    double value(const Eigen::VectorXd& x) const
    {
        const Eigen::Index n = x.size() - 1;
        const Eigen::VectorXd z = x.head(n);
        const double w = x[n];
        double v = t * w;
        for (const auto& f : constraints) {
            const double gap = w - log_sum_exp(f, z);
            if (!(gap > 0.0)) return kInf;
            v -= std::log(gap);
        }
        return v;
    }

    void grad_hess(const Eigen::VectorXd& x, Eigen::VectorXd& g, Eigen::MatrixXd& h) const
    {
        const Eigen::Index n = x.size() - 1;
        const Eigen::VectorXd z = x.head(n);
        const double w = x[n];
        g = Eigen::VectorXd::Zero(n + 1);
        h = Eigen::MatrixXd::Zero(n + 1, n + 1);
        g[n] = t;
        for (const auto& f : constraints) {
            const ValueGradHess cu = log_sum_exp_value_grad_hess(f, z);
            const double inv = 1.0 / (w - cu.value);
            Eigen::VectorXd dgap(n + 1);
            dgap.head(n) = -cu.gradient;
            dgap[n] = 1.0;
            g -= inv * dgap;
            h.topLeftCorner(n, n) += inv * cu.hessian;
            h += (inv * inv) * (dgap * dgap.transpose());
        }
    }
};

struct NewtonOutcome {
    int iterations = 0;
    bool converged = false;
    bool diverged = false;
    bool early_stop = false;
};

Eigen::VectorXd newton_direction(const Eigen::MatrixXd& h, const Eigen::VectorXd& g)
{
    Eigen::LLT<Eigen::MatrixXd> llt(h);
    if (llt.info() == Eigen::Success) {
        Eigen::VectorXd dx = -llt.solve(g);
        if (dx.allFinite()) return dx;
    }
    const double n = static_cast<double>(h.rows());
    double ridge = 1e-12 * (1.0 + std::abs(h.trace()) / n);
    for (int attempt = 0; attempt < 30; ++attempt, ridge *= 10.0) {
        Eigen::MatrixXd reg = h;
        reg.diagonal().array() += ridge;
        Eigen::LLT<Eigen::MatrixXd> r(reg);
        if (r.info() == Eigen::Success) {
            Eigen::VectorXd dx = -r.solve(g);
            if (dx.allFinite()) return dx;
        }
    }
    return -g;
}

template <class Function, class Early, class Diverged>
NewtonOutcome newton_minimize(const Function& fn, Eigen::VectorXd& x, const SolveOptions& o,
                              bool relative_tolerance, Early early, Diverged diverged)
{
    NewtonOutcome out;
    Eigen::VectorXd g;
    Eigen::MatrixXd h;
    double phi = fn.value(x);
    for (; out.iterations < o.max_newton_per_center; ++out.iterations) {
        if (early(x)) {
            out.early_stop = true;
            return out;
        }
        fn.grad_hess(x, g, h);
        const Eigen::VectorXd dx = newton_direction(h, g);
        const double slope = g.dot(dx);
        const double decrement2 = -slope;
        const double scale = relative_tolerance ? std::max(phi, 1e-300) : 1.0;
        if (0.5 * decrement2 <= o.newton_tolerance * scale) {
            out.converged = true;
            return out;
        }
        const double slack = 1e-13 * (std::abs(phi) + 1.0);
        // Limit each move to a factor of e^kMaxLogStep in any variable.
        const double longest = dx.cwiseAbs().maxCoeff();
        double step = longest > kMaxLogStep ? kMaxLogStep / longest : 1.0;
        double trial = kInf;
        while (step > 1e-16) {
            trial = fn.value(x + step * dx);
            if (std::isfinite(trial) && trial <= phi + o.armijo * step * slope + slack) break;
            step *= o.backtrack;
        }
        if (!(step > 1e-16)) {
            // No representable decrease left along the Newton direction.
            out.converged = decrement2 < 1e-6 * scale;
            return out;
        }
        x += step * dx;
        phi = trial;
        if (diverged(x)) {
            out.diverged = true;
            ++out.iterations;
            return out;
        }
    }
    return out;
}

std::vector<double> exp_point(const Eigen::VectorXd& s)
{
    std::vector<double> r(static_cast<std::size_t>(s.size()));
    for (Eigen::Index l = 0; l < s.size(); ++l) r[static_cast<std::size_t>(l)] = std::exp(s[l]);
    return r;
}

class Solver {
public:
    Solver(const GpProblem& problem, const SolveOptions& opts)
        : problem_(problem), opts_(opts), convex_(to_convex_form(problem)),
          start_time_(std::chrono::steady_clock::now())
    {
        consistent_ = reduce(convex_, red_);
        result_.report.duals.assign(problem.inequalities.size(), 0.0);
    }

    SolveResult run(const FeasibilityRepair& repair)
    {
        if (!consistent_) return finish_infeasible("monomial equalities are inconsistent");

        Eigen::VectorXd z = Eigen::VectorXd::Zero(red_.dim());
        const auto unconstrained = minimize_unconstrained(z);
        if (unconstrained.converged && !unconstrained.diverged) {
            if (red_.constraints.empty() || max_constraint(red_.constraints, z) < 0.0) {
                return finish(z, {}, 0.0);
            }
        } else if (red_.constraints.empty()) {
            return finish_unbounded(z);
        }

        std::optional<Eigen::VectorXd> start;
        if (repair && unconstrained.converged && !unconstrained.diverged) {
            if (auto r = repair(exp_point(red_.lift(z)))) {
                Eigen::VectorXd candidate = red_.project(log_vector(*r));
                if (max_constraint(red_.constraints, candidate) < 0.0) start = candidate;
            }
        }
        if (!start) {
            Eigen::VectorXd z0 = unconstrained.diverged ? Eigen::VectorXd::Zero(red_.dim()) : z;
            start = phase_one(z0);
            if (!start) return finish_infeasible("no strictly feasible point exists");
        }
        return barrier(*start);
    }

    SolveResult run_from(std::span<const double> r0)
    {
        if (!consistent_) return finish_infeasible("monomial equalities are inconsistent");
        if (r0.size() != problem_.n_variables()) {
            throw std::invalid_argument("solve_gp_from: start has wrong dimension");
        }
        Eigen::VectorXd z = red_.project(log_vector(std::vector<double>(r0.begin(), r0.end())));
        if (red_.constraints.empty()) {
            const auto out = minimize_unconstrained(z);
            if (out.diverged) return finish_unbounded(z);
            return finish(z, {}, 0.0);
        }
        if (!(max_constraint(red_.constraints, z) < 0.0)) {
            throw std::invalid_argument("solve_gp_from: start point is not strictly feasible");
        }
        return barrier(z);
    }

private:
    static Eigen::VectorXd log_vector(const std::vector<double>& r)
    {
        Eigen::VectorXd s(static_cast<Eigen::Index>(r.size()));
        for (std::size_t l = 0; l < r.size(); ++l) {
            if (!(r[l] > 0.0)) throw std::invalid_argument("start point must be strictly positive");
            s[static_cast<Eigen::Index>(l)] = std::log(r[l]);
        }
        return s;
    }

    SolveOptions polish_options() const
    {
        SolveOptions o = opts_;
        o.newton_tolerance = std::min(o.newton_tolerance, opts_.polish_tolerance);
        return o;
    }

    bool out_of_bounds(const Eigen::VectorXd& z) const
    {
        return red_.lift(z).cwiseAbs().maxCoeff() > opts_.divergence_log_bound;
    }

    NewtonOutcome minimize_unconstrained(Eigen::VectorXd& z)
    {
        static const std::vector<SumExp> kNone;
        BarrierFunction fn{red_.objective, kNone, log_sum_exp(red_.objective, z), 1.0};
        auto out = newton_minimize(
            fn, z, polish_options(), true, [](const Eigen::VectorXd&) { return false; },
            [this](const Eigen::VectorXd& x) { return out_of_bounds(x); });
        result_.report.newton_iterations += out.iterations;
        return out;
    }

    std::optional<Eigen::VectorXd> phase_one(const Eigen::VectorXd& z0)
    {
        const Eigen::Index n = z0.size();
        Eigen::VectorXd x(n + 1);
        x.head(n) = z0;
        x[n] = max_constraint(red_.constraints, z0) + 1.0;
        PhaseOneFunction fn{red_.constraints, 1.0};
        const double m = static_cast<double>(red_.constraints.size());
        auto feasible = [&](const Eigen::VectorXd& xx) {
            return max_constraint(red_.constraints, xx.head(n)) < -1e-3;
        };
        for (int outer = 0; outer < opts_.max_outer; ++outer) {
            const auto out = newton_minimize(
                fn, x, opts_, false, feasible, [](const Eigen::VectorXd&) { return false; });
            result_.report.newton_iterations += out.iterations;
            const double worst = max_constraint(red_.constraints, x.head(n));
            if (worst < 0.0) return Eigen::VectorXd(x.head(n));
            // x[n] - m/t lower-bounds the smallest achievable max constraint.
            if (x[n] - m / fn.t > 0.0) return std::nullopt;
            fn.t *= opts_.t_growth;
        }
        return std::nullopt;
    }

    SolveResult barrier(Eigen::VectorXd z)
    {
        result_.report.barrier_used = true;
        const double m = static_cast<double>(red_.constraints.size());
        BarrierFunction fn{red_.objective, red_.constraints, log_sum_exp(red_.objective, z),
                           opts_.t_initial};
        const double scale = std::exp(fn.log_scale);
        bool diverged = false;
        for (int outer = 0; outer < opts_.max_outer; ++outer) {
            ++result_.report.outer_iterations;
            const auto out = newton_minimize(
                fn, z, opts_, false, [](const Eigen::VectorXd&) { return false; },
                [this](const Eigen::VectorXd& x) { return out_of_bounds(x); });
            result_.report.newton_iterations += out.iterations;
            if (out.diverged) {
                diverged = true;
                break;
            }
            if (m / fn.t <= opts_.gap_tolerance * fn.normalized_objective(z)) break;
            fn.t *= opts_.t_growth;
        }
        if (!diverged) {
            // Recenter tightly on the final barrier path point before reading off duals.
            const auto out = newton_minimize(
                fn, z, polish_options(), false, [](const Eigen::VectorXd&) { return false; },
                [this](const Eigen::VectorXd& x) { return out_of_bounds(x); });
            result_.report.newton_iterations += out.iterations;
            diverged = out.diverged;
        }
        if (diverged) return finish_unbounded(z);

        std::vector<double> duals(red_.constraints.size());
        for (std::size_t u = 0; u < red_.constraints.size(); ++u) {
            const double cu = log_sum_exp(red_.constraints[u], z);
            duals[u] = scale / (fn.t * (-cu));
        }
        return finish(z, duals, scale * m / fn.t);
    }

    SolveResult finish(const Eigen::VectorXd& z, std::vector<double> duals, double gap)
    {
        auto& rep = result_.report;
        result_.r = exp_point(red_.lift(z));
        if (duals.empty()) duals.assign(problem_.inequalities.size(), 0.0);
        rep.duals = duals;
        rep.objective = eval_posynomial(problem_.objective, result_.r);
        rep.kkt = check_kkt(problem_, result_.r, rep.duals);
        rep.gap_bound = gap;
        rep.relative_gap = rep.objective > 0.0 ? gap / rep.objective : gap;
        const bool ok = rep.kkt.stationarity < opts_.stationarity_tolerance &&
                        rep.kkt.primal_feasibility <= 1.0 + opts_.feasibility_tolerance &&
                        rep.kkt.equality_residual <= opts_.feasibility_tolerance &&
                        rep.relative_gap < opts_.gap_tolerance * (1.0 + 1e-12);
        rep.status = ok ? SolveStatus::Optimal : SolveStatus::MaxIterations;
        if (!ok) rep.message = "tolerances not met within iteration limits";
        return stamp();
    }

    SolveResult finish_unbounded(const Eigen::VectorXd& z)
    {
        result_.r = exp_point(red_.lift(z));
        result_.report.status = SolveStatus::Unbounded;
        result_.report.objective = eval_posynomial(problem_.objective, result_.r);
        result_.report.message = "iterates diverge: objective is not bounded away from its infimum";
        return stamp();
    }

    SolveResult finish_infeasible(const std::string& why)
    {
        result_.report.status = SolveStatus::Infeasible;
        result_.report.message = why;
        return stamp();
    }

    SolveResult stamp()
    {
        const auto elapsed = std::chrono::steady_clock::now() - start_time_;
        result_.report.wall_time_ms = std::chrono::duration<double, std::milli>(elapsed).count();
        return std::move(result_);
    }

    const GpProblem& problem_;
    SolveOptions opts_;
    ConvexGp convex_;
    Reduced red_;
    bool consistent_ = true;
    SolveResult result_;
    std::chrono::steady_clock::time_point start_time_;
};

}  // namespace

SolveResult solve_gp(const GpProblem& problem, const SolveOptions& opts,
                     const FeasibilityRepair& repair)
{
    Solver solver(problem, opts);
    return solver.run(repair);
}

SolveResult solve_gp_from(const GpProblem& problem, std::span<const double> start,
                          const SolveOptions& opts)
{
    Solver solver(problem, opts);
    return solver.run_from(start);
}

}  // namespace transitgp::gp
