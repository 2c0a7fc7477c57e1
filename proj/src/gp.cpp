#include <transitgp/gp.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace transitgp::gp {

double eval_monomial(const Monomial& m, std::span<const double> r)
{
    if (m.exponents.size() != r.size()) {
        throw std::invalid_argument("eval_monomial: exponent count " +
                                    std::to_string(m.exponents.size()) +
                                    " does not match variable count " + std::to_string(r.size()));
    }
    double value = m.coefficient;
    for (std::size_t l = 0; l < r.size(); ++l) {
        if (!(r[l] > 0.0)) {
            throw std::invalid_argument("eval_monomial: variable " + std::to_string(l) +
                                        " is not strictly positive");
        }
        if (m.exponents[l] != 0.0) value *= std::pow(r[l], m.exponents[l]);
    }
    return value;
}

double eval_posynomial(const Posynomial& p, std::span<const double> r)
{
    double sum = 0.0;
    for (const auto& term : p.terms) sum += eval_monomial(term, r);
    return sum;
}

namespace {

void validate_posynomial(const Posynomial& p, std::size_t n, const std::string& what)
{
    for (const auto& t : p.terms) {
        if (t.exponents.size() != n) {
            throw std::invalid_argument(what + ": term has " + std::to_string(t.exponents.size()) +
                                        " exponents, problem has " + std::to_string(n) +
                                        " variables");
        }
        if (!(t.coefficient > 0.0) || !std::isfinite(t.coefficient)) {
            throw std::invalid_argument(what + ": coefficients must be positive and finite");
        }
    }
}

}  // namespace

void GpProblem::validate() const
{
    const std::size_t n = n_variables();
    if (objective.terms.empty()) {
        throw std::invalid_argument("GpProblem: objective posynomial is empty");
    }
    validate_posynomial(objective, n, "objective");
    for (std::size_t u = 0; u < inequalities.size(); ++u) {
        if (inequalities[u].terms.empty()) {
            throw std::invalid_argument("GpProblem: inequality " + std::to_string(u) + " is empty");
        }
        validate_posynomial(inequalities[u], n, "inequality " + std::to_string(u));
    }
    for (std::size_t w = 0; w < equalities.size(); ++w) {
        validate_posynomial(Posynomial{{equalities[w]}}, n, "equality " + std::to_string(w));
    }
}

SumExp to_sum_exp(const Posynomial& p, std::size_t n_variables)
{
    SumExp f;
    const auto k = static_cast<Eigen::Index>(p.terms.size());
    f.exponents.resize(k, static_cast<Eigen::Index>(n_variables));
    f.log_coefficients.resize(k);
    std::vector<Eigen::Triplet<double>> triplets;
    for (Eigen::Index i = 0; i < k; ++i) {
        const auto& t = p.terms[static_cast<std::size_t>(i)];
        f.log_coefficients[i] = std::log(t.coefficient);
        for (std::size_t l = 0; l < n_variables; ++l) {
            if (t.exponents[l] != 0.0) {
                triplets.emplace_back(i, static_cast<Eigen::Index>(l), t.exponents[l]);
            }
        }
    }
    f.exponents.setFromTriplets(triplets.begin(), triplets.end());
    f.exponents.makeCompressed();
    return f;
}

ConvexGp to_convex_form(const GpProblem& p)
{
    p.validate();
    ConvexGp c;
    c.n_variables = p.n_variables();
    c.objective = to_sum_exp(p.objective, c.n_variables);
    c.inequalities.reserve(p.inequalities.size());
    for (const auto& f : p.inequalities) c.inequalities.push_back(to_sum_exp(f, c.n_variables));
    const auto w = static_cast<Eigen::Index>(p.equalities.size());
    const auto l = static_cast<Eigen::Index>(c.n_variables);
    c.equality_exponents = Eigen::MatrixXd::Zero(w, l);
    c.equality_offsets = Eigen::VectorXd::Zero(w);
    for (Eigen::Index i = 0; i < w; ++i) {
        const auto& g = p.equalities[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < l; ++j) c.equality_exponents(i, j) = g.exponents[j];
        c.equality_offsets[i] = std::log(g.coefficient);
    }
    return c;
}

namespace {

// Exponents z_k = a_k . s + b_k.
Eigen::VectorXd term_exponents(const SumExp& f, const Eigen::VectorXd& s)
{
    return f.exponents * s + f.log_coefficients;
}

// Weights w_k = exp(z_k - zmax) and zmax.
double shifted_weights(const Eigen::VectorXd& z, Eigen::VectorXd& w)
{
    const double zmax = z.size() ? z.maxCoeff() : -std::numeric_limits<double>::infinity();
    w = (z.array() - zmax).exp().matrix();
    return zmax;
}

void accumulate_hessian(const SumExp& f, const Eigen::VectorXd& w, Eigen::MatrixXd& h)
{
    for (Eigen::Index k = 0; k < f.exponents.outerSize(); ++k) {
        const double wk = w[k];
        if (wk == 0.0) continue;
        for (SparseRows::InnerIterator i(f.exponents, k); i; ++i) {
            const double ai = wk * i.value();
            for (SparseRows::InnerIterator j(f.exponents, k); j; ++j) {
                h(i.col(), j.col()) += ai * j.value();
            }
        }
    }
}

}  // namespace

ValueGradHess objective_value_grad_hess(const SumExp& f, const Eigen::VectorXd& s)
{
    const Eigen::Index n = f.exponents.cols();
    ValueGradHess out;
    out.gradient = Eigen::VectorXd::Zero(n);
    out.hessian = Eigen::MatrixXd::Zero(n, n);
    if (f.n_terms() == 0) return out;
    Eigen::VectorXd w;
    const double zmax = shifted_weights(term_exponents(f, s), w);
    const double scale = std::exp(zmax);
    if (!std::isfinite(scale)) {
        throw std::overflow_error("sum-exp objective overflows at this point (solver scale error)");
    }
    out.value = scale * w.sum();
    out.gradient = scale * (f.exponents.transpose() * w);
    accumulate_hessian(f, w, out.hessian);
    out.hessian *= scale;
    return out;
}

ValueGradHess objective_value_grad_hess(const ConvexGp& c, const Eigen::VectorXd& s)
{
    return objective_value_grad_hess(c.objective, s);
}

double log_sum_exp(const SumExp& f, const Eigen::VectorXd& s)
{
    if (f.n_terms() == 0) return -std::numeric_limits<double>::infinity();
    Eigen::VectorXd w;
    const double zmax = shifted_weights(term_exponents(f, s), w);
    return zmax + std::log(w.sum());
}

ValueGradHess log_sum_exp_value_grad_hess(const SumExp& f, const Eigen::VectorXd& s)
{
    const Eigen::Index n = f.exponents.cols();
    ValueGradHess out;
    Eigen::VectorXd w;
    const double zmax = shifted_weights(term_exponents(f, s), w);
    const double total = w.sum();
    w /= total;
    out.value = zmax + std::log(total);
    out.gradient = f.exponents.transpose() * w;
    out.hessian = Eigen::MatrixXd::Zero(n, n);
    accumulate_hessian(f, w, out.hessian);
    out.hessian -= out.gradient * out.gradient.transpose();
    return out;
}

const char* status_name(SolveStatus s)
{
    switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::Unbounded: return "unbounded";
    case SolveStatus::MaxIterations: return "max-iterations";
    }
    return "unknown";
}

namespace {

Eigen::VectorXd log_point(std::span<const double> r)
{
    Eigen::VectorXd s(static_cast<Eigen::Index>(r.size()));
    for (std::size_t l = 0; l < r.size(); ++l) {
        if (!(r[l] > 0.0)) throw std::invalid_argument("point must be strictly positive");
        s[static_cast<Eigen::Index>(l)] = std::log(r[l]);
    }
    return s;
}

// Projector onto the null space of the equality exponent matrix.
Eigen::MatrixXd null_space_projector(const Eigen::MatrixXd& a_eq, Eigen::Index n)
{
    if (a_eq.rows() == 0) return Eigen::MatrixXd::Identity(n, n);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a_eq, Eigen::ComputeFullV);
    const double tol = 1e-12 * std::max<double>(1.0, svd.singularValues().maxCoeff());
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
        if (svd.singularValues()[i] > tol) ++rank;
    const Eigen::MatrixXd basis = svd.matrixV().rightCols(n - rank);
    return basis * basis.transpose();
}

// Sum of e_k |a_k| used to scale the stationarity residual.
double gross_gradient_scale(const SumExp& f, const Eigen::VectorXd& s)
{
    const Eigen::VectorXd z = term_exponents(f, s);
    double g = 0.0;
    for (Eigen::Index k = 0; k < f.exponents.outerSize(); ++k) {
        double norm2 = 0.0;
        for (SparseRows::InnerIterator i(f.exponents, k); i; ++i) norm2 += i.value() * i.value();
        g += std::exp(z[k]) * std::sqrt(norm2);
    }
    return g;
}

}  // namespace

KktReport check_kkt(const GpProblem& problem, std::span<const double> r,
                    std::span<const double> duals)
{
    const ConvexGp c = to_convex_form(problem);
    if (r.size() != c.n_variables) throw std::invalid_argument("check_kkt: dimension mismatch");
    if (duals.size() != c.inequalities.size()) {
        throw std::invalid_argument("check_kkt: one dual per inequality is required");
    }
    const Eigen::VectorXd s = log_point(r);
    const auto n = static_cast<Eigen::Index>(c.n_variables);

    KktReport rep;
    Eigen::VectorXd residual = objective_value_grad_hess(c.objective, s).gradient;
    rep.dual_min = duals.empty() ? 0.0 : std::numeric_limits<double>::infinity();
    for (std::size_t u = 0; u < c.inequalities.size(); ++u) {
        const auto lse = log_sum_exp_value_grad_hess(c.inequalities[u], s);
        residual += duals[u] * lse.gradient;
        rep.primal_feasibility = std::max(rep.primal_feasibility,
                                          eval_posynomial(problem.inequalities[u], r));
        rep.dual_min = std::min(rep.dual_min, duals[u]);
        rep.complementary_slackness += std::abs(duals[u] * lse.value);
    }
    for (const auto& g : problem.equalities) {
        rep.equality_residual = std::max(rep.equality_residual, std::abs(eval_monomial(g, r) - 1.0));
    }
    residual = null_space_projector(c.equality_exponents, n) * residual;
    const double scale = gross_gradient_scale(c.objective, s);
    rep.stationarity = scale > 0.0 ? residual.norm() / scale : residual.norm();
    return rep;
}

std::vector<double> estimate_duals(const GpProblem& problem, std::span<const double> r,
                                   double active_tol)
{
    const ConvexGp c = to_convex_form(problem);
    const Eigen::VectorXd s = log_point(r);
    const auto n = static_cast<Eigen::Index>(c.n_variables);
    std::vector<double> duals(c.inequalities.size(), 0.0);
    std::vector<std::size_t> active;
    std::vector<Eigen::VectorXd> grads;
    for (std::size_t u = 0; u < c.inequalities.size(); ++u) {
        if (eval_posynomial(problem.inequalities[u], r) >= 1.0 - active_tol) {
            active.push_back(u);
            grads.push_back(log_sum_exp_value_grad_hess(c.inequalities[u], s).gradient);
        }
    }
    if (active.empty()) return duals;
    const Eigen::MatrixXd proj = null_space_projector(c.equality_exponents, n);
    Eigen::MatrixXd jac(n, static_cast<Eigen::Index>(active.size()));
    for (std::size_t i = 0; i < active.size(); ++i) jac.col(static_cast<Eigen::Index>(i)) = proj * grads[i];
    const Eigen::VectorXd rhs = -(proj * objective_value_grad_hess(c.objective, s).gradient);
    const Eigen::VectorXd lambda = jac.colPivHouseholderQr().solve(rhs);
    for (std::size_t i = 0; i < active.size(); ++i) {
        duals[active[i]] = std::max(0.0, lambda[static_cast<Eigen::Index>(i)]);
    }
    return duals;
}

}  // namespace transitgp::gp
