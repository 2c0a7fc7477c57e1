#include <transitgp/coordinate_descent.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

namespace transitgp::cd {

void CdOptions::validate() const
{
    if (!(tolerance > 0.0)) throw std::invalid_argument("CdOptions: tolerance must be positive");
    if (n_starts < 1) throw std::invalid_argument("CdOptions: n_starts must be >= 1");
    if (max_iterations < 1) throw std::invalid_argument("CdOptions: max_iterations must be >= 1");
    if (!(delta_init_min > 0.0 && delta_init_max >= delta_init_min && h_init_min > 0.0 &&
          h_init_max >= h_init_min)) {
        throw std::invalid_argument("CdOptions: invalid initialization ranges");
    }
    if (!(h_max > 0.0) || !(delta_min > 0.0)) {
        throw std::invalid_argument("CdOptions: h_max and delta_min must be positive");
    }
}

int CdTrace::total_clamp_events() const
{
    return std::accumulate(clamp_counts.begin(), clamp_counts.end(), 0);
}

namespace {

double mean(const std::vector<double>& v)
{
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double at(const std::vector<double>& v, int i)
{
    return v.size() == 1 ? v[0] : v[static_cast<std::size_t>(i)];
}

// Integral of the line density across the study area, e.g. Delta * sum_x delta_NS(x).
double line_integral(const std::vector<double>& v, const DemandSums& s)
{
    double total = 0.0;
    for (int i = 0; i < s.n_cells; ++i) total += at(v, i);
    return s.cell_size * total;
}

// Per-line fleet coefficient: (pi_k |R| + pi_h |R| / v + pi_h tau int delta_perp) / mu.
double fleet_coefficient(double perpendicular_integral, const DemandSums& s, const ModelParams& p)
{
    const double side = s.n_cells * s.cell_size;
    return (p.pi_k * side + p.pi_h * side / p.v + p.pi_h * p.tau * perpendicular_integral) / p.mu;
}

std::vector<double> half_cell(const std::vector<double>& row_sums, double cell_size)
{
    std::vector<double> out(row_sums.size());
    for (std::size_t i = 0; i < row_sums.size(); ++i) out[i] = 0.5 * cell_size * row_sums[i];
    return out;
}

std::vector<double> headway_axis(const std::vector<double>& delta, double fleet,
                                 const std::vector<double>& wait, bool homogeneous,
                                 const CdOptions& opts)
{
    auto candidate = [&](double d, double w) {
        return w > 0.0 ? std::sqrt(2.0 * d * fleet / w) : opts.h_max;
    };
    if (homogeneous) return {candidate(delta[0], mean(wait))};
    std::vector<double> h(delta.size());
    for (std::size_t i = 0; i < delta.size(); ++i) h[i] = candidate(delta[i], wait[i]);
    return h;
}

}  // namespace

Headways cd_step_headways(const DesignVariables& design, const DemandSums& sums,
                          const ModelParams& params, const CdOptions& opts)
{
    design.validate(sums.n_cells);
    const bool hom = design.kind == NetworkKind::Homogeneous;
    const double fleet_ew = fleet_coefficient(line_integral(design.delta_ns, sums), sums, params);
    const double fleet_ns = fleet_coefficient(line_integral(design.delta_ew, sums), sums, params);
    Headways h;
    h.ew = headway_axis(design.delta_ew, fleet_ew, half_cell(sums.wait_ew_row, sums.cell_size), hom,
                        opts);
    h.ns = headway_axis(design.delta_ns, fleet_ns, half_cell(sums.wait_ns_col, sums.cell_size), hom,
                        opts);
    return h;
}

DesignVariables cd_step_densities(const DesignVariables& design, const Headways& candidates,
                                  const DemandSums& sums, const ModelParams& params,
                                  const CdOptions& opts)
{
    design.validate(sums.n_cells);
    const bool hom = design.kind == NetworkKind::Homogeneous;
    const int n = sums.n_cells;
    const double side = n * sums.cell_size;
    const double walk = params.beta_w / (4.0 * params.v_w);

    // delta_ew uses delta_ns from the previous iterate and vice versa.
    auto axis = [&](const std::vector<double>& own_h, const std::vector<double>& perp_delta,
                    const std::vector<double>& perp_h, const std::vector<double>& access_sums,
                    const std::vector<double>& perp_flux_sums) {
        const double perp_integral = line_integral(perp_delta, sums);
        const double fleet = fleet_coefficient(perp_integral, sums, params);
        double perp_frequency = 0.0;
        for (int i = 0; i < n; ++i) perp_frequency += at(perp_delta, i) / at(perp_h, i);
        perp_frequency *= sums.cell_size;
        const double common = params.pi_l * side / params.mu +
                              2.0 * params.pi_s * perp_integral / params.mu +
                              params.tau * params.pi_h / params.mu * perp_frequency;
        std::vector<double> access(n), bracket(n);
        for (int i = 0; i < n; ++i) {
            access[i] = 0.5 * sums.cell_size * access_sums[i];
            bracket[i] = common + fleet / at(own_h, i) +
                         params.tau * 0.5 * sums.cell_size * perp_flux_sums[i];
        }
        auto solve = [&](double a, double b) {
            const double d = (a > 0.0 && b > 0.0) ? std::sqrt(walk * a / b) : 0.0;
            return d > 0.0 ? d : opts.delta_min;
        };
        if (hom) return std::vector<double>{solve(mean(access), mean(bracket))};
        std::vector<double> delta(n);
        for (int i = 0; i < n; ++i) delta[i] = solve(access[i], bracket[i]);
        return delta;
    };

    DesignVariables next = design;
    next.delta_ew = axis(candidates.ew, design.delta_ns, candidates.ns, sums.access_row,
                         sums.flux_ns_row);
    next.delta_ns = axis(candidates.ns, design.delta_ew, candidates.ew, sums.access_col,
                         sums.flux_ew_col);
    next.h_ew = candidates.ew;
    next.h_ns = candidates.ns;
    return next;
}

int cd_enforce_capacity(DesignVariables& design, const Headways& candidates,
                        const DemandSums& sums, const ModelParams& params, CdTrace* trace)
{
    const bool hom = design.kind == NetworkKind::Homogeneous;
    int clamps = 0;
    auto axis = [&](const std::vector<double>& delta, const std::vector<double>& h_tilde,
                    const std::vector<double>& line_max, double global_max,
                    std::vector<double>& h_out, std::vector<bool>* flags) {
        h_out.resize(h_tilde.size());
        if (flags) flags->assign(h_tilde.size(), false);
        for (std::size_t i = 0; i < h_tilde.size(); ++i) {
            const double flux = hom ? global_max : line_max[i];
            double h = h_tilde[i];
            if (flux > 0.0) {
                const double limit = params.capacity * delta[i] / flux;
                if (limit < h) {
                    h = limit;
                    ++clamps;
                    if (flags) (*flags)[i] = true;
                }
            }
            h_out[i] = h;
        }
    };
    axis(design.delta_ew, candidates.ew, sums.maxima.ew_row, sums.maxima.ew_max, design.h_ew,
         trace ? &trace->final_clamped_ew : nullptr);
    axis(design.delta_ns, candidates.ns, sums.maxima.ns_col, sums.maxima.ns_max, design.h_ns,
         trace ? &trace->final_clamped_ns : nullptr);
    return clamps;
}

DesignVariables random_design(NetworkKind kind, int n_cells, const CdOptions& opts,
                              std::uint64_t stream)
{
    std::seed_seq seq{static_cast<std::uint32_t>(opts.seed), static_cast<std::uint32_t>(opts.seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    std::mt19937_64 rng(seq);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto log_uniform = [&](double lo, double hi) {
        return std::exp(std::log(lo) + unit(rng) * (std::log(hi) - std::log(lo)));
    };
    const auto k = static_cast<std::size_t>(kind == NetworkKind::Homogeneous ? 1 : n_cells);
    DesignVariables d;
    d.kind = kind;
    for (auto* v : {&d.delta_ew, &d.delta_ns}) {
        v->resize(k);
        for (auto& x : *v) x = log_uniform(opts.delta_init_min, opts.delta_init_max);
    }
    for (auto* v : {&d.h_ew, &d.h_ns}) {
        v->resize(k);
        for (auto& x : *v) x = log_uniform(opts.h_init_min, opts.h_init_max);
    }
    return d;
}

CdResult run_cd_from(const DesignVariables& start, const DemandAggregates& agg,
                     const ModelParams& params, const CdOptions& opts)
{
    opts.validate();
    params.validate();
    start.validate(agg.grid.n_cells);
    const DemandSums sums = summarize_demand(agg);

    CdResult result;
    DesignVariables design = start;
    double best_z = std::numeric_limits<double>::infinity();
    for (int m = 0; m < opts.max_iterations; ++m) {
        const Headways candidates = cd_step_headways(design, sums, params, opts);
        design = cd_step_densities(design, candidates, sums, params, opts);
        const int clamps = cd_enforce_capacity(design, candidates, sums, params, &result.trace);
        const CostBreakdown cost = evaluate_cost(design, agg, params);
        result.trace.z.push_back(cost.Z);
        result.trace.clamp_counts.push_back(clamps);
        if (cost.Z < best_z || result.trace.converged) {
            best_z = cost.Z;
            result.design = design;
            result.cost = cost;
        }
        if (m > 0) {
            const double prev = result.trace.z[result.trace.z.size() - 2];
            if (std::abs(prev - cost.Z) <= opts.tolerance * std::abs(cost.Z)) {
                result.trace.converged = true;
                result.design = design;
                result.cost = cost;
                break;
            }
        }
    }
    result.trace.final_design = result.design;
    return result;
}

CdResult run_cd(const DemandAggregates& agg, const ModelParams& params, NetworkKind kind,
                const CdOptions& opts, std::uint64_t stream)
{
    opts.validate();
    return run_cd_from(random_design(kind, agg.grid.n_cells, opts, stream), agg, params, opts);
}

double MultistartResult::spread() const
{
    if (final_z.empty()) return 0.0;
    const auto [lo, hi] = std::minmax_element(final_z.begin(), final_z.end());
    return *hi - *lo;
}

MultistartResult run_cd_multistart(const DemandAggregates& agg, const ModelParams& params,
                                   NetworkKind kind, const CdOptions& opts)
{
    opts.validate();
    MultistartResult out;
    for (int s = 0; s < opts.n_starts; ++s) {
        CdResult r = run_cd(agg, params, kind, opts, static_cast<std::uint64_t>(s));
        out.final_z.push_back(r.cost.Z);
        if (s == 0 || r.cost.Z < out.best.cost.Z) {
            out.best = std::move(r);
            out.best_start = s;
        }
    }
    return out;
}

}  // namespace transitgp::cd
