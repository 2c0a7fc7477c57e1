#include <transitgp/model.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>

namespace transitgp {

const char* network_name(NetworkKind kind)
{
    return kind == NetworkKind::Heterogeneous ? "het" : "hom";
}

NetworkKind parse_network(const std::string& name)
{
    if (name == "het" || name == "heterogeneous") return NetworkKind::Heterogeneous;
    if (name == "hom" || name == "homogeneous") return NetworkKind::Homogeneous;
    throw std::invalid_argument("unknown network kind '" + name + "' (expected het or hom)");
}

void ModelParams::validate() const
{
    if (!(v > 0.0) || !(v_w > 0.0) || !(capacity > 0.0) || !(mu > 0.0)) {
        throw std::invalid_argument("ModelParams: v, v_w, C and mu must be positive");
    }
    if (tau < 0.0 || sigma < 0.0 || beta_w < 0.0 || pi_l < 0.0 || pi_s < 0.0 || pi_k < 0.0 ||
        pi_h < 0.0) {
        throw std::invalid_argument("ModelParams: unit costs, tau, sigma and beta_w must be >= 0");
    }
}

DesignVariables DesignVariables::homogeneous(double delta_ew, double delta_ns, double h_ew,
                                             double h_ns)
{
    DesignVariables d;
    d.kind = NetworkKind::Homogeneous;
    d.delta_ew = {delta_ew};
    d.delta_ns = {delta_ns};
    d.h_ew = {h_ew};
    d.h_ns = {h_ns};
    return d;
}

DesignVariables DesignVariables::uniform(NetworkKind kind, int n_cells, double delta, double h)
{
    const auto k = static_cast<std::size_t>(kind == NetworkKind::Homogeneous ? 1 : n_cells);
    DesignVariables d;
    d.kind = kind;
    d.delta_ew.assign(k, delta);
    d.delta_ns.assign(k, delta);
    d.h_ew.assign(k, h);
    d.h_ns.assign(k, h);
    return d;
}

void DesignVariables::validate(int n_cells) const
{
    const std::size_t k = kind == NetworkKind::Homogeneous ? 1 : static_cast<std::size_t>(n_cells);
    for (const auto* v : {&delta_ew, &delta_ns, &h_ew, &h_ns}) {
        if (v->size() != k) {
            throw std::invalid_argument("DesignVariables: expected " + std::to_string(k) +
                                        " entries per array, got " + std::to_string(v->size()));
        }
        for (double x : *v) {
            if (!(x > 0.0) || !std::isfinite(x)) {
                throw std::invalid_argument("DesignVariables: entries must be strictly positive");
            }
        }
    }
}

CostBreakdown evaluate_cost(const DesignVariables& design, const DemandAggregates& agg,
                            const ModelParams& params)
{
    params.validate();
    const Grid& g = agg.grid;
    design.validate(g.n_cells);
    const double area = g.cell_area();
    const double walk = params.beta_w / (4.0 * params.v_w);

    CostBreakdown c;
    for (int x = 0; x < g.n_cells; ++x) {
        for (int y = 0; y < g.n_cells; ++y) {
            const auto cell = agg.cell(x, y);
            for (Direction d : kDirections) {
                const bool ew = d == Direction::East || d == Direction::West;
                const double delta = ew ? design.delta_ew_at(y) : design.delta_ns_at(x);
                const double delta_perp = ew ? design.delta_ns_at(x) : design.delta_ew_at(y);
                const double h = ew ? design.h_ew_at(y) : design.h_ns_at(x);
                const double q = delta / h;
                const auto i = DemandAggregates::dir(d);
                const double bo = agg.boarding[i][cell];
                const double al = agg.alighting[i][cell];
                const double fl = agg.flux[i][cell];
                const double tr = agg.transfer[i][cell];

                c.N_l += delta * area;
                c.N_s += delta * delta_perp * area;
                c.N_k += q * area;
                c.N_h += q * (1.0 / params.v + params.tau * delta_perp) * area;
                c.T_a += walk * (bo + al) * (1.0 / delta + 1.0 / delta_perp) * area;
                c.T_w += (bo + tr) * 0.5 * h * area;
                c.T_r += fl * (1.0 / params.v + params.tau * delta_perp) * area;
                c.T_t += params.sigma * tr * area;
            }
        }
    }
    c.Z_A = params.pi_l * c.N_l + params.pi_s * c.N_s + params.pi_k * c.N_k + params.pi_h * c.N_h;
    c.Z_P = c.T_a + c.T_w + c.T_r + c.T_t;
    c.Z = c.Z_A / params.mu + c.Z_P;
    c.Z_per_passenger = agg.total_demand > 0.0 ? c.Z / agg.total_demand : 0.0;
    return c;
}

DemandSums summarize_demand(const DemandAggregates& agg)
{
    const int n = agg.grid.n_cells;
    DemandSums s;
    s.n_cells = n;
    s.cell_size = agg.grid.cell_size;
    s.access_row.assign(n, 0.0);
    s.access_col.assign(n, 0.0);
    s.wait_ew_row.assign(n, 0.0);
    s.wait_ns_col.assign(n, 0.0);
    s.flux_ew_col.assign(n, 0.0);
    s.flux_ns_row.assign(n, 0.0);
    const auto E = DemandAggregates::dir(Direction::East);
    const auto W = DemandAggregates::dir(Direction::West);
    const auto N = DemandAggregates::dir(Direction::North);
    const auto S = DemandAggregates::dir(Direction::South);
    for (int x = 0; x < n; ++x) {
        for (int y = 0; y < n; ++y) {
            const auto c = agg.cell(x, y);
            double access = 0.0;
            for (std::size_t i = 0; i < 4; ++i) {
                access += agg.boarding[i][c] + agg.alighting[i][c];
                s.flux_total += agg.flux[i][c];
                s.transfer_total += agg.transfer[i][c];
            }
            s.access_row[y] += access;
            s.access_col[x] += access;
            s.wait_ew_row[y] += agg.boarding[E][c] + agg.transfer[E][c] + agg.boarding[W][c] +
                                agg.transfer[W][c];
            s.wait_ns_col[x] += agg.boarding[N][c] + agg.transfer[N][c] + agg.boarding[S][c] +
                                agg.transfer[S][c];
            s.flux_ew_col[x] += agg.flux[E][c] + agg.flux[W][c];
            s.flux_ns_row[y] += agg.flux[N][c] + agg.flux[S][c];
        }
    }
    s.maxima = reduce_flux(agg);
    return s;
}

namespace {

// Accumulates heterogeneous monomials, optionally tying all rows of one
// variable family into a single variable.
class PosynomialBuilder {
public:
    PosynomialBuilder(int n_cells, bool tie_rows) : n_(n_cells), tie_(tie_rows)
    {
        dim_ = tie_ ? 4 : 4 * static_cast<std::size_t>(n_cells);
    }

    enum Family { DeltaEW = 0, DeltaNS = 1, HeadwayEW = 2, HeadwayNS = 3 };

    std::size_t var(Family f, int i) const
    {
        return tie_ ? static_cast<std::size_t>(f)
                    : static_cast<std::size_t>(f) * n_ + static_cast<std::size_t>(i);
    }

    void add(double coefficient, std::initializer_list<std::pair<std::size_t, double>> powers)
    {
        if (!(coefficient > 0.0)) return;
        std::vector<double> exps(dim_, 0.0);
        for (auto [v, p] : powers) exps[v] += p;
        terms_[exps] += coefficient;
    }

    gp::Posynomial build() const
    {
        gp::Posynomial p;
        p.terms.reserve(terms_.size());
        for (const auto& [exps, coef] : terms_) p.terms.push_back(gp::Monomial{coef, exps});
        return p;
    }

    std::size_t dim() const { return dim_; }

private:
    int n_;
    bool tie_;
    std::size_t dim_;
    std::map<std::vector<double>, double> terms_;
};

}  // namespace

TransitGp build_gp(NetworkKind kind, const DemandAggregates& agg, const ModelParams& params)
{
    params.validate();
    const Grid& g = agg.grid;
    const int n = g.n_cells;
    const bool hom = kind == NetworkKind::Homogeneous;
    const DemandSums sums = summarize_demand(agg);
    const double area = g.cell_area();
    const double mu = params.mu;

    using B = PosynomialBuilder;
    B builder(n, hom);

    for (int j = 0; j < n; ++j) {
        const auto de = builder.var(B::DeltaEW, j);
        const auto dn = builder.var(B::DeltaNS, j);
        const auto he = builder.var(B::HeadwayEW, j);
        const auto hn = builder.var(B::HeadwayNS, j);
        // Line length: two directions per axis, n cells along each line.
        const double line = 2.0 * area * n;
        builder.add(params.pi_l / mu * line, {{de, 1.0}});
        builder.add(params.pi_l / mu * line, {{dn, 1.0}});
        // Vehicle-km and cruising vehicle-hours share the monomial delta / h.
        const double fleet = (params.pi_k + params.pi_h / params.v) / mu * line;
        builder.add(fleet, {{de, 1.0}, {he, -1.0}});
        builder.add(fleet, {{dn, 1.0}, {hn, -1.0}});
        // Access and egress.
        const double walk = params.beta_w / (4.0 * params.v_w) * area;
        builder.add(walk * sums.access_row[j], {{de, -1.0}});
        builder.add(walk * sums.access_col[j], {{dn, -1.0}});
        // Initial and transfer waits.
        builder.add(0.5 * area * sums.wait_ew_row[j], {{he, 1.0}});
        builder.add(0.5 * area * sums.wait_ns_col[j], {{hn, 1.0}});
        // Riders delayed at stops created by the perpendicular lines.
        builder.add(params.tau * area * sums.flux_ns_row[j], {{de, 1.0}});
        builder.add(params.tau * area * sums.flux_ew_col[j], {{dn, 1.0}});
    }
    for (int j = 0; j < n; ++j) {
        const auto de = builder.var(B::DeltaEW, j);
        const auto he = builder.var(B::HeadwayEW, j);
        for (int i = 0; i < n; ++i) {
            const auto dn = builder.var(B::DeltaNS, i);
            const auto hn = builder.var(B::HeadwayNS, i);
            builder.add(params.pi_s / mu * 4.0 * area, {{de, 1.0}, {dn, 1.0}});
            const double dwell = params.pi_h * params.tau / mu * 2.0 * area;
            builder.add(dwell, {{de, 1.0}, {dn, 1.0}, {he, -1.0}});
            builder.add(dwell, {{de, 1.0}, {dn, 1.0}, {hn, -1.0}});
        }
    }

    TransitGp out;
    out.kind = kind;
    out.n_lines = hom ? 1 : n;
    out.dropped_constant = area * (sums.flux_total / params.v + params.sigma * sums.transfer_total);
    out.problem.objective = builder.build();

    const auto k = static_cast<std::size_t>(out.n_lines);
    const char* families[] = {"delta_EW", "delta_NS", "h_EW", "h_NS"};
    for (const char* f : families) {
        for (std::size_t i = 0; i < k; ++i) {
            out.problem.variable_names.push_back(hom ? std::string(f)
                                                     : std::string(f) + "[" + std::to_string(i) + "]");
        }
    }

    auto capacity = [&](double flux, std::size_t delta_var, std::size_t h_var) {
        if (!(flux > 0.0)) return;
        gp::Monomial m{flux / params.capacity, std::vector<double>(builder.dim(), 0.0)};
        m.exponents[h_var] = 1.0;
        m.exponents[delta_var] = -1.0;
        out.problem.inequalities.push_back(gp::Posynomial{{m}});
    };
    if (hom) {
        capacity(sums.maxima.ew_max, builder.var(B::DeltaEW, 0), builder.var(B::HeadwayEW, 0));
        capacity(sums.maxima.ns_max, builder.var(B::DeltaNS, 0), builder.var(B::HeadwayNS, 0));
    } else {
        for (int j = 0; j < n; ++j)
            capacity(sums.maxima.ew_row[j], builder.var(B::DeltaEW, j), builder.var(B::HeadwayEW, j));
        for (int i = 0; i < n; ++i)
            capacity(sums.maxima.ns_col[i], builder.var(B::DeltaNS, i), builder.var(B::HeadwayNS, i));
    }
    return out;
}

DesignVariables TransitGp::to_design(std::span<const double> r) const
{
    const auto k = static_cast<std::size_t>(n_lines);
    if (r.size() != 4 * k) throw std::invalid_argument("TransitGp::to_design: wrong dimension");
    DesignVariables d;
    d.kind = kind;
    d.delta_ew.assign(r.begin(), r.begin() + k);
    d.delta_ns.assign(r.begin() + k, r.begin() + 2 * k);
    d.h_ew.assign(r.begin() + 2 * k, r.begin() + 3 * k);
    d.h_ns.assign(r.begin() + 3 * k, r.end());
    return d;
}

std::vector<double> TransitGp::to_vector(const DesignVariables& design) const
{
    if (design.kind != kind || design.lines() != static_cast<std::size_t>(n_lines)) {
        throw std::invalid_argument("TransitGp::to_vector: design does not match the problem layout");
    }
    std::vector<double> r;
    r.reserve(4 * design.lines());
    for (const auto* v : {&design.delta_ew, &design.delta_ns, &design.h_ew, &design.h_ns}) {
        r.insert(r.end(), v->begin(), v->end());
    }
    return r;
}

double Utilization::max() const
{
    double m = 0.0;
    for (double u : ew) m = std::max(m, u);
    for (double u : ns) m = std::max(m, u);
    return m;
}

Utilization capacity_utilization(const DesignVariables& design, const DemandAggregates& agg,
                                 const ModelParams& params)
{
    design.validate(agg.grid.n_cells);
    const FluxMaxima m = reduce_flux(agg);
    Utilization u;
    const double c = params.capacity;
    if (design.kind == NetworkKind::Homogeneous) {
        u.ew = {m.ew_max * design.h_ew[0] / (c * design.delta_ew[0])};
        u.ns = {m.ns_max * design.h_ns[0] / (c * design.delta_ns[0])};
        return u;
    }
    const int n = agg.grid.n_cells;
    u.ew.resize(n);
    u.ns.resize(n);
    for (int i = 0; i < n; ++i) {
        u.ew[i] = m.ew_row[i] * design.h_ew[i] / (c * design.delta_ew[i]);
        u.ns[i] = m.ns_col[i] * design.h_ns[i] / (c * design.delta_ns[i]);
    }
    return u;
}

DesignVariables restore_capacity(const DesignVariables& design, const DemandAggregates& agg,
                                 const ModelParams& params, double threshold)
{
    const Utilization u = capacity_utilization(design, agg, params);
    DesignVariables out = design;
    for (std::size_t i = 0; i < u.ew.size(); ++i)
        if (u.ew[i] > threshold) out.h_ew[i] *= 0.9 / u.ew[i];
    for (std::size_t i = 0; i < u.ns.size(); ++i)
        if (u.ns[i] > threshold) out.h_ns[i] *= 0.9 / u.ns[i];
    return out;
}

}  // namespace transitgp
