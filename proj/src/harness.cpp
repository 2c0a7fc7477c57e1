#include <transitgp/harness.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <map>
#include <ostream>
#include <stdexcept>
#include <thread>

#include <transitgp/io.hpp>

namespace transitgp {

using nlohmann::json;

namespace {

constexpr std::pair<DemandPattern, const char*> kPatternNames[] = {
    {DemandPattern::Uniform, "uniform"},         {DemandPattern::Monocentric, "monocentric"},
    {DemandPattern::Commute, "commute"},         {DemandPattern::Chessboard1, "chessboard1"},
    {DemandPattern::Chessboard2, "chessboard2"}, {DemandPattern::Chessboard3, "chessboard3"},
    {DemandPattern::Chessboard4, "chessboard4"},
};

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t fnv1a(const std::string& s)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

double elapsed_ms(std::chrono::steady_clock::time_point since)
{
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since)
        .count();
}

void params_from_json(const json& j, ModelParams& p)
{
    io::require_known_keys(j, {"pi_l", "pi_s", "pi_k", "pi_h", "v", "v_w", "capacity", "beta_w",
                               "tau", "sigma", "mu"},
                           "params");
    auto get = [&](const char* key, double& field) {
        if (j.contains(key)) field = j.at(key).get<double>();
    };
    get("pi_l", p.pi_l);
    get("pi_s", p.pi_s);
    get("pi_k", p.pi_k);
    get("pi_h", p.pi_h);
    get("v", p.v);
    get("v_w", p.v_w);
    get("capacity", p.capacity);
    get("beta_w", p.beta_w);
    get("tau", p.tau);
    get("sigma", p.sigma);
    get("mu", p.mu);
}

json params_to_json(const ModelParams& p)
{
    return json{{"pi_l", p.pi_l}, {"pi_s", p.pi_s},         {"pi_k", p.pi_k},
                {"pi_h", p.pi_h}, {"v", p.v},               {"v_w", p.v_w},
                {"capacity", p.capacity}, {"beta_w", p.beta_w}, {"tau", p.tau},
                {"sigma", p.sigma}, {"mu", p.mu}};
}

void cd_from_json(const json& j, cd::CdOptions& o)
{
    io::require_known_keys(j, {"max_iterations", "tolerance", "n_starts", "delta_init_min",
                               "delta_init_max", "h_init_min", "h_init_max", "h_max",
                               "delta_min"},
                           "cd");
    if (j.contains("max_iterations")) o.max_iterations = j.at("max_iterations").get<int>();
    if (j.contains("tolerance")) o.tolerance = j.at("tolerance").get<double>();
    if (j.contains("n_starts")) o.n_starts = j.at("n_starts").get<int>();
    if (j.contains("delta_init_min")) o.delta_init_min = j.at("delta_init_min").get<double>();
    if (j.contains("delta_init_max")) o.delta_init_max = j.at("delta_init_max").get<double>();
    if (j.contains("h_init_min")) o.h_init_min = j.at("h_init_min").get<double>();
    if (j.contains("h_init_max")) o.h_init_max = j.at("h_init_max").get<double>();
    if (j.contains("h_max")) o.h_max = j.at("h_max").get<double>();
    if (j.contains("delta_min")) o.delta_min = j.at("delta_min").get<double>();
}

void gp_from_json(const json& j, gp::SolveOptions& o)
{
    io::require_known_keys(j, {"t_initial", "t_growth", "gap_tolerance", "newton_tolerance",
                               "max_newton_per_center", "max_outer", "stationarity_tolerance",
                               "feasibility_tolerance"},
                           "gp");
    if (j.contains("t_initial")) o.t_initial = j.at("t_initial").get<double>();
    if (j.contains("t_growth")) o.t_growth = j.at("t_growth").get<double>();
    if (j.contains("gap_tolerance")) o.gap_tolerance = j.at("gap_tolerance").get<double>();
    if (j.contains("newton_tolerance")) o.newton_tolerance = j.at("newton_tolerance").get<double>();
    if (j.contains("max_newton_per_center"))
        o.max_newton_per_center = j.at("max_newton_per_center").get<int>();
    if (j.contains("max_outer")) o.max_outer = j.at("max_outer").get<int>();
    if (j.contains("stationarity_tolerance"))
        o.stationarity_tolerance = j.at("stationarity_tolerance").get<double>();
    if (j.contains("feasibility_tolerance"))
        o.feasibility_tolerance = j.at("feasibility_tolerance").get<double>();
}

std::string number_key(double x)
{
    return io::format_double(x);
}

}  // namespace

const char* pattern_name(DemandPattern p)
{
    for (const auto& [value, name] : kPatternNames)
        if (value == p) return name;
    return "?";
}

DemandPattern parse_pattern(const std::string& name)
{
    for (const auto& [value, n] : kPatternNames)
        if (name == n) return value;
    throw std::invalid_argument("unknown demand pattern '" + name + "'");
}

std::vector<DemandPattern> sweep_patterns()
{
    return {DemandPattern::Monocentric, DemandPattern::Commute,     DemandPattern::Chessboard1,
            DemandPattern::Chessboard2, DemandPattern::Chessboard3, DemandPattern::Chessboard4};
}

ODMatrix generate_demand(DemandPattern pattern, const Grid& grid, double total_demand)
{
    switch (pattern) {
    case DemandPattern::Uniform: return generate_uniform_demand(grid, total_demand);
    case DemandPattern::Monocentric:
        return generate_smooth_demand(grid, total_demand, SmoothDemandParams::monocentric());
    case DemandPattern::Commute:
        return generate_smooth_demand(grid, total_demand, SmoothDemandParams::commute());
    case DemandPattern::Chessboard1: return generate_chessboard_demand(grid, total_demand, 1);
    case DemandPattern::Chessboard2: return generate_chessboard_demand(grid, total_demand, 2);
    case DemandPattern::Chessboard3: return generate_chessboard_demand(grid, total_demand, 3);
    case DemandPattern::Chessboard4: return generate_chessboard_demand(grid, total_demand, 4);
    }
    throw std::invalid_argument("generate_demand: bad pattern");
}

void Scenario::validate() const
{
    if (!(total_demand > 0.0)) throw std::invalid_argument("scenario: D must be positive");
    params.validate();
    cd.validate();
    build_grid(side_length, cell_size);
}

std::string Scenario::key() const
{
    return std::string(pattern_name(pattern)) + "/" + number_key(total_demand) + "/" +
           number_key(params.mu) + "/" + network_name(network);
}

Scenario scenario_from_json(const json& j)
{
    io::require_known_keys(j, {"pattern", "D", "mu", "network", "side_length", "cell_size",
                               "seed", "params", "cd", "gp"},
                           "scenario");
    Scenario s;
    if (j.contains("pattern")) s.pattern = parse_pattern(j.at("pattern").get<std::string>());
    if (j.contains("D")) s.total_demand = j.at("D").get<double>();
    if (j.contains("network")) s.network = parse_network(j.at("network").get<std::string>());
    if (j.contains("side_length")) s.side_length = j.at("side_length").get<double>();
    if (j.contains("cell_size")) s.cell_size = j.at("cell_size").get<double>();
    if (j.contains("seed")) s.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("params")) params_from_json(j.at("params"), s.params);
    if (j.contains("mu")) s.params.mu = j.at("mu").get<double>();
    if (j.contains("cd")) cd_from_json(j.at("cd"), s.cd);
    if (j.contains("gp")) gp_from_json(j.at("gp"), s.gp);
    s.cd.seed = s.seed;
    s.validate();
    return s;
}

json to_json(const Scenario& s)
{
    return json{{"pattern", pattern_name(s.pattern)},
                {"D", s.total_demand},
                {"mu", s.params.mu},
                {"network", network_name(s.network)},
                {"side_length", s.side_length},
                {"cell_size", s.cell_size},
                {"seed", s.seed},
                {"params", params_to_json(s.params)}};
}

MethodOutcome solve_with_gp(const DemandAggregates& agg, const Scenario& s,
                            gp::SolveReport* report)
{
    const auto start = std::chrono::steady_clock::now();
    const TransitGp tg = build_gp(s.network, agg, s.params);
    auto repair = [&](std::span<const double> r) -> std::optional<std::vector<double>> {
        return tg.to_vector(restore_capacity(tg.to_design(r), agg, s.params));
    };
    const gp::SolveResult res = gp::solve_gp(tg.problem, s.gp, repair);
    if (res.report.status == gp::SolveStatus::Infeasible ||
        res.report.status == gp::SolveStatus::Unbounded) {
        throw std::runtime_error(std::string("GP solve ended with status ") +
                                 gp::status_name(res.report.status) + ": " + res.report.message);
    }
    MethodOutcome out;
    out.design = tg.to_design(res.r);
    out.cost = evaluate_cost(out.design, agg, s.params);
    out.iterations = res.report.newton_iterations;
    out.runtime_ms = elapsed_ms(start);
    out.kkt_stationarity = res.report.kkt.stationarity;
    if (report) *report = res.report;
    return out;
}

MethodOutcome solve_with_cd(const DemandAggregates& agg, const Scenario& s, cd::CdTrace* trace,
                            double* spread)
{
    const auto start = std::chrono::steady_clock::now();
    cd::CdOptions opts = s.cd;
    opts.seed = s.seed;
    const cd::MultistartResult ms = cd::run_cd_multistart(agg, s.params, s.network, opts);
    MethodOutcome out;
    out.design = ms.best.design;
    out.cost = ms.best.cost;
    out.iterations = ms.best.trace.iterations();
    out.clamp_events = ms.best.trace.total_clamp_events();
    out.runtime_ms = elapsed_ms(start);

    const TransitGp tg = build_gp(s.network, agg, s.params);
    const auto r = tg.to_vector(out.design);
    out.kkt_stationarity =
        gp::check_kkt(tg.problem, r, gp::estimate_duals(tg.problem, r)).stationarity;
    if (trace) *trace = ms.best.trace;
    if (spread) *spread = ms.spread();
    return out;
}

ComparisonRow run_scenario(const Scenario& s)
{
    ComparisonRow row;
    row.scenario = s;
    try {
        s.validate();
        const Grid grid = build_grid(s.side_length, s.cell_size);
        const DemandAggregates agg = aggregate_demand(generate_demand(s.pattern, grid, s.total_demand));
        row.gp = solve_with_gp(agg, s, &row.gp_report);
        row.cd = solve_with_cd(agg, s, &row.cd_trace, &row.cd_spread);
        row.improvement_pct = 100.0 * (row.cd.cost.Z - row.gp.cost.Z) / row.cd.cost.Z;
    } catch (const std::exception& e) {
        throw std::runtime_error(s.key() + ": " + e.what());
    }
    return row;
}

std::vector<Scenario> SweepConfig::scenarios() const
{
    std::vector<Scenario> out;
    for (NetworkKind kind : networks)
        for (double d : demands)
            for (double mu : mus)
                for (DemandPattern p : patterns) {
                    Scenario s;
                    s.pattern = p;
                    s.total_demand = d;
                    s.network = kind;
                    s.side_length = side_length;
                    s.cell_size = cell_size;
                    s.params = params;
                    s.params.mu = mu;
                    s.cd = cd;
                    s.gp = gp;
                    s.seed = splitmix64(seed ^ fnv1a(s.key()));
                    s.cd.seed = s.seed;
                    out.push_back(s);
                }
    return out;
}

SweepConfig sweep_from_json(const json& j)
{
    io::require_known_keys(j, {"patterns", "demands", "mus", "networks", "side_length",
                               "cell_size", "seed", "params", "cd", "gp"},
                           "sweep");
    SweepConfig c;
    if (j.contains("patterns")) {
        c.patterns.clear();
        for (const auto& p : j.at("patterns")) c.patterns.push_back(parse_pattern(p.get<std::string>()));
    }
    if (j.contains("demands")) c.demands = j.at("demands").get<std::vector<double>>();
    if (j.contains("mus")) c.mus = j.at("mus").get<std::vector<double>>();
    if (j.contains("networks")) {
        c.networks.clear();
        for (const auto& n : j.at("networks")) c.networks.push_back(parse_network(n.get<std::string>()));
    }
    if (j.contains("side_length")) c.side_length = j.at("side_length").get<double>();
    if (j.contains("cell_size")) c.cell_size = j.at("cell_size").get<double>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("params")) params_from_json(j.at("params"), c.params);
    if (j.contains("cd")) cd_from_json(j.at("cd"), c.cd);
    if (j.contains("gp")) gp_from_json(j.at("gp"), c.gp);
    for (double d : c.demands)
        if (!(d > 0.0)) throw std::invalid_argument("sweep: demands must be positive");
    for (double mu : c.mus)
        if (!(mu > 0.0)) throw std::invalid_argument("sweep: mus must be positive");
    if (c.patterns.empty() || c.demands.empty() || c.mus.empty() || c.networks.empty()) {
        throw std::invalid_argument("sweep: every grid axis needs at least one value");
    }
    return c;
}

std::vector<ComparisonRow> run_sweep(const SweepConfig& config, int jobs)
{
    const std::vector<Scenario> scenarios = config.scenarios();
    std::vector<ComparisonRow> rows(scenarios.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < scenarios.size(); i = next++) {
            try {
                rows[i] = run_scenario(scenarios[i]);
            } catch (const std::exception& e) {
                rows[i] = ComparisonRow{};
                rows[i].scenario = scenarios[i];
                rows[i].error = e.what();
            }
        }
    };
    const int n_threads = std::clamp(jobs, 1, static_cast<int>(std::max<std::size_t>(scenarios.size(), 1)));
    std::vector<std::thread> pool;
    for (int t = 1; t < n_threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    return rows;
}

std::optional<double> reference_improvement(NetworkKind kind, double total_demand, double mu)
{
    struct Entry {
        double d;
        double values[3];  // mu = 25, 20, 5
    };
    static constexpr Entry kHet[] = {{5000, {2.70, 2.86, 3.84}},
                                     {10000, {2.21, 2.37, 3.35}},
                                     {50000, {1.26, 1.37, 1.07}},
                                     {100000, {0.89, 0.87, 0.67}}};
    static constexpr Entry kHom[] = {{5000, {3.09, 3.28, 4.45}},
                                     {10000, {2.51, 2.69, 3.76}},
                                     {50000, {1.40, 1.52, 0.80}},
                                     {100000, {0.81, 0.58, 0.50}}};
    static constexpr double kMus[] = {25.0, 20.0, 5.0};
    const auto& table = kind == NetworkKind::Heterogeneous ? kHet : kHom;
    for (const auto& e : table) {
        if (e.d != total_demand) continue;
        for (int m = 0; m < 3; ++m)
            if (kMus[m] == mu) return e.values[m];
    }
    return std::nullopt;
}

std::vector<SummaryCell> summarize(const std::vector<ComparisonRow>& rows)
{
    // Keep first-appearance order of (network, D, mu).
    std::vector<SummaryCell> cells;
    std::vector<double> sums;
    for (const auto& row : rows) {
        if (!row.ok()) continue;
        const auto& s = row.scenario;
        auto it = std::find_if(cells.begin(), cells.end(), [&](const SummaryCell& c) {
            return c.network == s.network && c.total_demand == s.total_demand && c.mu == s.params.mu;
        });
        if (it == cells.end()) {
            cells.push_back({s.network, s.total_demand, s.params.mu, 0.0,
                             reference_improvement(s.network, s.total_demand, s.params.mu), 0});
            sums.push_back(0.0);
            it = cells.end() - 1;
        }
        const auto k = static_cast<std::size_t>(it - cells.begin());
        sums[k] += row.improvement_pct;
        ++it->n_rows;
    }
    for (std::size_t k = 0; k < cells.size(); ++k) cells[k].mean_improvement_pct = sums[k] / cells[k].n_rows;
    return cells;
}

void write_results_csv(std::ostream& out, const std::vector<ComparisonRow>& rows, bool with_timing)
{
    out << "pattern,D,vot,network,method,Z,Z_per_pax,improvement_pct,iterations,clamp_events,"
           "runtime_ms,kkt_stationarity,seed\n";
    using io::format_double;
    for (const auto& row : rows) {
        const auto& s = row.scenario;
        const std::string prefix = std::string(pattern_name(s.pattern)) + "," +
                                   format_double(s.total_demand) + "," +
                                   format_double(s.params.mu) + "," + network_name(s.network) + ",";
        if (!row.ok()) {
            out << prefix << "error,nan,nan,nan,0,0,0,nan," << s.seed << '\n';
            continue;
        }
        auto line = [&](const char* method, const MethodOutcome& m, double improvement) {
            out << prefix << method << ',' << format_double(m.cost.Z) << ','
                << format_double(m.cost.Z_per_passenger) << ',' << format_double(improvement) << ','
                << m.iterations << ',' << m.clamp_events << ','
                << format_double(with_timing ? m.runtime_ms : 0.0) << ','
                << format_double(m.kkt_stationarity) << ',' << s.seed << '\n';
        };
        line("gp", row.gp, row.improvement_pct);
        line("cd", row.cd, 0.0);
    }
}

void write_summary_csv(std::ostream& out, const std::vector<SummaryCell>& cells)
{
    out << "network,D,mu,mean_improvement_pct,reference_pct,n_rows\n";
    for (const auto& c : cells) {
        out << network_name(c.network) << ',' << io::format_double(c.total_demand) << ','
            << io::format_double(c.mu) << ',' << io::format_double(c.mean_improvement_pct) << ','
            << (c.reference_pct ? io::format_double(*c.reference_pct) : std::string()) << ','
            << c.n_rows << '\n';
    }
}

json rows_to_json(const std::vector<ComparisonRow>& rows)
{
    json doc;
    doc["rows"] = json::array();
    for (const auto& row : rows) {
        json r = to_json(row.scenario);
        if (!row.ok()) {
            r["error"] = row.error;
            doc["rows"].push_back(r);
            continue;
        }
        auto method = [](const MethodOutcome& m) {
            return json{{"cost", io::to_json(m.cost)},
                        {"design", io::to_json(m.design)},
                        {"iterations", m.iterations},
                        {"clamp_events", m.clamp_events},
                        {"kkt_stationarity", m.kkt_stationarity}};
        };
        r["improvement_pct"] = row.improvement_pct;
        r["cd_spread"] = row.cd_spread;
        r["methods"] = {{"gp", method(row.gp)}, {"cd", method(row.cd)}};
        doc["rows"].push_back(r);
    }
    return doc;
}

void export_breakdown(std::ostream& out, const json& rows_doc)
{
    out << "pattern,D,vot,network,method,agency_per_pax,T_a_per_pax,T_w_per_pax,T_r_per_pax,"
           "T_t_per_pax,Z_per_pax\n";
    using io::format_double;
    for (const auto& r : rows_doc.at("rows")) {
        if (!r.contains("methods")) continue;
        const double d = r.at("D").get<double>();
        const double mu = r.at("mu").get<double>();
        for (const auto& [name, m] : r.at("methods").items()) {
            const CostBreakdown c = io::cost_from_json(m.at("cost"));
            out << r.at("pattern").get<std::string>() << ',' << format_double(d) << ','
                << format_double(mu) << ',' << r.at("network").get<std::string>() << ',' << name
                << ',' << format_double(c.Z_A / mu / d) << ',' << format_double(c.T_a / d) << ','
                << format_double(c.T_w / d) << ',' << format_double(c.T_r / d) << ','
                << format_double(c.T_t / d) << ',' << format_double(c.Z / d) << '\n';
        }
    }
}

std::vector<double> demand_heatmap(const ODMatrix& od)
{
    const Grid& g = od.grid();
    const int n = g.n_cells;
    const double area = g.cell_area();
    std::vector<double> field(static_cast<std::size_t>(n) * n, 0.0);
    for (int xo = 0; xo < n; ++xo)
        for (int yo = 0; yo < n; ++yo)
            for (int xd = 0; xd < n; ++xd)
                for (int yd = 0; yd < n; ++yd) {
                    const double v = od.at(xo, yo, xd, yd) * area;
                    field[static_cast<std::size_t>(xo) * n + yo] += v;
                    field[static_cast<std::size_t>(xd) * n + yd] += v;
                }
    return field;
}

void export_demand_heatmap(std::ostream& out, const ODMatrix& od)
{
    const Grid& g = od.grid();
    const auto field = demand_heatmap(od);
    out << "x_idx,y_idx,x_km,y_km,density\n";
    for (int x = 0; x < g.n_cells; ++x)
        for (int y = 0; y < g.n_cells; ++y) {
            out << x + 1 << ',' << y + 1 << ',' << io::format_double(g.center(x)) << ','
                << io::format_double(g.center(y)) << ','
                << io::format_double(field[static_cast<std::size_t>(x) * g.n_cells + y]) << '\n';
        }
}

}  // namespace transitgp
