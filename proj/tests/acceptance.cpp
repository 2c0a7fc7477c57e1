// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on failure.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <thread>

#include <transitgp/harness.hpp>
#include <transitgp/io.hpp>

#include "oracles.hpp"

using namespace transitgp;

namespace {

// Pinned tolerances.
constexpr double kOracleRel = 5e-4;          // 0.05 %
constexpr double kOracleSeconds = 10.0;
constexpr double kDominanceRel = 1e-6;
constexpr double kSweepSeconds = 300.0;
constexpr double kImprovementFloorPct = -1e-4;  // numerical noise allowance on 0 %
constexpr double kImprovementCeilPct = 10.0;
constexpr double kComparablePct = 0.5;       // allowed rise between consecutive D levels
constexpr double kStationarity = 1e-6;
constexpr double kFeasibility = 1e-8;
constexpr double kGap = 1e-9;
constexpr double kChessboardRel = 1e-10;
constexpr double kCalculusRel = 1e-6;
constexpr double kConsistencyRel = 1e-10;
constexpr double kNormalization = 1e-9;
constexpr double kSymmetry = 1e-12;
constexpr double kMonotone = 1e-9;
constexpr double kFdStationarity = 1e-4;
constexpr int kCdIterationCap = 50;

int failures = 0;
std::function<void()> deferred_determinism;

void report(int id, bool pass, const std::string& name, const std::string& detail)
{
    std::printf("[%s] %2d %s: %s\n", pass ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0)
{
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c, d);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

const Grid& grid()
{
    static const Grid g = build_grid(10.0, 0.5);
    return g;
}

const DemandPattern kAll[] = {DemandPattern::Uniform,     DemandPattern::Monocentric,
                              DemandPattern::Commute,     DemandPattern::Chessboard1,
                              DemandPattern::Chessboard2, DemandPattern::Chessboard3,
                              DemandPattern::Chessboard4};

DesignVariables random_design(NetworkKind kind, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> ld(std::log(0.05), std::log(3.0));
    std::uniform_real_distribution<double> lh(std::log(0.01), std::log(0.8));
    auto d = DesignVariables::uniform(kind, grid().n_cells, 1.0, 1.0);
    for (auto& x : d.delta_ew) x = std::exp(ld(rng));
    for (auto& x : d.delta_ns) x = std::exp(ld(rng));
    for (auto& x : d.h_ew) x = std::exp(lh(rng));
    for (auto& x : d.h_ns) x = std::exp(lh(rng));
    return d;
}

void oracle_equivalence()
{
    double worst = 0.0, slowest = 0.0, worst_eval = 0.0;
    std::string detail;
    for (DemandPattern p : {DemandPattern::Uniform, DemandPattern::Monocentric, DemandPattern::Chessboard1}) {
        const auto start = std::chrono::steady_clock::now();
        const auto agg = aggregate_demand(generate_demand(p, grid(), 10000.0));
        Scenario s;
        s.pattern = p;
        s.network = NetworkKind::Homogeneous;
        s.params.mu = 20.0;
        gp::SolveReport rep;
        const auto gp_out = solve_with_gp(agg, s, &rep);
        const double gp_seconds = seconds_since(start);
        const auto totals = oracle::direction_totals(agg);
        const auto bf = oracle::homogeneous_brute_force(totals, s.params);
        const double elapsed = seconds_since(start);
        const double rel = oracle::rel_diff(gp_out.cost.Z, bf.z);
        const auto at_bf = DesignVariables::homogeneous(bf.x[0], bf.x[1], bf.x[2], bf.x[3]);
        worst_eval = std::max(worst_eval, oracle::rel_diff(evaluate_cost(at_bf, agg, s.params).Z, bf.z));
        worst = std::max(worst, rel);
        slowest = std::max(slowest, elapsed);
        detail += std::string(pattern_name(p)) + fmt(" gp=%.6f oracle=%.6f rel=%.1e (gp %.3fs); ",
                                                     gp_out.cost.Z, bf.z, rel, gp_seconds);
    }
    const bool pass = worst <= kOracleRel && slowest < kOracleSeconds && worst_eval < 1e-12;
    report(1, pass, "oracle equivalence (homogeneous, D=10000, mu=20)",
           detail + fmt("worst rel %.2e <= %.0e, slowest case %.2fs < 10s, oracle/evaluator rel %.1e",
                        worst, kOracleRel, slowest, worst_eval));
}

std::string sweep_bytes(const std::vector<ComparisonRow>& rows)
{
    std::ostringstream a;
    write_results_csv(a, rows);
    write_summary_csv(a, summarize(rows));
    a << rows_to_json(rows).dump(1);
    return a.str();
}

void sweep_criteria(int jobs)
{
    const SweepConfig config;
    const auto start = std::chrono::steady_clock::now();
    const auto rows = run_sweep(config, jobs);
    const double elapsed = seconds_since(start);

    // 2: dominance
    int errors = 0, dominated = 0;
    double worst_ratio = 0.0;
    for (const auto& r : rows) {
        if (!r.ok()) {
            ++errors;
            std::printf("  scenario error: %s\n", r.error.c_str());
            continue;
        }
        const double ratio = r.gp.cost.Z / r.cd.cost.Z - 1.0;
        worst_ratio = std::max(worst_ratio, ratio);
        if (r.gp.cost.Z > r.cd.cost.Z * (1 + kDominanceRel)) ++dominated;
    }
    report(2, errors == 0 && dominated == 0 && rows.size() == 144 && elapsed < kSweepSeconds,
           "GP dominance over best-of-10 CD",
           fmt("%.0f rows, %.0f errors, %.0f rows with Z_gp > Z_cd(1+1e-6), max Z_gp/Z_cd-1 = %.2e",
               static_cast<double>(rows.size()), errors, dominated, worst_ratio) +
               fmt(", sweep %.1fs on %.0f threads (limit 300s)", elapsed, jobs));

    // 3: qualitative reproduction, side-by-side table
    const auto cells = summarize(rows);
    std::printf("  mean improvement over CD (%%), ours vs published:\n");
    std::printf("  %-4s %8s %18s %18s %18s\n", "net", "D", "mu=25", "mu=20", "mu=5");
    std::map<std::pair<int, double>, std::map<double, double>> table;  // (net, mu) -> D -> mean
    for (const auto& c : cells) table[{static_cast<int>(c.network), c.mu}][c.total_demand] = c.mean_improvement_pct;
    for (NetworkKind kind : config.networks) {
        for (double d : config.demands) {
            std::printf("  %-4s %8.0f", network_name(kind), d);
            for (double mu : config.mus) {
                const double ours = table[{static_cast<int>(kind), mu}][d];
                const auto ref = reference_improvement(kind, d, mu);
                std::printf("   %7.4f | %5.2f", ours, ref ? *ref : NAN);
            }
            std::printf("\n");
        }
    }
    bool in_range = true, trend = true;
    double lo = 1e300, hi = -1e300, worst_rise = -1e300;
    for (const auto& [key, by_d] : table) {
        double prev = NAN;
        for (const auto& [d, mean] : by_d) {
            lo = std::min(lo, mean);
            hi = std::max(hi, mean);
            if (mean < kImprovementFloorPct || mean > kImprovementCeilPct) in_range = false;
            if (!std::isnan(prev)) {
                worst_rise = std::max(worst_rise, mean - prev);
                if (mean > prev + kComparablePct) trend = false;
            }
            prev = mean;
        }
    }
    report(3, in_range && trend && !cells.empty(), "qualitative improvement table",
           fmt("cell means in [%.4f, %.4f]%% (required [0, 10]%% with -1e-4 noise floor); "
               "largest rise with D %.4f pp (comparable if <= %.1f pp)",
               lo, hi, worst_rise, kComparablePct));

    // 4: KKT certification
    double max_stat = 0, max_feas = 0, max_gap = 0;
    int not_optimal = 0;
    for (const auto& r : rows) {
        if (!r.ok()) continue;
        max_stat = std::max(max_stat, r.gp_report.kkt.stationarity);
        max_feas = std::max(max_feas, r.gp_report.kkt.primal_feasibility);
        max_gap = std::max(max_gap, r.gp_report.relative_gap);
        if (r.gp_report.status != gp::SolveStatus::Optimal) ++not_optimal;
    }
    report(4, errors == 0 && max_stat < kStationarity && max_feas <= 1 + kFeasibility && max_gap < kGap,
           "KKT certification of every GP solve",
           fmt("max stationarity %.2e (< 1e-6), max constraint value %.12f (<= 1+1e-8), "
               "max relative gap %.2e (< 1e-9), non-optimal statuses %.0f",
               max_stat, max_feas, max_gap, not_optimal));

    // 10: determinism
    const int other_jobs = jobs == 1 ? 4 : 1;
    const auto again = run_sweep(config, other_jobs);
    const std::string a = sweep_bytes(rows), b = sweep_bytes(again);
    deferred_determinism = [=] {
        report(10, a == b, "determinism",
           fmt("two sweeps (%.0f and %.0f threads) produced %.0f vs %.0f identical bytes",
               jobs, other_jobs, static_cast<double>(a.size()),
               static_cast<double>(b.size())) + (a == b ? "" : " (MISMATCH)"));
    };
}

void chessboard_system()
{
    double worst = 0.0, info_hh_line = 0.0;
    bool symmetric = true;
    for (int pattern = 1; pattern <= 4; ++pattern) {
        const auto layout = chessboard_layout(grid(), pattern);
        for (double d : {5000.0, 10000.0, 50000.0, 100000.0}) {
            const auto s = solve_chessboard_densities(d, layout.area_high, layout.area_low, 0.9, 0.9);
            for (double r : oracle::chessboard_residuals(s, d, layout.area_high, layout.area_low, 0.9))
                worst = std::max(worst, r);
            symmetric = symmetric && s.hl == s.lh;
            // Share of H->H among trips leaving H, against the nominal 0.9.
            const double share = s.hh * layout.area_high / s.bo_h;
            info_hh_line = std::max(info_hh_line, std::abs(share - 0.9));
        }
    }
    const auto [x, rank] = oracle::chessboard_linear_solve(50000.0, 50.0, 50.0, 0.9, 0.9);
    const auto s = solve_chessboard_densities(50000.0, 50.0, 50.0, 0.9, 0.9);
    const double target = 45000.0 / 2750.0;
    const double rel_linear = oracle::rel_diff(x[0], target);
    const double rel_impl = oracle::rel_diff(s.hh, target);
    const bool pass = worst < kChessboardRel && symmetric && rank == 8 && rel_linear < 1e-12 &&
                      rel_impl < 1e-12;
    report(5, pass, "chessboard density system",
           fmt("max residual %.1e over 4 patterns x 4 D (< 1e-10); lambda_HH=%.10f vs 45000/2750 "
               "(linear solve rel %.1e, implementation rel %.1e)",
               worst, s.hh, rel_linear, rel_impl) +
               (symmetric ? "; lambda_HL == lambda_LH exactly" : "; lambda_HL != lambda_LH") +
               fmt("; info: realized H->H share deviates from 0.9 by %.4f", info_hh_line));
}

void calculus_checks()
{
    std::mt19937_64 rng(2024);
    double worst_g = 0.0, worst_h = 0.0;
    std::vector<std::pair<gp::SumExp, int>> objectives;
    for (int instance = 0; instance < 50; ++instance) {
        const DemandPattern p = kAll[instance % 7];
        const NetworkKind kind = instance % 2 ? NetworkKind::Homogeneous : NetworkKind::Heterogeneous;
        ModelParams params;
        params.mu = (instance % 3 == 0) ? 5.0 : 20.0;
        params.pi_l = 0.5 * (instance % 4);
        params.pi_s = 0.1 * (instance % 5);
        const auto agg = aggregate_demand(generate_demand(p, grid(), 5000.0 * (1 + instance % 4)));
        const auto tg = build_gp(kind, agg, params);
        const auto f = gp::to_sum_exp(tg.problem.objective, tg.problem.n_variables());
        const auto r = tg.to_vector(random_design(kind, rng));
        Eigen::VectorXd s(static_cast<Eigen::Index>(r.size()));
        for (std::size_t i = 0; i < r.size(); ++i) s[static_cast<Eigen::Index>(i)] = std::log(r[i]);
        const auto v = gp::objective_value_grad_hess(f, s);
        const auto value = [&](const Eigen::VectorXd& x) { return gp::objective_value_grad_hess(f, x).value; };
        const auto g_fd = oracle::central_gradient(value, s, 1e-6);
        worst_g = std::max(worst_g, (g_fd - v.gradient).norm() / v.gradient.norm());
        const Eigen::Index n = s.size();
        Eigen::MatrixXd h_fd(n, n);
        for (Eigen::Index i = 0; i < n; ++i) {
            Eigen::VectorXd up = s, down = s;
            up[i] += 1e-6;
            down[i] -= 1e-6;
            h_fd.col(i) = (gp::objective_value_grad_hess(f, up).gradient -
                           gp::objective_value_grad_hess(f, down).gradient) / 2e-6;
        }
        worst_h = std::max(worst_h, (h_fd - v.hessian).norm() / v.hessian.norm());
        objectives.emplace_back(f, static_cast<int>(n));
    }
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> nd(-1.0, 1.0);
    int violations = 0;
    for (int sample = 0; sample < 1000; ++sample) {
        const auto& [f, n] = objectives[static_cast<std::size_t>(sample) % objectives.size()];
        Eigen::VectorXd a(n), b(n);
        for (auto& x : a) x = nd(rng);
        for (auto& x : b) x = nd(rng);
        const double t = unit(rng);
        const double lhs = gp::objective_value_grad_hess(f, t * a + (1 - t) * b).value;
        const double rhs = t * gp::objective_value_grad_hess(f, a).value +
                           (1 - t) * gp::objective_value_grad_hess(f, b).value;
        if (lhs > rhs * (1 + 1e-12)) ++violations;
    }
    report(6, worst_g < kCalculusRel && worst_h < kCalculusRel && violations == 0,
           "gradient/Hessian vs central differences and convexity",
           fmt("50 transit objectives: max relative gradient error %.1e, Hessian error %.1e (< 1e-6); "
               "%.0f convexity violations in 1000 segments",
               worst_g, worst_h, violations));
}

void model_consistency()
{
    std::mt19937_64 rng(77);
    double worst = 0.0;
    int checked = 0;
    for (NetworkKind kind : {NetworkKind::Heterogeneous, NetworkKind::Homogeneous}) {
        for (int k = 0; k < 100; ++k) {
            const DemandPattern p = kAll[k % 7];
            ModelParams params;
            params.mu = 5.0 + k % 21;
            params.pi_l = 0.3 * (k % 3);
            params.pi_s = 0.05 * (k % 4);
            static std::map<std::pair<int, int>, DemandAggregates> cache;
            const auto key = std::make_pair(static_cast<int>(p), k % 4);
            if (!cache.count(key))
                cache.emplace(key, aggregate_demand(generate_demand(p, grid(), 5000.0 * (1 + k % 4))));
            const auto& agg = cache.at(key);
            const auto tg = build_gp(kind, agg, params);
            const auto d = random_design(kind, rng);
            const double posy = gp::eval_posynomial(tg.problem.objective, tg.to_vector(d));
            worst = std::max(worst, oracle::rel_diff(posy + tg.dropped_constant, evaluate_cost(d, agg, params).Z));
            ++checked;
        }
    }
    report(7, worst < kConsistencyRel, "posynomial + constant equals direct evaluator",
           fmt("%.0f random designs (both kinds), max relative difference %.1e (< 1e-10)", checked, worst));
}

void conservation()
{
    double norm = 0, balance = 0, pkm = 0, sym = 0;
    const double area = grid().cell_area();
    const int n = grid().n_cells;
    for (DemandPattern p : kAll) {
        for (double d : {5000.0, 10000.0, 50000.0, 100000.0}) {
            const ODMatrix od = generate_demand(p, grid(), d);
            norm = std::max(norm, std::abs(od.total_demand() - d) / d);
            const auto a = aggregate_demand(od);
            double bo = 0, al = 0, fl = 0;
            for (std::size_t k = 0; k < 4; ++k)
                for (std::size_t c = 0; c < a.boarding[k].size(); ++c) {
                    bo += a.boarding[k][c] * area;
                    al += a.alighting[k][c] * area;
                    fl += a.flux[k][c] * area;
                }
            balance = std::max(balance, oracle::rel_diff(bo, al));
            double expected = 0;
            for (int xo = 0; xo < n; ++xo)
                for (int yo = 0; yo < n; ++yo)
                    for (int xd = 0; xd < n; ++xd)
                        for (int yd = 0; yd < n; ++yd)
                            expected += od.at(xo, yo, xd, yd) * area * area *
                                        (std::abs(grid().center(xd) - grid().center(xo)) +
                                         std::abs(grid().center(yd) - grid().center(yo)));
            pkm = std::max(pkm, oracle::rel_diff(fl, expected));
            if (p == DemandPattern::Uniform) {
                // Transpose maps E to N and W to S for every field.
                for (int x = 0; x < n; ++x)
                    for (int y = 0; y < n; ++y)
                        for (const auto* f : {&a.boarding, &a.alighting, &a.flux, &a.transfer}) {
                            sym = std::max(sym, oracle::rel_diff((*f)[0][a.cell(x, y)], (*f)[2][a.cell(y, x)]));
                            sym = std::max(sym, oracle::rel_diff((*f)[1][a.cell(x, y)], (*f)[3][a.cell(y, x)]));
                        }
            }
        }
    }
    report(8, norm < kNormalization && balance < kNormalization && pkm < kNormalization && sym < kSymmetry,
           "conservation suite on every generator",
           fmt("normalization %.1e, boarding/alighting %.1e, passenger-km %.1e (each < 1e-9), "
               "uniform symmetry %.1e (< 1e-12)",
               norm, balance, pkm, sym));
}

void cd_behavior()
{
    const SweepConfig config;
    int runs = 0, clamp_free = 0, non_monotone = 0, not_stationary = 0, slow = 0, max_iter = 0;
    double worst_stat = 0.0;
    for (const auto& s : config.scenarios()) {
        static std::map<std::pair<int, double>, DemandAggregates> cache;
        const auto key = std::make_pair(static_cast<int>(s.pattern), s.total_demand);
        if (!cache.count(key))
            cache.emplace(key, aggregate_demand(generate_demand(s.pattern, grid(), s.total_demand)));
        const auto& agg = cache.at(key);
        for (int start = 0; start < s.cd.n_starts; ++start) {
            const auto r = cd::run_cd(agg, s.params, s.network, s.cd, static_cast<std::uint64_t>(start));
            ++runs;
            max_iter = std::max(max_iter, r.trace.iterations());
            if (!r.trace.converged || r.trace.iterations() > kCdIterationCap) ++slow;
            if (r.trace.total_clamp_events() > 0) continue;
            ++clamp_free;
            for (std::size_t i = 1; i < r.trace.z.size(); ++i) {
                if (r.trace.z[i] > r.trace.z[i - 1] * (1 + kMonotone)) {
                    ++non_monotone;
                    break;
                }
            }
            if (start != 0) continue;  // finite differences on one fixed point per scenario
            const double z = r.cost.Z;
            double worst = 0.0;
            for (auto member : {&DesignVariables::delta_ew, &DesignVariables::delta_ns,
                                &DesignVariables::h_ew, &DesignVariables::h_ns}) {
                for (std::size_t i = 0; i < (r.design.*member).size(); ++i) {
                    auto up = r.design, down = r.design;
                    (up.*member)[i] *= std::exp(1e-5);
                    (down.*member)[i] *= std::exp(-1e-5);
                    const double g = (evaluate_cost(up, agg, s.params).Z -
                                      evaluate_cost(down, agg, s.params).Z) / 2e-5;
                    worst = std::max(worst, std::abs(g) / z);
                }
            }
            worst_stat = std::max(worst_stat, worst);
            if (worst >= kFdStationarity) ++not_stationary;
        }
    }
    report(9, non_monotone == 0 && not_stationary == 0 && slow == 0, "coordinate descent behavior",
           fmt("%.0f runs, %.0f clamp-free: %.0f non-monotone steps (tol 1e-9), ", runs, clamp_free,
               non_monotone) +
               fmt("max FD stationarity %.1e (< 1e-4); max iterations %.0f (cap 50), %.0f unconverged",
                   worst_stat, max_iter, slow));
}

}  // namespace

int main()
{
    const int jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    std::printf("acceptance suite (grid 10 km / 0.5 km, %d threads)\n", jobs);
    oracle_equivalence();
    sweep_criteria(jobs);
    chessboard_system();
    calculus_checks();
    model_consistency();
    conservation();
    cd_behavior();
    if (deferred_determinism) deferred_determinism();
    std::printf("%s: %d criterion(s) failed\n", failures ? "FAILED" : "ALL PASSED", failures);
    return failures ? 1 : 0;
}
