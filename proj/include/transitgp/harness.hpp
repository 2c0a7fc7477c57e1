#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include <transitgp/coordinate_descent.hpp>
#include <transitgp/gp.hpp>
#include <transitgp/model.hpp>

namespace transitgp {

enum class DemandPattern {
    Uniform,
    Monocentric,
    Commute,
    Chessboard1,
    Chessboard2,
    Chessboard3,
    Chessboard4,
};

const char* pattern_name(DemandPattern p);
DemandPattern parse_pattern(const std::string& name);

/// The six heterogeneous patterns of the default sweep (uniform excluded).
std::vector<DemandPattern> sweep_patterns();

ODMatrix generate_demand(DemandPattern pattern, const Grid& grid, double total_demand);

struct Scenario {
    DemandPattern pattern = DemandPattern::Uniform;
    double total_demand = 10000.0;  // pas/hr
    NetworkKind network = NetworkKind::Heterogeneous;
    double side_length = 10.0;      // km
    double cell_size = 0.5;         // km
    ModelParams params;             // params.mu is the value of time
    std::uint64_t seed = 1;
    cd::CdOptions cd;
    gp::SolveOptions gp;

    void validate() const;
    std::string key() const;  // "pattern/D/mu/network"
};

/// Fields: pattern, D, mu, network, side_length, cell_size, seed, params{...},
/// cd{...}, gp{...}. Missing fields keep their defaults; unknown keys throw.
Scenario scenario_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Scenario& s);

struct MethodOutcome {
    DesignVariables design;
    CostBreakdown cost;
    int iterations = 0;
    int clamp_events = 0;
    double runtime_ms = 0.0;
    double kkt_stationarity = 0.0;
};

struct ComparisonRow {
    Scenario scenario;
    MethodOutcome gp;
    MethodOutcome cd;
    gp::SolveReport gp_report;
    cd::CdTrace cd_trace;
    double improvement_pct = 0.0;  // 100 (Z_cd - Z_gp) / Z_cd
    double cd_spread = 0.0;        // max - min final Z over the CD starts
    std::string error;             // non-empty if the scenario failed

    bool ok() const { return error.empty(); }
};

MethodOutcome solve_with_gp(const DemandAggregates& agg, const Scenario& s,
                            gp::SolveReport* report = nullptr);
MethodOutcome solve_with_cd(const DemandAggregates& agg, const Scenario& s,
                            cd::CdTrace* trace = nullptr, double* spread = nullptr);

/// Demand, aggregation, GP and CD multistart, both designs scored by
/// evaluate_cost. Errors are rethrown as std::runtime_error prefixed with the
/// scenario key.
ComparisonRow run_scenario(const Scenario& s);

struct SweepConfig {
    std::vector<DemandPattern> patterns = sweep_patterns();
    std::vector<double> demands{5000.0, 10000.0, 50000.0, 100000.0};
    std::vector<double> mus{25.0, 20.0, 5.0};
    std::vector<NetworkKind> networks{NetworkKind::Heterogeneous, NetworkKind::Homogeneous};
    double side_length = 10.0;
    double cell_size = 0.5;
    ModelParams params;
    std::uint64_t seed = 1;
    cd::CdOptions cd;
    gp::SolveOptions gp;

    /// Scenarios in network, D, mu, pattern order. Each carries a seed mixed
    /// from `seed` and its key, so results do not depend on grid order.
    std::vector<Scenario> scenarios() const;
};

SweepConfig sweep_from_json(const nlohmann::json& j);

/// Runs every scenario on up to `jobs` threads. Failed scenarios keep their
/// error message and the sweep continues. Rows come back in scenarios() order.
std::vector<ComparisonRow> run_sweep(const SweepConfig& config, int jobs = 1);

/// Relative CD improvement reported for the published benchmark, if the
/// (network, D, mu) cell is one of its entries.
std::optional<double> reference_improvement(NetworkKind kind, double total_demand, double mu);

struct SummaryCell {
    NetworkKind network;
    double total_demand;
    double mu;
    double mean_improvement_pct;
    std::optional<double> reference_pct;
    int n_rows;
};

std::vector<SummaryCell> summarize(const std::vector<ComparisonRow>& rows);

/// One line per (scenario, method). runtime_ms is written as 0 unless
/// `with_timing`, which keeps the file byte-reproducible by default.
void write_results_csv(std::ostream& out, const std::vector<ComparisonRow>& rows,
                       bool with_timing = false);
void write_summary_csv(std::ostream& out, const std::vector<SummaryCell>& cells);

/// Machine-readable rows (scenario, both cost breakdowns and designs).
nlohmann::json rows_to_json(const std::vector<ComparisonRow>& rows);

/// Per-passenger components Z_A/mu/D, T_a/D, T_w/D, T_r/D, T_t/D and Z/D for
/// every method in a rows document.
void export_breakdown(std::ostream& out, const nlohmann::json& rows_doc);

/// Per cell: sum over destinations plus sum over origins of lambda * cell_area.
std::vector<double> demand_heatmap(const ODMatrix& od);
void export_demand_heatmap(std::ostream& out, const ODMatrix& od);

}  // namespace transitgp
