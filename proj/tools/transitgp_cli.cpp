#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include <transitgp/harness.hpp>
#include <transitgp/io.hpp>

namespace fs = std::filesystem;
using namespace transitgp;
using nlohmann::json;

namespace {

void write_json(const fs::path& path, const json& j)
{
    io::write_text_file(path.string(), j.dump(2) + "\n");
}

int demand_gen(const std::string& pattern, double total, double side, double delta,
               std::uint64_t seed, const std::string& out_path, const std::string& agg_path)
{
    (void)seed;  // every generator is deterministic; accepted for interface stability
    const Grid grid = build_grid(side, delta);
    const ODMatrix od = generate_demand(parse_pattern(pattern), grid, total);
    std::ostringstream ss;
    io::write_od_csv(ss, od);
    io::write_text_file(out_path, ss.str());
    if (!agg_path.empty()) {
        std::ostringstream as;
        io::write_aggregates_csv(as, aggregate_demand(od));
        io::write_text_file(agg_path, as.str());
    }
    std::cout << "wrote " << out_path << " (" << grid.n_cells << "x" << grid.n_cells
              << " cells, D=" << od.total_demand() << ")\n";
    return 0;
}

int solve(const std::string& method, const std::string& network, const std::string& scenario_path,
          const std::string& out_dir)
{
    Scenario s = scenario_from_json(json::parse(io::read_text_file(scenario_path)));
    if (!network.empty()) s.network = parse_network(network);
    fs::create_directories(out_dir);
    const fs::path dir(out_dir);

    const Grid grid = build_grid(s.side_length, s.cell_size);
    const DemandAggregates agg = aggregate_demand(generate_demand(s.pattern, grid, s.total_demand));
    MethodOutcome outcome;
    if (method == "gp") {
        gp::SolveReport report;
        outcome = solve_with_gp(agg, s, &report);
        write_json(dir / "gp_problem.json", io::to_json(build_gp(s.network, agg, s.params).problem));
        write_json(dir / "solve_report.json", io::to_json(report));
        std::cout << "status " << gp::status_name(report.status) << ", stationarity "
                  << report.kkt.stationarity << ", relative gap " << report.relative_gap << "\n";
    } else if (method == "cd") {
        cd::CdTrace trace;
        outcome = solve_with_cd(agg, s, &trace);
        write_json(dir / "cd_trace.json", io::to_json(trace));
        std::cout << "iterations " << trace.iterations() << ", clamp events "
                  << trace.total_clamp_events() << "\n";
    } else {
        throw std::invalid_argument("unknown method '" + method + "'");
    }
    write_json(dir / "cost.json", io::to_json(outcome.cost));
    write_json(dir / "design.json", io::to_json(outcome.design));

    json row = to_json(s);
    row["methods"] = {{method, {{"cost", io::to_json(outcome.cost)},
                                {"design", io::to_json(outcome.design)},
                                {"iterations", outcome.iterations},
                                {"clamp_events", outcome.clamp_events},
                                {"kkt_stationarity", outcome.kkt_stationarity}}}};
    write_json(dir / "rows.json", json{{"rows", json::array({row})}});
    std::cout << s.key() << " " << method << " Z=" << io::format_double(outcome.cost.Z)
              << " hr, Z/D=" << io::format_double(outcome.cost.Z_per_passenger) << " hr/pas\n";
    return 0;
}

int sweep(const std::string& config_path, const std::string& out_dir, int jobs, bool timing)
{
    const SweepConfig config = config_path.empty()
                                   ? SweepConfig{}
                                   : sweep_from_json(json::parse(io::read_text_file(config_path)));
    fs::create_directories(out_dir);
    const fs::path dir(out_dir);
    const auto rows = run_sweep(config, jobs);

    std::ostringstream results, summary;
    write_results_csv(results, rows, timing);
    const auto cells = summarize(rows);
    write_summary_csv(summary, cells);
    io::write_text_file((dir / "results.csv").string(), results.str());
    io::write_text_file((dir / "summary.csv").string(), summary.str());
    write_json(dir / "rows.json", rows_to_json(rows));

    int failures = 0;
    for (const auto& r : rows) {
        if (!r.ok()) {
            ++failures;
            std::cerr << "failed: " << r.error << "\n";
        }
    }
    std::cout << rows.size() << " scenarios, " << failures << " failed\n";
    std::cout << summary.str();
    return failures == 0 ? 0 : 2;
}

int export_data(const std::string& what, const std::string& in_path, const std::string& out_path)
{
    std::ostringstream ss;
    if (what == "breakdown") {
        export_breakdown(ss, json::parse(io::read_text_file(in_path)));
    } else if (what == "heatmap") {
        std::ifstream in(in_path);
        if (!in) throw std::runtime_error("cannot open " + in_path);
        export_demand_heatmap(ss, io::read_od_csv(in));
    } else {
        throw std::invalid_argument("unknown export '" + what + "'");
    }
    io::write_text_file(out_path, ss.str());
    return 0;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Transit network design by geometric programming"};
    app.require_subcommand(1);

    auto* demand = app.add_subcommand("demand", "Demand generation");
    demand->require_subcommand(1);
    auto* gen = demand->add_subcommand("gen", "Write a discretized OD matrix as CSV");
    std::string pattern, out_path, agg_path;
    double total = 10000.0, side = 10.0, delta = 0.5;
    std::uint64_t seed = 1;
    gen->add_option("--pattern", pattern, "uniform|monocentric|commute|chessboard1..4")->required();
    gen->add_option("--total", total, "Total demand D (pas/hr)")->required();
    gen->add_option("--side", side, "Side length (km)");
    gen->add_option("--delta", delta, "Cell size (km)");
    gen->add_option("--seed", seed, "Random seed");
    gen->add_option("--out", out_path, "Output CSV")->required();
    gen->add_option("--aggregates", agg_path, "Also write the directional aggregates CSV");

    auto* solve_cmd = app.add_subcommand("solve", "Solve one scenario with GP or CD");
    std::string method, network, scenario_path, out_dir;
    solve_cmd->add_option("--method", method, "gp|cd")->required()->check(CLI::IsMember({"gp", "cd"}));
    solve_cmd->add_option("--network", network, "het|hom (overrides the scenario)")
        ->check(CLI::IsMember({"het", "hom"}));
    solve_cmd->add_option("--scenario", scenario_path, "Scenario JSON")->required();
    solve_cmd->add_option("--out", out_dir, "Output directory")->required();

    auto* sweep_cmd = app.add_subcommand("sweep", "Run the GP vs CD comparison grid");
    std::string config_path, sweep_out;
    int jobs = 1;
    bool timing = false;
    sweep_cmd->add_option("--config", config_path, "Sweep JSON (default grid if omitted)");
    sweep_cmd->add_option("--out", sweep_out, "Output directory")->required();
    sweep_cmd->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
    sweep_cmd->add_flag("--timing", timing, "Record wall-clock runtimes in results.csv");

    auto* export_cmd = app.add_subcommand("export", "Plot-ready CSV exports");
    std::string what, in_path, export_out;
    export_cmd->add_option("--what", what, "breakdown|heatmap")
        ->required()
        ->check(CLI::IsMember({"breakdown", "heatmap"}));
    export_cmd->add_option("--in", in_path, "rows.json (breakdown) or OD CSV (heatmap)")->required();
    export_cmd->add_option("--out", export_out, "Output CSV")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen) return demand_gen(pattern, total, side, delta, seed, out_path, agg_path);
        if (*solve_cmd) return solve(method, network, scenario_path, out_dir);
        if (*sweep_cmd) return sweep(config_path, sweep_out, jobs, timing);
        if (*export_cmd) return export_data(what, in_path, export_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
