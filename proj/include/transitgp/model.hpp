#pragma once

#include <span>
#include <string>
#include <vector>

#include <transitgp/demand.hpp>
#include <transitgp/gp.hpp>

namespace transitgp {

enum class NetworkKind { Heterogeneous, Homogeneous };

const char* network_name(NetworkKind kind);  // "het" / "hom"
NetworkKind parse_network(const std::string& name);

/// Unit costs and operating parameters. Defaults are the case-study values.
struct ModelParams {
    double pi_l = 0.0;              // $/km
    double pi_s = 0.0;              // $
    double pi_k = 2.0;              // $/(veh km)
    double pi_h = 40.0;             // $/(veh hr)
    double v = 25.0;                // km/hr
    double v_w = 2.0;               // km/hr
    double capacity = 80.0;         // pas/veh
    double beta_w = 2.0;
    double tau = 30.0 / 3600.0;     // hr per stop
    double sigma = 60.0 / 3600.0;   // hr per transfer
    double mu = 20.0;               // $/hr

    void validate() const;
};

/// Line densities (1/km) and headways (hr/veh). Heterogeneous designs hold
/// one entry per row (EW) or column (NS); homogeneous designs hold one.
struct DesignVariables {
    NetworkKind kind = NetworkKind::Homogeneous;
    std::vector<double> delta_ew;
    std::vector<double> delta_ns;
    std::vector<double> h_ew;
    std::vector<double> h_ns;

    static DesignVariables homogeneous(double delta_ew, double delta_ns, double h_ew, double h_ns);
    static DesignVariables uniform(NetworkKind kind, int n_cells, double delta, double h);

    std::size_t lines() const { return delta_ew.size(); }
    double delta_ew_at(int y) const { return delta_ew[index(y)]; }
    double delta_ns_at(int x) const { return delta_ns[index(x)]; }
    double h_ew_at(int y) const { return h_ew[index(y)]; }
    double h_ns_at(int x) const { return h_ns[index(x)]; }

    /// Throws std::invalid_argument on a size mismatch or a nonpositive entry.
    void validate(int n_cells) const;

private:
    std::size_t index(int i) const
    {
        return kind == NetworkKind::Homogeneous ? 0 : static_cast<std::size_t>(i);
    }
};

struct CostBreakdown {
    double Z = 0.0;     // hr
    double Z_A = 0.0;   // $
    double Z_P = 0.0;   // hr
    double N_l = 0.0;   // km
    double N_s = 0.0;   // stops
    double N_k = 0.0;   // veh km / hr
    double N_h = 0.0;   // veh hr / hr
    double T_a = 0.0;
    double T_w = 0.0;
    double T_r = 0.0;
    double T_t = 0.0;
    double Z_per_passenger = 0.0;  // hr/pas
};

/// Direct midpoint-rule evaluation of the agency and passenger costs, cell by
/// cell and direction by direction.
CostBreakdown evaluate_cost(const DesignVariables& design, const DemandAggregates& agg,
                            const ModelParams& params);

/// Row and column reductions of the aggregates (plain sums over cells,
/// without the cell-size weights).
struct DemandSums {
    int n_cells = 0;
    double cell_size = 0.0;
    std::vector<double> access_row;   // sum_x sum_i (bo + al) at row y
    std::vector<double> access_col;   // sum_y sum_i (bo + al) at column x
    std::vector<double> wait_ew_row;  // sum_x sum_{E,W} (bo + tr)
    std::vector<double> wait_ns_col;  // sum_y sum_{N,S} (bo + tr)
    std::vector<double> flux_ew_col;  // sum_y (fl_E + fl_W) at column x
    std::vector<double> flux_ns_row;  // sum_x (fl_N + fl_S) at row y
    double flux_total = 0.0;
    double transfer_total = 0.0;
    FluxMaxima maxima;
};

DemandSums summarize_demand(const DemandAggregates& agg);

/// Posynomial form of Z with the decision-independent part split off.
/// Variables are ordered [delta_EW..., delta_NS..., h_EW..., h_NS...].
struct TransitGp {
    gp::GpProblem problem;
    double dropped_constant = 0.0;  // hr
    NetworkKind kind = NetworkKind::Homogeneous;
    int n_lines = 1;

    DesignVariables to_design(std::span<const double> r) const;
    std::vector<double> to_vector(const DesignVariables& design) const;
};

TransitGp build_gp(NetworkKind kind, const DemandAggregates& agg, const ModelParams& params);

/// lambda_fl h / (C delta) per row (EW) and column (NS), or one per axis for
/// homogeneous designs. Constraints with zero flux report 0.
struct Utilization {
    std::vector<double> ew;
    std::vector<double> ns;

    double max() const;
    bool feasible(double tol = 1e-12) const { return max() <= 1.0 + tol; }
};

Utilization capacity_utilization(const DesignVariables& design, const DemandAggregates& agg,
                                 const ModelParams& params);

/// Shrinks the headway of every line whose utilization exceeds `threshold`
/// to reach utilization 0.9.
DesignVariables restore_capacity(const DesignVariables& design, const DemandAggregates& agg,
                                 const ModelParams& params, double threshold = 0.99);

}  // namespace transitgp
