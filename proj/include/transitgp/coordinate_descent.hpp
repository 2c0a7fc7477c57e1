#pragma once

#include <cstdint>
#include <vector>

#include <transitgp/model.hpp>

namespace transitgp::cd {

struct CdOptions {
    int max_iterations = 500;
    double tolerance = 1e-9;  // relative change in Z between iterations
    int n_starts = 10;
    std::uint64_t seed = 1;
    double delta_init_min = 0.05;  // 1/km, log-uniform
    double delta_init_max = 2.0;
    double h_init_min = 0.02;      // hr, log-uniform
    double h_init_max = 0.5;
    double h_max = 1.0;            // headway used when a line carries no waiting riders
    double delta_min = 0.01;       // density used when a line serves no access demand

    void validate() const;
};

/// Unclamped headway candidates (one per line).
struct Headways {
    std::vector<double> ew;
    std::vector<double> ns;
};

struct CdTrace {
    std::vector<double> z;            // Z after each iteration
    std::vector<int> clamp_counts;    // lines bound by capacity after each iteration
    std::vector<bool> final_clamped_ew;
    std::vector<bool> final_clamped_ns;
    DesignVariables final_design;
    bool converged = false;

    int iterations() const { return static_cast<int>(z.size()); }
    int total_clamp_events() const;
};

/// Headway minimizers of Z for the current line densities.
Headways cd_step_headways(const DesignVariables& design, const DemandSums& sums,
                          const ModelParams& params, const CdOptions& opts = {});

/// Line-density minimizers of Z given candidate headways. Cross-axis
/// densities are taken from `design` (the previous iterate).
DesignVariables cd_step_densities(const DesignVariables& design, const Headways& candidates,
                                  const DemandSums& sums, const ModelParams& params,
                                  const CdOptions& opts = {});

/// h = min(h_candidate, C delta / lambda_fl) line by line. Writes the feasible
/// headways into `design` and returns the number of clamped lines.
int cd_enforce_capacity(DesignVariables& design, const Headways& candidates,
                        const DemandSums& sums, const ModelParams& params,
                        CdTrace* trace = nullptr);

DesignVariables random_design(NetworkKind kind, int n_cells, const CdOptions& opts,
                              std::uint64_t stream);

struct CdResult {
    DesignVariables design;
    CostBreakdown cost;
    CdTrace trace;
};

/// Alternates headway, density and capacity updates from `start` until the
/// relative change in Z falls below the tolerance or the iteration cap.
CdResult run_cd_from(const DesignVariables& start, const DemandAggregates& agg,
                     const ModelParams& params, const CdOptions& opts = {});

/// Single start seeded by (opts.seed, stream).
CdResult run_cd(const DemandAggregates& agg, const ModelParams& params, NetworkKind kind,
                const CdOptions& opts = {}, std::uint64_t stream = 0);

struct MultistartResult {
    CdResult best;
    int best_start = 0;
    std::vector<double> final_z;
    double spread() const;  // max - min final Z
};

MultistartResult run_cd_multistart(const DemandAggregates& agg, const ModelParams& params,
                                   NetworkKind kind, const CdOptions& opts = {});

}  // namespace transitgp::cd
