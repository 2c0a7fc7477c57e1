#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include <transitgp/grid.hpp>

namespace transitgp {

/// Discretized OD demand density lambda(xo, yo, xd, yd) in pas/(km^4 hr).
/// Indices are 0-based cell indices along x and y.
class ODMatrix {
public:
    explicit ODMatrix(Grid grid);

    const Grid& grid() const { return grid_; }

    double& at(int xo, int yo, int xd, int yd) { return density_[index(xo, yo, xd, yd)]; }
    double at(int xo, int yo, int xd, int yd) const { return density_[index(xo, yo, xd, yd)]; }

    std::span<const double> data() const { return density_; }
    std::span<double> data() { return density_; }

    /// Sum of density * cell_size^4 over every OD quadruple (pas/hr).
    double total_demand() const;

    void scale(double factor);

private:
    std::size_t index(int xo, int yo, int xd, int yd) const
    {
        const auto n = static_cast<std::size_t>(grid_.n_cells);
        return ((static_cast<std::size_t>(xo) * n + yo) * n + xd) * n + yd;
    }

    Grid grid_;
    std::vector<double> density_;
};

/// Coefficients of the separable Gaussian-bump demand surface. Index
/// [theta][gamma] with theta 0 = origin, 1 = destination.
struct SmoothDemandParams {
    double alpha1 = 0.0;
    double alpha2 = 0.0;
    std::array<double, 2> alpha3{};
    std::array<double, 2> alpha4{};
    std::array<std::array<double, 2>, 2> beta{};
    std::array<std::array<double, 2>, 2> beta_bar{};

    static SmoothDemandParams monocentric();
    static SmoothDemandParams commute();
};

/// Unnormalized demand factor of one trip end located at (x, y).
double smooth_demand_factor(const SmoothDemandParams& p, int theta, double x, double y);

ODMatrix generate_smooth_demand(const Grid& grid, double total_demand,
                                const SmoothDemandParams& params);

ODMatrix generate_uniform_demand(const Grid& grid, double total_demand);

/// Region densities of a two-level chessboard demand field.
struct ChessboardDensities {
    double hh = 0.0;  // H -> H, pas/(km^4 hr)
    double hl = 0.0;  // H -> L
    double lh = 0.0;  // L -> H
    double ll = 0.0;  // L -> L
    double bo_h = 0.0;  // departures per unit area from H, pas/(km^2 hr)
    double bo_l = 0.0;
    double al_h = 0.0;  // arrivals per unit area into H
    double al_l = 0.0;
};

/// Closed-form densities for total demand D, region areas and flow-split
/// ratios. Throws std::invalid_argument on nonpositive areas, ratios outside
/// (0, 1), or ratios that drive the L -> L density negative.
ChessboardDensities solve_chessboard_densities(double total_demand, double area_high,
                                               double area_low, double rho_high,
                                               double rho_high_high);

/// H/L membership of every cell for chessboard pattern 1..4.
struct ChessboardLayout {
    int pattern_id = 0;
    double block_side = 0.0;     // km
    std::vector<bool> high;      // [x * n + y]
    double area_high = 0.0;      // km^2
    double area_low = 0.0;       // km^2

    bool is_high(const Grid& grid, int x, int y) const
    {
        return high[static_cast<std::size_t>(x) * grid.n_cells + y];
    }
};

double chessboard_block_side(int pattern_id);
ChessboardLayout chessboard_layout(const Grid& grid, int pattern_id);

ODMatrix generate_chessboard_demand(const Grid& grid, double total_demand, int pattern_id,
                                    double rho_high = 0.9, double rho_high_high = 0.9);

enum class Direction { East = 0, West = 1, North = 2, South = 3 };
inline constexpr std::array<Direction, 4> kDirections{Direction::East, Direction::West,
                                                      Direction::North, Direction::South};
const char* direction_name(Direction d);

/// Direction-indexed per-cell demand densities. Each array is laid out as
/// [x * n + y].
struct DemandAggregates {
    Grid grid;
    double total_demand = 0.0;  // pas/hr, including same-cell trips
    std::array<std::vector<double>, 4> boarding;   // pas/(km^2 hr)
    std::array<std::vector<double>, 4> alighting;  // pas/(km^2 hr)
    std::array<std::vector<double>, 4> flux;       // pas/(km hr)
    std::array<std::vector<double>, 4> transfer;   // pas/(km^2 hr)

    explicit DemandAggregates(Grid g);

    std::size_t cell(int x, int y) const
    {
        return static_cast<std::size_t>(x) * grid.n_cells + y;
    }
    static std::size_t dir(Direction d) { return static_cast<std::size_t>(d); }
};

/// Routes every OD pair on an L-shaped path (50/50 horizontal-first and
/// vertical-first), single leg for same-row/column pairs, and accumulates
/// boarding, alighting, flux and transfer densities. Deterministic.
DemandAggregates aggregate_demand(const ODMatrix& od);

struct FluxMaxima {
    std::vector<double> ew_row;  // max over E/W and x, per row y
    std::vector<double> ns_col;  // max over N/S and y, per column x
    double ew_max = 0.0;
    double ns_max = 0.0;
};

FluxMaxima reduce_flux(const DemandAggregates& agg);

}  // namespace transitgp
