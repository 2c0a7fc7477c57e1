#include <transitgp/demand.hpp>

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace transitgp {

ODMatrix::ODMatrix(Grid grid)
    : grid_(grid),
      density_(static_cast<std::size_t>(grid.n_cells) * grid.n_cells * grid.n_cells * grid.n_cells,
               0.0)
{
}

double ODMatrix::total_demand() const
{
    const double w = grid_.cell_area() * grid_.cell_area();
    return std::accumulate(density_.begin(), density_.end(), 0.0) * w;
}

void ODMatrix::scale(double factor)
{
    for (auto& v : density_) v *= factor;
}

SmoothDemandParams SmoothDemandParams::monocentric()
{
    SmoothDemandParams p;
    p.alpha1 = 0.0016;
    p.alpha2 = 0.065;
    p.alpha3 = {0.5, 0.0};
    p.alpha4 = {0.5, 0.0};
    p.beta = {{{2.5, 0.0}, {2.5, 0.0}}};
    p.beta_bar = {{{2.5, 0.0}, {2.5, 0.0}}};
    return p;
}

SmoothDemandParams SmoothDemandParams::commute()
{
    SmoothDemandParams p;
    p.alpha1 = 0.00044;
    p.alpha2 = 0.70;
    p.alpha3 = {0.5, 0.0};
    p.alpha4 = {0.5, 0.0};
    p.beta = {{{1.0, 0.0}, {4.0, 0.0}}};
    p.beta_bar = {{{4.0, 0.0}, {1.0, 0.0}}};
    return p;
}

double smooth_demand_factor(const SmoothDemandParams& p, int theta, double x, double y)
{
    double bumps = 0.0;
    for (int g = 0; g < 2; ++g) {
        const double u = p.alpha3[g] * x - p.beta[theta][g];
        const double w = p.alpha4[g] * y - p.beta_bar[theta][g];
        bumps += std::exp(-u * u - w * w);
    }
    return p.alpha1 + p.alpha2 * bumps;
}

namespace {

void normalize_to(ODMatrix& od, double total_demand)
{
    const double current = od.total_demand();
    if (!(current > 0.0)) {
        throw std::invalid_argument("demand field is identically zero; cannot normalize");
    }
    od.scale(total_demand / current);
}

void check_total(double total_demand)
{
    if (!(total_demand > 0.0)) {
        throw std::invalid_argument("total demand must be positive");
    }
}

}  // namespace

ODMatrix generate_smooth_demand(const Grid& grid, double total_demand,
                                const SmoothDemandParams& params)
{
    check_total(total_demand);
    const int n = grid.n_cells;
    std::vector<double> origin(static_cast<std::size_t>(n) * n);
    std::vector<double> destination(origin.size());
    for (int x = 0; x < n; ++x) {
        for (int y = 0; y < n; ++y) {
            origin[x * n + y] = smooth_demand_factor(params, 0, grid.center(x), grid.center(y));
            destination[x * n + y] = smooth_demand_factor(params, 1, grid.center(x), grid.center(y));
        }
    }
    ODMatrix od(grid);
    for (int xo = 0; xo < n; ++xo)
        for (int yo = 0; yo < n; ++yo)
            for (int xd = 0; xd < n; ++xd)
                for (int yd = 0; yd < n; ++yd)
                    od.at(xo, yo, xd, yd) = origin[xo * n + yo] * destination[xd * n + yd];
    normalize_to(od, total_demand);
    return od;
}

ODMatrix generate_uniform_demand(const Grid& grid, double total_demand)
{
    check_total(total_demand);
    ODMatrix od(grid);
    const double area = grid.side_length * grid.side_length;
    const double value = total_demand / (area * area);
    for (auto& v : od.data()) v = value;
    return od;
}

ChessboardDensities solve_chessboard_densities(double total_demand, double area_high,
                                               double area_low, double rho_high,
                                               double rho_high_high)
{
    check_total(total_demand);
    if (!(area_high > 0.0) || !(area_low > 0.0)) {
        throw std::invalid_argument("chessboard: region areas must be positive");
    }
    if (!(rho_high > 0.0 && rho_high < 1.0) || !(rho_high_high > 0.0 && rho_high_high < 1.0)) {
        throw std::invalid_argument("chessboard: ratios must lie in (0, 1)");
    }
    const double d = total_demand;
    const double denom = 2.0 - rho_high_high;
    const double ll_numerator = 2.0 - rho_high_high - 3.0 * rho_high + 2.0 * rho_high * rho_high_high;
    if (ll_numerator < 0.0) {
        throw std::invalid_argument("chessboard: infeasible ratios (negative L->L density)");
    }

    ChessboardDensities s;
    s.hh = d * rho_high / (area_high * area_high * denom);
    s.hl = d * rho_high * (1.0 - rho_high_high) / (area_high * area_low * denom);
    s.lh = s.hl;
    s.ll = d * ll_numerator / (area_low * area_low * denom);
    s.bo_h = area_high * s.hh + area_low * s.hl;
    s.bo_l = area_high * s.lh + area_low * s.ll;
    s.al_h = area_high * s.hh + area_low * s.lh;
    s.al_l = area_high * s.hl + area_low * s.ll;
    return s;
}

double chessboard_block_side(int pattern_id)
{
    switch (pattern_id) {
    case 1: return 5.0;
    case 2: return 2.5;
    case 3: return 2.0;
    case 4: return 1.0;
    default:
        throw std::invalid_argument("chessboard pattern id must be 1..4, got " +
                                    std::to_string(pattern_id));
    }
}

ChessboardLayout chessboard_layout(const Grid& grid, int pattern_id)
{
    ChessboardLayout layout;
    layout.pattern_id = pattern_id;
    layout.block_side = chessboard_block_side(pattern_id);
    const double ratio = layout.block_side / grid.cell_size;
    const int cells_per_block = static_cast<int>(std::lround(ratio));
    if (cells_per_block < 1 || std::abs(ratio - cells_per_block) > 1e-9 * ratio) {
        throw std::invalid_argument("chessboard block side is not a multiple of the cell size");
    }
    const int n = grid.n_cells;
    layout.high.assign(static_cast<std::size_t>(n) * n, false);
    int n_high = 0;
    for (int x = 0; x < n; ++x) {
        for (int y = 0; y < n; ++y) {
            const bool h = ((x / cells_per_block) + (y / cells_per_block)) % 2 == 0;
            layout.high[static_cast<std::size_t>(x) * n + y] = h;
            n_high += h ? 1 : 0;
        }
    }
    layout.area_high = n_high * grid.cell_area();
    layout.area_low = (n * n - n_high) * grid.cell_area();
    return layout;
}

ODMatrix generate_chessboard_demand(const Grid& grid, double total_demand, int pattern_id,
                                    double rho_high, double rho_high_high)
{
    const ChessboardLayout layout = chessboard_layout(grid, pattern_id);
    const ChessboardDensities s = solve_chessboard_densities(
        total_demand, layout.area_high, layout.area_low, rho_high, rho_high_high);
    const int n = grid.n_cells;
    ODMatrix od(grid);
    for (int xo = 0; xo < n; ++xo)
        for (int yo = 0; yo < n; ++yo) {
            const bool oh = layout.is_high(grid, xo, yo);
            for (int xd = 0; xd < n; ++xd)
                for (int yd = 0; yd < n; ++yd) {
                    const bool dh = layout.is_high(grid, xd, yd);
                    od.at(xo, yo, xd, yd) = oh ? (dh ? s.hh : s.hl) : (dh ? s.lh : s.ll);
                }
        }
    return od;
}

}  // namespace transitgp
