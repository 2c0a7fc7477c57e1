#include <transitgp/demand.hpp>

#include <algorithm>

namespace transitgp {

const char* direction_name(Direction d)
{
    switch (d) {
    case Direction::East: return "E";
    case Direction::West: return "W";
    case Direction::North: return "N";
    case Direction::South: return "S";
    }
    return "?";
}

DemandAggregates::DemandAggregates(Grid g) : grid(g)
{
    const auto cells = static_cast<std::size_t>(g.n_total_cells());
    for (std::size_t i = 0; i < 4; ++i) {
        boarding[i].assign(cells, 0.0);
        alighting[i].assign(cells, 0.0);
        flux[i].assign(cells, 0.0);
        transfer[i].assign(cells, 0.0);
    }
}

namespace {

class Router {
public:
    explicit Router(DemandAggregates& agg)
        : agg_(agg), inv_area_(1.0 / agg.grid.cell_area()), inv_len_(1.0 / agg.grid.cell_size)
    {
    }

    // rate in pas/hr along row y from x0 to x1 (x0 != x1).
    Direction ride_row(double rate, int y, int x0, int x1)
    {
        const Direction d = x1 > x0 ? Direction::East : Direction::West;
        auto& f = agg_.flux[DemandAggregates::dir(d)];
        const double line_density = rate * inv_len_;
        if (x1 > x0) {
            for (int x = x0; x < x1; ++x) f[agg_.cell(x, y)] += line_density;
        } else {
            for (int x = x0; x > x1; --x) f[agg_.cell(x, y)] += line_density;
        }
        return d;
    }

    Direction ride_column(double rate, int x, int y0, int y1)
    {
        const Direction d = y1 > y0 ? Direction::North : Direction::South;
        auto& f = agg_.flux[DemandAggregates::dir(d)];
        const double line_density = rate * inv_len_;
        if (y1 > y0) {
            for (int y = y0; y < y1; ++y) f[agg_.cell(x, y)] += line_density;
        } else {
            for (int y = y0; y > y1; --y) f[agg_.cell(x, y)] += line_density;
        }
        return d;
    }

    void board(Direction d, int x, int y, double rate)
    {
        agg_.boarding[DemandAggregates::dir(d)][agg_.cell(x, y)] += rate * inv_area_;
    }
    void alight(Direction d, int x, int y, double rate)
    {
        agg_.alighting[DemandAggregates::dir(d)][agg_.cell(x, y)] += rate * inv_area_;
    }
    void transfer(Direction d, int x, int y, double rate)
    {
        agg_.transfer[DemandAggregates::dir(d)][agg_.cell(x, y)] += rate * inv_area_;
    }

private:
    DemandAggregates& agg_;
    double inv_area_;
    double inv_len_;
};

}  // namespace

DemandAggregates aggregate_demand(const ODMatrix& od)
{
    const Grid& grid = od.grid();
    DemandAggregates agg(grid);
    agg.total_demand = od.total_demand();
    Router router(agg);
    const int n = grid.n_cells;
    const double weight = grid.cell_area() * grid.cell_area();

    for (int xo = 0; xo < n; ++xo)
        for (int yo = 0; yo < n; ++yo)
            for (int xd = 0; xd < n; ++xd)
                for (int yd = 0; yd < n; ++yd) {
                    const double density = od.at(xo, yo, xd, yd);
                    if (density == 0.0) continue;
                    const double rate = density * weight;
                    if (xo == xd && yo == yd) continue;

                    if (yo == yd) {
                        const Direction d = router.ride_row(rate, yo, xo, xd);
                        router.board(d, xo, yo, rate);
                        router.alight(d, xd, yd, rate);
                        continue;
                    }
                    if (xo == xd) {
                        const Direction d = router.ride_column(rate, xo, yo, yd);
                        router.board(d, xo, yo, rate);
                        router.alight(d, xd, yd, rate);
                        continue;
                    }

                    const double half = 0.5 * rate;
                    // Horizontal first, transfer at (xd, yo).
                    {
                        const Direction h = router.ride_row(half, yo, xo, xd);
                        const Direction v = router.ride_column(half, xd, yo, yd);
                        router.board(h, xo, yo, half);
                        router.transfer(v, xd, yo, half);
                        router.alight(v, xd, yd, half);
                    }
                    // Vertical first, transfer at (xo, yd).
                    {
                        const Direction v = router.ride_column(half, xo, yo, yd);
                        const Direction h = router.ride_row(half, yd, xo, xd);
                        router.board(v, xo, yo, half);
                        router.transfer(h, xo, yd, half);
                        router.alight(h, xd, yd, half);
                    }
                }
    return agg;
}

FluxMaxima reduce_flux(const DemandAggregates& agg)
{
    const int n = agg.grid.n_cells;
    FluxMaxima m;
    m.ew_row.assign(n, 0.0);
    m.ns_col.assign(n, 0.0);
    const auto& fe = agg.flux[DemandAggregates::dir(Direction::East)];
    const auto& fw = agg.flux[DemandAggregates::dir(Direction::West)];
    const auto& fn = agg.flux[DemandAggregates::dir(Direction::North)];
    const auto& fs = agg.flux[DemandAggregates::dir(Direction::South)];
    for (int x = 0; x < n; ++x) {
        for (int y = 0; y < n; ++y) {
            const auto c = agg.cell(x, y);
            m.ew_row[y] = std::max({m.ew_row[y], fe[c], fw[c]});
            m.ns_col[x] = std::max({m.ns_col[x], fn[c], fs[c]});
        }
    }
    m.ew_max = *std::max_element(m.ew_row.begin(), m.ew_row.end());
    m.ns_max = *std::max_element(m.ns_col.begin(), m.ns_col.end());
    return m;
}

}  // namespace transitgp
