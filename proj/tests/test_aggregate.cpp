#include <gtest/gtest.h>

#include <cmath>

#include <transitgp/harness.hpp>

using namespace transitgp;

namespace {

constexpr auto E = static_cast<std::size_t>(Direction::East);
constexpr auto W = static_cast<std::size_t>(Direction::West);
constexpr auto N = static_cast<std::size_t>(Direction::North);
constexpr auto S = static_cast<std::size_t>(Direction::South);

double total(const std::array<std::vector<double>, 4>& field, double weight)
{
    double t = 0.0;
    for (const auto& f : field)
        for (double v : f) t += v * weight;
    return t;
}

double passenger_km(const ODMatrix& od)
{
    const Grid& g = od.grid();
    const int n = g.n_cells;
    const double w = std::pow(g.cell_size, 4);
    double t = 0.0;
    for (int xo = 0; xo < n; ++xo)
        for (int yo = 0; yo < n; ++yo)
            for (int xd = 0; xd < n; ++xd)
                for (int yd = 0; yd < n; ++yd)
                    t += od.at(xo, yo, xd, yd) * w *
                         (std::abs(g.center(xd) - g.center(xo)) + std::abs(g.center(yd) - g.center(yo)));
    return t;
}

}  // namespace

TEST(Aggregate, SingleTripByHand)
{
    const Grid g = build_grid(4.0, 1.0);
    ODMatrix od(g);
    od.at(0, 0, 2, 1) = 8.0;  // 8 pas/hr, cell area 1
    const auto a = aggregate_demand(od);
    auto c = [&](int x, int y) { return a.cell(x, y); };

    EXPECT_DOUBLE_EQ(a.boarding[E][c(0, 0)], 4.0);
    EXPECT_DOUBLE_EQ(a.boarding[N][c(0, 0)], 4.0);
    EXPECT_DOUBLE_EQ(a.alighting[N][c(2, 1)], 4.0);  // east then north
    EXPECT_DOUBLE_EQ(a.alighting[E][c(2, 1)], 4.0);  // north then east
    EXPECT_DOUBLE_EQ(a.transfer[N][c(2, 0)], 4.0);
    EXPECT_DOUBLE_EQ(a.transfer[E][c(0, 1)], 4.0);
    EXPECT_DOUBLE_EQ(a.flux[E][c(0, 0)], 4.0);
    EXPECT_DOUBLE_EQ(a.flux[E][c(1, 0)], 4.0);
    EXPECT_DOUBLE_EQ(a.flux[E][c(2, 0)], 0.0);
    EXPECT_DOUBLE_EQ(a.flux[N][c(2, 0)], 4.0);
    EXPECT_DOUBLE_EQ(a.flux[N][c(0, 0)], 4.0);
    EXPECT_DOUBLE_EQ(a.flux[E][c(0, 1)], 4.0);
    EXPECT_DOUBLE_EQ(a.flux[E][c(1, 1)], 4.0);

    const double all = total(a.boarding, 1.0) + total(a.alighting, 1.0) + total(a.transfer, 1.0);
    EXPECT_DOUBLE_EQ(all, 8.0 + 8.0 + 8.0);
}

TEST(Aggregate, SameRowTripHasNoTransfer)
{
    const Grid g = build_grid(4.0, 1.0);
    ODMatrix od(g);
    od.at(3, 2, 0, 2) = 2.0;
    const auto a = aggregate_demand(od);
    EXPECT_DOUBLE_EQ(a.boarding[W][a.cell(3, 2)], 2.0);
    EXPECT_DOUBLE_EQ(a.alighting[W][a.cell(0, 2)], 2.0);
    EXPECT_DOUBLE_EQ(total(a.transfer, 1.0), 0.0);
    // Half-open span: cells 3, 2, 1 carry the westbound load.
    EXPECT_DOUBLE_EQ(a.flux[W][a.cell(3, 2)], 2.0);
    EXPECT_DOUBLE_EQ(a.flux[W][a.cell(1, 2)], 2.0);
    EXPECT_DOUBLE_EQ(a.flux[W][a.cell(0, 2)], 0.0);
}

TEST(Aggregate, SameCellTripIsNotRouted)
{
    const Grid g = build_grid(4.0, 1.0);
    ODMatrix od(g);
    od.at(1, 1, 1, 1) = 5.0;
    const auto a = aggregate_demand(od);
    EXPECT_DOUBLE_EQ(a.total_demand, 5.0);
    EXPECT_DOUBLE_EQ(total(a.boarding, 1.0), 0.0);
    EXPECT_DOUBLE_EQ(total(a.flux, 1.0), 0.0);
}

TEST(Aggregate, ConservationOnEveryGenerator)
{
    const Grid g = build_grid(10.0, 0.5);
    const double area = g.cell_area();
    for (DemandPattern p : {DemandPattern::Uniform, DemandPattern::Monocentric, DemandPattern::Commute,
                            DemandPattern::Chessboard1, DemandPattern::Chessboard2,
                            DemandPattern::Chessboard3, DemandPattern::Chessboard4}) {
        const ODMatrix od = generate_demand(p, g, 10000.0);
        const auto a = aggregate_demand(od);
        const double bo = total(a.boarding, area);
        const double al = total(a.alighting, area);
        const double tr = total(a.transfer, area);
        EXPECT_LT(std::abs(bo - al) / bo, 1e-12) << pattern_name(p);
        EXPECT_LE(tr, bo) << pattern_name(p);
        const double pkm = passenger_km(od);
        EXPECT_LT(std::abs(total(a.flux, area) - pkm) / pkm, 1e-9) << pattern_name(p);
        for (const auto* field : {&a.boarding, &a.alighting, &a.flux, &a.transfer})
            for (const auto& f : *field)
                for (double v : f) ASSERT_GE(v, 0.0);
    }
}

TEST(Aggregate, UniformDemandIsSymmetric)
{
    const Grid g = build_grid(10.0, 0.5);
    const auto a = aggregate_demand(generate_uniform_demand(g, 10000.0));
    const int n = g.n_cells;
    auto close = [](double u, double v) {
        return std::abs(u - v) <= 1e-12 * std::max({std::abs(u), std::abs(v), 1.0});
    };
    for (int x = 0; x < n; ++x)
        for (int y = 0; y < n; ++y) {
            const auto c = a.cell(x, y);
            const auto t = a.cell(y, x);          // transpose swaps E<->N, W<->S
            const auto m = a.cell(n - 1 - x, y);  // mirror swaps E<->W
            for (const auto* f : {&a.boarding, &a.alighting, &a.transfer}) {
                ASSERT_TRUE(close((*f)[E][c], (*f)[N][t]));
                ASSERT_TRUE(close((*f)[W][c], (*f)[S][t]));
                ASSERT_TRUE(close((*f)[E][c], (*f)[W][m]));
            }
            ASSERT_TRUE(close(a.flux[E][c], a.flux[N][t]));
            ASSERT_TRUE(close(a.flux[W][c], a.flux[S][t]));
            // Rotation by 90 degrees: (x, y) -> (n-1-y, x) maps E to N.
            const auto r = a.cell(n - 1 - y, x);
            ASSERT_TRUE(close(a.boarding[E][c], a.boarding[N][r]));
            ASSERT_TRUE(close(a.flux[E][c], a.flux[N][r]));
        }
}

TEST(Aggregate, FluxReductionTakesLineMaxima)
{
    const Grid g = build_grid(10.0, 0.5);
    const auto a = aggregate_demand(generate_demand(DemandPattern::Commute, g, 50000.0));
    const auto m = reduce_flux(a);
    const int n = g.n_cells;
    double ew_max = 0, ns_max = 0;
    for (int y = 0; y < n; ++y) {
        double row = 0;
        for (int x = 0; x < n; ++x)
            row = std::max({row, a.flux[E][a.cell(x, y)], a.flux[W][a.cell(x, y)]});
        EXPECT_DOUBLE_EQ(m.ew_row[y], row);
        ew_max = std::max(ew_max, row);
    }
    for (int x = 0; x < n; ++x) {
        double col = 0;
        for (int y = 0; y < n; ++y)
            col = std::max({col, a.flux[N][a.cell(x, y)], a.flux[S][a.cell(x, y)]});
        EXPECT_DOUBLE_EQ(m.ns_col[x], col);
        ns_max = std::max(ns_max, col);
    }
    EXPECT_DOUBLE_EQ(m.ew_max, ew_max);
    EXPECT_DOUBLE_EQ(m.ns_max, ns_max);
}

TEST(Aggregate, Deterministic)
{
    const Grid g = build_grid(10.0, 0.5);
    const ODMatrix od = generate_demand(DemandPattern::Chessboard3, g, 10000.0);
    const auto a = aggregate_demand(od);
    const auto b = aggregate_demand(od);
    for (std::size_t k = 0; k < 4; ++k) {
        EXPECT_EQ(a.flux[k], b.flux[k]);
        EXPECT_EQ(a.transfer[k], b.transfer[k]);
    }
}
