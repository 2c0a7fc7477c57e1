#include <transitgp/grid.hpp>

#include <cmath>
#include <stdexcept>
#include <string>

namespace transitgp {

Grid build_grid(double side_length, double cell_size)
{
    if (!(side_length > 0.0) || !(cell_size > 0.0)) {
        throw std::invalid_argument("build_grid: side length and cell size must be positive");
    }
    const double ratio = side_length / cell_size;
    const double n = std::round(ratio);
    if (n < 1.0 || std::abs(ratio - n) > 1e-9 * std::max(1.0, ratio)) {
        throw std::invalid_argument(
            "build_grid: side length " + std::to_string(side_length) +
            " km is not an integer multiple of cell size " + std::to_string(cell_size) + " km");
    }
    return Grid{side_length, cell_size, static_cast<int>(n)};
}

}  // namespace transitgp
