#pragma once

namespace transitgp {

/// Square study area split into n_cells x n_cells uniform cells. Every
/// spatial quantity is evaluated at cell centers.
struct Grid {
    double side_length = 0.0;  // km
    double cell_size = 0.0;    // km
    int n_cells = 0;           // per axis

    /// Center coordinate of the 0-based cell index along either axis.
    double center(int idx) const { return (idx + 0.5) * cell_size; }
    double cell_area() const { return cell_size * cell_size; }
    int n_total_cells() const { return n_cells * n_cells; }
};

/// Throws std::invalid_argument unless side_length is a positive integer
/// multiple of cell_size.
Grid build_grid(double side_length, double cell_size);

}  // namespace transitgp
