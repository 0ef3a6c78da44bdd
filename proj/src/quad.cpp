#include "hf/quad.hpp"

#include <algorithm>

namespace hf {

double interp_midpoint_cubic(std::span<const double> row, double x) {
    const int g = static_cast<int>(row.size());
    if (g >= 4) {
        int j = static_cast<int>(std::floor(x * g - 0.5)) - 1;
        j = std::clamp(j, 0, g - 4);
        const double x0 = (j + 0.5) / g;
        const double x1 = (j + 1.5) / g;
        const double x2 = (j + 2.5) / g;
        const double x3 = (j + 3.5) / g;
        const double l0 = (x - x1) * (x - x2) * (x - x3) /
                          ((x0 - x1) * (x0 - x2) * (x0 - x3));
        const double l1 = (x - x0) * (x - x2) * (x - x3) /
                          ((x1 - x0) * (x1 - x2) * (x1 - x3));
        const double l2 = (x - x0) * (x - x1) * (x - x3) /
                          ((x2 - x0) * (x2 - x1) * (x2 - x3));
        const double l3 = (x - x0) * (x - x1) * (x - x2) /
                          ((x3 - x0) * (x3 - x1) * (x3 - x2));
        return l0 * row[j] + l1 * row[j + 1] + l2 * row[j + 2] + l3 * row[j + 3];
    }
    if (g == 1) return row[0];
    // too few nodes for a cubic: fall back to linear on the nearest pair
    int j = static_cast<int>(std::floor(x * g - 0.5));
    j = std::clamp(j, 0, g - 2);
    const double xj = (j + 0.5) / g;
    const double s = (x - xj) * g;
    return row[j] * (1.0 - s) + row[j + 1] * s;
}

}  // namespace hf
