#include "swe/grid.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace swe {

namespace {
bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }
}

Grid::Grid(double L_, int n_) : L(L_), n(n_) {
    if (!(L > 0.0))
        throw std::invalid_argument("Grid: box length L must be positive");
    if (n < 4 || n % 2 != 0 || !is_pow2(n))
        throw std::invalid_argument("Grid: N must be a power of two with N >= 4, got " +
                                    std::to_string(n));
}

double Grid::min_image(double d) const {
    d = std::remainder(d, L);
    return d;
}

Field::Field(const Grid& g, std::vector<double> values) : grid(g), v(std::move(values)) {
    if (v.size() != g.size())
        throw std::invalid_argument("Field: value array size does not match grid");
}

bool Field::all_finite() const {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

double Field::sup_abs() const {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::fabs(x));
    return m;
}

}  // namespace swe
