#include "ulpsim/linalg.hpp"

#include <algorithm>
#include <cmath>

#include "ulpsim/errors.hpp"

namespace ulpsim {

namespace {

constexpr double kPivotFloor = 1e-18;

struct Lu {
    Matrix lu;
    std::vector<int> perm;
};

Lu factor(const Matrix& a, const std::vector<std::string>* row_names) {
    const int n = a.dim();
    Lu f{a, std::vector<int>(n)};
    for (int i = 0; i < n; ++i) f.perm[i] = i;

    for (int k = 0; k < n; ++k) {
        int pivot = k;
        double best = std::abs(f.lu.at(k, k));
        for (int i = k + 1; i < n; ++i) {
            const double v = std::abs(f.lu.at(i, k));
            if (v > best) {
                best = v;
                pivot = i;
            }
        }
        if (best < kPivotFloor) {
            const int row = f.perm[pivot];
            std::string name = row_names && row < static_cast<int>(row_names->size())
                                   ? (*row_names)[row]
                                   : "row " + std::to_string(row);
            throw SingularMatrixError("singular matrix: no usable pivot for " + name);
        }
        if (pivot != k) {
            for (int j = 0; j < n; ++j) std::swap(f.lu.at(k, j), f.lu.at(pivot, j));
            std::swap(f.perm[k], f.perm[pivot]);
        }
        for (int i = k + 1; i < n; ++i) {
            const double m = f.lu.at(i, k) / f.lu.at(k, k);
            f.lu.at(i, k) = m;
            for (int j = k + 1; j < n; ++j) f.lu.at(i, j) -= m * f.lu.at(k, j);
        }
    }
    return f;
}

std::vector<double> back_substitute(const Lu& f, const std::vector<double>& b) {
    const int n = f.lu.dim();
    std::vector<double> x(n);
    for (int i = 0; i < n; ++i) {
        double s = b[f.perm[i]];
        for (int j = 0; j < i; ++j) s -= f.lu.at(i, j) * x[j];
        x[i] = s;
    }
    for (int i = n - 1; i >= 0; --i) {
        double s = x[i];
        for (int j = i + 1; j < n; ++j) s -= f.lu.at(i, j) * x[j];
        x[i] = s / f.lu.at(i, i);
    }
    return x;
}

double residual_inf(const Matrix& a, const std::vector<double>& x,
                    const std::vector<double>& b) {
    const int n = a.dim();
    double worst = 0;
    for (int i = 0; i < n; ++i) {
        double r = -b[i];
        for (int j = 0; j < n; ++j) r += a.at(i, j) * x[j];
        worst = std::max(worst, std::abs(r));
    }
    return worst;
}

} // namespace

std::vector<double> solve_linear(const Matrix& a, const std::vector<double>& b,
                                 const std::vector<std::string>* row_names) {
    const int n = a.dim();
    if (static_cast<int>(b.size()) != n) throw DomainError("solve_linear: size mismatch");
    if (n == 0) return {};

    const Lu f = factor(a, row_names);
    std::vector<double> x = back_substitute(f, b);

    double bnorm = 0;
    for (double v : b) bnorm = std::max(bnorm, std::abs(v));
    const double bound = 1e-10 * (1.0 + bnorm);
    if (residual_inf(a, x, b) > bound) {
        // one refinement pass
        std::vector<double> r(n);
        for (int i = 0; i < n; ++i) {
            double s = -b[i];
            for (int j = 0; j < n; ++j) s += a.at(i, j) * x[j];
            r[i] = s;
        }
        const std::vector<double> dx = back_substitute(f, r);
        for (int i = 0; i < n; ++i) x[i] -= dx[i];
    }
    return x;
}

} // namespace ulpsim
