#pragma once

#include <string>
#include <vector>

namespace ulpsim {

/// Dense square matrix, row-major. Desk-scale circuits stay under ~64 rows,
/// so no sparse machinery.
class Matrix {
public:
    Matrix() = default;
    explicit Matrix(int n) : n_(n), a_(static_cast<size_t>(n) * n, 0.0) {}

    int dim() const { return n_; }
    double& at(int i, int j) { return a_[static_cast<size_t>(i) * n_ + j]; }
    double at(int i, int j) const { return a_[static_cast<size_t>(i) * n_ + j]; }
    void zero() { std::fill(a_.begin(), a_.end(), 0.0); }

private:
    int n_ = 0;
    std::vector<double> a_;
};

/// Solve A x = b by LU with partial pivoting. A pivot magnitude below 1e-18
/// raises SingularMatrixError naming the offending row (row_names, when
/// given, maps row index -> unknown name). The returned solution satisfies
/// |Ax - b|_inf <= 1e-10 * (1 + |b|_inf); one iterative refinement pass is
/// applied when the first factorization misses that bound.
std::vector<double> solve_linear(const Matrix& a, const std::vector<double>& b,
                                 const std::vector<std::string>* row_names = nullptr);

} // namespace ulpsim
