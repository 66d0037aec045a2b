#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace ritzlab {

struct Triplet {
    int row;
    int col;
    double value;
};

/// Compressed sparse row matrix, assembled once, immutable afterwards.
class SparseSpdMatrix {
public:
    static SparseSpdMatrix from_triplets(int n, std::vector<Triplet> triplets) {
        std::stable_sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
            return a.row < b.row || (a.row == b.row && a.col < b.col);
        });
        SparseSpdMatrix m;
        m.n_ = n;
        m.row_ptr_.assign(n + 1, 0);
        for (std::size_t i = 0; i < triplets.size();) {
            std::size_t j = i;
            double s = 0.0;
            while (j < triplets.size() && triplets[j].row == triplets[i].row &&
                   triplets[j].col == triplets[i].col)
                s += triplets[j++].value;
            m.col_.push_back(triplets[i].col);
            m.val_.push_back(s);
            m.row_ptr_[triplets[i].row + 1]++;
            i = j;
        }
        for (int r = 0; r < n; ++r) m.row_ptr_[r + 1] += m.row_ptr_[r];
        return m;
    }

    int dimension() const { return n_; }
    const std::vector<int>& row_ptr() const { return row_ptr_; }
    const std::vector<int>& col_indices() const { return col_; }
    const std::vector<double>& values() const { return val_; }

    void multiply(const std::vector<double>& x, std::vector<double>& y) const {
        y.assign(n_, 0.0);
        for (int r = 0; r < n_; ++r) {
            double s = 0.0;
            for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) s += val_[k] * x[col_[k]];
            y[r] = s;
        }
    }

    double entry(int r, int c) const {
        for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k)
            if (col_[k] == c) return val_[k];
        return 0.0;
    }

    std::vector<double> diagonal() const {
        std::vector<double> d(n_, 0.0);
        for (int r = 0; r < n_; ++r) d[r] = entry(r, r);
        return d;
    }

    double max_asymmetry() const {
        double worst = 0.0;
        for (int r = 0; r < n_; ++r)
            for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k)
                worst = std::max(worst, std::abs(val_[k] - entry(col_[k], r)));
        return worst;
    }

private:
    int n_ = 0;
    std::vector<int> row_ptr_;
    std::vector<int> col_;
    std::vector<double> val_;
};

class SolverError : public std::runtime_error {
public:
    SolverError(const std::string& what, double residual)
        : std::runtime_error(what), residual_(residual) {}
    double residual() const { return residual_; }

private:
    double residual_;
};

struct CgResult {
    std::vector<double> x;
    int iterations = 0;
    double rel_residual = 0.0;
};

/// Conjugate gradients with diagonal (Jacobi) preconditioning.
/// Stops at ||Ax-b|| <= rel_tol ||b||; throws SolverError past 10n iterations.
inline CgResult solve_spd(const SparseSpdMatrix& A, const std::vector<double>& b,
                          double rel_tol = 1e-10) {
    const int n = A.dimension();
    if (static_cast<int>(b.size()) != n) throw std::invalid_argument("solve_spd: size mismatch");
    if (rel_tol <= 0.0) throw std::invalid_argument("solve_spd: rel_tol must be positive");
    CgResult res;
    res.x.assign(n, 0.0);
    const double bnorm = std::sqrt(std::inner_product(b.begin(), b.end(), b.begin(), 0.0));
    if (bnorm == 0.0) return res;

    std::vector<double> diag = A.diagonal();
    for (double& d : diag) {
        if (d <= 0.0) throw SolverError("solve_spd: non-positive diagonal entry", 1.0);
        d = 1.0 / d;
    }
    std::vector<double> r = b, z(n), p(n), Ap(n);
    for (int i = 0; i < n; ++i) z[i] = diag[i] * r[i];
    p = z;
    double rz = std::inner_product(r.begin(), r.end(), z.begin(), 0.0);
    const long max_iter = 10L * n;
    for (long it = 1; it <= max_iter; ++it) {
        A.multiply(p, Ap);
        const double pAp = std::inner_product(p.begin(), p.end(), Ap.begin(), 0.0);
        if (pAp <= 0.0) throw SolverError("solve_spd: matrix not positive definite", 1.0);
        const double alpha = rz / pAp;
        for (int i = 0; i < n; ++i) {
            res.x[i] += alpha * p[i];
            r[i] -= alpha * Ap[i];
        }
        const double rnorm = std::sqrt(std::inner_product(r.begin(), r.end(), r.begin(), 0.0));
        res.iterations = static_cast<int>(it);
        res.rel_residual = rnorm / bnorm;
        if (rnorm <= rel_tol * bnorm) return res;
        for (int i = 0; i < n; ++i) z[i] = diag[i] * r[i];
        const double rz_new = std::inner_product(r.begin(), r.end(), z.begin(), 0.0);
        const double beta = rz_new / rz;
        rz = rz_new;
        for (int i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    }
    throw SolverError("solve_spd: iteration cap exceeded, relative residual " +
                          std::to_string(res.rel_residual),
                      res.rel_residual);
}

/// Dense Cholesky solve for small systems; cross-check path for the CG route.
inline std::vector<double> solve_dense_spd(const SparseSpdMatrix& A, const std::vector<double>& b,
                                           int max_dimension = 2000) {
    const int n = A.dimension();
    if (n > max_dimension) throw std::invalid_argument("solve_dense_spd: system too large");
    std::vector<double> L(static_cast<std::size_t>(n) * n, 0.0);
    for (int r = 0; r < n; ++r)
        for (int k = A.row_ptr()[r]; k < A.row_ptr()[r + 1]; ++k)
            L[static_cast<std::size_t>(r) * n + A.col_indices()[k]] = A.values()[k];
    for (int j = 0; j < n; ++j) {
        double d = L[static_cast<std::size_t>(j) * n + j];
        for (int k = 0; k < j; ++k) d -= L[static_cast<std::size_t>(j) * n + k] * L[static_cast<std::size_t>(j) * n + k];
        if (d <= 0.0) throw SolverError("solve_dense_spd: not positive definite", 1.0);
        const double lj = std::sqrt(d);
        L[static_cast<std::size_t>(j) * n + j] = lj;
        for (int i = j + 1; i < n; ++i) {
            double s = L[static_cast<std::size_t>(i) * n + j];
            for (int k = 0; k < j; ++k)
                s -= L[static_cast<std::size_t>(i) * n + k] * L[static_cast<std::size_t>(j) * n + k];
            L[static_cast<std::size_t>(i) * n + j] = s / lj;
        }
    }
    std::vector<double> y(n), x(n);
    for (int i = 0; i < n; ++i) {
        double s = b[i];
        for (int k = 0; k < i; ++k) s -= L[static_cast<std::size_t>(i) * n + k] * y[k];
        y[i] = s / L[static_cast<std::size_t>(i) * n + i];
    }
    for (int i = n - 1; i >= 0; --i) {
        double s = y[i];
        for (int k = i + 1; k < n; ++k) s -= L[static_cast<std::size_t>(k) * n + i] * x[k];
        x[i] = s / L[static_cast<std::size_t>(i) * n + i];
    }
    return x;
}

}  // namespace ritzlab
