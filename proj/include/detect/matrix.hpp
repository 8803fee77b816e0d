#pragma once

#include <cstddef>
#include <vector>

namespace detect {

// Dense square matrix, row-major. Rate matrices are tiny (n = category
// count), so no linear-algebra package is needed here.
class Matrix {
  public:
    Matrix() = default;
    explicit Matrix(std::size_t n) : n_(n), a_(n * n, 0.0) {}

    std::size_t size() const { return n_; }

    double& operator()(std::size_t i, std::size_t j) { return a_[i * n_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a_[i * n_ + j]; }

    bool operator==(const Matrix& other) const = default;

    std::vector<double> apply(const std::vector<double>& x) const {
        std::vector<double> y(n_, 0.0);
        for (std::size_t i = 0; i < n_; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < n_; ++j) acc += a_[i * n_ + j] * x[j];
            y[i] = acc;
        }
        return y;
    }

  private:
    std::size_t n_ = 0;
    std::vector<double> a_;
};

double max_antisymmetry_defect(const Matrix& m);
double max_column_sum(const Matrix& m);

}  // namespace detect
