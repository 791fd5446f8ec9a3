#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace rhsim {

// Dense row-major square matrix for the small (N <= ~10) factor systems.
class Matrix {
 public:
  Matrix() = default;
  explicit Matrix(std::size_t n) : n_(n), data_(n * n, 0.0) {}

  static Matrix identity(std::size_t n);
  static Matrix diagonal(std::span<const double> d);

  std::size_t size() const { return n_; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * n_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * n_ + j]; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * n_, n_}; }

  Matrix& operator+=(const Matrix& other);
  Matrix& operator-=(const Matrix& other);
  Matrix& operator*=(double s);

  // Maximum absolute column sum.
  double norm1() const;
  bool all_finite() const;

 private:
  std::size_t n_ = 0;
  std::vector<double> data_;
};

Matrix operator*(const Matrix& a, const Matrix& b);
Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator*(double s, Matrix a);

// y = M x.
void multiply(const Matrix& m, std::span<const double> x, std::span<double> y);
std::vector<double> multiply(const Matrix& m, std::span<const double> x);

// A = -lambda 1 w^T - diag(x) and b = theta 1 + diag(x) v0 of the linear
// drift ODE dZ = (A Z + b) dt.
struct DriftMatrix {
  Matrix A;
  std::vector<double> b;

  DriftMatrix(double lambda, double theta, std::span<const double> weights,
              std::span<const double> nodes, std::span<const double> v0split);
};

// exp(A h) by scaling and squaring with diagonal Pade approximants.
Matrix mat_exp(const Matrix& A, double h);

// h * phi1(A h) with phi1(M) = sum_k M^k / (k+1)!; equals A^-1 (exp(A h) - Id)
// when A is invertible and stays defined when it is not.
Matrix phi1(const Matrix& A, double h);

// LU factorization with partial pivoting, reusable across right-hand sides.
class LuFactorization {
 public:
  // Throws NumericalError when M is singular to working precision.
  explicit LuFactorization(const Matrix& m);

  void solve_in_place(std::span<double> rhs) const;
  std::vector<double> solve(std::span<const double> rhs) const;
  Matrix solve(const Matrix& rhs) const;
  std::size_t size() const { return lu_.size(); }

 private:
  Matrix lu_;
  std::vector<std::size_t> perm_;
};

std::vector<double> solve(const Matrix& m, std::span<const double> rhs);

}  // namespace rhsim
