#include "rhsim/smallmat.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>

#include "rhsim/errors.hpp"

namespace rhsim {

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::diagonal(std::span<const double> d) {
  Matrix m(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
  return m;
}

Matrix& Matrix::operator+=(const Matrix& other) {
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += other.data_[k];
  return *this;
}

Matrix& Matrix::operator-=(const Matrix& other) {
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= other.data_[k];
  return *this;
}

Matrix& Matrix::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

double Matrix::norm1() const {
  double best = 0.0;
  for (std::size_t j = 0; j < n_; ++j) {
    double col = 0.0;
    for (std::size_t i = 0; i < n_; ++i) col += std::abs((*this)(i, j));
    best = std::max(best, col);
  }
  return best;
}

bool Matrix::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Matrix operator*(const Matrix& a, const Matrix& b) {
  const std::size_t n = a.size();
  Matrix c(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < n; ++k) {
      const double aik = a(i, k);
      for (std::size_t j = 0; j < n; ++j) c(i, j) += aik * b(k, j);
    }
  }
  return c;
}

Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
Matrix operator*(double s, Matrix a) { return a *= s; }

void multiply(const Matrix& m, std::span<const double> x, std::span<double> y) {
  const std::size_t n = m.size();
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) acc += m(i, j) * x[j];
    y[i] = acc;
  }
}

std::vector<double> multiply(const Matrix& m, std::span<const double> x) {
  std::vector<double> y(m.size());
  multiply(m, x, y);
  return y;
}

DriftMatrix::DriftMatrix(double lambda, double theta, std::span<const double> weights,
                         std::span<const double> nodes, std::span<const double> v0split)
    : A(nodes.size()), b(nodes.size()) {
  const std::size_t n = nodes.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) A(i, j) = -lambda * weights[j];
    A(i, i) -= nodes[i];
    b[i] = theta + nodes[i] * v0split[i];
  }
}

namespace {

// Pade coefficients and the 1-norm bounds below which each degree reaches
// unit roundoff (Higham, 2005).
constexpr std::array<double, 4> kPade3{120.0, 60.0, 12.0, 1.0};
constexpr std::array<double, 6> kPade5{30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0};
constexpr std::array<double, 8> kPade7{17297280.0, 8648640.0, 1995840.0, 277200.0,
                                       25200.0,    1512.0,    56.0,      1.0};
constexpr std::array<double, 10> kPade9{17643225600.0, 8821612800.0, 2075673600.0, 302702400.0,
                                        30270240.0,    2162160.0,    110880.0,     3960.0,
                                        90.0,          1.0};
constexpr std::array<double, 14> kPade13{
    64764752532480000.0, 32382376266240000.0, 7771770303897600.0, 1187353796428800.0,
    129060195264000.0,   10559470521600.0,    670442572800.0,     33522128640.0,
    1323241920.0,        40840800.0,          960960.0,           16380.0,
    182.0,               1.0};
constexpr double kTheta3 = 1.495585217958292e-2;
constexpr double kTheta5 = 2.539398330063230e-1;
constexpr double kTheta7 = 9.504178996162932e-1;
constexpr double kTheta9 = 2.097847961257068e0;
constexpr double kTheta13 = 5.371920351148152e0;

template <std::size_t K>
Matrix pade_low(const Matrix& A, const std::array<double, K>& c) {
  const std::size_t n = A.size();
  const Matrix id = Matrix::identity(n);
  const Matrix A2 = A * A;
  Matrix U = c[1] * id;
  Matrix V = c[0] * id;
  Matrix power = id;
  for (std::size_t k = 2; k < K; k += 2) {
    power = power * A2;
    U += c[k + 1] * power;
    V += c[k] * power;
  }
  U = A * U;
  LuFactorization lu(V - U);
  return lu.solve(V + U);
}

Matrix pade13(const Matrix& A) {
  const auto& c = kPade13;
  const std::size_t n = A.size();
  const Matrix id = Matrix::identity(n);
  const Matrix A2 = A * A;
  const Matrix A4 = A2 * A2;
  const Matrix A6 = A4 * A2;
  Matrix U = A6 * (c[13] * A6 + c[11] * A4 + c[9] * A2);
  U += c[7] * A6 + c[5] * A4 + c[3] * A2 + c[1] * id;
  U = A * U;
  Matrix V = A6 * (c[12] * A6 + c[10] * A4 + c[8] * A2);
  V += c[6] * A6 + c[4] * A4 + c[2] * A2 + c[0] * id;
  LuFactorization lu(V - U);
  return lu.solve(V + U);
}

}  // namespace

Matrix mat_exp(const Matrix& A, double h) {
  if (!(h >= 0.0)) throw DomainError("mat_exp: step must be non-negative");
  Matrix scaled = h * A;
  if (!scaled.all_finite()) throw NumericalError("mat_exp: non-finite matrix entries");
  const std::size_t n = A.size();
  if (n == 0) return scaled;
  const double norm = scaled.norm1();
  if (norm <= kTheta3) return pade_low(scaled, kPade3);
  if (norm <= kTheta5) return pade_low(scaled, kPade5);
  if (norm <= kTheta7) return pade_low(scaled, kPade7);
  if (norm <= kTheta9) return pade_low(scaled, kPade9);
  const int s = std::max(0, static_cast<int>(std::ceil(std::log2(norm / kTheta13))));
  scaled *= std::ldexp(1.0, -s);
  Matrix result = pade13(scaled);
  for (int k = 0; k < s; ++k) result = result * result;
  if (!result.all_finite()) throw NumericalError("mat_exp: overflow while squaring");
  return result;
}

Matrix phi1(const Matrix& A, double h) {
  // exp of [[A h, h Id], [0, 0]] carries h phi1(A h) in its upper-right block.
  if (!(h >= 0.0)) throw DomainError("phi1: step must be non-negative");
  const std::size_t n = A.size();
  Matrix augmented(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) augmented(i, j) = A(i, j) * h;
    augmented(i, n + i) = h;
  }
  const Matrix e = mat_exp(augmented, 1.0);
  Matrix out(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) out(i, j) = e(i, n + j);
  }
  return out;
}

LuFactorization::LuFactorization(const Matrix& m) : lu_(m), perm_(m.size()) {
  const std::size_t n = m.size();
  if (!m.all_finite()) throw NumericalError("LU: non-finite matrix entries");
  double scale = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) scale = std::max(scale, std::abs(m(i, j)));
  }
  const double tiny = std::numeric_limits<double>::epsilon() * static_cast<double>(n) * scale;
  for (std::size_t i = 0; i < n; ++i) perm_[i] = i;
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t pivot = k;
    for (std::size_t i = k + 1; i < n; ++i) {
      if (std::abs(lu_(i, k)) > std::abs(lu_(pivot, k))) pivot = i;
    }
    if (!(std::abs(lu_(pivot, k)) > tiny)) {
      std::ostringstream msg;
      msg << "LU: matrix is singular to working precision (pivot " << k << ")";
      throw NumericalError(msg.str());
    }
    if (pivot != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(lu_(k, j), lu_(pivot, j));
      std::swap(perm_[k], perm_[pivot]);
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      const double factor = lu_(i, k) / lu_(k, k);
      lu_(i, k) = factor;
      for (std::size_t j = k + 1; j < n; ++j) lu_(i, j) -= factor * lu_(k, j);
    }
  }
}

void LuFactorization::solve_in_place(std::span<double> rhs) const {
  const std::size_t n = lu_.size();
  std::array<double, 64> stack{};
  std::vector<double> heap;
  double* y = stack.data();
  if (n > stack.size()) {
    heap.resize(n);
    y = heap.data();
  }
  for (std::size_t i = 0; i < n; ++i) {
    double acc = rhs[perm_[i]];
    for (std::size_t j = 0; j < i; ++j) acc -= lu_(i, j) * y[j];
    y[i] = acc;
  }
  for (std::size_t i = n; i-- > 0;) {
    double acc = y[i];
    for (std::size_t j = i + 1; j < n; ++j) acc -= lu_(i, j) * rhs[j];
    rhs[i] = acc / lu_(i, i);
  }
}

std::vector<double> LuFactorization::solve(std::span<const double> rhs) const {
  std::vector<double> x(rhs.begin(), rhs.end());
  solve_in_place(x);
  return x;
}

Matrix LuFactorization::solve(const Matrix& rhs) const {
  const std::size_t n = rhs.size();
  Matrix out(n);
  std::vector<double> col(n);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < n; ++i) col[i] = rhs(i, j);
    solve_in_place(col);
    for (std::size_t i = 0; i < n; ++i) out(i, j) = col[i];
  }
  return out;
}

std::vector<double> solve(const Matrix& m, std::span<const double> rhs) {
  if (rhs.size() != m.size()) throw DomainError("solve: right-hand side does not conform");
  return LuFactorization(m).solve(rhs);
}

}  // namespace rhsim
