#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "hef/rational.hpp"
#include "hef/types.hpp"

namespace hef {

// Scalar abstraction shared by the float and exact-rational coefficient rings
// of truncated power series.
template <class S>
struct ScalarOps;

template <>
struct ScalarOps<cplx> {
  static constexpr bool exact = false;
  static cplx zero() { return {0.0, 0.0}; }
  static cplx one() { return {1.0, 0.0}; }
  static cplx from_long(long v) { return {static_cast<double>(v), 0.0}; }
  static cplx conj(const cplx& v) { return std::conj(v); }
  static cplx div_long(const cplx& v, long k) { return v / static_cast<double>(k); }
  static cplx invert(const cplx& v) { return cplx(1.0, 0.0) / v; }
  static bool is_zero(const cplx& v) { return v.real() == 0.0 && v.imag() == 0.0; }
  static double approx_abs(const cplx& v) { return std::abs(v); }
  static bool is_real_in_unit(const cplx& v) {
    return v.imag() == 0.0 && v.real() > 0.0 && v.real() <= 1.0;
  }
};

template <>
struct ScalarOps<RatComplex> {
  static constexpr bool exact = true;
  static RatComplex zero() { return {}; }
  static RatComplex one() { return {1}; }
  static RatComplex from_long(long v) { return {v}; }
  static RatComplex conj(const RatComplex& v) { return v.conjugated(); }
  static RatComplex div_long(const RatComplex& v, long k) {
    mpq_class d(k);
    return {v.re / d, v.im / d};
  }
  static RatComplex invert(const RatComplex& v) { return RatComplex{1} / v; }
  static bool is_zero(const RatComplex& v) { return v.is_zero(); }
  static double approx_abs(const RatComplex& v) {
    return std::abs(v.re.get_d()) + std::abs(v.im.get_d());
  }
  static bool is_real_in_unit(const RatComplex& v) {
    return v.im == 0 && v.re > 0 && v.re <= 1;
  }
};

// Enumeration of the monomials z_0^{e0} zbar_0^{e1} ... z_{n-1}^{e_{2n-2}}
// zbar_{n-1}^{e_{2n-1}} of total degree <= max_degree.  Variable j owns the
// symbol pair (2j, 2j+1).  Index 0 is the constant monomial.
class MonoTable {
 public:
  MonoTable(int vars, int max_degree) : vars_(vars), max_degree_(max_degree) {
    if (vars < 1 || vars > 4) throw std::invalid_argument("MonoTable: vars must be 1..4");
    if (max_degree < 0 || max_degree > 60)
      throw std::invalid_argument("MonoTable: degree must be 0..60");
    std::vector<int> e(static_cast<size_t>(2 * vars), 0);
    enumerate(e, 0, max_degree);
    if (expo_.size() > 2'000'000)
      throw std::invalid_argument("MonoTable: monomial count too large");
    for (size_t i = 0; i < expo_.size(); ++i) lookup_[pack(expo_[i])] = static_cast<int>(i);
  }

  int vars() const { return vars_; }
  int symbols() const { return 2 * vars_; }
  int max_degree() const { return max_degree_; }
  int count() const { return static_cast<int>(expo_.size()); }
  const std::vector<int>& expo(int idx) const { return expo_[static_cast<size_t>(idx)]; }
  int total_degree(int idx) const {
    const auto& e = expo_[static_cast<size_t>(idx)];
    int t = 0;
    for (int v : e) t += v;
    return t;
  }
  // Index of an exponent vector, or -1 if its total degree exceeds the table.
  int index_of(const std::vector<int>& e) const {
    auto it = lookup_.find(pack(e));
    return it == lookup_.end() ? -1 : it->second;
  }

 private:
  void enumerate(std::vector<int>& e, size_t pos, int budget) {
    if (pos == e.size()) {
      expo_.push_back(e);
      return;
    }
    for (int v = 0; v <= budget; ++v) {
      e[pos] = v;
      enumerate(e, pos + 1, budget - v);
    }
    e[pos] = 0;
  }
  static uint64_t pack(const std::vector<int>& e) {
    uint64_t key = 0;
    for (int v : e) key = (key << 8) | static_cast<uint64_t>(v & 0xff);
    return key;
  }

  int vars_, max_degree_;
  std::vector<std::vector<int>> expo_;
  std::unordered_map<uint64_t, int> lookup_;
};

inline std::shared_ptr<const MonoTable> mono_table(int vars, int max_degree) {
  static std::map<std::pair<int, int>, std::shared_ptr<const MonoTable>> cache;
  static std::mutex mtx;
  std::lock_guard<std::mutex> lock(mtx);
  auto& slot = cache[{vars, max_degree}];
  if (!slot) slot = std::make_shared<MonoTable>(vars, max_degree);
  return slot;
}

// Dense matrix over an arbitrary coefficient ring; only the ring operations
// needed by series arithmetic are provided.
template <class S>
struct CoeffMat {
  int rows = 0, cols = 0;
  std::vector<S> v;

  CoeffMat() = default;
  CoeffMat(int r, int c) : rows(r), cols(c), v(static_cast<size_t>(r) * c, ScalarOps<S>::zero()) {}

  S& operator()(int i, int j) { return v[static_cast<size_t>(i) * cols + j]; }
  const S& operator()(int i, int j) const { return v[static_cast<size_t>(i) * cols + j]; }

  static CoeffMat identity(int n) {
    CoeffMat m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = ScalarOps<S>::one();
    return m;
  }

  bool is_zero() const {
    for (const S& s : v)
      if (!ScalarOps<S>::is_zero(s)) return false;
    return true;
  }

  CoeffMat& operator+=(const CoeffMat& o) {
    for (size_t i = 0; i < v.size(); ++i) v[i] += o.v[i];
    return *this;
  }
  CoeffMat& operator-=(const CoeffMat& o) {
    for (size_t i = 0; i < v.size(); ++i) v[i] -= o.v[i];
    return *this;
  }
  friend CoeffMat operator+(CoeffMat a, const CoeffMat& b) { return a += b; }
  friend CoeffMat operator-(CoeffMat a, const CoeffMat& b) { return a -= b; }
  friend CoeffMat operator-(const CoeffMat& a) {
    CoeffMat m(a.rows, a.cols);
    for (size_t i = 0; i < a.v.size(); ++i) m.v[i] = -a.v[i];
    return m;
  }
  friend CoeffMat operator*(const CoeffMat& a, const CoeffMat& b) {
    CoeffMat m(a.rows, b.cols);
    for (int i = 0; i < a.rows; ++i)
      for (int k = 0; k < a.cols; ++k) {
        const S& aik = a(i, k);
        if (ScalarOps<S>::is_zero(aik)) continue;
        for (int j = 0; j < b.cols; ++j) m(i, j) += aik * b(k, j);
      }
    return m;
  }
  CoeffMat scaled(const S& s) const {
    CoeffMat m(rows, cols);
    for (size_t i = 0; i < v.size(); ++i) m.v[i] = v[i] * s;
    return m;
  }
  CoeffMat adjoint() const {
    CoeffMat m(cols, rows);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) m(j, i) = ScalarOps<S>::conj((*this)(i, j));
    return m;
  }
  double approx_max() const {
    double mx = 0.0;
    for (const S& s : v) mx = std::max(mx, ScalarOps<S>::approx_abs(s));
    return mx;
  }
};

// Gauss-Jordan inverse of a constant matrix over the coefficient ring.
// Throws std::domain_error when the matrix is singular (exactly singular for
// the rational ring; pivot below 1e-12 of the initial magnitude for floats).
template <class S>
CoeffMat<S> invert_constant(CoeffMat<S> m) {
  if (m.rows != m.cols) throw std::invalid_argument("invert_constant: matrix must be square");
  const int n = m.rows;
  CoeffMat<S> inv = CoeffMat<S>::identity(n);
  const double floor =
      ScalarOps<S>::exact ? 0.0 : 1e-12 * std::max(m.approx_max(), 1.0);
  for (int col = 0; col < n; ++col) {
    int pivot = -1;
    double best = floor;
    for (int row = col; row < n; ++row) {
      const double mag = ScalarOps<S>::approx_abs(m(row, col));
      if (!ScalarOps<S>::is_zero(m(row, col)) && mag > best) {
        best = mag;
        pivot = row;
      }
    }
    if (pivot < 0) throw std::domain_error("invert_constant: singular constant term");
    if (pivot != col)
      for (int j = 0; j < n; ++j) {
        std::swap(m(col, j), m(pivot, j));
        std::swap(inv(col, j), inv(pivot, j));
      }
    const S scale = ScalarOps<S>::invert(m(col, col));
    for (int j = 0; j < n; ++j) {
      m(col, j) = m(col, j) * scale;
      inv(col, j) = inv(col, j) * scale;
    }
    for (int row = 0; row < n; ++row) {
      if (row == col || ScalarOps<S>::is_zero(m(row, col))) continue;
      const S f = m(row, col);
      for (int j = 0; j < n; ++j) {
        m(row, j) -= f * m(col, j);
        inv(row, j) -= f * inv(col, j);
      }
    }
  }
  return inv;
}

// Matrix-valued polynomial in (z_0, zbar_0, ..., z_{n-1}, zbar_{n-1}) of
// total degree <= degree().  Every operation returns the exact polynomial
// result with terms above the container degree dropped; correctness
// statements for operations that consume a degree (dbar) therefore hold
// modulo degree() - 1.
template <class S>
class TruncSeries {
 public:
  TruncSeries() = default;
  TruncSeries(int vars, int rows, int cols, int degree)
      : tab_(mono_table(vars, degree)), rows_(rows), cols_(cols) {
    if (rows < 1 || cols < 1) throw std::invalid_argument("TruncSeries: empty shape");
    c_.assign(static_cast<size_t>(tab_->count()), CoeffMat<S>(rows, cols));
  }

  static TruncSeries identity(int vars, int dim, int degree) {
    TruncSeries s(vars, dim, dim, degree);
    s.c_[0] = CoeffMat<S>::identity(dim);
    return s;
  }

  int vars() const { return tab_->vars(); }
  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int degree() const { return tab_->max_degree(); }
  const MonoTable& table() const { return *tab_; }

  CoeffMat<S>& coeff(int idx) { return c_[static_cast<size_t>(idx)]; }
  const CoeffMat<S>& coeff(int idx) const { return c_[static_cast<size_t>(idx)]; }
  CoeffMat<S>& coeff(const std::vector<int>& expo) {
    const int idx = tab_->index_of(expo);
    if (idx < 0) throw std::invalid_argument("TruncSeries: exponent beyond truncation degree");
    return c_[static_cast<size_t>(idx)];
  }
  const CoeffMat<S>& coeff(const std::vector<int>& expo) const {
    return const_cast<TruncSeries*>(this)->coeff(expo);
  }

  TruncSeries truncated(int new_degree) const {
    TruncSeries out(vars(), rows_, cols_, new_degree);
    for (int i = 0; i < out.tab_->count(); ++i) {
      const int src = tab_->index_of(out.tab_->expo(i));
      if (src >= 0) out.c_[static_cast<size_t>(i)] = c_[static_cast<size_t>(src)];
    }
    return out;
  }

  friend TruncSeries operator+(TruncSeries a, const TruncSeries& b) {
    a.check_same_shape(b);
    for (size_t i = 0; i < a.c_.size(); ++i) a.c_[i] += b.c_[i];
    return a;
  }
  friend TruncSeries operator-(TruncSeries a, const TruncSeries& b) {
    a.check_same_shape(b);
    for (size_t i = 0; i < a.c_.size(); ++i) a.c_[i] -= b.c_[i];
    return a;
  }
  friend TruncSeries operator-(const TruncSeries& a) {
    TruncSeries m = a;
    for (auto& cm : m.c_) cm = -cm;
    return m;
  }
  friend TruncSeries operator*(const TruncSeries& a, const TruncSeries& b) {
    if (a.vars() != b.vars() || a.degree() != b.degree())
      throw std::invalid_argument("TruncSeries: mixed tables in product");
    if (a.cols_ != b.rows_) throw std::invalid_argument("TruncSeries: shape mismatch in product");
    TruncSeries out(a.vars(), a.rows_, b.cols_, a.degree());
    const MonoTable& t = a.table();
    const int count = t.count();
    std::vector<int> e(static_cast<size_t>(t.symbols()));
    for (int i = 0; i < count; ++i) {
      if (a.c_[static_cast<size_t>(i)].is_zero()) continue;
      const int di = t.total_degree(i);
      for (int j = 0; j < count; ++j) {
        if (di + t.total_degree(j) > t.max_degree()) continue;
        if (b.c_[static_cast<size_t>(j)].is_zero()) continue;
        for (int s = 0; s < t.symbols(); ++s)
          e[static_cast<size_t>(s)] =
              t.expo(i)[static_cast<size_t>(s)] + t.expo(j)[static_cast<size_t>(s)];
        const int k = t.index_of(e);
        out.c_[static_cast<size_t>(k)] +=
            a.c_[static_cast<size_t>(i)] * b.c_[static_cast<size_t>(j)];
      }
    }
    return out;
  }
  friend TruncSeries operator*(const S& s, const TruncSeries& a) {
    TruncSeries out = a;
    for (auto& cm : out.c_) cm = cm.scaled(s);
    return out;
  }

 private:
  void check_same_shape(const TruncSeries& o) const {
    if (vars() != o.vars() || degree() != o.degree() || rows_ != o.rows_ || cols_ != o.cols_)
      throw std::invalid_argument("TruncSeries: shape/table mismatch");
  }

  std::shared_ptr<const MonoTable> tab_;
  int rows_ = 0, cols_ = 0;
  std::vector<CoeffMat<S>> c_;
};

template <class S>
CoeffMat<S> constant_term(const TruncSeries<S>& s) {
  return s.coeff(0);
}

// Formal d/dzbar_j (variable j, 0-based).  The result's trustworthy range is
// one degree below the container.
template <class S>
TruncSeries<S> dbar(const TruncSeries<S>& s, int j) {
  if (j < 0 || j >= s.vars()) throw std::invalid_argument("dbar: variable index out of range");
  const MonoTable& t = s.table();
  const int sym = 2 * j + 1;
  TruncSeries<S> out(s.vars(), s.rows(), s.cols(), s.degree());
  for (int i = 0; i < t.count(); ++i) {
    const int k = t.expo(i)[static_cast<size_t>(sym)];
    if (k == 0 || s.coeff(i).is_zero()) continue;
    std::vector<int> e = t.expo(i);
    e[static_cast<size_t>(sym)] = k - 1;
    out.coeff(t.index_of(e)) += s.coeff(i).scaled(ScalarOps<S>::from_long(k));
  }
  return out;
}

// Formal d/dz_j (variable j, 0-based); companion of dbar for diagnostics.
template <class S>
TruncSeries<S> dz(const TruncSeries<S>& s, int j) {
  if (j < 0 || j >= s.vars()) throw std::invalid_argument("dz: variable index out of range");
  const MonoTable& t = s.table();
  const int sym = 2 * j;
  TruncSeries<S> out(s.vars(), s.rows(), s.cols(), s.degree());
  for (int i = 0; i < t.count(); ++i) {
    const int k = t.expo(i)[static_cast<size_t>(sym)];
    if (k == 0 || s.coeff(i).is_zero()) continue;
    std::vector<int> e = t.expo(i);
    e[static_cast<size_t>(sym)] = k - 1;
    out.coeff(t.index_of(e)) += s.coeff(i).scaled(ScalarOps<S>::from_long(k));
  }
  return out;
}

// Exact monomial antiderivative in zbar_j: zbar_j^k -> zbar_j^{k+1}/(k+1).
// A right inverse of dbar on inputs of degree <= degree() - 1; contributions
// that would exceed the container degree are dropped.
template <class S>
TruncSeries<S> zbar_antiderivative(const TruncSeries<S>& s, int j) {
  if (j < 0 || j >= s.vars())
    throw std::invalid_argument("zbar_antiderivative: variable index out of range");
  const MonoTable& t = s.table();
  const int sym = 2 * j + 1;
  TruncSeries<S> out(s.vars(), s.rows(), s.cols(), s.degree());
  for (int i = 0; i < t.count(); ++i) {
    if (s.coeff(i).is_zero() || t.total_degree(i) >= t.max_degree()) continue;
    std::vector<int> e = t.expo(i);
    const int k = e[static_cast<size_t>(sym)];
    e[static_cast<size_t>(sym)] = k + 1;
    out.coeff(t.index_of(e)) += s.coeff(i).scaled(
        ScalarOps<S>::invert(ScalarOps<S>::from_long(k + 1)));
  }
  return out;
}

// Sets zbar_0 = ... = zbar_{p-1} = 0: drops every term with positive
// antiholomorphic degree in the first p variables.
template <class S>
TruncSeries<S> restrict_antihol(const TruncSeries<S>& s, int p) {
  if (p < 0 || p > s.vars())
    throw std::invalid_argument("restrict_antihol: variable count out of range");
  const MonoTable& t = s.table();
  TruncSeries<S> out = s;
  for (int i = 0; i < t.count(); ++i)
    for (int v = 0; v < p; ++v)
      if (t.expo(i)[static_cast<size_t>(2 * v + 1)] > 0) {
        out.coeff(i) = CoeffMat<S>(s.rows(), s.cols());
        break;
      }
  return out;
}

// Substitution z_j -> r z_j, zbar_j -> r zbar_j for a real scale 0 < r <= 1.
template <class S>
TruncSeries<S> dilate(const TruncSeries<S>& s, const S& r, int j) {
  if (j < 0 || j >= s.vars()) throw std::invalid_argument("dilate: variable index out of range");
  if (!ScalarOps<S>::is_real_in_unit(r))
    throw std::invalid_argument("dilate: scale must be real in (0, 1]");
  const MonoTable& t = s.table();
  TruncSeries<S> out = s;
  for (int i = 0; i < t.count(); ++i) {
    const int k = t.expo(i)[static_cast<size_t>(2 * j)] +
                  t.expo(i)[static_cast<size_t>(2 * j + 1)];
    if (k == 0) continue;
    S f = ScalarOps<S>::one();
    for (int m = 0; m < k; ++m) f = f * r;
    out.coeff(i) = out.coeff(i).scaled(f);
  }
  return out;
}

// Conjugate transpose of a matrix-valued series: swaps z_j with zbar_j in
// every monomial and conjugate-transposes the coefficients.
template <class S>
TruncSeries<S> adjoint(const TruncSeries<S>& s) {
  const MonoTable& t = s.table();
  TruncSeries<S> out(s.vars(), s.cols(), s.rows(), s.degree());
  std::vector<int> e(static_cast<size_t>(t.symbols()));
  for (int i = 0; i < t.count(); ++i) {
    if (s.coeff(i).is_zero()) continue;
    for (int v = 0; v < s.vars(); ++v) {
      e[static_cast<size_t>(2 * v)] = t.expo(i)[static_cast<size_t>(2 * v + 1)];
      e[static_cast<size_t>(2 * v + 1)] = t.expo(i)[static_cast<size_t>(2 * v)];
    }
    out.coeff(t.index_of(e)) += s.coeff(i).adjoint();
  }
  return out;
}

// True when no term carries positive zbar_j degree.
template <class S>
bool holomorphic_in(const TruncSeries<S>& s, int j) {
  const MonoTable& t = s.table();
  for (int i = 0; i < t.count(); ++i)
    if (t.expo(i)[static_cast<size_t>(2 * j + 1)] > 0 && !s.coeff(i).is_zero()) return false;
  return true;
}

template <class S>
bool is_zero_up_to(const TruncSeries<S>& s, int d) {
  const MonoTable& t = s.table();
  for (int i = 0; i < t.count(); ++i)
    if (t.total_degree(i) <= d && !s.coeff(i).is_zero()) return false;
  return true;
}

// Largest coefficient magnitude among terms of total degree <= d (an exact
// zero test should use is_zero_up_to in the rational ring).
template <class S>
double max_abs_up_to(const TruncSeries<S>& s, int d) {
  const MonoTable& t = s.table();
  double mx = 0.0;
  for (int i = 0; i < t.count(); ++i)
    if (t.total_degree(i) <= d) mx = std::max(mx, s.coeff(i).approx_max());
  return mx;
}

// Inverse of a square series whose constant term is invertible, via the
// Neumann sum over the strictly-positive-degree remainder (nilpotent modulo
// truncation, so the sum terminates exactly).
template <class S>
TruncSeries<S> series_inverse(const TruncSeries<S>& b) {
  if (b.rows() != b.cols()) throw std::invalid_argument("series_inverse: series must be square");
  const int d = b.degree();
  const CoeffMat<S> c0inv = invert_constant(constant_term(b));
  TruncSeries<S> c0inv_s(b.vars(), b.rows(), b.cols(), d);
  c0inv_s.coeff(0) = c0inv;
  const TruncSeries<S> ident = TruncSeries<S>::identity(b.vars(), b.rows(), d);
  const TruncSeries<S> n = c0inv_s * b - ident;
  TruncSeries<S> acc = ident, term = ident;
  for (int m = 1; m <= d; ++m) {
    term = -(term * n);
    acc = acc + term;
  }
  return acc * c0inv_s;
}

}  // namespace hef
