#include "hef/torus_geometry.hpp"

#include <cmath>
#include <stdexcept>

#include "hef/fft.hpp"

namespace hef {

namespace {

// Runs fn over every DFT bin tuple; fn(point, freqs[]) with freqs per axis.
template <class F>
void for_each_bin(const TorusGeometry& g, F&& fn) {
  const int axes = g.axes();
  const int N = g.grid();
  std::vector<int> bin(static_cast<size_t>(axes), 0);
  std::vector<double> xi(static_cast<size_t>(axes), 0.0);
  for (long p = 0; p < g.points(); ++p) {
    long rem = p;
    for (int a = axes - 1; a >= 0; --a) {
      bin[static_cast<size_t>(a)] = static_cast<int>(rem % N);
      rem /= N;
    }
    for (int a = 0; a < axes; ++a) xi[static_cast<size_t>(a)] = g.freq(a, bin[static_cast<size_t>(a)]);
    fn(p, xi);
  }
}

void fft_all_axes(const TorusGeometry& g, std::vector<cplx>& data, bool inverse) {
  const int N = g.grid();
  for (int a = 0; a < g.axes(); ++a) {
    const long inner = g.stride(a);
    const long outer = g.points() / (inner * N);
    fft_axis(data.data(), static_cast<int>(outer), N, static_cast<int>(inner), inverse);
  }
}

}  // namespace

TorusGeometry::TorusGeometry(int n, std::vector<double> periods, int grid)
    : n_(n), periods_(std::move(periods)), grid_(grid) {
  if (n_ != 1 && n_ != 2) throw std::invalid_argument("TorusGeometry: n must be 1 or 2");
  if (static_cast<int>(periods_.size()) != n_)
    throw std::invalid_argument("TorusGeometry: need one period per complex factor");
  for (double L : periods_)
    if (!(L > 0.0)) throw std::invalid_argument("TorusGeometry: periods must be positive");
  if (grid_ < 16) throw std::invalid_argument("TorusGeometry: grid must be >= 16");

  double area = 1.0;
  for (double L : periods_) area *= L * L;
  vol_scale_ = std::pow(2.0 * kPi / area, 1.0 / n_);

  points_ = 1;
  for (int a = 0; a < axes(); ++a) points_ *= grid_;
  strides_.assign(static_cast<size_t>(axes()), 1);
  for (int a = axes() - 2; a >= 0; --a)
    strides_[static_cast<size_t>(a)] = strides_[static_cast<size_t>(a + 1)] * grid_;

  cell_volume_ = std::pow(vol_scale_, n_);
  for (int a = 0; a < axes(); ++a) cell_volume_ *= spacing(a);
}

double TorusGeometry::freq(int axis, int bin) const {
  int m = bin <= grid_ / 2 ? bin : bin - grid_;
  if (bin == grid_ / 2) m = grid_ / 2;  // one-sided Nyquist; unused by smooth fields
  return 2.0 * kPi * m / axis_period(axis);
}

double TorusGeometry::greens_min() const {
  if (greens_min_ready_) return greens_min_;
  std::vector<cplx> ker(static_cast<size_t>(points_), cplx(0.0, 0.0));
  const double s = vol_scale_;
  const double dv = cell_volume_;
  for_each_bin(*this, [&](long p, const std::vector<double>& xi) {
    double k2 = 0.0;
    for (double x : xi) k2 += x * x;
    if (k2 == 0.0) return;
    const double lam = -k2 / (2.0 * s);
    ker[static_cast<size_t>(p)] = cplx(-1.0 / (lam * dv), 0.0);
  });
  fft_all_axes(*this, ker, /*inverse=*/true);
  double mn = ker[0].real();
  for (const cplx& v : ker) mn = std::min(mn, v.real());
  greens_min_ = mn;
  greens_min_ready_ = true;
  return greens_min_;
}

int form_components(FormType t, int n) {
  switch (t) {
    case FormType::F00: return 1;
    case FormType::F10: return n;
    case FormType::F01: return n;
    case FormType::F11: return n * n;
  }
  return 0;
}

ScalarField::ScalarField(const TorusGeometry& g, FormType t) : geom(&g), type(t) {
  comp.assign(static_cast<size_t>(form_components(t, g.n())),
              std::vector<cplx>(static_cast<size_t>(g.points()), cplx(0.0, 0.0)));
}

ScalarField lambda_contract(const ScalarField& f) {
  if (f.type != FormType::F11)
    throw std::invalid_argument("lambda_contract: expects a (1,1) field");
  const TorusGeometry& g = *f.geom;
  ScalarField out(g, FormType::F00);
  const cplx factor = -2.0 * kI / g.vol_scale();
  for (int j = 0; j < g.n(); ++j) {
    const std::vector<cplx>& c = f[j * g.n() + j];
    for (long p = 0; p < g.points(); ++p) out[0][static_cast<size_t>(p)] += factor * c[static_cast<size_t>(p)];
  }
  return out;
}

cplx integrate(const ScalarField& f) {
  if (f.type != FormType::F00)
    throw std::invalid_argument("integrate: expects a scalar (0,0) field");
  cplx acc(0.0, 0.0);
  for (const cplx& v : f[0]) acc += v;
  return acc * f.geom->cell_volume();
}

ScalarField axis_derivative(const ScalarField& f, int axis) {
  const TorusGeometry& g = *f.geom;
  ScalarField out(g, f.type);
  const int N = g.grid();
  const long inner = g.stride(axis);
  const long outer = g.points() / (inner * N);
  for (size_t c = 0; c < f.comp.size(); ++c) {
    std::vector<cplx> buf = f.comp[c];
    fft_axis(buf.data(), static_cast<int>(outer), N, static_cast<int>(inner), false);
    for (long p = 0; p < g.points(); ++p) {
      const int bin = g.axis_index(p, axis);
      const double xi = (N % 2 == 0 && bin == N / 2) ? 0.0 : g.freq(axis, bin);
      buf[static_cast<size_t>(p)] *= kI * xi;
    }
    fft_axis(buf.data(), static_cast<int>(outer), N, static_cast<int>(inner), true);
    out.comp[c] = std::move(buf);
  }
  return out;
}

ScalarField d_z(const ScalarField& f, int j) {
  ScalarField dx = axis_derivative(f, 2 * j);
  ScalarField dy = axis_derivative(f, 2 * j + 1);
  ScalarField out(*f.geom, f.type);
  for (size_t c = 0; c < f.comp.size(); ++c)
    for (size_t p = 0; p < f.comp[c].size(); ++p)
      out.comp[c][p] = 0.5 * (dx.comp[c][p] - kI * dy.comp[c][p]);
  return out;
}

ScalarField d_zbar(const ScalarField& f, int j) {
  ScalarField dx = axis_derivative(f, 2 * j);
  ScalarField dy = axis_derivative(f, 2 * j + 1);
  ScalarField out(*f.geom, f.type);
  for (size_t c = 0; c < f.comp.size(); ++c)
    for (size_t p = 0; p < f.comp[c].size(); ++p)
      out.comp[c][p] = 0.5 * (dx.comp[c][p] + kI * dy.comp[c][p]);
  return out;
}

ScalarField laplacian(const ScalarField& f) {
  if (f.type != FormType::F00)
    throw std::invalid_argument("laplacian: expects a scalar (0,0) field");
  const TorusGeometry& g = *f.geom;
  ScalarField out(g, FormType::F00);
  std::vector<cplx> buf = f[0];
  fft_all_axes(g, buf, false);
  const double s = g.vol_scale();
  for_each_bin(g, [&](long p, const std::vector<double>& xi) {
    double k2 = 0.0;
    for (double x : xi) k2 += x * x;
    buf[static_cast<size_t>(p)] *= -k2 / (2.0 * s);
  });
  fft_all_axes(g, buf, true);
  out[0] = std::move(buf);
  return out;
}

GreenSolution green_solve(const ScalarField& f) {
  if (f.type != FormType::F00)
    throw std::invalid_argument("green_solve: expects a scalar (0,0) field");
  const TorusGeometry& g = *f.geom;
  const cplx mean_int = integrate(f);
  if (std::abs(mean_int) >= 1e-9)
    throw std::invalid_argument("green_solve: field must have zero mean (|integral| < 1e-9)");
  GreenSolution sol{ScalarField(g, FormType::F00), g.greens_min()};
  std::vector<cplx> buf = f[0];
  fft_all_axes(g, buf, false);
  const double s = g.vol_scale();
  for_each_bin(g, [&](long p, const std::vector<double>& xi) {
    double k2 = 0.0;
    for (double x : xi) k2 += x * x;
    if (k2 == 0.0) {
      buf[static_cast<size_t>(p)] = cplx(0.0, 0.0);
      return;
    }
    buf[static_cast<size_t>(p)] /= -k2 / (2.0 * s);
  });
  fft_all_axes(g, buf, true);
  sol.u[0] = std::move(buf);
  return sol;
}

}  // namespace hef
