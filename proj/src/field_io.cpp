#include "hef/field_io.hpp"

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

static_assert(std::endian::native == std::endian::little,
              "field serialization assumes a little-endian host");

namespace hef {

namespace {

constexpr char kMagic[8] = {'H', 'E', 'F', 'F', 'L', 'D', '1', '\n'};

std::string temp_path(const std::string& path) { return path + ".tmp"; }

void rename_into_place(const std::string& tmp, const std::string& path) {
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    throw std::runtime_error("field_io: cannot rename \"" + tmp + "\" to \"" + path + "\"");
  }
}

template <class T>
void put(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T take(std::ifstream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  return v;
}

}  // namespace

void write_field(const std::string& path, const TwistedField& f) {
  const TorusGeometry& g = *f.geom;
  const std::string tmp = temp_path(path);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("field_io: cannot open \"" + tmp + "\" for writing");
    out.write(kMagic, sizeof(kMagic));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(g.n()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(g.grid()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(f.rows()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(f.cols()));
    for (int k = 0; k < g.n(); ++k) put<double>(out, g.period(k));
    for (int d : f.row_deg) put<std::int32_t>(out, static_cast<std::int32_t>(d));
    for (int d : f.col_deg) put<std::int32_t>(out, static_cast<std::int32_t>(d));
    for (long p = 0; p < g.points(); ++p)
      for (int i = 0; i < f.rows(); ++i)
        for (int j = 0; j < f.cols(); ++j) {
          put<double>(out, f[p](i, j).real());
          put<double>(out, f[p](i, j).imag());
        }
    if (!out) throw std::runtime_error("field_io: write failed for \"" + tmp + "\"");
  }
  rename_into_place(tmp, path);
}

TwistedField read_field(const std::string& path, const TorusGeometry& g) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("field_io: cannot open \"" + path + "\"");
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("field_io: \"" + path + "\" is not a field file");
  const auto n = take<std::uint32_t>(in);
  const auto grid = take<std::uint32_t>(in);
  const auto rows = take<std::uint32_t>(in);
  const auto cols = take<std::uint32_t>(in);
  if (n != static_cast<std::uint32_t>(g.n()) || grid != static_cast<std::uint32_t>(g.grid()))
    throw std::runtime_error("field_io: \"" + path + "\" was written for a different geometry");
  for (std::uint32_t k = 0; k < n; ++k)
    if (take<double>(in) != g.period(static_cast<int>(k)))
      throw std::runtime_error("field_io: \"" + path + "\" was written for different periods");
  std::vector<int> row_deg(rows), col_deg(cols);
  for (auto& d : row_deg) d = static_cast<int>(take<std::int32_t>(in));
  for (auto& d : col_deg) d = static_cast<int>(take<std::int32_t>(in));
  TwistedField f(g, row_deg, col_deg);
  for (long p = 0; p < g.points(); ++p)
    for (std::uint32_t i = 0; i < rows; ++i)
      for (std::uint32_t j = 0; j < cols; ++j) {
        const double re = take<double>(in);
        const double im = take<double>(in);
        f[p](static_cast<int>(i), static_cast<int>(j)) = cplx(re, im);
      }
  if (!in) throw std::runtime_error("field_io: \"" + path + "\" is truncated");
  return f;
}

void atomic_write_text(const std::string& path, const std::string& text) {
  const std::string tmp = temp_path(path);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("field_io: cannot open \"" + tmp + "\" for writing");
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw std::runtime_error("field_io: write failed for \"" + tmp + "\"");
  }
  rename_into_place(tmp, path);
}

void write_flow_csv(const std::string& path, const FlowSeries& s) {
  std::string text = "t,dt,residual,sup_h,trace_integral,det_drift,dissipation\n";
  char buf[256];
  for (size_t i = 0; i < s.t.size(); ++i) {
    std::snprintf(buf, sizeof(buf),
                  "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", s.t[i], s.dt[i], s.residual[i],
                  s.sup_h[i], s.trace_integral[i], s.det_drift[i], s.dissipation[i]);
    text += buf;
  }
  atomic_write_text(path, text);
}

}  // namespace hef
