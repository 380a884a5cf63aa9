#pragma once

#include <string>

#include "hef/donaldson_flow.hpp"
#include "hef/twisted_field.hpp"

namespace hef {

// Binary field layout: magic "HEFFLD1\n", then u32 {n, grid, rows, cols},
// f64 periods[n], i32 row_deg[rows], i32 col_deg[cols], then one little-endian
// f64 (re, im) pair per matrix entry, point-major with row-major matrices
// (grid axes row-major, last axis fastest).  Writes go to a temp file in the
// same directory followed by an atomic rename.
void write_field(const std::string& path, const TwistedField& f);

// Reads a field written by write_field; throws std::runtime_error when the
// stored geometry does not match `g`.
TwistedField read_field(const std::string& path, const TorusGeometry& g);

// Atomic small-file text write (temp + rename), for CSV/JSON reports.
void atomic_write_text(const std::string& path, const std::string& text);

// Diagnostics CSV: header row, then one row per accepted step with
// t, dt, residual, sup_h, trace_integral, det_drift, dissipation printed at
// full precision (%.17g), so identical runs produce identical bytes.
void write_flow_csv(const std::string& path, const FlowSeries& s);

}  // namespace hef
