#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "plap/grid.hpp"

namespace plap {

// Field dump: one ASCII header line
//
//   PLAPFIELD v1; n=<n>; m=<m>; sizes=<s1,...,sn>; extents=<lo1:hi1,...,lon:hin>
//
// terminated by '\n', then num_points IEEE-754 binary64 values, little-endian,
// in the grid's row-major order (last axis fastest). Extents are written with
// 17 significant digits so the grid round-trips exactly.

std::string field_header(const Grid& grid);
/// Throws std::runtime_error on a malformed header.
Grid parse_field_header(const std::string& line);

void write_field(std::ostream& out, const ScalarField& field);
ScalarField read_field(std::istream& in);
void write_field(const std::filesystem::path& path, const ScalarField& field);
ScalarField read_field(const std::filesystem::path& path);

/// CSV export: header `x1,..,xm,y1,..,yk,value`, one row per point in storage
/// order, values printed with %.17g. Non-finite values print as `nan`/`inf`.
void write_field_csv(std::ostream& out, const ScalarField& field);
void write_field_csv(const std::filesystem::path& path, const ScalarField& field);

}  // namespace plap
