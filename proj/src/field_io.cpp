#include "plap/field_io.hpp"

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

#include <boost/algorithm/string.hpp>

namespace plap {
namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string trimmed_value(const std::string& item, const std::string& key) {
  const std::string t = boost::algorithm::trim_copy(item);
  if (!boost::algorithm::starts_with(t, key + "=")) {
    throw std::runtime_error("field header: expected '" + key + "=' but found '" + t + "'");
  }
  return t.substr(key.size() + 1);
}

int parse_int(const std::string& s, const std::string& what) {
  std::size_t used = 0;
  int v = 0;
  try {
    v = std::stoi(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || s.empty()) throw std::runtime_error("field header: bad " + what + " '" + s + "'");
  return v;
}

double parse_double(const std::string& s, const std::string& what) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || s.empty()) throw std::runtime_error("field header: bad " + what + " '" + s + "'");
  return v;
}

std::uint64_t to_little(std::uint64_t bits) {
  if constexpr (std::endian::native == std::endian::little) {
    return bits;
  } else {
    std::uint64_t out = 0;
    for (int b = 0; b < 8; ++b) out |= ((bits >> (8 * b)) & 0xffu) << (8 * (7 - b));
    return out;
  }
}

}  // namespace

std::string field_header(const Grid& grid) {
  std::string s = "PLAPFIELD v1; n=" + std::to_string(grid.dim()) + "; m=" + std::to_string(grid.m()) + "; sizes=";
  for (int a = 0; a < grid.dim(); ++a) s += (a ? "," : "") + std::to_string(grid.size(a));
  s += "; extents=";
  for (int a = 0; a < grid.dim(); ++a) {
    s += (a ? "," : "") + fmt17(grid.extent(a).lo) + ":" + fmt17(grid.extent(a).hi);
  }
  return s;
}

Grid parse_field_header(const std::string& line) {
  std::vector<std::string> items;
  boost::algorithm::split(items, line, boost::algorithm::is_any_of(";"));
  if (items.size() != 5 || boost::algorithm::trim_copy(items[0]) != "PLAPFIELD v1") {
    throw std::runtime_error("field header: not a PLAPFIELD v1 header");
  }
  const int n = parse_int(trimmed_value(items[1], "n"), "n");
  const int m = parse_int(trimmed_value(items[2], "m"), "m");
  std::vector<std::string> size_items, extent_items;
  boost::algorithm::split(size_items, trimmed_value(items[3], "sizes"), boost::algorithm::is_any_of(","));
  boost::algorithm::split(extent_items, trimmed_value(items[4], "extents"), boost::algorithm::is_any_of(","));
  if (n < 1 || m < 0 || m > n) throw std::runtime_error("field header: need 0 <= m <= n, n >= 1");
  if (static_cast<int>(size_items.size()) != n || static_cast<int>(extent_items.size()) != n) {
    throw std::runtime_error("field header: sizes/extents must list n entries");
  }
  std::vector<int> sizes;
  std::vector<Interval> extents;
  for (int a = 0; a < n; ++a) {
    sizes.push_back(parse_int(size_items[a], "size"));
    const auto colon = extent_items[a].find(':');
    if (colon == std::string::npos) throw std::runtime_error("field header: extent needs lo:hi");
    extents.push_back({parse_double(extent_items[a].substr(0, colon), "extent"),
                       parse_double(extent_items[a].substr(colon + 1), "extent")});
  }
  try {
    return Grid(m, n - m, std::move(sizes), std::move(extents));
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(std::string("field header: ") + e.what());
  }
}

void write_field(std::ostream& out, const ScalarField& field) {
  out << field_header(field.grid()) << '\n';
  std::vector<char> bytes(field.size() * 8);
  for (std::size_t i = 0; i < field.size(); ++i) {
    const std::uint64_t le = to_little(std::bit_cast<std::uint64_t>(field[i]));
    std::memcpy(bytes.data() + 8 * i, &le, 8);
  }
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("field dump: write failed");
}

ScalarField read_field(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("field dump: missing header");
  const Grid grid = parse_field_header(line);
  std::vector<char> bytes(grid.num_points() * 8);
  in.read(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (in.gcount() != static_cast<std::streamsize>(bytes.size())) {
    throw std::runtime_error("field dump: truncated payload (expected " + std::to_string(grid.num_points()) +
                             " values)");
  }
  if (in.peek() != std::char_traits<char>::eof()) throw std::runtime_error("field dump: trailing bytes");
  std::vector<double> values(grid.num_points());
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::uint64_t le = 0;
    std::memcpy(&le, bytes.data() + 8 * i, 8);
    values[i] = std::bit_cast<double>(to_little(le));
  }
  return ScalarField(grid, std::move(values));
}

void write_field(const std::filesystem::path& path, const ScalarField& field) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_field(out, field);
}

ScalarField read_field(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_field(in);
}

void write_field_csv(std::ostream& out, const ScalarField& field) {
  const Grid& g = field.grid();
  for (int a = 0; a < g.dim(); ++a) {
    out << (a < g.m() ? "x" + std::to_string(a + 1) : "y" + std::to_string(a - g.m() + 1)) << ',';
  }
  out << "value\n";
  std::vector<double> X(static_cast<std::size_t>(g.dim()));
  for (std::size_t i = 0; i < g.num_points(); ++i) {
    g.coords(i, X);
    for (double c : X) out << fmt17(c) << ',';
    out << fmt17(field[i]) << '\n';
  }
}

void write_field_csv(const std::filesystem::path& path, const ScalarField& field) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_field_csv(out, field);
}

}  // namespace plap
