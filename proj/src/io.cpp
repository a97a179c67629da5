#include "sfdnn/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <unordered_map>

#include "sfdnn/error.hpp"

namespace sfdnn {

std::string format_real(double value) {
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%.17g", value);
  return buffer;
}

double parse_real(const std::string& text, const std::string& what) {
  double value = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  while (begin < end && *begin == ' ') ++begin;
  while (end > begin && (end[-1] == ' ' || end[-1] == '\r')) --end;
  if (begin < end && *begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || begin == end) {
    throw Error(ErrorKind::kData, "cannot parse '" + text + "' as a number", what);
  }
  return value;
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(field);
      field.clear();
    } else if (c != '\r') {
      field += c;
    }
  }
  fields.push_back(field);
  return fields;
}

std::string where(const std::string& source, long line) { return source + ":" + std::to_string(line); }

// Reads the header and returns it; empty files are a data error.
std::vector<std::string> read_header(std::istream& in, const std::string& source) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::kData, "file is empty", source);
  return split(line);
}

void expect_header(const std::vector<std::string>& header, const std::vector<std::string>& expected,
                   const std::string& source) {
  if (header != expected) {
    std::string want;
    for (std::size_t i = 0; i < expected.size(); ++i) want += (i ? "," : "") + expected[i];
    throw Error(ErrorKind::kData, "expected header '" + want + "'", where(source, 1));
  }
}

}  // namespace

std::vector<std::string> sequential_ids(int n) {
  std::vector<std::string> ids;
  ids.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) ids.push_back(std::to_string(i));
  return ids;
}

void write_functional_csv(std::ostream& out, const std::vector<std::string>& ids,
                          const std::vector<Eigen::MatrixXd>& curves, const Grid& grid) {
  out << "location_id,predictor_id,u,value\n";
  std::vector<std::string> u_text;
  for (int g = 0; g < grid.size(); ++g) u_text.push_back(format_real(grid[g]));
  for (std::size_t i = 0; i < ids.size(); ++i) {
    for (std::size_t p = 0; p < curves.size(); ++p) {
      for (int g = 0; g < grid.size(); ++g) {
        out << ids[i] << ',' << p << ',' << u_text[static_cast<std::size_t>(g)] << ','
            << format_real(curves[p](static_cast<Eigen::Index>(i), g)) << '\n';
      }
    }
  }
}

void write_scalar_csv(std::ostream& out, const std::vector<std::string>& ids, const Eigen::MatrixXd& scalars,
                      const Eigen::VectorXd& response) {
  out << "location_id";
  for (Eigen::Index j = 0; j < scalars.cols(); ++j) out << ",z" << (j + 1);
  out << ",y\n";
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    out << ids[i];
    for (Eigen::Index j = 0; j < scalars.cols(); ++j) out << ',' << format_real(scalars(r, j));
    out << ',' << format_real(response(r)) << '\n';
  }
}

void write_coordinates_csv(std::ostream& out, const CoordinateTable& table) {
  out << "location_id,lat,lon\n";
  for (std::size_t i = 0; i < table.ids.size(); ++i) {
    out << table.ids[i] << ',' << format_real(table.coordinates[i].latitude) << ','
        << format_real(table.coordinates[i].longitude) << '\n';
  }
}

FunctionalTable read_functional_csv(std::istream& in, const std::string& source) {
  expect_header(read_header(in, source), {"location_id", "predictor_id", "u", "value"}, source);

  std::unordered_map<std::string, std::size_t> location_index;
  std::unordered_map<std::string, std::size_t> predictor_index;
  FunctionalTable table;
  // values[location][predictor] in file order; u of the first series defines the grid.
  std::vector<std::vector<std::vector<double>>> values;
  std::vector<double> grid;
  bool grid_fixed = false;
  std::vector<std::vector<std::size_t>> counts;

  std::string line;
  long number = 1;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty() || line == "\r") continue;
    const auto fields = split(line);
    if (fields.size() != 4) throw Error(ErrorKind::kData, "expected 4 fields", where(source, number));
    auto [loc, new_loc] = location_index.try_emplace(fields[0], table.ids.size());
    if (new_loc) {
      table.ids.push_back(fields[0]);
      values.emplace_back(table.predictor_ids.size());
    }
    auto [pred, new_pred] = predictor_index.try_emplace(fields[1], table.predictor_ids.size());
    if (new_pred) {
      table.predictor_ids.push_back(fields[1]);
      for (auto& v : values) v.resize(table.predictor_ids.size());
    }
    const double u = parse_real(fields[2], where(source, number));
    const double value = parse_real(fields[3], where(source, number));
    auto& series = values[loc->second][pred->second];
    if (loc->second == 0 && pred->second == 0 && !grid_fixed) {
      grid.push_back(u);
    } else {
      grid_fixed = true;
      if (series.size() >= grid.size() || grid[series.size()] != u) {
        throw Error(ErrorKind::kData,
                    "location '" + fields[0] + "' predictor '" + fields[1] + "' does not follow the shared grid",
                    where(source, number));
      }
    }
    series.push_back(value);
  }
  if (table.ids.empty()) throw Error(ErrorKind::kData, "no functional observations", source);

  const auto n = static_cast<Eigen::Index>(table.ids.size());
  const auto width = static_cast<Eigen::Index>(grid.size());
  table.grid = Grid(grid);
  table.curves.assign(table.predictor_ids.size(), Eigen::MatrixXd(n, width));
  for (std::size_t i = 0; i < values.size(); ++i) {
    for (std::size_t p = 0; p < table.predictor_ids.size(); ++p) {
      const auto& series = values[i][p];
      if (series.size() != grid.size()) {
        throw Error(ErrorKind::kData,
                    "location '" + table.ids[i] + "' predictor '" + table.predictor_ids[p] + "' has " +
                        std::to_string(series.size()) + " of " + std::to_string(grid.size()) + " grid values",
                    source);
      }
      for (std::size_t g = 0; g < series.size(); ++g) {
        table.curves[p](static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(g)) = series[g];
      }
    }
  }
  return table;
}

ScalarTable read_scalar_csv(std::istream& in, const std::string& source) {
  const auto header = read_header(in, source);
  const std::size_t width = header.size();
  if (width < 2 || header.front() != "location_id" || header.back() != "y") {
    throw Error(ErrorKind::kData, "expected header 'location_id,z1,...,zJ,y'", where(source, 1));
  }
  for (std::size_t j = 1; j + 1 < width; ++j) {
    if (header[j] != "z" + std::to_string(j)) {
      throw Error(ErrorKind::kData, "column " + std::to_string(j + 1) + " should be z" + std::to_string(j),
                  where(source, 1));
    }
  }
  ScalarTable table;
  std::vector<std::vector<double>> rows;
  std::string line;
  long number = 1;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty() || line == "\r") continue;
    const auto fields = split(line);
    if (fields.size() != width) {
      throw Error(ErrorKind::kData, "expected " + std::to_string(width) + " fields", where(source, number));
    }
    table.ids.push_back(fields[0]);
    std::vector<double> row;
    for (std::size_t j = 1; j < width; ++j) row.push_back(parse_real(fields[j], where(source, number)));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw Error(ErrorKind::kData, "no rows", source);
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto j_count = static_cast<Eigen::Index>(width - 2);
  table.scalars.resize(n, j_count);
  table.response.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < j_count; ++j) table.scalars(i, j) = row[static_cast<std::size_t>(j)];
    table.response(i) = row.back();
  }
  return table;
}

CoordinateTable read_coordinates_csv(std::istream& in, const std::string& source) {
  expect_header(read_header(in, source), {"location_id", "lat", "lon"}, source);
  CoordinateTable table;
  std::string line;
  long number = 1;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty() || line == "\r") continue;
    const auto fields = split(line);
    if (fields.size() != 3) throw Error(ErrorKind::kData, "expected 3 fields", where(source, number));
    table.ids.push_back(fields[0]);
    table.coordinates.push_back(
        {parse_real(fields[1], where(source, number)), parse_real(fields[2], where(source, number))});
  }
  if (table.ids.empty()) throw Error(ErrorKind::kData, "no rows", source);
  return table;
}

RegressionDataset assemble_dataset(const ScalarTable& table, const FunctionalTable& functional,
                                   const std::optional<CoordinateTable>& coordinates) {
  const auto index_of = [](const std::vector<std::string>& ids) {
    std::map<std::string, int> index;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (!index.emplace(ids[i], static_cast<int>(i)).second) {
        throw Error(ErrorKind::kData, "duplicate location_id '" + ids[i] + "'");
      }
    }
    return index;
  };
  index_of(table.ids);
  const auto lookup = index_of(functional.ids);
  if (functional.ids.size() != table.ids.size()) {
    throw Error(ErrorKind::kData, "functional file has " + std::to_string(functional.ids.size()) +
                                      " locations, scalar file has " + std::to_string(table.ids.size()));
  }
  std::vector<int> order;
  for (const auto& id : table.ids) {
    const auto it = lookup.find(id);
    if (it == lookup.end()) throw Error(ErrorKind::kData, "location '" + id + "' has no functional observations");
    order.push_back(it->second);
  }

  RegressionDataset data;
  data.grid = functional.grid;
  for (const auto& curves : functional.curves) data.functional.push_back(curves(order, Eigen::all));
  data.scalars = table.scalars;
  data.response = table.response;
  if (coordinates) {
    const auto coord_lookup = index_of(coordinates->ids);
    std::vector<Coordinates> picked;
    for (const auto& id : table.ids) {
      const auto it = coord_lookup.find(id);
      if (it == coord_lookup.end()) throw Error(ErrorKind::kData, "location '" + id + "' has no coordinates");
      picked.push_back(coordinates->coordinates[static_cast<std::size_t>(it->second)]);
    }
    data.coordinates = std::move(picked);
  }
  data.validate();
  return data;
}

const char* to_string(LogTransform mode) {
  switch (mode) {
    case LogTransform::kNone: return "none";
    case LogTransform::kResponse: return "response";
    case LogTransform::kAll: return "all";
  }
  return "none";
}

LogTransform parse_log_transform(const std::string& name) {
  if (name == "none") return LogTransform::kNone;
  if (name == "response") return LogTransform::kResponse;
  if (name == "all") return LogTransform::kAll;
  throw Error(ErrorKind::kConfig, "unknown log transform '" + name + "' (none|response|all)");
}

void apply_log_transform(RegressionDataset& data, LogTransform mode, const std::vector<std::string>& ids) {
  if (mode == LogTransform::kNone) return;
  const auto fail = [&](Eigen::Index row, const std::string& what, double value) {
    const std::string id = static_cast<std::size_t>(row) < ids.size() ? ids[static_cast<std::size_t>(row)] : "?";
    throw Error(ErrorKind::kData,
                "log transform needs positive values: " + what + " is " + format_real(value) + " at row " +
                    std::to_string(row + 1) + " (location_id " + id + ")");
  };
  for (Eigen::Index i = 0; i < data.response.size(); ++i) {
    if (!(data.response(i) > 0.0)) fail(i, "response", data.response(i));
  }
  if (mode == LogTransform::kAll) {
    for (Eigen::Index i = 0; i < data.scalars.rows(); ++i) {
      for (Eigen::Index j = 0; j < data.scalars.cols(); ++j) {
        if (!(data.scalars(i, j) > 0.0)) fail(i, "z" + std::to_string(j + 1), data.scalars(i, j));
      }
    }
    for (std::size_t p = 0; p < data.functional.size(); ++p) {
      const auto& curves = data.functional[p];
      for (Eigen::Index i = 0; i < curves.rows(); ++i) {
        for (Eigen::Index g = 0; g < curves.cols(); ++g) {
          if (!(curves(i, g) > 0.0)) fail(i, "functional predictor " + std::to_string(p), curves(i, g));
        }
      }
    }
    data.scalars = data.scalars.array().log().matrix();
    for (auto& curves : data.functional) curves = curves.array().log().matrix();
  }
  data.response = data.response.array().log().matrix();
}

}  // namespace sfdnn
