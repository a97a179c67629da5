#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sfdnn/basis.hpp"
#include "sfdnn/pipeline.hpp"
#include "sfdnn/spatial.hpp"

namespace sfdnn {

// Text formats:
//   functional   location_id,predictor_id,u,value   (long form, one shared grid)
//   table        location_id,z1,...,zJ,y
//   coordinates  location_id,lat,lon
// Reals are written with 17 significant digits so a write/read cycle is exact.

std::string format_real(double value);
/// Whole-string parse; throws kData naming `what` on failure.
double parse_real(const std::string& text, const std::string& what);

struct FunctionalTable {
  std::vector<std::string> ids;            // first-appearance order
  std::vector<std::string> predictor_ids;  // first-appearance order
  Grid grid = Grid::uniform(2);
  std::vector<Eigen::MatrixXd> curves;     // one n x G matrix per predictor
};

struct ScalarTable {
  std::vector<std::string> ids;
  Eigen::MatrixXd scalars;  // n x J
  Eigen::VectorXd response;
};

struct CoordinateTable {
  std::vector<std::string> ids;
  std::vector<Coordinates> coordinates;
};

void write_functional_csv(std::ostream& out, const std::vector<std::string>& ids,
                          const std::vector<Eigen::MatrixXd>& curves, const Grid& grid);
void write_scalar_csv(std::ostream& out, const std::vector<std::string>& ids, const Eigen::MatrixXd& scalars,
                      const Eigen::VectorXd& response);
void write_coordinates_csv(std::ostream& out, const CoordinateTable& table);

/// `source` names the input in error messages.
FunctionalTable read_functional_csv(std::istream& in, const std::string& source);
ScalarTable read_scalar_csv(std::istream& in, const std::string& source);
CoordinateTable read_coordinates_csv(std::istream& in, const std::string& source);

/// Rows follow the scalar table; functional and coordinate rows are matched by id.
RegressionDataset assemble_dataset(const ScalarTable& table, const FunctionalTable& functional,
                                   const std::optional<CoordinateTable>& coordinates = std::nullopt);

/// "0", "1", ... as used by the simulator.
std::vector<std::string> sequential_ids(int n);

enum class LogTransform { kNone, kResponse, kAll };

const char* to_string(LogTransform mode);
LogTransform parse_log_transform(const std::string& name);

/// Natural log of the response, or of the response, scalars and curves. Throws kData
/// naming the first nonpositive value's row and location.
void apply_log_transform(RegressionDataset& data, LogTransform mode, const std::vector<std::string>& ids);

}  // namespace sfdnn
