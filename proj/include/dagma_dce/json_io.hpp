#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "dagma_dce/graphs.hpp"

namespace dce {

// Row-major array of arrays.
nlohmann::json matrix_to_json(const Eigen::MatrixXd& m);
// Throws IoError on ragged or non-numeric input; `what` prefixes the message.
Eigen::MatrixXd matrix_from_json(const nlohmann::json& rows, const std::string& what = "matrix");

nlohmann::json vector_to_json(const Eigen::VectorXd& v);

// {"d": d, "edges": [[from, to], ...]}
nlohmann::json to_json(const BinaryDag& g);
BinaryDag graph_from_json(const nlohmann::json& j);

// {"d": d, "weights": [[...], ...]}
nlohmann::json weighted_to_json(const WeightedAdjacency& a);
WeightedAdjacency weighted_from_json(const nlohmann::json& j);

// Parse errors report the line and column.
nlohmann::json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const nlohmann::json& j);
void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

// Numeric CSV with an optional header row (detected when the first row is not numeric).
Eigen::MatrixXd read_csv_matrix(const std::string& path);
void write_csv_matrix(const std::string& path, const Eigen::MatrixXd& m,
                      const std::vector<std::string>& header);

// %.17g, which round-trips doubles.
std::string format_double(double v);

}  // namespace dce
