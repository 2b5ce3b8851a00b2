#pragma once

#include <map>
#include <string>
#include <string_view>
#include <utility>

#include <json.hpp>

#include "occlqg/problem.hpp"

namespace occlqg::cli {

using Json = nlohmann::ordered_json;

Json matrix_json(const Matrix& M);
Json vector_json(const Vector& v);

/// Two-space indented JSON with numeric rows kept on one line. Numbers use
/// the shortest representation that parses back to the same double.
std::string pretty_json(const Json& j);

/// 1-based (line, column) of every value in a syntactically valid document,
/// keyed by JSON pointer ("" for the root, "/system/A/1", ...).
std::map<std::string, std::pair<int, int>> value_positions(std::string_view text);

}  // namespace occlqg::cli
