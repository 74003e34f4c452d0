#pragma once

#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qvar/qfield.hpp"

namespace qvar {

using Json = nlohmann::json;

/// {"q": int, "n": int, "values": [[real; n]; q]}
Json to_json(const QPoint& p);
QPoint qpoint_from_json(const Json& j);

/// {"grid": {"m", "origin", "h", "extents"}, "q", "n", "values": [[real; q*n] per node],
///  optional "labels", "collapsed"}
Json to_json(const QField& f);
QField qfield_from_json(const Json& j);

Json to_json(const Grid& g);
Grid grid_from_json(const Json& j);

/// Shortest round-trippable text for a double ("%.17g").
std::string fmt17(double x);

/// CSV with a header row; every value printed with fmt17.
void write_csv(std::ostream& os, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

Json read_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

/// Parses "1/128", "0.01" or "3" into a double; throws UsageError.
double parse_number(const std::string& text);
/// Comma-separated numbers.
std::vector<double> parse_list(const std::string& text);

}  // namespace qvar
