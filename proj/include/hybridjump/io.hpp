#pragma once

// Report emission: CSV with a fixed column order and JSONL path dumps. Every
// file starts with a header naming the library version and the config hash,
// and numbers use the shortest decimal form that round-trips.

#include <cstdint>
#include <initializer_list>
#include <ostream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "hybridjump/simulate.hpp"

namespace hybridjump {

const char* library_version();

std::string format_double(double x);  // nan, inf, -inf for non-finite values
std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t v);

struct OutputHeader {
  std::uint64_t config_hash = 0;
  std::string comment_line() const;  // "# hybridjump <version> config_hash=<hex>"
  nlohmann::json record() const;     // JSONL form of the same
};

using CsvCell = std::variant<double, std::int64_t, std::uint64_t, std::string>;

class CsvWriter {
 public:
  CsvWriter(std::ostream& os, const OutputHeader& header, std::vector<std::string> columns);
  void row(const std::vector<CsvCell>& cells);
  std::size_t columns() const { return columns_.size(); }

 private:
  std::ostream& os_;
  std::vector<std::string> columns_;
};

const char* representation_name(Representation r);
nlohmann::json path_record_json(const PathRecord& p);
void write_paths_jsonl(std::ostream& os, const OutputHeader& header, const std::vector<PathRecord>& paths);

}  // namespace hybridjump
