#pragma once

#include <initializer_list>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace qgs {

/// Quotes a field per RFC 4180 when it holds a comma, quote or line break.
std::string csv_quote(std::string_view field);
/// Round-trip text of a double ("%.17g").
std::string csv_real(double value);

class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& out) : out_(&out) {}

  /// "# " header line; embedded line breaks become separate comment lines.
  void comment(std::string_view text);
  void row(const std::vector<std::string>& fields);
  void row(std::initializer_list<std::string> fields) { row(std::vector<std::string>(fields)); }

 private:
  std::ostream* out_;
};

}  // namespace qgs
