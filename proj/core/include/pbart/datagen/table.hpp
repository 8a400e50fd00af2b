#pragma once

#include <cstddef>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "pbart/dataset.hpp"

namespace pbart {

/// Row-at-a-time reader for comma-delimited files with one header row.
/// Only the current line and the current row are held in memory.
class TableReader {
 public:
  explicit TableReader(const std::string& path);

  const std::vector<std::string>& header() const { return header_; }
  /// Reads the next data row into `values`. Returns false at end of file.
  /// Throws ParseError (with the line number) on ragged rows and
  /// non-numeric or non-finite cells.
  bool next(std::vector<double>& values);

  std::size_t line() const { return line_; }
  std::size_t rows_read() const { return rows_; }
  /// Largest capacity the line buffer reached, in bytes.
  std::size_t max_buffer_capacity() const { return max_capacity_; }

 private:
  std::ifstream in_;
  std::string path_;
  std::string buffer_;
  std::vector<std::string> header_;
  std::size_t line_ = 0;
  std::size_t rows_ = 0;
  std::size_t max_capacity_ = 0;
};

/// Streams rows out; reals are written in shortest round-trip form.
class TableWriter {
 public:
  TableWriter(const std::string& path, const std::vector<std::string>& header);
  void write(std::span<const double> values);
  void close();

 private:
  std::ofstream out_;
  std::string path_;
  std::size_t cols_;
  std::string buffer_;
};

/// Loads a table; `response` names the y column, every other column is an
/// input. Throws ParseError("missing response column ...", 1) when absent.
Dataset read_table(const std::string& path, const std::string& response);

/// Every column as an input (for prediction).
RowMatrix read_inputs(const std::string& path, std::vector<std::string>* names = nullptr);

/// Writes inputs then the response as the last column.
void write_table(const std::string& path, const Dataset& data);

/// One named column per entry of `columns`, all the same length.
void write_columns(const std::string& path, const std::vector<std::string>& names,
                   const std::vector<std::vector<double>>& columns);

}  // namespace pbart
