#include "pbart/datagen/table.hpp"

#include <algorithm>
#include <cmath>

#include "pbart/error.hpp"
#include "pbart/text.hpp"

namespace pbart {

TableReader::TableReader(const std::string& path) : in_(path), path_(path) {
  if (!in_) throw Error("cannot open " + path);
  if (!std::getline(in_, buffer_)) throw ParseError(path + ": empty file, expected a header row", 1);
  line_ = 1;
  if (!buffer_.empty() && buffer_.back() == '\r') buffer_.pop_back();
  for (auto cell : text::split(buffer_, ',')) {
    const auto name = text::trim(cell);
    if (name.empty()) throw ParseError(path + ": empty column name in header", 1);
    header_.emplace_back(name);
  }
  max_capacity_ = buffer_.capacity();
}

bool TableReader::next(std::vector<double>& values) {
  for (;;) {
    if (!std::getline(in_, buffer_)) return false;
    ++line_;
    max_capacity_ = std::max(max_capacity_, buffer_.capacity());
    if (!buffer_.empty() && buffer_.back() == '\r') buffer_.pop_back();
    if (!text::trim(buffer_).empty()) break;
  }
  values.clear();
  std::size_t col = 0;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = buffer_.find(',', start);
    const std::string_view cell =
        text::trim(std::string_view(buffer_).substr(start, comma == std::string::npos ? std::string::npos : comma - start));
    if (col >= header_.size()) {
      throw ParseError(path_ + ": ragged row, more than " + std::to_string(header_.size()) + " cells", line_);
    }
    double v = 0.0;
    if (cell.empty()) throw ParseError(path_ + ": missing value in column '" + header_[col] + "'", line_);
    if (!text::parse_double(cell, v) || !std::isfinite(v)) {
      throw ParseError(path_ + ": non-numeric cell '" + std::string(cell) + "' in column '" + header_[col] + "'",
                       line_);
    }
    values.push_back(v);
    ++col;
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (col != header_.size()) {
    throw ParseError(path_ + ": ragged row, " + std::to_string(col) + " cells, expected " +
                         std::to_string(header_.size()),
                     line_);
  }
  ++rows_;
  return true;
}

TableWriter::TableWriter(const std::string& path, const std::vector<std::string>& header)
    : out_(path), path_(path), cols_(header.size()) {
  if (!out_) throw Error("cannot write " + path);
  for (std::size_t j = 0; j < header.size(); ++j) out_ << (j ? "," : "") << header[j];
  out_ << '\n';
}

void TableWriter::write(std::span<const double> values) {
  if (values.size() != cols_) throw Error(path_ + ": row width does not match the header");
  buffer_.clear();
  for (std::size_t j = 0; j < values.size(); ++j) {
    if (j) buffer_ += ',';
    buffer_ += text::format_double(values[j]);
  }
  buffer_ += '\n';
  out_ << buffer_;
}

void TableWriter::close() {
  out_.close();
  if (!out_) throw Error("error writing " + path_);
}

Dataset read_table(const std::string& path, const std::string& response) {
  TableReader reader(path);
  const auto& header = reader.header();
  const auto it = std::find(header.begin(), header.end(), response);
  if (it == header.end()) throw ParseError(path + ": missing response column '" + response + "'", 1);
  const std::size_t ycol = static_cast<std::size_t>(it - header.begin());

  Dataset data;
  data.response_name = response;
  for (std::size_t j = 0; j < header.size(); ++j)
    if (j != ycol) data.names.push_back(header[j]);
  data.x.cols = header.size() - 1;

  std::vector<double> row;
  while (reader.next(row)) {
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j == ycol) {
        data.y.push_back(row[j]);
      } else {
        data.x.data.push_back(row[j]);
      }
    }
  }
  data.x.rows = data.y.size();
  if (data.x.rows == 0) throw ParseError(path + ": no data rows", reader.line());
  return data;
}

RowMatrix read_inputs(const std::string& path, std::vector<std::string>* names) {
  TableReader reader(path);
  RowMatrix x;
  x.cols = reader.header().size();
  if (names) *names = reader.header();
  std::vector<double> row;
  while (reader.next(row)) x.data.insert(x.data.end(), row.begin(), row.end());
  x.rows = reader.rows_read();
  return x;
}

void write_table(const std::string& path, const Dataset& data) {
  std::vector<std::string> header = data.names;
  if (header.size() != data.cols()) {
    header.clear();
    for (std::size_t j = 0; j < data.cols(); ++j) header.push_back("x" + std::to_string(j + 1));
  }
  header.push_back(data.response_name);
  TableWriter w(path, header);
  std::vector<double> row(data.cols() + 1);
  for (std::size_t i = 0; i < data.rows(); ++i) {
    const auto x = data.x.row(i);
    std::copy(x.begin(), x.end(), row.begin());
    row.back() = data.y[i];
    w.write(row);
  }
  w.close();
}

void write_columns(const std::string& path, const std::vector<std::string>& names,
                   const std::vector<std::vector<double>>& columns) {
  if (names.size() != columns.size()) throw Error("column names do not match the column count");
  const std::size_t n = columns.empty() ? 0 : columns.front().size();
  for (const auto& c : columns)
    if (c.size() != n) throw Error("columns differ in length");
  TableWriter w(path, names);
  std::vector<double> row(columns.size());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < columns.size(); ++j) row[j] = columns[j][i];
    w.write(row);
  }
  w.close();
}

}  // namespace pbart
