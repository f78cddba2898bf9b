#include "pathfinder/dataset_io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "pathfinder/error.hpp"

namespace pathfinder {

static_assert(std::endian::native == std::endian::little, "fvecs I/O assumes a little-endian host");

namespace {

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "' for reading");
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  return out;
}

std::int32_t read_dim_header(std::istream& in, const std::filesystem::path& path) {
  std::int32_t dim = 0;
  in.read(reinterpret_cast<char*>(&dim), sizeof(dim));
  if (!in) throw DataError("truncated fvecs header in '" + path.string() + "'");
  if (dim <= 0) throw DataError("non-positive dimension " + std::to_string(dim) + " in '" + path.string() + "'");
  return dim;
}

std::optional<double> parse_real(std::string_view text) {
  // Leading/trailing blanks are tolerated; anything else must be consumed.
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) text.remove_suffix(1);
  if (text.empty()) return std::nullopt;
  if (text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) return std::nullopt;
  if (!std::isfinite(value)) return std::nullopt;
  return value;
}

std::vector<std::string> split_csv_line(const std::string& line, std::size_t line_no) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cell.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cell.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      cells.push_back(std::move(cell));
      cell.clear();
    } else if (ch != '\r') {
      cell.push_back(ch);
    }
  }
  if (quoted) throw DataError("unterminated quote on CSV line " + std::to_string(line_no));
  cells.push_back(std::move(cell));
  return cells;
}

std::string quote_csv(const std::string& cell) {
  if (cell.find_first_of(",\"\n\r") == std::string::npos && !cell.empty()) return cell;
  std::string out = "\"";
  for (char ch : cell) {
    if (ch == '"') out.push_back('"');
    out.push_back(ch);
  }
  out.push_back('"');
  return out;
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw DataError("cannot format number");
  return std::string(buf, ptr);
}

VectorSet read_fvecs(const std::filesystem::path& path) {
  std::error_code ec;
  const auto file_size = std::filesystem::file_size(path, ec);
  if (ec) throw DataError("cannot stat '" + path.string() + "'");
  if (file_size == 0) throw DataError("empty fvecs file '" + path.string() + "'");
  auto in = open_input(path);
  const std::int32_t dim = read_dim_header(in, path);
  const std::uint64_t record = 4 + 4 * static_cast<std::uint64_t>(dim);
  if (file_size % record != 0) {
    throw DataError("fvecs file '" + path.string() + "' has length " + std::to_string(file_size) +
                    ", not a multiple of " + std::to_string(record));
  }
  const std::size_t n = file_size / record;
  VectorSet out;
  out.dim = static_cast<std::size_t>(dim);
  out.data.resize(n * out.dim);
  in.seekg(0);
  for (std::size_t i = 0; i < n; ++i) {
    std::int32_t d = 0;
    in.read(reinterpret_cast<char*>(&d), sizeof(d));
    if (d != dim) {
      throw DataError("inconsistent dimension " + std::to_string(d) + " at vector " + std::to_string(i) + " of '" +
                      path.string() + "'");
    }
    in.read(reinterpret_cast<char*>(out.data.data() + i * out.dim), static_cast<std::streamsize>(4 * out.dim));
    if (!in) throw DataError("truncated vector " + std::to_string(i) + " in '" + path.string() + "'");
  }
  return out;
}

std::vector<float> read_fvecs_row(const std::filesystem::path& path, std::size_t index) {
  std::error_code ec;
  const auto file_size = std::filesystem::file_size(path, ec);
  if (ec) throw DataError("cannot stat '" + path.string() + "'");
  auto in = open_input(path);
  const std::int32_t dim = read_dim_header(in, path);
  const std::uint64_t record = 4 + 4 * static_cast<std::uint64_t>(dim);
  if (file_size % record != 0) throw DataError("fvecs file '" + path.string() + "' has a partial record");
  if (index >= file_size / record) {
    throw DataError("vector index " + std::to_string(index) + " out of range for '" + path.string() + "'");
  }
  std::vector<float> row(static_cast<std::size_t>(dim));
  in.seekg(static_cast<std::streamoff>(index * record + 4));
  in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(4 * row.size()));
  if (!in) throw DataError("truncated vector in '" + path.string() + "'");
  return row;
}

void write_fvecs(const std::filesystem::path& path, const VectorSet& vectors) {
  if (vectors.dim == 0) throw DataError("cannot write vectors of dimension 0");
  auto out = open_output(path);
  const auto dim = static_cast<std::int32_t>(vectors.dim);
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    out.write(reinterpret_cast<const char*>(&dim), sizeof(dim));
    out.write(reinterpret_cast<const char*>(vectors.data.data() + i * vectors.dim),
              static_cast<std::streamsize>(4 * vectors.dim));
  }
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

namespace {

struct CsvCells {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

CsvCells read_csv_cells(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::string line;
  if (!std::getline(in, line)) throw DataError("attribute file '" + path.string() + "' has no header");
  CsvCells csv;
  csv.header = split_csv_line(line, 1);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto row = split_csv_line(line, line_no);
    if (row.size() != csv.header.size()) {
      throw DataError("CSV line " + std::to_string(line_no) + " has " + std::to_string(row.size()) +
                      " fields, header has " + std::to_string(csv.header.size()));
    }
    csv.rows.push_back(std::move(row));
  }
  return csv;
}

AttributeTable to_table(CsvCells& csv, Schema schema) {
  AttributeTable table{std::move(schema), {}};
  table.rows.reserve(csv.rows.size());
  std::size_t line_no = 1;
  for (auto& row : csv.rows) {
    ++line_no;
    std::vector<AttributeValue> values;
    values.reserve(row.size());
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (table.schema.at(c).kind == AttributeKind::kNumeric) {
        auto v = parse_real(row[c]);
        if (!v) {
          throw DataError("non-numeric value '" + row[c] + "' in numeric column '" + table.schema.at(c).name +
                          "' (data row " + std::to_string(line_no - 1) + ")");
        }
        values.emplace_back(*v);
      } else {
        values.emplace_back(std::move(row[c]));
      }
    }
    table.rows.push_back(std::move(values));
  }
  return table;
}

}  // namespace

AttributeTable read_attribute_csv(const std::filesystem::path& path) {
  CsvCells csv = read_csv_cells(path);
  std::vector<AttributeSpec> specs;
  for (std::size_t c = 0; c < csv.header.size(); ++c) {
    bool numeric = true;
    for (const auto& row : csv.rows) {
      if (!parse_real(row[c])) {
        numeric = false;
        break;
      }
    }
    specs.push_back({csv.header[c], numeric ? AttributeKind::kNumeric : AttributeKind::kCategorical});
  }
  return to_table(csv, Schema(std::move(specs)));
}

AttributeTable read_attribute_csv(const std::filesystem::path& path, const Schema& schema) {
  CsvCells csv = read_csv_cells(path);
  if (csv.header.size() != schema.size()) {
    throw DataError("attribute file '" + path.string() + "' has " + std::to_string(csv.header.size()) +
                    " columns, expected " + std::to_string(schema.size()));
  }
  for (std::size_t c = 0; c < csv.header.size(); ++c) {
    if (csv.header[c] != schema.at(c).name) {
      throw DataError("attribute file column " + std::to_string(c) + " is '" + csv.header[c] + "', expected '" +
                      schema.at(c).name + "'");
    }
  }
  return to_table(csv, schema);
}

void write_attribute_csv(const std::filesystem::path& path, const AttributeTable& table) {
  auto out = open_output(path);
  const auto& attrs = table.schema.attributes();
  for (std::size_t c = 0; c < attrs.size(); ++c) out << (c ? "," : "") << quote_csv(attrs[c].name);
  out << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out << ',';
      if (const double* v = std::get_if<double>(&row[c])) {
        out << format_double(*v);
      } else {
        out << quote_csv(std::get<std::string>(row[c]));
      }
    }
    out << '\n';
  }
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

Relation load_relation(const std::filesystem::path& fvecs, const std::filesystem::path& csv, DistanceMetric metric) {
  return ingest_relation(read_attribute_csv(csv), read_fvecs(fvecs), metric);
}

}  // namespace pathfinder
