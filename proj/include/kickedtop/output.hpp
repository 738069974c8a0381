#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace kickedtop {

// Shortest decimal text that parses back to the same double; "nan", "inf"
// and "-inf" for non-finite values.
std::string format_double(double v);

// A CSV held as text cells. Every table has a header row.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Column index by name; throws std::out_of_range naming the column.
  std::size_t column(const std::string& name) const;
  double number(std::size_t row, const std::string& name) const;
};

class CsvBuilder {
 public:
  explicit CsvBuilder(std::vector<std::string> header);

  CsvBuilder& cell(double v);
  CsvBuilder& cell(long long v);
  CsvBuilder& cell(int v) { return cell(static_cast<long long>(v)); }
  CsvBuilder& cell(std::string v);
  void end_row();

  const CsvTable& table() const { return table_; }

 private:
  CsvTable table_;
  std::vector<std::string> current_;
};

std::string to_csv_text(const CsvTable& table);
CsvTable parse_csv(const std::string& text);
CsvTable read_csv(const std::filesystem::path& path);

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& path);

struct OutputRecord {
  std::string file;  // relative to the output directory
  std::string sha256;
  std::uintmax_t bytes = 0;
  bool complete = true;
};

struct RunManifest {
  std::string tool = "ktops";
  std::string version;
  std::string command;  // run | sweep | fit
  std::string config_text;
  std::uint64_t seed = 0;
  std::string started_utc;
  double wall_clock_seconds = 0.0;
  std::string status = "ok";  // ok | failed
  std::string error;
  std::vector<OutputRecord> outputs;
};

std::string manifest_to_json(const RunManifest& m);
RunManifest manifest_from_json(const std::string& text);

// Writes files into one directory and keeps a record of each for the manifest.
class OutputDirectory {
 public:
  explicit OutputDirectory(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }
  void write_csv(const std::string& name, const CsvTable& table);
  void write_text(const std::string& name, const std::string& text);
  const std::vector<OutputRecord>& records() const { return records_; }
  void mark_incomplete();

 private:
  std::filesystem::path root_;
  std::vector<OutputRecord> records_;
};

std::string library_version();

}  // namespace kickedtop
