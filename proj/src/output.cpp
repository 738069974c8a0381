#include "kickedtop/output.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include <openssl/evp.h>

#include "json.hpp"

#ifndef KICKEDTOP_VERSION
#define KICKEDTOP_VERSION "0.0.0"
#endif

namespace kickedtop {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::array<char, 32> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc()) throw std::runtime_error("double formatting failed");
  return std::string(buf.data(), ptr);
}

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw std::out_of_range("missing CSV column '" + name + "'");
}

double CsvTable::number(std::size_t row, const std::string& name) const {
  const std::string& text = rows.at(row).at(column(name));
  if (text == "nan") return std::nan("");
  if (text == "inf") return HUGE_VAL;
  if (text == "-inf") return -HUGE_VAL;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw std::invalid_argument("column '" + name + "' row " + std::to_string(row) + ": not a number");
  return v;
}

CsvBuilder::CsvBuilder(std::vector<std::string> header) { table_.header = std::move(header); }

CsvBuilder& CsvBuilder::cell(double v) {
  current_.push_back(format_double(v));
  return *this;
}

CsvBuilder& CsvBuilder::cell(long long v) {
  current_.push_back(std::to_string(v));
  return *this;
}

CsvBuilder& CsvBuilder::cell(std::string v) {
  current_.push_back(std::move(v));
  return *this;
}

void CsvBuilder::end_row() {
  if (current_.size() != table_.header.size())
    throw std::logic_error("CSV row has " + std::to_string(current_.size()) + " cells, header has " +
                           std::to_string(table_.header.size()));
  table_.rows.push_back(std::move(current_));
  current_.clear();
}

std::string to_csv_text(const CsvTable& table) {
  std::string out;
  auto line = [&out](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += cells[i];
    }
    out += '\n';
  };
  line(table.header);
  for (const auto& r : table.rows) line(r);
  return out;
}

CsvTable parse_csv(const std::string& text) {
  CsvTable t;
  std::istringstream in(text);
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
      const auto pos = line.find(',', start);
      cells.push_back(line.substr(start, pos == std::string::npos ? std::string::npos : pos - start));
      if (pos == std::string::npos) break;
      start = pos + 1;
    }
    if (first) {
      t.header = std::move(cells);
      first = false;
    } else {
      if (cells.size() != t.header.size())
        throw std::invalid_argument("CSV row " + std::to_string(t.rows.size() + 1) + " has the wrong column count");
      t.rows.push_back(std::move(cells));
    }
  }
  if (first) throw std::invalid_argument("CSV has no header row");
  return t;
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str());
}

std::string sha256_hex(const std::string& bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("SHA-256 digest failed");
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
  return hex.str();
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return sha256_hex(buf.str());
}

std::string manifest_to_json(const RunManifest& m) {
  nlohmann::ordered_json j;
  j["tool"] = m.tool;
  j["version"] = m.version;
  j["command"] = m.command;
  j["seed"] = m.seed;
  j["started_utc"] = m.started_utc;
  j["wall_clock_seconds"] = m.wall_clock_seconds;
  j["status"] = m.status;
  if (!m.error.empty()) j["error"] = m.error;
  j["config"] = m.config_text;
  j["outputs"] = nlohmann::ordered_json::array();
  for (const auto& o : m.outputs)
    j["outputs"].push_back({{"file", o.file}, {"sha256", o.sha256}, {"bytes", o.bytes}, {"complete", o.complete}});
  return j.dump(2) + "\n";
}

RunManifest manifest_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  RunManifest m;
  m.tool = j.value("tool", "ktops");
  m.version = j.value("version", "");
  m.command = j.value("command", "");
  m.seed = j.value("seed", std::uint64_t{0});
  m.started_utc = j.value("started_utc", "");
  m.wall_clock_seconds = j.value("wall_clock_seconds", 0.0);
  m.status = j.value("status", "ok");
  m.error = j.value("error", "");
  m.config_text = j.at("config").get<std::string>();
  for (const auto& o : j.value("outputs", nlohmann::json::array()))
    m.outputs.push_back({o.at("file").get<std::string>(), o.at("sha256").get<std::string>(),
                         o.at("bytes").get<std::uintmax_t>(), o.value("complete", true)});
  return m;
}

OutputDirectory::OutputDirectory(std::filesystem::path root) : root_(std::move(root)) {
  std::filesystem::create_directories(root_);
}

void OutputDirectory::write_text(const std::string& name, const std::string& text) {
  const auto path = root_ / name;
  {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
  }
  records_.push_back({name, sha256_hex(text), text.size(), true});
}

void OutputDirectory::write_csv(const std::string& name, const CsvTable& table) { write_text(name, to_csv_text(table)); }

void OutputDirectory::mark_incomplete() {
  for (auto& r : records_) r.complete = false;
}

std::string library_version() { return KICKEDTOP_VERSION; }

}  // namespace kickedtop
