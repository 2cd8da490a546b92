#include "soilrf/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "soilrf/errors.hpp"

namespace soilrf::io {
namespace {

// Streams a file as lines and tracks the line number for error messages.
class LineReader {
 public:
  explicit LineReader(const std::filesystem::path& path)
      : path_(path.string()), in_(path) {
    if (!in_) throw IoError("cannot open file: " + path_);
  }

  bool next(std::string& line) {
    if (!std::getline(in_, line)) return false;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    ++line_no_;
    return true;
  }

  std::string require(const std::string& what) {
    std::string line;
    if (!next(line)) fail("unexpected end of file, expected " + what);
    return line;
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(path_, line_no_, msg);
  }

  std::size_t line_no() const { return line_no_; }
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::ifstream in_;
  std::size_t line_no_ = 0;
};

std::string expect_key(LineReader& reader, std::string_view key) {
  const std::string line = reader.require(std::string("`") + std::string(key) + "=`");
  const auto eq = line.find('=');
  if (eq == std::string::npos || std::string_view(line).substr(0, eq) != key) {
    reader.fail("expected field `" + std::string(key) + "`, got `" + line + "`");
  }
  return line.substr(eq + 1);
}

double expect_double(LineReader& reader, std::string_view key) {
  const std::string raw = expect_key(reader, key);
  try {
    return parse_double(raw);
  } catch (const std::exception& e) {
    reader.fail("field `" + std::string(key) + "`: " + e.what());
  }
}

int expect_int(LineReader& reader, std::string_view key) {
  const std::string raw = expect_key(reader, key);
  try {
    return parse_int(raw);
  } catch (const std::exception& e) {
    reader.fail("field `" + std::string(key) + "`: " + e.what());
  }
}

std::vector<double> parse_double_row(LineReader& reader, const std::string& line,
                                     std::size_t expected) {
  const auto cells = split(line, ',');
  if (cells.size() != expected) {
    reader.fail("expected " + std::to_string(expected) + " comma-separated values, got " +
                std::to_string(cells.size()));
  }
  std::vector<double> out(cells.size());
  for (std::size_t i = 0; i < cells.size(); ++i) {
    try {
      out[i] = parse_double(cells[i]);
    } catch (const std::exception& e) {
      reader.fail("column " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  return out;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);  // binary: byte-stable round trips
  if (!out) throw IoError("cannot write file: " + path.string());
  return out;
}

}  // namespace

std::string format_double(double value) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view text) {
  while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
  if (text.empty()) throw ValidationError("empty numeric field");
  double value = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
    throw ValidationError("malformed number: `" + std::string(text) + "`");
  }
  if (!std::isfinite(value)) {
    throw ValidationError("non-finite number: `" + std::string(text) + "`");
  }
  return value;
}

int parse_int(std::string_view text) {
  while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
  int value = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
    throw ValidationError("malformed integer: `" + std::string(text) + "`");
  }
  return value;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

// --- sweep -----------------------------------------------------------------

SweepRecord load_sweep(const std::filesystem::path& path) {
  LineReader reader(path);
  SweepRecord rec;
  rec.pot_id = expect_key(reader, "pot");
  rec.day = expect_int(reader, "day");
  const double f_start = expect_double(reader, "f_start_hz");
  const double f_step = expect_double(reader, "f_step_hz");
  const int n_points = expect_int(reader, "n_points");
  rec.dwell_s = expect_double(reader, "dwell_s");
  rec.rate_sps = expect_double(reader, "rate_sps");
  if (n_points < 1) reader.fail("n_points must be >= 1");
  try {
    rec.grid = FrequencyGrid(f_start, f_step, static_cast<std::size_t>(n_points));
  } catch (const std::exception& e) {
    reader.fail(e.what());
  }

  rec.samples.reserve(rec.grid.size());
  for (std::size_t k = 0; k < rec.grid.size(); ++k) {
    const std::string line = reader.require("sample block " + std::to_string(k + 1));
    const auto cells = split(line, ',');
    if (cells.empty() || cells.size() % 2 != 0) {
      reader.fail("sample block must hold re,im pairs");
    }
    std::vector<std::complex<double>> block(cells.size() / 2);
    for (std::size_t i = 0; i < block.size(); ++i) {
      try {
        block[i] = {parse_double(cells[2 * i]), parse_double(cells[2 * i + 1])};
      } catch (const std::exception& e) {
        reader.fail("sample " + std::to_string(i + 1) + ": " + e.what());
      }
    }
    rec.samples.push_back(std::move(block));
  }
  std::string extra;
  if (reader.next(extra) && !extra.empty()) {
    reader.fail("trailing content after declared sample blocks");
  }
  try {
    rec.validate();
  } catch (const std::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  return rec;
}

void save_sweep(const SweepRecord& record, const std::filesystem::path& path) {
  record.validate();
  auto out = open_out(path);
  out << "pot=" << record.pot_id << '\n';
  out << "day=" << record.day << '\n';
  out << "f_start_hz=" << format_double(record.grid.f_start()) << '\n';
  out << "f_step_hz=" << format_double(record.grid.f_step()) << '\n';
  out << "n_points=" << record.grid.size() << '\n';
  out << "dwell_s=" << format_double(record.dwell_s) << '\n';
  out << "rate_sps=" << format_double(record.rate_sps) << '\n';
  for (const auto& block : record.samples) {
    for (std::size_t i = 0; i < block.size(); ++i) {
      if (i != 0) out << ',';
      out << format_double(block[i].real()) << ',' << format_double(block[i].imag());
    }
    out << '\n';
  }
}

// --- heatmap ---------------------------------------------------------------

MetricHeatmap load_heatmap(const std::filesystem::path& path) {
  LineReader reader(path);
  MetricHeatmap map;
  const std::string metric = expect_key(reader, "metric");
  try {
    map.metric = metric_from_string(metric);
  } catch (const std::exception& e) {
    reader.fail(e.what());
  }
  const int rows = expect_int(reader, "rows");
  const int cols = expect_int(reader, "cols");
  if (rows < 1 || cols < 1) reader.fail("rows and cols must be >= 1");
  map.rows = static_cast<std::size_t>(rows);
  map.cols = static_cast<std::size_t>(cols);
  map.spacing_cm = expect_double(reader, "spacing_cm");
  if (!(map.spacing_cm > 0.0)) reader.fail("spacing_cm must be positive");

  map.values.reserve(map.rows * map.cols);
  for (std::size_t r = 0; r < map.rows; ++r) {
    const std::string line = reader.require("value row " + std::to_string(r + 1));
    const auto row = parse_double_row(reader, line, map.cols);
    map.values.insert(map.values.end(), row.begin(), row.end());
  }
  std::string extra;
  if (reader.next(extra) && !extra.empty()) {
    reader.fail("more rows than declared in header");
  }
  map.validate();
  return map;
}

void save_heatmap(const MetricHeatmap& map, const std::filesystem::path& path) {
  map.validate();
  auto out = open_out(path);
  out << "metric=" << to_string(map.metric) << '\n';
  out << "rows=" << map.rows << '\n';
  out << "cols=" << map.cols << '\n';
  out << "spacing_cm=" << format_double(map.spacing_cm) << '\n';
  for (std::size_t r = 0; r < map.rows; ++r) {
    for (std::size_t c = 0; c < map.cols; ++c) {
      if (c != 0) out << ',';
      out << format_double(map.at(r, c));
    }
    out << '\n';
  }
}

// --- annotation ------------------------------------------------------------

TuberAnnotation load_annotation(const std::filesystem::path& path) {
  LineReader reader(path);
  TuberAnnotation ann;
  ann.pot_id = expect_key(reader, "pot");
  ann.scale_cm_per_px = expect_double(reader, "scale_cm_per_px");
  std::string line;
  while (reader.next(line)) {
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != 2) reader.fail("centroid line must be `px,py`");
    try {
      ann.pixel_centroids.emplace_back(parse_double(cells[0]), parse_double(cells[1]));
    } catch (const std::exception& e) {
      reader.fail(e.what());
    }
  }
  try {
    ann.validate();
  } catch (const std::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  return ann;
}

void save_annotation(const TuberAnnotation& ann, const std::filesystem::path& path) {
  ann.validate();
  auto out = open_out(path);
  out << "pot=" << ann.pot_id << '\n';
  out << "scale_cm_per_px=" << format_double(ann.scale_cm_per_px) << '\n';
  for (const auto& [px, py] : ann.pixel_centroids) {
    out << format_double(px) << ',' << format_double(py) << '\n';
  }
}

// --- harvest ---------------------------------------------------------------

std::vector<HarvestOutcome> load_harvest(const std::filesystem::path& path) {
  LineReader reader(path);
  const std::string header = reader.require("header `pot,mass_g,volume_cm3`");
  if (header != "pot,mass_g,volume_cm3") {
    reader.fail("expected header `pot,mass_g,volume_cm3`");
  }
  std::vector<HarvestOutcome> out;
  std::string line;
  while (reader.next(line)) {
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != 3) reader.fail("expected `pot,mass_g,volume_cm3` row");
    HarvestOutcome h;
    h.pot_id = std::string(cells[0]);
    try {
      h.mass_g = parse_double(cells[1]);
      h.volume_cm3 = parse_double(cells[2]);
      h.validate();
    } catch (const std::exception& e) {
      reader.fail(e.what());
    }
    out.push_back(std::move(h));
  }
  return out;
}

void save_harvest(const std::vector<HarvestOutcome>& outcomes,
                  const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "pot,mass_g,volume_cm3\n";
  for (const auto& h : outcomes) {
    h.validate();
    out << h.pot_id << ',' << format_double(h.mass_g) << ','
        << format_double(h.volume_cm3) << '\n';
  }
}

// --- occupancy -------------------------------------------------------------

OccupancyMap load_occupancy(const std::filesystem::path& path) {
  LineReader reader(path);
  OccupancyMap map;
  const int rows = expect_int(reader, "rows");
  const int cols = expect_int(reader, "cols");
  if (rows < 1 || cols < 1) reader.fail("rows and cols must be >= 1");
  map.rows = static_cast<std::size_t>(rows);
  map.cols = static_cast<std::size_t>(cols);
  map.spacing_cm = expect_double(reader, "spacing_cm");
  map.values.reserve(map.rows * map.cols);
  for (std::size_t r = 0; r < map.rows; ++r) {
    const std::string line = reader.require("value row " + std::to_string(r + 1));
    const auto row = parse_double_row(reader, line, map.cols);
    map.values.insert(map.values.end(), row.begin(), row.end());
  }
  try {
    map.validate();
  } catch (const std::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  return map;
}

void save_occupancy(const OccupancyMap& map, const std::filesystem::path& path) {
  map.validate();
  auto out = open_out(path);
  out << "rows=" << map.rows << '\n';
  out << "cols=" << map.cols << '\n';
  out << "spacing_cm=" << format_double(map.spacing_cm) << '\n';
  for (std::size_t r = 0; r < map.rows; ++r) {
    for (std::size_t c = 0; c < map.cols; ++c) {
      if (c != 0) out << ',';
      out << format_double(map.at(r, c));
    }
    out << '\n';
  }
}

// --- misc ------------------------------------------------------------------

void write_kv_file(const std::filesystem::path& path,
                   const std::vector<std::pair<std::string, std::string>>& entries) {
  auto out = open_out(path);
  for (const auto& [key, value] : entries) out << key << '=' << value << '\n';
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::filesystem::path& path, std::string_view content) {
  auto out = open_out(path);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
}

}  // namespace soilrf::io
