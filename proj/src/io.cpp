#include "rjpo/io.hpp"

#include <algorithm>
#include <cmath>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace rjpo {

namespace {

std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

void finish(std::ofstream& out, const fs::path& path) {
  out.flush();
  if (!out) throw IoError("write to " + path.string() + " failed");
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Next whitespace-separated header token of a PNM file, skipping comments.
std::string pnm_token(std::istream& in) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  return tok;
}

}  // namespace

std::string build_id() {
#ifdef RJPO_BUILD_ID
  return RJPO_BUILD_ID;
#else
  return "unknown";
#endif
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void ensure_directory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir))
    throw IoError("cannot create output directory " + dir.string() +
                  (ec ? ": " + ec.message() : ""));
  const fs::path probe = dir / ".rjpo_write_probe";
  {
    std::ofstream p(probe);
    if (!p) throw IoError("output directory " + dir.string() + " is not writable");
  }
  fs::remove(probe, ec);
}

void write_csv(const fs::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  auto out = open_out(path);
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << '\n';
  for (const auto& row : rows) {
    if (row.size() != header.size())
      throw ArgumentError("write_csv: row width differs from header in " + path.string());
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_double(row[i]);
    out << '\n';
  }
  finish(out, path);
}

void write_csv(const fs::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  auto out = open_out(path);
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << '\n';
  for (const auto& row : rows) {
    if (row.size() != header.size())
      throw ArgumentError("write_csv: row width differs from header in " + path.string());
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
    out << '\n';
  }
  finish(out, path);
}

std::vector<std::vector<double>> read_csv(const fs::path& path, std::vector<std::string>* header) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  std::vector<std::vector<double>> rows;
  bool first = true;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string cell;
    if (first) {
      first = false;
      if (header) {
        header->clear();
        while (std::getline(ss, cell, ',')) header->push_back(trim(cell));
      }
      continue;
    }
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(std::move(row));
  }
  return rows;
}

KeyValues parse_key_values(const std::string& text) {
  KeyValues kv;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(t.substr(0, eq));
    if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    kv[key] = trim(t.substr(eq + 1));
  }
  return kv;
}

KeyValues read_key_values(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_key_values(ss.str());
}

void write_key_values(const fs::path& path, const KeyValues& kv) {
  auto out = open_out(path);
  for (const auto& [k, v] : kv) out << k << " = " << v << '\n';
  finish(out, path);
}

void write_json(const fs::path& path, const nlohmann::ordered_json& j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
  finish(out, path);
}

void write_pgm16(const fs::path& path, const Eigen::VectorXd& image, ImageDims dims) {
  if (image.size() != dims.size()) throw ArgumentError("write_pgm16: size mismatch");
  auto out = open_out(path, std::ios::out | std::ios::binary);
  out << "P5\n" << dims.cols << ' ' << dims.rows << "\n65535\n";
  std::vector<unsigned char> buf(static_cast<std::size_t>(2 * image.size()));
  for (Index i = 0; i < image.size(); ++i) {
    const double v = std::isfinite(image[i]) ? std::clamp(std::round(image[i]), 0.0, 65535.0) : 0.0;
    const auto u = static_cast<unsigned>(v);
    buf[2 * i] = static_cast<unsigned char>(u >> 8);
    buf[2 * i + 1] = static_cast<unsigned char>(u & 0xff);
  }
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  finish(out, path);
}

GrayImage read_pgm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open image " + path.string());
  if (pnm_token(in) != "P5") throw IoError(path.string() + ": not a binary PGM (P5)");
  GrayImage img;
  long maxval = 0;
  try {
    img.dims.cols = std::stol(pnm_token(in));
    img.dims.rows = std::stol(pnm_token(in));
    maxval = std::stol(pnm_token(in));
  } catch (const std::exception&) {
    throw IoError(path.string() + ": malformed PGM header");
  }
  if (img.dims.rows < 1 || img.dims.cols < 1 || maxval < 1 || maxval > 65535)
    throw IoError(path.string() + ": unsupported PGM header");
  const int bytes = maxval > 255 ? 2 : 1;
  std::vector<unsigned char> buf(static_cast<std::size_t>(img.dims.size() * bytes));
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (in.gcount() != static_cast<std::streamsize>(buf.size()))
    throw IoError(path.string() + ": truncated pixel data");
  img.pixels.resize(img.dims.size());
  for (Index i = 0; i < img.dims.size(); ++i)
    img.pixels[i] = bytes == 2 ? (buf[2 * i] << 8 | buf[2 * i + 1]) : buf[i];
  return img;
}

}  // namespace rjpo
