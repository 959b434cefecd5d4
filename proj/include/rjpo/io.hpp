#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "rjpo/linop.hpp"

namespace rjpo {

namespace fs = std::filesystem;

/// Build identifier recorded in every metadata file.
std::string build_id();

/// %.17g, enough to round-trip any double.
std::string format_double(double v);

/// Creates `dir` (and parents) if missing. Throws IoError when it cannot be
/// created or written to.
void ensure_directory(const fs::path& dir);

/// Writes a header row then one line per row, values printed with format_double.
void write_csv(const fs::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

/// Same layout with preformatted cells, for tables that mix labels and numbers.
void write_csv(const fs::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

/// Reads back a numeric CSV written by write_csv.
std::vector<std::vector<double>> read_csv(const fs::path& path, std::vector<std::string>* header);

using KeyValues = std::map<std::string, std::string>;

/// `key = value` lines; blank lines and lines starting with '#' are skipped.
KeyValues read_key_values(const fs::path& path);
KeyValues parse_key_values(const std::string& text);
void write_key_values(const fs::path& path, const KeyValues& kv);

void write_json(const fs::path& path, const nlohmann::ordered_json& j);

/// Binary 16-bit PGM (P5, maxval 65535). Values are rounded and clamped to [0, 65535].
void write_pgm16(const fs::path& path, const Eigen::VectorXd& image, ImageDims dims);

struct GrayImage {
  Eigen::VectorXd pixels;  // row-major
  ImageDims dims;
};

/// Reads binary P5 images with maxval up to 65535.
GrayImage read_pgm(const fs::path& path);

}  // namespace rjpo
