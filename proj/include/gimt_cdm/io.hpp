#pragma once

// CSV interchange: headerless 0/1 matrices for responses and Q-matrices,
// and an item parameter table "item,slope,intercept". Separator ',', decimal
// '.', LF line ends. Doubles are written with 17 significant digits so they
// reload bit-exactly.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "gimt_cdm/types.hpp"

namespace gimt_cdm {

// Throws ParseError with the 1-based line number on malformed content and
// for empty input. Blank lines are skipped; a trailing '\r' is tolerated.
BinaryMatrix read_binary_csv(std::istream& in, const std::string& source);
BinaryMatrix read_binary_csv(const std::filesystem::path& path);
void write_binary_csv(std::ostream& out, const BinaryMatrix& m);

ResponseMatrix read_responses(const std::filesystem::path& path);
QMatrix read_qmatrix(const std::filesystem::path& path);

ItemParams read_item_params(std::istream& in, const std::string& source);
ItemParams read_item_params(const std::filesystem::path& path);
void write_item_params(std::ostream& out, const ItemParams& beta);

// Shortest form is not attempted: always 17 significant digits.
std::string format_double(double v);
double parse_double(const std::string& text, const std::string& context);

// Writes `content` to `path`, creating parent directories.
void write_text_file(const std::filesystem::path& path, const std::string& content);
std::string read_text_file(const std::filesystem::path& path);

} // namespace gimt_cdm
