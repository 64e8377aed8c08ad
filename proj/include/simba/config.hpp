#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "simba/matrix.hpp"
#include "simba/trainer.hpp"

namespace simba {

/// One `key = value` line of a plain-text settings file.
struct KeyValue {
    std::string key;
    std::string value;
    std::size_t line = 0;
};

/// Reads `key = value` lines. Blank lines and `#` comments are skipped; keys
/// and values are trimmed. A line without '=' is a ParseError.
std::vector<KeyValue> read_key_values(std::istream& in);
std::vector<KeyValue> read_key_values(const std::filesystem::path& path);

// Value parsers; each throws ParseError naming the key and line.
double parse_double(const KeyValue& kv);
long long parse_integer(const KeyValue& kv);
std::uint64_t parse_seed(const KeyValue& kv);  // full unsigned 64-bit range
bool parse_bool(const KeyValue& kv);  // true/false, on/off, yes/no, 1/0
/// Whitespace-separated numbers.
Vector parse_vector(const KeyValue& kv);
/// Rows separated by ';', entries by whitespace. "" is a 0 × cols matrix.
Matrix parse_matrix(const KeyValue& kv, Index rows, Index cols);

std::string format_vector(const Vector& v);
std::string format_matrix(const Matrix& m);

/// Settings of the `fit` command.
struct FitSettings {
    TrainConfig train;
    /// Standardize channels with training statistics before fitting.
    bool standardize = true;
};

/// Parses a fit configuration. Keys are the TrainConfig field names plus
/// `standardize`; grad_clip and init_grad_clip accept `none`.
/// Unknown keys raise ConfigError; the result is validated.
FitSettings parse_fit_settings(const std::vector<KeyValue>& entries);
FitSettings load_fit_settings(const std::filesystem::path& path);

void write_fit_settings(std::ostream& out, const FitSettings& settings);

}  // namespace simba
