#pragma once

// Small file/formatting helpers shared across the pipeline. Every output
// file starts with a header line recording tool version, subcommand, seed
// and input digests, so a report can always be traced back to its inputs.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace ga::io {

// FNV-1a 64-bit digest; used for input fingerprints in output headers.
std::uint64_t fnv1a64(const void* data, std::size_t n);
std::uint64_t file_digest(const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

// Splits a file into lines; handles trailing newline, keeps empty lines out.
std::vector<std::string> read_lines(const std::filesystem::path& path);

// printf-style %.{prec}g, locale-independent.
std::string fmt_g(double value, int precision = 12);
// Fixed decimals, locale-independent.
std::string fmt_f(double value, int decimals);

struct InputDigest {
    std::string name;
    std::uint64_t digest = 0;
};

// "# ga <version> <subcommand> seed=<seed> inputs=<name>:<hex16>,..."
std::string header_line(std::string_view subcommand, std::uint64_t seed,
                        const std::vector<InputDigest>& inputs);

// CSV cells in this project never contain commas or quotes; this joins and
// splits plain cells only.
std::string csv_join(const std::vector<std::string>& cells);
std::vector<std::string> csv_split(std::string_view line);

}  // namespace ga::io
