// SPDX-License-Identifier: Apache-2.0
//
// Newline-delimited JSON and content hashing helpers shared by the pipeline
// stages. Objects keep insertion order so artifacts are byte-stable.

#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace oncoalign {

using ojson = nlohmann::ordered_json;

class JsonlError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Blank lines are skipped; errors carry "path:line".
std::vector<ojson> read_jsonl(const std::filesystem::path& path);
void write_jsonl(const std::filesystem::path& path, const std::vector<ojson>& rows);

ojson read_json(const std::filesystem::path& path);
/// Pretty-printed with two-space indent and a trailing newline.
void write_json(const std::filesystem::path& path, const ojson& value);

void write_text(const std::filesystem::path& path, std::string_view text);
std::string read_text(const std::filesystem::path& path);

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

}  // namespace oncoalign
