// SPDX-License-Identifier: Apache-2.0

#include "oncoalign/jsonl.hpp"

#include <fstream>
#include <sstream>

#include "oncoalign/text_util.hpp"

namespace oncoalign {

std::vector<ojson> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw JsonlError("cannot open " + path.string());
  std::vector<ojson> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (is_blank(line)) continue;
    try {
      rows.push_back(ojson::parse(line));
    } catch (const nlohmann::json::parse_error& e) {
      throw JsonlError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return rows;
}

void write_jsonl(const std::filesystem::path& path, const std::vector<ojson>& rows) {
  std::string out;
  for (const auto& row : rows) {
    out += row.dump();
    out += '\n';
  }
  write_text(path, out);
}

ojson read_json(const std::filesystem::path& path) {
  const auto text = read_text(path);
  try {
    return ojson::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw JsonlError(path.string() + ": " + e.what());
  }
}

void write_json(const std::filesystem::path& path, const ojson& value) { write_text(path, value.dump(2) + "\n"); }

void write_text(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw JsonlError("cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw JsonlError("write failed for " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw JsonlError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace oncoalign
