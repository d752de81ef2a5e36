// SPDX-License-Identifier: Apache-2.0
//
// Small string helpers shared across modules.

#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace oncoalign {

std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);
bool is_blank(std::string_view s);

/// Splits on ASCII whitespace; never returns empty tokens.
std::vector<std::string> split_whitespace(std::string_view s);

/// Lowercase and drop every non-alphanumeric byte ("PD-L1" -> "pdl1").
std::string normalize_key(std::string_view s);

/// Shortest decimal text that round-trips the value ("60", "27.9", "0.08").
std::string format_number(double value);

/// Fixed-point text with the given number of decimals.
std::string format_fixed(double value, int decimals);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

}  // namespace oncoalign
