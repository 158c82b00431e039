#pragma once

#include <string>
#include <string_view>

namespace hil {

/// Formats a double with 17 significant digits (%.17g), enough to round-trip
/// any finite IEEE-754 binary64 value exactly. All on-disk floats use this.
std::string fmt_double(double v);

/// Appends `s` to `out` as the body of a JSON string literal (no quotes).
void append_json_escaped(std::string& out, std::string_view s);

std::string json_quote(std::string_view s);

/// SHA-256 of `bytes`, lowercase hex.
std::string sha256_hex(std::string_view bytes);

}  // namespace hil
