#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

// Minimal UTF-8 <-> code point conversion. All span offsets in this library
// are Unicode scalar value (code point) indices, never bytes and never
// grapheme clusters, so cross-implementation results stay deterministic.

namespace mteval::utf8 {

struct DecodeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline std::u32string decode(std::string_view s) {
  std::u32string out;
  out.reserve(s.size());
  size_t i = 0;
  const auto cont = [&](size_t k) {
    if (i + k >= s.size() || (static_cast<unsigned char>(s[i + k]) & 0xC0) != 0x80)
      throw DecodeError("truncated or invalid UTF-8 continuation at byte " + std::to_string(i));
    return static_cast<char32_t>(static_cast<unsigned char>(s[i + k]) & 0x3F);
  };
  while (i < s.size()) {
    const unsigned char b = static_cast<unsigned char>(s[i]);
    char32_t cp;
    if (b < 0x80) {
      cp = b;
      i += 1;
    } else if ((b & 0xE0) == 0xC0) {
      cp = (static_cast<char32_t>(b & 0x1F) << 6) | cont(1);
      if (cp < 0x80) throw DecodeError("overlong UTF-8 sequence");
      i += 2;
    } else if ((b & 0xF0) == 0xE0) {
      cp = (static_cast<char32_t>(b & 0x0F) << 12) | (cont(1) << 6) | cont(2);
      if (cp < 0x800 || (cp >= 0xD800 && cp <= 0xDFFF))
        throw DecodeError("overlong or surrogate UTF-8 sequence");
      i += 3;
    } else if ((b & 0xF8) == 0xF0) {
      cp = (static_cast<char32_t>(b & 0x07) << 18) | (cont(1) << 12) | (cont(2) << 6) | cont(3);
      if (cp < 0x10000 || cp > 0x10FFFF) throw DecodeError("invalid UTF-8 sequence");
      i += 4;
    } else {
      throw DecodeError("invalid UTF-8 lead byte at " + std::to_string(i));
    }
    out.push_back(cp);
  }
  return out;
}

inline void append(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

inline std::string encode(std::u32string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char32_t cp : s) append(out, cp);
  return out;
}

/// Number of code points in a UTF-8 string.
inline size_t length(std::string_view s) {
  size_t n = 0;
  for (char c : s)
    if ((static_cast<unsigned char>(c) & 0xC0) != 0x80) ++n;
  return n;
}

/// Substring by code point range [from, to).
inline std::string slice(std::string_view s, size_t from, size_t to) {
  const std::u32string u = decode(s);
  if (from > to || to > u.size())
    throw DecodeError("code point slice out of range");
  return encode(std::u32string_view(u).substr(from, to - from));
}

}  // namespace mteval::utf8
