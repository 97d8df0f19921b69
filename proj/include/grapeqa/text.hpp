#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace grapeqa {

/// A normalized token together with its byte span in the original text.
struct Token {
  std::string text;  // lowercased, punctuation stripped
  std::size_t start = 0;
  std::size_t end = 0;  // one past the last byte
};

/// Splits `text` into normalized word tokens.
///
/// ASCII letters and digits are lowercased and kept; every other ASCII byte
/// (whitespace, punctuation, symbols) is a separator. Bytes >= 0x80 are kept
/// verbatim so UTF-8 words survive intact.
std::vector<Token> tokenize(std::string_view text);

/// Tokens joined by single spaces; the canonical form used for label lookup.
std::string normalize(std::string_view text);

std::string join_tokens(const std::vector<Token>& tokens, std::size_t first, std::size_t last);

std::string trim(std::string_view text);

/// Text of the QA context node: question and option joined by one space.
std::string context_text(std::string_view question, std::string_view option);

/// 64-bit FNV-1a; stable across platforms and runs.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed = 0);

}  // namespace grapeqa
