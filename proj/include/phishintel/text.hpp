#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

// Unicode helpers shared by the extraction, feature and keyword modules.
// All strings are UTF-8; invalid sequences are treated as U+FFFD.
namespace phishintel::text {

std::string nfc(std::string_view s);

// ASCII-and-Unicode aware case folding, used for keyword matching.
std::string fold_case(std::string_view s);

std::vector<char32_t> decode(std::string_view s);
std::string encode(char32_t cp);
std::string encode(const std::vector<char32_t>& cps);

bool is_letter(char32_t cp);
bool is_decimal_digit(char32_t cp);
bool is_space(char32_t cp);
bool is_punct_or_symbol(char32_t cp);
bool is_katakana(char32_t cp);

enum class Script { latin, han, hiragana, katakana, other };
Script script_of(char32_t cp);

struct CharCounts {
  std::size_t chars = 0;
  std::size_t digits = 0;
  std::size_t symbols = 0;  // neither letter, decimal digit, nor whitespace
};
CharCounts count_chars(std::string_view s);

// Whitespace-delimited tokens.
std::size_t count_words_whitespace(std::string_view s);

// Maximal runs of same-script word characters; punctuation, symbols and
// whitespace separate runs. Used for Japanese where words are not spaced.
std::size_t count_words_script_runs(std::string_view s);

std::vector<std::string> split_whitespace(std::string_view s);

bool contains_folded(std::string_view haystack_folded, std::string_view needle_folded);

}  // namespace phishintel::text
