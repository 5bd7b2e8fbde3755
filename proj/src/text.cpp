#include "phishintel/text.hpp"

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/uscript.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include <stdexcept>

namespace phishintel::text {

std::string nfc(std::string_view s) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* norm = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) throw std::runtime_error("ICU NFC normalizer unavailable");
  icu::UnicodeString src = icu::UnicodeString::fromUTF8(icu::StringPiece(s.data(), static_cast<int32_t>(s.size())));
  if (norm->isNormalized(src, status) && U_SUCCESS(status)) return std::string(s);
  status = U_ZERO_ERROR;
  icu::UnicodeString out = norm->normalize(src, status);
  if (U_FAILURE(status)) return std::string(s);
  std::string result;
  out.toUTF8String(result);
  return result;
}

std::string fold_case(std::string_view s) {
  icu::UnicodeString u = icu::UnicodeString::fromUTF8(icu::StringPiece(s.data(), static_cast<int32_t>(s.size())));
  u.foldCase();
  std::string out;
  u.toUTF8String(out);
  return out;
}

std::vector<char32_t> decode(std::string_view s) {
  std::vector<char32_t> cps;
  cps.reserve(s.size());
  const auto* p = reinterpret_cast<const uint8_t*>(s.data());
  int32_t i = 0;
  const auto len = static_cast<int32_t>(s.size());
  while (i < len) {
    UChar32 c;
    U8_NEXT(p, i, len, c);
    cps.push_back(c < 0 ? 0xFFFD : static_cast<char32_t>(c));
  }
  return cps;
}

std::string encode(char32_t cp) {
  std::string out;
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
  return out;
}

std::string encode(const std::vector<char32_t>& cps) {
  std::string out;
  out.reserve(cps.size());
  for (char32_t cp : cps) out += encode(cp);
  return out;
}

bool is_letter(char32_t cp) { return u_isalpha(static_cast<UChar32>(cp)); }

bool is_decimal_digit(char32_t cp) { return u_charType(static_cast<UChar32>(cp)) == U_DECIMAL_DIGIT_NUMBER; }

bool is_space(char32_t cp) { return u_isUWhiteSpace(static_cast<UChar32>(cp)); }

bool is_punct_or_symbol(char32_t cp) { return !is_letter(cp) && !is_decimal_digit(cp) && !is_space(cp); }

bool is_katakana(char32_t cp) {
  // U+30FC (prolonged sound mark) is script Common but belongs inside katakana words.
  if (cp == 0x30FC) return true;
  UErrorCode status = U_ZERO_ERROR;
  return uscript_getScript(static_cast<UChar32>(cp), &status) == USCRIPT_KATAKANA && U_SUCCESS(status);
}

Script script_of(char32_t cp) {
  if (cp == 0x30FC) return Script::katakana;
  UErrorCode status = U_ZERO_ERROR;
  UScriptCode sc = uscript_getScript(static_cast<UChar32>(cp), &status);
  if (U_FAILURE(status)) return Script::other;
  switch (sc) {
    case USCRIPT_LATIN: return Script::latin;
    case USCRIPT_HAN: return Script::han;
    case USCRIPT_HIRAGANA: return Script::hiragana;
    case USCRIPT_KATAKANA: return Script::katakana;
    default: return Script::other;
  }
}

CharCounts count_chars(std::string_view s) {
  CharCounts c;
  for (char32_t cp : decode(s)) {
    ++c.chars;
    if (is_decimal_digit(cp)) {
      ++c.digits;
    } else if (!is_letter(cp) && !is_space(cp)) {
      ++c.symbols;
    }
  }
  return c;
}

std::size_t count_words_whitespace(std::string_view s) {
  std::size_t n = 0;
  bool in_word = false;
  for (char32_t cp : decode(s)) {
    if (is_space(cp)) {
      in_word = false;
    } else if (!in_word) {
      in_word = true;
      ++n;
    }
  }
  return n;
}

std::size_t count_words_script_runs(std::string_view s) {
  std::size_t n = 0;
  bool in_run = false;
  Script current = Script::other;
  for (char32_t cp : decode(s)) {
    const bool word_char = is_letter(cp) || is_decimal_digit(cp) || cp == 0x30FC;
    if (!word_char) {
      in_run = false;
      continue;
    }
    // Digits join whatever run they appear in.
    Script sc = is_decimal_digit(cp) ? (in_run ? current : Script::latin) : script_of(cp);
    if (!in_run || sc != current) {
      ++n;
      in_run = true;
      current = sc;
    }
  }
  return n;
}

std::vector<std::string> split_whitespace(std::string_view s) {
  std::vector<std::string> out;
  std::vector<char32_t> cur;
  for (char32_t cp : decode(s)) {
    if (is_space(cp)) {
      if (!cur.empty()) out.push_back(encode(cur));
      cur.clear();
    } else {
      cur.push_back(cp);
    }
  }
  if (!cur.empty()) out.push_back(encode(cur));
  return out;
}

bool contains_folded(std::string_view haystack_folded, std::string_view needle_folded) {
  if (needle_folded.empty()) return false;
  return haystack_folded.find(needle_folded) != std::string_view::npos;
}

}  // namespace phishintel::text
