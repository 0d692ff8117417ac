#include "chessrl/prompt/output_parser.hpp"

#include <array>
#include <cctype>
#include <cstdint>
#include <vector>

#include "chessrl/chess/notation.hpp"
#include "chessrl/errors.hpp"

namespace chessrl::prompt {

namespace {

constexpr std::array<std::string_view, 5> kEndMarkers = {"<|endoftext|>", "<|im_end|>", "<|eot_id|>",
                                                         "<|end_of_text|>", "</s>"};

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

bool blank(std::string_view s) { return trim(s).empty(); }

std::vector<std::size_t> find_all(std::string_view text, std::string_view needle) {
  std::vector<std::size_t> out;
  for (std::size_t pos = text.find(needle); pos != std::string_view::npos; pos = text.find(needle, pos + 1))
    out.push_back(pos);
  return out;
}

// Decodes one UTF-8 sequence; malformed input yields U+FFFD and advances one byte.
std::uint32_t next_codepoint(std::string_view s, std::size_t& i) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  auto cont = [&](std::size_t k) {
    return i + k < s.size() && (static_cast<unsigned char>(s[i + k]) & 0xC0) == 0x80;
  };
  auto byte = [&](std::size_t k) { return static_cast<std::uint32_t>(static_cast<unsigned char>(s[i + k]) & 0x3F); };
  if (b0 < 0x80) {
    ++i;
    return b0;
  }
  if ((b0 & 0xE0) == 0xC0 && cont(1)) {
    const std::uint32_t cp = ((b0 & 0x1Fu) << 6) | byte(1);
    i += 2;
    return cp;
  }
  if ((b0 & 0xF0) == 0xE0 && cont(1) && cont(2)) {
    const std::uint32_t cp = ((b0 & 0x0Fu) << 12) | (byte(1) << 6) | byte(2);
    i += 3;
    return cp;
  }
  if ((b0 & 0xF8) == 0xF0 && cont(1) && cont(2) && cont(3)) {
    const std::uint32_t cp = ((b0 & 0x07u) << 18) | (byte(1) << 12) | (byte(2) << 6) | byte(3);
    i += 4;
    return cp;
  }
  ++i;
  return 0xFFFD;
}

bool forbidden_script(std::uint32_t cp) {
  struct Range {
    std::uint32_t lo, hi;
  };
  static constexpr Range kRanges[] = {
      {0x0400, 0x052F},    // Cyrillic
      {0x1C80, 0x1C8F},    // Cyrillic ext-C
      {0x2DE0, 0x2DFF},    // Cyrillic ext-A
      {0xA640, 0xA69F},    // Cyrillic ext-B
      {0x0600, 0x06FF},    // Arabic
      {0x0750, 0x077F},    // Arabic supplement
      {0x08A0, 0x08FF},    // Arabic ext-A
      {0xFB50, 0xFDFF},    // Arabic presentation A
      {0xFE70, 0xFEFF},    // Arabic presentation B
      {0x1100, 0x11FF},    // Hangul jamo
      {0x2E80, 0x2FDF},    // CJK radicals
      {0x3000, 0x30FF},    // CJK punctuation, kana
      {0x3100, 0x31FF},    // Bopomofo, Hangul compat, kana ext
      {0x3400, 0x4DBF},    // CJK ext A
      {0x4E00, 0x9FFF},    // CJK unified
      {0xAC00, 0xD7AF},    // Hangul syllables
      {0xF900, 0xFAFF},    // CJK compatibility
      {0xFF00, 0xFFEF},    // full-width forms
      {0x20000, 0x2FA1F},  // CJK ext B..
  };
  for (const auto& r : kRanges)
    if (cp >= r.lo && cp <= r.hi) return true;
  return false;
}

std::string_view strip_end_markers(std::string_view text) {
  bool changed = true;
  while (changed) {
    changed = false;
    text = trim(text);
    for (auto marker : kEndMarkers) {
      if (text.size() >= marker.size() && text.substr(text.size() - marker.size()) == marker) {
        text.remove_suffix(marker.size());
        changed = true;
      }
    }
  }
  return text;
}

bool is_move_number(std::string_view tok) {
  std::size_t i = 0;
  while (i < tok.size() && std::isdigit(static_cast<unsigned char>(tok[i]))) ++i;
  if (i == 0) return false;
  while (i < tok.size() && tok[i] == '.') ++i;
  return i == tok.size();
}

std::string_view strip_punctuation(std::string_view tok) {
  auto lead = [](char c) { return c == '"' || c == '\'' || c == '`' || c == '(' || c == '[' || c == '*' || c == '<'; };
  auto tail = [](char c) {
    return c == '"' || c == '\'' || c == '`' || c == ')' || c == ']' || c == '*' || c == '.' || c == ',' ||
           c == ';' || c == ':' || c == '>';
  };
  while (!tok.empty() && lead(tok.front())) tok.remove_prefix(1);
  while (!tok.empty() && tail(tok.back())) tok.remove_suffix(1);
  // "17...Qxd5" / "1.e4"
  std::size_t i = 0;
  while (i < tok.size() && std::isdigit(static_cast<unsigned char>(tok[i]))) ++i;
  if (i > 0 && i < tok.size() && tok[i] == '.') {
    while (i < tok.size() && tok[i] == '.') ++i;
    tok.remove_prefix(i);
  }
  return tok;
}

}  // namespace

bool looks_english(std::string_view utf8) {
  std::size_t total = 0;
  std::size_t ascii = 0;
  std::size_t i = 0;
  while (i < utf8.size()) {
    const std::uint32_t cp = next_codepoint(utf8, i);
    if (forbidden_script(cp)) return false;
    ++total;
    if (cp < 0x80) ++ascii;
  }
  if (total == 0) return false;
  return ascii * 100 >= total * 95;
}

ParsedOutput parse_output(std::string_view raw, const ParseOptions& options) {
  const std::string_view text = strip_end_markers(raw);
  ParsedOutput out;

  const auto think_open = find_all(text, "<think>");
  const auto think_close = find_all(text, "</think>");
  const auto answer_open = find_all(text, "<answer>");
  const auto answer_close = find_all(text, "</answer>");

  const bool implied_open = options.think_opened_by_prompt && think_open.empty();

  // Spans are taken from the first complete block even when the overall
  // structure is malformed, so diagnostics can still show them.
  if (!think_close.empty()) {
    if (!think_open.empty() && think_open.front() < think_close.front()) {
      const std::size_t b = think_open.front() + 7;
      out.think_text = std::string(trim(text.substr(b, think_close.front() - b)));
    } else if (implied_open) {
      out.think_text = std::string(trim(text.substr(0, think_close.front())));
    }
  }
  for (std::size_t a : answer_open) {
    auto close = std::find_if(answer_close.begin(), answer_close.end(), [&](std::size_t c) { return c > a; });
    if (close != answer_close.end()) {
      const std::size_t b = a + 8;
      out.answer_text = std::string(trim(text.substr(b, *close - b)));
      break;
    }
  }

  const std::size_t opens = think_open.size() + (implied_open ? 1 : 0);
  bool ok = opens == 1 && think_close.size() == 1 && answer_open.size() == 1 && answer_close.size() == 1;
  if (ok) {
    const std::size_t t_open = implied_open ? 0 : think_open.front();
    const std::size_t t_close = think_close.front();
    const std::size_t a_open = answer_open.front();
    const std::size_t a_close = answer_close.front();
    ok = (implied_open || t_open < t_close) && t_close < a_open && a_open < a_close;
    if (ok && !implied_open) ok = blank(text.substr(0, t_open));
    if (ok) ok = blank(text.substr(a_close + 9));
  }
  out.format_ok = ok;
  out.english_ok = looks_english(out.think_text + out.answer_text);
  return out;
}

std::optional<chess::Move> extract_move(const ParsedOutput& parsed, const chess::Position& pos,
                                        const PromptConfig& cfg) {
  std::string_view rest = trim(parsed.answer_text);
  std::string_view token;
  while (!rest.empty()) {
    std::size_t end = 0;
    while (end < rest.size() && !is_space(rest[end])) ++end;
    token = rest.substr(0, end);
    rest = trim(rest.substr(end));
    if (!is_move_number(token)) break;
    token = {};
  }
  token = strip_punctuation(token);
  if (token.empty()) return std::nullopt;
  try {
    return cfg.notation == MoveNotation::San ? chess::parse_san(pos, token) : chess::parse_uci_move(pos, token);
  } catch (const Error&) {
    return std::nullopt;
  }
}

std::string format_answer(std::string_view think, std::string_view answer) {
  std::string out = "<think>";
  out += think;
  out += "</think> <answer>";
  out += answer;
  out += "</answer>";
  return out;
}

}  // namespace chessrl::prompt
