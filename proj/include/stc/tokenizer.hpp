#pragma once

// Rule-based word tokenizer for raw text.
//
// Rules, applied in order:
//   1. split on ASCII whitespace;
//   2. peel leading and trailing punctuation off each chunk; a run of the
//      same punctuation character ("...", "--", "!!") stays one token,
//      different characters become separate tokens;
//   3. split an English contraction suffix ('s 't 're 've 'll 'd 'm) off the
//      remaining core: "Don't" -> "Don", "'t".
// Case is preserved and nothing is stemmed or dropped. Bytes outside ASCII
// are treated as word characters.

#include <algorithm>
#include <array>
#include <cctype>
#include <string>
#include <string_view>
#include <vector>

namespace stc {

namespace detail {

inline bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
inline bool is_punct(char c) {
  auto u = static_cast<unsigned char>(c);
  return u < 128 && std::ispunct(u) != 0;
}

inline bool is_contraction_suffix(std::string_view s) {
  static constexpr std::array<std::string_view, 7> kSuffixes = {"s", "t", "re", "ve", "ll", "d", "m"};
  if (s.empty() || s.size() > 2) return false;
  std::string lower(s);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return std::find(kSuffixes.begin(), kSuffixes.end(), lower) != kSuffixes.end();
}

inline void tokenize_chunk(std::string_view chunk, std::vector<std::string>& out) {
  std::size_t lo = 0;
  std::size_t hi = chunk.size();
  while (lo < hi && is_punct(chunk[lo])) {
    std::size_t run = lo + 1;
    while (run < hi && chunk[run] == chunk[lo]) ++run;
    out.emplace_back(chunk.substr(lo, run - lo));
    lo = run;
  }
  std::vector<std::string> tail;
  while (hi > lo && is_punct(chunk[hi - 1])) {
    std::size_t run = hi - 1;
    while (run > lo && chunk[run - 1] == chunk[hi - 1]) --run;
    tail.emplace_back(chunk.substr(run, hi - run));
    hi = run;
  }
  if (hi > lo) {
    std::string_view core = chunk.substr(lo, hi - lo);
    auto apos = core.rfind('\'');
    if (apos != std::string_view::npos && apos > 0 && is_contraction_suffix(core.substr(apos + 1))) {
      out.emplace_back(core.substr(0, apos));
      out.emplace_back(core.substr(apos));
    } else {
      out.emplace_back(core);
    }
  }
  out.insert(out.end(), tail.rbegin(), tail.rend());
}

}  // namespace detail

inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::size_t k = 0;
  while (k < text.size()) {
    while (k < text.size() && detail::is_space(text[k])) ++k;
    std::size_t start = k;
    while (k < text.size() && !detail::is_space(text[k])) ++k;
    if (k > start) detail::tokenize_chunk(text.substr(start, k - start), out);
  }
  return out;
}

}  // namespace stc
