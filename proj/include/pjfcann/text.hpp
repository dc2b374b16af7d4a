// Tokenisation, vocabulary, and padded sentence batches.
#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "pjfcann/tensor.hpp"

namespace pjfcann {

using TokenSentence = std::vector<std::string>;

/// Lowercased whitespace tokens with surrounding punctuation stripped.
/// Sentence boundaries fall after tokens ending in '.', ';', '!' or '?'.
inline std::vector<TokenSentence> split_sentences(const std::string& text) {
  std::vector<TokenSentence> out(1);
  std::istringstream is(text);
  std::string raw;
  while (is >> raw) {
    bool boundary = false;
    const char last = raw.back();
    if (last == '.' || last == ';' || last == '!' || last == '?') {
      boundary = true;
    }
    std::string tok;
    for (char c : raw) {
      tok.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    auto is_punct = [](char c) {
      return std::ispunct(static_cast<unsigned char>(c)) && c != '_' &&
             c != '+' && c != '#';
    };
    while (!tok.empty() && is_punct(tok.back())) tok.pop_back();
    std::size_t lead = 0;
    while (lead < tok.size() && is_punct(tok[lead])) ++lead;
    tok.erase(0, lead);
    if (!tok.empty()) out.back().push_back(tok);
    if (boundary && !out.back().empty()) out.emplace_back();
  }
  if (out.back().empty()) out.pop_back();
  return out;
}

/// All tokens of a text, ignoring sentence boundaries.
inline TokenSentence tokenize(const std::string& text) {
  TokenSentence all;
  for (auto& s : split_sentences(text)) all.insert(all.end(), s.begin(), s.end());
  return all;
}

/// Whitespace word count after lowercasing.
inline std::size_t word_count(const std::string& text) {
  std::istringstream is(text);
  std::string w;
  std::size_t n = 0;
  while (is >> w) ++n;
  return n;
}

/// Token <-> index map. Index 0 is padding and index 1 is the unknown token;
/// known tokens take indices 2.. in lexicographic order.
class Vocabulary {
 public:
  static constexpr std::size_t kPad = 0;
  static constexpr std::size_t kUnknown = 1;

  Vocabulary() : tokens_{"<pad>", "<unk>"} {}

  template <typename Range>
  static Vocabulary build(const Range& sentences, std::size_t min_frequency) {
    std::map<std::string, std::size_t> counts;
    for (const auto& s : sentences)
      for (const auto& tok : s) ++counts[tok];
    Vocabulary v;
    for (const auto& [tok, n] : counts) {
      if (n >= min_frequency) v.push(tok);
    }
    return v;
  }

  static Vocabulary from_tokens(const std::vector<std::string>& tokens) {
    if (tokens.size() < 2 || tokens[0] != "<pad>" || tokens[1] != "<unk>") {
      throw std::invalid_argument(
          "vocabulary must start with <pad> and <unk>");
    }
    Vocabulary v;
    for (std::size_t i = 2; i < tokens.size(); ++i) v.push(tokens[i]);
    return v;
  }

  std::size_t size() const { return tokens_.size(); }
  std::size_t index(const std::string& token) const {
    auto it = index_.find(token);
    return it == index_.end() ? kUnknown : it->second;
  }
  const std::string& token(std::size_t i) const { return tokens_.at(i); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  std::vector<std::size_t> encode(const TokenSentence& s) const {
    std::vector<std::size_t> out;
    out.reserve(s.size());
    for (const auto& t : s) out.push_back(index(t));
    return out;
  }

  /// FNV-1a over the token list; stored in checkpoints.
  std::uint64_t hash() const {
    std::uint64_t h = 1469598103934665603ull;
    for (const auto& t : tokens_) {
      for (unsigned char c : t) {
        h ^= c;
        h *= 1099511628211ull;
      }
      h ^= 0xff;
      h *= 1099511628211ull;
    }
    return h;
  }

 private:
  void push(const std::string& tok) {
    if (index_.count(tok)) {
      throw std::invalid_argument("duplicate vocabulary token: " + tok);
    }
    index_[tok] = tokens_.size();
    tokens_.push_back(tok);
  }

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Token indices padded to a common length.
struct SentenceBatch {
  std::size_t max_len = 0;
  std::vector<std::size_t> tokens;   // batch * max_len, row-major
  std::vector<std::size_t> lengths;  // true length per row

  std::size_t batch() const { return lengths.size(); }

  static SentenceBatch from(const std::vector<std::vector<std::size_t>>& rows,
                            std::size_t pad_to = 0) {
    SentenceBatch b;
    b.max_len = pad_to;
    for (const auto& r : rows) b.max_len = std::max(b.max_len, r.size());
    if (rows.empty() || b.max_len == 0) {
      throw std::invalid_argument("sentence batch: no tokens");
    }
    for (const auto& r : rows) {
      b.lengths.push_back(r.size());
      b.tokens.insert(b.tokens.end(), r.begin(), r.end());
      b.tokens.insert(b.tokens.end(), b.max_len - r.size(), Vocabulary::kPad);
    }
    return b;
  }
};

/// Reads "token v1 v2 ..." lines into the rows of `table` [V x dim] for
/// tokens present in `vocab`. Returns the number of rows filled.
inline std::size_t load_pretrained_embeddings(const std::string& path,
                                              const Vocabulary& vocab,
                                              Tensor& table) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open embedding file " + path);
  const std::size_t dim = table.cols();
  std::string line;
  std::size_t line_no = 0, filled = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream is(line);
    std::string tok;
    if (!(is >> tok)) continue;
    std::vector<double> vals;
    double v;
    while (is >> v) vals.push_back(v);
    if (!is.eof()) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": malformed number");
    }
    if (vals.size() != dim) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": expected " + std::to_string(dim) +
                               " values, got " + std::to_string(vals.size()));
    }
    const std::size_t idx = vocab.index(tok);
    if (idx < 2) continue;
    std::copy(vals.begin(), vals.end(), table.data.begin() + idx * dim);
    ++filled;
  }
  return filled;
}

}  // namespace pjfcann
