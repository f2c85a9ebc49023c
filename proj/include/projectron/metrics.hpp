#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace projectron {

/// Thirteen-character hierarchical code TTTT-DDD-AAA-BBB over the
/// technical, directional, anatomical and biological axes.
class IrmaCode {
 public:
  static constexpr std::size_t kLength = 13;
  static constexpr std::array<std::size_t, 4> kAxisLengths = {4, 3, 3, 3};

  /// Accepts the code with or without hyphens; letters are case-folded.
  static IrmaCode parse(std::string_view text);

  /// The 13 characters without separators.
  const std::string& chars() const { return chars_; }
  std::string axis(std::size_t a) const;
  std::string to_string() const;  // hyphenated

  bool operator==(const IrmaCode&) const = default;

 private:
  std::string chars_;
};

/// Value of a code character: '0'-'9' -> 0-9, 'a'-'z' -> 10-35.
std::size_t irma_symbol_value(char c);

/// Alphabet size b_i for each of the 13 positions.
struct CodeSchema {
  std::array<std::size_t, IrmaCode::kLength> alphabet;

  /// Every position uses the full {0-9, a-z} alphabet.
  static CodeSchema uniform(std::size_t size = 36);
  /// Plain text with exactly 13 whitespace-separated integers, each >= 2.
  static CodeSchema load(const std::filesystem::path& path);
  static CodeSchema parse(std::string_view text);

  void validate() const;
  /// Throws unless every character's value is below its position's b_i.
  void check(const IrmaCode& code) const;
};

/// Sum over positions of (1/b_i) * (1/depth) * g, where depth counts from 1
/// within each axis and g = 1 once a position or any shallower position on
/// the same axis mismatches.
double irma_error(const IrmaCode& query, const IrmaCode& retrieved, const CodeSchema& schema);

/// Upper bound of irma_error under the schema (every g = 1).
double irma_error_bound(const CodeSchema& schema);

/// 1 - (1/n) * sum of irma_error over the pairs.
double irma_total_score(const std::vector<std::pair<IrmaCode, IrmaCode>>& pairs,
                        const CodeSchema& schema, std::size_t n);

class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t classes);

  std::size_t classes() const { return classes_; }
  std::size_t& at(std::size_t truth, std::size_t predicted) {
    return counts_[truth * classes_ + predicted];
  }
  std::size_t at(std::size_t truth, std::size_t predicted) const {
    return counts_[truth * classes_ + predicted];
  }
  std::size_t trace() const;
  std::size_t total() const;
  std::size_t row_sum(std::size_t truth) const;

  /// Header `true\pred,0,1,...`, one row per true class.
  void write_csv(const std::filesystem::path& path) const;

 private:
  std::size_t classes_;
  std::vector<std::size_t> counts_;
};

/// Entry (r, c) counts items whose true label r was predicted as c.
ConfusionMatrix confusion_matrix(const std::vector<std::size_t>& predictions,
                                 const std::vector<std::size_t>& labels, std::size_t classes);

}  // namespace projectron
