#include "projectron/metrics.hpp"

#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "projectron/io_util.hpp"

namespace projectron {

std::size_t irma_symbol_value(char c) {
  if (c >= '0' && c <= '9') return static_cast<std::size_t>(c - '0');
  if (c >= 'a' && c <= 'z') return 10 + static_cast<std::size_t>(c - 'a');
  throw std::invalid_argument(std::string("invalid IRMA character '") + c + "'");
}

IrmaCode IrmaCode::parse(std::string_view text) {
  IrmaCode code;
  for (char c : text) {
    if (c == '-') continue;
    const char lower = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    irma_symbol_value(lower);
    code.chars_.push_back(lower);
  }
  if (code.chars_.size() != kLength) {
    throw std::invalid_argument("IRMA code '" + std::string(text) + "' has " +
                                std::to_string(code.chars_.size()) +
                                " characters, expected 13");
  }
  // With hyphens they must sit exactly between the axes.
  if (text.size() != kLength) {
    if (text.size() != kLength + 3 || text[4] != '-' || text[8] != '-' || text[12] != '-') {
      throw std::invalid_argument("malformed IRMA code '" + std::string(text) +
                                  "', expected TTTT-DDD-AAA-BBB");
    }
  }
  return code;
}

std::string IrmaCode::axis(std::size_t a) const {
  std::size_t offset = 0;
  for (std::size_t i = 0; i < a; ++i) offset += kAxisLengths.at(i);
  return chars_.substr(offset, kAxisLengths.at(a));
}

std::string IrmaCode::to_string() const {
  return axis(0) + '-' + axis(1) + '-' + axis(2) + '-' + axis(3);
}

CodeSchema CodeSchema::uniform(std::size_t size) {
  CodeSchema s;
  s.alphabet.fill(size);
  s.validate();
  return s;
}

CodeSchema CodeSchema::parse(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::vector<long long> values;
  std::string token;
  while (in >> token) {
    std::size_t used = 0;
    long long v = 0;
    try {
      v = std::stoll(token, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != token.size()) {
      throw std::invalid_argument("schema entry '" + token + "' is not an integer");
    }
    values.push_back(v);
  }
  if (values.size() != IrmaCode::kLength) {
    throw std::invalid_argument("schema has " + std::to_string(values.size()) +
                                " entries, expected 13");
  }
  CodeSchema s;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] < 2) {
      throw std::invalid_argument("schema entry " + std::to_string(i) + " must be >= 2");
    }
    s.alphabet[i] = static_cast<std::size_t>(values[i]);
  }
  return s;
}

CodeSchema CodeSchema::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open schema file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse(buf.str());
  } catch (const std::exception& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
}

void CodeSchema::validate() const {
  for (std::size_t i = 0; i < alphabet.size(); ++i) {
    if (alphabet[i] < 2) {
      throw std::invalid_argument("schema position " + std::to_string(i) +
                                  " has alphabet size < 2");
    }
  }
}

void CodeSchema::check(const IrmaCode& code) const {
  for (std::size_t i = 0; i < IrmaCode::kLength; ++i) {
    if (irma_symbol_value(code.chars()[i]) >= alphabet[i]) {
      throw std::invalid_argument("code " + code.to_string() + ": character '" +
                                  code.chars()[i] + "' at position " + std::to_string(i) +
                                  " exceeds alphabet size " + std::to_string(alphabet[i]));
    }
  }
}

double irma_error(const IrmaCode& query, const IrmaCode& retrieved, const CodeSchema& schema) {
  schema.validate();
  schema.check(query);
  schema.check(retrieved);
  double error = 0.0;
  std::size_t pos = 0;
  for (std::size_t len : IrmaCode::kAxisLengths) {
    bool wrong = false;
    for (std::size_t depth = 1; depth <= len; ++depth, ++pos) {
      wrong = wrong || query.chars()[pos] != retrieved.chars()[pos];
      const double g = wrong ? 1.0 : 0.0;
      error += (1.0 / static_cast<double>(schema.alphabet[pos])) *
               (1.0 / static_cast<double>(depth)) * g;
    }
  }
  return error;
}

double irma_error_bound(const CodeSchema& schema) {
  double bound = 0.0;
  std::size_t pos = 0;
  for (std::size_t len : IrmaCode::kAxisLengths) {
    for (std::size_t depth = 1; depth <= len; ++depth, ++pos) {
      bound += (1.0 / static_cast<double>(schema.alphabet[pos])) *
               (1.0 / static_cast<double>(depth));
    }
  }
  return bound;
}

double irma_total_score(const std::vector<std::pair<IrmaCode, IrmaCode>>& pairs,
                        const CodeSchema& schema, std::size_t n) {
  if (pairs.empty()) throw std::invalid_argument("irma_total_score: no pairs");
  if (n < pairs.size()) {
    throw std::invalid_argument("irma_total_score: denominator " + std::to_string(n) +
                                " smaller than pair count " + std::to_string(pairs.size()));
  }
  double sum = 0.0;
  for (const auto& [q, r] : pairs) sum += irma_error(q, r, schema);
  return 1.0 - sum / static_cast<double>(n);
}

ConfusionMatrix::ConfusionMatrix(std::size_t classes)
    : classes_(classes), counts_(classes * classes, 0) {}

std::size_t ConfusionMatrix::trace() const {
  std::size_t t = 0;
  for (std::size_t c = 0; c < classes_; ++c) t += at(c, c);
  return t;
}

std::size_t ConfusionMatrix::total() const {
  std::size_t t = 0;
  for (std::size_t v : counts_) t += v;
  return t;
}

std::size_t ConfusionMatrix::row_sum(std::size_t truth) const {
  std::size_t t = 0;
  for (std::size_t c = 0; c < classes_; ++c) t += at(truth, c);
  return t;
}

void ConfusionMatrix::write_csv(const std::filesystem::path& path) const {
  auto out = open_for_write(path);
  out << "true\\pred";
  for (std::size_t c = 0; c < classes_; ++c) out << ',' << c;
  out << '\n';
  for (std::size_t r = 0; r < classes_; ++r) {
    out << r;
    for (std::size_t c = 0; c < classes_; ++c) out << ',' << at(r, c);
    out << '\n';
  }
  finish_write(out, path);
}

ConfusionMatrix confusion_matrix(const std::vector<std::size_t>& predictions,
                                 const std::vector<std::size_t>& labels, std::size_t classes) {
  if (predictions.size() != labels.size()) {
    throw std::invalid_argument("confusion_matrix: " + std::to_string(predictions.size()) +
                                " predictions vs " + std::to_string(labels.size()) + " labels");
  }
  ConfusionMatrix m(classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= classes || predictions[i] >= classes) {
      throw std::out_of_range("confusion_matrix: class index out of range at item " +
                              std::to_string(i));
    }
    ++m.at(labels[i], predictions[i]);
  }
  return m;
}

}  // namespace projectron
