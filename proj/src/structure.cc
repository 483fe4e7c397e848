#include "ssv/structure.h"

#include <cctype>
#include <cmath>
#include <cstdlib>

#include <nlohmann/json.hpp>

namespace ssv {

using nlohmann::json;

BlockStructure::BlockStructure(std::vector<Block> blocks)
    : blocks_(std::move(blocks)) {
  if (blocks_.empty()) {
    throw ValidationError("structure must contain at least one block");
  }
  bool seen_full = false;
  for (const Block& b : blocks_) {
    if (b.size < 1) {
      throw ValidationError("block size must be positive, got " +
                            std::to_string(b.size));
    }
    if (b.kind == BlockKind::kFull) {
      seen_full = true;
    } else {
      if (seen_full) {
        throw ValidationError(
            "repeated-scalar blocks must precede all full blocks");
      }
      ++num_scalar_;
    }
    offsets_.push_back(n_);
    n_ += b.size;
  }
}

BlockStructure BlockStructure::Full(std::vector<int> sizes) {
  std::vector<Block> blocks;
  for (int s : sizes) blocks.push_back({BlockKind::kFull, s});
  return BlockStructure(std::move(blocks));
}

int BlockStructure::block_of_row(int i) const {
  for (int j = num_blocks() - 1; j >= 0; --j) {
    if (i >= offsets_[j]) return j;
  }
  throw std::out_of_range("row index outside structure");
}

Problem make_problem(ComplexMatrix matrix, BlockStructure structure) {
  if (matrix.rows() != matrix.cols()) {
    throw ValidationError("matrix must be square");
  }
  if (matrix.rows() != structure.n()) {
    throw ValidationError("block sizes sum to " + std::to_string(structure.n()) +
                          " but the matrix is " + std::to_string(matrix.rows()) +
                          "x" + std::to_string(matrix.cols()));
  }
  return Problem{std::move(matrix), std::move(structure)};
}

namespace {

// Tiny grammar for exact-looking real constants in fixtures:
//   expr   := ['-'] factor (('*' | '/') factor)*
//   factor := number | 'sqrt' '(' expr ')' | '(' expr ')'
class ScalarExpr {
 public:
  explicit ScalarExpr(std::string_view text) : text_(text) {}

  double parse() {
    const double v = expr();
    skip_ws();
    if (pos_ != text_.size()) fail("trailing characters");
    return v;
  }

 private:
  double expr() {
    skip_ws();
    double sign = 1.0;
    if (peek() == '-') {
      sign = -1.0;
      ++pos_;
    } else if (peek() == '+') {
      ++pos_;
    }
    double v = factor();
    for (;;) {
      skip_ws();
      const char c = peek();
      if (c == '*') {
        ++pos_;
        v *= factor();
      } else if (c == '/') {
        ++pos_;
        v /= factor();
      } else {
        break;
      }
    }
    return sign * v;
  }

  double factor() {
    skip_ws();
    if (text_.substr(pos_, 4) == "sqrt") {
      pos_ += 4;
      expect('(');
      const double v = expr();
      expect(')');
      if (v < 0) fail("sqrt of a negative number");
      return std::sqrt(v);
    }
    if (peek() == '(') {
      ++pos_;
      const double v = expr();
      expect(')');
      return v;
    }
    const std::string rest(text_.substr(pos_));
    char* end = nullptr;
    const double v = std::strtod(rest.c_str(), &end);
    if (end == rest.c_str()) fail("expected a number");
    pos_ += static_cast<size_t>(end - rest.c_str());
    return v;
  }

  void expect(char c) {
    skip_ws();
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }
  char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }
  void skip_ws() {
    while (pos_ < text_.size() &&
           std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      ++pos_;
    }
  }
  [[noreturn]] void fail(const std::string& why) const {
    throw ParseError("bad scalar expression \"" + std::string(text_) +
                     "\": " + why);
  }

  std::string_view text_;
  size_t pos_ = 0;
};

double parse_real(const json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) return ScalarExpr(j.get_ref<const std::string&>()).parse();
  throw ParseError("expected a number or scalar expression, got " + j.dump());
}

Complex parse_entry(const json& j) {
  if (j.is_array()) {
    if (j.size() != 2) {
      throw ParseError("complex entry must be [re, im], got " + j.dump());
    }
    return {parse_real(j[0]), parse_real(j[1])};
  }
  return {parse_real(j), 0.0};
}

Eigen::MatrixXcd parse_rows(const json& obj) {
  if (!obj.is_object() || !obj.contains("rows")) {
    throw ParseError("matrix object must contain \"rows\"");
  }
  const json& rows = obj.at("rows");
  if (!rows.is_array() || rows.empty()) {
    throw ParseError("\"rows\" must be a nonempty array");
  }
  const auto m = static_cast<Eigen::Index>(rows.size());
  if (!rows[0].is_array() || rows[0].empty()) {
    throw ParseError("each row must be a nonempty array");
  }
  const auto n = static_cast<Eigen::Index>(rows[0].size());
  Eigen::MatrixXcd out(m, n);
  for (Eigen::Index i = 0; i < m; ++i) {
    const json& row = rows[i];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n) {
      throw ValidationError("ragged matrix: row " + std::to_string(i) +
                            " has a different length");
    }
    for (Eigen::Index k = 0; k < n; ++k) out(i, k) = parse_entry(row[k]);
  }
  if (obj.contains("scale")) out *= parse_real(obj.at("scale"));
  return out;
}

Eigen::MatrixXcd parse_factors(const json& f) {
  if (!f.is_object() || !f.contains("U") || !f.contains("V")) {
    throw ParseError("\"factors\" must contain \"U\" and \"V\"");
  }
  const Eigen::MatrixXcd u = parse_rows(f.at("U"));
  const Eigen::MatrixXcd v = parse_rows(f.at("V"));
  if (u.rows() != v.rows() || u.cols() != v.cols()) {
    throw ValidationError("factors U and V must have the same shape");
  }
  return u * v.adjoint();
}

BlockStructure parse_blocks(const json& blocks) {
  if (!blocks.is_array()) throw ParseError("\"blocks\" must be an array");
  std::vector<Block> out;
  for (const json& b : blocks) {
    if (!b.is_object() || !b.contains("kind") || !b.contains("size")) {
      throw ParseError("each block needs \"kind\" and \"size\"");
    }
    const json& kind = b.at("kind");
    const json& size = b.at("size");
    if (!kind.is_string()) throw ParseError("block kind must be a string");
    if (!size.is_number_integer()) {
      throw ParseError("block size must be an integer");
    }
    Block block;
    const std::string& k = kind.get_ref<const std::string&>();
    if (k == "full") {
      block.kind = BlockKind::kFull;
    } else if (k == "repeated" || k == "repeated-scalar" || k == "scalar") {
      block.kind = BlockKind::kRepeatedScalar;
    } else {
      throw ParseError("unknown block kind \"" + k + "\"");
    }
    block.size = size.get<int>();
    out.push_back(block);
  }
  return BlockStructure(std::move(out));
}

json entry_json(Complex z) {
  if (z.imag() == 0.0) return z.real();
  return json::array({z.real(), z.imag()});
}

}  // namespace

Problem parse_problem(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("problem file must be a JSON object");
  if (!doc.contains("blocks")) throw ParseError("missing \"blocks\"");
  BlockStructure structure = parse_blocks(doc.at("blocks"));

  Eigen::MatrixXcd m;
  if (doc.contains("matrix")) {
    const json& mat = doc.at("matrix");
    if (mat.is_object() && mat.contains("factors")) {
      m = parse_factors(mat.at("factors"));
    } else {
      m = parse_rows(mat);
    }
  } else if (doc.contains("factors")) {
    m = parse_factors(doc.at("factors"));
  } else {
    throw ParseError("missing \"matrix\"");
  }
  return make_problem(ComplexMatrix(std::move(m)), std::move(structure));
}

std::string serialize_problem(const Problem& problem) {
  json blocks = json::array();
  for (const Block& b : problem.structure.blocks()) {
    blocks.push_back({{"kind", b.kind == BlockKind::kFull ? "full" : "repeated"},
                      {"size", b.size}});
  }
  json rows = json::array();
  const ComplexMatrix& m = problem.matrix;
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int k = 0; k < m.cols(); ++k) row.push_back(entry_json(m(i, k)));
    rows.push_back(std::move(row));
  }
  json doc;
  doc["blocks"] = std::move(blocks);
  doc["matrix"] = {{"rows", std::move(rows)}};
  return doc.dump();
}

std::vector<ComplexMatrix> block_rows(const BlockStructure& structure,
                                      const ComplexMatrix& w) {
  if (w.rows() != structure.n()) {
    throw std::invalid_argument("block_rows: matrix has " +
                                std::to_string(w.rows()) + " rows, expected " +
                                std::to_string(structure.n()));
  }
  std::vector<ComplexMatrix> out;
  out.reserve(structure.num_blocks());
  for (int j = 0; j < structure.num_blocks(); ++j) {
    out.emplace_back(Eigen::MatrixXcd(
        w.entries().middleRows(structure.offset(j), structure.size(j))));
  }
  return out;
}

}  // namespace ssv
