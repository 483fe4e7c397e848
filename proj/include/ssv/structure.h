#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ssv/numerics.h"

namespace ssv {

enum class BlockKind { kRepeatedScalar, kFull };

struct Block {
  BlockKind kind = BlockKind::kFull;
  int size = 1;

  friend bool operator==(const Block&, const Block&) = default;
};

/// Malformed problem-file syntax.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Well-formed input that violates a structural rule (sizes, block order).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Ordered uncertainty structure: S repeated-scalar blocks delta_j I followed
/// by F full blocks Delta_j, with block sizes summing to n.
class BlockStructure {
 public:
  BlockStructure() = default;
  /// Throws ValidationError on an empty list, a nonpositive size, or a
  /// repeated-scalar block after a full block.
  explicit BlockStructure(std::vector<Block> blocks);

  static BlockStructure Full(std::vector<int> sizes);

  const std::vector<Block>& blocks() const { return blocks_; }
  int num_blocks() const { return static_cast<int>(blocks_.size()); }
  int n() const { return n_; }
  int num_scalar() const { return num_scalar_; }
  int num_full() const { return num_blocks() - num_scalar_; }
  bool full_only() const { return num_scalar_ == 0; }
  /// First row of block j.
  int offset(int j) const { return offsets_[j]; }
  int size(int j) const { return blocks_[j].size; }
  /// Index of the block that owns row i.
  int block_of_row(int i) const;

  friend bool operator==(const BlockStructure& a, const BlockStructure& b) {
    return a.blocks_ == b.blocks_;
  }

 private:
  std::vector<Block> blocks_;
  std::vector<int> offsets_;
  int n_ = 0;
  int num_scalar_ = 0;
};

struct Problem {
  ComplexMatrix matrix;
  BlockStructure structure;
};

/// Builds a validated Problem; throws ValidationError when the matrix is not
/// n x n for the structure's n.
Problem make_problem(ComplexMatrix matrix, BlockStructure structure);

/// Parses a JSON problem file. Imaginary parts that are omitted are zero.
Problem parse_problem(std::string_view text);

/// Serializes to the row form of the problem-file format. Real entries are
/// written as bare numbers, complex ones as [re, im].
std::string serialize_problem(const Problem& problem);

/// Splits the rows of W into the per-block row slices W_1, ..., W_{S+F}.
std::vector<ComplexMatrix> block_rows(const BlockStructure& structure,
                                      const ComplexMatrix& w);

}  // namespace ssv
