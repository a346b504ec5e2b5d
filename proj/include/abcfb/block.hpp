#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "abcfb/errors.hpp"

namespace abcfb {

// Partition of R^N into m contiguous blocks. Block i occupies the index range
// [offset(i), offset(i) + dim(i)).
class BlockLayout {
 public:
  BlockLayout() = default;
  explicit BlockLayout(std::vector<std::size_t> dims);

  // m blocks of one coordinate each.
  static BlockLayout scalars(std::size_t m);
  // m blocks of d coordinates each.
  static BlockLayout uniform(std::size_t m, std::size_t d);

  std::size_t blocks() const { return dims_.size(); }
  std::size_t total() const { return total_; }
  std::size_t dim(std::size_t i) const { return dims_[i]; }
  std::size_t offset(std::size_t i) const { return offsets_[i]; }

  bool operator==(const BlockLayout& other) const = default;

 private:
  std::vector<std::size_t> dims_;
  std::vector<std::size_t> offsets_;
  std::size_t total_ = 0;
};

// A point of R^N stored flat and addressed through a BlockLayout.
class BlockVector {
 public:
  BlockVector() = default;
  explicit BlockVector(BlockLayout layout);  // zero-initialized
  BlockVector(BlockLayout layout, std::vector<double> values);

  const BlockLayout& layout() const { return layout_; }
  std::size_t size() const { return values_.size(); }
  std::size_t blocks() const { return layout_.blocks(); }

  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }
  double& operator[](std::size_t j) { return values_[j]; }
  double operator[](std::size_t j) const { return values_[j]; }

  std::span<double> block(std::size_t i);
  std::span<const double> block(std::size_t i) const;
  void set_block(std::size_t i, std::span<const double> v);

  const std::vector<double>& values() const { return values_; }

  bool operator==(const BlockVector& other) const = default;

 private:
  BlockLayout layout_;
  std::vector<double> values_;
};

inline BlockLayout::BlockLayout(std::vector<std::size_t> dims) : dims_(std::move(dims)) {
  if (dims_.empty()) throw StructuralError("layout needs at least one block");
  offsets_.reserve(dims_.size());
  for (std::size_t d : dims_) {
    if (d == 0) throw StructuralError("layout blocks must be nonempty");
    offsets_.push_back(total_);
    total_ += d;
  }
}

inline BlockLayout BlockLayout::scalars(std::size_t m) { return uniform(m, 1); }

inline BlockLayout BlockLayout::uniform(std::size_t m, std::size_t d) {
  return BlockLayout(std::vector<std::size_t>(m, d));
}

inline BlockVector::BlockVector(BlockLayout layout)
    : layout_(std::move(layout)), values_(layout_.total(), 0.0) {}

inline BlockVector::BlockVector(BlockLayout layout, std::vector<double> values)
    : layout_(std::move(layout)), values_(std::move(values)) {
  if (values_.size() != layout_.total())
    throw StructuralError("value count does not match layout");
}

inline std::span<double> BlockVector::block(std::size_t i) {
  return {values_.data() + layout_.offset(i), layout_.dim(i)};
}

inline std::span<const double> BlockVector::block(std::size_t i) const {
  return {values_.data() + layout_.offset(i), layout_.dim(i)};
}

inline void BlockVector::set_block(std::size_t i, std::span<const double> v) {
  if (v.size() != layout_.dim(i)) throw StructuralError("block size mismatch");
  auto dst = block(i);
  for (std::size_t j = 0; j < v.size(); ++j) dst[j] = v[j];
}

// Plain Euclidean helpers.
inline double norm_sq(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

inline double dist_sq(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double d = a[j] - b[j];
    s += d * d;
  }
  return s;
}

}  // namespace abcfb
