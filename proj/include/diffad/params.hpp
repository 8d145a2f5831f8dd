#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "diffad/autodiff.hpp"

namespace diffad {

/// Ordered collection of named parameter arrays. Order is the declaration
/// order of the owning architecture and is also the checkpoint blob order.
class ParamSet {
 public:
  std::size_t add(std::string name, NdArray value);
  std::size_t size() const { return values_.size(); }
  std::size_t index_of(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.count(name) != 0; }

  const std::vector<std::string>& names() const { return names_; }
  std::vector<NdArray>& values() { return values_; }
  const std::vector<NdArray>& values() const { return values_; }
  const NdArray& operator[](const std::string& name) const { return values_[index_of(name)]; }
  NdArray& operator[](const std::string& name) { return values_[index_of(name)]; }

  std::size_t scalar_count() const;
  bool all_finite() const;

  /// Records every parameter as a gradient leaf on `tape`, in order.
  std::vector<Var> bind(Tape& tape) const;

  friend bool operator==(const ParamSet& a, const ParamSet& b) {
    return a.names_ == b.names_ && a.values_ == b.values_;
  }

 private:
  std::vector<std::string> names_;
  std::vector<NdArray> values_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Name-based view of bound leaves during a forward pass.
class BoundParams {
 public:
  BoundParams(const ParamSet& set, std::span<const Var> leaves) : set_(&set), leaves_(leaves) {}
  Var operator()(const std::string& name) const { return leaves_[set_->index_of(name)]; }

 private:
  const ParamSet* set_;
  std::span<const Var> leaves_;
};

}  // namespace diffad
