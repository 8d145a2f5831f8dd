#include "diffad/params.hpp"

namespace diffad {

std::size_t ParamSet::add(std::string name, NdArray value) {
  if (index_.count(name)) throw std::invalid_argument("duplicate parameter " + name);
  index_.emplace(name, values_.size());
  names_.push_back(std::move(name));
  values_.push_back(std::move(value));
  return values_.size() - 1;
}

std::size_t ParamSet::index_of(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("unknown parameter " + name);
  return it->second;
}

std::size_t ParamSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& v : values_) n += v.size();
  return n;
}

bool ParamSet::all_finite() const {
  for (const auto& v : values_) {
    if (!v.all_finite()) return false;
  }
  return true;
}

std::vector<Var> ParamSet::bind(Tape& tape) const {
  std::vector<Var> out;
  out.reserve(values_.size());
  for (const auto& v : values_) out.push_back(tape.leaf(v));
  return out;
}

}  // namespace diffad
