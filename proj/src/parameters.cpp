#include "bfseg/parameters.hpp"

#include <functional>
#include <numeric>
#include <stdexcept>

namespace bfseg {

std::size_t ParameterSet::add(std::string name, std::vector<int> shape) {
  if (contains(name)) throw std::invalid_argument("duplicate parameter name: " + name);
  const auto count = std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
  params_.push_back(Parameter{std::move(name), std::move(shape), std::vector<double>(count, 0.0)});
  return params_.size() - 1;
}

std::size_t ParameterSet::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (params_[i].name == name) return i;
  }
  throw std::out_of_range("no parameter named " + name);
}

bool ParameterSet::contains(const std::string& name) const {
  for (const auto& p : params_) {
    if (p.name == name) return true;
  }
  return false;
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.values.size();
  return n;
}

Gradients Gradients::zeros_like(const ParameterSet& params) {
  Gradients g;
  g.values.reserve(params.size());
  for (const auto& p : params) g.values.emplace_back(p.values.size(), 0.0);
  return g;
}

void Gradients::add(const Gradients& other, double scale) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    auto& dst = values[i];
    const auto& src = other.values[i];
    for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += scale * src[j];
  }
}

void Gradients::scale(double factor) {
  for (auto& v : values) {
    for (auto& x : v) x *= factor;
  }
}

}  // namespace bfseg
