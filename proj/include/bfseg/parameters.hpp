#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace bfseg {

struct Parameter {
  std::string name;
  std::vector<int> shape;
  std::vector<double> values;

  friend bool operator==(const Parameter&, const Parameter&) = default;
};

/// Ordered collection of named parameter arrays. Order is the registration order
/// and is stable across runs; names are unique.
class ParameterSet {
 public:
  /// Registers a zero-filled array and returns its index.
  std::size_t add(std::string name, std::vector<int> shape);

  std::size_t size() const { return params_.size(); }
  Parameter& operator[](std::size_t i) { return params_[i]; }
  const Parameter& operator[](std::size_t i) const { return params_[i]; }

  /// Index of `name`; throws std::out_of_range if absent.
  std::size_t index_of(const std::string& name) const;
  bool contains(const std::string& name) const;

  std::size_t scalar_count() const;

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  friend bool operator==(const ParameterSet&, const ParameterSet&) = default;

 private:
  std::vector<Parameter> params_;
};

/// Gradient buffers aligned index-for-index with a ParameterSet.
struct Gradients {
  std::vector<std::vector<double>> values;

  static Gradients zeros_like(const ParameterSet& params);
  void add(const Gradients& other, double scale = 1.0);
  void scale(double factor);
  std::span<double> operator[](std::size_t i) { return values[i]; }
  std::span<const double> operator[](std::size_t i) const { return values[i]; }
};

}  // namespace bfseg
