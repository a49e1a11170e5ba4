#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace sigread {

using Complex = std::complex<double>;
using Label = std::uint8_t;

inline constexpr Label kUnknownLabel = 255;

// A batch of complex (I, Q) measurement records with per-trace labels.
struct TraceSet {
  std::size_t n_traces = 0;
  std::size_t n_samples = 0;
  std::vector<Complex> data;  // row-major, trace-major
  std::vector<Label> prepared;
  std::vector<Label> initial_check;  // kUnknownLabel when absent
  std::vector<Label> final_state;    // kUnknownLabel when absent
  double sample_period_us = 0.0;
  int n_states = 2;
  std::vector<std::string> meta;

  const Complex* trace(std::size_t r) const { return data.data() + r * n_samples; }

  bool has_initial_check() const {
    for (Label l : initial_check)
      if (l != kUnknownLabel) return true;
    return false;
  }
  bool has_final_labels() const {
    for (Label l : final_state)
      if (l != kUnknownLabel) return true;
    return false;
  }
};

// Dense row-major matrix of real-valued features.
struct FeatureMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  FeatureMatrix() = default;
  FeatureMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double* row(std::size_t r) { return data.data() + r * cols; }
  const double* row(std::size_t r) const { return data.data() + r * cols; }
  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

struct InvalidInput : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

}  // namespace sigread
