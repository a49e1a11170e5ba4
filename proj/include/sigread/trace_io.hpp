#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sigread/types.hpp"

namespace sigread {

namespace detail {

inline void write_file(const std::filesystem::path& path, const void* data,
                       std::size_t bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(bytes));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

inline std::vector<char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw std::runtime_error("cannot open for reading: " + path.string());
  const std::streamsize size = in.tellg();
  in.seekg(0);
  std::vector<char> buf(static_cast<std::size_t>(size));
  in.read(buf.data(), size);
  if (!in) throw std::runtime_error("read failed: " + path.string());
  return buf;
}

}  // namespace detail

// Writes manifest.json + traces.f32 (per trace: I0,Q0,I1,Q1,... little-endian
// float32) + labels.u8 (prepared block, then initial_check, then final; 255 =
// unknown). Returns the manifest path.
inline std::filesystem::path save_bundle(const TraceSet& ts,
                                         const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const bool has_initial = ts.has_initial_check();
  const bool has_final = ts.has_final_labels();

  std::vector<float> data(ts.n_traces * ts.n_samples * 2);
  for (std::size_t i = 0; i < ts.data.size(); ++i) {
    data[2 * i] = static_cast<float>(ts.data[i].real());
    data[2 * i + 1] = static_cast<float>(ts.data[i].imag());
  }
  detail::write_file(dir / "traces.f32", data.data(), data.size() * sizeof(float));

  std::vector<std::uint8_t> labels;
  labels.insert(labels.end(), ts.prepared.begin(), ts.prepared.end());
  if (has_initial)
    labels.insert(labels.end(), ts.initial_check.begin(), ts.initial_check.end());
  if (has_final)
    labels.insert(labels.end(), ts.final_state.begin(), ts.final_state.end());
  detail::write_file(dir / "labels.u8", labels.data(), labels.size());

  nlohmann::json manifest = {
      {"version", 1},
      {"n_traces", ts.n_traces},
      {"n_samples", ts.n_samples},
      {"sample_period_ns", ts.sample_period_us * 1000.0},
      {"n_states", ts.n_states},
      {"has_initial_check", has_initial},
      {"has_final_labels", has_final},
      {"data_file", "traces.f32"},
      {"labels_file", "labels.u8"},
      {"dtype", "f32le"},
      {"layout", "trace-major-iq-interleaved"},
      {"meta", ts.meta},
  };
  const std::filesystem::path manifest_path = dir / "manifest.json";
  std::ofstream out(manifest_path);
  if (!out)
    throw std::runtime_error("cannot open for writing: " + manifest_path.string());
  out << manifest.dump(2) << "\n";
  return manifest_path;
}

inline TraceSet load_bundle(const std::filesystem::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in)
    throw std::runtime_error("cannot open manifest: " + manifest_path.string());
  nlohmann::json manifest = nlohmann::json::parse(in);

  if (manifest.at("version").get<int>() != 1)
    throw std::runtime_error("unsupported bundle version: " +
                             manifest.at("version").dump());
  if (manifest.at("dtype").get<std::string>() != "f32le")
    throw std::runtime_error("unsupported dtype: " +
                             manifest.at("dtype").get<std::string>());
  if (manifest.at("layout").get<std::string>() != "trace-major-iq-interleaved")
    throw std::runtime_error("unknown layout: " +
                             manifest.at("layout").get<std::string>());

  TraceSet ts;
  ts.n_traces = manifest.at("n_traces").get<std::size_t>();
  ts.n_samples = manifest.at("n_samples").get<std::size_t>();
  ts.n_states = manifest.at("n_states").get<int>();
  ts.sample_period_us = manifest.at("sample_period_ns").get<double>() / 1000.0;
  if (manifest.contains("meta"))
    ts.meta = manifest.at("meta").get<std::vector<std::string>>();
  const bool has_initial = manifest.at("has_initial_check").get<bool>();
  const bool has_final = manifest.at("has_final_labels").get<bool>();
  if (ts.n_traces == 0 || ts.n_samples == 0)
    throw std::runtime_error("manifest counts must be positive");

  const std::filesystem::path dir = manifest_path.parent_path();
  const auto data =
      detail::read_file(dir / manifest.at("data_file").get<std::string>());
  const std::size_t expect_data = ts.n_traces * ts.n_samples * 2 * sizeof(float);
  if (data.size() != expect_data) {
    std::ostringstream msg;
    msg << "data_file size mismatch: expected " << expect_data << " bytes, got "
        << data.size();
    throw std::runtime_error(msg.str());
  }
  const auto labels =
      detail::read_file(dir / manifest.at("labels_file").get<std::string>());
  const std::size_t blocks = 1 + (has_initial ? 1 : 0) + (has_final ? 1 : 0);
  if (labels.size() != ts.n_traces * blocks) {
    std::ostringstream msg;
    msg << "labels_file size mismatch: expected " << ts.n_traces * blocks
        << " bytes, got " << labels.size();
    throw std::runtime_error(msg.str());
  }

  ts.data.resize(ts.n_traces * ts.n_samples);
  const float* f = reinterpret_cast<const float*>(data.data());
  for (std::size_t i = 0; i < ts.data.size(); ++i)
    ts.data[i] = Complex{f[2 * i], f[2 * i + 1]};

  auto block = [&](std::size_t index) {
    std::vector<Label> out(ts.n_traces);
    for (std::size_t r = 0; r < ts.n_traces; ++r)
      out[r] = static_cast<Label>(labels[index * ts.n_traces + r]);
    return out;
  };
  ts.prepared = block(0);
  std::size_t next = 1;
  ts.initial_check = has_initial ? block(next++) : std::vector<Label>(ts.n_traces, kUnknownLabel);
  ts.final_state = has_final ? block(next) : std::vector<Label>(ts.n_traces, kUnknownLabel);
  return ts;
}

// Rectangular-window digital downconversion: one complex output per full
// segment of `segment_len` samples; the factor 2 recovers the analytic
// amplitude of a real tone. The trailing partial segment is dropped.
inline std::vector<Complex> demodulate(const std::vector<double>& raw,
                                       double carrier_freq_hz,
                                       double sample_rate_hz,
                                       std::size_t segment_len) {
  if (segment_len < 1 || raw.size() < segment_len)
    throw InvalidInput("demodulate: input shorter than one segment");
  const std::size_t n_segments = raw.size() / segment_len;
  std::vector<Complex> out(n_segments);
  const double omega = 2.0 * std::numbers::pi * carrier_freq_hz / sample_rate_hz;
  for (std::size_t s = 0; s < n_segments; ++s) {
    Complex acc{0.0, 0.0};
    for (std::size_t j = 0; j < segment_len; ++j) {
      const std::size_t idx = s * segment_len + j;
      const double phase = omega * static_cast<double>(idx);
      acc += raw[idx] * Complex{std::cos(phase), -std::sin(phase)};
    }
    out[s] = acc * (2.0 / static_cast<double>(segment_len));
  }
  return out;
}

// CSV import for small hand-made fixtures.
// Header: trace_id,sample_idx,I,Q[,prepared,initial,final]
inline TraceSet load_csv_traces(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open CSV: " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty CSV: " + path.string());
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) header.push_back(field);
  }
  if (header.size() < 4 || header[0] != "trace_id" || header[1] != "sample_idx" ||
      header[2] != "I" || header[3] != "Q")
    throw std::runtime_error("CSV header must start with trace_id,sample_idx,I,Q");
  const bool has_labels = header.size() >= 5;

  struct Row {
    std::size_t trace, sample;
    double i, q;
    Label prepared = kUnknownLabel, initial = kUnknownLabel, final_state = kUnknownLabel;
  };
  std::vector<Row> rows;
  std::size_t max_trace = 0, max_sample = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() < 4) throw std::runtime_error("malformed CSV row: " + line);
    Row row;
    row.trace = std::stoul(fields[0]);
    row.sample = std::stoul(fields[1]);
    row.i = std::stod(fields[2]);
    row.q = std::stod(fields[3]);
    if (fields.size() > 4) row.prepared = static_cast<Label>(std::stoul(fields[4]));
    if (fields.size() > 5) row.initial = static_cast<Label>(std::stoul(fields[5]));
    if (fields.size() > 6) row.final_state = static_cast<Label>(std::stoul(fields[6]));
    max_trace = std::max(max_trace, row.trace);
    max_sample = std::max(max_sample, row.sample);
    rows.push_back(row);
  }
  TraceSet ts;
  ts.n_traces = max_trace + 1;
  ts.n_samples = max_sample + 1;
  ts.data.assign(ts.n_traces * ts.n_samples, Complex{0.0, 0.0});
  ts.prepared.assign(ts.n_traces, kUnknownLabel);
  ts.initial_check.assign(ts.n_traces, kUnknownLabel);
  ts.final_state.assign(ts.n_traces, kUnknownLabel);
  int max_state = 1;
  for (const Row& row : rows) {
    ts.data[row.trace * ts.n_samples + row.sample] = Complex{row.i, row.q};
    if (has_labels && row.prepared != kUnknownLabel) {
      ts.prepared[row.trace] = row.prepared;
      max_state = std::max(max_state, static_cast<int>(row.prepared) + 1);
    }
    if (row.initial != kUnknownLabel) ts.initial_check[row.trace] = row.initial;
    if (row.final_state != kUnknownLabel) {
      ts.final_state[row.trace] = row.final_state;
      max_state = std::max(max_state, static_cast<int>(row.final_state) + 1);
    }
  }
  ts.n_states = max_state;
  return ts;
}

// Feature matrices persist as a small manifest + float32 binary.
inline std::filesystem::path save_features(const FeatureMatrix& features,
                                           const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<float> data(features.data.size());
  for (std::size_t i = 0; i < data.size(); ++i)
    data[i] = static_cast<float>(features.data[i]);
  detail::write_file(dir / "features.f32", data.data(), data.size() * sizeof(float));
  nlohmann::json manifest = {
      {"version", 1},
      {"n_rows", features.rows},
      {"n_cols", features.cols},
      {"dtype", "f32le"},
      {"data_file", "features.f32"},
  };
  const std::filesystem::path manifest_path = dir / "features.json";
  std::ofstream out(manifest_path);
  out << manifest.dump(2) << "\n";
  return manifest_path;
}

inline FeatureMatrix load_features(const std::filesystem::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in)
    throw std::runtime_error("cannot open manifest: " + manifest_path.string());
  nlohmann::json manifest = nlohmann::json::parse(in);
  if (manifest.at("version").get<int>() != 1)
    throw std::runtime_error("unsupported feature-file version");
  FeatureMatrix features(manifest.at("n_rows").get<std::size_t>(),
                         manifest.at("n_cols").get<std::size_t>());
  const auto data = detail::read_file(manifest_path.parent_path() /
                                      manifest.at("data_file").get<std::string>());
  if (data.size() != features.data.size() * sizeof(float))
    throw std::runtime_error("feature data size mismatch");
  const float* f = reinterpret_cast<const float*>(data.data());
  for (std::size_t i = 0; i < features.data.size(); ++i) features.data[i] = f[i];
  return features;
}

}  // namespace sigread
