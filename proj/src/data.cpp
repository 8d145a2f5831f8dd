#include "diffad/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace diffad {

bool Series::row_labeled(std::size_t n) const {
  if (!labels) return false;
  for (std::size_t k = 0; k < features(); ++k) {
    if ((*labels)[k * length() + n]) return true;
  }
  return false;
}

void Series::validate() const {
  if (values.rank() != 2) throw DataError("series '" + id + "': values must be [K,N]");
  if (feature_names.size() != features()) throw DataError("series '" + id + "': feature name count mismatch");
  if (!timestamps.empty() && timestamps.size() != length()) {
    throw DataError("series '" + id + "': timestamp count mismatch");
  }
  if (labels) {
    if (labels->size() != values.size()) throw DataError("series '" + id + "': label grid does not match values");
    for (auto v : *labels) {
      if (v > 1) throw DataError("series '" + id + "': labels must be 0/1");
    }
  }
}

Series Series::slice(std::size_t begin, std::size_t end) const {
  if (begin >= end || end > length()) {
    throw DataError("series '" + id + "': invalid slice [" + std::to_string(begin) + "," + std::to_string(end) + ")");
  }
  const std::size_t k = features(), n = end - begin, full = length();
  Series out;
  out.id = id;
  out.feature_names = feature_names;
  if (!timestamps.empty()) out.timestamps.assign(timestamps.begin() + begin, timestamps.begin() + end);
  out.values = NdArray({k, n});
  for (std::size_t f = 0; f < k; ++f) {
    std::copy_n(values.data() + f * full + begin, n, out.values.data() + f * n);
  }
  if (labels) {
    out.labels = std::vector<std::uint8_t>(k * n);
    for (std::size_t f = 0; f < k; ++f) {
      std::copy_n(labels->data() + f * full + begin, n, out.labels->data() + f * n);
    }
  }
  return out;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& s, std::size_t line) {
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  while (begin < end && *begin == ' ') ++begin;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) {
    throw DataError("line " + std::to_string(line) + ": cannot parse value '" + s + "'");
  }
  return v;
}

void append_double(std::string& out, double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, ptr);
}

}  // namespace

Series read_series_csv(const std::string& path, const std::string& id) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": empty file");
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line = line.substr(3);  // BOM
  const auto header = split_csv_line(line);
  if (header.size() < 2 || header[0] != "timestamp") {
    throw DataError(path + ": header must start with 'timestamp,<feature_1>,...'");
  }
  std::vector<std::string> features, label_cols;
  for (std::size_t i = 1; i < header.size(); ++i) {
    if (header[i].rfind("label_", 0) == 0) {
      label_cols.push_back(header[i].substr(6));
    } else {
      if (!label_cols.empty()) throw DataError(path + ": feature column after label columns");
      features.push_back(header[i]);
    }
  }
  if (features.empty()) throw DataError(path + ": no feature columns");
  const bool has_labels = !label_cols.empty();
  if (has_labels && label_cols != features) {
    throw DataError(path + ": label columns must be label_<feature> for every feature, in order");
  }
  const std::size_t k = features.size();
  std::vector<std::string> timestamps;
  std::vector<std::vector<double>> cols(k);
  std::vector<std::vector<std::uint8_t>> lab(has_labels ? k : 0);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw DataError(path + ": line " + std::to_string(lineno) + " has " + std::to_string(cells.size()) +
                      " fields, expected " + std::to_string(header.size()));
    }
    timestamps.push_back(cells[0]);
    for (std::size_t f = 0; f < k; ++f) cols[f].push_back(parse_double(cells[1 + f], lineno));
    for (std::size_t f = 0; has_labels && f < k; ++f) {
      const std::string& c = cells[1 + k + f];
      if (c != "0" && c != "1") throw DataError(path + ": line " + std::to_string(lineno) + ": label must be 0 or 1");
      lab[f].push_back(c == "1" ? 1 : 0);
    }
  }
  const std::size_t n = timestamps.size();
  if (n == 0) throw DataError(path + ": no data rows");
  Series s;
  s.id = id.empty() ? path : id;
  s.feature_names = features;
  s.timestamps = std::move(timestamps);
  s.values = NdArray({k, n});
  for (std::size_t f = 0; f < k; ++f) std::copy(cols[f].begin(), cols[f].end(), s.values.data() + f * n);
  if (has_labels) {
    s.labels = std::vector<std::uint8_t>(k * n);
    for (std::size_t f = 0; f < k; ++f) std::copy(lab[f].begin(), lab[f].end(), s.labels->data() + f * n);
  }
  s.validate();
  return s;
}

void write_series_csv(const Series& series, const std::string& path, bool with_labels) {
  series.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  const bool labels = with_labels && series.labels.has_value();
  std::string buf = "timestamp";
  for (const auto& f : series.feature_names) buf += "," + f;
  if (labels) {
    for (const auto& f : series.feature_names) buf += ",label_" + f;
  }
  buf += '\n';
  const std::size_t k = series.features(), n = series.length();
  for (std::size_t t = 0; t < n; ++t) {
    buf += series.timestamps.empty() ? std::to_string(t) : series.timestamps[t];
    for (std::size_t f = 0; f < k; ++f) {
      buf += ',';
      append_double(buf, series.value(f, t));
    }
    for (std::size_t f = 0; labels && f < k; ++f) buf += series.label(f, t) ? ",1" : ",0";
    buf += '\n';
  }
  out << buf;
  if (!out) throw DataError("write failed for " + path);
}

// ---------------------------------------------------------------------------

void SplitFractions::validate() const {
  if (train <= 0 || validation <= 0 || test <= 0 || train + validation + test > 1.0 + 1e-12) {
    throw std::invalid_argument("split fractions must be positive and sum to at most 1");
  }
}

SeriesSplits split_series(const Series& series, const SplitFractions& fr) {
  fr.validate();
  const std::size_t n = series.length();
  const auto count = [n](double f) { return static_cast<std::size_t>(std::floor(f * static_cast<double>(n) + 1e-9)); };
  const std::size_t ntr = count(fr.train), nva = count(fr.validation);
  const std::size_t nte = std::min(count(fr.test), n - std::min(n, ntr + nva));
  if (ntr == 0 || nva == 0 || nte == 0) throw DataError("series '" + series.id + "' too short for the split");
  SeriesSplits s;
  s.validation_begin = ntr;
  s.test_begin = ntr + nva;
  s.train = series.slice(0, ntr);
  s.validation = series.slice(ntr, ntr + nva);
  s.test = series.slice(ntr + nva, ntr + nva + nte);
  return s;
}

// ---------------------------------------------------------------------------

std::string to_string(NormMethod m) { return m == NormMethod::mean_std ? "mean_std" : "median_iqr"; }

NormMethod parse_norm_method(const std::string& s) {
  if (s == "mean_std") return NormMethod::mean_std;
  if (s == "median_iqr") return NormMethod::median_iqr;
  throw std::invalid_argument("unknown normalization '" + s + "'");
}

namespace {

double quantile_sorted(const std::vector<double>& v, double q) {
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace

NormStats normalize_fit(std::span<const Series> series, NormMethod method, const std::string& fitted_on) {
  if (series.empty()) throw DataError("normalize_fit: no series");
  const std::size_t k = series[0].features();
  NormStats st;
  st.method = method;
  st.fitted_on = fitted_on;
  for (std::size_t f = 0; f < k; ++f) {
    std::vector<double> vals;
    for (const auto& s : series) {
      if (s.features() != k) throw DataError("normalize_fit: feature count differs across series");
      const double* row = s.values.data() + f * s.length();
      vals.insert(vals.end(), row, row + s.length());
    }
    if (vals.empty()) throw DataError("normalize_fit: empty input");
    const auto [mn, mx] = std::minmax_element(vals.begin(), vals.end());
    double center, scale;
    if (*mn == *mx) {
      center = *mn;  // exact, so constant features map to 0
      scale = kScaleFloor;
    } else if (method == NormMethod::mean_std) {
      double sum = 0.0;
      for (double v : vals) sum += v;
      center = sum / static_cast<double>(vals.size());
      double sq = 0.0;
      for (double v : vals) sq += (v - center) * (v - center);
      scale = std::sqrt(sq / static_cast<double>(vals.size()));
    } else {
      std::sort(vals.begin(), vals.end());
      center = quantile_sorted(vals, 0.5);
      scale = quantile_sorted(vals, 0.75) - quantile_sorted(vals, 0.25);
    }
    st.center.push_back(center);
    st.scale.push_back(std::max(scale, kScaleFloor));
  }
  return st;
}

Series normalize_apply(const Series& series, const NormStats& stats) {
  if (stats.center.size() != series.features()) throw DataError("normalization stats do not match feature count");
  Series out = series;
  const std::size_t n = series.length();
  for (std::size_t f = 0; f < series.features(); ++f) {
    double* row = out.values.data() + f * n;
    for (std::size_t t = 0; t < n; ++t) row[t] = (row[t] - stats.center[f]) / stats.scale[f];
  }
  return out;
}

Series normalize_invert(const Series& series, const NormStats& stats) {
  if (stats.center.size() != series.features()) throw DataError("normalization stats do not match feature count");
  Series out = series;
  const std::size_t n = series.length();
  for (std::size_t f = 0; f < series.features(); ++f) {
    double* row = out.values.data() + f * n;
    for (std::size_t t = 0; t < n; ++t) row[t] = row[t] * stats.scale[f] + stats.center[f];
  }
  return out;
}

// ---------------------------------------------------------------------------

std::string to_string(WindowMode m) { return m == WindowMode::reconstruction ? "reconstruction" : "forecasting"; }

WindowMode parse_window_mode(const std::string& s) {
  if (s == "reconstruction") return WindowMode::reconstruction;
  if (s == "forecasting") return WindowMode::forecasting;
  throw std::invalid_argument("unknown mode '" + s + "' (expected reconstruction or forecasting)");
}

namespace {

WindowBatch cut_windows(const Series& series, std::size_t length, std::size_t stride, std::size_t count) {
  const std::size_t k = series.features(), n = series.length();
  WindowBatch b;
  b.data = NdArray({count, k, length});
  b.length = length;
  b.stride = stride;
  for (std::size_t w = 0; w < count; ++w) {
    const std::size_t start = w * stride;
    for (std::size_t f = 0; f < k; ++f) {
      std::copy_n(series.values.data() + f * n + start, length, b.data.data() + (w * k + f) * length);
    }
    b.origins.push_back({series.id, start});
  }
  const std::size_t covered_end = (count - 1) * stride + length;
  b.dropped_tail = n - covered_end;
  return b;
}

}  // namespace

WindowBatch make_reconstruction_windows(const Series& series, std::size_t length) {
  if (length == 0) throw std::invalid_argument("window length must be positive");
  if (series.length() < length) {
    throw DataError("series '" + series.id + "' has " + std::to_string(series.length()) +
                    " points, fewer than window length " + std::to_string(length));
  }
  return cut_windows(series, length, length, series.length() / length);
}

WindowBatch make_sliding_windows(const Series& series, std::size_t length, std::size_t stride) {
  if (length == 0 || stride == 0) throw std::invalid_argument("window length and stride must be positive");
  if (series.length() < length) {
    throw DataError("series '" + series.id + "' has " + std::to_string(series.length()) +
                    " points, fewer than window length " + std::to_string(length));
  }
  return cut_windows(series, length, stride, (series.length() - length) / stride + 1);
}

WindowBatch make_windows_at(const Series& series, std::size_t length, std::span<const std::size_t> starts) {
  if (length == 0 || starts.empty()) throw std::invalid_argument("make_windows_at: empty request");
  const std::size_t k = series.features(), n = series.length();
  WindowBatch b;
  b.data = NdArray({starts.size(), k, length});
  b.length = length;
  for (std::size_t w = 0; w < starts.size(); ++w) {
    if (starts[w] + length > n) throw DataError("window at " + std::to_string(starts[w]) + " passes series end");
    for (std::size_t f = 0; f < k; ++f) {
      std::copy_n(series.values.data() + f * n + starts[w], length, b.data.data() + (w * k + f) * length);
    }
    b.origins.push_back({series.id, starts[w]});
  }
  return b;
}

WindowBatch select_windows(const WindowBatch& batch, std::span<const std::size_t> indices) {
  if (indices.empty()) throw std::invalid_argument("select_windows: empty selection");
  const std::size_t k = batch.features(), len = batch.length, per = k * len;
  WindowBatch out;
  out.mode = batch.mode;
  out.length = batch.length;
  out.stride = batch.stride;
  out.history = batch.history;
  out.data = NdArray({indices.size(), k, len});
  if (batch.mask) out.mask = NdArray({indices.size(), k, len});
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const std::size_t w = indices[i];
    if (w >= batch.size()) throw std::out_of_range("select_windows: index out of range");
    std::copy_n(batch.data.data() + w * per, per, out.data.data() + i * per);
    if (batch.mask) std::copy_n(batch.mask->data() + w * per, per, out.mask->data() + i * per);
    out.origins.push_back(batch.origins[w]);
  }
  return out;
}

std::size_t drop_labeled_windows(WindowBatch& batch, const Series& source) {
  if (!source.labels) return 0;
  std::vector<std::size_t> keep;
  for (std::size_t w = 0; w < batch.size(); ++w) {
    const std::size_t start = batch.origins[w].start;
    bool clean = true;
    for (std::size_t t = start; t < start + batch.length && clean; ++t) clean = !source.row_labeled(t);
    if (clean) keep.push_back(w);
  }
  const std::size_t removed = batch.size() - keep.size();
  if (removed == 0) return 0;
  if (keep.empty()) throw DataError("every training window overlaps a labeled anomaly");
  batch = select_windows(batch, keep);
  return removed;
}

ForecastSplit split_history_target(const WindowBatch& batch, std::size_t history) {
  if (history == 0 || history >= batch.length) {
    throw std::invalid_argument("history length must satisfy 0 < h < L (got h=" + std::to_string(history) +
                                ", L=" + std::to_string(batch.length) + "); use reconstruction mode for h=0");
  }
  ForecastSplit s;
  s.conditioning.context = batch.data;
  s.conditioning.mask = NdArray(batch.data.shape());
  const std::size_t rows = batch.size() * batch.features(), len = batch.length;
  for (std::size_t r = 0; r < rows; ++r) {
    double* ctx = s.conditioning.context.data() + r * len;
    double* m = s.conditioning.mask.data() + r * len;
    for (std::size_t l = 0; l < len; ++l) {
      if (l < history) {
        m[l] = 1.0;
      } else {
        ctx[l] = 0.0;
      }
    }
  }
  s.target = {history, len - history};
  return s;
}

void attach_history(WindowBatch& batch, std::size_t history) {
  ForecastSplit s = split_history_target(batch, history);
  batch.mode = WindowMode::forecasting;
  batch.history = history;
  batch.mask = std::move(s.conditioning.mask);
}

std::size_t StitchedSeries::covered_count() const {
  return static_cast<std::size_t>(std::count(covered.begin(), covered.end(), std::uint8_t{1}));
}

StitchedSeries stitch_windows(const NdArray& outputs, std::span<const WindowOrigin> origins,
                              std::size_t series_length, std::optional<TargetRegion> region) {
  if (outputs.rank() != 3) throw ShapeError("stitch_windows: outputs must be [B,C,L]");
  const std::size_t b = outputs.dim(0), k = outputs.dim(1), len = outputs.dim(2);
  if (origins.size() != b) {
    throw ShapeError("stitch_windows: " + std::to_string(b) + " outputs but " + std::to_string(origins.size()) +
                     " origins");
  }
  const TargetRegion r = region.value_or(TargetRegion{0, len});
  if (r.length == 0 || r.begin + r.length > len) throw ShapeError("stitch_windows: target region outside window");
  NdArray sum({k, series_length});
  std::vector<std::size_t> count(series_length, 0);
  for (std::size_t w = 0; w < b; ++w) {
    const std::size_t start = origins[w].start;
    if (start + len > series_length) throw ShapeError("stitch_windows: window extends past series end");
    for (std::size_t l = r.begin; l < r.begin + r.length; ++l) {
      ++count[start + l];
      for (std::size_t f = 0; f < k; ++f) sum[f * series_length + start + l] += outputs.at(w, f, l);
    }
  }
  StitchedSeries out;
  out.values = NdArray({k, series_length});
  out.covered.assign(series_length, 0);
  for (std::size_t t = 0; t < series_length; ++t) {
    if (count[t] == 0) continue;
    out.covered[t] = 1;
    if (count[t] == 1) {
      for (std::size_t f = 0; f < k; ++f) out.values[f * series_length + t] = sum[f * series_length + t];
    } else {
      const double c = static_cast<double>(count[t]);
      for (std::size_t f = 0; f < k; ++f) out.values[f * series_length + t] = sum[f * series_length + t] / c;
    }
  }
  return out;
}

}  // namespace diffad
