#include "diffad/evaluation.hpp"

#include <algorithm>

#include "diffad/ndarray.hpp"

namespace diffad {

ConfusionCounts& ConfusionCounts::operator+=(const ConfusionCounts& o) {
  tp += o.tp;
  fp += o.fp;
  fn += o.fn;
  tn += o.tn;
  return *this;
}

namespace {

void tally(ConfusionCounts& c, std::uint8_t y, std::uint8_t p) {
  if (y > 1 || p > 1) throw std::invalid_argument("labels and flags must be 0/1");
  if (y && p) {
    ++c.tp;
  } else if (p) {
    ++c.fp;
  } else if (y) {
    ++c.fn;
  } else {
    ++c.tn;
  }
}

}  // namespace

ConfusionCounts confusion_counts(std::span<const std::uint8_t> y, std::span<const std::uint8_t> y_hat) {
  if (y.size() != y_hat.size()) {
    throw ShapeError("confusion_counts: " + std::to_string(y.size()) + " labels vs " + std::to_string(y_hat.size()) +
                     " flags");
  }
  ConfusionCounts c;
  for (std::size_t i = 0; i < y.size(); ++i) tally(c, y[i], y_hat[i]);
  return c;
}

ConfusionCounts confusion_counts(std::span<const std::uint8_t> y, std::span<const std::uint8_t> y_hat,
                                 std::size_t features, std::span<const std::uint8_t> covered) {
  if (y.size() != y_hat.size() || features == 0 || y.size() != features * covered.size()) {
    throw ShapeError("confusion_counts: grids do not align with K=" + std::to_string(features) +
                     ", N=" + std::to_string(covered.size()));
  }
  const std::size_t n = covered.size();
  ConfusionCounts c;
  for (std::size_t k = 0; k < features; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      if (covered[i]) tally(c, y[k * n + i], y_hat[k * n + i]);
    }
  }
  return c;
}

bool MetricsResult::is_undefined(const std::string& name) const {
  return std::find(undefined.begin(), undefined.end(), name) != undefined.end();
}

MetricsResult metrics(const ConfusionCounts& c) {
  MetricsResult m;
  m.counts = c;
  const auto ratio = [&](double num, double den, const char* name) {
    if (den == 0.0) {
      m.undefined.emplace_back(name);
      return 0.0;
    }
    return num / den;
  };
  const double tp = static_cast<double>(c.tp), fp = static_cast<double>(c.fp), fn = static_cast<double>(c.fn);
  m.precision = ratio(tp, tp + fp, "precision");
  m.recall = ratio(tp, tp + fn, "recall");
  m.f1 = ratio(2.0 * tp, 2.0 * tp + fp + fn, "f1");
  return m;
}

nlohmann::json to_json(const MetricsResult& m) {
  return nlohmann::json{{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1},
                        {"tp", m.counts.tp},        {"fp", m.counts.fp},   {"fn", m.counts.fn},
                        {"tn", m.counts.tn},        {"undefined_flags", m.undefined}};
}

}  // namespace diffad
