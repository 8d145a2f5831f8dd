#include "diffad/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

namespace diffad {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kTrainStream = 2;

std::string ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create directory '" + dir + "': " + ec.message());
  return dir;
}

std::string join_path(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << text;
  if (!out) throw DataError("write failed for '" + path + "'");
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string num(double v) { return format_double(v); }

std::vector<std::string> split_line(const std::string& line) {
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

std::string timestamp_of(const Series& s, std::size_t t) { return s.timestamps.empty() ? std::to_string(t) : s.timestamps[t]; }

}  // namespace

std::vector<double> default_sweep() {
  std::vector<double> ks;
  for (int i = 0; i <= 12; ++i) ks.push_back(0.5 * i);
  return ks;
}

// ---------------------------------------------------------------------------

GenerateResult run_generate(const ToolkitConfig& config, const std::string& out_dir) {
  config.validate();
  ensure_dir(out_dir);
  GenerateResult r;
  r.series = generate_benchmark(config.generator, config.splits, config.seed);
  r.path = join_path(out_dir, "data.csv");
  write_series_csv(r.series, r.path, true);
  return r;
}

// ---------------------------------------------------------------------------

TrainResult run_train(const ToolkitConfig& config, const Series& data, const std::string& out_dir,
                      const std::optional<Checkpoint>& resume, std::ostream* log) {
  config.validate();
  data.validate();
  ensure_dir(out_dir);
  const std::size_t L = config.window_length;
  const SeriesSplits splits = split_series(data, config.splits);
  const Series& train = splits.train;
  if (train.length() < L) {
    throw DataError("training split has " + std::to_string(train.length()) + " points, window length is " +
                    std::to_string(L));
  }

  TrainResult r;
  Checkpoint ck;
  if (resume) {
    ck = *resume;
    if (ck.model.config != config.model_config(data.features())) {
      throw DataError("checkpoint architecture [C=" + std::to_string(ck.model.config.features) + ", L=" +
                      std::to_string(ck.model.config.length) + "] does not match config/data [C=" +
                      std::to_string(data.features()) + ", L=" + std::to_string(L) + "]");
    }
    if (ck.mode != config.mode || ck.history != config.history) throw DataError("checkpoint mode differs from config");
  } else {
    ck.model = init_model(config.model_config(data.features()), derive_seed(config.seed, kInitStream));
    ck.schedule = build_linear_schedule(config.diffusion_steps, config.beta_start, config.beta_end);
    ck.norm = normalize_fit(std::span<const Series>(&train, 1), config.normalization, "train");
    ck.mode = config.mode;
    ck.history = config.history;
    ck.seed = config.seed;
    ck.adam = AdamState::for_params(ck.model.params.values());
  }
  const Series norm_train = normalize_apply(train, ck.norm);

  // Candidate window starts; windows touching any labeled row are excluded.
  std::vector<std::size_t> starts;
  for (std::size_t s = 0; s + L <= train.length(); s += config.train_stride) {
    bool clean = true;
    for (std::size_t t = s; t < s + L && clean; ++t) clean = !train.row_labeled(t);
    if (clean) {
      starts.push_back(s);
    } else {
      ++r.excluded_windows;
    }
  }
  if (starts.empty()) throw DataError("every training window overlaps a labeled anomaly");
  if (r.excluded_windows && log) {
    *log << "warning: excluded " << r.excluded_windows << " training windows overlapping labeled anomalies\n";
  }

  Denoiser model(std::move(ck.model));
  const std::string ck_path = join_path(out_dir, "checkpoint.bin");
  const std::string loss_path = join_path(out_dir, "loss.csv");
  std::ofstream loss_log;
  if (resume && fs::exists(loss_path)) {
    loss_log.open(loss_path, std::ios::app);
  } else {
    loss_log.open(loss_path, std::ios::trunc);
    loss_log << "step,loss\n";
  }
  if (!loss_log) throw DataError("cannot write '" + loss_path + "'");

  auto snapshot = [&](std::uint64_t step) {
    ck.model = model.model();
    ck.step = step;
    save_checkpoint(ck, ck_path);
  };

  r.first_step = static_cast<std::size_t>(ck.step);
  const std::size_t B = std::min(config.batch_size, starts.size());
  for (std::size_t step = ck.step; step < config.train_steps; ++step) {
    Rng rng(derive_seed(ck.seed, kTrainStream, step));
    std::vector<std::size_t> picked(B);
    for (auto& s : picked) s = starts[rng.uniform_int(0, starts.size() - 1)];
    WindowBatch batch = make_windows_at(norm_train, L, picked);
    if (ck.mode == WindowMode::forecasting) attach_history(batch, ck.history);
    const TrainingStepResult res = training_step(model, batch, ck.schedule, rng, ck.adam, config.adam, step);
    r.losses.push_back(res.loss);
    r.batch_starts.push_back(std::move(picked));
    loss_log << step << ',' << num(res.loss) << '\n';
    if (log && ((step + 1) % 100 == 0 || step + 1 == config.train_steps)) {
      *log << "step " << step + 1 << "/" << config.train_steps << " loss " << res.loss << "\n";
    }
    if (config.checkpoint_every && (step + 1) % config.checkpoint_every == 0) snapshot(step + 1);
  }
  snapshot(std::max<std::uint64_t>(ck.step, config.train_steps));
  r.checkpoint = ck;
  r.checkpoint_path = ck_path;
  return r;
}

// ---------------------------------------------------------------------------

SplitReconstruction reconstruct_split(const ToolkitConfig& config, const Checkpoint& ck, const Series& split,
                                      std::uint64_t split_tag) {
  const ModelConfig& mc = ck.model.config;
  if (mc.length != config.window_length) {
    throw DataError("checkpoint window length " + std::to_string(mc.length) + " differs from config " +
                    std::to_string(config.window_length));
  }
  if (mc.features != split.features()) {
    throw DataError("checkpoint expects " + std::to_string(mc.features) + " features, data has " +
                    std::to_string(split.features()));
  }
  if (ck.mode != config.mode || ck.history != config.history) {
    throw DataError("checkpoint was trained for " + to_string(ck.mode) + " (h=" + std::to_string(ck.history) +
                    ") but config requests " + to_string(config.mode) + " (h=" + std::to_string(config.history) + ")");
  }
  const std::size_t L = mc.length, K = mc.features;
  const Series norm = normalize_apply(split, ck.norm);
  SplitReconstruction out;
  out.original = split;
  out.windows = config.mode == WindowMode::reconstruction && config.stride == 0
                    ? make_reconstruction_windows(norm, L)
                    : make_sliding_windows(norm, L, config.detection_stride());
  out.windows.mode = config.mode;
  DiffusionMode dm = config.mode == WindowMode::reconstruction ? DiffusionMode::reconstruction()
                                                               : DiffusionMode::forecasting(config.history);
  dm.noise_step = config.noise_step;
  out.region = config.mode == WindowMode::reconstruction ? TargetRegion{0, L} : TargetRegion{config.history, L - config.history};
  if (config.mode == WindowMode::forecasting) out.windows.history = config.history;

  const Denoiser model(ck.model);
  const std::size_t W = out.windows.size(), per = K * L;
  NdArray generated({W, K, L});
  for (std::size_t b0 = 0; b0 < W; b0 += config.sample_batch) {
    const std::size_t nb = std::min(config.sample_batch, W - b0);
    NdArray chunk({nb, K, L});
    std::copy_n(out.windows.data.data() + b0 * per, nb * per, chunk.data());
    std::vector<Rng> streams;
    for (std::size_t i = 0; i < nb; ++i) streams.emplace_back(derive_seed(config.seed, split_tag, b0 + i));
    const NdArray x0 = sample(model, dm, chunk, ck.schedule, streams);
    std::copy_n(x0.data(), nb * per, generated.data() + b0 * per);
  }
  StitchedSeries st = stitch_windows(generated, out.windows.origins, split.length(), out.region);
  Series tmp = split;
  tmp.values = st.values;
  tmp.labels.reset();
  out.reconstruction = normalize_invert(tmp, ck.norm).values;
  const std::size_t N = split.length();
  for (std::size_t t = 0; t < N; ++t) {
    if (st.covered[t]) continue;
    for (std::size_t f = 0; f < K; ++f) out.reconstruction[f * N + t] = 0.0;
  }
  out.covered = std::move(st.covered);
  return out;
}

namespace {

void write_windows_csv(const std::string& path, const ToolkitConfig& config,
                       std::initializer_list<std::pair<const char*, const SplitReconstruction*>> parts,
                       std::span<const std::size_t> offsets) {
  const bool forecasting = config.mode == WindowMode::forecasting;
  std::string s = "split,window,series_id,start,length";
  if (forecasting) s += ",observed_begin,observed_end,target_begin,target_end";
  s += '\n';
  std::size_t p = 0;
  for (const auto& [name, rec] : parts) {
    const std::size_t L = rec->windows.length;
    for (std::size_t w = 0; w < rec->windows.size(); ++w) {
      const std::size_t start = offsets[p] + rec->windows.origins[w].start;
      s += std::string(name) + ',' + std::to_string(w) + ',' + rec->windows.origins[w].series_id + ',' +
           std::to_string(start) + ',' + std::to_string(L);
      if (forecasting) {
        s += ',' + std::to_string(start) + ',' + std::to_string(start + config.history) + ',' +
             std::to_string(start + config.history) + ',' + std::to_string(start + L);
      }
      s += '\n';
    }
    ++p;
  }
  write_text(path, s);
}

nlohmann::json residual_summary(const SplitReconstruction& rec) {
  const std::size_t K = rec.original.features(), N = rec.original.length();
  nlohmann::json j = nlohmann::json::array();
  const NdArray s = residual(rec.original.values, rec.reconstruction);
  for (std::size_t f = 0; f < K; ++f) {
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t t = 0; t < N; ++t) {
      if (!rec.covered[t]) continue;
      sum += s[f * N + t];
      ++n;
    }
    j.push_back(n ? sum / static_cast<double>(n) : 0.0);
  }
  return j;
}

}  // namespace

DetectResult run_detect(const ToolkitConfig& config, const Checkpoint& ck, const Series& data,
                        const std::string& out_dir) {
  config.validate();
  data.validate();
  ensure_dir(out_dir);
  const SeriesSplits splits = split_series(data, config.splits);
  DetectResult r;
  r.validation = reconstruct_split(config, ck, splits.validation, 1);
  r.test = reconstruct_split(config, ck, splits.test, 2);
  r.checkpoint_hash = checkpoint_hash(ck);

  const NdArray ref = residual(r.validation.original.values, r.validation.reconstruction);
  const ZScoreStats stats = fit_detector(ref, r.validation.covered, config.detector, "validation");
  const NdArray sres = residual(r.test.original.values, r.test.reconstruction);
  r.report = detect(sres, r.test.covered, stats);

  const Series& test = r.test.original;
  const std::size_t K = test.features(), N = test.length();
  const DetectionReport& rep = r.report;

  std::string csv = "timestamp,feature,residual,zscore,threshold,flag\n";
  for (std::size_t t = 0; t < N; ++t) {
    if (!rep.covered[t]) continue;
    for (std::size_t f = 0; f < K; ++f) {
      const std::size_t i = f * N + t;
      csv += timestamp_of(test, t) + ',' + test.feature_names[f] + ',' + num(rep.residual[i]) + ',' + num(rep.z[i]) +
             ',' + num(rep.thresholds[f]) + ',' + (rep.flags[i] ? "1" : "0") + '\n';
    }
  }
  write_text(join_path(out_dir, "report.csv"), csv);

  nlohmann::json summary;
  summary["mode"] = to_string(config.mode);
  summary["history"] = config.history;
  summary["window_length"] = config.window_length;
  summary["stride"] = config.detection_stride();
  summary["reference_split"] = stats.reference;
  summary["checkpoint_hash"] = r.checkpoint_hash;
  summary["seed"] = config.seed;
  summary["splits"] = {{"train", config.splits.train},
                       {"validation", config.splits.validation},
                       {"test", config.splits.test},
                       {"validation_begin", splits.validation_begin},
                       {"test_begin", splits.test_begin}};
  summary["robust_scale"] = config.detector.robust_scale;
  nlohmann::json feats = nlohmann::json::array();
  std::size_t flagged_total = 0;
  for (std::size_t f = 0; f < K; ++f) {
    const FeatureStats& st = stats.features[f];
    std::size_t flagged = 0;
    for (std::size_t t = 0; t < N; ++t) flagged += rep.flags[f * N + t];
    flagged_total += flagged;
    feats.push_back({{"feature", test.feature_names[f]},
                     {"k", st.k},
                     {"median", st.center},
                     {"sigma", st.sigma},
                     {"z_mean", st.z_mean},
                     {"z_std", st.z_std},
                     {"threshold", rep.thresholds[f]},
                     {"constant_reference", st.constant},
                     {"flagged", flagged}});
  }
  summary["features"] = feats;
  summary["validation_mean_residual"] = residual_summary(r.validation);
  summary["test_mean_residual"] = residual_summary(r.test);
  summary["counts"] = {{"points", K * std::count(rep.covered.begin(), rep.covered.end(), std::uint8_t{1})},
                       {"covered_timesteps", std::count(rep.covered.begin(), rep.covered.end(), std::uint8_t{1})},
                       {"uncovered_timesteps", std::count(rep.covered.begin(), rep.covered.end(), std::uint8_t{0})},
                       {"flagged_points", flagged_total},
                       {"flagged_timesteps", std::count(rep.aggregate.begin(), rep.aggregate.end(), std::uint8_t{1})}};
  write_text(join_path(out_dir, "summary.json"), summary.dump(2) + "\n");

  const std::size_t offsets[] = {splits.validation_begin, splits.test_begin};
  write_windows_csv(join_path(out_dir, "windows.csv"), config, {{"validation", &r.validation}, {"test", &r.test}},
                    offsets);

  const std::string plot_dir = ensure_dir(join_path(out_dir, "plots"));
  for (std::size_t f = 0; f < K; ++f) {
    std::string p = "timestamp,value,reconstruction,flag\n";
    for (std::size_t t = 0; t < N; ++t) {
      if (!rep.covered[t]) continue;
      const std::size_t i = f * N + t;
      p += timestamp_of(test, t) + ',' + num(test.values[i]) + ',' + num(r.test.reconstruction[i]) + ',' +
           (rep.flags[i] ? "1" : "0") + '\n';
    }
    write_text(join_path(plot_dir, test.feature_names[f] + ".csv"), p);
  }
  return r;
}

// ---------------------------------------------------------------------------

namespace {

struct FeatureZ {
  double z_mean = 0.0, z_std = 0.0;
};

EvaluationResult evaluate_grids(std::span<const std::uint8_t> labels, std::span<const std::uint8_t> flags,
                                std::span<const double> z, std::span<const std::uint8_t> covered,
                                std::span<const FeatureZ> fz, std::span<const double> sweep_ks) {
  const std::size_t K = fz.size(), N = covered.size();
  if (labels.size() != K * N || flags.size() != K * N || z.size() != K * N) {
    throw ShapeError("evaluation: labels (" + std::to_string(labels.size()) + ") and report (" +
                     std::to_string(flags.size()) + ") do not align");
  }
  EvaluationResult r;
  r.overall = metrics(confusion_counts(labels, flags, K, covered));
  for (std::size_t f = 0; f < K; ++f) {
    r.per_feature.push_back(metrics(confusion_counts(labels.subspan(f * N, N), flags.subspan(f * N, N), 1, covered)));
  }
  const auto agg_y = aggregate_flags(labels, K);
  const auto agg_p = aggregate_flags(flags, K);
  r.timestep = metrics(confusion_counts(agg_y, agg_p, 1, covered));
  for (double k : sweep_ks) {
    std::vector<std::uint8_t> fk(K * N, 0);
    SweepRow row;
    row.k = k;
    for (std::size_t f = 0; f < K; ++f) {
      const double thr = fz[f].z_mean + k * fz[f].z_std;
      for (std::size_t t = 0; t < N; ++t) {
        if (covered[t] && std::abs(z[f * N + t]) > thr) {
          fk[f * N + t] = 1;
          ++row.flagged;
        }
      }
    }
    row.metrics = metrics(confusion_counts(labels, fk, K, covered));
    r.sweep.push_back(row);
  }
  return r;
}

void write_sweep(const std::string& path, const std::vector<SweepRow>& sweep) {
  std::string s = "k,flagged,tp,fp,fn,precision,recall,f1\n";
  for (const auto& row : sweep) {
    const auto& c = row.metrics.counts;
    s += num(row.k) + ',' + std::to_string(row.flagged) + ',' + std::to_string(c.tp) + ',' + std::to_string(c.fp) +
         ',' + std::to_string(c.fn) + ',' + num(row.metrics.precision) + ',' + num(row.metrics.recall) + ',' +
         num(row.metrics.f1) + '\n';
  }
  write_text(path, s);
}

}  // namespace

EvaluationResult evaluate_report(const DetectionReport& report, std::span<const std::uint8_t> labels,
                                 std::span<const double> sweep_ks) {
  std::vector<FeatureZ> fz;
  for (const auto& st : report.stats.features) fz.push_back({st.z_mean, st.z_std});
  return evaluate_grids(labels, report.flags, report.z.values(), report.covered, fz, sweep_ks);
}

nlohmann::json metrics_json(const EvaluationResult& r) {
  nlohmann::json j = to_json(r.overall);
  nlohmann::json per = nlohmann::json::object();
  for (std::size_t f = 0; f < r.per_feature.size(); ++f) {
    const std::string name = f < r.feature_names.size() ? r.feature_names[f] : std::to_string(f);
    per[name] = to_json(r.per_feature[f]);
  }
  j["per_feature"] = per;
  j["timestep"] = to_json(r.timestep);
  return j;
}

EvaluationResult run_evaluate(const std::string& report_dir, const Series& labeled, std::span<const double> sweep_ks,
                              const std::string& out_dir) {
  if (!labeled.labels) throw DataError("evaluation needs a labeled series");
  const nlohmann::json summary = nlohmann::json::parse(read_text(join_path(report_dir, "summary.json")));
  const std::size_t K = labeled.features(), Nall = labeled.length();
  std::map<std::string, std::size_t> feat_index, time_index;
  for (std::size_t f = 0; f < K; ++f) feat_index[labeled.feature_names[f]] = f;
  for (std::size_t t = 0; t < Nall; ++t) time_index[timestamp_of(labeled, t)] = t;

  std::vector<FeatureZ> fz(K);
  const auto& feats = summary.at("features");
  if (feats.size() != K) throw DataError("report has " + std::to_string(feats.size()) + " features, labels have " +
                                         std::to_string(K));
  for (const auto& item : feats) {
    auto it = feat_index.find(item.at("feature").get<std::string>());
    if (it == feat_index.end()) throw DataError("report feature '" + item.at("feature").get<std::string>() + "' not in labels");
    fz[it->second] = {item.at("z_mean").get<double>(), item.at("z_std").get<double>()};
  }

  // Grids over the full labeled series; only report rows count as covered.
  std::vector<std::uint8_t> flags(K * Nall, 0), seen(K * Nall, 0), covered(Nall, 0);
  std::vector<double> z(K * Nall, 0.0);
  std::istringstream in(read_text(join_path(report_dir, "report.csv")));
  std::string line;
  if (!std::getline(in, line) || line.rfind("timestamp,feature,residual,zscore,threshold,flag", 0) != 0) {
    throw DataError("report.csv has an unexpected header");
  }
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = split_line(line);
    if (cells.size() != 6) throw DataError("report.csv line " + std::to_string(lineno) + ": expected 6 fields");
    auto ti = time_index.find(cells[0]);
    auto fi = feat_index.find(cells[1]);
    if (ti == time_index.end() || fi == feat_index.end()) {
      throw DataError("report.csv line " + std::to_string(lineno) + ": (" + cells[0] + ", " + cells[1] +
                      ") not present in the labeled series");
    }
    const std::size_t i = fi->second * Nall + ti->second;
    z[i] = parse_double("zscore", cells[3]);
    flags[i] = cells[5] == "1" ? 1 : 0;
    seen[i] = 1;
    covered[ti->second] = 1;
  }
  for (std::size_t t = 0; t < Nall; ++t) {
    if (!covered[t]) continue;
    for (std::size_t f = 0; f < K; ++f) {
      if (!seen[f * Nall + t]) throw DataError("report.csv lacks feature " + labeled.feature_names[f] + " at " +
                                               timestamp_of(labeled, t));
    }
  }
  EvaluationResult r = evaluate_grids(*labeled.labels, flags, z, covered, fz, sweep_ks);
  r.feature_names = labeled.feature_names;
  ensure_dir(out_dir);
  write_text(join_path(out_dir, "metrics.json"), metrics_json(r).dump(2) + "\n");
  write_sweep(join_path(out_dir, "k_sweep.csv"), r.sweep);
  return r;
}

// ---------------------------------------------------------------------------

std::vector<std::string> run_report(const std::string& report_dir, const std::string& out_dir) {
  const fs::path plots = fs::path(report_dir) / "plots";
  if (!fs::is_directory(plots)) throw DataError("no plots directory in '" + report_dir + "'");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(plots)) {
    if (e.path().extension() == ".csv") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  ensure_dir(out_dir);
  std::vector<std::string> written;
  for (const auto& file : files) {
    std::istringstream in(read_text(file.string()));
    std::string line;
    std::getline(in, line);
    std::vector<double> value, recon;
    std::vector<std::uint8_t> flag;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto c = split_line(line);
      if (c.size() != 4) throw DataError(file.string() + ": malformed row");
      value.push_back(parse_double("value", c[1]));
      recon.push_back(parse_double("reconstruction", c[2]));
      flag.push_back(c[3] == "1");
    }
    if (value.empty()) continue;
    const double W = 1200, H = 300, pad = 30;
    double lo = std::min(*std::min_element(value.begin(), value.end()), *std::min_element(recon.begin(), recon.end()));
    double hi = std::max(*std::max_element(value.begin(), value.end()), *std::max_element(recon.begin(), recon.end()));
    if (hi == lo) hi = lo + 1.0;
    const double n = static_cast<double>(std::max<std::size_t>(value.size() - 1, 1));
    auto px = [&](std::size_t i) { return pad + (W - 2 * pad) * static_cast<double>(i) / n; };
    auto py = [&](double v) { return H - pad - (H - 2 * pad) * (v - lo) / (hi - lo); };
    auto polyline = [&](const std::vector<double>& v, const char* colour) {
      std::ostringstream s;
      s << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"0.8\" points=\"";
      for (std::size_t i = 0; i < v.size(); ++i) s << px(i) << ',' << py(v[i]) << ' ';
      s << "\"/>\n";
      return s.str();
    };
    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "<text x=\"" << pad << "\" y=\"18\" font-family=\"sans-serif\" font-size=\"13\">"
        << file.stem().string() << "</text>\n";
    svg << polyline(value, "#1f77b4") << polyline(recon, "#ff7f0e");
    for (std::size_t i = 0; i < value.size(); ++i) {
      if (flag[i]) svg << "<circle cx=\"" << px(i) << "\" cy=\"" << py(value[i]) << "\" r=\"2.5\" fill=\"red\"/>\n";
    }
    svg << "</svg>\n";
    const std::string out = join_path(out_dir, file.stem().string() + ".svg");
    write_text(out, svg.str());
    written.push_back(out);
  }
  return written;
}

}  // namespace diffad
