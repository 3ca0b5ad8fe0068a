#pragma once

// Per-subject and group pipeline driven by a single JSON configuration:
// ingest -> standardize -> (LDA) -> align -> segment -> lag -> CV fit ->
// evaluate -> report.

#include <atomic>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "trf/lda.hpp"
#include "trf/ridge.hpp"
#include "trf/stats.hpp"
#include "trf/synthgen.hpp"

namespace trf {

namespace fs = std::filesystem;

struct SubjectInput {
  std::string id;
  fs::path eeg;
  fs::path word_events;  // empty: use the config-level file
};

struct PipelineConfig {
  std::vector<SubjectInput> subjects;
  fs::path word_events;
  fs::path layout;
  fs::path output_dir = "out";

  double tmin_s = -0.1;
  double tmax_s = 1.0;
  double window_s = 2.0;
  double overlap = 0.1;
  double test_fraction = 0.2;

  double lambda_lo = 1e-3;
  double lambda_hi = 1e5;
  int lambda_n = 10;
  int folds = 5;
  Solver solver = Solver::closed_form;
  IterativeParams iterative{1e-4, 64, 20000, 1e-12, 0};

  bool lda_enabled = false;
  int lda_components = 9;

  std::uint64_t seed = 0;
  int workers = 1;

  SynthSpec synth;
  int synth_subjects = 1;
  bool synth_zero_kernel = false;
};

using LogFn = std::function<void(const std::string&)>;

inline LogFn stderr_log() {
  return [](const std::string& msg) { std::fprintf(stderr, "trf: %s\n", msg.c_str()); };
}

// ---------------------------------------------------------------------------
// configuration

/// Every recognized key with its default value.
inline Json default_config_json() {
  PipelineConfig d;
  return Json{
      {"subjects", Json::array()},
      {"word_events", ""},
      {"layout", ""},
      {"output_dir", d.output_dir.string()},
      {"lag", {{"tmin_s", d.tmin_s}, {"tmax_s", d.tmax_s}}},
      {"window_s", d.window_s},
      {"overlap", d.overlap},
      {"test_fraction", d.test_fraction},
      {"lambda_grid", {{"lo", d.lambda_lo}, {"hi", d.lambda_hi}, {"n", d.lambda_n}}},
      {"folds", d.folds},
      {"solver", "closed_form"},
      {"iterative",
       {{"lr", d.iterative.lr},
        {"batch_size", d.iterative.batch_size},
        {"tol", d.iterative.tol},
        {"max_epochs", d.iterative.max_epochs}}},
      {"lda", {{"enabled", d.lda_enabled}, {"n_components", d.lda_components}}},
      {"seed", d.seed},
      {"workers", d.workers},
      {"synth",
       {{"fs_hz", d.synth.fs_hz},
        {"duration_s", d.synth.duration_s},
        {"n_channels", d.synth.n_channels},
        {"n_features", d.synth.n_features},
        {"word_rate_hz", d.synth.word_rate_hz},
        {"snr", d.synth.snr},
        {"n_subjects", d.synth_subjects},
        {"n_pos_tags", d.synth.n_pos_tags},
        {"zero_kernel", d.synth_zero_kernel}}},
  };
}

namespace detail {

inline void merge_strict(Json& base, const Json& patch, const std::string& prefix) {
  if (!patch.is_object()) throw ValidationError("config" + (prefix.empty() ? "" : " key '" + prefix + "'") +
                                                " must be a JSON object");
  for (auto it = patch.begin(); it != patch.end(); ++it) {
    const auto key = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (!base.contains(it.key())) throw ValidationError("unknown config key '" + key + "'");
    auto& slot = base[it.key()];
    if (slot.is_object() && it.value().is_object())
      merge_strict(slot, it.value(), key);
    else
      slot = it.value();
  }
}

inline void resolve_path(Json& j, const char* key, const fs::path& base) {
  if (!j.contains(key) || !j[key].is_string()) return;
  const fs::path p = j[key].get<std::string>();
  if (!p.empty() && p.is_relative()) j[key] = (base / p).lexically_normal().string();
}

template <class T>
T get_as(const Json& j, const std::string& key) {
  try {
    return j.get<T>();
  } catch (const Json::exception&) {
    throw ValidationError("config key '" + key + "' has the wrong type");
  }
}

inline double get_number(const Json& j, const std::string& key) {
  if (!j.is_number()) throw ValidationError("config key '" + key + "' must be a number");
  return j.get<double>();
}

inline long long get_integer(const Json& j, const std::string& key) {
  if (j.is_number_integer()) return j.get<long long>();
  if (j.is_number_float()) {
    const double v = j.get<double>();
    if (v == std::floor(v) && std::abs(v) < 9e15) return static_cast<long long>(v);
  }
  throw ValidationError("config key '" + key + "' must be an integer");
}

}  // namespace detail

/// Applies `a.b.c=value` overrides; value is parsed as JSON when possible,
/// otherwise taken as a string.
inline void apply_override(Json& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ValidationError("override '" + assignment + "' is not key=value");
  const auto key = assignment.substr(0, eq);
  const auto raw = assignment.substr(eq + 1);
  Json value;
  try {
    value = Json::parse(raw);
  } catch (const Json::parse_error&) {
    value = raw;
  }
  Json* node = &cfg;
  const auto parts = split(key, '.');
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const std::string part(parts[k]);
    if (!node->is_object() || !node->contains(part)) throw ValidationError("unknown config key '" + key + "'");
    node = &(*node)[part];
  }
  if (node->is_object()) throw ValidationError("config key '" + key + "' is a section, not a value");
  *node = value;
}

/// Merges a user document into the defaults. Relative paths in the document
/// are resolved against base_dir.
inline Json merge_config(const Json& user, const fs::path& base_dir) {
  if (!user.is_object()) throw ValidationError("config must be a JSON object");
  Json cfg = default_config_json();
  detail::merge_strict(cfg, user, "");
  // the default output_dir is relative too, so resolve after merging
  detail::resolve_path(cfg, "word_events", base_dir);
  detail::resolve_path(cfg, "layout", base_dir);
  detail::resolve_path(cfg, "output_dir", base_dir);
  if (cfg["subjects"].is_array())
    for (auto& s : cfg["subjects"]) {
      if (!s.is_object()) continue;
      detail::resolve_path(s, "eeg", base_dir);
      detail::resolve_path(s, "word_events", base_dir);
    }
  return cfg;
}

inline Json load_config_json(const fs::path& path) {
  std::string text;
  try {
    text = read_file_bytes(path);
  } catch (const FormatError& e) {
    throw ValidationError(e.what());
  }
  Json user;
  try {
    user = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ValidationError(path.string() + ": invalid JSON at byte " + std::to_string(e.byte));
  }
  return merge_config(user, path.parent_path());
}

/// Typed, fully validated configuration. Nothing touches the filesystem.
inline PipelineConfig parse_config(const Json& j) {
  using detail::get_as;
  using detail::get_integer;
  using detail::get_number;
  PipelineConfig c;
  if (!j.at("subjects").is_array()) throw ValidationError("config key 'subjects' must be an array");
  std::set<std::string> ids;
  for (const auto& s : j.at("subjects")) {
    if (!s.is_object()) throw ValidationError("each subject must be an object");
    for (auto it = s.begin(); it != s.end(); ++it)
      if (it.key() != "id" && it.key() != "eeg" && it.key() != "word_events")
        throw ValidationError("unknown subject key '" + it.key() + "'");
    SubjectInput in;
    if (!s.contains("id") || !s.contains("eeg")) throw ValidationError("each subject needs 'id' and 'eeg'");
    in.id = get_as<std::string>(s["id"], "subjects.id");
    in.eeg = get_as<std::string>(s["eeg"], "subjects.eeg");
    if (s.contains("word_events")) in.word_events = get_as<std::string>(s["word_events"], "subjects.word_events");
    require(!in.id.empty() && in.id.find_first_of("/\\") == std::string::npos && in.id != "." && in.id != "..",
            "subject id '" + in.id + "' is not usable as a directory name");
    require(ids.insert(in.id).second, "duplicate subject id '" + in.id + "'");
    c.subjects.push_back(std::move(in));
  }
  c.word_events = get_as<std::string>(j.at("word_events"), "word_events");
  c.layout = get_as<std::string>(j.at("layout"), "layout");
  c.output_dir = get_as<std::string>(j.at("output_dir"), "output_dir");
  c.tmin_s = get_number(j.at("lag").at("tmin_s"), "lag.tmin_s");
  c.tmax_s = get_number(j.at("lag").at("tmax_s"), "lag.tmax_s");
  c.window_s = get_number(j.at("window_s"), "window_s");
  c.overlap = get_number(j.at("overlap"), "overlap");
  c.test_fraction = get_number(j.at("test_fraction"), "test_fraction");
  c.lambda_lo = get_number(j.at("lambda_grid").at("lo"), "lambda_grid.lo");
  c.lambda_hi = get_number(j.at("lambda_grid").at("hi"), "lambda_grid.hi");
  c.lambda_n = static_cast<int>(get_integer(j.at("lambda_grid").at("n"), "lambda_grid.n"));
  c.folds = static_cast<int>(get_integer(j.at("folds"), "folds"));
  const auto solver = get_as<std::string>(j.at("solver"), "solver");
  if (solver == "closed_form")
    c.solver = Solver::closed_form;
  else if (solver == "iterative")
    c.solver = Solver::iterative;
  else
    throw ValidationError("solver must be 'closed_form' or 'iterative', got '" + solver + "'");
  const auto& it = j.at("iterative");
  c.iterative.lr = get_number(it.at("lr"), "iterative.lr");
  c.iterative.batch_size = static_cast<int>(get_integer(it.at("batch_size"), "iterative.batch_size"));
  c.iterative.tol = get_number(it.at("tol"), "iterative.tol");
  c.iterative.max_epochs = static_cast<int>(get_integer(it.at("max_epochs"), "iterative.max_epochs"));
  c.lda_enabled = get_as<bool>(j.at("lda").at("enabled"), "lda.enabled");
  c.lda_components = static_cast<int>(get_integer(j.at("lda").at("n_components"), "lda.n_components"));
  const auto seed = get_integer(j.at("seed"), "seed");
  require(seed >= 0, "seed must be nonnegative");
  c.seed = static_cast<std::uint64_t>(seed);
  c.iterative.seed = c.seed;
  c.workers = static_cast<int>(get_integer(j.at("workers"), "workers"));

  const auto& sy = j.at("synth");
  c.synth.fs_hz = get_number(sy.at("fs_hz"), "synth.fs_hz");
  c.synth.duration_s = get_number(sy.at("duration_s"), "synth.duration_s");
  c.synth.n_channels = get_integer(sy.at("n_channels"), "synth.n_channels");
  c.synth.n_features = get_integer(sy.at("n_features"), "synth.n_features");
  c.synth.word_rate_hz = get_number(sy.at("word_rate_hz"), "synth.word_rate_hz");
  c.synth.snr = get_number(sy.at("snr"), "synth.snr");
  c.synth.n_pos_tags = static_cast<int>(get_integer(sy.at("n_pos_tags"), "synth.n_pos_tags"));
  c.synth_subjects = static_cast<int>(get_integer(sy.at("n_subjects"), "synth.n_subjects"));
  c.synth_zero_kernel = get_as<bool>(sy.at("zero_kernel"), "synth.zero_kernel");
  c.synth.tmin_s = c.tmin_s;
  c.synth.tmax_s = c.tmax_s;
  c.synth.seed = c.seed;

  require(c.tmin_s < c.tmax_s, "lag window requires tmin_s < tmax_s");
  require(c.window_s > 0.0, "window_s must be positive");
  require(c.overlap >= 0.0 && c.overlap < 1.0, "overlap must lie in [0, 1)");
  require(c.test_fraction > 0.0 && c.test_fraction < 1.0, "test_fraction must lie in (0, 1)");
  require(c.lambda_lo > 0.0, "lambda_grid.lo must be positive");
  require(c.lambda_lo < c.lambda_hi, "lambda_grid.lo must be below lambda_grid.hi");
  require(c.lambda_n >= 2, "lambda_grid.n must be at least 2");
  require(c.folds >= 2, "folds must be at least 2, got " + std::to_string(c.folds));
  require(c.iterative.lr > 0.0, "iterative.lr must be positive");
  require(c.iterative.batch_size >= 1, "iterative.batch_size must be at least 1");
  require(c.iterative.tol >= 0.0, "iterative.tol must be nonnegative");
  require(c.iterative.max_epochs >= 1, "iterative.max_epochs must be at least 1");
  require(c.lda_components >= 1, "lda.n_components must be positive");
  require(c.workers >= 1, "workers must be at least 1");
  require(c.synth_subjects >= 1, "synth.n_subjects must be at least 1");
  require(!c.output_dir.empty(), "output_dir must not be empty");
  return c;
}

/// Inputs needed by fit/evaluate/lda, checked up front.
inline void require_inputs(const PipelineConfig& c, bool need_subjects) {
  if (need_subjects) {
    require(!c.subjects.empty(), "config lists no subjects");
    for (const auto& s : c.subjects)
      require(!s.word_events.empty() || !c.word_events.empty(),
              "subject '" + s.id + "' has no word_events file and no config-level default");
  }
}

// ---------------------------------------------------------------------------
// staged outputs: nothing is written unless the whole command succeeds

class OutputSet {
 public:
  void add(const fs::path& path, std::string bytes) { files_[path] = std::move(bytes); }
  const std::map<fs::path, std::string>& files() const { return files_; }

  void commit() const {
    std::vector<fs::path> written;
    try {
      for (const auto& [path, bytes] : files_) {
        std::error_code ec;
        if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
        if (ec) throw FormatError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
        auto tmp = path;
        tmp += ".part";
        write_file_bytes(tmp, bytes);
        written.push_back(tmp);
        fs::rename(tmp, path, ec);
        if (ec) throw FormatError("cannot move " + tmp.string() + " into place: " + ec.message());
        written.back() = path;
      }
    } catch (...) {
      std::error_code ignore;
      for (const auto& p : written) fs::remove(p, ignore);
      throw;
    }
  }

 private:
  std::map<fs::path, std::string> files_;
};

inline std::string dump_json(const nlohmann::ordered_json& j) { return j.dump(2) + "\n"; }

// ---------------------------------------------------------------------------
// per-subject preparation shared by fit and evaluate

struct PreparedSubject {
  std::string id;
  EegRecording eeg;  // standardized
  LagSpec lag_spec;
  SegmentSet segments;
  std::size_t n_train = 0;
  std::vector<std::string> warnings;

  SegmentSet train() const { return slice(segments, 0, n_train); }
  SegmentSet test() const { return slice(segments, n_train, segments.size()); }
  std::vector<std::size_t> train_ids() const {
    std::vector<std::size_t> ids;
    for (std::size_t k = 0; k < n_train; ++k) ids.push_back(segments.segments[k].index);
    return ids;
  }
};

inline std::vector<std::string> untagged_rows(const WordEventSequence& seq) {
  std::vector<std::string> rows;
  for (std::size_t k = 0; k < seq.events.size(); ++k)
    if (seq.events[k].pos_tag.empty()) rows.push_back(std::to_string(k + 2));  // TSV line numbers
  return rows;
}

inline Matrix event_matrix(const WordEventSequence& seq) {
  Matrix m(static_cast<Eigen::Index>(seq.events.size()), seq.dim);
  for (std::size_t k = 0; k < seq.events.size(); ++k) m.row(static_cast<Eigen::Index>(k)) = seq.events[k].vector.transpose();
  return m;
}

inline std::vector<std::string> event_labels(const WordEventSequence& seq) {
  std::vector<std::string> labels;
  for (const auto& ev : seq.events) labels.push_back(ev.pos_tag);
  return labels;
}

inline void require_tags(const WordEventSequence& seq, const std::string& origin) {
  const auto rows = untagged_rows(seq);
  if (rows.empty()) return;
  std::string list;
  for (std::size_t k = 0; k < rows.size() && k < 20; ++k) list += (k ? ", " : "") + rows[k];
  if (rows.size() > 20) list += ", ...";
  throw ValidationError(origin + ": " + std::to_string(rows.size()) + " word event(s) lack a POS tag (lines " +
                        list + ")");
}

/// Fits LDA on the events and replaces their vectors with the projection.
inline std::pair<WordEventSequence, LdaModel> reduce_with_lda(const WordEventSequence& seq, int n_components,
                                                              const std::string& origin) {
  require_tags(seq, origin);
  const Matrix vectors = event_matrix(seq);
  auto model = fit_lda(vectors, event_labels(seq), n_components);
  const Matrix reduced = transform(model, vectors);
  WordEventSequence out;
  out.dim = reduced.cols();
  for (std::size_t k = 0; k < seq.events.size(); ++k) {
    WordEvent ev = seq.events[k];
    ev.vector = reduced.row(static_cast<Eigen::Index>(k)).transpose();
    out.events.push_back(std::move(ev));
  }
  return {std::move(out), std::move(model)};
}

inline PreparedSubject prepare_subject(const PipelineConfig& c, const SubjectInput& s) {
  PreparedSubject p;
  p.id = s.id;
  EegRecording raw = read_eeg(s.eeg);
  const fs::path words_path = s.word_events.empty() ? c.word_events : s.word_events;
  WordEventSequence words = read_word_events(words_path);
  if (c.lda_enabled) {
    auto [reduced, model] = reduce_with_lda(words, c.lda_components, words_path.string());
    words = std::move(reduced);
    p.warnings = model.warnings;
  }
  p.eeg = zscore_channels(std::move(raw));
  words = zscore_features(std::move(words));
  const FeatureSeries x = impulse_align(words, p.eeg.fs_hz, p.eeg.n_samples());
  p.segments = segment(x, p.eeg, c.window_s, c.overlap);
  p.lag_spec = lag_range_to_samples(c.tmin_s, c.tmax_s, p.eeg.fs_hz);

  const std::size_t n = p.segments.size();
  const auto n_test = static_cast<std::size_t>(
      std::max<long long>(1, round_half_up(c.test_fraction * static_cast<double>(n))));
  require(n > n_test && n - n_test >= static_cast<std::size_t>(c.folds),
          "subject '" + s.id + "': " + std::to_string(n) + " segments leave too few training segments for " +
              std::to_string(c.folds) + "-fold cross-validation");
  p.n_train = n - n_test;
  return p;
}

template <class Result, class Fn>
std::vector<Result> for_each_subject(const PipelineConfig& c, Fn&& fn) {
  const std::size_t n = c.subjects.size();
  std::vector<std::optional<Result>> results(n);
  std::vector<std::exception_ptr> errors(n);
  auto work = [&](std::size_t k) {
    try {
      results[k].emplace(fn(c.subjects[k]));
    } catch (...) {
      errors[k] = std::current_exception();
    }
  };
  const auto workers = std::min<std::size_t>(static_cast<std::size_t>(c.workers), n);
  if (workers <= 1) {
    for (std::size_t k = 0; k < n; ++k) work(k);
  } else {
    std::vector<std::thread> pool;
    std::atomic<std::size_t> next{0};
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t k = next++; k < n; k = next++) work(k);
      });
    for (auto& t : pool) t.join();
  }
  // first failing subject in config order wins, independent of scheduling
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  std::vector<Result> out;
  for (auto& r : results) out.push_back(std::move(*r));
  return out;
}

inline fs::path subject_dir(const PipelineConfig& c, const std::string& id) { return c.output_dir / id; }

// ---------------------------------------------------------------------------
// commands

struct FitResult {
  std::string id;
  TrfModel trf;
  CvReport cv;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  std::vector<std::string> warnings;
};

inline FitResult fit_subject(const PipelineConfig& c, const SubjectInput& s) {
  const auto p = prepare_subject(c, s);
  const auto train = p.train();
  const auto grid = make_lambda_grid(c.lambda_lo, c.lambda_hi, c.lambda_n);
  FitResult r;
  r.id = s.id;
  r.cv = cross_validate(train, p.lag_spec, grid, c.folds, c.seed, c.solver, c.iterative);
  const Matrix w = fit_segments(train, p.lag_spec, r.cv.best_lambda, c.solver, c.iterative);
  r.trf = reshape_trf(w, p.lag_spec, p.eeg.channel_names, train.n_features(), r.cv.best_lambda);
  r.n_train = p.n_train;
  r.n_test = p.segments.size() - p.n_train;
  r.warnings = p.warnings;
  return r;
}

inline OutputSet cmd_fit(const PipelineConfig& c, const LogFn& log = stderr_log()) {
  require_inputs(c, true);
  const auto results = for_each_subject<FitResult>(c, [&](const SubjectInput& s) { return fit_subject(c, s); });
  OutputSet out;
  for (const auto& r : results) {
    for (const auto& w : r.warnings) log("warning: subject " + r.id + ": " + w);
    out.add(subject_dir(c, r.id) / "trf.btsr", encode_btsr(trf_to_tensor(r.trf)));
    auto j = to_json(r.cv);
    nlohmann::ordered_json doc;
    doc["subject_id"] = r.id;
    doc["n_train_segments"] = r.n_train;
    doc["n_test_segments"] = r.n_test;
    for (auto it = j.begin(); it != j.end(); ++it) doc[it.key()] = it.value();
    out.add(subject_dir(c, r.id) / "cv_report.json", dump_json(doc));
    log("subject " + r.id + ": best lambda " + format_number(r.cv.best_lambda));
  }
  out.commit();
  return out;
}

inline EvaluationReport evaluate_one(const PipelineConfig& c, const SubjectInput& s) {
  const auto trf_path = subject_dir(c, s.id) / "trf.btsr";
  if (!fs::exists(trf_path))
    throw ValidationError("subject '" + s.id + "': TRF file " + trf_path.string() + " not found; run fit first");
  const auto trf = read_trf(trf_path);
  const auto p = prepare_subject(c, s);
  const auto ids = p.train_ids();
  return evaluate_subject(trf, p.test(), p.lag_spec, s.id, ids);
}

inline OutputSet cmd_evaluate(const PipelineConfig& c, const LogFn& log = stderr_log()) {
  require_inputs(c, true);
  std::optional<ChannelLayout> layout;
  if (!c.layout.empty()) layout = read_channel_layout(c.layout);
  auto reports = for_each_subject<EvaluationReport>(c, [&](const SubjectInput& s) { return evaluate_one(c, s); });
  OutputSet out;
  for (const auto& r : reports) {
    out.add(subject_dir(c, r.subject_id) / "evaluation.json", dump_json(to_json(r)));
    if (layout) out.add(subject_dir(c, r.subject_id) / "topography.csv", format_topo_csv(topo_report(r, *layout)));
    log("subject " + r.subject_id + ": mean r " + format_number(r.mean_r));
  }
  const auto group = group_report(std::move(reports));
  out.add(c.output_dir / "group_report.json", dump_json(to_json(group)));
  log("group: pooled r " + format_number(group.pooled_r) + ", Fisher p " + format_number(group.fisher.p));
  out.commit();
  return out;
}

inline OutputSet cmd_lda(const PipelineConfig& c, const LogFn& log = stderr_log()) {
  require(!c.word_events.empty(), "lda needs a config-level word_events file");
  const auto words = read_word_events(c.word_events);
  auto [reduced, model] = reduce_with_lda(words, c.lda_components, c.word_events.string());
  for (const auto& w : model.warnings) log("warning: " + w);
  const auto sep = separation_report(model, event_matrix(words), event_labels(words));

  const auto dir = c.output_dir / "lda";
  OutputSet out;
  out.add(dir / "projection.btsr", encode_btsr(lda_to_tensor(model)));
  TensorFile means;
  means.shape = {static_cast<std::size_t>(model.class_means.rows()), static_cast<std::size_t>(model.class_means.cols())};
  means.meta = {{"class_labels", model.class_labels}};
  for (Eigen::Index r = 0; r < model.class_means.rows(); ++r)
    for (Eigen::Index k = 0; k < model.class_means.cols(); ++k) means.values.push_back(model.class_means(r, k));
  out.add(dir / "class_means.btsr", encode_btsr(means));
  out.add(dir / "model.json", dump_json(to_json(model)));
  out.add(dir / "words_lda.tsv", format_word_events(reduced));
  out.add(dir / "separation.json", dump_json(to_json(sep)));
  out.commit();
  log("lda: " + std::to_string(model.n_components) + " components over " + std::to_string(model.class_labels.size()) +
      " classes");
  return out;
}

/// The effective configuration as a document, with paths made relative to base.
inline Json config_to_json(const PipelineConfig& c, const fs::path& base) {
  auto rel = [&](const fs::path& p) -> std::string {
    if (p.empty()) return "";
    const auto r = p.lexically_relative(base);
    return r.empty() ? fs::absolute(p).string() : r.string();
  };
  Json j = default_config_json();
  j["subjects"] = Json::array();
  for (const auto& s : c.subjects) {
    Json sj{{"id", s.id}, {"eeg", rel(s.eeg)}};
    if (!s.word_events.empty()) sj["word_events"] = rel(s.word_events);
    j["subjects"].push_back(sj);
  }
  j["word_events"] = rel(c.word_events);
  j["layout"] = rel(c.layout);
  j["output_dir"] = ".";
  j["lag"] = {{"tmin_s", c.tmin_s}, {"tmax_s", c.tmax_s}};
  j["window_s"] = c.window_s;
  j["overlap"] = c.overlap;
  j["test_fraction"] = c.test_fraction;
  j["lambda_grid"] = {{"lo", c.lambda_lo}, {"hi", c.lambda_hi}, {"n", c.lambda_n}};
  j["folds"] = c.folds;
  j["solver"] = std::string(solver_name(c.solver));
  j["iterative"] = {{"lr", c.iterative.lr},
                    {"batch_size", c.iterative.batch_size},
                    {"tol", c.iterative.tol},
                    {"max_epochs", c.iterative.max_epochs}};
  j["lda"] = {{"enabled", c.lda_enabled}, {"n_components", c.lda_components}};
  j["seed"] = c.seed;
  j["workers"] = c.workers;
  j["synth"] = {{"fs_hz", c.synth.fs_hz},
                {"duration_s", c.synth.duration_s},
                {"n_channels", c.synth.n_channels},
                {"n_features", c.synth.n_features},
                {"word_rate_hz", c.synth.word_rate_hz},
                {"snr", c.synth.snr},
                {"n_subjects", c.synth_subjects},
                {"n_pos_tags", c.synth.n_pos_tags},
                {"zero_kernel", c.synth_zero_kernel}};
  return j;
}

inline std::string synth_subject_id(int k) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "sub-%02d", k + 1);
  return buf;
}

/// Writes synthetic subjects, their ground-truth kernels, a layout, and a
/// ready-to-run pipeline.json into the output directory.
inline OutputSet cmd_synth(const PipelineConfig& c, const LogFn& log = stderr_log()) {
  SynthSpec base = c.synth;
  validate(base);
  TrfModel kernel = gen_kernel(base);
  if (c.synth_zero_kernel) std::fill(kernel.kernel.begin(), kernel.kernel.end(), 0.0);

  OutputSet out;
  PipelineConfig generated = c;
  generated.subjects.clear();
  generated.word_events.clear();
  generated.layout = c.output_dir / "layout.csv";
  for (int k = 0; k < c.synth_subjects; ++k) {
    SynthSpec spec = base;
    spec.subject_id = synth_subject_id(k);
    spec.seed = base.seed * 1000003ULL + static_cast<std::uint64_t>(k) + 1;
    const auto data = gen_dataset(kernel, spec);
    const auto dir = c.output_dir / spec.subject_id;
    out.add(dir / "eeg.btsr", encode_btsr(eeg_to_tensor(data.eeg)));
    out.add(dir / "words.tsv", format_word_events(data.words));
    out.add(dir / "true_trf.btsr", encode_btsr(trf_to_tensor(kernel)));
    generated.subjects.push_back({spec.subject_id, dir / "eeg.btsr", dir / "words.tsv"});
  }
  out.add(c.output_dir / "layout.csv", format_channel_layout(synth_layout(base.n_channels)));
  out.add(c.output_dir / "pipeline.json", config_to_json(generated, c.output_dir).dump(2) + "\n");
  out.commit();
  log("synth: wrote " + std::to_string(c.synth_subjects) + " subject(s) to " + c.output_dir.string());
  return out;
}

}  // namespace trf
