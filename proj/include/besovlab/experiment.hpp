#pragma once

#include "besovlab/analysis.hpp"
#include "besovlab/corpus.hpp"
#include "besovlab/report.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace besovlab {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raw `key = value` settings; later assignments win.
using Settings = std::map<std::string, std::string>;

inline const std::set<std::string>& config_keys() {
  static const std::set<std::string> keys{"manifold", "nodes",   "band",  "mesh",   "alpha",   "p",
                                          "q",        "k",       "jmax",  "seed",   "out",     "corpus",
                                          "trials",   "t_min_exp", "t_max_exp", "decay_n", "timings"};
  return keys;
}

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::string item;
  for (char ch : value + ",") {
    if (ch == ',' || ch == ' ' || ch == '\t') {
      if (!item.empty()) out.push_back(item);
      item.clear();
    } else {
      item += ch;
    }
  }
  return out;
}

inline double parse_double(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  if (t == "inf" || t == "infinity") return kInf;
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (t.empty() || end != t.c_str() + t.size() || std::isnan(v)) {
    throw ConfigError("config key '" + key + "': '" + text + "' is not a number");
  }
  return v;
}

inline long long parse_integer(const std::string& key, const std::string& text) {
  const double v = parse_double(key, text);
  if (!std::isfinite(v) || v != std::floor(v)) throw ConfigError("config key '" + key + "' needs an integer");
  return static_cast<long long>(v);
}

inline std::vector<double> parse_doubles(const std::string& key, const std::string& text) {
  std::vector<double> out;
  for (const auto& item : split_list(text)) out.push_back(parse_double(key, item));
  if (out.empty()) throw ConfigError("config key '" + key + "' needs a non-empty list");
  return out;
}

inline bool parse_bool(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  if (t == "1" || t == "true" || t == "yes" || t == "on") return true;
  if (t == "0" || t == "false" || t == "no" || t == "off") return false;
  throw ConfigError("config key '" + key + "' needs true or false");
}

}  // namespace detail

/// Parses the plain-text config grammar: one `key = value` per line, `#`
/// starts a comment, lists are comma separated.
inline Settings parse_config(std::istream& in, const std::string& origin = "config") {
  Settings out;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(number) + ": expected 'key = value'");
    }
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (!config_keys().count(key)) throw ConfigError(origin + ":" + std::to_string(number) + ": unknown key '" + key + "'");
    if (value.empty()) throw ConfigError(origin + ":" + std::to_string(number) + ": empty value for '" + key + "'");
    out[key] = value;
  }
  return out;
}

inline Settings read_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  return parse_config(in, path.string());
}

struct ExperimentConfig {
  std::string manifold = "circle";
  int nodes = 0;       // 0: per-kind default
  double band = 0.0;   // 0: largest band the grid resolves
  std::string mesh;
  std::vector<double> alpha{0.5, 1.0};
  std::vector<double> p{1.0, 2.0, kInf};
  std::vector<double> q{1.0, 2.0, kInf};
  std::vector<double> k{2.0};
  int jmax = 0;        // 0: largest J <= 6 with 4^J <= band
  std::uint64_t seed = 1;
  std::string out = "results";
  std::vector<std::string> corpus{"all"};
  int trials = 100;
  int t_min_exp = 1;   // t runs over 2^-t_min_exp .. 2^-t_max_exp
  int t_max_exp = 6;
  std::vector<double> decay_n;  // empty: dim + 2
  bool timings = false;
};

inline ExperimentConfig make_config(const Settings& s) {
  ExperimentConfig c;
  auto get = [&](const std::string& key) -> const std::string* {
    auto it = s.find(key);
    return it == s.end() ? nullptr : &it->second;
  };
  for (const auto& [key, value] : s) {
    if (!config_keys().count(key)) throw ConfigError("unknown config key '" + key + "'");
  }
  if (auto v = get("manifold")) c.manifold = detail::trim(*v);
  if (auto v = get("nodes")) c.nodes = static_cast<int>(detail::parse_integer("nodes", *v));
  if (auto v = get("band")) c.band = detail::parse_double("band", *v);
  if (auto v = get("mesh")) c.mesh = detail::trim(*v);
  if (auto v = get("alpha")) c.alpha = detail::parse_doubles("alpha", *v);
  if (auto v = get("p")) c.p = detail::parse_doubles("p", *v);
  if (auto v = get("q")) c.q = detail::parse_doubles("q", *v);
  if (auto v = get("k")) c.k = detail::parse_doubles("k", *v);
  if (auto v = get("jmax")) c.jmax = static_cast<int>(detail::parse_integer("jmax", *v));
  if (auto v = get("seed")) {
    const long long seed = detail::parse_integer("seed", *v);
    if (seed < 0) throw ConfigError("seed must be nonnegative");
    c.seed = static_cast<std::uint64_t>(seed);
  }
  if (auto v = get("out")) c.out = detail::trim(*v);
  if (auto v = get("corpus")) c.corpus = detail::split_list(*v);
  if (auto v = get("trials")) c.trials = static_cast<int>(detail::parse_integer("trials", *v));
  if (auto v = get("t_min_exp")) c.t_min_exp = static_cast<int>(detail::parse_integer("t_min_exp", *v));
  if (auto v = get("t_max_exp")) c.t_max_exp = static_cast<int>(detail::parse_integer("t_max_exp", *v));
  if (auto v = get("decay_n")) c.decay_n = detail::parse_doubles("decay_n", *v);
  if (auto v = get("timings")) c.timings = detail::parse_bool("timings", *v);

  static const std::set<std::string> kinds{"circle", "torus2", "sphere2", "mesh"};
  if (!kinds.count(c.manifold)) throw ConfigError("unknown manifold '" + c.manifold + "'");
  if (c.manifold == "mesh") {
    if (c.mesh.empty()) throw ConfigError("manifold = mesh needs a mesh path");
    if (!std::filesystem::exists(c.mesh)) throw ConfigError("mesh file not found: " + c.mesh);
  }
  if (c.nodes < 0) throw ConfigError("nodes must be positive");
  if (c.band < 0.0 || std::isinf(c.band)) throw ConfigError("band must be a positive number");
  for (double a : c.alpha) {
    if (!(a > 0.0 && std::isfinite(a))) throw ConfigError("alpha values must be positive");
  }
  for (double p : c.p) {
    if (!(p >= 1.0)) throw ConfigError("p values must be >= 1");
  }
  for (double q : c.q) {
    if (!(q > 0.0)) throw ConfigError("q values must be positive");
  }
  for (double k : c.k) {
    if (!(k >= 1.0 && std::isfinite(k))) throw ConfigError("k values must be >= 1");
  }
  if (c.jmax < 0) throw ConfigError("jmax must be positive");
  if (c.corpus.empty()) throw ConfigError("corpus selection is empty");
  if (c.trials < 1) throw ConfigError("trials must be >= 1");
  if (c.t_min_exp < 0 || c.t_max_exp < c.t_min_exp) throw ConfigError("need 0 <= t_min_exp <= t_max_exp");
  if (c.out.empty()) throw ConfigError("out directory is empty");
  return c;
}

inline nlohmann::json to_json(const ExperimentConfig& c) {
  auto nums = [](const std::vector<double>& v) {
    nlohmann::json a = nlohmann::json::array();
    for (double x : v) a.push_back(json_number(x));
    return a;
  };
  return {{"manifold", c.manifold}, {"nodes", c.nodes},   {"band", c.band},         {"mesh", c.mesh},
          {"alpha", nums(c.alpha)}, {"p", nums(c.p)},     {"q", nums(c.q)},         {"k", nums(c.k)},
          {"jmax", c.jmax},         {"seed", c.seed},     {"corpus", c.corpus},     {"trials", c.trials},
          {"t_min_exp", c.t_min_exp}, {"t_max_exp", c.t_max_exp}, {"decay_n", nums(c.decay_n)}};
}

inline const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names{"spectrum", "filters", "kernel-decay", "approx", "jackson",
                                              "bernstein", "young",   "besov"};
  return names;
}

inline std::string p_label(double p) { return std::isinf(p) ? "inf" : format_number(p); }

/// Results of one subcommand.
struct Section {
  nlohmann::json summary = nlohmann::json::object();
  std::vector<Assertion> assertions;

  void add(Assertion a) { assertions.push_back(std::move(a)); }
  std::size_t failures() const {
    return static_cast<std::size_t>(std::count_if(assertions.begin(), assertions.end(), [](const Assertion& a) { return !a.pass; }));
  }
  nlohmann::json json() const {
    nlohmann::json out = summary;
    out["assertions"] = nlohmann::json::array();
    for (const auto& a : assertions) out["assertions"].push_back(to_json(a));
    out["failed"] = failures();
    return out;
  }
};

/// A manifold, its eigensystem and a corpus, resolved from a config.
class Experiment {
 public:
  explicit Experiment(ExperimentConfig cfg) : cfg_(std::move(cfg)), dir_(cfg_.out) {
    try {
      if (cfg_.manifold == "circle") {
        if (!cfg_.nodes) cfg_.nodes = 512;
        model_ = build_circle(cfg_.nodes);
        if (cfg_.band == 0.0) cfg_.band = std::pow(cfg_.nodes / 2 - 1, 2);
      } else if (cfg_.manifold == "torus2") {
        if (!cfg_.nodes) cfg_.nodes = 32;
        model_ = build_torus2(cfg_.nodes);
        if (cfg_.band == 0.0) cfg_.band = std::pow(cfg_.nodes / 2 - 1, 2);
      } else if (cfg_.manifold == "sphere2") {
        if (!cfg_.nodes) cfg_.nodes = 32;
        model_ = build_sphere2(cfg_.nodes);
        if (cfg_.band == 0.0) cfg_.band = static_cast<double>(cfg_.nodes) * (cfg_.nodes + 1);
      } else {
        model_ = load_mesh(cfg_.mesh);
        cfg_.nodes = static_cast<int>(model_->size());
        if (cfg_.band == 0.0) cfg_.band = 30.0;
      }
      es_ = std::make_unique<EigenSystem>(build_eigensystem(model_, cfg_.band));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    } catch (const MeshError& e) {
      throw ConfigError(e.what());
    }
    const int auto_j = static_cast<int>(std::floor(std::log(cfg_.band) / std::log(4.0) + 1e-12));
    if (cfg_.jmax == 0) cfg_.jmax = std::min(6, auto_j);
    if (cfg_.jmax < 1 || std::ldexp(1.0, 2 * cfg_.jmax) > cfg_.band * (1.0 + 1e-12)) {
      throw ConfigError("jmax needs 1 <= jmax and 4^jmax <= band (band " + format_number(cfg_.band) + ")");
    }
    select_corpus();
  }

  const ExperimentConfig& config() const { return cfg_; }
  const EigenSystem& eigensystem() const { return *es_; }
  const ModelPtr& model() const { return model_; }

  struct Function {
    CorpusEntry entry;
    GridFunction f;
  };
  const std::vector<Function>& corpus() const { return corpus_; }

  Section run(const std::string& name) {
    if (name == "spectrum") return spectrum();
    if (name == "filters") return filters();
    if (name == "kernel-decay") return kernel_decay();
    if (name == "approx") return approx();
    if (name == "jackson") return jackson();
    if (name == "bernstein") return bernstein();
    if (name == "young") return young();
    if (name == "besov") return besov();
    throw ConfigError("unknown subcommand '" + name + "'");
  }

 private:
  void select_corpus() {
    const EigenSystem& es = *es_;
    std::vector<CorpusEntry> candidates;
    if (model_->kind() == ManifoldKind::circle) {
      int M = 7;
      while (M > 2 && 2 * (1 << M) >= static_cast<int>(model_->size())) --M;
      candidates = default_corpus(M);
    } else {
      candidates = {eigen_pure(5), eigen_pure(17), random_bandlimited(std::min(64.0, cfg_.band), 1),
                    random_bandlimited(cfg_.band, 2)};
    }
    const bool all = cfg_.corpus.size() == 1 && cfg_.corpus[0] == "all";
    std::set<std::string> wanted(cfg_.corpus.begin(), cfg_.corpus.end());
    for (auto& e : candidates) {
      if (!all && !wanted.count(e.id)) continue;
      wanted.erase(e.id);
      try {
        GridFunction f = e.build(es);
        corpus_.push_back({std::move(e), std::move(f)});
      } catch (const std::invalid_argument& err) {
        skipped_.push_back({{"id", e.id}, {"reason", err.what()}});
      }
    }
    if (!all && !wanted.empty()) throw ConfigError("unknown corpus id '" + *wanted.begin() + "'");
    if (corpus_.empty()) throw ConfigError("corpus selection is empty on this manifold");
  }

  std::vector<double> t_values() const {
    std::vector<double> t;
    for (int e = cfg_.t_min_exp; e <= cfg_.t_max_exp; ++e) t.push_back(std::ldexp(1.0, -e));
    return t;
  }

  // F(t^2 L) is represented exactly when no eigenvalue is missing below 16 / t^2.
  bool filter_resolved(double t) const { return 16.0 / (t * t) <= completeness_bound(*es_) * (1.0 + 1e-12); }

  double node_spacing() const {
    return std::pow(model_->total_measure() / static_cast<double>(model_->size()), 1.0 / model_->dim());
  }

  std::string tag(const Function& fn) const { return fn.entry.id; }

  Section spectrum() {
    const EigenSystem& es = *es_;
    Section s;
    Table t({"l", "lambda", "label"});
    for (Eigen::Index l = 0; l < es.size(); ++l) t.row({cell(static_cast<long>(l)), cell(es.eigenvalues()[l]), es.labels()[l]});
    write_table(dir_, "eigenvalues", t);
    if (model_->kind() == ManifoldKind::mesh) {
      write_file_atomic(dir_ / "eigensystem.json", export_eigensystem(es).dump());
    }
    const double dev = check_orthonormality(es);
    const double tol = model_->kind() == ManifoldKind::mesh ? 1e-8 : 1e-10;
    s.summary = {{"count", es.size()},
                 {"band_limit", es.band_limit()},
                 {"lambda_1", es.size() > 1 ? es.eigenvalues()[1] : 0.0},
                 {"orthonormality_deviation", dev}};
    s.add(assert_below("orthonormality", dev, tol));
    s.add(assert_below("lambda_0", std::abs(es.eigenvalues()[0]), 1e-12));
    bool sorted = std::is_sorted(es.eigenvalues().begin(), es.eigenvalues().end());
    s.add(assert_true("eigenvalues ascending", sorted));
    return s;
  }

  Section filters() {
    Section s;
    const FilterFamily family(static_cast<int>(cfg_.k.front()));
    const int J = cfg_.jmax;
    const double top = std::ldexp(1.0, 2 * J);
    std::vector<double> grid;
    const int points = 10000;
    for (int i = 0; i < points; ++i) grid.push_back(top * i / (points - 1));
    const PartitionCheck pc = check_partition(family, J + 1, grid);
    Table t({"lambda", "partial_sum", "deviation"});
    for (int i = 0; i < points; i += 10) {
      const double v = family.partial_sum(J + 1, grid[i]);
      t.row({cell(grid[i]), cell(v), cell(std::abs(v - 1.0))});
    }
    write_table(dir_, "partition", t);
    const double beyond = family.partial_sum(J + 1, std::ldexp(1.0, 2 * (J + 3)));
    s.summary = {{"J", J}, {"max_deviation", pc.max_deviation}, {"grid_points", pc.certified_points}};
    s.add(assert_below("partition of unity on [0, 4^J]", pc.max_deviation, 1e-12));
    s.add(assert_below("partial sum vanishes beyond the certified range", std::abs(beyond), 1e-15));
    return s;
  }

  Section kernel_decay() {
    const EigenSystem& es = *es_;
    const ManifoldModel& model = *model_;
    Section s;
    const FilterFamily family;
    auto F = [&](double x) { return family.F(x); };
    std::vector<double> Ns = cfg_.decay_n;
    if (Ns.empty()) Ns = {static_cast<double>(model.dim() + 2)};
    for (double N : Ns) {
      if (!(N > model.dim())) throw ConfigError("decay_n values must exceed the dimension");
    }

    Table decay({"t", "N", "C", "max_abs_K", "runtime_ms"});
    std::map<double, std::vector<double>> fitted;
    std::vector<double> skipped;
    double asym = 0.0;
    for (double t : t_values()) {
      if (!filter_resolved(t)) {
        skipped.push_back(t);
        continue;
      }
      const auto start = std::chrono::steady_clock::now();
      const KernelMatrix K = build_kernel(es, F, t, "F");
      asym = std::max(asym, kernel_asymmetry(K));
      for (double N : Ns) {
        const DecayFit fit = fit_decay_constant(K, N);
        const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
        decay.row({cell(t), cell(N), cell(fit.C), cell(fit.max_abs_K), cfg_.timings ? cell(ms) : "NA"});
        if (t <= 1.0) fitted[N].push_back(fit.C);
      }
    }
    write_table(dir_, "decay", decay);
    s.add(assert_below("kernel symmetry", asym, 1e-10));
    nlohmann::json ratios = nlohmann::json::object();
    for (const auto& [N, Cs] : fitted) {
      if (Cs.size() < 2) continue;
      const auto [lo, hi] = std::minmax_element(Cs.begin(), Cs.end());
      const double ratio = *hi / *lo;
      ratios[format_number(N)] = ratio;
      s.add(assert_below("decay constant uniform in t, N=" + format_number(N), ratio, 4.0));
    }

    // Volume integral, over the t the grid resolves.
    const double Nv = model.dim() + 2.0;
    Table volume({"t", "N", "bound", "resolved"});
    std::vector<double> vol;
    for (double t : t_values()) {
      const bool resolved = t >= node_spacing();
      const double b = volume_integral_bound(model, t, Nv);
      volume.row({cell(t), cell(Nv), cell(b), cell(resolved)});
      if (resolved) vol.push_back(b);
    }
    write_table(dir_, "volume", volume);
    if (vol.size() >= 2) {
      const auto [lo, hi] = std::minmax_element(vol.begin(), vol.end());
      s.add(assert_below("volume integral uniform in t", *hi / *lo, 8.0));
    }

    // Randomized lower estimates of the p -> p operator norms.
    Table opnorm({"t", "p", "estimate"});
    for (double p : cfg_.p) {
      std::vector<double> est;
      for (double t : t_values()) {
        if (!filter_resolved(t)) continue;
        const double e = operator_norm_estimate(es, F, t, p, p, cfg_.trials, cfg_.seed);
        opnorm.row({cell(t), p_label(p), cell(e)});
        est.push_back(e);
      }
      if (est.size() >= 2) {
        const auto [lo, hi] = std::minmax_element(est.begin(), est.end());
        s.add(assert_below("operator norm p=" + p_label(p) + " uniform in t", *hi / *lo, 2.0));
      }
    }
    write_table(dir_, "opnorm", opnorm);
    s.summary = {{"decay_ratio", ratios}, {"unresolved_t", skipped}, {"node_spacing", node_spacing()}};
    return s;
  }

  Section approx() {
    Section s;
    write_file_atomic(dir_ / "corpus.json", corpus_manifest(entries()).dump(2));
    nlohmann::json rates = nlohmann::json::object();
    for (const auto& fn : corpus_) {
      Table t({"j", "omega", "p", "error", "iterations", "converged"});
      for (double p : cfg_.p) {
        std::vector<ApproxResult> seq;
        for (int j = 0; j <= cfg_.jmax; ++j) {
          seq.push_back(cache(fn, p).at(std::ldexp(1.0, 2 * j)));
          seq.back().omega = std::ldexp(1.0, 2 * j);
        }
        bool converged = true, monotone = true;
        std::vector<double> errors;
        for (std::size_t j = 0; j < seq.size(); ++j) {
          const auto& r = seq[j];
          t.row({cell(static_cast<int>(j)), cell(r.omega), p_label(p), cell(r.error), cell(r.iterations), cell(r.converged)});
          converged = converged && r.converged;
          if (j > 0 && r.error > errors.back() * (1.0 + 1e-8) + 1e-12) monotone = false;
          errors.push_back(r.error);
        }
        const std::string base = tag(fn) + " p=" + p_label(p);
        s.add(assert_true(base + " converged", converged));
        s.add(assert_true(base + " nonincreasing", monotone));
        if (p == 2.0) check_closed_form(s, fn, seq);
        if (p == 2.0 && fn.entry.expected_rate) {
          const double rate = fitted_decay_rate(rate_window(fn, errors), 1e-12);
          rates[fn.entry.id] = rate;
          s.add(assert_within(tag(fn) + " p=2 decay rate", rate, *fn.entry.expected_rate - 0.1, *fn.entry.expected_rate + 0.1));
        }
      }
      write_table(dir_, "approx_" + fn.entry.id, t);
    }
    s.summary = {{"functions", corpus_.size()}, {"rates", rates}, {"skipped", skipped_}};
    return s;
  }

  // Lacunary errors vanish past level M and the last nonzero level is
  // dominated by the truncation; fit levels j <= M - 2.
  static std::vector<double> rate_window(const Function& fn, std::vector<double> errors) {
    if (fn.entry.params.contains("M")) {
      const auto M = fn.entry.params["M"].get<std::size_t>();
      if (errors.size() > M - 1) errors.resize(M - 1);
    }
    return errors;
  }

  void check_closed_form(Section& s, const Function& fn, const std::vector<ApproxResult>& seq) const {
    if (!fn.entry.known_coefficients || !fn.entry.coefficients_exact) return;
    const EigenSystem& es = *es_;
    double worst = 0.0;
    for (const auto& r : seq) {
      double tail = 0.0;
      for (const auto& [index, value] : *fn.entry.known_coefficients) {
        if (es.eigenvalues()[index] > r.omega * (1.0 + 1e-12)) tail += value * value;
      }
      worst = std::max(worst, std::abs(r.error - std::sqrt(tail)));
    }
    s.add(assert_below(tag(fn) + " p=2 Parseval tail", worst, 1e-10));
  }

  std::vector<CorpusEntry> entries() const {
    std::vector<CorpusEntry> out;
    for (const auto& fn : corpus_) out.push_back(fn.entry);
    return out;
  }

  bool band_limited(const Function& fn) const { return out_of_band_fraction(*es_, fn.f) <= 1e-8; }

  Section jackson() {
    Section s;
    Table t({"function", "k", "p", "j", "ratio"});
    nlohmann::json summary = nlohmann::json::array();
    for (const auto& fn : corpus_) {
      if (!band_limited(fn)) continue;
      for (double p : cfg_.p) {
        for (double k : cfg_.k) {
          const JacksonReport r = jackson_ratios(cache(fn, p), k, cfg_.jmax);
          for (std::size_t j = 0; j < r.ratios.size(); ++j) {
            t.row({fn.entry.id, cell(k), p_label(p), cell(static_cast<int>(j)), cell(r.ratios[j])});
          }
          const double top = r.ratios.empty() ? 0.0 : *std::max_element(r.ratios.begin(), r.ratios.end());
          summary.push_back({{"function", fn.entry.id}, {"k", k}, {"p", p_label(p)},
                             {"max_ratio", json_number(top)}, {"max_over_median", json_number(r.max_over_median)}});
          const std::string base = tag(fn) + " k=" + format_number(k) + " p=" + p_label(p);
          if (p == 2.0) s.add(assert_at_most(base + " ratio bound", top, 1.0 + 1e-10));
          // A finite band with slower decay than k grows by construction until
          // the band is reached; uniformity is asserted where the decay keeps pace.
          if (fn.entry.expected_rate && *fn.entry.expected_rate >= k && fn.entry.coefficients_exact) {
            s.add(assert_below(base + " max/median", r.max_over_median, 10.0));
          }
        }
      }
    }
    write_table(dir_, "jackson", t);
    s.summary = {{"ratios", summary}};
    return s;
  }

  // Nominal sweep {4, 16, 64}, each snapped down to the largest eigenvalue
  // below it; E_omega(L) only depends on the eigenvalues <= omega.
  std::vector<std::pair<double, double>> bernstein_omegas() const {
    std::vector<std::pair<double, double>> out;
    for (double w : {4.0, 16.0, 64.0}) {
      if (w > es_->band_limit() * (1.0 + 1e-12)) continue;
      const Eigen::Index count = es_->count_upto(w);
      if (count < 2) continue;
      out.emplace_back(w, es_->eigenvalues()[count - 1]);
    }
    return out;
  }

  Section bernstein() {
    const EigenSystem& es = *es_;
    Section s;
    Table t({"omega", "top_eigenvalue", "k", "p", "max_ratio"});
    std::mt19937_64 rng(cfg_.seed);
    std::normal_distribution<double> normal;
    for (double k : cfg_.k) {
      std::map<double, std::vector<double>> per_p;
      for (const auto& [nominal, omega] : bernstein_omegas()) {
        const Eigen::Index count = es.count_upto(omega);
        std::map<double, double> worst;
        for (int trial = 0; trial < cfg_.trials; ++trial) {
          CoefVector c = CoefVector::Zero(es.size());
          for (Eigen::Index l = 0; l < count; ++l) c[l] = normal(rng);
          const GridFunction f = synthesize(es, c);
          for (double p : cfg_.p) worst[p] = std::max(worst[p], bernstein_ratio(es, f, k, p, omega));
        }
        for (double p : cfg_.p) {
          t.row({cell(nominal), cell(omega), cell(k), p_label(p), cell(worst[p])});
          per_p[p].push_back(worst[p]);
          if (p == 2.0) {
            s.add(assert_at_most("k=" + format_number(k) + " p=2 omega=" + format_number(nominal) + " ratio", worst[p], 1.0 + 1e-12));
          }
        }
      }
      for (const auto& [p, v] : per_p) {
        if (p == 2.0 || v.size() < 2) continue;
        const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
        s.add(assert_below("k=" + format_number(k) + " p=" + p_label(p) + " max ratio stable across omega", *hi / *lo, 2.0));
      }
    }
    write_table(dir_, "bernstein", t);
    nlohmann::json omegas = nlohmann::json::array();
    for (const auto& [nominal, omega] : bernstein_omegas()) omegas.push_back({{"omega", nominal}, {"top_eigenvalue", omega}});
    s.summary = {{"omegas", omegas}};
    return s;
  }

  Section young() {
    const EigenSystem& es = *es_;
    Section s;
    std::mt19937_64 rng(cfg_.seed);
    std::uniform_real_distribution<double> unit;
    std::normal_distribution<double> normal;
    const FilterFamily family;
    Table t({"trial", "t", "p", "q", "alpha", "lhs", "rhs", "slack"});
    double worst = kInf;
    const double t_lo = 4.0 / std::sqrt(es.band_limit());
    for (int trial = 0; trial < cfg_.trials; ++trial) {
      const double tt = std::min(1.0, t_lo * std::pow(1.0 / t_lo, unit(rng)));
      const int which = trial % 3;
      const KernelMatrix K = which == 0   ? build_kernel(es, [&](double x) { return family.h(x); }, tt, "h")
                             : which == 1 ? build_kernel(es, [&](double x) { return family.F(x); }, tt, "F")
                                          : build_kernel(es, [&](double x) { return family.Psi(x); }, tt, "Psi");
      const double inv_p = unit(rng);
      const double inv_alpha = 1.0 - inv_p + inv_p * unit(rng);
      const double inv_q = std::max(0.0, inv_p + inv_alpha - 1.0);
      const double p = inv_p == 0.0 ? kInf : 1.0 / inv_p;
      const double alpha = 1.0 / inv_alpha;
      const double q = inv_q == 0.0 ? kInf : 1.0 / inv_q;
      Eigen::VectorXd v(model_->size());
      for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = normal(rng);
      const YoungCheck y = young_apply_check(K, GridFunction(model_, v), p, q, alpha);
      const double slack = y.slack();
      worst = std::min(worst, slack / std::max(1.0, y.rhs));
      t.row({cell(trial), cell(tt), p_label(p), p_label(q), cell(alpha), cell(y.lhs), cell(y.rhs), cell(slack)});
    }
    write_table(dir_, "young", t);
    s.add(assert_at_least("Young inequality slack (relative)", worst, -1e-12));
    s.summary = {{"trials", cfg_.trials}, {"min_relative_slack", worst}};
    return s;
  }

  Section besov() {
    const EigenSystem& es = *es_;
    Section s;
    Table t({"function", "alpha", "p", "q", "a_norm", "comparator", "ratio", "continuous", "continuous_ratio",
             "interpolation", "estimated_rate", "divergence_flag", "converged"});
    nlohmann::json records = nlohmann::json::array();
    double c_max = 1.0, cont_lo = kInf, cont_hi = 0.0, interp_max = 1.0;
    const double top = std::ldexp(1.0, 2 * cfg_.jmax);
    const std::vector<double> grid = log_grid(1.0, top, 4);
    const double k = cfg_.k.front();
    for (const auto& fn : corpus_) {
      const bool limited = band_limited(fn);
      const double omega_f = top_eigenvalue(fn);
      for (double p : cfg_.p) {
        ErrorCache& cache = this->cache(fn, p);
        const JacksonReport jr = jackson_ratios(cache, k, cfg_.jmax);
        const double jackson_max = jr.ratios.empty() ? 0.0 : *std::max_element(jr.ratios.begin(), jr.ratios.end());
        const double bern = limited && omega_f > 0.0 ? bernstein_ratio(es, fn.f, k, p, omega_f) : kNaN;
        for (double alpha : cfg_.alpha) {
          for (double q : cfg_.q) {
            const BesovParams params{alpha, p, q, cfg_.jmax};
            NormReport r = a_norm(cache, alpha, q, cfg_.jmax);
            r.comparator_norm = lp_comparator_norm(es, fn.f, params);
            r.ratio = r.a_norm / r.comparator_norm;
            const double cont = a_norm_continuous(cache, alpha, q, grid);
            const double cont_ratio = r.a_norm / cont;
            double interp = kNaN;
            if (p == 2.0 && alpha < k) {
              interp = interpolation_norm(es, fn.f, alpha / k, q, k, default_k_grid(es, k));
              interp_max = std::max({interp_max, r.a_norm / interp, interp / r.a_norm});
            }
            c_max = std::max({c_max, r.ratio, 1.0 / r.ratio});
            cont_lo = std::min(cont_lo, cont_ratio);
            cont_hi = std::max(cont_hi, cont_ratio);
            t.row({fn.entry.id, cell(alpha), p_label(p), p_label(q), cell(r.a_norm), cell(r.comparator_norm),
                   cell(r.ratio), cell(cont), cell(cont_ratio), cell(interp), cell(r.estimated_rate),
                   cell(r.divergence_flag), cell(r.converged)});
            records.push_back({{"function_id", fn.entry.id},
                               {"params", {{"alpha", alpha}, {"p", p_label(p)}, {"q", p_label(q)}, {"J", cfg_.jmax}}},
                               {"a_norm", json_number(r.a_norm)},
                               {"comparator", json_number(r.comparator_norm)},
                               {"ratio", json_number(r.ratio)},
                               {"jackson_max_ratio", json_number(jackson_max)},
                               {"bernstein_max_ratio", json_number(bern)},
                               {"divergence_flag", r.divergence_flag}});
            const std::string base = tag(fn) + " alpha=" + format_number(alpha) + " p=" + p_label(p) + " q=" + p_label(q);
            if (!r.converged) s.add(assert_true(base + " solves converged", false));
            // Lacunary decay rates are known; check the divergence flag where the
            // gap between alpha and the rate is unambiguous.
            if (p == 2.0 && std::isinf(q) && fn.entry.expected_rate && fn.entry.params.contains("M")) {
              const double rate = *fn.entry.expected_rate;
              if (std::abs(alpha - rate) > 0.25) {
                s.add(assert_true(base + " divergence flag", r.divergence_flag == (alpha > rate)));
              }
            }
          }
        }
      }
    }
    write_table(dir_, "besov", t);
    s.add(assert_below("a_norm / comparator within [1/c, c], c", c_max, 50.0));
    s.add(assert_within("a_norm / continuous a_norm, min", cont_lo, 0.125, 8.0));
    s.add(assert_within("a_norm / continuous a_norm, max", cont_hi, 0.125, 8.0));
    s.add(assert_below("a_norm / interpolation norm within [1/c, c], c", interp_max, 50.0));
    s.summary = {{"records", records}, {"comparator_c", c_max}, {"continuous_ratio_range", {cont_lo, cont_hi}},
                 {"interpolation_c", interp_max}};
    return s;
  }

  double top_eigenvalue(const Function& fn) const {
    const CoefVector c = project(*es_, fn.f);
    const double scale = c.norm();
    double top = 0.0;
    for (Eigen::Index l = 0; l < c.size(); ++l) {
      if (std::abs(c[l]) > 1e-10 * scale) top = es_->eigenvalues()[l];
    }
    return top;
  }

  // One memoized error sequence per (function, p), shared by all subcommands.
  ErrorCache& cache(const Function& fn, double p) {
    const auto key = std::make_pair(fn.entry.id, p);
    auto it = caches_.find(key);
    if (it == caches_.end()) it = caches_.emplace(key, ErrorCache(*es_, fn.f, p)).first;
    return it->second;
  }

  ExperimentConfig cfg_;
  std::filesystem::path dir_;
  ModelPtr model_;
  std::unique_ptr<EigenSystem> es_;
  std::vector<Function> corpus_;
  nlohmann::json skipped_ = nlohmann::json::array();
  std::map<std::pair<std::string, double>, ErrorCache> caches_;
};

/// Runs one subcommand (or `all`), writes report.json, and returns the exit
/// code: 0 on success, 1 if any assertion failed. Config problems surface
/// as ConfigError.
inline int run(const std::string& subcommand, const ExperimentConfig& config, std::ostream& log = std::cout) {
  std::vector<std::string> names;
  if (subcommand == "all") {
    names = subcommands();
  } else if (std::find(subcommands().begin(), subcommands().end(), subcommand) != subcommands().end()) {
    names = {subcommand};
  } else {
    throw ConfigError("unknown subcommand '" + subcommand + "'");
  }
  Experiment exp(config);
  nlohmann::json report{{"config", to_json(exp.config())},
                        {"model", to_json(exp.model()->descriptor())},
                        {"eigenpairs", exp.eigensystem().size()},
                        {"subcommands", nlohmann::json::object()}};
  std::size_t failed = 0;
  for (const auto& name : names) {
    const Section section = exp.run(name);
    report["subcommands"][name] = section.json();
    failed += section.failures();
    log << name << ": " << section.assertions.size() << " assertions, " << section.failures() << " failed\n";
    for (const auto& a : section.assertions) {
      if (!a.pass) log << "  FAIL " << a.name << " = " << format_number(a.value) << "\n";
    }
  }
  report["failed"] = failed;
  report["pass"] = failed == 0;
  write_file_atomic(std::filesystem::path(exp.config().out) / "report.json", report.dump(2) + "\n");
  return failed == 0 ? 0 : 1;
}

}  // namespace besovlab
