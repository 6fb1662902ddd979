#include "mavg/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "mavg/averaging.hpp"
#include "mavg/causal.hpp"
#include "mavg/error.hpp"
#include "mavg/io.hpp"
#include "mavg/optimal.hpp"
#include "mavg/super_learner.hpp"
#include "mavg/synthetic.hpp"
#include "mavg/version.hpp"

namespace mavg {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

bool parse_bool(std::string_view key, std::string_view v) {
  const std::string s = lower(v);
  if (s == "1" || s == "true" || s == "on" || s == "yes") return true;
  if (s == "0" || s == "false" || s == "off" || s == "no") return false;
  throw Error(ErrorCode::kInvalidArgument, "setting '" + std::string(key) + "': expected a boolean, got '" +
                                               std::string(v) + "'");
}

std::uint64_t parse_count(std::string_view key, std::string_view v) {
  std::uint64_t out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size())
    throw Error(ErrorCode::kInvalidArgument, "setting '" + std::string(key) + "': expected a non-negative integer, got '" +
                                                 std::string(v) + "'");
  return out;
}

std::vector<std::string> split_list(std::string_view v) {
  std::vector<std::string> out;
  std::stringstream ss{std::string(v)};
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    const auto e = item.find_last_not_of(" \t");
    out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

}  // namespace

std::string_view study_name(Study s) {
  switch (s) {
    case Study::kLinear: return "linear";
    case Study::kForecast: return "forecast";
    case Study::kCausal: return "causal";
  }
  return "?";
}

Study parse_study(std::string_view name) {
  const std::string s = lower(name);
  if (s == "linear" || s == "1") return Study::kLinear;
  if (s == "forecast" || s == "2") return Study::kForecast;
  if (s == "causal" || s == "3") return Study::kCausal;
  throw Error(ErrorCode::kInvalidArgument, "unknown study '" + std::string(name) + "'");
}

void StudyConfig::validate() const {
  require(runs >= 1, ErrorCode::kInvalidArgument, "config: runs must be at least 1");
  require(n >= 10, ErrorCode::kInvalidArgument, "config: n must be at least 10");
  require(workers >= 1, ErrorCode::kInvalidArgument, "config: workers must be at least 1");
  require(folds >= 2, ErrorCode::kInvalidArgument, "config: folds must be at least 2");
  require(truth_n >= 2, ErrorCode::kInvalidArgument, "config: truth_n must be at least 2");
  require(!out_dir.empty(), ErrorCode::kInvalidArgument, "config: output directory is empty");
  for (const auto& s : learner_sets) parse_learner_list(s);
}

std::string StudyConfig::fingerprint() const {
  std::ostringstream s;
  s << "study=" << study_name(study) << ";n=" << n << ";seed=" << seed;
  if (study != Study::kLinear) {
    s << ";folds=" << folds << ";sets=";
    for (const auto& l : learner_sets) s << l << '|';
  }
  if (study == Study::kCausal) s << ";horizon=" << horizon << ";persistence=" << persistence;
  s << ";version=" << kVersion;
  return s.str();
}

StudyConfig default_config(Study study, bool full_scale) {
  StudyConfig c;
  c.study = study;
  switch (study) {
    case Study::kLinear:
      c.runs = full_scale ? 5000 : 1000;
      c.n = 500;
      break;
    case Study::kForecast:
      c.runs = full_scale ? 5000 : 500;
      c.n = 500;
      break;
    case Study::kCausal:
      c.runs = full_scale ? 1000 : 100;
      c.n = 1000;
      break;
  }
  return c;
}

void apply_setting(StudyConfig& cfg, std::string_view raw_key, std::string_view value) {
  std::string key = lower(raw_key);
  std::replace(key.begin(), key.end(), '-', '_');
  if (key == "study") {
    cfg.study = parse_study(value);
  } else if (key == "runs") {
    cfg.runs = parse_count(key, value);
  } else if (key == "n") {
    cfg.n = parse_count(key, value);
  } else if (key == "seed") {
    cfg.seed = parse_count(key, value);
  } else if (key == "workers") {
    cfg.workers = parse_count(key, value);
  } else if (key == "out" || key == "out_dir") {
    cfg.out_dir = std::string(value);
  } else if (key == "folds") {
    cfg.folds = parse_count(key, value);
  } else if (key == "horizon") {
    cfg.horizon = parse_count(key, value);
  } else if (key == "truth_n") {
    cfg.truth_n = parse_count(key, value);
  } else if (key == "persistence") {
    cfg.persistence = parse_bool(key, value);
  } else if (key == "resume") {
    cfg.resume = parse_bool(key, value);
  } else if (key == "full_scale") {
    if (parse_bool(key, value)) cfg.runs = default_config(cfg.study, true).runs;
  } else if (key == "learner_sets" || key == "learners") {
    // Sets are separated by ';' so that a set may itself be a comma list of learners.
    std::vector<std::string> sets;
    std::stringstream ss{std::string(value)};
    std::string item;
    while (std::getline(ss, item, ';'))
      if (!split_list(item).empty()) sets.push_back(item);
    require(!sets.empty(), ErrorCode::kInvalidArgument, "setting 'learner_sets': empty");
    for (const auto& s : sets) parse_learner_list(s);
    cfg.learner_sets = sets;
  } else {
    throw Error(ErrorCode::kInvalidArgument, "unknown setting '" + std::string(raw_key) + "'");
  }
}

const std::vector<double>& RunRecord::get(const std::string& key) const {
  const auto it = values.find(key);
  if (it == values.end()) throw Error(ErrorCode::kInvalidArgument, "run record has no field '" + key + "'");
  return it->second;
}

std::string to_json_line(const RunRecord& r) {
  json j;
  j["run"] = r.run;
  j["method"] = r.method;
  j["ok"] = r.ok;
  if (!r.ok) j["error"] = r.error;
  json values = json::object();
  for (const auto& [k, v] : r.values) {
    json arr = json::array();
    for (double x : v) arr.push_back(std::isfinite(x) ? json(x) : json(nullptr));
    values[k] = std::move(arr);
  }
  j["values"] = std::move(values);
  return j.dump();
}

RunRecord from_json_line(std::string_view line) {
  const json j = json::parse(line);
  RunRecord r;
  r.run = j.at("run").get<std::size_t>();
  r.method = j.at("method").get<std::string>();
  r.ok = j.at("ok").get<bool>();
  if (j.contains("error")) r.error = j.at("error").get<std::string>();
  for (const auto& [k, arr] : j.at("values").items()) {
    std::vector<double> v;
    for (const auto& x : arr) v.push_back(x.is_null() ? kNaN : x.get<double>());
    r.values[k] = std::move(v);
  }
  return r;
}

std::vector<std::string> study_methods(const StudyConfig& cfg) {
  switch (cfg.study) {
    case Study::kLinear:
      return {"OLS", "MS", "FMA", "BMA", "MMA"};
    case Study::kForecast: {
      std::vector<std::string> m{"OLS", "MS", "FMA", "BMA", "MMA"};
      m.insert(m.end(), cfg.learner_sets.begin(), cfg.learner_sets.end());
      return m;
    }
    case Study::kCausal: {
      std::vector<std::string> m;
      for (const auto& s : cfg.learner_sets)
        for (const char* rule : {"always", "threshold"}) m.push_back(s + "/" + rule);
      return m;
    }
  }
  return {};
}

namespace {

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

template <typename Fn>
RunRecord guarded(std::size_t run, const std::string& method, Fn&& fn) {
  RunRecord r;
  r.run = run;
  r.method = method;
  try {
    fn(r);
  } catch (const std::exception& e) {
    r.ok = false;
    r.error = e.what();
    r.values.clear();
  }
  return r;
}

std::vector<RunRecord> linear_run(const StudyConfig& cfg, std::size_t run) {
  Rng rng(cfg.seed, run);
  const SimulatedStudy sim = gen_linear_study(cfg.n, rng);
  const Dataset& d = sim.data;
  const Vector beta = linear_study_beta();

  std::vector<FittedModel> subsets;
  auto record_fit = [&](RunRecord& r, const AveragedFit& f) {
    const Vector slopes = f.coefficients.tail(10);
    std::vector<double> hit(10);
    for (Eigen::Index j = 0; j < 10; ++j)
      hit[static_cast<std::size_t>(j)] = (f.ci_lower[j + 1] <= beta[j] && beta[j] <= f.ci_upper[j + 1]) ? 1.0 : 0.0;
    r.values["estimate"] = to_std(slopes);
    r.values["se"] = to_std(f.std_errors.tail(10));
    r.values["hit"] = hit;
    r.values["mse"] = {(f.predict(d.x) - sim.mu).squaredNorm() / static_cast<double>(d.n())};
  };
  auto all_subsets = [&]() -> const std::vector<FittedModel>& {
    if (subsets.empty()) subsets = fit_candidates(d, enumerate_all_subsets(d.p()));
    return subsets;
  };

  std::vector<RunRecord> out;
  out.push_back(guarded(run, "OLS", [&](RunRecord& r) { record_fit(r, ols_fit(d)); }));
  out.push_back(guarded(run, "MS", [&](RunRecord& r) { record_fit(r, ms_fit(d)); }));
  out.push_back(guarded(run, "FMA", [&](RunRecord& r) { record_fit(r, fma_fit(d, all_subsets())); }));
  out.push_back(guarded(run, "BMA", [&](RunRecord& r) { record_fit(r, bma_fit(d, all_subsets())); }));
  out.push_back(guarded(run, "MMA", [&](RunRecord& r) { record_fit(r, mma_fit(d)); }));
  return out;
}

std::vector<RunRecord> forecast_run(const StudyConfig& cfg, std::size_t run) {
  Rng rng(cfg.seed, run);
  const SimulatedStudy train = gen_forecast_study(cfg.n, rng);
  const SimulatedStudy test = gen_forecast_study(cfg.n, rng);
  const std::uint64_t sl_seed = rng.next_u64();
  const Dataset& d = train.data;
  const double nt = static_cast<double>(test.data.n());

  std::vector<FittedModel> subsets;
  auto all_subsets = [&]() -> const std::vector<FittedModel>& {
    if (subsets.empty()) subsets = fit_candidates(d, enumerate_all_subsets(d.p()));
    return subsets;
  };
  auto mspe = [&](RunRecord& r, const Vector& pred) {
    r.values["mspe"] = {(test.data.y - pred).squaredNorm() / nt};
  };

  std::vector<RunRecord> out;
  out.push_back(guarded(run, "OLS", [&](RunRecord& r) { mspe(r, ols_fit(d).predict(test.data.x)); }));
  out.push_back(guarded(run, "MS", [&](RunRecord& r) { mspe(r, ms_fit(d).predict(test.data.x)); }));
  out.push_back(guarded(run, "FMA", [&](RunRecord& r) { mspe(r, fma_fit(d, all_subsets()).predict(test.data.x)); }));
  out.push_back(guarded(run, "BMA", [&](RunRecord& r) { mspe(r, bma_fit(d, all_subsets()).predict(test.data.x)); }));
  out.push_back(guarded(run, "MMA", [&](RunRecord& r) { mspe(r, mma_fit(d).predict(test.data.x)); }));
  for (const auto& set : cfg.learner_sets) {
    out.push_back(guarded(run, set, [&](RunRecord& r) {
      const SuperLearnerFit fit = sl_fit(d, parse_learner_list(set), cfg.folds, sl_seed);
      mspe(r, sl_predict(fit, test.data.x));
      r.values["weights"] = to_std(fit.meta_weights.values());
      r.values["cv_risk"] = to_std(fit.cv_risk);
      r.values["fallbacks"] = {static_cast<double>(fit.warnings.size())};
    }));
  }
  return out;
}

std::vector<RunRecord> causal_run(const StudyConfig& cfg, std::size_t run) {
  const Rng rng(cfg.seed, run);
  const LongitudinalPanel panel = simulate_longitudinal(cfg.n, cfg.horizon, rng.child(0));
  const std::uint64_t fold_seed = rng.child(1).next_u64();
  std::vector<RunRecord> out;
  for (const auto& set : cfg.learner_sets) {
    const auto learners = parse_learner_list(set);
    for (const char* rule_name : {"always", "threshold"}) {
      out.push_back(guarded(run, set + "/" + rule_name, [&](RunRecord& r) {
        const TreatmentRule rule = parse_rule(rule_name, cfg.persistence);
        const GFormulaResult g = sequential_gformula(panel, rule, learners, cfg.folds, fold_seed);
        r.values["psi"] = {g.psi_hat};
        // Weights stored time-major, t = 0 first.
        std::vector<double> w, n_fit;
        std::size_t fallbacks = 0;
        for (auto it = g.steps.rbegin(); it != g.steps.rend(); ++it) {
          w.insert(w.end(), it->weights.data(), it->weights.data() + it->weights.size());
          n_fit.push_back(static_cast<double>(it->n_fit));
          fallbacks += it->warnings.size();
        }
        r.values["weights"] = w;
        r.values["n_fit"] = n_fit;
        r.values["fallbacks"] = {static_cast<double>(fallbacks)};
      }));
    }
  }
  return out;
}

}  // namespace

std::vector<RunRecord> run_single(const StudyConfig& cfg, std::size_t run) {
  switch (cfg.study) {
    case Study::kLinear: return linear_run(cfg, run);
    case Study::kForecast: return forecast_run(cfg, run);
    case Study::kCausal: return causal_run(cfg, run);
  }
  return {};
}

const MetricsBlock& MetricsTable::block(const std::string& name) const {
  for (const auto& b : blocks)
    if (b.name == name) return b;
  throw Error(ErrorCode::kInvalidArgument, "table has no block '" + name + "'");
}

double MetricsTable::value(const std::string& block_name, const std::string& row, const std::string& column) const {
  const auto& b = block(block_name);
  const auto c = std::find(b.columns.begin(), b.columns.end(), column);
  require(c != b.columns.end(), ErrorCode::kInvalidArgument, "block '" + block_name + "' has no column '" + column + "'");
  for (const auto& r : b.rows)
    if (r.label == row) return r.values[static_cast<std::size_t>(c - b.columns.begin())];
  throw Error(ErrorCode::kInvalidArgument, "block '" + block_name + "' has no row '" + row + "'");
}

namespace {

struct Moments {
  double sum = 0.0, sum_sq = 0.0;
  std::size_t count = 0;
  void add(double x) {
    sum += x;
    sum_sq += x * x;
    ++count;
  }
  double mean() const { return count ? sum / static_cast<double>(count) : kNaN; }
  double sd() const {
    if (count < 2) return kNaN;
    const double m = mean();
    return std::sqrt(std::max(0.0, (sum_sq - static_cast<double>(count) * m * m) / static_cast<double>(count - 1)));
  }
};

// Per-method records, in run order, with failed cells split off.
struct ByMethod {
  std::vector<const RunRecord*> ok;
  std::size_t failed = 0;
};

std::map<std::string, ByMethod> group(const std::vector<RunRecord>& records) {
  std::map<std::string, ByMethod> g;
  for (const auto& r : records) {
    auto& m = g[r.method];
    if (r.ok) {
      m.ok.push_back(&r);
    } else {
      ++m.failed;
    }
  }
  return g;
}

std::vector<std::string> beta_columns() {
  std::vector<std::string> c;
  for (int j = 1; j <= 10; ++j) c.push_back("beta" + std::to_string(j));
  return c;
}

MetricsBlock runs_block(const std::vector<std::string>& methods, std::map<std::string, ByMethod>& g) {
  MetricsBlock b{"Runs", {"valid", "failed"}, {}};
  for (const auto& m : methods)
    b.rows.push_back({m, {static_cast<double>(g[m].ok.size()), static_cast<double>(g[m].failed)}});
  return b;
}

MetricsTable aggregate_linear(const StudyConfig& cfg, const std::vector<RunRecord>& records) {
  auto g = group(records);
  const auto methods = study_methods(cfg);
  MetricsTable t;
  t.title = "Study 1: linear model, n = " + std::to_string(cfg.n) + ", R = " + std::to_string(cfg.runs);
  MetricsBlock est{"Point Estimates", beta_columns(), {}};
  MetricsBlock se{"Standard Errors", beta_columns(), {}};
  MetricsBlock cov{"Coverage Probability (in %)", beta_columns(), {}};
  MetricsBlock mse{"MSE with respect to mu_y", {"MSE"}, {}};
  const Vector beta = linear_study_beta();
  MetricsBlock::Row truth{"true", to_std(beta)};
  est.rows.push_back(truth);
  for (const auto& m : methods) {
    const auto& recs = g[m].ok;
    std::vector<Moments> e(10), s(10);
    std::vector<double> hits(10, 0.0);
    Moments err;
    for (const auto* r : recs) {
      const auto& ev = r->get("estimate");
      const auto& sv = r->get("se");
      const auto& hv = r->get("hit");
      for (std::size_t j = 0; j < 10; ++j) {
        e[j].add(ev[j]);
        s[j].add(sv[j]);
        hits[j] += hv[j];
      }
      err.add(r->scalar("mse"));
    }
    std::vector<double> mean_est(10), mean_se(10), sim_se(10), coverage(10);
    for (std::size_t j = 0; j < 10; ++j) {
      mean_est[j] = e[j].mean();
      mean_se[j] = s[j].mean();
      sim_se[j] = e[j].sd();
      coverage[j] = recs.empty() ? kNaN : 100.0 * hits[j] / static_cast<double>(recs.size());
    }
    est.rows.push_back({m, mean_est});
    se.rows.push_back({m + " est", mean_se});
    se.rows.push_back({m + " sim", sim_se});
    cov.rows.push_back({m, coverage});
    mse.rows.push_back({m, {err.mean()}});
  }
  t.blocks = {est, se, cov, mse, runs_block(methods, g)};
  t.notes.push_back("'est' rows average the estimated standard errors; 'sim' rows are the standard deviation of the "
                    "point estimates across runs.");
  return t;
}

MetricsTable aggregate_forecast(const StudyConfig& cfg, const std::vector<RunRecord>& records) {
  auto g = group(records);
  const auto methods = study_methods(cfg);
  MetricsTable t;
  t.title = "Study 2: forecasting, n = " + std::to_string(cfg.n) + ", R = " + std::to_string(cfg.runs);
  MetricsBlock perf{"Predictive Performance", {"MSPE", "s.e. of mean", "sd across runs"}, {}};
  for (const auto& m : methods) {
    Moments mo;
    for (const auto* r : g[m].ok) mo.add(r->scalar("mspe"));
    perf.rows.push_back({m, {mo.mean(), mo.sd() / std::sqrt(static_cast<double>(mo.count)), mo.sd()}});
  }

  // Learner rows in first-seen order across the configured sets.
  std::vector<std::string> learner_rows;
  for (const auto& set : cfg.learner_sets)
    for (const auto& l : parse_learner_list(set))
      if (std::find(learner_rows.begin(), learner_rows.end(), l.name) == learner_rows.end())
        learner_rows.push_back(l.name);
  MetricsBlock choice{"Choice of Learners", cfg.learner_sets, {}};
  for (const auto& name : learner_rows) choice.rows.push_back({name, std::vector<double>(cfg.learner_sets.size(), kNaN)});
  for (std::size_t s = 0; s < cfg.learner_sets.size(); ++s) {
    const auto learners = parse_learner_list(cfg.learner_sets[s]);
    for (std::size_t j = 0; j < learners.size(); ++j) {
      Moments mo;
      for (const auto* r : g[cfg.learner_sets[s]].ok) mo.add(r->get("weights").at(j));
      const auto row = std::find(learner_rows.begin(), learner_rows.end(), learners[j].name) - learner_rows.begin();
      choice.rows[static_cast<std::size_t>(row)].values[s] = mo.mean();
    }
  }
  t.blocks = {perf, choice, runs_block(methods, g)};
  t.notes.push_back("MSPE is evaluated on an independent test set of size n drawn per run.");
  t.notes.push_back("'s.e. of mean' is sd across runs divided by sqrt(valid runs).");
  return t;
}

MetricsTable aggregate_causal(const StudyConfig& cfg, const std::vector<RunRecord>& records) {
  auto g = group(records);
  const auto methods = study_methods(cfg);
  MetricsTable t;
  t.title = "Study 3: sequential g-formula, n = " + std::to_string(cfg.n) + ", R = " + std::to_string(cfg.runs);

  std::map<std::string, TruthEstimate> truth;
  for (const char* rule : {"always", "threshold"})
    truth[rule] = truth_oracle(parse_rule(rule, cfg.persistence), cfg.truth_n, mix64(cfg.seed ^ 0x7472757468ULL),
                               cfg.horizon);

  MetricsBlock bias{"Bias", {"mean estimate", "truth", "bias", "sd across runs", "truth MC s.e."}, {}};
  std::vector<std::string> t_cols;
  for (std::size_t s = 0; s <= cfg.horizon; ++s) t_cols.push_back("t=" + std::to_string(s));
  t_cols.push_back("mean");
  MetricsBlock weights{"Learner Weights", t_cols, {}};
  for (const auto& m : methods) {
    const std::string rule = m.substr(m.rfind('/') + 1);
    const std::string set = m.substr(0, m.rfind('/'));
    Moments psi;
    for (const auto* r : g[m].ok) psi.add(r->scalar("psi"));
    const auto& tr = truth.at(rule);
    bias.rows.push_back({m, {psi.mean(), tr.mean, psi.mean() - tr.mean, psi.sd(), tr.mc_se}});

    const auto learners = parse_learner_list(set);
    const std::size_t L = learners.size();
    for (std::size_t j = 0; j < L; ++j) {
      std::vector<double> row;
      Moments overall;
      for (std::size_t s = 0; s <= cfg.horizon; ++s) {
        Moments mo;
        for (const auto* r : g[m].ok) mo.add(r->get("weights").at(s * L + j));
        row.push_back(mo.mean());
        overall.add(mo.mean());
      }
      row.push_back(overall.mean());
      weights.rows.push_back({m + "/" + learners[j].name, row});
    }
  }
  t.blocks = {bias, weights, runs_block(methods, g)};
  t.notes.push_back("Truth from " + std::to_string(cfg.truth_n) + " intervened subjects per rule.");
  t.notes.push_back("Coverage is not reported.");
  return t;
}

}  // namespace

MetricsTable aggregate(const StudyConfig& cfg, const std::vector<RunRecord>& records) {
  switch (cfg.study) {
    case Study::kLinear: return aggregate_linear(cfg, records);
    case Study::kForecast: return aggregate_forecast(cfg, records);
    case Study::kCausal: return aggregate_causal(cfg, records);
  }
  return {};
}

std::string to_csv(const MetricsTable& table) {
  std::ostringstream out;
  out << "block,row,column,value\n";
  for (const auto& b : table.blocks)
    for (const auto& r : b.rows)
      for (std::size_t c = 0; c < b.columns.size(); ++c)
        out << csv_escape(b.name) << ',' << csv_escape(r.label) << ',' << csv_escape(b.columns[c]) << ','
            << format_double(r.values[c]) << '\n';
  return out.str();
}

std::string to_markdown(const MetricsTable& table) {
  std::ostringstream out;
  if (!table.title.empty()) out << "# " << table.title << "\n";
  for (const auto& b : table.blocks) {
    out << "\n## " << b.name << "\n\n|";
    for (const auto& c : b.columns) out << " | " << c;
    out << " |\n|---";
    for (std::size_t c = 0; c < b.columns.size(); ++c) out << "|---:";
    out << "|\n";
    for (const auto& r : b.rows) {
      out << "| " << r.label;
      for (double v : r.values) {
        char buf[32];
        if (std::isnan(v)) {
          buf[0] = '\0';
        } else if (v == std::round(v) && std::abs(v) < 1e9) {
          std::snprintf(buf, sizeof buf, "%.0f", v);
        } else {
          std::snprintf(buf, sizeof buf, "%.3f", v);
        }
        out << " | " << buf;
      }
      out << " |\n";
    }
  }
  if (!table.notes.empty()) {
    out << "\n";
    for (const auto& n : table.notes) out << "- " << n << "\n";
  }
  return out.str();
}

namespace {

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot open " + path + " for writing");
  out << text;
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path);
}

}  // namespace

void emit_csv(const MetricsTable& table, const std::string& path) { write_text(path, to_csv(table)); }
void emit_markdown(const MetricsTable& table, const std::string& path) { write_text(path, to_markdown(table)); }

std::vector<std::pair<std::string, std::string>> resolved_decisions(const StudyConfig& cfg) {
  std::vector<std::pair<std::string, std::string>> d{
      {"normal_second_argument", "standard deviation"},
      {"linear_noise_sd", "exp(2)"},
      {"forecast_noise_sd", "exp(1.5)"},
      {"copula", "Clayton, theta = 1, gamma frailty"},
      {"stepwise_search", "bidirectional AIC starting from the full model"},
      {"fma_bma_candidates", "all 2^p subsets, intercept always included"},
      {"mma_candidates", "nested in column order; sigma^2 from the full model"},
  };
  if (cfg.study != Study::kLinear) {
    d.push_back({"sl_folds", std::to_string(cfg.folds)});
    d.push_back({"sl_meta_step", "NNLS, normalized, refined by simplex-constrained least squares"});
    d.push_back({"sl_failure_policy", "training-fold mean prediction"});
    std::string sets;
    for (const auto& s : cfg.learner_sets) {
      sets += (sets.empty() ? "" : "; ") + s + " = [";
      std::string names;
      for (const auto& l : parse_learner_list(s)) names += (names.empty() ? "" : ", ") + l.name;
      sets += names + "]";
    }
    d.push_back({"learner_sets", sets});
  }
  if (cfg.study == Study::kForecast) d.push_back({"mspe_test_set", "independent draw of size n per run"});
  if (cfg.study == Study::kCausal) {
    d.push_back({"horizon", std::to_string(cfg.horizon)});
    d.push_back({"truncation_tails_L3_Y", "(-10,-3,3,10)"});
    d.push_back({"truncation_tails_L2", "(0.03,0.09,0.7,0.8); L2 can fall to 0.03"});
    d.push_back({"baseline_intervention", "A_0 = 0 under both rules; rules act from t = 1"});
    d.push_back({"threshold_rule", "L1 < 350 or L2 < 0.15 or L3 < -2"});
    d.push_back({"threshold_persistence", cfg.persistence ? "on" : "off"});
    d.push_back({"intervention_censoring", "C_t = 0"});
    d.push_back({"history_encoding", "V1, V2, V3, L1_t, L2_t, L3_t, A_t, A_{t-1}, Y_{t-1}"});
    d.push_back({"truth_subjects", std::to_string(cfg.truth_n)});
  }
  return d;
}

namespace {

std::string records_header(const StudyConfig& cfg) {
  json h;
  h["fingerprint"] = cfg.fingerprint();
  return h.dump();
}

// Loads complete runs (every method present) from a record file written under the same fingerprint.
void load_records(const std::string& path, const StudyConfig& cfg, std::map<std::size_t, std::vector<RunRecord>>& runs) {
  std::ifstream in(path);
  if (!in) return;
  std::string line;
  if (!std::getline(in, line) || line != records_header(cfg)) return;
  const auto methods = study_methods(cfg);
  std::map<std::size_t, std::vector<RunRecord>> found;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    RunRecord r;
    try {
      r = from_json_line(line);
    } catch (const std::exception&) {
      break;  // a torn final line from an interrupted write
    }
    if (r.run < cfg.runs) found[r.run].push_back(std::move(r));
  }
  for (auto& [run, recs] : found) {
    if (runs.count(run) || recs.size() != methods.size()) continue;
    bool match = true;
    for (std::size_t i = 0; i < methods.size(); ++i) match = match && recs[i].method == methods[i];
    if (match) runs[run] = std::move(recs);
  }
}

}  // namespace

StudyResult run_study(const StudyConfig& cfg, const Progress& progress) {
  cfg.validate();
  fs::create_directories(cfg.out_dir);
  const std::string name(study_name(cfg.study));
  const std::string final_path = (fs::path(cfg.out_dir) / ("runs_" + name + ".ndjson")).string();
  const std::string partial_path = (fs::path(cfg.out_dir) / ("runs_" + name + ".partial.ndjson")).string();

  std::map<std::size_t, std::vector<RunRecord>> done;
  if (cfg.resume) {
    load_records(final_path, cfg, done);
    load_records(partial_path, cfg, done);
  }
  StudyResult result;
  result.config = cfg;
  result.reused_runs = done.size();

  std::vector<std::size_t> todo;
  for (std::size_t r = 0; r < cfg.runs; ++r)
    if (!done.count(r)) todo.push_back(r);

  if (!todo.empty()) {
    std::ofstream partial;
    const bool fresh = !cfg.resume || !fs::exists(partial_path);
    partial.open(partial_path, fresh ? std::ios::trunc : std::ios::app);
    if (!partial) throw Error(ErrorCode::kIo, "cannot open " + partial_path + " for writing");
    if (fresh) {
      partial << records_header(cfg) << '\n';
    } else {
      // Rewrite the partial file so a stale header does not shadow the new records.
      partial.close();
      partial.open(partial_path, std::ios::trunc);
      partial << records_header(cfg) << '\n';
      for (const auto& [run, recs] : done)
        for (const auto& r : recs) partial << to_json_line(r) << '\n';
    }
    partial.flush();

    std::mutex mu;
    std::atomic<std::size_t> next{0};
    std::size_t completed = done.size();
    std::exception_ptr failure;
    auto worker = [&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= todo.size()) return;
        std::vector<RunRecord> recs;
        try {
          recs = run_single(cfg, todo[i]);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          if (!failure) failure = std::current_exception();
          return;
        }
        std::lock_guard<std::mutex> lock(mu);
        for (const auto& r : recs) partial << to_json_line(r) << '\n';
        partial.flush();
        done[todo[i]] = std::move(recs);
        ++completed;
        if (progress) progress(completed, cfg.runs);
      }
    };
    const std::size_t threads = std::min(cfg.workers, todo.size());
    if (threads <= 1) {
      worker();
    } else {
      std::vector<std::thread> pool;
      for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
      for (auto& th : pool) th.join();
    }
    if (failure) std::rethrow_exception(failure);
  }

  for (auto& [run, recs] : done)
    for (auto& r : recs) result.records.push_back(std::move(r));

  {
    std::ostringstream all;
    all << records_header(cfg) << '\n';
    for (const auto& r : result.records) all << to_json_line(r) << '\n';
    write_text(final_path, all.str());
  }
  std::error_code ec;
  fs::remove(partial_path, ec);

  result.table = aggregate(cfg, result.records);
  emit_csv(result.table, (fs::path(cfg.out_dir) / ("table_" + name + ".csv")).string());
  emit_markdown(result.table, (fs::path(cfg.out_dir) / ("table_" + name + ".md")).string());

  std::ostringstream meta;
  meta << "version = " << kVersion << "\n";
  meta << "study = " << name << "\nruns = " << cfg.runs << "\nn = " << cfg.n << "\nseed = " << cfg.seed << "\n";
  meta << "rng = counter-based splitmix64; run r uses stream r\n";
  for (const auto& [k, v] : resolved_decisions(cfg)) meta << k << " = " << v << "\n";
  write_text((fs::path(cfg.out_dir) / ("meta_" + name + ".txt")).string(), meta.str());
  write_text((fs::path(cfg.out_dir) / "meta.txt").string(), meta.str());
  return result;
}

}  // namespace mavg
