#include "mavg/mavg.h"

#include <cstring>
#include <fstream>
#include <memory>
#include <new>
#include <sstream>
#include <string>
#include <variant>

#include "mavg/averaging.hpp"
#include "mavg/causal.hpp"
#include "mavg/error.hpp"
#include "mavg/harness.hpp"
#include "mavg/io.hpp"
#include "mavg/optimal.hpp"
#include "mavg/super_learner.hpp"
#include "mavg/version.hpp"

struct mavg_dataset {
  mavg::Dataset data;
};

struct mavg_fit {
  std::variant<mavg::AveragedFit, mavg::SuperLearnerFit> fit;
};

struct mavg_panel {
  mavg::LongitudinalPanel panel;
};

struct mavg_config {
  mavg::StudyConfig cfg;
};

namespace {

thread_local std::string g_last_error;

template <typename Fn>
mavg_status guard(Fn&& fn) {
  try {
    fn();
    return MAVG_OK;
  } catch (const mavg::Error& e) {
    g_last_error = e.what();
    return static_cast<mavg_status>(static_cast<int>(e.code()));
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return MAVG_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return MAVG_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  if (!p) throw mavg::Error(mavg::ErrorCode::kInvalidArgument, std::string(what) + " is null");
}

void copy_out(const mavg::Vector& v, double* out, std::size_t capacity, std::size_t* count) {
  need(count, "count");
  *count = static_cast<std::size_t>(v.size());
  if (out) std::memcpy(out, v.data(), sizeof(double) * std::min(capacity, *count));
}

mavg::Matrix read_rows(const double* x, std::size_t n, std::size_t p) {
  mavg::Matrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < p; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = x[i * p + j];
  return m;
}

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::string fit_csv(const mavg_fit& fit) {
  using mavg::csv_escape;
  using mavg::format_double;
  std::ostringstream out;
  if (const auto* a = std::get_if<mavg::AveragedFit>(&fit.fit)) {
    out << "term,estimate,std_error,ci_lower,ci_upper\n";
    for (std::size_t j = 0; j < a->names.size(); ++j) {
      const auto k = static_cast<Eigen::Index>(j);
      out << csv_escape(a->names[j]) << ',' << format_double(a->coefficients[k]) << ','
          << format_double(a->std_errors[k]) << ',' << format_double(a->ci_lower[k]) << ','
          << format_double(a->ci_upper[k]) << '\n';
    }
  } else {
    const auto& s = std::get<mavg::SuperLearnerFit>(fit.fit);
    out << "learner,weight,nnls_weight,cv_risk\n";
    for (std::size_t j = 0; j < s.learners.size(); ++j) {
      const auto k = static_cast<Eigen::Index>(j);
      out << csv_escape(s.learners[j].name) << ',' << format_double(s.meta_weights[j]) << ','
          << format_double(s.nnls_weights[k]) << ',' << format_double(s.cv_risk[k]) << '\n';
    }
  }
  return out.str();
}

void copy_text(const std::string& text, char* out, std::size_t capacity) {
  if (!out || capacity == 0) return;
  const std::size_t k = std::min(capacity - 1, text.size());
  std::memcpy(out, text.data(), k);
  out[k] = '\0';
}

}  // namespace

extern "C" {

const char* mavg_version(void) { return mavg::kVersion; }

const char* mavg_last_error(void) { return g_last_error.c_str(); }

const char* mavg_status_name(mavg_status status) {
  switch (status) {
    case MAVG_OK: return "ok";
    case MAVG_INVALID_ARGUMENT: return "invalid argument";
    case MAVG_DIMENSION_MISMATCH: return "dimension mismatch";
    case MAVG_NUMERICAL: return "numerical failure";
    case MAVG_CONVERGENCE: return "convergence failure";
    case MAVG_IO: return "i/o error";
    case MAVG_REFUSED: return "refused";
    case MAVG_INTERNAL: return "internal error";
  }
  return "unknown status";
}

mavg_status mavg_dataset_create(const double* y, const double* x, size_t n, size_t p, const char* const* names,
                                mavg_dataset** out) {
  return guard([&] {
    need(out, "out");
    need(y, "y");
    if (p > 0) need(x, "x");
    auto d = std::make_unique<mavg_dataset>();
    d->data.y = Eigen::Map<const mavg::Vector>(y, static_cast<Eigen::Index>(n));
    d->data.x = p > 0 ? read_rows(x, n, p) : mavg::Matrix(static_cast<Eigen::Index>(n), 0);
    if (names) {
      for (std::size_t j = 0; j < p; ++j) {
        need(names[j], "column name");
        d->data.names.emplace_back(names[j]);
      }
    } else {
      d->data.names = mavg::default_names(p);
    }
    d->data.validate();
    *out = d.release();
  });
}

mavg_status mavg_dataset_read_csv(const char* path, const char* response, mavg_dataset** out) {
  return guard([&] {
    need(out, "out");
    need(path, "path");
    need(response, "response");
    auto d = std::make_unique<mavg_dataset>();
    d->data = mavg::read_dataset_csv(path, response);
    *out = d.release();
  });
}

mavg_status mavg_dataset_generate(const char* study, size_t n, uint64_t seed, mavg_dataset** out) {
  return guard([&] {
    need(out, "out");
    need(study, "study");
    mavg::Rng rng(seed);
    const mavg::Study s = mavg::parse_study(study);
    if (s == mavg::Study::kCausal)
      throw mavg::Error(mavg::ErrorCode::kInvalidArgument, "use mavg_panel_generate for the causal study");
    auto d = std::make_unique<mavg_dataset>();
    d->data = (s == mavg::Study::kLinear ? mavg::gen_linear_study(n, rng) : mavg::gen_forecast_study(n, rng)).data;
    *out = d.release();
  });
}

mavg_status mavg_dataset_write_csv(const mavg_dataset* data, const char* path) {
  return guard([&] {
    need(data, "dataset");
    need(path, "path");
    mavg::write_dataset_csv(data->data, path);
  });
}

mavg_status mavg_dataset_dims(const mavg_dataset* data, size_t* n, size_t* p) {
  return guard([&] {
    need(data, "dataset");
    if (n) *n = data->data.n();
    if (p) *p = data->data.p();
  });
}

void mavg_dataset_free(mavg_dataset* data) { delete data; }

mavg_status mavg_fit_create(const mavg_dataset* data, const char* method, uint64_t seed, mavg_fit** out) {
  return guard([&] {
    need(data, "dataset");
    need(method, "method");
    need(out, "out");
    const mavg::Dataset& d = data->data;
    const std::string m = lower(method);
    auto f = std::make_unique<mavg_fit>();
    if (m == "ols") {
      f->fit = mavg::ols_fit(d);
    } else if (m == "ms") {
      f->fit = mavg::ms_fit(d);
    } else if (m == "fma") {
      f->fit = mavg::fma_fit(d, {});
    } else if (m == "bma") {
      f->fit = mavg::bma_fit(d, {});
    } else if (m == "mma") {
      f->fit = mavg::mma_fit(d);
    } else if (m == "jma") {
      f->fit = mavg::jma_fit(d);
    } else if (m == "lae") {
      f->fit = mavg::lae_fit(d, mavg::default_lambda_sequence(d), std::min<std::size_t>(10, d.n()), seed);
    } else {
      const std::string list = m == "sl" ? "SL" : (m == "sl+" ? "SL+" : std::string(method));
      f->fit = mavg::sl_fit(d, mavg::parse_learner_list(list), std::min<std::size_t>(10, d.n()), seed);
    }
    *out = f.release();
  });
}

mavg_status mavg_fit_coefficients(const mavg_fit* fit, double* out, size_t capacity, size_t* count) {
  return guard([&] {
    need(fit, "fit");
    const auto* a = std::get_if<mavg::AveragedFit>(&fit->fit);
    if (!a) throw mavg::Error(mavg::ErrorCode::kInvalidArgument, "super learner fits have no coefficient vector");
    copy_out(a->coefficients, out, capacity, count);
  });
}

mavg_status mavg_fit_std_errors(const mavg_fit* fit, double* out, size_t capacity, size_t* count) {
  return guard([&] {
    need(fit, "fit");
    const auto* a = std::get_if<mavg::AveragedFit>(&fit->fit);
    if (!a) throw mavg::Error(mavg::ErrorCode::kInvalidArgument, "super learner fits have no standard errors");
    copy_out(a->std_errors, out, capacity, count);
  });
}

mavg_status mavg_fit_weights(const mavg_fit* fit, double* out, size_t capacity, size_t* count) {
  return guard([&] {
    need(fit, "fit");
    if (const auto* a = std::get_if<mavg::AveragedFit>(&fit->fit)) {
      copy_out(a->weights.values(), out, capacity, count);
    } else {
      copy_out(std::get<mavg::SuperLearnerFit>(fit->fit).meta_weights.values(), out, capacity, count);
    }
  });
}

mavg_status mavg_fit_predict(const mavg_fit* fit, const double* x, size_t n, size_t p, double* out) {
  return guard([&] {
    need(fit, "fit");
    need(out, "out");
    if (n * p > 0) need(x, "x");
    const mavg::Matrix xm = read_rows(x, n, p);
    mavg::Vector pred;
    if (const auto* a = std::get_if<mavg::AveragedFit>(&fit->fit)) {
      pred = a->predict(xm);
    } else {
      pred = mavg::sl_predict(std::get<mavg::SuperLearnerFit>(fit->fit), xm);
    }
    std::memcpy(out, pred.data(), sizeof(double) * n);
  });
}

mavg_status mavg_fit_to_csv(const mavg_fit* fit, char* out, size_t capacity, size_t* length) {
  return guard([&] {
    need(fit, "fit");
    const std::string text = fit_csv(*fit);
    if (length) *length = text.size();
    copy_text(text, out, capacity);
  });
}

mavg_status mavg_fit_write_csv(const mavg_fit* fit, const char* path) {
  return guard([&] {
    need(fit, "fit");
    need(path, "path");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw mavg::Error(mavg::ErrorCode::kIo, std::string("cannot open ") + path + " for writing");
    out << fit_csv(*fit);
    if (!out) throw mavg::Error(mavg::ErrorCode::kIo, std::string("write failed for ") + path);
  });
}

void mavg_fit_free(mavg_fit* fit) { delete fit; }

mavg_status mavg_panel_generate(size_t n, size_t horizon, uint64_t seed, mavg_panel** out) {
  return guard([&] {
    need(out, "out");
    auto p = std::make_unique<mavg_panel>();
    p->panel = mavg::simulate_longitudinal(n, horizon, mavg::Rng(seed));
    *out = p.release();
  });
}

mavg_status mavg_panel_read_csv(const char* path, mavg_panel** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    auto p = std::make_unique<mavg_panel>();
    p->panel = mavg::read_panel_csv(path);
    *out = p.release();
  });
}

mavg_status mavg_panel_write_csv(const mavg_panel* panel, const char* path) {
  return guard([&] {
    need(panel, "panel");
    need(path, "path");
    mavg::write_panel_csv(panel->panel, std::string(path));
  });
}

mavg_status mavg_panel_dims(const mavg_panel* panel, size_t* n, size_t* horizon) {
  return guard([&] {
    need(panel, "panel");
    if (n) *n = panel->panel.n();
    if (horizon) *horizon = panel->panel.horizon;
  });
}

void mavg_panel_free(mavg_panel* panel) { delete panel; }

mavg_status mavg_gformula(const mavg_panel* panel, const char* rule, int persistence, const char* learners,
                          size_t folds, uint64_t seed, double* psi_hat) {
  return guard([&] {
    need(panel, "panel");
    need(rule, "rule");
    need(learners, "learners");
    need(psi_hat, "psi_hat");
    const auto r = mavg::parse_rule(rule, persistence != 0);
    const std::string l = lower(learners) == "sl" ? "SL" : (lower(learners) == "sl+" ? "SL+" : std::string(learners));
    *psi_hat = mavg::sequential_gformula(panel->panel, r, mavg::parse_learner_list(l), folds, seed).psi_hat;
  });
}

mavg_status mavg_truth(const char* rule, int persistence, size_t n, uint64_t seed, size_t horizon, double* mean,
                       double* mc_se) {
  return guard([&] {
    need(rule, "rule");
    need(mean, "mean");
    const auto t = mavg::truth_oracle(mavg::parse_rule(rule, persistence != 0), n, seed, horizon);
    *mean = t.mean;
    if (mc_se) *mc_se = t.mc_se;
  });
}

mavg_status mavg_config_create(const char* study, int full_scale, mavg_config** out) {
  return guard([&] {
    need(study, "study");
    need(out, "out");
    auto c = std::make_unique<mavg_config>();
    c->cfg = mavg::default_config(mavg::parse_study(study), full_scale != 0);
    *out = c.release();
  });
}

mavg_status mavg_config_set(mavg_config* cfg, const char* key, const char* value) {
  return guard([&] {
    need(cfg, "config");
    need(key, "key");
    need(value, "value");
    mavg::apply_setting(cfg->cfg, key, value);
  });
}

mavg_status mavg_config_describe(const mavg_config* cfg, char* out, size_t capacity, size_t* length) {
  return guard([&] {
    need(cfg, "config");
    const auto& c = cfg->cfg;
    std::ostringstream s;
    s << "study = " << mavg::study_name(c.study) << "\nruns = " << c.runs << "\nn = " << c.n << "\nseed = " << c.seed
      << "\nworkers = " << c.workers << "\nout = " << c.out_dir << "\nfolds = " << c.folds
      << "\nhorizon = " << c.horizon << "\ntruth_n = " << c.truth_n
      << "\npersistence = " << (c.persistence ? "true" : "false") << "\nresume = " << (c.resume ? "true" : "false")
      << "\nlearner_sets = ";
    for (std::size_t i = 0; i < c.learner_sets.size(); ++i) s << (i ? ";" : "") << c.learner_sets[i];
    s << "\n";
    const std::string text = s.str();
    if (length) *length = text.size();
    copy_text(text, out, capacity);
  });
}

void mavg_config_free(mavg_config* cfg) { delete cfg; }

mavg_status mavg_run_study(const mavg_config* cfg, mavg_progress_fn progress, void* user) {
  return guard([&] {
    need(cfg, "config");
    mavg::Progress cb;
    if (progress) cb = [progress, user](std::size_t done, std::size_t total) { progress(done, total, user); };
    mavg::run_study(cfg->cfg, cb);
  });
}

}  // extern "C"
