#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mavg/mavg.h"

namespace {

int fail(mavg_status s) {
  std::cerr << "error (" << mavg_status_name(s) << "): " << mavg_last_error() << "\n";
  return static_cast<int>(s);
}

#define CHECK(call)                          \
  do {                                       \
    const mavg_status status_ = (call);      \
    if (status_ != MAVG_OK) return fail(status_); \
  } while (0)

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// key = value lines; '#' starts a comment. Keys use the long flag names, with '-' or '_'.
std::vector<std::pair<std::string, std::string>> read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path);
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty() || line.front() == '[') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    for (auto& c : key)
      if (c == '-') c = '_';
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    out.emplace_back(key, value);
  }
  return out;
}

void print_progress(size_t done, size_t total, void*) {
  std::fprintf(stderr, "\r  run %zu / %zu", done, total);
  if (done == total) std::fprintf(stderr, "\n");
  std::fflush(stderr);
}

bool print_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) return false;
  std::cout << in.rdbuf();
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Model averaging, super learning and g-formula simulations"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(mavg_version()));

  // simulate
  auto* sim = app.add_subcommand("simulate", "Run a Monte Carlo study and write tables");
  std::string config_path, study, out_dir, learner_sets;
  std::uint64_t runs = 0, n = 0, seed = 0, workers = 0, folds = 0, horizon = 0, truth_n = 0;
  bool full_scale = false, no_resume = false, no_persistence = false, quiet = false;
  sim->add_option("--config", config_path, "key = value settings file; flags override it");
  sim->add_option("--study", study, "linear, forecast or causal");
  sim->add_option("--runs", runs, "number of replications");
  sim->add_option("--n", n, "sample size per replication");
  sim->add_option("--seed", seed, "base seed; run r uses stream r");
  sim->add_option("--workers", workers, "worker threads");
  sim->add_option("--out", out_dir, "output directory");
  sim->add_option("--folds", folds, "super learner folds");
  sim->add_option("--horizon", horizon, "follow-up horizon (causal study)");
  sim->add_option("--truth-n", truth_n, "subjects for the counterfactual truth");
  sim->add_option("--learner-sets", learner_sets, "learner sets separated by ';', e.g. \"SL;SL+\"");
  sim->add_flag("--full-scale", full_scale, "use the published run counts");
  sim->add_flag("--no-resume", no_resume, "ignore records from an earlier invocation");
  sim->add_flag("--no-persistence", no_persistence, "threshold rule does not keep treating once started");
  sim->add_flag("--quiet", quiet, "no progress output");

  // fit
  auto* fit = app.add_subcommand("fit", "Fit one estimator to a CSV dataset");
  std::string method, data_path, response = "y", fit_out;
  std::uint64_t fit_seed = 1;
  fit->add_option("--method", method, "ols, ms, fma, bma, mma, jma, lae, sl, sl+ or a learner list")->required();
  fit->add_option("--data", data_path, "headered numeric CSV")->required();
  fit->add_option("--response", response, "response column name");
  fit->add_option("--out", fit_out, "output CSV (stdout when omitted)");
  fit->add_option("--seed", fit_seed, "seed for cross-validation folds");

  // truth
  auto* truth = app.add_subcommand("truth", "Counterfactual mean outcome under a treatment rule");
  std::string rule = "always";
  std::uint64_t truth_subjects = 1000000, truth_seed = 1, truth_horizon = 6;
  bool truth_no_persistence = false;
  truth->add_option("--rule", rule, "always or threshold")->required();
  truth->add_option("--n", truth_subjects, "intervened subjects");
  truth->add_option("--seed", truth_seed, "seed");
  truth->add_option("--horizon", truth_horizon, "outcome time");
  truth->add_flag("--no-persistence", truth_no_persistence, "threshold rule without persistence");

  // generate
  auto* gen = app.add_subcommand("generate", "Write one simulated dataset or panel to CSV");
  std::string gen_study, gen_out;
  std::uint64_t gen_n = 500, gen_seed = 1, gen_horizon = 6;
  gen->add_option("--study", gen_study, "linear, forecast or causal")->required();
  gen->add_option("--n", gen_n, "observations or subjects");
  gen->add_option("--seed", gen_seed, "seed");
  gen->add_option("--horizon", gen_horizon, "follow-up horizon (causal)");
  gen->add_option("--out", gen_out, "output CSV")->required();

  // gformula
  auto* gf = app.add_subcommand("gformula", "Sequential g-formula on a long-format panel CSV");
  std::string panel_path, gf_rule = "always", gf_learners = "SL";
  std::uint64_t gf_folds = 10, gf_seed = 1;
  bool gf_no_persistence = false;
  gf->add_option("--panel", panel_path, "panel CSV: subject,t,V1,V2,V3,L1,L2,L3,A,C,Y")->required();
  gf->add_option("--rule", gf_rule, "always or threshold");
  gf->add_option("--learners", gf_learners, "SL, SL+ or a comma list of learners");
  gf->add_option("--folds", gf_folds, "super learner folds");
  gf->add_option("--seed", gf_seed, "seed");
  gf->add_flag("--no-persistence", gf_no_persistence, "threshold rule without persistence");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sim) {
      std::vector<std::pair<std::string, std::string>> file;
      if (!config_path.empty()) file = read_config(config_path);
      std::string resolved_study = study;
      bool resolved_full = full_scale;
      for (const auto& [k, v] : file) {
        if (k == "study" && study.empty()) resolved_study = v;
        if (k == "full_scale" && !sim->count("--full-scale")) resolved_full = v == "true" || v == "1" || v == "yes" || v == "on";
      }
      if (resolved_study.empty()) {
        std::cerr << "error: --study is required (or 'study = ...' in the config file)\n";
        return 2;
      }
      mavg_config* cfg = nullptr;
      CHECK(mavg_config_create(resolved_study.c_str(), resolved_full ? 1 : 0, &cfg));
      std::unique_ptr<mavg_config, decltype(&mavg_config_free)> holder(cfg, mavg_config_free);
      for (const auto& [k, v] : file) {
        if (k == "study" || k == "full_scale") continue;
        CHECK(mavg_config_set(cfg, k.c_str(), v.c_str()));
      }
      auto set_if = [&](const char* flag, const char* key, const std::string& value) -> mavg_status {
        if (!sim->count(flag)) return MAVG_OK;
        return mavg_config_set(cfg, key, value.c_str());
      };
      CHECK(set_if("--runs", "runs", std::to_string(runs)));
      CHECK(set_if("--n", "n", std::to_string(n)));
      CHECK(set_if("--seed", "seed", std::to_string(seed)));
      CHECK(set_if("--workers", "workers", std::to_string(workers)));
      CHECK(set_if("--out", "out", out_dir));
      CHECK(set_if("--folds", "folds", std::to_string(folds)));
      CHECK(set_if("--horizon", "horizon", std::to_string(horizon)));
      CHECK(set_if("--truth-n", "truth_n", std::to_string(truth_n)));
      CHECK(set_if("--learner-sets", "learner_sets", learner_sets));
      CHECK(set_if("--no-resume", "resume", "false"));
      CHECK(set_if("--no-persistence", "persistence", "false"));

      std::size_t len = 0;
      CHECK(mavg_config_describe(cfg, nullptr, 0, &len));
      std::string text(len + 1, '\0');
      CHECK(mavg_config_describe(cfg, text.data(), text.size(), &len));
      text.resize(len);
      if (!quiet) std::cerr << text;
      CHECK(mavg_run_study(cfg, quiet ? nullptr : print_progress, nullptr));

      std::string dir, name;
      std::istringstream lines(text);
      for (std::string line; std::getline(lines, line);) {
        if (line.rfind("out = ", 0) == 0) dir = line.substr(6);
        if (line.rfind("study = ", 0) == 0) name = line.substr(8);
      }
      print_file(dir + "/table_" + name + ".md");
      return 0;
    }

    if (*fit) {
      mavg_dataset* data = nullptr;
      CHECK(mavg_dataset_read_csv(data_path.c_str(), response.c_str(), &data));
      std::unique_ptr<mavg_dataset, decltype(&mavg_dataset_free)> dh(data, mavg_dataset_free);
      mavg_fit* f = nullptr;
      CHECK(mavg_fit_create(data, method.c_str(), fit_seed, &f));
      std::unique_ptr<mavg_fit, decltype(&mavg_fit_free)> fh(f, mavg_fit_free);
      if (fit_out.empty()) {
        std::size_t len = 0;
        CHECK(mavg_fit_to_csv(f, nullptr, 0, &len));
        std::string text(len + 1, '\0');
        CHECK(mavg_fit_to_csv(f, text.data(), text.size(), &len));
        text.resize(len);
        std::cout << text;
      } else {
        CHECK(mavg_fit_write_csv(f, fit_out.c_str()));
      }
      return 0;
    }

    if (*truth) {
      double mean = 0.0, se = 0.0;
      CHECK(mavg_truth(rule.c_str(), truth_no_persistence ? 0 : 1, truth_subjects, truth_seed, truth_horizon, &mean, &se));
      std::printf("rule = %s\nsubjects = %llu\nmean = %.4f\nmc_se = %.4f\n", rule.c_str(),
                  static_cast<unsigned long long>(truth_subjects), mean, se);
      return 0;
    }

    if (*gen) {
      if (gen_study == "causal") {
        mavg_panel* p = nullptr;
        CHECK(mavg_panel_generate(gen_n, gen_horizon, gen_seed, &p));
        std::unique_ptr<mavg_panel, decltype(&mavg_panel_free)> ph(p, mavg_panel_free);
        CHECK(mavg_panel_write_csv(p, gen_out.c_str()));
      } else {
        mavg_dataset* d = nullptr;
        CHECK(mavg_dataset_generate(gen_study.c_str(), gen_n, gen_seed, &d));
        std::unique_ptr<mavg_dataset, decltype(&mavg_dataset_free)> dh(d, mavg_dataset_free);
        CHECK(mavg_dataset_write_csv(d, gen_out.c_str()));
      }
      return 0;
    }

    if (*gf) {
      mavg_panel* p = nullptr;
      CHECK(mavg_panel_read_csv(panel_path.c_str(), &p));
      std::unique_ptr<mavg_panel, decltype(&mavg_panel_free)> ph(p, mavg_panel_free);
      double psi = 0.0;
      CHECK(mavg_gformula(p, gf_rule.c_str(), gf_no_persistence ? 0 : 1, gf_learners.c_str(), gf_folds, gf_seed, &psi));
      std::printf("rule = %s\nlearners = %s\npsi_hat = %.6f\n", gf_rule.c_str(), gf_learners.c_str(), psi);
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
