#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace yule::xp {

struct ExperimentConfig {
    std::string experiment_id;
    std::map<std::string, double> params;  // flat numeric record
    std::uint64_t master_seed = 20240817;
    std::string output_dir = "out";
    int threads = 0;  // 0 = auto (YULE_BINS_THREADS or hardware)

    double get(const std::string& key, double fallback) const;
};

// One verification row of results.csv.
struct ResultRow {
    std::string check;
    std::map<std::string, double> params;
    double estimate = 0.0;
    double stderr_ = 0.0;
    double reference = 0.0;
    std::string reference_source;  // quadrature | closed-form | mc-oracle | paper-formula
    bool pass = true;
};

// One acceptance-criterion verdict of summary.json.
struct CriterionResult {
    std::string id;
    bool pass = false;
    double measured = 0.0;
    double reference = 0.0;
    double tolerance = 0.0;
    std::string note;
};

struct ExperimentOutput {
    std::string experiment_id;
    std::vector<ResultRow> rows;
    std::vector<CriterionResult> criteria;
    std::map<std::string, std::string> plotdata;  // filename -> CSV body
    bool truncation_flag = false;
};

class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

const std::vector<std::string>& experiment_ids();

ExperimentConfig load_config(const std::string& path);
void apply_override(ExperimentConfig& cfg, const std::string& key_equals_value);

ExperimentOutput run_experiment(const ExperimentConfig& cfg);

// results.csv, summary.json, plotdata/*.csv under cfg.output_dir.
void write_artifacts(const ExperimentOutput& out, const std::string& output_dir);

std::string catalog();

int resolve_threads(int requested);

}  // namespace yule::xp
