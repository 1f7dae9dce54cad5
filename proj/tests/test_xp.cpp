#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "yule/xp.hpp"

using namespace yule;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

xp::ExperimentConfig small_model_checks() {
    xp::ExperimentConfig cfg;
    cfg.experiment_id = "model-checks";
    cfg.params["n_bins"] = 2000;
    cfg.params["vectors"] = 3;
    cfg.master_seed = 31337;
    return cfg;
}

}  // namespace

TEST_CASE("experiment catalog") {
    const auto& ids = xp::experiment_ids();
    CHECK(ids.size() == 10);
    const std::string cat = xp::catalog();
    for (const auto& id : ids) CHECK(cat.find(id) != std::string::npos);
    CHECK(cat.find("anchor:") != std::string::npos);
    CHECK(cat == xp::catalog());  // stable ordering
}

TEST_CASE("config loading and overrides") {
    const fs::path p = fs::temp_directory_path() / "yule_cfg_test.json";
    {
        std::ofstream out(p);
        out << R"({"experiment_id":"model-checks","master_seed":7,"threads":2,)"
            << R"("n_bins":500,"vectors":2})";
    }
    auto cfg = xp::load_config(p.string());
    CHECK(cfg.experiment_id == "model-checks");
    CHECK(cfg.master_seed == 7);
    CHECK(cfg.threads == 2);
    CHECK(cfg.get("n_bins", 0) == 500);
    xp::apply_override(cfg, "n_bins=800");
    xp::apply_override(cfg, "output_dir=/tmp/somewhere");
    CHECK(cfg.get("n_bins", 0) == 800);
    CHECK(cfg.output_dir == "/tmp/somewhere");
    CHECK_THROWS_AS(xp::apply_override(cfg, "oops"), xp::ConfigError);
    CHECK_THROWS_AS(xp::apply_override(cfg, "threads=lots"), xp::ConfigError);
    {
        std::ofstream out(p);
        out << R"({"experiment_id":"nope"})";
    }
    CHECK_THROWS_AS(xp::load_config(p.string()), xp::ConfigError);
    {
        std::ofstream out(p);
        out << "not json";
    }
    CHECK_THROWS_AS(xp::load_config(p.string()), xp::ConfigError);
    CHECK_THROWS_AS(xp::load_config("/nonexistent/cfg.json"), xp::ConfigError);
    fs::remove(p);
}

TEST_CASE("thread resolution honors the environment override") {
    setenv("YULE_BINS_THREADS", "3", 1);
    CHECK(xp::resolve_threads(0) == 3);
    CHECK(xp::resolve_threads(5) == 5);
    unsetenv("YULE_BINS_THREADS");
    CHECK(xp::resolve_threads(0) >= 1);
}

TEST_CASE("runs are bit-identical regardless of thread count") {
    auto cfg1 = small_model_checks();
    cfg1.threads = 1;
    auto cfg4 = small_model_checks();
    cfg4.threads = 4;
    const fs::path d1 = fs::temp_directory_path() / "yule_out_t1";
    const fs::path d4 = fs::temp_directory_path() / "yule_out_t4";
    fs::remove_all(d1);
    fs::remove_all(d4);
    xp::write_artifacts(xp::run_experiment(cfg1), d1.string());
    xp::write_artifacts(xp::run_experiment(cfg4), d4.string());
    CHECK(slurp(d1 / "results.csv") == slurp(d4 / "results.csv"));
    CHECK(slurp(d1 / "summary.json") == slurp(d4 / "summary.json"));
    fs::remove_all(d1);
    fs::remove_all(d4);
}

TEST_CASE("artifact layout and row contract") {
    auto cfg = small_model_checks();
    const fs::path dir = fs::temp_directory_path() / "yule_out_artifacts";
    fs::remove_all(dir);
    auto out = xp::run_experiment(cfg);
    xp::write_artifacts(out, dir.string());
    REQUIRE(fs::exists(dir / "results.csv"));
    REQUIRE(fs::exists(dir / "summary.json"));
    const std::string csv = slurp(dir / "results.csv");
    CHECK(csv.rfind("experiment_id,check,rho,n,x,alpha,delta,estimate,stderr,"
                    "reference_value,reference_source,pass\r\n",
                    0) == 0);
    for (const auto& row : out.rows) {
        const bool known = row.reference_source == "quadrature" ||
                           row.reference_source == "closed-form" ||
                           row.reference_source == "mc-oracle" ||
                           row.reference_source == "paper-formula";
        CHECK(known);
    }
    CHECK(slurp(dir / "summary.json").find("\"criteria\"") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("unknown experiment id is rejected") {
    xp::ExperimentConfig cfg;
    cfg.experiment_id = "bogus";
    CHECK_THROWS_AS(xp::run_experiment(cfg), xp::ConfigError);
}
