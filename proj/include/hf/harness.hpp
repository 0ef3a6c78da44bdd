#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"

#include "hf/model.hpp"

namespace hf {

enum class ExperimentKind { Clt, Nfe, SnfeConverge, Couple, Identities };

// experiment ids entering the counter-based seed derivation
inline constexpr std::uint32_t kExpClt = 1;
inline constexpr std::uint32_t kExpCltLimit = 2;
inline constexpr std::uint32_t kExpSnfe = 3;
inline constexpr std::uint32_t kExpCouple = 4;
inline constexpr std::uint32_t kExpIdent = 6;
inline constexpr std::uint32_t kExpSimulate = 7;

struct ExperimentConfig {
    ModelParams params;
    std::string config_text;  // raw model config text (hashed into reports)
    ExperimentKind kind = ExperimentKind::Identities;
    std::vector<int> n_list;
    int replicas = 200;
    int limit_replicas = 2000;
    int grid_space = 64;
    int grid_time = 256;
    double horizon = 1.0;
    std::vector<double> probe_times;         // empty = {horizon}
    std::vector<std::string> phi_labels;     // empty = whole registered family
    std::uint64_t master_seed = 1;
    std::string out_dir = "out";
    int workers = 0;                         // 0 = hardware concurrency
    std::string format = "json";             // summary format: json | csv
    bool with_brackets = true;               // clt study: also probe Mn and <Mn>

    std::uint64_t config_hash() const;
    std::vector<TestFunction> phis() const;
    std::vector<double> probes() const;
};

struct StudyReport {
    nlohmann::ordered_json summary;
    std::vector<std::string> lines;  // one human-readable line per check
    int exit_code = 0;               // 0 ok, 2 identity failure, 3 statistical failure
};

// HF_WORKERS env var overrides the requested count; 0 means auto.
int resolve_workers(int requested);

// Runs fn(0..count-1) on a bounded pool. Callers store result r into slot r
// and aggregate afterwards in index order, so output never depends on the
// worker count.
void parallel_for(int count, int workers, const std::function<void(int)>& fn);

StudyReport run_clt_study(const ExperimentConfig& cfg);
StudyReport run_identity_suite(const ExperimentConfig& cfg);
StudyReport run_snfe_converge(const ExperimentConfig& cfg);
StudyReport run_couple_sweep(const ExperimentConfig& cfg);

// Writes <out_dir>/<name>_summary.{json|csv} per cfg.format.
void write_summary(const ExperimentConfig& cfg, const StudyReport& report,
                   const std::string& name);

}  // namespace hf
