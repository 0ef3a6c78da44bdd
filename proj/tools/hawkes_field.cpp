#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "hf/harness.hpp"
#include "hf/hawkes.hpp"
#include "hf/io.hpp"
#include "hf/nfe.hpp"
#include "hf/rng.hpp"

namespace {

void add_common(CLI::App* sub, hf::ExperimentConfig& cfg, std::string& config_path) {
    sub->add_option("--config", config_path, "model config file")->required();
    sub->add_option("--seed", cfg.master_seed, "master seed");
    sub->add_option("--workers", cfg.workers,
                    "worker threads (0 = auto; HF_WORKERS overrides)");
    sub->add_option("--out", cfg.out_dir, "output directory");
    sub->add_option("--format", cfg.format, "summary format")
        ->check(CLI::IsMember({"csv", "json"}));
}

void load_params(hf::ExperimentConfig& cfg, const std::string& config_path) {
    cfg.config_text = hf::read_text_file(config_path);
    cfg.params = hf::parse_model_config(cfg.config_text);
}

int emit(const hf::ExperimentConfig& cfg, const hf::StudyReport& report,
         const std::string& name) {
    hf::write_summary(cfg, report, name);
    for (const auto& line : report.lines) std::printf("%s\n", line.c_str());
    std::printf("summary written to %s/%s_summary.%s\n", cfg.out_dir.c_str(),
                name.c_str(), cfg.format.c_str());
    return report.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hawkes-field: spatially extended Hawkes networks, their "
                 "neural-field limit and fluctuation fields"};
    app.require_subcommand(1);

    hf::ExperimentConfig cfg;
    std::string config_path;
    int sim_n = 64;
    std::uint64_t max_events = 10'000'000;
    std::string nfe_method = "picard";

    auto* simulate = app.add_subcommand("simulate", "run one Hawkes network and write the event log");
    add_common(simulate, cfg, config_path);
    simulate->add_option("--n", sim_n, "network size")->required();
    simulate->add_option("--horizon", cfg.horizon, "time horizon T");
    simulate->add_option("--max-events", max_events, "explosion guard");

    auto* nfe = app.add_subcommand("nfe", "solve the neural field equation");
    add_common(nfe, cfg, config_path);
    nfe->add_option("--grid-space", cfg.grid_space, "spatial cells G");
    nfe->add_option("--grid-time", cfg.grid_time, "time steps K");
    nfe->add_option("--horizon", cfg.horizon, "time horizon T");
    nfe->add_option("--method", nfe_method, "picard | euler")
        ->check(CLI::IsMember({"picard", "euler"}));

    auto* clt = app.add_subcommand("clt", "CLT marginal study: microscopic vs limit ensembles");
    add_common(clt, cfg, config_path);
    clt->add_option("--n-list", cfg.n_list, "network sizes")->required();
    clt->add_option("--replicas", cfg.replicas, "Hawkes replicas per n");
    clt->add_option("--limit-replicas", cfg.limit_replicas, "gaussian-limit replicas");
    clt->add_option("--grid-space", cfg.grid_space, "spatial cells G");
    clt->add_option("--grid-time", cfg.grid_time, "time steps K");
    clt->add_option("--horizon", cfg.horizon, "time horizon T");
    clt->add_option("--probe-time", cfg.probe_times, "probe times (default: T)");
    clt->add_option("--phi", cfg.phi_labels, "test-function labels (default: all)");

    auto* conv = app.add_subcommand("snfe-converge", "mean-field rate sweep of the stochastic NFE");
    add_common(conv, cfg, config_path);
    conv->add_option("--n-list", cfg.n_list, "noise scaling parameters")->required();
    conv->add_option("--replicas", cfg.replicas, "replicas per n");
    conv->add_option("--grid-space", cfg.grid_space, "spatial cells G");
    conv->add_option("--grid-time", cfg.grid_time, "time steps K");
    conv->add_option("--horizon", cfg.horizon, "time horizon T");

    auto* couple = app.add_subcommand("couple", "coupled first-order defect sweep");
    add_common(couple, cfg, config_path);
    couple->add_option("--n-list", cfg.n_list, "noise scaling parameters")->required();
    couple->add_option("--replicas", cfg.replicas, "replicas per n");
    couple->add_option("--grid-space", cfg.grid_space, "spatial cells G");
    couple->add_option("--grid-time", cfg.grid_time, "time steps K");
    couple->add_option("--horizon", cfg.horizon, "time horizon T");

    auto* ident = app.add_subcommand("identities", "definitional identity suite");
    add_common(ident, cfg, config_path);
    auto* ident_gs = ident->add_option("--grid-space", cfg.grid_space, "spatial cells G");
    ident->add_option("--grid-time", cfg.grid_time, "time steps K");
    ident->add_option("--horizon", cfg.horizon, "time horizon T");
    ident->add_option("--n-list", cfg.n_list, "network sizes (<= 32)");

    CLI11_PARSE(app, argc, argv);

    try {
        load_params(cfg, config_path);

        if (*simulate) {
            const std::uint64_t seed =
                hf::derive_seed(cfg.master_seed, hf::kExpSimulate,
                                static_cast<std::uint32_t>(sim_n), 0);
            const hf::EventLog log =
                hf::simulate_hawkes(cfg.params, sim_n, cfg.horizon, seed, max_events);
            hf::ensure_dir(cfg.out_dir);
            hf::write_event_log_csv(log, cfg.params, cfg.out_dir + "/events.csv",
                                    cfg.out_dir + "/events.meta");
            std::printf("%zu events written to %s/events.csv\n", log.events.size(),
                        cfg.out_dir.c_str());
            return 0;
        }
        if (*nfe) {
            const hf::SpaceTimeGrid grid(cfg.grid_space, cfg.grid_time, cfg.horizon);
            const hf::Field u = nfe_method == "picard"
                                    ? hf::picard_solve(cfg.params, grid)
                                    : hf::euler_solve(cfg.params, grid);
            hf::ensure_dir(cfg.out_dir);
            hf::write_field_csv(u, cfg.params, "u", cfg.out_dir + "/field.csv",
                                cfg.out_dir + "/field.meta");
            std::printf("field written to %s/field.csv (sup |u| = %s)\n",
                        cfg.out_dir.c_str(), hf::format_g17(u.sup_abs()).c_str());
            return 0;
        }
        if (*clt) {
            cfg.kind = hf::ExperimentKind::Clt;
            return emit(cfg, hf::run_clt_study(cfg), "clt");
        }
        if (*conv) {
            cfg.kind = hf::ExperimentKind::SnfeConverge;
            return emit(cfg, hf::run_snfe_converge(cfg), "snfe_converge");
        }
        if (*couple) {
            cfg.kind = hf::ExperimentKind::Couple;
            return emit(cfg, hf::run_couple_sweep(cfg), "couple");
        }
        if (*ident) {
            cfg.kind = hf::ExperimentKind::Identities;
            if (ident_gs->count() == 0)
                cfg.grid_space = 256;  // identity residuals need the finer grid
            return emit(cfg, hf::run_identity_suite(cfg), "identities");
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 1;
}
