#include "hf/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>

#include "hf/fluctuations.hpp"
#include "hf/gaussian_limit.hpp"
#include "hf/hawkes.hpp"
#include "hf/io.hpp"
#include "hf/nfe.hpp"
#include "hf/rng.hpp"
#include "hf/snfe.hpp"
#include "hf/stats.hpp"

namespace hf {

using json = nlohmann::ordered_json;

std::uint64_t ExperimentConfig::config_hash() const {
    std::string blob = config_text + "|" + params.describe();
    blob += "|G=" + std::to_string(grid_space) + ",K=" + std::to_string(grid_time);
    blob += ",T=" + format_g17(horizon);
    blob += "|seed=" + std::to_string(master_seed);
    for (const int n : n_list) blob += ",n=" + std::to_string(n);
    blob += "|R=" + std::to_string(replicas);
    return fnv1a64(blob.data(), blob.size());
}

std::vector<TestFunction> ExperimentConfig::phis() const {
    if (phi_labels.empty()) return registered_test_functions();
    std::vector<TestFunction> out;
    for (const auto& label : phi_labels) out.push_back(test_function(label));
    return out;
}

std::vector<double> ExperimentConfig::probes() const {
    if (probe_times.empty()) return {horizon};
    return probe_times;
}

int resolve_workers(int requested) {
    if (const char* env = std::getenv("HF_WORKERS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

void parallel_for(int count, int workers, const std::function<void(int)>& fn) {
    workers = std::max(1, std::min(workers, count));
    if (workers == 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const int i = next.fetch_add(1);
                if (i >= count) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

namespace {

void require_increasing(const std::vector<int>& n_list) {
    for (std::size_t i = 1; i < n_list.size(); ++i)
        if (n_list[i] <= n_list[i - 1])
            throw std::invalid_argument("n_list must be strictly increasing");
}

json base_summary(const ExperimentConfig& cfg, const std::string& experiment) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["experiment"] = experiment;
    j["config_hash"] = hash_hex(cfg.config_hash());
    j["params_hash"] = hash_hex(cfg.params.hash());
    j["master_seed"] = cfg.master_seed;
    j["grid"] = {{"space", cfg.grid_space},
                 {"time", cfg.grid_time},
                 {"horizon", cfg.horizon}};
    return j;
}

struct Check {
    std::string name;
    bool pass = false;
    std::string detail;
};

json checks_json(const std::vector<Check>& checks) {
    json arr = json::array();
    for (const auto& c : checks)
        arr.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
    return arr;
}

void append_lines(StudyReport& report, const std::vector<Check>& checks) {
    for (const auto& c : checks)
        report.lines.push_back((c.pass ? "[pass] " : "[FAIL] ") + c.name + ": " +
                               c.detail);
}

std::ofstream open_csv(const ExperimentConfig& cfg, const std::string& name,
                       const std::string& header) {
    ensure_dir(cfg.out_dir);
    const std::string path = cfg.out_dir + "/" + name;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "# schema-version: " << kSchemaVersion << "\n" << header << "\n";
    return out;
}

}  // namespace

// ------------------------------------------------------------------ CLT study

StudyReport run_clt_study(const ExperimentConfig& cfg) {
    if (cfg.n_list.empty()) throw std::invalid_argument("clt study: empty n_list");
    require_increasing(cfg.n_list);
    if (cfg.replicas < 2) throw std::invalid_argument("clt study: need R >= 2");
    const SpaceTimeGrid grid(cfg.grid_space, cfg.grid_time, cfg.horizon);
    const Field u = picard_solve(cfg.params, grid);
    const auto phis = cfg.phis();
    const auto probes = cfg.probes();
    const int workers = resolve_workers(cfg.workers);
    const int n_phi = static_cast<int>(phis.size());
    const int n_probe = static_cast<int>(probes.size());

    struct Row {
        std::vector<double> gamma, mn, bracket;  // [probe][phi] flattened
    };

    StudyReport report;
    json cells = json::array();
    auto csv = open_csv(cfg, "clt_fluctuations.csv", "n,replica,t,phi,gamma,Mn,bracket");

    // per (n, probe, phi) moments, plus raw gamma at the largest n for KS
    const int n_max = *std::max_element(cfg.n_list.begin(), cfg.n_list.end());
    std::vector<std::vector<double>> gamma_at_nmax(
        static_cast<std::size_t>(n_probe) * n_phi);

    std::vector<std::vector<RunningMoments>> micro_gamma, micro_mn, micro_bracket;

    for (const int n : cfg.n_list) {
        std::vector<Row> rows(cfg.replicas);
        parallel_for(cfg.replicas, workers, [&](int r) {
            const std::uint64_t seed =
                derive_seed(cfg.master_seed, kExpClt, static_cast<std::uint32_t>(n),
                            static_cast<std::uint32_t>(r));
            const EventLog log = simulate_hawkes(cfg.params, n, cfg.horizon, seed);
            Row row;
            row.gamma.resize(static_cast<std::size_t>(n_probe) * n_phi);
            row.mn.resize(row.gamma.size());
            row.bracket.resize(row.gamma.size());
            for (int pt = 0; pt < n_probe; ++pt) {
                const auto sample =
                    fluctuation_sample(log, u, cfg.params, probes[pt], phis);
                MartingaleProbes mp;
                if (cfg.with_brackets)
                    mp = martingale_probes(log, cfg.params, phis, probes[pt]);
                for (int q = 0; q < n_phi; ++q) {
                    const std::size_t idx = static_cast<std::size_t>(pt) * n_phi + q;
                    row.gamma[idx] = sample.gamma.at(phis[q].label);
                    row.mn[idx] = cfg.with_brackets ? mp.mn[q] : 0.0;
                    row.bracket[idx] = cfg.with_brackets ? mp.bracket[q] : 0.0;
                }
            }
            rows[r] = std::move(row);
        });

        std::vector<RunningMoments> mg(static_cast<std::size_t>(n_probe) * n_phi),
            mm(mg.size()), mb(mg.size());
        for (int r = 0; r < cfg.replicas; ++r) {
            for (int pt = 0; pt < n_probe; ++pt)
                for (int q = 0; q < n_phi; ++q) {
                    const std::size_t idx = static_cast<std::size_t>(pt) * n_phi + q;
                    mg[idx].add(rows[r].gamma[idx]);
                    csv << n << "," << r << "," << format_g17(probes[pt]) << ","
                        << phis[q].label << "," << format_g17(rows[r].gamma[idx]);
                    if (cfg.with_brackets) {
                        mm[idx].add(rows[r].mn[idx]);
                        mb[idx].add(rows[r].bracket[idx]);
                        csv << "," << format_g17(rows[r].mn[idx]) << ","
                            << format_g17(rows[r].bracket[idx]) << "\n";
                    } else {
                        csv << ",,\n";  // Mn and bracket not probed in this run
                    }
                    if (n == n_max) gamma_at_nmax[idx].push_back(rows[r].gamma[idx]);
                }
        }
        micro_gamma.push_back(std::move(mg));
        micro_mn.push_back(std::move(mm));
        micro_bracket.push_back(std::move(mb));
    }

    // limit ensemble: M -> Gamma -> projections, one noise seed per replica
    std::vector<std::vector<double>> limit_rows(cfg.limit_replicas);
    parallel_for(cfg.limit_replicas, workers, [&](int r) {
        const std::uint64_t seed = derive_seed(cfg.master_seed, kExpCltLimit, 0,
                                               static_cast<std::uint32_t>(r));
        const WhiteNoiseGrid noise = sample_white_noise(grid, seed);
        const GaussianPathM m = simulate_M(u, cfg.params, noise);
        const LimitFluctuationField gam = solve_limit_gamma(m, u, cfg.params);
        std::vector<double> vals(static_cast<std::size_t>(n_probe) * n_phi);
        for (int pt = 0; pt < n_probe; ++pt)
            for (int q = 0; q < n_phi; ++q)
                vals[static_cast<std::size_t>(pt) * n_phi + q] =
                    project(gam, phis[q], probes[pt]);
        limit_rows[r] = std::move(vals);
    });
    std::vector<RunningMoments> limit_gamma(static_cast<std::size_t>(n_probe) * n_phi);
    auto limit_csv = open_csv(cfg, "clt_limit.csv", "replica,t,phi,gamma");
    for (int r = 0; r < cfg.limit_replicas; ++r)
        for (int pt = 0; pt < n_probe; ++pt)
            for (int q = 0; q < n_phi; ++q) {
                const std::size_t idx = static_cast<std::size_t>(pt) * n_phi + q;
                limit_gamma[idx].add(limit_rows[r][idx]);
                limit_csv << r << "," << format_g17(probes[pt]) << ","
                          << phis[q].label << ","
                          << format_g17(limit_rows[r][idx]) << "\n";
            }

    // cells
    for (std::size_t ni = 0; ni < cfg.n_list.size(); ++ni)
        for (int pt = 0; pt < n_probe; ++pt)
            for (int q = 0; q < n_phi; ++q) {
                const std::size_t idx = static_cast<std::size_t>(pt) * n_phi + q;
                const auto& g = micro_gamma[ni][idx];
                json cell = {{"n", cfg.n_list[ni]},
                             {"t", probes[pt]},
                             {"phi", phis[q].label},
                             {"count", g.count()},
                             {"gamma_mean", g.mean()},
                             {"gamma_variance", g.variance()},
                             {"gamma_se_mean", g.se_mean()},
                             {"gamma_se_variance", g.se_variance()}};
                if (cfg.with_brackets) {
                    const auto& m = micro_mn[ni][idx];
                    const auto& b = micro_bracket[ni][idx];
                    cell["Mn_mean"] = m.mean();
                    cell["Mn_variance"] = m.variance();
                    cell["Mn_se_variance"] = m.se_variance();
                    cell["bracket_mean"] = b.mean();
                    cell["bracket_se_mean"] = b.se_mean();
                }
                cells.push_back(std::move(cell));
            }

    // acceptance checks at the largest n and last probe time
    std::vector<Check> checks;
    const double t_last = probes.back();
    const std::size_t ni_max =
        std::max_element(cfg.n_list.begin(), cfg.n_list.end()) - cfg.n_list.begin();
    json limits = json::array();
    double family_var_scale = 0.0;
    for (int q = 0; q < n_phi; ++q)
        family_var_scale = std::max(
            family_var_scale,
            limit_gamma[static_cast<std::size_t>(n_probe - 1) * n_phi + q].variance());
    for (int q = 0; q < n_phi; ++q) {
        const std::size_t idx =
            static_cast<std::size_t>(n_probe - 1) * n_phi + q;
        const auto& micro = micro_gamma[ni_max][idx];
        const auto& lim = limit_gamma[idx];
        limits.push_back({{"t", t_last},
                          {"phi", phis[q].label},
                          {"count", lim.count()},
                          {"mean", lim.mean()},
                          {"variance", lim.variance()},
                          {"se_variance", lim.se_variance()}});

        if (micro.variance() < 1e-18 && lim.variance() < 1e-18) {
            checks.push_back({"degenerate_ensemble(" + phis[q].label + ")", true,
                              "variances ~ 0, distribution checks skipped"});
            continue;
        }
        // smooth kernels annihilate some probes spectrally (the limit
        // variance sits orders of magnitude below the family scale); the
        // ratio and KS comparisons are not statistically calibrated there
        if (lim.variance() < 1e-4 * family_var_scale) {
            checks.push_back(
                {"degenerate_probe(" + phis[q].label + ")", true,
                 "limit variance " + format_g17(lim.variance()) +
                     " below family scale " + format_g17(family_var_scale) +
                     ", distribution checks skipped"});
            continue;
        }

        // two-ensemble variance ratio within 6 relative SE of 1
        const double ratio = micro.variance() / lim.variance();
        const double se_rel =
            std::sqrt(std::pow(micro.se_variance() / micro.variance(), 2) +
                      std::pow(lim.se_variance() / lim.variance(), 2));
        const bool ratio_ok = std::abs(ratio - 1.0) <= 6.0 * se_rel;
        checks.push_back({"variance_ratio(" + phis[q].label + ")", ratio_ok,
                          "micro/limit = " + format_g17(ratio) + ", band 1 +- " +
                              format_g17(6.0 * se_rel)});

        // KS normality of the microscopic ensemble against N(0, limit var)
        const KsResult ks = ks_normal_test(gamma_at_nmax[idx], 0.0,
                                           std::sqrt(lim.variance()));
        const bool ks_ok = ks.p > 0.01;
        checks.push_back({"ks_normality(" + phis[q].label + ")", ks_ok,
                          "D = " + format_g17(ks.d) + ", p = " + format_g17(ks.p)});

        // constant rate: closed-form limit variance e^{-2 alpha T} cov_M
        if (cfg.params.f.is_constant()) {
            const double cov = covariance_M(phis[q], phis[q], t_last, t_last, u,
                                            cfg.params);
            const double target =
                std::exp(-2.0 * cfg.params.alpha * t_last) * cov;
            const double tol = 3.0 * micro.se_variance();
            const bool ok = std::abs(micro.variance() - target) <= tol;
            checks.push_back({"variance_vs_quadrature(" + phis[q].label + ")", ok,
                              "var = " + format_g17(micro.variance()) +
                                  ", e^{-2aT} cov = " + format_g17(target) +
                                  ", tol = " + format_g17(tol)});
        }
    }

    json summary = base_summary(cfg, "clt");
    summary["n_list"] = cfg.n_list;
    summary["replicas"] = cfg.replicas;
    summary["limit_replicas"] = cfg.limit_replicas;
    summary["cells"] = cells;
    summary["limit"] = limits;
    summary["checks"] = checks_json(checks);
    bool all_ok = true;
    for (const auto& c : checks) all_ok = all_ok && c.pass;
    summary["pass"] = all_ok;
    report.summary = std::move(summary);
    append_lines(report, checks);
    report.exit_code = all_ok ? 0 : 3;
    return report;
}

// -------------------------------------------------------------- identity suite

StudyReport run_identity_suite(const ExperimentConfig& cfg) {
    const SpaceTimeGrid grid(cfg.grid_space, cfg.grid_time, cfg.horizon);
    std::vector<int> ns = cfg.n_list.empty() ? std::vector<int>{8, 32} : cfg.n_list;
    for (const int n : ns)
        if (n > 32)
            throw std::invalid_argument("identity suite: n must be <= 32");

    const Field u = picard_solve(cfg.params, grid, 1e-12, 400);
    const auto phis = cfg.phis();
    std::vector<Check> checks;
    json residuals = json::array();

    for (const int n : ns) {
        const std::uint64_t seed =
            derive_seed(cfg.master_seed, kExpIdent, static_cast<std::uint32_t>(n), 0);
        const EventLog log = simulate_hawkes(cfg.params, n, cfg.horizon, seed);
        const double t = cfg.horizon;

        // eta = A + B + C, relative to the fluctuation scale
        const auto sample = fluctuation_sample(log, u, cfg.params, t, phis);
        const auto dec = decompose(log, u, cfg.params, t);
        double eta_scale = 1.0, dec_resid = 0.0;
        for (int i = 0; i < n; ++i) eta_scale = std::max(eta_scale, std::abs(sample.eta[i]));
        for (int i = 0; i < n; ++i)
            dec_resid = std::max(
                dec_resid, std::abs(dec.a[i] + dec.b[i] + dec.c[i] - sample.eta[i]));
        const double dec_rel = dec_resid / eta_scale;
        checks.push_back({"eta_decomposition(n=" + std::to_string(n) + ")",
                          dec_rel <= 1e-9,
                          "max relative residual = " + format_g17(dec_rel)});

        // Gamma projection identity through an independent summation order
        double proj_resid = 0.0;
        for (const TestFunction& phi : phis) {
            double acc = 0.0;
            for (int i = 1; i <= n; ++i)
                acc += sample.eta[i - 1] * phi.eval(static_cast<double>(i) / n);
            proj_resid = std::max(proj_resid,
                                  std::abs(acc / n - sample.gamma.at(phi.label)));
        }
        checks.push_back({"gamma_projection(n=" + std::to_string(n) + ")",
                          proj_resid <= 1e-12,
                          "max residual = " + format_g17(proj_resid)});

        // polarization of the angle bracket
        const TestFunction& pa = test_function("sin2pi");
        const TestFunction& pb = test_function("expx");
        const double b_sum = angle_bracket(log, cfg.params, add(pa, pb), add(pa, pb), t);
        const double b_aa = angle_bracket(log, cfg.params, pa, pa, t);
        const double b_bb = angle_bracket(log, cfg.params, pb, pb, t);
        const double b_ab = angle_bracket(log, cfg.params, pa, pb, t);
        const double pol_resid = std::abs(b_sum - b_aa - b_bb - 2.0 * b_ab);
        checks.push_back({"bracket_polarization(n=" + std::to_string(n) + ")",
                          pol_resid <= 1e-10,
                          "residual = " + format_g17(pol_resid)});

        residuals.push_back({{"n", n},
                             {"eta_decomposition_rel", dec_rel},
                             {"gamma_projection", proj_resid},
                             {"bracket_polarization", pol_resid},
                             {"events", log.events.size()}});
    }

    // zero-kernel variant: every fluctuation object collapses to zero
    {
        ModelParams zero{cfg.params.f, SynapticKernel::constant(0.0), cfg.params.u0,
                         cfg.params.alpha};
        const Field uz = picard_solve(zero, grid, 1e-12, 400);
        const int n = ns.front();
        const EventLog log = simulate_hawkes(
            zero, n, cfg.horizon,
            derive_seed(cfg.master_seed, kExpIdent, static_cast<std::uint32_t>(n), 1));
        const auto dec = decompose(log, uz, zero, cfg.horizon, 1e-12);
        double zero_resid = 0.0;
        const auto eta = compute_eta(log, uz, zero, cfg.horizon);
        for (int i = 0; i < n; ++i) {
            zero_resid = std::max(zero_resid, std::abs(dec.a[i]));
            zero_resid = std::max(zero_resid, std::abs(dec.b[i]));
            zero_resid = std::max(zero_resid, std::abs(dec.c[i]));
            zero_resid = std::max(zero_resid, std::abs(eta[i]));
        }
        checks.push_back({"zero_kernel_fluctuations", zero_resid <= 1e-8,
                          "max |A|,|B|,|C|,|eta| = " + format_g17(zero_resid)});
    }

    // drift-only stochastic solve must reproduce the Euler NFE bit for bit
    {
        const Field ue = euler_solve(cfg.params, grid);
        const SnfeSolution vd = solve_snfe_drift_only(cfg.params, grid);
        const bool identical =
            ue.values.size() == vd.values.size() &&
            std::memcmp(ue.values.data(), vd.values.data(),
                        ue.values.size() * sizeof(double)) == 0;
        checks.push_back({"drift_only_snfe_equals_euler", identical,
                          identical ? "bit-identical" : "MISMATCH"});
    }

    json summary = base_summary(cfg, "identities");
    summary["residuals"] = residuals;
    summary["checks"] = checks_json(checks);
    bool all_ok = true;
    for (const auto& c : checks) all_ok = all_ok && c.pass;
    summary["pass"] = all_ok;

    StudyReport report;
    report.summary = std::move(summary);
    append_lines(report, checks);
    report.exit_code = all_ok ? 0 : 2;
    return report;
}

// -------------------------------------------------------------- SNFE converge

StudyReport run_snfe_converge(const ExperimentConfig& cfg) {
    if (cfg.n_list.size() < 3)
        throw std::invalid_argument("snfe-converge: need >= 3 values of n");
    require_increasing(cfg.n_list);
    const SpaceTimeGrid grid(cfg.grid_space, cfg.grid_time, cfg.horizon);
    const Field u = euler_solve(cfg.params, grid);
    const int workers = resolve_workers(cfg.workers);
    const std::size_t cells = u.values.size();

    auto csv = open_csv(cfg, "snfe_converge.csv", "n,replica,sup_sq_error");
    std::vector<double> sup_mean_sq;  // sup over grid of E|V - u|^2, per n
    json per_n = json::array();

    for (const int n : cfg.n_list) {
        std::vector<std::vector<double>> sq(cfg.replicas);
        parallel_for(cfg.replicas, workers, [&](int r) {
            const WhiteNoiseGrid noise = sample_white_noise(
                grid, derive_seed(cfg.master_seed, kExpSnfe,
                                  static_cast<std::uint32_t>(n),
                                  static_cast<std::uint32_t>(r)));
            const SnfeSolution v = solve_snfe(cfg.params, n, noise);
            std::vector<double> d(cells);
            for (std::size_t idx = 0; idx < cells; ++idx) {
                const double diff = v.values[idx] - u.values[idx];
                d[idx] = diff * diff;
            }
            sq[r] = std::move(d);
        });

        std::vector<double> mean_sq(cells, 0.0);
        RunningMoments sup_stats;
        for (int r = 0; r < cfg.replicas; ++r) {
            double sup_r = 0.0;
            for (std::size_t idx = 0; idx < cells; ++idx) {
                mean_sq[idx] += sq[r][idx];
                sup_r = std::max(sup_r, sq[r][idx]);
            }
            sup_stats.add(sup_r);
            csv << n << "," << r << "," << format_g17(sup_r) << "\n";
        }
        double sup_of_mean = 0.0;
        for (std::size_t idx = 0; idx < cells; ++idx)
            sup_of_mean = std::max(sup_of_mean, mean_sq[idx] / cfg.replicas);
        sup_mean_sq.push_back(sup_of_mean);
        per_n.push_back({{"n", n},
                         {"sup_mean_sq_error", sup_of_mean},
                         {"mean_sup_sq_error", sup_stats.mean()},
                         {"se_mean_sup", sup_stats.se_mean()}});
    }

    std::vector<double> nv(cfg.n_list.begin(), cfg.n_list.end());
    const SlopeFit fit = fit_loglog_slope(nv, sup_mean_sq);
    std::vector<Check> checks;
    const bool slope_ok = std::abs(fit.slope + 1.0) <= 0.15;
    checks.push_back({"mean_field_rate", slope_ok,
                      "slope = " + format_g17(fit.slope) + " (target -1 +- 0.15)"});

    json summary = base_summary(cfg, "snfe-converge");
    summary["n_list"] = cfg.n_list;
    summary["replicas"] = cfg.replicas;
    summary["per_n"] = per_n;
    summary["slope"] = fit.slope;
    summary["slope_stderr"] = fit.stderr;
    summary["slope_ci"] = {fit.slope - 2.0 * fit.stderr, fit.slope + 2.0 * fit.stderr};
    summary["checks"] = checks_json(checks);
    summary["pass"] = slope_ok;

    StudyReport report;
    report.summary = std::move(summary);
    append_lines(report, checks);
    report.exit_code = slope_ok ? 0 : 3;
    return report;
}

// -------------------------------------------------------------- couple sweep

StudyReport run_couple_sweep(const ExperimentConfig& cfg) {
    if (cfg.n_list.size() < 3)
        throw std::invalid_argument("couple: need >= 3 values of n");
    require_increasing(cfg.n_list);
    const SpaceTimeGrid grid(cfg.grid_space, cfg.grid_time, cfg.horizon);
    const int workers = resolve_workers(cfg.workers);

    auto csv = open_csv(cfg, "couple.csv", "n,replica,sup_sq_error");
    std::vector<double> mean_defect;
    json per_n = json::array();

    for (const int n : cfg.n_list) {
        std::vector<double> defects(cfg.replicas);
        parallel_for(cfg.replicas, workers, [&](int r) {
            defects[r] = coupled_defect(cfg.params, n, grid,
                                        derive_seed(cfg.master_seed, kExpCouple,
                                                    static_cast<std::uint32_t>(n),
                                                    static_cast<std::uint32_t>(r)))
                             .sup_sq;
        });
        RunningMoments stats;
        for (int r = 0; r < cfg.replicas; ++r) {
            stats.add(defects[r]);
            csv << n << "," << r << "," << format_g17(defects[r]) << "\n";
        }
        mean_defect.push_back(stats.mean());
        per_n.push_back({{"n", n},
                         {"mean_sup_sq_defect", stats.mean()},
                         {"se", stats.se_mean()}});
    }

    // zero-noise scheme-bias floor of the coupled pipeline (exactly zero by
    // construction since Y and V share the drift-consistent reference), plus
    // the Picard/Euler gap of the deterministic solvers for context
    const Field ue = euler_solve(cfg.params, grid);
    double floor_sq = 0.0;
    {
        const WhiteNoiseGrid zn = zero_noise(grid);
        const GaussianPathM m = simulate_M(ue, cfg.params, zn);
        const LimitFluctuationField gam = solve_limit_gamma(m, ue, cfg.params);
        const FirstOrderField y = build_Yn(ue, gam, cfg.n_list.front());
        const SnfeSolution v = solve_snfe(cfg.params, cfg.n_list.front(), zn);
        for (std::size_t idx = 0; idx < y.values.size(); ++idx) {
            const double diff = y.values[idx] - v.values[idx];
            floor_sq = std::max(floor_sq, diff * diff);
        }
    }
    const Field up = picard_solve(cfg.params, grid);
    double scheme_gap = 0.0;
    for (std::size_t idx = 0; idx < up.values.size(); ++idx)
        scheme_gap = std::max(scheme_gap, std::abs(up.values[idx] - ue.values[idx]));

    std::vector<double> nv(cfg.n_list.begin(), cfg.n_list.end());
    const SlopeFit fit = fit_loglog_slope(nv, mean_defect);
    std::vector<Check> checks;
    const bool slope_ok = std::abs(fit.slope + 2.0) <= 0.25;
    checks.push_back({"first_order_rate", slope_ok,
                      "slope = " + format_g17(fit.slope) + " (target -2 +- 0.25)"});
    const bool headroom_ok = mean_defect.back() >= 10.0 * floor_sq;
    checks.push_back({"decade_above_floor", headroom_ok,
                      "defect(max n) = " + format_g17(mean_defect.back()) +
                          ", zero-noise floor = " + format_g17(floor_sq)});

    json summary = base_summary(cfg, "couple");
    summary["n_list"] = cfg.n_list;
    summary["replicas"] = cfg.replicas;
    summary["per_n"] = per_n;
    summary["slope"] = fit.slope;
    summary["slope_stderr"] = fit.stderr;
    summary["slope_ci"] = {fit.slope - 2.0 * fit.stderr, fit.slope + 2.0 * fit.stderr};
    summary["zero_noise_floor"] = floor_sq;
    summary["nfe_scheme_gap_sup"] = scheme_gap;
    summary["checks"] = checks_json(checks);
    summary["pass"] = slope_ok && headroom_ok;

    StudyReport report;
    report.summary = std::move(summary);
    append_lines(report, checks);
    report.exit_code = (slope_ok && headroom_ok) ? 0 : 3;
    return report;
}

void write_summary(const ExperimentConfig& cfg, const StudyReport& report,
                   const std::string& name) {
    ensure_dir(cfg.out_dir);
    if (cfg.format == "csv") {
        // flat key,value rendering of the summary for CSV consumers
        std::ofstream out(cfg.out_dir + "/" + name + "_summary.csv");
        out << "# schema-version: " << kSchemaVersion << "\n";
        out << "key,value\n";
        const std::function<void(const std::string&, const json&)> walk =
            [&](const std::string& prefix, const json& j) {
                if (j.is_object()) {
                    for (auto it = j.begin(); it != j.end(); ++it)
                        walk(prefix.empty() ? it.key() : prefix + "." + it.key(),
                             it.value());
                } else if (j.is_array()) {
                    int i = 0;
                    for (const auto& v : j) walk(prefix + "[" + std::to_string(i++) + "]", v);
                } else {
                    out << prefix << "," << j.dump() << "\n";
                }
            };
        walk("", report.summary);
    } else {
        std::ofstream out(cfg.out_dir + "/" + name + "_summary.json");
        out << report.summary.dump(2) << "\n";
    }
}

}  // namespace hf
