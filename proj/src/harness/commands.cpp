#include "sfhn/harness/commands.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <map>
#include <sstream>

#include "sfhn/control.hpp"
#include "sfhn/errors.hpp"
#include "sfhn/harness/setup.hpp"
#include "sfhn/harness/verify.hpp"
#include "sfhn/parallel.hpp"
#include "sfhn/version.hpp"

namespace sfhn::harness {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Shortest round-trip representation; identical inputs give identical bytes.
std::string num(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

class OutputDir {
public:
    explicit OutputDir(fs::path root) : root_(std::move(root)) { fs::create_directories(root_); }

    void write(const std::string& name, const std::string& contents) {
        std::ofstream out(root_ / name, std::ios::binary | std::ios::trunc);
        if (!out) throw ConfigError("cannot write " + (root_ / name).string());
        out << contents;
        if (!out) throw ConfigError("write failed for " + (root_ / name).string());
        files_.push_back({name, contents.size(), git_blob_sha1(contents)});
    }

    void write_json(const std::string& name, const json& j) { write(name, j.dump(2) + "\n"); }

    const std::vector<FileRecord>& files() const { return files_; }
    const fs::path& root() const { return root_; }

private:
    fs::path root_;
    std::vector<FileRecord> files_;
};

std::string utc_now() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

class ManifestBuilder {
public:
    ManifestBuilder(const ExperimentConfig& config, const RunOptions& options)
        : out(options.out), start_(std::chrono::steady_clock::now()) {
        manifest.kind = to_string(config.kind);
        manifest.config_hash = content_hash(config);
        manifest.tool_version = kVersion;
        manifest.started_utc = utc_now();
        out.write("config.json", serialize_config(config));
    }

    RunManifest finish() {
        manifest.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        manifest.files = out.files();
        const json j = manifest_to_json(manifest);
        std::ofstream f(out.root() / "manifest.json", std::ios::binary | std::ios::trunc);
        f << j.dump(2) << "\n";
        return manifest;
    }

    OutputDir out;
    RunManifest manifest;

private:
    std::chrono::steady_clock::time_point start_;
};

std::vector<std::size_t> checkpoint_nodes(const TimeGrid& time, std::size_t count) {
    std::vector<std::size_t> nodes;
    const std::size_t c = std::min(count, time.nodes());
    for (std::size_t k = 0; k < c; ++k) {
        const std::size_t n = (c == 1) ? time.steps : (k * time.steps) / (c - 1);
        if (nodes.empty() || nodes.back() != n) nodes.push_back(n);
    }
    return nodes;
}

std::string seed_label(const std::optional<std::uint64_t>& seed) {
    return seed ? "seed" + std::to_string(*seed) : std::string("deterministic");
}

std::string series_csv(const char* header, const TimeGrid& time, const std::vector<std::size_t>& nodes,
                       const std::vector<const FieldSeries*>& columns) {
    std::ostringstream s;
    s << header << '\n';
    for (std::size_t n : nodes) {
        for (std::size_t i = 0; i < columns.front()->at(n).size(); ++i) {
            s << num(time.time(n)) << ',' << i;
            for (const FieldSeries* c : columns) s << ',' << num((*c)[n][i]);
            s << '\n';
        }
    }
    return s.str();
}

std::string control_csv(const ControlSeries& u, const TimeGrid& time) {
    std::ostringstream s;
    s << "t,node,u\n";
    for (std::size_t n = 0; n < u.size(); ++n) {
        for (std::size_t i = 0; i < u[n].size(); ++i) s << num(time.time(n)) << ',' << i << ',' << num(u[n][i]) << '\n';
    }
    return s.str();
}

json path_record_json(const PathRecord& p) {
    json j{{"status", p.status}, {"reason", p.reason}};
    j["seed"] = p.seed ? json(*p.seed) : json(nullptr);
    return j;
}

}  // namespace

json manifest_to_json(const RunManifest& m) {
    json files = json::array();
    for (const FileRecord& f : m.files) files.push_back({{"name", f.name}, {"bytes", f.bytes}, {"sha1", f.sha1}});
    json paths = json::array();
    for (const PathRecord& p : m.paths) paths.push_back(path_record_json(p));
    std::size_t aborted = 0;
    for (const PathRecord& p : m.paths) aborted += p.status != "completed";
    return json{{"kind", m.kind},
                {"config_hash", m.config_hash},
                {"tool_version", m.tool_version},
                {"started_utc", m.started_utc},
                {"wall_seconds", m.wall_seconds},
                {"paths", paths},
                {"aborted_paths", aborted},
                {"files", files},
                {"summary", m.summary},
                {"exit_code", m.exit_code}};
}

RunManifest cmd_forward(const ExperimentConfig& config, const RunOptions& options) {
    if (config.kind != RunKind::forward) throw ConfigError("cmd_forward: config kind is " + to_string(config.kind));
    const StateProblem problem = build_state_problem(config);
    const TimeGrid time = build_time_grid(config);
    std::vector<std::optional<std::uint64_t>> seeds;
    if (config.seeds.empty()) {
        if (problem.noise_enabled) throw ConfigError("forward: noise is enabled but the seed list is empty");
        seeds.push_back(std::nullopt);
    } else {
        for (std::uint64_t s : config.seeds) seeds.push_back(s);
    }

    ManifestBuilder mb(config, options);
    std::vector<std::optional<StateSolution>> sols(seeds.size());
    std::vector<PathRecord> records(seeds.size());
    parallel_for(seeds.size(), options.threads, [&](std::size_t k) {
        records[k].seed = seeds[k];
        try {
            sols[k] = solve_forward(problem, config.stepper, path_for_seed(problem, time, seeds[k]));
            records[k].status = "completed";
        } catch (const OverflowAbort& e) {
            records[k].status = "aborted-overflow";
            records[k].reason = e.what();
        } catch (const NumericError& e) {
            records[k].status = "failed-numeric";
            records[k].reason = e.what();
        }
    });
    mb.manifest.paths = records;

    const std::vector<std::size_t> nodes = checkpoint_nodes(time, config.output.checkpoints);
    std::ostringstream diag;
    diag << "seed,status,sup_y,sup_x,energy,max_newton_iterations,max_newton_residual,strong_residual\n";
    std::vector<double> sups;
    for (std::size_t k = 0; k < seeds.size(); ++k) {
        const std::string label = seeds[k] ? std::to_string(*seeds[k]) : std::string("none");
        if (!sols[k]) {
            diag << label << ',' << records[k].status << ",,,,,,\n";
            continue;
        }
        const StateSolution& s = *sols[k];
        const auto& d = s.diagnostics;
        const int iters = d.newton_iterations.empty() ? 0
                                                      : *std::max_element(d.newton_iterations.begin(), d.newton_iterations.end());
        const double res = d.newton_residual.empty() ? 0.0
                                                     : *std::max_element(d.newton_residual.begin(), d.newton_residual.end());
        double sup_x = 0.0;
        for (double v : d.sup_x) sup_x = std::max(sup_x, v);
        sups.push_back(sup_x);
        diag << label << ",completed," << num(d.sup_y_overall()) << ',' << num(sup_x) << ',' << num(d.energy(time.dt()))
             << ',' << iters << ',' << num(res) << ',' << num(strong_solution_residual(s, problem)) << '\n';
        if (config.output.trajectories) {
            mb.out.write("trajectory_" + seed_label(seeds[k]) + ".csv",
                         series_csv("t,node,y,x", time, nodes, {&s.y, &s.x}));
        }
    }
    mb.out.write("diagnostics.csv", diag.str());

    // Pointwise ensemble mean and (unbiased) variance of X at the checkpoints.
    std::vector<const StateSolution*> done;
    for (const auto& s : sols) {
        if (s) done.push_back(&*s);
    }
    if (!done.empty()) {
        FieldSeries mean, var;
        for (std::size_t n = 0; n < time.nodes(); ++n) {
            ScalarField m(problem.grid), v(problem.grid);
            if (std::find(nodes.begin(), nodes.end(), n) != nodes.end()) {
                for (const StateSolution* s : done) m += s->x[n];
                m *= 1.0 / static_cast<double>(done.size());
                if (done.size() > 1) {
                    for (const StateSolution* s : done) {
                        const ScalarField d = s->x[n] - m;
                        v += d * d;
                    }
                    v *= 1.0 / static_cast<double>(done.size() - 1);
                }
            }
            mean.push_back(std::move(m));
            var.push_back(std::move(v));
        }
        mb.out.write("ensemble_stats.csv", series_csv("t,node,mean_x,var_x", time, nodes, {&mean, &var}));

        const double top = *std::max_element(sups.begin(), sups.end());
        const std::size_t bins = 20;
        const double width = top > 0.0 ? top / bins : 1.0;
        std::vector<std::size_t> counts(bins, 0);
        for (double s : sups) counts[std::min(bins - 1, static_cast<std::size_t>(s / width))]++;
        std::ostringstream hist;
        hist << "bin_low,bin_high,count\n";
        for (std::size_t b = 0; b < bins; ++b) hist << num(b * width) << ',' << num((b + 1) * width) << ',' << counts[b] << '\n';
        mb.out.write("sup_histogram.csv", hist.str());
    }

    mb.manifest.summary = {{"paths", seeds.size()}, {"completed", done.size()},
                           {"aborted", seeds.size() - done.size()}};
    mb.manifest.exit_code = done.empty() ? exit_numeric : exit_ok;
    return mb.finish();
}

namespace {

std::string history_csv(const OptimizerReport& rep) {
    std::ostringstream s;
    s << "iteration,cost,residual,step,halvings\n";
    for (std::size_t k = 0; k < rep.cost.size(); ++k) {
        s << k << ',' << num(rep.cost[k]) << ',' << num(rep.residual[k]) << ',';
        if (k > 0) s << num(rep.step[k - 1]) << ',' << rep.halvings[k - 1];
        else s << ',';
        s << '\n';
    }
    return s.str();
}

json report_json(const OptimizerReport& rep, double alpha) {
    json rows = json::array();
    for (std::size_t k = 0; k < rep.cost.size(); ++k) {
        json row{{"iteration", k}, {"cost", rep.cost[k]}, {"residual", rep.residual[k]}};
        if (k > 0) {
            row["step"] = rep.step[k - 1];
            row["halvings"] = rep.halvings[k - 1];
        }
        rows.push_back(row);
    }
    return json{{"alpha", alpha},
                {"iterations", rep.iterations},
                {"termination", to_string(rep.termination)},
                {"cost_initial", rep.cost.front()},
                {"cost_final", rep.cost.back()},
                {"residual_final", rep.residual.back()},
                {"history", rows}};
}

std::string comparison_csv(const ControlProblem& problem, const std::vector<StateSolution>& base,
                           const std::vector<StateSolution>& controlled) {
    const TimeGrid& time = problem.time_grid();
    std::ostringstream s;
    s << "t,mismatch_uncontrolled,mismatch_controlled\n";
    for (std::size_t n = 0; n < time.nodes(); ++n) {
        double a = 0.0, b = 0.0;
        for (std::size_t k = 0; k < base.size(); ++k) {
            const ScalarField da = base[k].x[n] - problem.running_target_at(n);
            const ScalarField db = controlled[k].x[n] - problem.running_target_at(n);
            a += inner_l2(da, da) / base.size();
            b += inner_l2(db, db) / base.size();
        }
        s << num(time.time(n)) << ',' << num(a) << ',' << num(b) << '\n';
    }
    return s.str();
}

}  // namespace

RunManifest cmd_control(const ExperimentConfig& config, const RunOptions& options) {
    if (config.kind != RunKind::control) throw ConfigError("cmd_control: config kind is " + to_string(config.kind));
    ControlProblem problem = build_control_problem(config);
    const TimeGrid& time = problem.time_grid();
    ManifestBuilder mb(config, options);
    for (const WienerPath& p : problem.paths) {
        PathRecord rec;
        if (p.mode_count() > 0) rec.seed = p.seed();
        rec.status = "completed";
        mb.manifest.paths.push_back(rec);
    }

    OptimizerParams params;
    params.tol = config.control.tol;
    params.max_iters = config.control.max_iters;
    params.threads = options.threads;

    const ControlSeries zero = zero_control(problem.state.grid, time);
    const std::vector<StateSolution> base = solve_all(problem, zero, options.threads);
    // Ψ(0) with the configured α; the control term vanishes at u = 0.
    const double psi_zero = cost_psi(problem, zero, base);

    ControlSeries final_control;
    std::vector<StateSolution> final_states;
    json summary{{"cost_uncontrolled", psi_zero}, {"alpha", config.control.alpha}, {"mode", config.control.mode},
                 {"paths", problem.paths.size()}};

    if (config.control.alpha > 0.0) {
        OptimizerReport rep = optimize(problem, params);
        mb.out.write("optimizer_history.csv", history_csv(rep));
        mb.out.write_json("optimizer_report.json", report_json(rep, problem.alpha));
        summary["cost_final"] = rep.cost.back();
        summary["iterations"] = rep.iterations;
        summary["termination"] = to_string(rep.termination);
        summary["residual_final"] = rep.residual.back();
        final_control = std::move(rep.control);
        final_states = std::move(rep.solutions);
    } else {
        if (config.control.alpha_continuation.empty()) throw ConfigError("control.alpha_continuation must not be empty for alpha = 0");
        std::ostringstream cont;
        cont << "alpha,cost,residual,iterations,saturation_fraction\n";
        json rows = json::array();
        OptimizerReport rep;
        for (double a : config.control.alpha_continuation) {
            problem.alpha = a;
            rep = optimize(problem, params);
            double sup = 0.0;
            for (const ScalarField& f : rep.scaled_adjoint) sup = std::max(sup, norm_linf(f));
            const double frac = saturation_fraction(rep.control, rep.scaled_adjoint, problem.bound, 1e-8 * sup);
            cont << num(a) << ',' << num(rep.cost.back()) << ',' << num(rep.residual.back()) << ',' << rep.iterations << ','
                 << num(frac) << '\n';
            rows.push_back(report_json(rep, a));
            rows.back()["saturation_fraction"] = frac;
            params.initial = rep.control;
        }
        mb.out.write("continuation.csv", cont.str());
        mb.out.write_json("optimizer_report.json", json{{"continuation", rows}});
        const BangBangResult bb = bang_bang_refine(rep.scaled_adjoint, problem.bound);
        problem.alpha = 0.0;
        final_control = bb.control;
        final_states = solve_all(problem, final_control, options.threads);
        summary["cost_final"] = cost_psi(problem, final_control, final_states);
        summary["deadband"] = bb.deadband;
        summary["deadband_fraction"] = bb.deadband_fraction;
        summary["saturation_fraction_continuation"] = rows.back()["saturation_fraction"];
        summary["saturation_fraction"] =
            saturation_fraction(final_control, rep.scaled_adjoint, problem.bound, bb.deadband);
        mb.out.write("bang_bang_control.csv", control_csv(final_control, time));
    }
    mb.out.write("control_final.csv", control_csv(final_control, time));
    mb.out.write("comparison.csv", comparison_csv(problem, base, final_states));
    const double final_cost = summary["cost_final"].get<double>();
    summary["mismatch_reduction"] = psi_zero > 0.0 ? 1.0 - final_cost / psi_zero : 0.0;
    mb.out.write_json("control_summary.json", summary);
    mb.manifest.summary = summary;
    return mb.finish();
}

RunManifest cmd_verify(const ExperimentConfig& config, const RunOptions& options) {
    if (config.kind != RunKind::verify) throw ConfigError("cmd_verify: config kind is " + to_string(config.kind));
    ManifestBuilder mb(config, options);
    const std::vector<SuiteResult> results = run_verification(config, options.threads);

    json suites = json::array();
    json timing = json::object();
    std::ostringstream table, ladders;
    table << "criterion,suite,metric,value,lower,upper,passed\n";
    ladders << "criterion,suite,series,step,error\n";
    bool all = true;
    for (const SuiteResult& r : results) {
        json checks = json::array();
        for (const Check& c : r.checks) {
            checks.push_back({{"metric", c.metric}, {"value", c.value}, {"lower", std::isfinite(c.lower) ? json(c.lower) : json(nullptr)},
                              {"upper", std::isfinite(c.upper) ? json(c.upper) : json(nullptr)}, {"passed", c.passed}});
            table << r.criterion << ',' << r.name << ',' << c.metric << ',' << num(c.value) << ','
                  << (std::isfinite(c.lower) ? num(c.lower) : "") << ',' << (std::isfinite(c.upper) ? num(c.upper) : "")
                  << ',' << (c.passed ? "true" : "false") << '\n';
        }
        for (const LadderRow& l : r.ladder) {
            ladders << r.criterion << ',' << r.name << ',' << l.series << ',' << num(l.step) << ',' << num(l.error) << '\n';
        }
        suites.push_back({{"criterion", r.criterion}, {"name", r.name}, {"passed", r.passed()}, {"checks", checks},
                          {"details", r.details}});
        timing[r.name] = r.seconds;
        all = all && r.passed();
    }
    mb.out.write_json("verify_report.json", json{{"passed", all}, {"suites", suites}});
    mb.out.write("verify_table.csv", table.str());
    mb.out.write("convergence_ladders.csv", ladders.str());
    mb.manifest.summary = {{"passed", all}, {"suites", results.size()}, {"suite_seconds", timing}};
    mb.manifest.exit_code = all ? exit_ok : exit_verification;
    return mb.finish();
}

RunManifest cmd_sample_noise(const ExperimentConfig& config, const RunOptions& options) {
    if (config.kind != RunKind::sample_noise) {
        throw ConfigError("cmd_sample_noise: config kind is " + to_string(config.kind));
    }
    const SpatialGrid grid = config.grid.build();
    const NoiseModel model = config.noise.enabled ? NoiseModel::spectral(grid, config.noise.modes, config.noise.decay)
                                                  : NoiseModel::none(grid);
    const TimeGrid time = build_time_grid(config);
    ManifestBuilder mb(config, options);
    std::ostringstream modes;
    modes << "mode,coefficient,sup_abs_mode\n";
    for (std::size_t j = 0; j < model.mode_count(); ++j) {
        modes << (j + 1) << ',' << num(model.coefficient(j)) << ',' << num(norm_linf(model.mode(j))) << '\n';
    }
    mb.out.write("noise_modes.csv", modes.str());
    for (std::uint64_t s : config.seeds) {
        std::ostringstream csv;
        write_path_csv(csv, sample_path(model, time, s));
        mb.out.write("path_seed" + std::to_string(s) + ".csv", csv.str());
        mb.manifest.paths.push_back({s, "completed", ""});
    }
    mb.manifest.summary = {{"modes", model.mode_count()}, {"convergence_sum", model.convergence_sum()},
                           {"paths", config.seeds.size()}};
    return mb.finish();
}

RunManifest run_experiment(const ExperimentConfig& config, const RunOptions& options) {
    switch (config.kind) {
        case RunKind::forward: return cmd_forward(config, options);
        case RunKind::control: return cmd_control(config, options);
        case RunKind::verify: return cmd_verify(config, options);
        case RunKind::sample_noise: return cmd_sample_noise(config, options);
    }
    throw ConfigError("unknown run kind");
}

}  // namespace sfhn::harness
