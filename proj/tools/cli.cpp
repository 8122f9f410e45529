#include "cli.hpp"

#include "ssmreduce/analysis.hpp"
#include "ssmreduce/compare.hpp"
#include "ssmreduce/error.hpp"
#include "ssmreduce/io.hpp"
#include "ssmreduce/lsm.hpp"
#include "ssmreduce/sim.hpp"
#include "ssmreduce/spectrum.hpp"
#include "ssmreduce/ssm.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <numbers>

namespace ssmreduce::cli {

namespace {

using nlohmann::json;

std::string path_in(const RunConfig& cfg, const std::string& file) {
    return (std::filesystem::path(cfg.out) / file).string();
}

// Merges entries into <out>/plots.json, replacing those that name the same file.
void update_manifest(const RunConfig& cfg, const std::vector<PlotSpec>& plots) {
    const std::string p = path_in(cfg, "plots.json");
    json current = {{"plots", json::array()}};
    if (std::filesystem::exists(p)) {
        try {
            current = read_json(p);
        } catch (const InputError&) {
            current = {{"plots", json::array()}};
        }
    }
    const json fresh = plot_manifest(plots);
    json merged = json::array();
    for (const auto& e : current.value("plots", json::array())) {
        const bool replaced = std::any_of(fresh["plots"].begin(), fresh["plots"].end(),
                                          [&](const json& f) { return f["file"] == e.value("file", ""); });
        if (!replaced) merged.push_back(e);
    }
    for (const auto& f : fresh["plots"]) merged.push_back(f);
    std::sort(merged.begin(), merged.end(),
              [](const json& a, const json& b) { return a.value("file", "") < b.value("file", ""); });
    write_json({{"plots", merged}}, p);
}

json run_info(const RunConfig& cfg, const Loaded& sys) {
    return {{"command", cfg.command}, {"system", sys.name}, {"provenance", sys.system.provenance},
            {"seed", cfg.seed}, {"threads", resolve_threads(cfg.threads)}};
}

IntegratorOptions integrator_options(const RunConfig& cfg, double rtol, double atol) {
    IntegratorOptions io;
    io.rtol = cfg.rtol.value_or(rtol);
    io.atol = cfg.atol.value_or(atol);
    return io;
}

SsmModel reduce_ssm_permissive(const ModalSystem& ms) {
    SsmOptions so;
    so.singular_tol = 1e-14;
    return ssm_reduce(ms, so);
}

LsmModel conservative_backbone_model(const MechanicalSystem& sys, const std::string& method) {
    const MechanicalSystem cons = conservative_limit(sys);
    if (method == "lsm") return lsm_reduce_general(cons);
    const ModalSystem ms = modal_transform(cons);
    if (method == "lsm-modal") return lsm_reduce_modal(ms);
    if (method == "md") return md_reduce(ms).model;
    if (method == "nf") return nf_reduce(ms);
    if (method == "ssm") return conservative_part(reduce_ssm_permissive(modal_transform(sys)));
    throw InputError("unknown method '" + method + "' (expected lsm, lsm-modal, ssm, md, nf)");
}

// Lifts a reduced [x, xd] trajectory to the partitioned layout through a slave map.
using SlaveMap = std::function<std::pair<Eigen::VectorXd, Eigen::VectorXd>(double t, double x, double xd)>;

Trajectory lift(const Trajectory& reduced, std::size_t n, const SlaveMap& slave) {
    Trajectory out = reduced;
    for (std::size_t i = 0; i < reduced.size(); ++i) {
        const auto& z = reduced.states[i];
        std::vector<double> s{z[0], z[1]};
        s.resize(2 + 2 * n, 0.0);
        if (slave) {
            const auto [y, yd] = slave(reduced.t[i], z[0], z[1]);
            for (std::size_t k = 0; k < n; ++k) {
                s[2 + k] = y[static_cast<Eigen::Index>(k)];
                s[2 + n + k] = yd[static_cast<Eigen::Index>(k)];
            }
        }
        out.states[i] = std::move(s);
    }
    return out;
}

void print_report_lines(const ResonanceSummary& s) {
    for (const auto& e : s.report["ssm"]["modes"])
        std::printf("  ssm mode %d: omega_i/omega %.6g, det margin %.3g%s\n", e["mode"].get<int>(),
                    e["ratio"].get<double>(), e["det_margin"].get<double>(), e["flagged"].get<bool>() ? " FLAGGED" : "");
    for (const auto& e : s.report["lsm"]["singularities"])
        if (e.value("flagged", false))
            std::printf("  lsm mode %d: %s resonance, margin %.3g FLAGGED\n", e["mode"].get<int>(),
                        e["type"].get<std::string>().c_str(), e["margin"].get<double>());
}

}  // namespace

int resolve_threads(const std::optional<int>& flag) {
    if (flag) {
        if (*flag < 1) throw InputError("--threads must be at least 1");
        return *flag;
    }
    if (const char* env = std::getenv("SSMREDUCE_THREADS"); env && *env) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (*end != '\0' || v < 1) throw InputError("SSMREDUCE_THREADS must be a positive integer");
        return static_cast<int>(v);
    }
    return 1;
}

Loaded load(const RunConfig& cfg) {
    if (cfg.input.empty() == cfg.preset.empty()) throw InputError("exactly one of --input or --preset is required");
    Loaded l;
    if (!cfg.preset.empty()) {
        Preset p = make_preset(cfg.preset);
        l.name = p.name;
        l.system = std::move(p.system);
        l.full = std::move(p.full);
        l.potential = std::move(p.potential);
        l.has_potential = static_cast<bool>(l.potential);
    } else {
        l.system = import_external(cfg.input);
        l.name = std::filesystem::path(cfg.input).stem().string();
        l.full = to_full(l.system);
    }
    if (!l.has_potential) {
        const MechanicalSystem cons = conservative_limit(l.system);
        if (is_gradient_field(cons)) {
            l.potential = polynomial_potential(cons);
            l.has_potential = true;
        }
    }
    if (cfg.eps) {
        auto& f = l.system.forcing;
        f.epsilon = *cfg.eps;
        const bool unforced = f.F1 == 0.0 && (f.F2.size() == 0 || f.F2.isZero());
        if (unforced) f.F1 = 1.0;
        if (f.Omega == 0.0) f.Omega = std::sqrt(l.system.k / l.system.m);
        l.full.epsilon = *cfg.eps;
    }
    ensure_directory(cfg.out);
    return l;
}

ResonanceSummary resonance_summary(const MechanicalSystem& sys, double tol) {
    ResonanceSummary s;
    const Spectrum spec = compute_spectrum(sys);
    const ModalSystem ms = modal_transform(sys);
    s.report["spectrum"] = to_json(spec);

    const auto sing = lsm_singularity_report(conservative_limit(ms), tol);
    s.lsm_blocked = std::any_of(sing.begin(), sing.end(), [](const SingularityEntry& e) { return e.flagged; });
    s.report["lsm"] = {{"singularities", to_json(sing)},
                       {"nonresonance", to_json(check_lsm_nonresonance(compute_spectrum(conservative_limit(sys)), tol))},
                       {"blocked", s.lsm_blocked}};

    json modes = json::array();
    for (std::size_t i = 0; i < ms.n(); ++i) {
        const auto k = static_cast<Eigen::Index>(i);
        const double margin = ssm_det_margin(ms.zeta, ms.omega0, ms.zeta_vec[k], ms.omega[k]);
        const bool flagged = margin < tol;
        s.ssm_blocked = s.ssm_blocked || flagged;
        modes.push_back({{"mode", i + 1}, {"ratio", ms.omega[k] / ms.omega0}, {"det_margin", margin},
                         {"flagged", flagged}});
    }
    json ssm = {{"modes", modes}, {"blocked", s.ssm_blocked}, {"tolerance", tol}};
    if (!spec.conservative) ssm["nonresonance"] = to_json(check_ssm_nonresonance(spec, tol));
    s.report["ssm"] = ssm;
    return s;
}

int cmd_reduce(const RunConfig& cfg) {
    const Loaded l = load(cfg);
    const std::string method = cfg.method.empty() ? "ssm" : cfg.method;
    const ResonanceSummary rs = resonance_summary(l.system, cfg.resonance_tol);
    json report = rs.report;
    report["method"] = method;
    json warnings = json::array();
    if (method != "ssm" && !l.system.is_conservative())
        warnings.push_back("damping and velocity terms dropped: " + method + " reduces the conservative limit");

    const bool blocked = method == "ssm" ? rs.ssm_blocked : (method == "lsm" || method == "lsm-modal") && rs.lsm_blocked;
    report["blocked"] = blocked;
    report["warnings"] = warnings;
    write_json(report, path_in(cfg, "resonance.json"));
    if (blocked) {
        std::printf("reduce %s: blocked by resonance (tolerance %g)\n", method.c_str(), cfg.resonance_tol);
        print_report_lines(rs);
        return 2;
    }

    json model;
    if (method == "ssm") {
        const SsmModel red = ssm_reduce(modal_transform(l.system));
        model = to_json(red);
        std::printf("reduce ssm: m %.10g c %.10g k %.10g cubic [%.10g, %.10g, %.10g, %.10g]\n", red.m, red.c, red.k,
                    red.cubic(0), red.cubic(1), red.cubic(2), red.cubic(3));
    } else if (method == "md") {
        const ModalSystem ms = modal_transform(l.system);
        const MdModel md = md_reduce(conservative_limit(ms));
        model = to_json(md.model);
        model["Theta"] = std::vector<double>(md.Theta.data(), md.Theta.data() + md.Theta.size());
        model["warnings"] = md.warnings;
        if (!l.system.is_conservative()) model["damped"] = to_json(md_damped_model(ms));
    } else {
        const LsmModel m = conservative_backbone_model(l.system, method);
        model = to_json(m);
        std::printf("reduce %s: omega0 %.10g a2 %.10g a3 %.10g b12 %.10g\n", method.c_str(), m.omega0, m.a2, m.a3,
                    m.b12);
    }
    model["run"] = run_info(cfg, l);
    write_json(model, path_in(cfg, "model.json"));
    if (cfg.compare) {
        const ModalSystem ms = modal_transform(l.system);
        write_text(comparison_csv(ms), path_in(cfg, "comparison.csv"));
        write_json(comparison_report(ms), path_in(cfg, "comparison.json"));
    }
    std::printf("wrote %s\n", path_in(cfg, "model.json").c_str());
    return 0;
}

int cmd_backbone(const RunConfig& cfg) {
    const Loaded l = load(cfg);
    const std::string method = cfg.method.empty() ? "lsm-modal" : cfg.method;
    LsmModel model = conservative_backbone_model(l.system, method);
    const double w1 = backbone_coefficient(model);
    const double r_max = cfg.r_max.value_or(w1 != 0.0 ? std::sqrt(0.05 * model.omega0 / std::abs(w1)) : 1.0);
    if (r_max < 0.0) throw InputError("--r-max must be non-negative");
    const int steps = cfg.steps.value_or(50);
    if (steps < 1) throw InputError("--steps must be positive");
    BackboneCurve curve = backbone_curve(model, r_max, steps);
    curve.method = method;

    json meta = run_info(cfg, l);
    meta.update({{"method", method}, {"omega0", model.omega0}, {"omega1", w1}, {"r_max", r_max}, {"steps", steps}});
    std::vector<PlotSpec> plots{{"backbone.csv", "omega", "r", "method", "backbone curve"}};

    if (cfg.verify) {
        ShootingOptions so;
        so.rtol = cfg.rtol.value_or(so.rtol);
        so.atol = cfg.atol.value_or(so.atol);
        so.threads = resolve_threads(cfg.threads);
        std::vector<double> rs;
        for (const auto& s : curve.samples)
            if (s.r > 0.0) rs.push_back(s.r);
        const BackboneCurve sh = rs.empty() ? BackboneCurve{} : shooting_backbone(model, rs, so);
        CsvWriter csv({"r", "omega", "method", "omega_shooting", "closure"});
        double worst = 0.0;
        std::size_t j = 0;
        for (const auto& s : curve.samples) {
            double ws = model.omega0, cl = 0.0;
            if (s.r > 0.0) {
                ws = sh.samples[j].omega;
                cl = sh.samples[j].closure;
                ++j;
            }
            worst = std::max(worst, std::abs(ws - s.omega));
            csv.row() << s.r << s.omega << method << ws << cl;
        }
        csv.save(path_in(cfg, "backbone.csv"));
        meta["verify"] = {{"max_abs_formula_minus_shooting", worst},
                          {"cubic_band", std::abs(w1) * r_max * r_max * r_max / std::max(1.0, r_max)}};
        plots.push_back({"backbone.csv", "omega_shooting", "r", "method", "backbone curve (shooting)"});
        std::printf("backbone %s: max |formula - shooting| %.3g over r <= %.6g\n", method.c_str(), worst, r_max);
    } else {
        write_text(backbone_csv({curve}), path_in(cfg, "backbone.csv"));
    }

    if (l.has_potential && model.coefficients && (method == "lsm" || method == "lsm-modal")) {
        const MechanicalSystem cons = conservative_limit(l.system);
        const Eigen::MatrixXd Phi2 =
            model.coefficients->frame == Frame::modal ? modal_transform(cons).Phi2 : Eigen::MatrixXd{};
        try {
            const FrequencyEnergyCurve fe = frequency_energy(cons, l.potential, *model.coefficients, curve, Phi2);
            write_text(frequency_energy_csv(fe), path_in(cfg, "fe.csv"));
            plots.push_back({"fe.csv", "energy", "omega", "", "frequency-energy"});
        } catch (const Error& e) {
            meta["frequency_energy_skipped"] = e.what();
        }
    }
    if (cfg.compare) {
        const ModalSystem ms = modal_transform(conservative_limit(l.system));
        write_text(comparison_csv(ms), path_in(cfg, "comparison.csv"));
        std::vector<BackboneCurve> all;
        for (const std::string m : {"lsm-modal", "nf", "md"}) {
            BackboneCurve c = backbone_curve(conservative_backbone_model(l.system, m), r_max, steps);
            c.method = m;
            all.push_back(c);
        }
        write_text(backbone_csv(all), path_in(cfg, "backbone_compare.csv"));
        plots.push_back({"backbone_compare.csv", "omega", "r", "method", "backbone by reduction method"});
    }
    write_json(meta, path_in(cfg, "backbone.json"));
    update_manifest(cfg, plots);
    std::printf("backbone %s: omega0 %.10g omega1 %.10g, %zu samples\n", method.c_str(), model.omega0, w1,
                curve.samples.size());
    return 0;
}

int cmd_frc(const RunConfig& cfg) {
    const Loaded l = load(cfg);
    const std::string method = cfg.method.empty() ? "both" : cfg.method;
    if (method != "both" && method != "sweep" && method != "hb")
        throw InputError("frc --method must be sweep, hb or both");
    const ModalSystem ms = modal_transform(l.system);
    SsmModel red = reduce_ssm_permissive(ms);
    const double w0 = red.omega0();
    const double lo = cfg.omega_min.value_or(0.9 * w0), hi = cfg.omega_max.value_or(1.1 * w0);
    if (!(lo > 0.0 && hi > lo)) throw InputError("need 0 < --omega-min < --omega-max");
    const int steps = cfg.steps.value_or(101);
    if (steps < 2) throw InputError("--steps must be at least 2");
    const Direction dir = direction_from_string(cfg.direction);

    std::vector<ForcedResponseCurve> curves;
    json meta = run_info(cfg, l);
    meta["model"] = to_json(red);
    if (method != "hb") {
        SweepOptions so;
        so.rtol = cfg.rtol.value_or(so.rtol);
        so.atol = cfg.atol.value_or(so.atol);
        curves.push_back(frc_sweep(red, lo, hi, steps, dir, so));
        meta["sweep"] = {{"peak_Omega", frc_peak_frequency(curves.back())},
                         {"diagnostics", curves.back().diagnostics}};
    }
    if (method != "sweep") {
        curves.push_back(frc_harmonic_balance(red, lo, hi));
        meta["harmonic_balance"] = {{"peak_Omega", frc_peak_frequency(curves.back())},
                                    {"diagnostics", curves.back().diagnostics}};
    }
    if (curves.size() == 2) meta["sweep_hb_gap"] = frc_agreement(curves[0], curves[1]);
    write_text(frc_csv(curves), path_in(cfg, "frc.csv"));

    double amax = 0.0;
    for (const auto& c : curves)
        for (const auto& s : c.samples) amax = std::max(amax, s.amplitude);
    const LsmModel cons = conservative_part(red);
    BackboneCurve bb = backbone_curve(cons, amax, 50);
    bb.method = "ssm";
    write_text(backbone_csv({bb}), path_in(cfg, "frc_backbone.csv"));
    meta.update({{"Omega_min", lo}, {"Omega_max", hi}, {"steps", steps}, {"direction", to_string(dir)},
                 {"omega0", w0}, {"omega1", backbone_coefficient(cons)}});
    write_json(meta, path_in(cfg, "frc.json"));
    update_manifest(cfg, {{"frc.csv", "Omega", "amplitude", "method", "forced response"},
                          {"frc_backbone.csv", "omega", "r", "method", "backbone of the reduced model"}});
    std::printf("frc %s: eps*F1 %.6g, Omega in [%.6g, %.6g], peak at %.8g\n", method.c_str(), red.epsilon * red.F1,
                lo, hi, frc_peak_frequency(curves.back()));
    return 0;
}

int cmd_simulate(const RunConfig& cfg) {
    const Loaded l = load(cfg);
    const std::string method = cfg.method.empty() ? "ssm" : cfg.method;
    const std::vector<std::string> known{"full", "ssm", "md", "linear"};
    if (std::find(known.begin(), known.end(), method) == known.end())
        throw InputError("simulate --method must be full, ssm, md or linear");
    if (cfg.start != "rest" && cfg.start != "manifold") throw InputError("--start must be rest or manifold");
    const MechanicalSystem& sys = l.system;
    const ModalSystem ms = modal_transform(sys);
    const SsmModel red = reduce_ssm_permissive(ms);
    const std::size_t n = ms.n();
    const double period = 2.0 * std::numbers::pi / red.omega0();
    const double t_end = cfg.t_end.value_or(50.0 * period);
    if (t_end < 0.0) throw InputError("--t-end must be non-negative");
    const int samples = cfg.steps.value_or(2001);
    if (samples < 1) throw InputError("--steps must be positive");
    const auto ts = uniform_times(0.0, t_end, static_cast<std::size_t>(samples));
    const IntegratorOptions io = integrator_options(cfg, 1e-10, 1e-12);
    const double x0 = cfg.x0, eps = red.epsilon, Om = red.Omega;

    const SlaveMap ssm_slave = [&](double t, double x, double xd) {
        return ssm_manifold_eval(*red.coefficients, ms, x, xd, Om * t, eps);
    };
    const Eigen::VectorXd Theta = md_reduce(ms).Theta;
    const SlaveMap md_slave = [&](double, double x, double xd) {
        return std::pair<Eigen::VectorXd, Eigen::VectorXd>{ms.Phi2 * (Theta * x * x), ms.Phi2 * (2.0 * Theta * x * xd)};
    };

    auto run_method = [&](const std::string& m) -> Trajectory {
        if (m == "full") {
            std::vector<double> z(2 + 2 * n, 0.0);
            z[0] = x0;
            if (cfg.start == "manifold") {
                const auto [y, yd] = ssm_slave(0.0, x0, 0.0);
                for (std::size_t k = 0; k < n; ++k) {
                    z[2 + k] = y[static_cast<Eigen::Index>(k)];
                    z[2 + n + k] = yd[static_cast<Eigen::Index>(k)];
                }
            }
            return integrate(partitioned_rhs(sys), z, 0.0, t_end, ts, io);
        }
        const SsmModel model = m == "ssm" ? red : m == "md" ? md_damped_model(ms) : linearized(red);
        const Trajectory r = integrate(ssm_rhs(model), {x0, 0.0}, 0.0, t_end, ts, io);
        return lift(r, n, m == "ssm" ? ssm_slave : m == "md" ? md_slave : SlaveMap{});
    };

    const Trajectory tr = run_method(method);
    write_text(trajectory_csv(tr), path_in(cfg, "trajectory.csv"));
    json meta = run_info(cfg, l);
    meta.update({{"method", method}, {"x0", x0}, {"start", cfg.start}, {"t_end", t_end}, {"samples", ts.size()},
                 {"integration", tr.meta}});
    if (red.coefficients && !red.coefficients->warnings.empty()) meta["warnings"] = red.coefficients->warnings;
    std::vector<PlotSpec> plots{{"trajectory.csv", "t", "x", "", "master coordinate"}};

    if (cfg.compare) {
        std::vector<Trajectory> runs;
        for (const auto& m : known) runs.push_back(m == method ? tr : run_method(m));
        const auto xf = runs[0].component(0);
        double amp = 0.0;
        for (double v : xf) amp = std::max(amp, std::abs(v));
        CsvWriter csv({"t", "full", "ssm", "md", "linear"});
        std::vector<std::vector<double>> xs;
        for (const auto& r : runs) xs.push_back(r.component(0));
        for (std::size_t i = 0; i < ts.size(); ++i) {
            csv.row() << ts[i];
            for (const auto& x : xs) csv << x[i];
        }
        csv.save(path_in(cfg, "comparison_trajectory.csv"));
        json errors;
        for (std::size_t k = 1; k < known.size(); ++k) {
            double rms = 0.0;
            for (std::size_t i = 0; i < xf.size(); ++i) rms += (xs[k][i] - xf[i]) * (xs[k][i] - xf[i]);
            rms = std::sqrt(rms / static_cast<double>(xf.size()));
            errors[known[k]] = {{"max_rel", amp > 0.0 ? max_abs_difference(xf, xs[k]) / amp : 0.0},
                                {"rms_rel", amp > 0.0 ? rms / amp : 0.0}};
            std::printf("simulate compare: %-6s max rel error %.4g, rms rel error %.4g\n", known[k].c_str(),
                        errors[known[k]]["max_rel"].get<double>(), errors[known[k]]["rms_rel"].get<double>());
        }
        meta["comparison"] = {{"errors", errors},
                              {"ordering_ssm_md_linear", errors["ssm"]["max_rel"] < errors["md"]["max_rel"] &&
                                                             errors["md"]["max_rel"] < errors["linear"]["max_rel"]}};
        plots.push_back({"comparison_trajectory.csv", "t", "full,ssm,md,linear", "", "full vs reduced models"});
    }
    write_json(meta, path_in(cfg, "trajectory.json"));
    update_manifest(cfg, plots);
    std::printf("simulate %s: %zu samples to t = %.6g\n", method.c_str(), ts.size(), t_end);
    return 0;
}

int cmd_check(const RunConfig& cfg) {
    const Loaded l = load(cfg);
    const ResonanceSummary rs = resonance_summary(l.system, cfg.resonance_tol);
    json report = rs.report;
    report["run"] = run_info(cfg, l);
    const bool conservative = l.system.is_conservative();
    const bool blocked = conservative ? rs.lsm_blocked : rs.ssm_blocked;

    json validity;
    const std::vector<double> amps{1e-3, 3e-3, 1e-2, 3e-2, 1e-1};
    try {
        const ModalSystem ms = modal_transform(l.system);
        std::vector<double> res;
        if (conservative) {
            const LsmCoefficients co = lsm_coeffs_modal(ms);
            for (double a : amps) res.push_back(invariance_residual(ms, co, a));
        } else {
            const SsmModel red = reduce_ssm_permissive(ms);
            for (double a : amps) res.push_back(invariance_residual(ms, *red.coefficients, a));
        }
        validity = {{"manifold", conservative ? "lsm" : "ssm"}, {"amplitudes", amps}, {"residuals", res},
                    {"loglog_slope", loglog_slope(amps, res)}};
    } catch (const Error& e) {
        validity = {{"error", e.what()}};
    }
    report["validity"] = validity;
    report["blocked"] = blocked;
    write_json(report, path_in(cfg, "check.json"));

    std::printf("check %s: %s (%s)\n", l.name.c_str(), blocked ? "FLAGGED" : "ok",
                conservative ? "conservative, LSM conditions" : "damped, SSM conditions");
    print_report_lines(rs);
    if (validity.contains("loglog_slope"))
        std::printf("  invariance residual slope %.3f\n", validity["loglog_slope"].get<double>());
    return blocked ? 2 : 0;
}

int execute(const RunConfig& cfg) {
    try {
        if (cfg.command == "reduce") return cmd_reduce(cfg);
        if (cfg.command == "backbone") return cmd_backbone(cfg);
        if (cfg.command == "frc") return cmd_frc(cfg);
        if (cfg.command == "simulate") return cmd_simulate(cfg);
        if (cfg.command == "check") return cmd_check(cfg);
        throw InputError("unknown command '" + cfg.command + "'");
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return static_cast<int>(e.kind());
    } catch (const nlohmann::json::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
}

int run(int argc, char** argv) {
    CLI::App app{"third-order reduced models of nonlinear mechanical systems"};
    app.require_subcommand(1);
    RunConfig cfg;

    auto common = [&](CLI::App* sub) {
        auto* in = sub->add_option("--input", cfg.input, "system JSON file");
        auto* pr = sub->add_option("--preset", cfg.preset, "named preset");
        in->excludes(pr);
        sub->add_option("--method", cfg.method, "reduction or solution method");
        sub->add_option("--out", cfg.out, "output directory")->capture_default_str();
        sub->add_option("--rtol", cfg.rtol, "relative integrator tolerance");
        sub->add_option("--atol", cfg.atol, "absolute integrator tolerance");
        sub->add_option("--threads", cfg.threads, "worker threads (fallback: SSMREDUCE_THREADS)");
        sub->add_option("--seed", cfg.seed, "seed recorded with the run")->capture_default_str();
        sub->add_option("--eps", cfg.eps, "forcing amplitude override");
        sub->add_option("--resonance-tol", cfg.resonance_tol, "determinant margin threshold")->capture_default_str();
    };

    auto* reduce = app.add_subcommand("reduce", "compute a reduced model");
    common(reduce);
    reduce->add_flag("--compare", cfg.compare, "also write the method comparison table");

    auto* backbone = app.add_subcommand("backbone", "backbone curve of the conservative limit");
    common(backbone);
    backbone->add_option("--r-max", cfg.r_max, "largest amplitude");
    backbone->add_option("--steps", cfg.steps, "number of intervals");
    backbone->add_flag("--verify", cfg.verify, "add the shooting oracle column");
    backbone->add_flag("--compare", cfg.compare, "also sample the MD and NF backbones");

    auto* frc = app.add_subcommand("frc", "forced response curve of the SSM-reduced model");
    common(frc);
    frc->add_option("--omega-min", cfg.omega_min, "lower forcing frequency");
    frc->add_option("--omega-max", cfg.omega_max, "upper forcing frequency");
    frc->add_option("--steps", cfg.steps, "sweep points");
    frc->add_option("--direction", cfg.direction, "sweep direction")
        ->check(CLI::IsMember({"up", "down"}))
        ->capture_default_str();

    auto* simulate = app.add_subcommand("simulate", "integrate full or reduced dynamics");
    common(simulate);
    simulate->add_option("--t-end", cfg.t_end, "final time (default 50 linear periods)");
    simulate->add_option("--steps", cfg.steps, "output samples");
    simulate->add_option("--x0", cfg.x0, "initial master displacement")->capture_default_str();
    simulate->add_option("--start", cfg.start, "rest or manifold")->capture_default_str();
    simulate->add_flag("--compare", cfg.compare, "run full, SSM, MD and linearized models");

    auto* check = app.add_subcommand("check", "resonance and validity report");
    common(check);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }
    for (auto* sub : app.get_subcommands()) cfg.command = sub->get_name();
    return execute(cfg);
}

}  // namespace ssmreduce::cli
