// qlbm: command-line driver for dataset generation, training, hybrid runs,
// flow cases, analysis and plotting.

#include "qlbm/analysis.hpp"
#include "qlbm/cases.hpp"
#include "qlbm/config.hpp"
#include "qlbm/errors.hpp"
#include "qlbm/field_io.hpp"
#include "qlbm/plot.hpp"
#include "qlbm/scaling.hpp"

#include "CLI11.hpp"

#include <spdlog/spdlog.h>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <cstdio>
#include <iostream>

namespace fs = std::filesystem;
using namespace qlbm;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct Globals {
    std::string config_path;
    std::string out;
    bool force = false;
    int threads = 0;
    std::uint64_t seed = 0;
    std::string log_level = "info";
};

struct Overrides {
    // train
    std::string dataset, loss, model_kind, target;
    int epochs = -1, layers = -1, validate_every = -1;
    double lr = -1, lambda = -1, lambda_u = -1;
    std::size_t n = 0;
    bool nonunitary = false;
    // hybrid / case
    std::string model, mode;
    bool baseline_only = false;
    int steps = -1, handoff = -1;
    double force_scale = -1, digits_u = -1, digits_f = -1, u = -1, tau = -1;
    // analysis
    double beta = -1, crossover = -1, n_base = -1, t_base = -1;
    std::string csv, xcol, ycol, column;
    std::vector<std::string> ycols;
    bool log_y = false;
    std::string out_file;
    std::string source;
};

config::ExperimentConfig resolve(const Globals& g, CLI::App& root, CLI::App& sub, const Overrides& o) {
    config::ExperimentConfig c = g.config_path.empty() ? config::ExperimentConfig{} : config::load_config(g.config_path);
    if (root.get_option("--seed")->count()) {
        c.seed = g.seed;
        c.train.seed = c.dataset.artificial.seed = c.dataset.harvest.seed = g.seed;
    }
    const auto set = [&](const char* name) {
        try {
            return sub.get_option(name)->count() > 0;
        } catch (const CLI::OptionNotFound&) {
            return false;
        }
    };
    if (set("--epochs")) c.train.epochs = o.epochs;
    if (set("--layers")) c.train.layers = o.layers;
    if (set("--lr")) c.train.learning_rate = o.lr;
    if (set("--loss")) c.train.loss.kind = train::parse_loss_kind(o.loss);
    if (set("--lambda")) c.train.loss.lambda = o.lambda;
    if (set("--lambda-u")) c.train.loss.lambda_u = o.lambda_u;
    if (set("--nonunitary")) c.train.loss.nonunitary = o.nonunitary;
    if (set("--validate-every")) c.train.validate_every = o.validate_every;
    if (set("--model-kind")) {
        if (o.model_kind == "r1") c.train.model = train::ModelKind::R1;
        else if (o.model_kind == "r2") c.train.model = train::ModelKind::R2;
        else throw ConfigError("--model-kind: expected r1 or r2");
    }
    if (set("--n")) c.dataset.artificial.n = c.dataset.harvest.n = o.n;
    if (set("--source")) {
        if (o.source == "artificial") c.dataset.source = data::Source::Artificial;
        else if (o.source == "harvest") c.dataset.source = data::Source::Harvested;
        else throw ConfigError("--source: expected artificial or harvest");
    }
    if (set("--mode")) c.hybrid.options.mode = hybrid::parse_mode(o.mode);
    if (set("--steps")) {
        if (sub.get_name() == "case") c.case_.steps = o.steps;
        else c.hybrid.steps = o.steps;
    }
    if (set("--handoff")) c.case_.handoff_steps = o.handoff;
    if (set("--force-scale")) c.hybrid.options.force_scale = o.force_scale;
    if (set("--digits-u")) c.case_.digits_u = o.digits_u;
    if (set("--digits-f")) c.case_.digits_f = o.digits_f;
    if (set("--u")) {
        c.lattice.u_max = o.u;
        c.analysis.u = o.u;
    }
    if (set("--tau")) c.lattice.tau = c.train.tau = c.dataset.artificial.tau = o.tau;
    return c;
}

fs::path run_dir(const Globals& g, const config::ExperimentConfig& c, const std::string& command) {
    fs::path dir;
    if (!g.out.empty()) dir = g.out;
    else if (!c.output_dir.empty()) dir = c.output_dir;
    else dir = config::output_root() / (command + "-" + config::config_hash(c));
    return config::prepare_output_dir(dir, g.force);
}

void finish(const fs::path& dir, const std::string& command, const config::ExperimentConfig& c,
            std::vector<fs::path> files) {
    files.push_back(config::write_resolved_config(dir, c));
    config::write_manifest(dir, command, c, files);
    std::cout << dir.string() << '\n';
}

train::Validator hybrid_validator(const config::ExperimentConfig& c) {
    return [c](const ansatz::Model& m) {
        lbm::LatticeConfig lat = c.lattice;
        lat.tau = m.tau;
        hybrid::HybridOptions opt = c.hybrid.options;
        if (m.kind() == ansatz::ModelKind::R2) opt.mode = hybrid::HybridMode::MeasuredPerStep;
        try {
            return hybrid::run_hybrid(lat, &m, c.hybrid.steps, opt).metrics.final().max_rel_u;
        } catch (const InstabilityError& e) {
            spdlog::warn("validation run unstable: {}", e.what());
            return std::numeric_limits<double>::infinity();
        }
    };
}

std::vector<data::CollisionSample> load_dataset(const Overrides& o) {
    if (!o.dataset.empty()) {
        if (!fs::exists(o.dataset)) throw ConfigError("dataset " + o.dataset + " does not exist (run gen-dataset first)");
        return data::read_dataset(o.dataset);
    }
    throw ConfigError("train needs --dataset <file> (produced by gen-dataset)");
}

// ---------------------------------------------------------------------------

int cmd_gen_dataset(const config::ExperimentConfig& c, const fs::path& dir) {
    c.validate();
    const auto samples = config::make_dataset(c.dataset);
    std::vector<fs::path> files{dir / "dataset.bin"};
    data::write_dataset(files[0], samples);
    if (!samples.empty()) {
        const auto rep = data::stats(samples);
        for (auto& p : data::write_report(rep, samples, dir, "dataset")) files.push_back(p);
    }
    spdlog::info("wrote {} samples", samples.size());
    finish(dir, "gen-dataset", c, files);
    return 0;
}

int cmd_train(config::ExperimentConfig c, const Overrides& o, const fs::path& dir) {
    c.validate();
    const auto samples = load_dataset(o);
    train::Validator validator;
    if (c.train.validate_every > 0) validator = hybrid_validator(c);
    auto result = train::train(c.train, samples, validator);
    result.best.config_hash = result.model.config_hash = config::config_hash(c);
    std::vector<fs::path> files;
    ansatz::save_model(result.best, dir / "model");
    ansatz::save_model(result.model, dir / "model_final");
    for (const char* f : {"model.json", "model_params.csv", "model_final.json", "model_final_params.csv"})
        files.push_back(dir / f);
    train::write_history_csv(dir / "history.csv", result.history);
    files.push_back(dir / "history.csv");
    finish(dir, "train", c, files);
    return 0;
}

std::optional<ansatz::Model> load_model_opt(const Overrides& o) {
    if (o.baseline_only) return std::nullopt;
    if (o.model.empty()) throw ConfigError("a --model is required unless --baseline-only is given");
    return ansatz::load_model(o.model);
}

int cmd_simulate(const config::ExperimentConfig& c, const Overrides& o, const fs::path& dir) {
    c.validate();
    const auto model = load_model_opt(o);
    if (model) hybrid::check_compatibility(*model, c.hybrid.options.mode, c.lattice);
    const auto run = hybrid::run_hybrid(c.lattice, model ? &*model : nullptr, c.hybrid.steps, c.hybrid.options);
    std::vector<fs::path> files{dir / "metrics.csv", dir / "final_reference.csv", dir / "final_linear.csv",
                                dir / "final_qml.csv", dir / "final_qml.bin"};
    run.metrics.write_csv(files[0]);
    io::write_macro_csv(files[1], lbm::MacroField::from(run.final_reference));
    io::write_macro_csv(files[2], lbm::MacroField::from(run.final_linear));
    io::write_macro_csv(files[3], lbm::MacroField::from(run.final_qml));
    io::write_field_binary(files[4], run.final_qml);
    if (!run.metrics.steps.empty()) {
        const auto& m = run.metrics.final();
        spdlog::info("t={} max_rel_u qml={:.4f} lin={:.4f} eta_eps={:.3f} eta={:.3f}", m.step, m.max_rel_u,
                     m.lin_max_rel_u, m.eta_eps, m.eta);
    }
    finish(dir, "simulate", c, files);
    return 0;
}

int cmd_case(const std::string& kind, config::ExperimentConfig c, const Overrides& o, const fs::path& dir) {
    c.case_.kind = kind;
    c.validate();
    std::vector<fs::path> files;
    if (kind == "precision") {
        lbm::LatticeConfig lat = c.lattice;
        lat.flow = lbm::FlowCase::Jets;
        if (!std::holds_alternative<lbm::GaussianJets>(lat.force)) lat.force = lbm::GaussianJets{};
        const auto r = cases::fixed_precision_study(lat, c.case_.digits_u, c.case_.digits_f, c.case_.steps);
        files.push_back(dir / "precision_rel_err.csv");
        r.rel_err.write_csv(files.back(), "rel_err");
        files.push_back(dir / "precision_series.csv");
        {
            std::FILE* f = std::fopen(files.back().string().c_str(), "w");
            std::fprintf(f, "step,max_rel_err\n");
            for (std::size_t k = 0; k < r.max_rel_err_t.size(); ++k) std::fprintf(f, "%zu,%.12g\n", k + 1, r.max_rel_err_t[k]);
            std::fclose(f);
        }
        spdlog::info("precision u={} f={}: max rel err {:.3e}, mean {:.3e}", r.digits_u, r.digits_f, r.max_rel_err,
                     r.mean_rel_err);
        finish(dir, "case", c, files);
        return 0;
    }

    const auto model = load_model_opt(o);
    const ansatz::Model* mp = model ? &*model : nullptr;
    if (kind == "kolmogorov") {
        const auto r = cases::kolmogorov_decay(c.lattice, mp, c.case_.steps, c.hybrid.options);
        files.push_back(dir / "decay.csv");
        r.write_csv(files.back());
        files.push_back(dir / "metrics.csv");
        r.metrics.write_csv(files.back());
        spdlog::info("decay mean abs error: linear {:.3e}, circuit {:.3e}", r.mean_abs_err_lin, r.mean_abs_err_qml);
    } else if (kind == "plate") {
        const auto r = cases::plate_handoff(c.lattice, mp, c.case_.steps, c.case_.handoff_steps, c.hybrid.options);
        for (const auto& [name, field] : {std::pair{"vorticity_ref.csv", &r.vort_ref},
                                          std::pair{"vorticity_err_lin.csv", &r.err_lin},
                                          std::pair{"vorticity_err_qml.csv", &r.err_qml}}) {
            files.push_back(dir / name);
            field->write_csv(files.back(), "value");
        }
        files.push_back(dir / "metrics.csv");
        r.metrics.write_csv(files.back());
        spdlog::info("plate vorticity error max/mean: linear {:.3e}/{:.3e}, circuit {:.3e}/{:.3e}", r.max_err_lin,
                     r.mean_err_lin, r.max_err_qml, r.mean_err_qml);
    } else if (kind == "jets") {
        const auto r = cases::jets(c.lattice, mp, c.case_.steps, c.hybrid.options);
        files.push_back(dir / "velocity_err_lin.csv");
        r.err_lin.write_csv(files.back(), "value");
        files.push_back(dir / "velocity_err_qml.csv");
        r.err_qml.write_csv(files.back(), "value");
        files.push_back(dir / "final_reference.csv");
        io::write_macro_csv(files.back(), r.final_ref);
        files.push_back(dir / "final_qml.csv");
        io::write_macro_csv(files.back(), r.final_qml);
        files.push_back(dir / "metrics.csv");
        r.metrics.write_csv(files.back());
        spdlog::info("jets shape similarity: linear {:.4f}, circuit {:.4f}", r.similarity_lin, r.similarity_qml);
    }
    finish(dir, "case", c, files);
    return 0;
}

int cmd_scaling(const config::ExperimentConfig& c, const Overrides& o, const fs::path& dir) {
    std::vector<fs::path> files;
    if (o.crossover > 0) {
        const double n = scaling::crossover_sites(o.crossover);
        std::printf("beta1 = %.6g reached at N_B = %.6g (%.0f x %.0f sites in 2D)\n", o.crossover, n, std::sqrt(n),
                    std::sqrt(n));
        files.push_back(dir / "crossover.csv");
        std::FILE* f = std::fopen(files.back().string().c_str(), "w");
        std::fprintf(f, "beta1,n_base\n%.12g,%.12g\n", o.crossover, n);
        std::fclose(f);
    }
    scaling::ScalingParams p;
    if (o.beta > 0) p.beta = o.beta;
    if (o.n_base > 0) p.n_base = o.n_base;
    if (o.t_base > 0) p.t_base = o.t_base;
    if (o.crossover <= 0 || o.beta > 0) {
        const auto r = scaling::diffusive_scaling(p);
        files.push_back(dir / "scaling.csv");
        scaling::write_scaling_csv(files.back().string(), r);
        std::printf("beta=%g: N_S=%g T_S=%g c_s x%g u_lat x%g P x%g eta=%g beta0=%g beta1=%g crossover=%g\n", p.beta,
                    r.n_scaled, r.t_scaled, r.cs_factor, r.u_lattice_factor, r.pressure_factor, r.eta, r.beta0,
                    r.beta1, r.beta_crossover);
    }
    finish(dir, "scaling", c, files);
    return 0;
}

analysis::DatasetProvider provider_for(const config::ExperimentConfig& c) {
    return [c](double u, double tau) {
        config::DatasetConfig d = c.dataset;
        d.artificial.u0_max = u;
        d.artificial.tau = tau;
        d.harvest.lattice.u_max = u;
        d.harvest.lattice.tau = tau;
        return config::make_dataset(d);
    };
}

int cmd_analyze(const std::string& kind, config::ExperimentConfig c, const Overrides& o, const fs::path& dir) {
    if (kind == "scaling") return cmd_scaling(c, o, dir);
    std::vector<fs::path> files;
    analysis::ModelCache cache(config::output_root() / "model-cache");
    if (kind == "spectrum") {
        const auto kindm = analysis::parse_map_kind(c.analysis.map_kind);
        const auto rows = analysis::spectrum_sweep(kindm, c.analysis.u_list, c.analysis.taus);
        files.push_back(dir / "spectrum.csv");
        analysis::write_spectrum_csv(files.back(), rows);
    } else if (kind == "velocity") {
        c.validate();
        const auto rows = analysis::velocity_sweep(c.train, c.analysis.u_list, provider_for(c), cache);
        files.push_back(dir / "velocity_sweep.csv");
        analysis::write_velocity_csv(files.back(), rows);
        std::vector<double> us, ms;
        for (const auto& r : rows)
            if (r.stats.mse_pred > 0) {
                us.push_back(r.u);
                ms.push_back(r.stats.mse_pred);
            }
        if (us.size() >= 4) {
            const auto fit = analysis::fit_exp_quadratic(us, ms);
            spdlog::info("fit mse = {:.3e} exp({:.3f} u + {:.3f} u^2), R2 = {:.4f}", fit.c, fit.a, fit.b, fit.r2);
        }
    } else if (kind == "tau") {
        c.validate();
        const auto rows = analysis::tau_sweep(c.train, c.analysis.taus, c.analysis.u, provider_for(c),
                                              hybrid_validator(c), cache);
        files.push_back(dir / "tau_sweep.csv");
        analysis::write_tau_csv(files.back(), rows);
    } else if (kind == "lambda") {
        c.validate();
        const auto samples = config::make_dataset(c.dataset);
        const auto rows = analysis::lambda_u_sweep(c.train, c.analysis.lambdas, samples, hybrid_validator(c), cache);
        files.push_back(dir / "lambda_sweep.csv");
        analysis::write_lambda_csv(files.back(), rows);
    } else if (kind == "fit") {
        if (o.csv.empty()) throw ConfigError("analyze fit needs --csv with --x and --y columns");
        const auto t = plot::read_csv(o.csv);
        const auto x = t.column(o.xcol.empty() ? "u" : o.xcol);
        const auto y = t.column(o.ycol.empty() ? "mse_pred" : o.ycol);
        const auto fit = analysis::fit_exp_quadratic(x, y);
        files.push_back(dir / "fit.csv");
        std::FILE* f = std::fopen(files.back().string().c_str(), "w");
        std::fprintf(f, "a,b,c,r2\n%.12g,%.12g,%.12g,%.12g\n", fit.a, fit.b, fit.c, fit.r2);
        std::fclose(f);
        std::printf("c=%g a=%g b=%g R2=%g\n", fit.c, fit.a, fit.b, fit.r2);
    } else {
        throw ConfigError("unknown analysis '" + kind + "' (available: spectrum, velocity, tau, lambda, fit, scaling)");
    }
    for (const auto& f : files) config::write_sidecar(f, c);
    finish(dir, "analyze", c, files);
    return 0;
}

int cmd_plot(const std::string& kind, const Overrides& o) {
    if (o.csv.empty()) throw ConfigError("plot needs an input CSV");
    const fs::path out = o.out_file.empty() ? fs::path(o.csv).replace_extension(".png") : fs::path(o.out_file);
    if (kind == "lines") {
        plot::plot_lines_csv(o.csv, out, o.xcol.empty() ? "step" : o.xcol, o.ycols, o.log_y);
    } else if (kind == "heatmap") {
        plot::plot_heatmap_csv(o.csv, out, o.column.empty() ? "value" : o.column);
    } else if (kind == "scatter") {
        const auto t = plot::read_csv(o.csv);
        plot::ScatterPlot p;
        p.title = fs::path(o.csv).stem().string();
        p.xlabel = o.xcol.empty() ? "u" : o.xcol;
        p.ylabel = o.ycol.empty() ? "mse_pred" : o.ycol;
        p.log_y = o.log_y;
        p.points = {p.ylabel, t.column(p.xlabel), t.column(p.ylabel)};
        std::vector<double> xs, ys;
        for (std::size_t k = 0; k < p.points.x.size(); ++k)
            if (std::isfinite(p.points.x[k]) && p.points.y[k] > 0) {
                xs.push_back(p.points.x[k]);
                ys.push_back(p.points.y[k]);
            }
        if (xs.size() >= 4) {
            const auto fit = analysis::fit_exp_quadratic(xs, ys);
            plot::Series s{"fit R2=" + std::to_string(fit.r2).substr(0, 6), {}, {}};
            const double lo = *std::min_element(xs.begin(), xs.end()), hi = *std::max_element(xs.begin(), xs.end());
            for (int k = 0; k <= 100; ++k) {
                const double u = lo + (hi - lo) * k / 100.0;
                s.x.push_back(u);
                s.y.push_back(fit.c * std::exp(fit.a * u + fit.b * u * u));
            }
            p.fit = s;
        }
        plot::write_scatter(out, p);
    } else {
        throw ConfigError("unknown plot kind '" + kind + "' (available: lines, heatmap, scatter)");
    }
    std::cout << out.string() << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Quantum-circuit collision models for lattice Boltzmann flows"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    Overrides o;
    app.add_option("-c,--config", g.config_path, "experiment config (JSON)")->check(CLI::ExistingFile);
    app.add_option("-o,--out", g.out, "output directory (default: <root>/<command>-<config hash>)");
    app.add_flag("--force", g.force, "overwrite an existing output directory");
    app.add_option("--threads", g.threads, "cap on worker threads (0 = all)");
    app.add_option("--seed", g.seed, "seed for every stage");
    app.add_option("--log-level", g.log_level, "trace, debug, info, warn, error");

    auto* gen = app.add_subcommand("gen-dataset", "generate a collision corpus and its statistics");
    gen->add_option("--n", o.n, "number of samples");
    gen->add_option("--source", o.source, "artificial or harvest");
    gen->add_option("--u", o.u, "peak velocity");
    gen->add_option("--tau", o.tau, "relaxation time");

    auto* tr = app.add_subcommand("train", "train a collision circuit");
    tr->add_option("--dataset", o.dataset, "corpus from gen-dataset");
    tr->add_option("--epochs", o.epochs);
    tr->add_option("--layers", o.layers);
    tr->add_option("--lr", o.lr);
    tr->add_option("--loss", o.loss, "amp_phase, rho, amp_only, rho1");
    tr->add_option("--lambda", o.lambda);
    tr->add_option("--lambda-u", o.lambda_u);
    tr->add_flag("--nonunitary", o.nonunitary);
    tr->add_option("--model-kind", o.model_kind, "r1 or r2");
    tr->add_option("--validate-every", o.validate_every);
    tr->add_option("--mode", o.mode, "hybrid mode of the validation runs");
    tr->add_option("--steps", o.steps, "steps of the validation runs");
    tr->add_option("--tau", o.tau);

    auto* sim = app.add_subcommand("simulate", "hybrid run against the reference and linear baseline");
    sim->add_option("--model", o.model, "model json");
    sim->add_option("--mode", o.mode, "measured, coherent, postselect");
    sim->add_flag("--baseline-only", o.baseline_only, "only the reference and linear runs");
    sim->add_option("--steps", o.steps);
    sim->add_option("--force-scale", o.force_scale);
    sim->add_option("--u", o.u);
    sim->add_option("--tau", o.tau);

    std::string case_kind;
    auto* cs = app.add_subcommand("case", "flow-case suite");
    cs->add_option("kind", case_kind, "kolmogorov, plate, jets, precision")->required();
    cs->add_option("--model", o.model);
    cs->add_option("--mode", o.mode);
    cs->add_flag("--baseline-only", o.baseline_only);
    cs->add_option("--steps", o.steps);
    cs->add_option("--handoff", o.handoff, "plate: steps run with the circuit/linear collisions");
    cs->add_option("--force-scale", o.force_scale, "jets: force factor of the circuit run");
    cs->add_option("--digits-u", o.digits_u);
    cs->add_option("--digits-f", o.digits_f);
    cs->add_option("--tau", o.tau);

    std::string analysis_kind;
    auto* an = app.add_subcommand("analyze", "operator diagnostics, sweeps and fits");
    an->add_option("kind", analysis_kind, "spectrum, velocity, tau, lambda, fit, scaling")->required();
    an->add_option("--beta", o.beta);
    an->add_option("--crossover", o.crossover, "β1 value whose N_B is wanted");
    an->add_option("--nb", o.n_base);
    an->add_option("--tb", o.t_base);
    an->add_option("--csv", o.csv);
    an->add_option("--x", o.xcol);
    an->add_option("--y", o.ycol);
    an->add_option("--u", o.u);
    an->add_option("--epochs", o.epochs);
    an->add_option("--n", o.n);

    std::string plot_kind;
    auto* pl = app.add_subcommand("plot", "render a CSV report as PNG");
    pl->add_option("kind", plot_kind, "lines, heatmap, scatter")->required();
    pl->add_option("csv", o.csv)->required();
    pl->add_option("--x", o.xcol);
    pl->add_option("--y", o.ycols);
    pl->add_option("--column", o.column);
    pl->add_flag("--logy", o.log_y);
    pl->add_option("--out", o.out_file);

    auto* sc = app.add_subcommand("scaling", "diffusive-scaling calculator");
    sc->add_option("--beta", o.beta);
    sc->add_option("--crossover", o.crossover);
    sc->add_option("--nb", o.n_base);
    sc->add_option("--tb", o.t_base);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitConfig;
    }

    spdlog::set_level(spdlog::level::from_str(g.log_level));
#ifdef _OPENMP
    if (g.threads > 0) omp_set_num_threads(g.threads);
#endif

    try {
        CLI::App* sub = app.get_subcommands().front();
        if (sub == pl) {
            if (!o.ycols.empty()) o.ycol = o.ycols.front();
            return cmd_plot(plot_kind, o);
        }
        auto c = resolve(g, app, *sub, o);
        if (sub == gen) return cmd_gen_dataset(c, run_dir(g, c, "gen-dataset"));
        if (sub == tr) return cmd_train(c, o, run_dir(g, c, "train"));
        if (sub == sim) return cmd_simulate(c, o, run_dir(g, c, "simulate"));
        if (sub == cs) {
            c.case_.kind = case_kind;
            return cmd_case(case_kind, c, o, run_dir(g, c, "case-" + case_kind));
        }
        if (sub == an) return cmd_analyze(analysis_kind, c, o, run_dir(g, c, "analyze-" + analysis_kind));
        if (sub == sc) return cmd_scaling(c, o, run_dir(g, c, "scaling"));
    } catch (const ConfigError& e) {
        spdlog::error("{}", e.what());
        return kExitConfig;
    } catch (const InvalidInput& e) {
        spdlog::error("{}", e.what());
        return kExitConfig;
    } catch (const InstabilityError& e) {
        spdlog::error("{} (step {})", e.what(), e.step());
        return kExitNumerical;
    } catch (const NumericalError& e) {
        spdlog::error("{}", e.what());
        return kExitNumerical;
    } catch (const DegenerateDensity& e) {
        spdlog::error("{}", e.what());
        return kExitNumerical;
    } catch (const EncodingError& e) {
        spdlog::error("{}", e.what());
        return kExitNumerical;
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return 1;
    }
    return 0;
}
