#include "qlbm/config.hpp"

#include "qlbm/errors.hpp"
#include "qlbm/hash.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <random>
#include <set>

namespace qlbm::config {

using nlohmann::json;

namespace {

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& section) {
    if (!j.is_object()) throw ConfigError(section + ": expected an object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [k, v] : j.items()) {
        if (!ok.contains(k)) {
            std::string list;
            for (const auto& a : ok) list += (list.empty() ? "" : ", ") + a;
            throw ConfigError(section + ": unknown key '" + k + "' (allowed: " + list + ")");
        }
    }
}

template <typename T> void read(const json& j, const char* key, T& out, const std::string& section) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(section + "." + key + ": " + e.what());
    }
}

lbm::Populations read_channels(const json& v, const std::string& where) {
    lbm::Populations p{};
    if (v.is_number()) {
        p.fill(v.get<double>());
    } else if (v.is_array() && v.size() == lbm::kQ) {
        for (int i = 0; i < lbm::kQ; ++i) p[i] = v[static_cast<std::size_t>(i)].get<double>();
    } else {
        throw ConfigError(where + ": expected a number or an array of 9 numbers");
    }
    return p;
}

std::string order_name(lbm::EqOrder o) { return o == lbm::EqOrder::Linear ? "linear" : "quadratic"; }
lbm::EqOrder parse_order(const std::string& s) {
    if (s == "linear") return lbm::EqOrder::Linear;
    if (s == "quadratic") return lbm::EqOrder::Quadratic;
    throw ConfigError("lattice.order: expected linear or quadratic, got '" + s + "'");
}

std::string flow_name(lbm::FlowCase f) {
    switch (f) {
    case lbm::FlowCase::TGV: return "tgv";
    case lbm::FlowCase::Kolmogorov: return "kolmogorov";
    case lbm::FlowCase::Plate: return "plate";
    case lbm::FlowCase::Jets: return "jets";
    }
    return "?";
}
lbm::FlowCase parse_flow(const std::string& s) {
    if (s == "tgv") return lbm::FlowCase::TGV;
    if (s == "kolmogorov") return lbm::FlowCase::Kolmogorov;
    if (s == "plate") return lbm::FlowCase::Plate;
    if (s == "jets") return lbm::FlowCase::Jets;
    throw ConfigError("lattice.flow: expected tgv, kolmogorov, plate or jets, got '" + s + "'");
}

json force_to_json(const lbm::ForceSpec& f) {
    if (const auto* u = std::get_if<lbm::UniformForce>(&f)) return {{"type", "uniform"}, {"gx", u->gx}, {"gy", u->gy}};
    if (const auto* g = std::get_if<lbm::GaussianJets>(&f))
        return {{"type", "jets"},     {"amplitude", g->amplitude}, {"width", g->width}, {"y_h1", g->y_h1},
                {"y_h2", g->y_h2},    {"x_v1", g->x_v1},           {"x_v2", g->x_v2}};
    if (const auto* k = std::get_if<lbm::KolmogorovInit>(&f))
        return {{"type", "kolmogorov"}, {"ax", k->ax}, {"ay", k->ay}, {"kx", k->kx}, {"ky", k->ky}};
    return {{"type", "none"}};
}

lbm::ForceSpec force_from_json(const json& j) {
    const std::string sec = "lattice.force";
    if (!j.is_object() || !j.contains("type")) throw ConfigError(sec + ": needs a 'type'");
    const auto type = j.at("type").get<std::string>();
    if (type == "none") {
        check_keys(j, {"type"}, sec);
        return std::monostate{};
    }
    if (type == "uniform") {
        check_keys(j, {"type", "gx", "gy"}, sec);
        lbm::UniformForce u;
        read(j, "gx", u.gx, sec);
        read(j, "gy", u.gy, sec);
        return u;
    }
    if (type == "jets") {
        check_keys(j, {"type", "amplitude", "width", "y_h1", "y_h2", "x_v1", "x_v2"}, sec);
        lbm::GaussianJets g;
        read(j, "amplitude", g.amplitude, sec);
        read(j, "width", g.width, sec);
        read(j, "y_h1", g.y_h1, sec);
        read(j, "y_h2", g.y_h2, sec);
        read(j, "x_v1", g.x_v1, sec);
        read(j, "x_v2", g.x_v2, sec);
        return g;
    }
    if (type == "kolmogorov") {
        check_keys(j, {"type", "ax", "ay", "kx", "ky"}, sec);
        lbm::KolmogorovInit k;
        read(j, "ax", k.ax, sec);
        read(j, "ay", k.ay, sec);
        read(j, "kx", k.kx, sec);
        read(j, "ky", k.ky, sec);
        return k;
    }
    throw ConfigError(sec + ": unknown type '" + type + "' (none, uniform, jets, kolmogorov)");
}

std::string target_name(train::TargetKind t) {
    return t == train::TargetKind::NonlinearFromLin ? "nonlinear_from_lin" : "linear_from_str";
}
train::TargetKind parse_target(const std::string& s) {
    if (s == "nonlinear_from_lin") return train::TargetKind::NonlinearFromLin;
    if (s == "linear_from_str") return train::TargetKind::LinearFromStr;
    throw ConfigError("train.target: expected nonlinear_from_lin or linear_from_str, got '" + s + "'");
}

std::string loss_kind_name(train::LossKind k) {
    switch (k) {
    case train::LossKind::AmpPhase: return "amp_phase";
    case train::LossKind::Rho: return "rho";
    case train::LossKind::AmpOnly: return "amp_only";
    case train::LossKind::Rho1: return "rho1";
    }
    return "?";
}
std::string macro_name(train::MacroMode m) {
    switch (m) {
    case train::MacroMode::MSEVel: return "mse_vel";
    case train::MacroMode::RelVel: return "rel_vel";
    case train::MacroMode::FullM: return "full_m";
    }
    return "?";
}

} // namespace

json lattice_to_json(const lbm::LatticeConfig& c) {
    return {{"nx", c.nx},
            {"ny", c.ny},
            {"tau", c.tau},
            {"order", order_name(c.order)},
            {"boundary", c.boundary == lbm::Boundary::Periodic ? "periodic" : "inlet_outlet"},
            {"flow", flow_name(c.flow)},
            {"u_max", c.u_max},
            {"force", force_to_json(c.force)},
            {"plate",
             {{"x_frac", c.plate.x_frac},
              {"center_frac", c.plate.center_frac},
              {"length_frac", c.plate.length_frac},
              {"inlet_u", c.plate.inlet_u}}}};
}

lbm::LatticeConfig lattice_from_json(const json& j) {
    const std::string sec = "lattice";
    check_keys(j, {"nx", "ny", "tau", "order", "boundary", "flow", "u_max", "force", "plate"}, sec);
    lbm::LatticeConfig c;
    read(j, "nx", c.nx, sec);
    read(j, "ny", c.ny, sec);
    read(j, "tau", c.tau, sec);
    read(j, "u_max", c.u_max, sec);
    if (j.contains("order")) c.order = parse_order(j.at("order").get<std::string>());
    if (j.contains("flow")) {
        c.flow = parse_flow(j.at("flow").get<std::string>());
        // Case defaults; explicit keys below override them.
        if (c.flow == lbm::FlowCase::Plate) c.boundary = lbm::Boundary::InletOutletWithMask;
        if (c.flow == lbm::FlowCase::Jets) c.force = lbm::GaussianJets{};
        if (c.flow == lbm::FlowCase::Kolmogorov) c.force = lbm::KolmogorovInit{};
    }
    if (j.contains("boundary")) {
        const auto b = j.at("boundary").get<std::string>();
        if (b == "periodic")
            c.boundary = lbm::Boundary::Periodic;
        else if (b == "inlet_outlet")
            c.boundary = lbm::Boundary::InletOutletWithMask;
        else
            throw ConfigError("lattice.boundary: expected periodic or inlet_outlet, got '" + b + "'");
    }
    if (j.contains("force")) c.force = force_from_json(j.at("force"));
    if (j.contains("plate")) {
        const auto& p = j.at("plate");
        check_keys(p, {"x_frac", "center_frac", "length_frac", "inlet_u"}, "lattice.plate");
        read(p, "x_frac", c.plate.x_frac, "lattice.plate");
        read(p, "center_frac", c.plate.center_frac, "lattice.plate");
        read(p, "length_frac", c.plate.length_frac, "lattice.plate");
        read(p, "inlet_u", c.plate.inlet_u, "lattice.plate");
    }
    return c;
}

void ExperimentConfig::validate() const {
    lattice.validate();
    if (dataset.source == data::Source::Artificial) {
        dataset.artificial.validate();
    } else {
        dataset.harvest.lattice.validate();
        if (dataset.harvest.steps < 1) throw ConfigError("dataset.harvest.steps must be >= 1");
    }
    train.validate();
    if (hybrid.steps < 0) throw ConfigError("hybrid.steps must be >= 0");
    if (!(hybrid.options.force_scale >= 0.0)) throw ConfigError("hybrid.force_scale must be >= 0");
    if (!(hybrid.options.leakage_limit > 0.0 && hybrid.options.leakage_limit <= 1.0))
        throw ConfigError("hybrid.leakage_limit must lie in (0, 1]");
    if (case_.steps < 0 || case_.handoff_steps < 0 || case_.handoff_steps > case_.steps)
        throw ConfigError("case: need 0 <= handoff_steps <= steps");
    if (!(case_.digits_u >= 1.0) || !(case_.digits_f >= 1.0)) throw ConfigError("case: digits must be >= 1");
    static const std::set<std::string> kinds{"kolmogorov", "plate", "jets", "precision"};
    if (!kinds.contains(case_.kind))
        throw ConfigError("case.kind: unknown case '" + case_.kind + "' (kolmogorov, plate, jets, precision)");
}

ExperimentConfig from_json(const json& j) {
    check_keys(j, {"seed", "output_dir", "lattice", "dataset", "train", "hybrid", "case", "analysis"}, "config");
    ExperimentConfig c;
    read(j, "seed", c.seed, "config");
    read(j, "output_dir", c.output_dir, "config");
    if (j.contains("lattice")) c.lattice = lattice_from_json(j.at("lattice"));

    // The seed propagates to every stage unless a stage sets its own.
    c.dataset.artificial.seed = c.seed;
    c.dataset.harvest.seed = c.seed;
    c.train.seed = c.seed;
    c.train.tau = c.lattice.tau;
    c.dataset.artificial.tau = c.lattice.tau;
    c.dataset.harvest.lattice = c.lattice;

    if (j.contains("dataset")) {
        const auto& d = j.at("dataset");
        check_keys(d, {"source", "artificial", "harvest"}, "dataset");
        if (d.contains("source")) {
            const auto s = d.at("source").get<std::string>();
            if (s == "artificial")
                c.dataset.source = data::Source::Artificial;
            else if (s == "harvest")
                c.dataset.source = data::Source::Harvested;
            else
                throw ConfigError("dataset.source: expected artificial or harvest, got '" + s + "'");
        }
        if (d.contains("artificial")) {
            const auto& a = d.at("artificial");
            const std::string sec = "dataset.artificial";
            check_keys(a, {"u0_max", "sigma_min", "sigma_max", "correlation", "n", "seed", "tau", "project_neq",
                           "max_retries"},
                       sec);
            auto& s = c.dataset.artificial;
            read(a, "u0_max", s.u0_max, sec);
            if (a.contains("sigma_min")) s.sigma_min = read_channels(a.at("sigma_min"), sec + ".sigma_min");
            if (a.contains("sigma_max")) s.sigma_max = read_channels(a.at("sigma_max"), sec + ".sigma_max");
            if (a.contains("correlation")) {
                const auto k = a.at("correlation").get<std::string>();
                if (k == "tgv_angle")
                    s.correlation = data::Correlation::TGVAngle;
                else if (k == "independent")
                    s.correlation = data::Correlation::Independent;
                else
                    throw ConfigError(sec + ".correlation: expected tgv_angle or independent");
            }
            read(a, "n", s.n, sec);
            read(a, "seed", s.seed, sec);
            read(a, "tau", s.tau, sec);
            read(a, "project_neq", s.project_neq, sec);
            read(a, "max_retries", s.max_retries, sec);
        }
        if (d.contains("harvest")) {
            const auto& h = d.at("harvest");
            const std::string sec = "dataset.harvest";
            check_keys(h, {"lattice", "steps", "n", "seed", "stratify_bins", "u_lo", "u_hi"}, sec);
            auto& s = c.dataset.harvest;
            if (h.contains("lattice")) s.lattice = lattice_from_json(h.at("lattice"));
            read(h, "steps", s.steps, sec);
            read(h, "n", s.n, sec);
            read(h, "seed", s.seed, sec);
            read(h, "stratify_bins", s.stratify_bins, sec);
            read(h, "u_lo", s.u_lo, sec);
            read(h, "u_hi", s.u_hi, sec);
        }
    }

    if (j.contains("train")) {
        const auto& t = j.at("train");
        const std::string sec = "train";
        check_keys(t, {"model", "layers", "batch_size", "learning_rate", "epochs", "seed", "loss", "target",
                       "init_scale", "validate_every", "tau"},
                   sec);
        auto& s = c.train;
        if (t.contains("model")) {
            const auto m = t.at("model").get<std::string>();
            if (m == "r1")
                s.model = train::ModelKind::R1;
            else if (m == "r2")
                s.model = train::ModelKind::R2;
            else
                throw ConfigError("train.model: expected r1 or r2, got '" + m + "'");
        }
        read(t, "layers", s.layers, sec);
        read(t, "batch_size", s.batch_size, sec);
        read(t, "learning_rate", s.learning_rate, sec);
        read(t, "epochs", s.epochs, sec);
        read(t, "seed", s.seed, sec);
        read(t, "init_scale", s.init_scale, sec);
        read(t, "validate_every", s.validate_every, sec);
        read(t, "tau", s.tau, sec);
        if (t.contains("target")) s.target = parse_target(t.at("target").get<std::string>());
        if (t.contains("loss")) {
            const auto& l = t.at("loss");
            check_keys(l, {"kind", "lambda", "lambda_u", "macro", "nonunitary", "phase_weight"}, "train.loss");
            if (l.contains("kind")) s.loss.kind = train::parse_loss_kind(l.at("kind").get<std::string>());
            read(l, "lambda", s.loss.lambda, "train.loss");
            read(l, "lambda_u", s.loss.lambda_u, "train.loss");
            if (l.contains("macro")) s.loss.macro = train::parse_macro_mode(l.at("macro").get<std::string>());
            read(l, "nonunitary", s.loss.nonunitary, "train.loss");
            if (l.contains("phase_weight")) {
                const auto w = l.at("phase_weight").get<std::string>();
                if (w == "predicted")
                    s.loss.phase_weight = train::PhaseWeight::Predicted;
                else if (w == "reference")
                    s.loss.phase_weight = train::PhaseWeight::Reference;
                else
                    throw ConfigError("train.loss.phase_weight: expected predicted or reference");
            }
        }
    }

    if (j.contains("hybrid")) {
        const auto& h = j.at("hybrid");
        const std::string sec = "hybrid";
        check_keys(h, {"mode", "steps", "force_scale", "carry_phases_postselect", "leakage_limit"}, sec);
        if (h.contains("mode")) c.hybrid.options.mode = hybrid::parse_mode(h.at("mode").get<std::string>());
        read(h, "steps", c.hybrid.steps, sec);
        read(h, "force_scale", c.hybrid.options.force_scale, sec);
        read(h, "carry_phases_postselect", c.hybrid.options.carry_phases_postselect, sec);
        read(h, "leakage_limit", c.hybrid.options.leakage_limit, sec);
    }

    if (j.contains("case")) {
        const auto& k = j.at("case");
        const std::string sec = "case";
        check_keys(k, {"kind", "steps", "handoff_steps", "digits_u", "digits_f"}, sec);
        read(k, "kind", c.case_.kind, sec);
        read(k, "steps", c.case_.steps, sec);
        read(k, "handoff_steps", c.case_.handoff_steps, sec);
        read(k, "digits_u", c.case_.digits_u, sec);
        read(k, "digits_f", c.case_.digits_f, sec);
    }

    if (j.contains("analysis")) {
        const auto& a = j.at("analysis");
        const std::string sec = "analysis";
        check_keys(a, {"u_list", "taus", "lambdas", "u", "map_kind"}, sec);
        read(a, "u_list", c.analysis.u_list, sec);
        read(a, "taus", c.analysis.taus, sec);
        read(a, "lambdas", c.analysis.lambdas, sec);
        read(a, "u", c.analysis.u, sec);
        read(a, "map_kind", c.analysis.map_kind, sec);
    }
    return c;
}

json to_json(const ExperimentConfig& c) {
    const auto& a = c.dataset.artificial;
    const auto& h = c.dataset.harvest;
    const auto& t = c.train;
    return {
        {"seed", c.seed},
        {"output_dir", c.output_dir},
        {"lattice", lattice_to_json(c.lattice)},
        {"dataset",
         {{"source", c.dataset.source == data::Source::Artificial ? "artificial" : "harvest"},
          {"artificial",
           {{"u0_max", a.u0_max},
            {"sigma_min", a.sigma_min},
            {"sigma_max", a.sigma_max},
            {"correlation", a.correlation == data::Correlation::TGVAngle ? "tgv_angle" : "independent"},
            {"n", a.n},
            {"seed", a.seed},
            {"tau", a.tau},
            {"project_neq", a.project_neq},
            {"max_retries", a.max_retries}}},
          {"harvest",
           {{"lattice", lattice_to_json(h.lattice)},
            {"steps", h.steps},
            {"n", h.n},
            {"seed", h.seed},
            {"stratify_bins", h.stratify_bins},
            {"u_lo", h.u_lo},
            {"u_hi", h.u_hi}}}}},
        {"train",
         {{"model", t.model == train::ModelKind::R1 ? "r1" : "r2"},
          {"layers", t.layers},
          {"batch_size", t.batch_size},
          {"learning_rate", t.learning_rate},
          {"epochs", t.epochs},
          {"seed", t.seed},
          {"init_scale", t.init_scale},
          {"validate_every", t.validate_every},
          {"tau", t.tau},
          {"target", target_name(t.target)},
          {"loss",
           {{"kind", loss_kind_name(t.loss.kind)},
            {"lambda", t.loss.lambda},
            {"lambda_u", t.loss.lambda_u},
            {"macro", macro_name(t.loss.macro)},
            {"nonunitary", t.loss.nonunitary},
            {"phase_weight", t.loss.phase_weight == train::PhaseWeight::Predicted ? "predicted" : "reference"}}}}},
        {"hybrid",
         {{"mode", hybrid::mode_name(c.hybrid.options.mode)},
          {"steps", c.hybrid.steps},
          {"force_scale", c.hybrid.options.force_scale},
          {"carry_phases_postselect", c.hybrid.options.carry_phases_postselect},
          {"leakage_limit", c.hybrid.options.leakage_limit}}},
        {"case",
         {{"kind", c.case_.kind},
          {"steps", c.case_.steps},
          {"handoff_steps", c.case_.handoff_steps},
          {"digits_u", c.case_.digits_u},
          {"digits_f", c.case_.digits_f}}},
        {"analysis",
         {{"u_list", c.analysis.u_list},
          {"taus", c.analysis.taus},
          {"lambdas", c.analysis.lambdas},
          {"u", c.analysis.u},
          {"map_kind", c.analysis.map_kind}}},
    };
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file " + path.string());
    json j;
    try {
        j = json::parse(is);
    } catch (const json::parse_error& e) {
        throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
    }
    return from_json(j);
}

std::string config_hash(const ExperimentConfig& c) {
    json j = to_json(c);
    j.erase("output_dir");
    return hex64(Fnv1a{}.str(j.dump()).digest());
}

std::filesystem::path output_root() {
    if (const char* env = std::getenv("QLBM_OUTPUT_ROOT"); env && *env) return env;
    return "runs";
}

std::filesystem::path prepare_output_dir(const std::filesystem::path& dir, bool force) {
    if (std::filesystem::exists(dir) && !std::filesystem::is_empty(dir) && !force)
        throw ConfigError("output directory " + dir.string() + " already has files; pass --force to overwrite");
    std::filesystem::create_directories(dir);
    return dir;
}

std::filesystem::path write_resolved_config(const std::filesystem::path& dir, const ExperimentConfig& c) {
    const auto path = dir / "config.resolved.json";
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    os << to_json(c).dump(2) << '\n';
    return path;
}

namespace {

std::uint64_t file_hash(const std::filesystem::path& p) {
    std::ifstream is(p, std::ios::binary);
    Fnv1a h;
    char buf[1 << 16];
    while (is) {
        is.read(buf, sizeof buf);
        h.bytes(buf, static_cast<std::size_t>(is.gcount()));
    }
    return h.digest();
}

} // namespace

void write_manifest(const std::filesystem::path& dir, const std::string& command, const ExperimentConfig& c,
                    const std::vector<std::filesystem::path>& files) {
    json list = json::array();
    for (const auto& f : files) {
        if (!std::filesystem::exists(f)) continue;
        list.push_back({{"path", std::filesystem::relative(f, dir).generic_string()},
                        {"bytes", std::filesystem::file_size(f)},
                        {"fnv1a", hex64(file_hash(f))}});
    }
    const json m{{"command", command},
                 {"config_hash", config_hash(c)},
                 {"seed", c.seed},
                 {"code_version", code_version()},
                 {"files", list}};
    std::ofstream os(dir / "manifest.json");
    if (!os) throw std::runtime_error("cannot write manifest in " + dir.string());
    os << m.dump(2) << '\n';
}

void write_sidecar(const std::filesystem::path& report, const ExperimentConfig& c, const json& extra) {
    json j{{"report", report.filename().string()},
           {"config_hash", config_hash(c)},
           {"seed", c.seed},
           {"code_version", code_version()},
           {"config", to_json(c)}};
    if (extra.is_object())
        for (const auto& [k, v] : extra.items()) j[k] = v;
    std::ofstream os(report.string() + ".json");
    if (!os) throw std::runtime_error("cannot write sidecar for " + report.string());
    os << j.dump(2) << '\n';
}

std::vector<data::CollisionSample> make_dataset(const DatasetConfig& d) {
    if (d.source == data::Source::Artificial) return data::generate_artificial(d.artificial);

    const auto& h = d.harvest;
    h.lattice.validate();
    const auto traj = lbm::run_reference(h.lattice, h.steps, lbm::SnapshotMode::FullFields);
    const lbm::Solver solver(h.lattice);
    auto samples = data::harvest(traj, h.lattice.tau, solver.mask().empty() ? nullptr : &solver.mask());
    if (h.stratify_bins > 0) samples = data::stratify_by_speed(samples, h.stratify_bins, h.u_lo, h.u_hi, h.seed);
    if (h.n > 0 && h.n < samples.size()) {
        std::mt19937_64 rng(h.seed);
        std::shuffle(samples.begin(), samples.end(), rng);
        samples.resize(h.n);
    }
    spdlog::info("harvested {} samples from {} steps of {}x{}", samples.size(), h.steps, h.lattice.nx, h.lattice.ny);
    return samples;
}

std::string code_version() { return "0.1.0"; }

} // namespace qlbm::config
