#include "qlbm/ansatz.hpp"

#include "qlbm/errors.hpp"

#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace qlbm::ansatz {

std::vector<LayerOp> default_layer() {
    return {
        {GateKind::Rot, Axis::X, EdgeSet::AllQubits},  {GateKind::Rot, Axis::Z, EdgeSet::AllQubits},
        {GateKind::Rot, Axis::X, EdgeSet::AllQubits},  {GateKind::Ising, Axis::X, EdgeSet::Axial},
        {GateKind::Ising, Axis::X, EdgeSet::Diag},     {GateKind::Ising, Axis::Z, EdgeSet::Axial},
        {GateKind::Ising, Axis::Z, EdgeSet::Diag},
    };
}

std::size_t CircuitSpec::count(GateKind k) const {
    std::size_t n = 0;
    for (const auto& g : gates) n += g.kind == k ? 1 : 0;
    return n;
}

namespace {

void append_layer(CircuitSpec& c, const std::vector<LayerOp>& layer) {
    for (const auto& op : layer) {
        const int p = c.n_params++;
        if (op.kind == GateKind::Rot) {
            if (op.targets != EdgeSet::AllQubits)
                throw ConfigError("rotation layers must address all register qubits");
            for (int q = 0; q < qs::kRegisterQubits; ++q) c.gates.push_back({GateKind::Rot, op.axis, q, -1, p});
        } else if (op.kind == GateKind::Ising) {
            if (op.targets == EdgeSet::Axial) {
                for (auto [a, b] : kAxialEdges) c.gates.push_back({GateKind::Ising, op.axis, a, b, p});
            } else if (op.targets == EdgeSet::Diag) {
                for (auto [a, b] : kDiagEdges) c.gates.push_back({GateKind::Ising, op.axis, a, b, p});
            } else {
                throw ConfigError("Ising layers must address the axial or diagonal edge set");
            }
        } else {
            throw ConfigError("CNOT cannot appear in the parameterized layer template");
        }
    }
}

} // namespace

CircuitSpec build_r1(int layers, const std::vector<LayerOp>& layer) {
    if (layers < 1) throw ConfigError("circuit needs at least one layer");
    CircuitSpec c;
    c.kind = ModelKind::R1;
    c.n_qubits = qs::kRegisterQubits;
    c.layers = layers;
    for (int b = 0; b < layers; ++b) append_layer(c, layer);
    return c;
}

CircuitSpec build_r2(int layers, const std::vector<LayerOp>& layer) {
    if (layers < 1) throw ConfigError("circuit needs at least one layer");
    CircuitSpec c;
    c.kind = ModelKind::R2;
    c.n_qubits = 2 * qs::kRegisterQubits;
    c.layers = layers;
    for (int b = 0; b < layers; ++b) {
        append_layer(c, layer);
        for (int k = 0; k < qs::kRegisterQubits; ++k)
            c.gates.push_back({GateKind::CNOT, Axis::X, qs::kRegisterQubits + k, k, -1});
    }
    return c;
}

CircuitSpec unshare_rotations(const CircuitSpec& circuit) {
    CircuitSpec c = circuit;
    for (auto& g : c.gates)
        if (g.kind == GateKind::Rot) g.param = c.n_params++;
    return c;
}

ParamVector init_params(const CircuitSpec& circuit, std::uint64_t seed, double scale) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-scale, scale);
    ParamVector p(static_cast<std::size_t>(circuit.n_params));
    for (auto& v : p) v = dist(rng);
    return p;
}

void apply_gate(std::span<qs::cplx> amp, const Gate& g, double theta) {
    switch (g.kind) {
    case GateKind::Rot:
        qs::apply_pauli_rotation(amp, {g.axis, g.q1, -1}, theta);
        break;
    case GateKind::Ising:
        qs::apply_pauli_rotation(amp, {g.axis, g.q1, g.q2}, theta);
        break;
    case GateKind::CNOT:
        qs::apply_cnot(amp, g.q1, g.q2);
        break;
    }
}

void apply(const CircuitSpec& circuit, std::span<const double> params, qs::PureState& state) {
    if (params.size() != static_cast<std::size_t>(circuit.n_params))
        throw InvalidInput("apply: expected " + std::to_string(circuit.n_params) + " parameters, got " +
                           std::to_string(params.size()));
    if (state.qubits() != circuit.n_qubits) throw InvalidInput("apply: state/circuit qubit mismatch");
    for (const auto& g : circuit.gates)
        apply_gate(state.amp(), g, g.param >= 0 ? params[static_cast<std::size_t>(g.param)] : 0.0);
}

qs::PureState applied(const CircuitSpec& circuit, std::span<const double> params, qs::PureState state) {
    apply(circuit, params, state);
    return state;
}

double check_d8_equivariance(const CircuitSpec& circuit, std::span<const double> params) {
    const int dim = 1 << circuit.n_qubits;
    const int registers = circuit.n_qubits / qs::kRegisterQubits;
    double worst = 0.0;
    for (const auto& g : qs::d8_elements()) {
        const auto perm = qs::qubit_permutation(g);
        const auto act = [&](qs::PureState& s) {
            for (int r = 0; r < registers; ++r) qs::permute_qubits(s.amp(), perm, r * qs::kRegisterQubits);
        };
        for (int b = 0; b < dim; ++b) {
            std::vector<qs::cplx> basis(static_cast<std::size_t>(dim));
            basis[static_cast<std::size_t>(b)] = 1.0;
            qs::PureState lhs(circuit.n_qubits, basis);
            apply(circuit, params, lhs);
            act(lhs);
            qs::PureState rhs(circuit.n_qubits, std::move(basis));
            act(rhs);
            apply(circuit, params, rhs);
            for (int k = 0; k < dim; ++k) worst = std::max(worst, std::abs(lhs[k] - rhs[k]));
        }
    }
    return worst;
}

namespace {

const char* kind_name(GateKind k) {
    switch (k) {
    case GateKind::Rot: return "rot";
    case GateKind::Ising: return "ising";
    case GateKind::CNOT: return "cnot";
    }
    return "?";
}

const char* axis_name(Axis a) { return a == Axis::X ? "x" : a == Axis::Y ? "y" : "z"; }

Axis parse_axis(const std::string& s) {
    if (s == "x") return Axis::X;
    if (s == "y") return Axis::Y;
    if (s == "z") return Axis::Z;
    throw ConfigError("unknown gate axis '" + s + "'");
}

GateKind parse_kind(const std::string& s) {
    if (s == "rot") return GateKind::Rot;
    if (s == "ising") return GateKind::Ising;
    if (s == "cnot") return GateKind::CNOT;
    throw ConfigError("unknown gate kind '" + s + "'");
}

} // namespace

nlohmann::json to_json(const CircuitSpec& circuit) {
    nlohmann::json gates = nlohmann::json::array();
    for (const auto& g : circuit.gates) {
        nlohmann::json e{{"kind", kind_name(g.kind)}};
        if (g.kind != GateKind::CNOT) e["axis"] = axis_name(g.axis);
        e["targets"] = g.q2 >= 0 ? nlohmann::json::array({g.q1, g.q2}) : nlohmann::json::array({g.q1});
        if (g.param >= 0) e["param_index"] = g.param;
        gates.push_back(std::move(e));
    }
    return {{"model", circuit.kind == ModelKind::R1 ? "R1" : "R2"},
            {"n_qubits", circuit.n_qubits},
            {"n_params", circuit.n_params},
            {"layers", circuit.layers},
            {"gates", std::move(gates)}};
}

CircuitSpec circuit_from_json(const nlohmann::json& j) {
    CircuitSpec c;
    c.kind = j.at("model").get<std::string>() == "R2" ? ModelKind::R2 : ModelKind::R1;
    c.n_qubits = j.at("n_qubits").get<int>();
    c.n_params = j.at("n_params").get<int>();
    c.layers = j.value("layers", 0);
    for (const auto& e : j.at("gates")) {
        Gate g;
        g.kind = parse_kind(e.at("kind").get<std::string>());
        if (e.contains("axis")) g.axis = parse_axis(e.at("axis").get<std::string>());
        const auto& t = e.at("targets");
        g.q1 = t.at(0).get<int>();
        g.q2 = t.size() > 1 ? t.at(1).get<int>() : -1;
        g.param = e.value("param_index", -1);
        if (g.param >= c.n_params) throw ConfigError("gate parameter index out of range");
        if (g.q1 >= c.n_qubits || g.q2 >= c.n_qubits) throw ConfigError("gate target out of range");
        c.gates.push_back(g);
    }
    return c;
}

Model identity_model(ModelKind kind, int layers, double tau) {
    Model m;
    m.circuit = kind == ModelKind::R1 ? build_r1(layers) : build_r2(layers);
    m.params.assign(static_cast<std::size_t>(m.circuit.n_params), 0.0);
    m.tau = tau;
    m.loss = "identity";
    m.phase_aware = true;
    return m;
}

void save_model(const Model& model, const std::filesystem::path& stem) {
    if (stem.has_parent_path()) std::filesystem::create_directories(stem.parent_path());
    const std::filesystem::path params_path = stem.string() + "_params.csv";
    nlohmann::json j{{"circuit", to_json(model.circuit)},
                     {"tau", model.tau},
                     {"loss", model.loss},
                     {"nonunitary", model.nonunitary},
                     {"phase_aware", model.phase_aware},
                     {"seed", model.seed},
                     {"config_hash", model.config_hash},
                     {"params_file", params_path.filename().string()}};
    std::ofstream js(stem.string() + ".json");
    if (!js) throw std::runtime_error("cannot write model " + stem.string() + ".json");
    js << j.dump(2) << '\n';

    std::ofstream ps(params_path);
    ps.precision(17);
    ps << "index,value\n";
    for (std::size_t k = 0; k < model.params.size(); ++k) ps << k << ',' << model.params[k] << '\n';
}

Model load_model(const std::filesystem::path& path) {
    std::filesystem::path json_path = path;
    if (json_path.extension() != ".json") json_path = path.string() + ".json";
    std::ifstream js(json_path);
    if (!js) throw ConfigError("cannot open model " + json_path.string());
    const auto j = nlohmann::json::parse(js);
    Model m;
    m.circuit = circuit_from_json(j.at("circuit"));
    m.tau = j.value("tau", 1.0);
    m.loss = j.value("loss", std::string{});
    m.nonunitary = j.value("nonunitary", false);
    m.phase_aware = j.value("phase_aware", false);
    m.seed = j.value("seed", std::uint64_t{0});
    m.config_hash = j.value("config_hash", std::string{});

    const auto params_path = json_path.parent_path() / j.at("params_file").get<std::string>();
    std::ifstream ps(params_path);
    if (!ps) throw ConfigError("cannot open parameter file " + params_path.string());
    std::string line;
    std::getline(ps, line);
    m.params.assign(static_cast<std::size_t>(m.circuit.n_params), 0.0);
    std::size_t seen = 0;
    while (std::getline(ps, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::size_t k;
        char comma;
        double v;
        if (!(row >> k >> comma >> v) || k >= m.params.size())
            throw ConfigError("malformed parameter row in " + params_path.string());
        m.params[k] = v;
        ++seen;
    }
    if (seen != m.params.size()) throw ConfigError("parameter file does not match the circuit");
    return m;
}

} // namespace qlbm::ansatz
