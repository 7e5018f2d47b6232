#include "lagfield/io.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "lagfield/errors.hpp"

namespace lagfield::io {

namespace fs = std::filesystem;

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace {

double parse_double(const std::string& s, const char* what) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        throw FormatError(std::string("bad number for ") + what + ": '" + s + "'");
    }
    if (used != s.size()) throw FormatError(std::string("bad number for ") + what + ": '" + s + "'");
    return v;
}

int parse_int(const std::string& s, const char* what) {
    std::size_t used = 0;
    long v = 0;
    try {
        v = std::stol(s, &used);
    } catch (const std::exception&) {
        throw FormatError(std::string("bad integer for ") + what + ": '" + s + "'");
    }
    if (used != s.size()) throw FormatError(std::string("bad integer for ") + what + ": '" + s + "'");
    return static_cast<int>(v);
}

std::map<std::string, std::string> parse_tokens(const std::string& line) {
    std::map<std::string, std::string> kv;
    std::istringstream ss(line);
    std::string tok;
    while (ss >> tok) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos) throw FormatError("expected key=value, got '" + tok + "'");
        kv[tok.substr(0, eq)] = tok.substr(eq + 1);
    }
    return kv;
}

const std::string& need(const std::map<std::string, std::string>& kv, const std::string& key) {
    const auto it = kv.find(key);
    if (it == kv.end()) throw FormatError("missing header key '" + key + "'");
    return it->second;
}

std::string next_line(std::istream& is, const char* what) {
    std::string line;
    if (!std::getline(is, line)) throw FormatError(std::string("unexpected end of file reading ") + what);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

void read_values(std::istream& is, std::span<double> out, int d) {
    for (std::size_t p = 0; p < out.size(); p += d) {
        const std::string line = next_line(is, "values");
        std::istringstream ss(line);
        std::string field;
        for (int k = 0; k < d; ++k) {
            if (!std::getline(ss, field, ',')) throw FormatError("too few components in line '" + line + "'");
            out[p + k] = parse_double(field, "value");
        }
        if (std::getline(ss, field, ',')) throw FormatError("too many components in line '" + line + "'");
    }
}

void write_values(std::ostream& os, std::span<const double> values, int d) {
    for (std::size_t p = 0; p < values.size(); p += d) {
        for (int k = 0; k < d; ++k) {
            if (k) os << ',';
            os << format_double(values[p + k]);
        }
        os << '\n';
    }
}

std::string mesh_header(const Mesh& m, int d) {
    return "T=" + format_double(m.T()) + " l=" + format_double(m.l()) + " N=" + std::to_string(m.N()) +
           " M=" + std::to_string(m.M()) + " d=" + std::to_string(d);
}

std::ofstream open_out(const fs::path& p) {
    std::ofstream os(p);
    if (!os) throw Error("cannot write " + p.string());
    return os;
}

std::ifstream open_in(const fs::path& p) {
    std::ifstream is(p);
    if (!is) throw Error("cannot read " + p.string());
    return is;
}

struct GridHeader {
    Mesh mesh;
    int d = 1;
    bool residual = false;
};

GridHeader read_grid_header(std::istream& is) {
    if (next_line(is, "grid magic") != "lagfield-grid") throw FormatError("not a lagfield grid file");
    const auto kv = parse_tokens(next_line(is, "grid header"));
    GridHeader h;
    try {
        h.mesh = Mesh(parse_double(need(kv, "T"), "T"), parse_double(need(kv, "l"), "l"), parse_int(need(kv, "N"), "N"),
                      parse_int(need(kv, "M"), "M"));
    } catch (const InvalidArgument& e) {
        throw FormatError(std::string("invalid mesh in grid header: ") + e.what());
    }
    h.d = parse_int(need(kv, "d"), "d");
    if (h.d < 1) throw FormatError("grid dimension must be >= 1");
    const auto it = kv.find("RESIDUAL");
    h.residual = it != kv.end() && it->second == "1";
    return h;
}

}  // namespace

void write_grid(std::ostream& os, const FieldGrid& U) {
    os << "lagfield-grid\n" << mesh_header(U.mesh(), U.dim()) << '\n';
    write_values(os, U.values(), U.dim());
}

FieldGrid read_grid(std::istream& is) {
    const GridHeader h = read_grid_header(is);
    if (h.residual) throw FormatError("file holds a residual field, not a grid");
    FieldGrid U(h.mesh, h.d);
    read_values(is, U.values(), h.d);
    return U;
}

void write_grid(const fs::path& p, const FieldGrid& U) {
    auto os = open_out(p);
    write_grid(os, U);
}

FieldGrid read_grid(const fs::path& p) {
    auto is = open_in(p);
    return read_grid(is);
}

void write_residual(std::ostream& os, const ResidualField& R) {
    os << "lagfield-grid\n" << mesh_header(R.mesh(), R.dim()) << " RESIDUAL=1\n";
    write_values(os, R.values(), R.dim());
}

ResidualField read_residual(std::istream& is) {
    const GridHeader h = read_grid_header(is);
    if (!h.residual) throw FormatError("file holds a grid, not a residual field");
    ResidualField R(h.mesh, h.d);
    std::vector<double> v(R.values().size());
    read_values(is, v, h.d);
    for (int i = 1; i < h.mesh.N(); ++i) {
        for (int j = 0; j < h.mesh.M(); ++j) {
            for (int k = 0; k < h.d; ++k) R.at(i, j)[k] = v[(static_cast<std::size_t>(i - 1) * h.mesh.M() + j) * h.d + k];
        }
    }
    return R;
}

// ---------------------------------------------------------------------------
// Checkpoints

void write_checkpoint(const fs::path& p, const DensityModel& Ld) {
    auto os = open_out(p);
    os << "lagfield-checkpoint\n";
    if (const auto* nd = dynamic_cast<const NeuralDensity*>(&Ld)) {
        os << "kind=neural\narchitecture=" << NeuralDensity::kArchitecture << "\nparams=" << nd->params().size() << '\n';
        for (double v : nd->params()) os << format_double(v) << '\n';
    } else if (const auto* wd = dynamic_cast<const WaveDensity*>(&Ld)) {
        if (wd->potential().name.empty()) throw InvalidArgument("cannot checkpoint a wave density with a custom potential");
        os << "kind=wave\ndt=" << format_double(wd->dt()) << "\ndx=" << format_double(wd->dx()) << "\nd=" << wd->dim()
           << "\npotential=" << wd->potential().name << '\n';
    } else if (const auto* cd = dynamic_cast<const ConstantDensity*>(&Ld)) {
        os << "kind=constant\nd=" << cd->dim() << "\nvalue=" << format_double(cd->value()) << '\n';
    } else {
        throw InvalidArgument("density '" + Ld.name() + "' has no checkpoint format");
    }
}

namespace {

std::map<std::string, std::string> read_checkpoint_header(std::istream& is, std::vector<double>* params) {
    if (next_line(is, "checkpoint magic") != "lagfield-checkpoint") throw FormatError("not a lagfield checkpoint");
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw FormatError("expected key=value in checkpoint, got '" + line + "'");
        kv[line.substr(0, eq)] = line.substr(eq + 1);
        if (line.substr(0, eq) == "params") break;
    }
    if (kv.count("params") && params) {
        const int P = parse_int(kv["params"], "params");
        if (P < 0) throw FormatError("negative parameter count");
        params->resize(P);
        for (int k = 0; k < P; ++k) (*params)[k] = parse_double(next_line(is, "parameters"), "parameter");
        while (std::getline(is, line)) {
            if (line.find_first_not_of(" \t\r") != std::string::npos) throw FormatError("trailing data in checkpoint");
        }
    }
    return kv;
}

}  // namespace

std::shared_ptr<DensityModel> read_checkpoint(const fs::path& p) {
    auto is = open_in(p);
    std::vector<double> params;
    auto kv = read_checkpoint_header(is, &params);
    const std::string kind = need(kv, "kind");
    if (kind == "neural") {
        if (need(kv, "architecture") != NeuralDensity::kArchitecture) {
            throw FormatError("checkpoint architecture '" + kv["architecture"] + "' differs from '" +
                              NeuralDensity::kArchitecture + "'");
        }
        if (params.size() != static_cast<std::size_t>(NeuralDensity::kParams)) {
            throw FormatError("checkpoint holds " + std::to_string(params.size()) + " parameters, expected " +
                              std::to_string(NeuralDensity::kParams));
        }
        return std::make_shared<NeuralDensity>(std::move(params));
    }
    if (kind == "wave") {
        return std::make_shared<WaveDensity>(parse_double(need(kv, "dt"), "dt"), parse_double(need(kv, "dx"), "dx"),
                                             parse_int(need(kv, "d"), "d"), Potential::by_name(need(kv, "potential")));
    }
    if (kind == "constant") {
        return make_constant_density(parse_int(need(kv, "d"), "d"), parse_double(need(kv, "value"), "value"));
    }
    throw FormatError("unknown checkpoint kind '" + kind + "'");
}

NeuralDensity read_neural_checkpoint(const fs::path& p) {
    const auto model = read_checkpoint(p);
    const auto* nd = dynamic_cast<const NeuralDensity*>(model.get());
    if (!nd) throw FormatError("checkpoint " + p.string() + " does not hold a neural density");
    return *nd;
}

void write_train_log(const fs::path& p, const TrainRecord& rec) {
    auto os = open_out(p);
    os << "epoch,l_del,l_reg,seconds,floored\n";
    for (const EpochRecord& e : rec.epochs) {
        os << e.epoch << ',' << format_double(e.l_del) << ',' << format_double(e.l_reg) << ','
           << format_double(e.seconds) << ',' << e.floored << '\n';
    }
}

// ---------------------------------------------------------------------------
// Travelling waves

void write_tw(const fs::path& p, const TravellingWaveState& s, const Mesh& mesh, double loss) {
    auto os = open_out(p);
    os << "lagfield-tw\n" << mesh_header(mesh, 1) << '\n';
    os << "c=" << format_double(s.c()) << " period=" << format_double(s.period()) << " loss=" << format_double(loss)
       << '\n';
    os << "m,re,im\n";
    for (int m = TravellingWaveState::m_min(s.M()); m <= TravellingWaveState::m_max(s.M()); ++m) {
        const auto z = s.coeff(m);
        os << m << ',' << format_double(z.real()) << ',' << format_double(z.imag()) << '\n';
    }
}

TravellingWaveState read_tw(const fs::path& p, Mesh* mesh) {
    auto is = open_in(p);
    if (next_line(is, "tw magic") != "lagfield-tw") throw FormatError("not a lagfield travelling-wave file");
    const auto mk = parse_tokens(next_line(is, "tw mesh"));
    const Mesh m(parse_double(need(mk, "T"), "T"), parse_double(need(mk, "l"), "l"), parse_int(need(mk, "N"), "N"),
                 parse_int(need(mk, "M"), "M"));
    if (mesh) *mesh = m;
    const auto kv = parse_tokens(next_line(is, "tw speed"));
    TravellingWaveState s(m.M(), parse_double(need(kv, "period"), "period"), parse_double(need(kv, "c"), "c"));
    if (next_line(is, "tw table header") != "m,re,im") throw FormatError("missing coefficient table");
    for (int m = TravellingWaveState::m_min(s.M()); m <= TravellingWaveState::m_max(s.M()); ++m) {
        const std::string line = next_line(is, "coefficients");
        std::istringstream ss(line);
        std::string a, b, c;
        if (!std::getline(ss, a, ',') || !std::getline(ss, b, ',') || !std::getline(ss, c, ',')) {
            throw FormatError("bad coefficient line '" + line + "'");
        }
        if (parse_int(a, "mode") != m) throw FormatError("coefficient table out of order");
        if (m >= 0) s.set_coeff(m, {parse_double(b, "re"), parse_double(c, "im")});
    }
    return s;
}

// ---------------------------------------------------------------------------
// Datasets

void write_dataset(const fs::path& dir, const std::vector<FieldGrid>& data, const json& manifest) {
    fs::create_directories(dir);
    for (std::size_t k = 0; k < data.size(); ++k) write_grid(dir / ("traj_" + std::to_string(k) + ".grid"), data[k]);
    json m = manifest;
    m["K"] = data.size();
    write_json(dir / "manifest.json", m);
}

std::vector<FieldGrid> read_dataset(const fs::path& dir, json* manifest) {
    const json m = read_json(dir / "manifest.json");
    if (!m.contains("K") || !m["K"].is_number_integer()) throw FormatError("dataset manifest lacks an integer K");
    const int K = m["K"].get<int>();
    std::vector<FieldGrid> out;
    out.reserve(K);
    for (int k = 0; k < K; ++k) {
        const fs::path p = dir / ("traj_" + std::to_string(k) + ".grid");
        if (!fs::exists(p)) throw FormatError("dataset file missing: " + p.string());
        out.push_back(read_grid(p));
        if (!(out.back().mesh() == out.front().mesh()) || out.back().dim() != out.front().dim()) {
            throw FormatError("dataset grids disagree in mesh: " + p.string());
        }
    }
    if (m.contains("mesh") && !(mesh_from_json(m["mesh"]) == out.front().mesh())) {
        throw FormatError("dataset manifest mesh differs from the grid files");
    }
    if (manifest) *manifest = m;
    return out;
}

// ---------------------------------------------------------------------------
// JSON configs

void require_keys(const json& j, std::initializer_list<const char*> allowed, const char* what) {
    if (!j.is_object()) throw FormatError(std::string(what) + " config must be a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || it.key() == a;
        if (!ok) throw FormatError(std::string("unknown key '") + it.key() + "' in " + what + " config");
    }
}

namespace {

template <class T>
void get_if(const json& j, const char* key, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw FormatError(std::string("bad value for '") + key + "': " + e.what());
    }
}

}  // namespace

Mesh mesh_from_json(const json& j) {
    require_keys(j, {"T", "l", "N", "M", "dt", "dx"}, "mesh");
    double T = 0.5, l = 1.0;
    get_if(j, "T", T);
    get_if(j, "l", l);
    try {
        if (j.contains("dt") || j.contains("dx")) {
            if (j.contains("N") || j.contains("M")) throw FormatError("mesh: give either N, M or dt, dx");
            double dt = 0.025, dx = 0.05;
            get_if(j, "dt", dt);
            get_if(j, "dx", dx);
            return Mesh::from_widths(T, l, dt, dx);
        }
        int N = 20, M = 20;
        get_if(j, "N", N);
        get_if(j, "M", M);
        return Mesh(T, l, N, M);
    } catch (const InvalidArgument& e) {
        throw FormatError(std::string("invalid mesh: ") + e.what());
    }
}

json to_json(const Mesh& m) { return {{"T", m.T()}, {"l", m.l()}, {"N", m.N()}, {"M", m.M()}}; }

GenConfig gen_config_from_json(const json& j) {
    require_keys(j, {"K", "mesh", "seed", "weight_rate", "weight_power", "potential"}, "generate");
    GenConfig c;
    get_if(j, "K", c.K);
    if (j.contains("mesh")) c.mesh = mesh_from_json(j["mesh"]);
    get_if(j, "seed", c.seed);
    get_if(j, "weight_rate", c.weight_rate);
    get_if(j, "weight_power", c.weight_power);
    get_if(j, "potential", c.potential_name);
    try {
        c.V = Potential::by_name(c.potential_name);
        c.validate();
    } catch (const InvalidArgument& e) {
        throw FormatError(e.what());
    }
    return c;
}

json to_json(const GenConfig& c) {
    return {{"K", c.K},
            {"mesh", to_json(c.mesh)},
            {"seed", c.seed},
            {"weight_rate", c.weight_rate},
            {"weight_power", c.weight_power},
            {"potential", c.potential_name}};
}

TrainConfig train_config_from_json(const json& j) {
    require_keys(j, {"epochs", "batch_size", "learning_rate", "beta1", "beta2", "eps", "reg_weight", "lambda_floor",
                     "seed", "grad_clip", "reduction", "threads"},
                 "train");
    TrainConfig c;
    get_if(j, "epochs", c.epochs);
    get_if(j, "batch_size", c.batch_size);
    get_if(j, "learning_rate", c.learning_rate);
    get_if(j, "beta1", c.beta1);
    get_if(j, "beta2", c.beta2);
    get_if(j, "eps", c.eps);
    get_if(j, "reg_weight", c.reg_weight);
    get_if(j, "lambda_floor", c.lambda_floor);
    get_if(j, "seed", c.seed);
    get_if(j, "grad_clip", c.grad_clip);
    get_if(j, "threads", c.threads);
    if (j.contains("reduction")) {
        const std::string r = j["reduction"].get<std::string>();
        if (r == "mean") c.reduction = Reduction::mean;
        else if (r == "sum") c.reduction = Reduction::sum;
        else throw FormatError("reduction must be 'mean' or 'sum'");
    }
    try {
        c.validate();
    } catch (const InvalidArgument& e) {
        throw FormatError(e.what());
    }
    return c;
}

json to_json(const TrainConfig& c) {
    return {{"epochs", c.epochs},
            {"batch_size", c.batch_size},
            {"learning_rate", c.learning_rate},
            {"beta1", c.beta1},
            {"beta2", c.beta2},
            {"eps", c.eps},
            {"reg_weight", c.reg_weight},
            {"lambda_floor", c.lambda_floor},
            {"seed", c.seed},
            {"grad_clip", c.grad_clip},
            {"reduction", c.reduction == Reduction::mean ? "mean" : "sum"},
            {"threads", c.threads}};
}

SolverConfig solver_config_from_json(const json& j) {
    require_keys(j, {"residual_tolerance", "max_iterations", "initial_guess", "max_row_sweeps"}, "solver");
    SolverConfig c;
    get_if(j, "residual_tolerance", c.residual_tolerance);
    get_if(j, "max_iterations", c.max_iterations);
    get_if(j, "max_row_sweeps", c.max_row_sweeps);
    if (j.contains("initial_guess")) {
        const std::string g = j["initial_guess"].get<std::string>();
        if (g == "previous_value") c.initial_guess = GuessStrategy::previous_value;
        else if (g == "linear_extrapolation") c.initial_guess = GuessStrategy::linear_extrapolation;
        else throw FormatError("initial_guess must be 'previous_value' or 'linear_extrapolation'");
    }
    try {
        c.validate();
    } catch (const InvalidArgument& e) {
        throw FormatError(e.what());
    }
    return c;
}

json to_json(const SolverConfig& c) {
    return {{"residual_tolerance", c.residual_tolerance},
            {"max_iterations", c.max_iterations},
            {"initial_guess",
             c.initial_guess == GuessStrategy::previous_value ? "previous_value" : "linear_extrapolation"},
            {"max_row_sweeps", c.max_row_sweeps}};
}

FindTwConfig find_tw_config_from_json(const json& j) {
    require_keys(j, {"steps", "learning_rate", "beta1", "beta2", "eps", "loss_tolerance", "reg_strength", "reg_weight"},
                 "find-tw");
    FindTwConfig c;
    get_if(j, "steps", c.steps);
    get_if(j, "learning_rate", c.learning_rate);
    get_if(j, "beta1", c.beta1);
    get_if(j, "beta2", c.beta2);
    get_if(j, "eps", c.eps);
    get_if(j, "loss_tolerance", c.loss_tolerance);
    get_if(j, "reg_strength", c.loss.reg_strength);
    get_if(j, "reg_weight", c.loss.reg_weight);
    if (c.steps < 0 || !(c.learning_rate > 0.0)) throw FormatError("find-tw: steps >= 0 and learning_rate > 0 required");
    return c;
}

json to_json(const FindTwConfig& c) {
    return {{"steps", c.steps},         {"learning_rate", c.learning_rate},
            {"beta1", c.beta1},         {"beta2", c.beta2},
            {"eps", c.eps},             {"loss_tolerance", c.loss_tolerance},
            {"reg_strength", c.loss.reg_strength},
            {"reg_weight", c.loss.reg_weight}};
}

json read_json(const fs::path& p) {
    auto is = open_in(p);
    try {
        return json::parse(is);
    } catch (const json::parse_error& e) {
        throw FormatError(p.string() + ": " + e.what());
    }
}

void write_json(const fs::path& p, const json& j) {
    auto os = open_out(p);
    os << j.dump(2) << '\n';
}

}  // namespace lagfield::io
