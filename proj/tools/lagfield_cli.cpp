// lagfield: generate data, train a discrete Lagrangian, propagate, search for
// travelling waves and verify checkpoints. Every command writes run.json next
// to its outputs.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>

#include <CLI11.hpp>

#include "lagfield/datagen.hpp"
#include "lagfield/del.hpp"
#include "lagfield/errors.hpp"
#include "lagfield/io.hpp"
#include "lagfield/solver.hpp"
#include "lagfield/train.hpp"
#include "lagfield/twave.hpp"

using namespace lagfield;
namespace fs = std::filesystem;
using io::json;

namespace {

struct Globals {
    std::string config;
    std::optional<unsigned long long> seed;
    std::string out = "out";
    bool verbose = false;
    int threads = 1;
};

Globals G;
std::vector<std::string> g_argv;

void log(const std::string& msg) {
    if (G.verbose) std::cerr << msg << '\n';
}

json config_or_empty() { return G.config.empty() ? json::object() : io::read_json(G.config); }

// Sub-object `key` of a sectioned config file; a file without any section
// keys is taken to be the section itself.
json config_section(const json& all, const char* key) {
    if (all.contains(key)) return all.at(key);
    for (const char* s : {"generate", "train", "solver", "find_tw"})
        if (all.contains(s)) return json::object();
    return all;
}

struct Run {
    std::string command;
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    json manifest;

    explicit Run(std::string cmd) : command(std::move(cmd)) {
        fs::create_directories(G.out);
        manifest["command"] = command;
        manifest["argv"] = g_argv;
        manifest["version"] = io::kVersion;
        manifest["threads"] = G.threads;
        manifest["inputs"] = json::object();
        manifest["outputs"] = json::object();
    }

    fs::path out(const std::string& name) {
        const fs::path p = fs::path(G.out) / name;
        manifest["outputs"][name] = p.string();
        return p;
    }

    void finish() {
        manifest["wall_seconds"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        io::write_json(fs::path(G.out) / "run.json", manifest);
    }
};

Mesh default_mesh() { return GenConfig{}.mesh; }

// ---------------------------------------------------------------- generate

int cmd_generate(std::optional<int> K) {
    Run run("generate");
    const json all = config_or_empty();
    GenConfig cfg = io::gen_config_from_json(config_section(all, "generate"));
    if (G.seed) cfg.seed = *G.seed;
    if (K) cfg.K = *K;
    cfg.validate();
    if (!G.config.empty()) run.manifest["inputs"]["config"] = G.config;
    run.manifest["seed"] = cfg.seed;
    run.manifest["config"] = io::to_json(cfg);

    log("generating " + std::to_string(cfg.K) + " trajectories");
    const std::vector<FieldGrid> data = generate_dataset(cfg, G.threads);
    io::write_dataset(G.out, data, io::to_json(cfg));
    run.manifest["outputs"]["dataset"] = G.out;

    const WaveDensity L(cfg.mesh.dt(), cfg.mesh.dx(), 1, cfg.V);
    double worst = 0.0;
    for (const FieldGrid& U : data) worst = std::max(worst, del_field(L, U, G.threads).max_abs());
    const json report = {{"K", cfg.K}, {"max_del_residual", worst}, {"tolerance", 1e-10}, {"pass", worst <= 1e-10}};
    io::write_json(run.out("report.json"), report);
    std::cout << "generated " << cfg.K << " trajectories in " << G.out << "; max DEL residual "
              << io::format_double(worst) << '\n';
    run.finish();
    return worst <= 1e-10 ? 0 : 1;
}

// ---------------------------------------------------------------- train

int cmd_train(const std::string& data_dir, std::optional<int> epochs, std::optional<double> reg_weight,
              const std::string& init) {
    Run run("train");
    const json all = config_or_empty();
    TrainConfig cfg = io::train_config_from_json(config_section(all, "train"));
    if (G.seed) cfg.seed = *G.seed;
    if (epochs) cfg.epochs = *epochs;
    if (reg_weight) cfg.reg_weight = *reg_weight;
    cfg.threads = G.threads;
    cfg.validate();

    json data_manifest;
    const std::vector<FieldGrid> data = io::read_dataset(data_dir, &data_manifest);
    run.manifest["inputs"]["dataset"] = data_dir;
    if (!G.config.empty()) run.manifest["inputs"]["config"] = G.config;
    run.manifest["seed"] = cfg.seed;
    run.manifest["config"] = io::to_json(cfg);
    run.manifest["dataset_manifest"] = data_manifest;

    log("training on " + std::to_string(data.size()) + " grids for " + std::to_string(cfg.epochs) + " epochs");
    TrainResult r = init.empty() ? train(data, cfg) : train(data, cfg, io::read_neural_checkpoint(init));
    if (!init.empty()) run.manifest["inputs"]["init"] = init;

    io::write_checkpoint(run.out("model.ckpt"), r.density);
    io::write_train_log(run.out("train_log.csv"), r.record);
    const EpochRecord& best = r.record.epochs[r.record.best_epoch];
    const EpochRecord& last = r.record.epochs.back();
    run.manifest["result"] = {{"best_epoch", r.record.best_epoch},
                              {"l_del", best.l_del},
                              {"l_reg", best.l_reg},
                              {"last_l_del", last.l_del},
                              {"last_l_reg", last.l_reg},
                              {"adam_steps", r.record.adam_steps},
                              {"aborted", r.record.aborted},
                              {"abort_reason", r.record.abort_reason}};
    std::cout << "best epoch " << r.record.best_epoch << ": l_del " << io::format_double(best.l_del) << " l_reg "
              << io::format_double(best.l_reg) << '\n';
    if (r.record.aborted) std::cerr << "training aborted: " << r.record.abort_reason << '\n';
    run.finish();
    return r.record.aborted ? 1 : 0;
}

// ---------------------------------------------------------------- propagate

std::shared_ptr<DensityModel> load_model(const std::string& model, const Mesh& mesh, json& manifest) {
    if (model == "wave") {
        manifest["inputs"]["model"] = "wave (analytic, quadratic potential)";
        return std::make_shared<WaveDensity>(mesh.dt(), mesh.dx());
    }
    manifest["inputs"]["model"] = model;
    return io::read_checkpoint(model);
}

int cmd_propagate(const std::string& model, const std::string& rows, std::optional<int> steps,
                  const std::string& potential) {
    Run run("propagate");
    const json all = config_or_empty();
    const SolverConfig cfg = io::solver_config_from_json(config_section(all, "solver"));
    cfg.validate();
    const FieldGrid init = io::read_grid(rows);
    run.manifest["inputs"]["rows"] = rows;
    const Mesh mesh = steps ? init.mesh().with_steps(*steps) : init.mesh();
    const auto L = load_model(model, mesh, run.manifest);
    run.manifest["config"] = io::to_json(cfg);
    run.manifest["mesh"] = io::to_json(mesh);

    int status = 0;
    try {
        const PropagationResult P = propagate(*L, init.row(0), init.row(1), mesh, cfg, init.dim());
        io::write_grid(run.out("grid.txt"), P.grid);
        const ResidualField R = del_field(*L, P.grid, G.threads);
        std::ofstream rf(run.out("residual.txt"));
        io::write_residual(rf, R);
        json summary = {{"max_newton_iterations", P.max_iterations},
                        {"max_final_residual", P.max_residual},
                        {"max_rho_star", P.max_rho_star},
                        {"max_row_sweeps", *std::max_element(P.sweeps.begin(), P.sweeps.end())},
                        {"residual_certificate", R.max_norm()}};
        if (!potential.empty() && init.dim() == 1) {
            const FieldGrid ref =
                reference_solve(init.row(0), init.row(1), init.mesh(), Potential::by_name(potential), mesh.N());
            summary["reference_potential"] = potential;
            summary["sup_error_vs_reference"] = sup_norm_diff(P.grid, ref);
            std::cout << "sup-norm error vs reference: " << io::format_double(sup_norm_diff(P.grid, ref)) << '\n';
        }
        run.manifest["result"] = summary;
        io::write_json(run.out("report.json"), summary);
        std::cout << "propagated " << mesh.N() - 1 << " rows; residual certificate "
                  << io::format_double(R.max_norm()) << '\n';
    } catch (const Error& e) {
        run.manifest["error"] = e.what();
        std::cerr << "propagation failed " << e.what() << '\n';
        status = 1;
    }
    run.finish();
    return status;
}

// ---------------------------------------------------------------- find-tw

struct TwInit {
    std::string file;
    int mode = 1;
    double alpha = 0.0;
    double beta = 1.0;
    double sigma = 0.5;
};

int cmd_find_tw(const std::string& model, const TwInit& ti) {
    Run run("find-tw");
    const json all = config_or_empty();
    json section = config_section(all, "find_tw");
    section.erase("mesh");
    const FindTwConfig cfg = io::find_tw_config_from_json(section);
    Mesh mesh = all.contains("mesh") ? io::mesh_from_json(all["mesh"]) : default_mesh();
    const unsigned long long seed = G.seed.value_or(0);

    TravellingWaveState init;
    json init_echo;
    if (!ti.file.empty()) {
        init = io::read_tw(ti.file, &mesh);
        init_echo = {{"file", ti.file}};
        run.manifest["inputs"]["init"] = ti.file;
    } else {
        const ExactWave w = exact_wave_tw(ti.mode, ti.alpha, ti.beta, mesh);
        std::mt19937_64 rng(seed);
        init = perturb_state(w.state, ti.sigma, rng);
        init_echo = {{"mode", ti.mode}, {"alpha", ti.alpha}, {"beta", ti.beta}, {"sigma", ti.sigma},
                     {"exact_c", w.root.c}};
    }
    const auto L = load_model(model, mesh, run.manifest);
    run.manifest["seed"] = seed;
    run.manifest["config"] = io::to_json(cfg);
    run.manifest["mesh"] = io::to_json(mesh);
    run.manifest["init"] = init_echo;

    const FindTwResult r = find_tw(*L, init, mesh, cfg);
    io::write_tw(run.out("tw.txt"), r.state, mesh, r.loss);
    {
        std::ofstream h(run.out("history.csv"));
        h << "step,loss\n";
        for (std::size_t k = 0; k < r.history.size(); ++k) h << k << ',' << io::format_double(r.history[k]) << '\n';
    }
    json result = {{"c", r.state.c()}, {"loss", r.loss}, {"best_step", r.best_step}, {"aborted", r.aborted}};
    if (ti.file.empty()) {
        const ExactWave w = exact_wave_tw(ti.mode, ti.alpha, ti.beta, mesh);
        result["c_error"] = std::abs(r.state.c() - w.root.c);
        result["sup_error_vs_exact"] = sup_norm_diff(tw_grid(r.state, mesh), tw_grid(w.state, mesh));
    }
    run.manifest["result"] = result;
    std::cout << result.dump(2) << '\n';
    run.finish();
    return r.aborted ? 1 : 0;
}

// ---------------------------------------------------------------- verify

struct Check {
    std::string name;
    double value;
    double bound;
    bool pass;
};

int cmd_verify(const std::string& model, const std::string& data_dir) {
    Run run("verify");
    const json all = config_or_empty();
    const TrainConfig tcfg = io::train_config_from_json(config_section(all, "train"));
    const SolverConfig scfg = io::solver_config_from_json(config_section(all, "solver"));

    std::vector<FieldGrid> data;
    GenConfig gen;
    if (!data_dir.empty()) {
        json m;
        data = io::read_dataset(data_dir, &m);
        gen = io::gen_config_from_json(m);
        run.manifest["inputs"]["dataset"] = data_dir;
    } else {
        data = generate_dataset(gen, G.threads);
    }
    const Mesh mesh = data.front().mesh();
    const auto L = load_model(model, mesh, run.manifest);
    std::vector<Check> checks;

    const LossTerms t = loss_terms(*L, data, tcfg.lambda_floor, tcfg.reduction);
    checks.push_back({"l_del", t.l_del, 1e-6, t.l_del <= 1e-6});
    checks.push_back({"l_reg", t.l_reg, 1e-5, t.l_reg <= 1e-5});

    double tw_res = std::numeric_limits<double>::infinity();
    try {
        const ExactWave w = exact_wave_tw(1, 0.0, 1.0, mesh);
        tw_res = del_field(*L, tw_grid(w.state, mesh), G.threads).max_abs();
    } catch (const Error& e) {
        log(std::string("tw check: ") + e.what());
    }
    checks.push_back({"tw_max_residual", tw_res, 0.004, tw_res < 0.004});

    // Held-out initial rows, propagated over the data domain and to T = 2.5.
    GenConfig held = gen;
    held.seed = gen.seed + 1000003;
    held.K = 5;
    const int ext_steps = static_cast<int>(std::lround(2.5 / mesh.dt()));
    double e_short = 0.0, e_long = 0.0;
    try {
        for (int k = 0; k < held.K; ++k) {
            const FieldGrid ref = generate_trajectory(held, k);
            const PropagationResult P = propagate(*L, ref.row(0), ref.row(1), mesh, scfg);
            e_short = std::max(e_short, sup_norm_diff(P.grid, ref));
            const Mesh ext = mesh.with_steps(ext_steps);
            const FieldGrid refx = reference_solve(ref.row(0), ref.row(1), mesh, gen.V, ext_steps);
            e_long = std::max(e_long, sup_norm_diff(propagate(*L, ref.row(0), ref.row(1), ext, scfg).grid, refx));
        }
    } catch (const Error& e) {
        log(std::string("propagation: ") + e.what());
        e_short = e_long = std::numeric_limits<double>::infinity();
    }
    checks.push_back({"propagation_error_T", e_short, 0.012, e_short < 0.012});
    checks.push_back({"propagation_error_T_ext", e_long, 0.043, e_long < 0.043});

    bool ok = true;
    json report = json::array();
    for (const Check& c : checks) {
        ok = ok && c.pass;
        std::printf("%-4s %-24s %.6g (bound %.6g)\n", c.pass ? "PASS" : "FAIL", c.name.c_str(), c.value, c.bound);
        report.push_back({{"check", c.name},
                          {"value", std::isfinite(c.value) ? json(c.value) : json(nullptr)},
                          {"bound", c.bound},
                          {"pass", c.pass}});
    }
    run.manifest["config"] = {{"train", io::to_json(tcfg)}, {"solver", io::to_json(scfg)}};
    run.manifest["result"] = report;
    io::write_json(run.out("verify.json"), report);
    run.finish();
    return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    g_argv.assign(argv, argv + argc);
    CLI::App app{"Learn discrete Lagrangian densities from field data"};
    app.require_subcommand(1);
    app.add_option("--config", G.config, "JSON config file")->check(CLI::ExistingFile);
    app.add_option("--seed", G.seed, "Seed override");
    app.add_option("--out", G.out, "Output directory")->capture_default_str();
    app.add_flag("--verbose,-v", G.verbose, "Progress on stderr");
    app.add_option("--threads", G.threads, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();

    auto* gen = app.add_subcommand("generate", "Generate reference trajectories");
    std::optional<int> K;
    gen->add_option("--K", K, "Number of trajectories");

    auto* tr = app.add_subcommand("train", "Train a neural density");
    std::string data_dir, init_ckpt;
    std::optional<int> epochs;
    std::optional<double> reg_weight;
    tr->add_option("--data", data_dir, "Dataset directory")->required();
    tr->add_option("--epochs", epochs, "Epoch override");
    tr->add_option("--reg-weight", reg_weight, "Regulariser weight override");
    tr->add_option("--init", init_ckpt, "Start from this checkpoint");

    auto* pr = app.add_subcommand("propagate", "Propagate two initial rows");
    std::string model, rows, potential;
    std::optional<int> steps;
    pr->add_option("--model", model, "Checkpoint, or 'wave' for the analytic density")->required();
    pr->add_option("--rows", rows, "Grid file; rows 0 and 1 are used")->required();
    pr->add_option("--steps", steps, "Number of time steps (default: the grid's N)");
    pr->add_option("--compare", potential, "Also report the error against the reference solver with this potential");

    auto* tw = app.add_subcommand("find-tw", "Search for a travelling wave of a density");
    TwInit ti;
    tw->add_option("--model", model, "Checkpoint, or 'wave'")->required();
    tw->add_option("--init", ti.file, "Initial travelling-wave file");
    tw->add_option("--mode", ti.mode, "Mode of the exact wave used as initialisation")->capture_default_str();
    tw->add_option("--alpha", ti.alpha, "Sine amplitude")->capture_default_str();
    tw->add_option("--beta", ti.beta, "Cosine amplitude")->capture_default_str();
    tw->add_option("--sigma", ti.sigma, "Noise on coefficients and speed")->capture_default_str();

    auto* ve = app.add_subcommand("verify", "Check a checkpoint against data");
    ve->add_option("--model", model, "Checkpoint, or 'wave'")->required();
    ve->add_option("--data", data_dir, "Dataset directory (default: generate with defaults)");

    CLI11_PARSE(app, argc, argv);
    try {
        if (*gen) return cmd_generate(K);
        if (*tr) return cmd_train(data_dir, epochs, reg_weight, init_ckpt);
        if (*pr) return cmd_propagate(model, rows, steps, potential);
        if (*tw) return cmd_find_tw(model, ti);
        if (*ve) return cmd_verify(model, data_dir);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 2;
}
