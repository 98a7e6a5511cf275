#pragma once

#include <atomic>
#include <chrono>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "hbflow/config.hpp"
#include "hbflow/counterterms.hpp"
#include "hbflow/diagnostics.hpp"
#include "hbflow/discrete.hpp"
#include "hbflow/dln.hpp"
#include "hbflow/flows.hpp"
#include "hbflow/manifest.hpp"
#include "hbflow/potential.hpp"
#include "hbflow/svg.hpp"
#include "hbflow/trajectory.hpp"

namespace hbflow {

namespace fs = std::filesystem;

namespace expdetail {

inline std::string num_tag(double v) {
    char b[32];
    std::snprintf(b, sizeof(b), "%g", v);
    return std::string(b);
}

// Tracks emitted files so a failed run leaves no partial outputs behind.
class ArtifactTracker {
public:
    explicit ArtifactTracker(fs::path dir) : dir_(std::move(dir)) {
        fs::create_directories(dir_);
    }

    fs::path path(const std::string& name) {
        std::lock_guard<std::mutex> lock(mu_);
        names_.push_back(name);
        return dir_ / name;
    }

    const std::vector<std::string>& names() const { return names_; }

    void discard_all() {
        std::lock_guard<std::mutex> lock(mu_);
        for (const auto& n : names_) {
            std::error_code ec;
            fs::remove(dir_ / n, ec);
        }
        names_.clear();
    }

private:
    fs::path dir_;
    std::vector<std::string> names_;
    std::mutex mu_;
};

inline void write_error_series_csv(const ErrorSeries& es, double eta,
                                   std::uint64_t hash, const fs::path& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path.string());
    os << "# manifest " << std::hex << hash << std::dec << "\n";
    os << "k,t,eps\n";
    char b[32];
    for (std::size_t i = 0; i < es.k.size(); ++i) {
        os << es.k[i] << ',';
        std::snprintf(b, sizeof(b), "%.17g", es.k[i] * eta);
        os << b << ',';
        std::snprintf(b, sizeof(b), "%.17g", es.eps_norm[i]);
        os << b << "\n";
    }
}

// Runs cells 0..n-1 on up to `jobs` threads; failures are rethrown in cell
// order so the outcome does not depend on scheduling.
template <typename Fn>
void parallel_cells(std::size_t n, int jobs, Fn&& fn) {
    if (jobs <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(n);
    const std::size_t workers = std::min<std::size_t>(jobs, n);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
                try {
                    fn(i);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace expdetail

// ---------------------------------------------------------------------------
// Discrete DLN training to convergence (plain stepping loop on the stacked
// problem).
// ---------------------------------------------------------------------------

struct DlnTrainResult {
    Vec w_plus, w_minus;
    long iterations = 0;
    double initial_loss = 0.0;
    double final_loss = 0.0;
    bool converged = false;
};

inline DlnTrainResult train_dln_discrete(const DLNModel& model0, double eta, double mu,
                                         double loss_rtol, long max_steps,
                                         double divergence_bound = 1e8) {
    const Problem p = make_dln_problem(model0);
    DiscreteState s = make_initial_state(dln_stack(model0), eta, mu);
    const int d = model0.d();
    DlnTrainResult out;
    out.initial_loss = model0.loss();
    double loss = out.initial_loss;
    while (s.k < max_steps && loss > loss_rtol * out.initial_loss) {
        s = hb_step(s, p);
        if (!s.beta.allFinite() || s.beta.cwiseAbs().maxCoeff() > divergence_bound)
            throw DivergenceError("train_dln_discrete: diverged at step " +
                                  std::to_string(s.k));
        loss = eval_loss(p, s.beta);
    }
    out.w_plus = s.beta.head(d);
    out.w_minus = s.beta.tail(d);
    out.iterations = s.k;
    out.final_loss = loss;
    out.converged = loss <= loss_rtol * out.initial_loss;
    return out;
}

// ---------------------------------------------------------------------------
// Experiment parameter structs + parsers (everything validates before any
// run starts).
// ---------------------------------------------------------------------------

struct TwodParams {
    Problem problem;
    Vec beta0;
    double eta, mu;
    long steps;
    FlowConfig flow;  // substeps/integrator/mode template
};

inline TwodParams parse_twod(const nlohmann::json& cfg) {
    TwodParams p{parse_problem(cfgdetail::require(cfg, "", "problem"), "problem", 0),
                 {}, 0, 0, 0, {}};
    p.beta0 = parse_vec(cfg, "", "beta0", p.problem.dim);
    p.eta = cfgdetail::require_number(cfg, "", "eta");
    p.mu = cfgdetail::require_number(cfg, "", "mu");
    p.steps = cfgdetail::require_integer(cfg, "", "steps");
    if (p.eta <= 0) throw ConfigError("eta", "must be positive");
    if (p.mu < 0 || p.mu >= 1) throw ConfigError("mu", "must lie in [0,1)");
    if (p.steps < 1) throw ConfigError("steps", "must be >= 1");
    p.flow = parse_flow_block(cfg.contains("flow") ? cfg.at("flow") : nlohmann::json(),
                              "flow");
    return p;
}

struct OrderSweepParams {
    Problem problem;
    Vec beta0;
    double mu, t_total;
    std::vector<double> eta_grid;
    std::vector<int> alphas;
    FlowConfig flow;
};

inline OrderSweepParams parse_order_sweep(const nlohmann::json& cfg) {
    OrderSweepParams p{parse_problem(cfgdetail::require(cfg, "", "problem"), "problem", 0),
                       {}, 0, 0, {}, {}, {}};
    p.beta0 = parse_vec(cfg, "", "beta0", p.problem.dim);
    p.mu = cfgdetail::require_number(cfg, "", "mu");
    p.t_total = cfgdetail::require_number(cfg, "", "T_total");
    p.eta_grid = cfgdetail::require_number_list(cfg, "", "eta_grid", 4);
    auto alphas = cfgdetail::require_as<std::vector<int>>(cfg, "", "alphas", "array of integers");
    if (alphas.empty()) throw ConfigError("alphas", "must be non-empty");
    for (int a : alphas)
        if (a < 1 || a > 3) throw ConfigError("alphas", "each alpha must be in [1,3]");
    p.alphas = alphas;
    if (p.t_total <= 0) throw ConfigError("T_total", "must be positive");
    nlohmann::json flow_default{{"substeps", 20}, {"integrator", "rk4"}};
    p.flow = parse_flow_block(cfg.contains("flow") ? cfg.at("flow") : flow_default, "flow");
    return p;
}

struct SmoothnessParams {
    MlpSpec mlp;
    double eta, mu;
    long epochs;
    double tail_fraction;
};

inline SmoothnessParams parse_smoothness(const nlohmann::json& cfg) {
    SmoothnessParams p;
    const auto seed = cfgdetail::require_integer(cfg, "", "seed");
    p.mlp = parse_mlp_spec(cfgdetail::require(cfg, "", "problem"), "problem",
                           static_cast<std::uint64_t>(seed));
    p.eta = cfgdetail::require_number(cfg, "", "eta");
    p.mu = cfgdetail::require_number(cfg, "", "mu");
    p.epochs = cfgdetail::require_integer(cfg, "", "epochs");
    p.tail_fraction = cfgdetail::get_or<double>(cfg, "", "tail_fraction", 0.25, "number");
    if (p.epochs < 10) throw ConfigError("epochs", "must be >= 10");
    if (p.tail_fraction <= 0 || p.tail_fraction >= 1)
        throw ConfigError("tail_fraction", "must lie in (0,1)");
    return p;
}

struct DlnBiasParams {
    int n, d, nnz;
    double eta, theta, convergence_rtol;
    long max_steps;
    long flow_max_segments;
    std::vector<double> s_grid, mu_grid;
    std::vector<std::uint64_t> seeds;
    int substeps;
    Integrator integrator;
    CtMode mode;
};

inline DlnBiasParams parse_dln_bias(const nlohmann::json& cfg) {
    DlnBiasParams p;
    p.n = static_cast<int>(cfgdetail::require_integer(cfg, "", "n"));
    p.d = static_cast<int>(cfgdetail::require_integer(cfg, "", "d"));
    p.nnz = static_cast<int>(cfgdetail::get_or<long>(cfg, "", "nnz", 5, "integer"));
    if (p.n < 1 || p.d <= p.n) throw ConfigError("d", "requires n >= 1 and d > n");
    p.eta = cfgdetail::require_number(cfg, "", "eta");
    p.theta = cfgdetail::get_or<double>(cfg, "", "theta", 1.0, "number");
    p.convergence_rtol =
        cfgdetail::get_or<double>(cfg, "", "convergence_rtol", 1e-10, "number");
    p.max_steps = cfgdetail::get_or<long>(cfg, "", "max_steps", 2000000, "integer");
    p.s_grid = cfgdetail::require_number_list(cfg, "", "s_grid");
    p.mu_grid = cfgdetail::require_number_list(cfg, "", "mu_grid");
    auto seeds = cfgdetail::require_as<std::vector<std::uint64_t>>(cfg, "", "seeds",
                                                                   "array of integers");
    if (seeds.empty()) throw ConfigError("seeds", "must be non-empty");
    p.seeds = seeds;
    const auto flow = cfg.contains("flow") ? cfg.at("flow") : nlohmann::json();
    p.substeps =
        static_cast<int>(cfgdetail::get_or<long>(flow, "flow", "substeps", 10, "integer"));
    p.integrator = parse_integrator(
        cfgdetail::get_or<std::string>(flow, "flow", "integrator", "euler", "string"),
        "flow.integrator");
    p.mode = parse_ct_mode(
        cfgdetail::get_or<std::string>(flow, "flow", "ct_mode", "asymptotic", "string"),
        "flow.ct_mode");
    return p;
}

struct DlnErrorParams {
    int n, d, nnz;
    double s, eta;
    long steps;
    std::vector<double> mu_grid;
    std::uint64_t seed;
    int substeps;
    Integrator integrator;
    CtMode mode;
};

inline DlnErrorParams parse_dln_error(const nlohmann::json& cfg) {
    DlnErrorParams p;
    p.n = static_cast<int>(cfgdetail::require_integer(cfg, "", "n"));
    p.d = static_cast<int>(cfgdetail::require_integer(cfg, "", "d"));
    p.nnz = static_cast<int>(cfgdetail::get_or<long>(cfg, "", "nnz", 5, "integer"));
    if (p.n < 1 || p.d <= p.n) throw ConfigError("d", "requires n >= 1 and d > n");
    p.s = cfgdetail::require_number(cfg, "", "s");
    p.eta = cfgdetail::require_number(cfg, "", "eta");
    p.steps = cfgdetail::require_integer(cfg, "", "steps");
    p.mu_grid = cfgdetail::require_number_list(cfg, "", "mu_grid");
    p.seed = static_cast<std::uint64_t>(cfgdetail::require_integer(cfg, "", "seed"));
    const auto flow = cfg.contains("flow") ? cfg.at("flow") : nlohmann::json();
    p.substeps =
        static_cast<int>(cfgdetail::get_or<long>(flow, "flow", "substeps", 10, "integer"));
    p.integrator = parse_integrator(
        cfgdetail::get_or<std::string>(flow, "flow", "integrator", "euler", "string"),
        "flow.integrator");
    p.mode = parse_ct_mode(
        cfgdetail::get_or<std::string>(flow, "flow", "ct_mode", "asymptotic", "string"),
        "flow.ct_mode");
    return p;
}

/// Parses the experiment config without running anything; throws ConfigError
/// on the first invalid field.
inline std::string validate_experiment(const nlohmann::json& cfg) {
    const std::string kind = cfgdetail::require_string(cfg, "", "experiment");
    cfgdetail::require_string(cfg, "", "output_dir");
    if (kind == "twod_trajectories" || kind == "error_curves")
        parse_twod(cfg);
    else if (kind == "order_sweep")
        parse_order_sweep(cfg);
    else if (kind == "smoothness")
        parse_smoothness(cfg);
    else if (kind == "dln_bias")
        parse_dln_bias(cfg);
    else if (kind == "dln_error")
        parse_dln_error(cfg);
    else
        throw ConfigError("experiment", "unknown experiment '" + kind + "'");
    return kind;
}

// ---------------------------------------------------------------------------
// Experiment bodies
// ---------------------------------------------------------------------------

namespace expdetail {

inline FlowConfig make_flow(const TwodParams& p, FlowKind kind, int alpha) {
    FlowConfig f = p.flow;
    f.kind = kind;
    f.alpha = alpha;
    f.mu = kind == FlowKind::Gf ? 0.0 : p.mu;
    f.eta = p.eta;
    return f;
}

inline void run_twod_trajectories(const TwodParams& p, ArtifactTracker& art,
                                  std::uint64_t hash) {
    struct Entry {
        std::string name;
        Trajectory traj;
    };
    std::vector<Entry> runs;
    runs.push_back({"gd", run_discrete(Optimizer::Gd, p.problem, p.beta0, p.eta, 0.0, p.steps)});
    runs.push_back({"hb", run_discrete(Optimizer::Hb, p.problem, p.beta0, p.eta, p.mu, p.steps)});
    runs.push_back({"rgf", run_flow(p.problem, p.beta0, make_flow(p, FlowKind::Rgf, 1), p.steps)});
    runs.push_back({"hbf2", run_flow(p.problem, p.beta0, make_flow(p, FlowKind::Hbf, 2), p.steps)});
    runs.push_back({"hbf3", run_flow(p.problem, p.beta0, make_flow(p, FlowKind::Hbf, 3), p.steps)});

    std::vector<SvgSeries> overlay;
    for (auto& e : runs) {
        e.traj.config_hash = hash;
        e.traj.label = e.name;
        write_trajectory_csv(e.traj, art.path("traj_" + e.name + ".csv").string());
        if (p.problem.dim == 2) {
            SvgSeries s;
            s.label = e.name;
            for (const auto& pt : e.traj.points) {
                s.x.push_back(pt[0]);
                s.y.push_back(pt[1]);
            }
            overlay.push_back(std::move(s));
        }
    }
    if (!overlay.empty())
        write_svg_lines(art.path("trajectories.svg").string(), "trajectory overlay",
                        overlay, false, false, hash);
}

inline void run_error_curves(const TwodParams& p, ArtifactTracker& art,
                             std::uint64_t hash) {
    const Trajectory hb =
        run_discrete(Optimizer::Hb, p.problem, p.beta0, p.eta, p.mu, p.steps);

    struct FlowRun {
        std::string name;
        FlowKind kind;
        int alpha;
        CtMode mode;
    };
    std::vector<FlowRun> defs = {
        {"rgf", FlowKind::Rgf, 1, CtMode::Asymptotic},
        {"hbf2_finite", FlowKind::Hbf, 2, CtMode::FiniteK},
        {"hbf2_asym", FlowKind::Hbf, 2, CtMode::Asymptotic},
        {"hbf3_finite", FlowKind::Hbf, 3, CtMode::FiniteK},
        {"hbf3_asym", FlowKind::Hbf, 3, CtMode::Asymptotic},
    };
    std::vector<SvgSeries> plot;
    for (const auto& defn : defs) {
        FlowConfig f = make_flow(p, defn.kind, defn.alpha);
        f.ct.mode = defn.mode;
        const Trajectory traj = run_flow(p.problem, p.beta0, f, p.steps);
        const ErrorSeries es = discretization_error(hb, traj);
        write_error_series_csv(es, p.eta, hash, art.path("error_" + defn.name + ".csv"));
        SvgSeries s;
        s.label = defn.name;
        for (std::size_t i = 0; i < es.k.size(); ++i) {
            s.x.push_back(static_cast<double>(es.k[i]));
            s.y.push_back(es.eps_norm[i]);
        }
        plot.push_back(std::move(s));
    }
    write_svg_lines(art.path("error_curves.svg").string(), "|eps_k| vs k", plot, false,
                    true, hash);
}

inline void run_order_sweep(const OrderSweepParams& p, ArtifactTracker& art,
                            std::uint64_t hash) {
    std::ofstream os(art.path("order_fits.csv"));
    os << "# manifest " << std::hex << hash << std::dec << "\n";
    os << "alpha,eta,eps_N,log_residual,slope\n";
    nlohmann::json summary = nlohmann::json::array();
    for (int alpha : p.alphas) {
        FlowConfig base = p.flow;
        base.kind = alpha == 1 ? FlowKind::Rgf : FlowKind::Hbf;
        base.alpha = alpha;
        base.mu = p.mu;
        base.eta = p.eta_grid.front();
        const OrderFit fit = estimate_order(p.problem, p.beta0, base, p.eta_grid, p.t_total);
        char b[64];
        for (std::size_t i = 0; i < fit.eta.size(); ++i) {
            std::snprintf(b, sizeof(b), "%d,%.17g,%.17g,%.17g,%.17g", alpha, fit.eta[i],
                          fit.eps[i], fit.residuals[i], fit.slope);
            os << b << "\n";
        }
        summary.push_back({{"alpha", alpha},
                           {"slope", fit.slope},
                           {"warnings", fit.warnings}});
    }
    std::ofstream js(art.path("order_summary.json"));
    js << summary.dump(2) << "\n";
}

inline void run_smoothness(const SmoothnessParams& p, ArtifactTracker& art,
                           std::uint64_t hash) {
    const Problem prob = make_mlp_problem(p.mlp);
    const Vec theta0 = make_mlp_initial_point(p.mlp);
    DiscreteState gd = make_initial_state(theta0, p.eta, 0.0);
    DiscreteState hb = make_initial_state(theta0, p.eta, p.mu);

    std::ofstream os(art.path("smoothness.csv"));
    os << "# manifest " << std::hex << hash << std::dec << "\n";
    os << "epoch,loss_gd,d_gd,loss_hb,d_hb\n";
    std::vector<double> dgd_tail, dhb_tail;
    SvgSeries sg{"gd", {}, {}}, sh{"hb", {}, {}};
    const long tail_start = p.epochs - static_cast<long>(p.tail_fraction * p.epochs);
    char b[160];
    for (long e = 0; e < p.epochs; ++e) {
        const double lgd = eval_loss(prob, gd.beta);
        const double lhb = eval_loss(prob, hb.beta);
        const double dgd = directional_smoothness(prob, gd.beta, p.eta);
        const double dhb = directional_smoothness(prob, hb.beta, p.eta);
        std::snprintf(b, sizeof(b), "%ld,%.17g,%.17g,%.17g,%.17g", e, lgd, dgd, lhb, dhb);
        os << b << "\n";
        sg.x.push_back(static_cast<double>(e));
        sg.y.push_back(dgd);
        sh.x.push_back(static_cast<double>(e));
        sh.y.push_back(dhb);
        if (e >= tail_start) {
            dgd_tail.push_back(dgd);
            dhb_tail.push_back(dhb);
        }
        gd = gd_step(gd, prob);
        hb = hb_step(hb, prob);
    }
    const auto mean = [](const std::vector<double>& v) {
        double a = 0;
        for (double x : v) a += x;
        return v.empty() ? 0.0 : a / v.size();
    };
    nlohmann::json summary{{"mean_d_gd_tail", mean(dgd_tail)},
                           {"mean_d_hb_tail", mean(dhb_tail)},
                           {"two_over_eta", 2.0 / p.eta},
                           {"tail_epochs", dgd_tail.size()}};
    std::ofstream js(art.path("smoothness_summary.json"));
    js << summary.dump(2) << "\n";
    write_svg_lines(art.path("smoothness.svg").string(), "directional smoothness",
                    {sg, sh}, false, false, hash);
}

inline void run_dln_bias(const DlnBiasParams& p, ArtifactTracker& art,
                         std::uint64_t hash, int jobs) {
    struct Cell {
        double s, mu;
        std::uint64_t seed;
        nlohmann::json report;
        std::string row;
    };
    std::vector<Cell> cells;
    for (std::uint64_t seed : p.seeds)
        for (double mu : p.mu_grid)
            for (double s : p.s_grid) cells.push_back({s, mu, seed, {}, {}});

    expdetail::parallel_cells(cells.size(), jobs, [&](std::size_t ci) {
        Cell& cell = cells[ci];
        const DlnDataset ds = make_sparse_regression(p.n, p.d, p.nnz, cell.seed);
        const DLNModel model0 = dln_initialize(ds, cell.s, p.theta);

        const DlnTrainResult disc = train_dln_discrete(model0, p.eta, cell.mu,
                                                       p.convergence_rtol, p.max_steps);
        const Vec w_disc = disc.w_plus.array().square() - disc.w_minus.array().square();

        DlnFlowConfig fc;
        fc.correction = true;
        fc.mu = cell.mu;
        fc.eta = p.eta;
        fc.substeps = p.substeps;
        fc.integrator = p.integrator;
        fc.mode = p.mode;
        fc.stop_loss_rtol = p.convergence_rtol;
        fc.grid_stride = std::max<long>(1, p.max_steps / 1000);
        const DlnFlowResult flow = run_dln_flow(model0, fc, p.max_steps);
        const DLNModel final_model = flow.final_model(model0);
        const Vec w_flow = final_model.w();
        const Vec kappa_inf = final_model.kappa();
        const PhiCorrection phi = phi_correction(flow, model0);
        CorollaryOptions copts;
        copts.convergence_rtol = p.convergence_rtol;
        copts.require_converged = false;  // reported as-is, convergence recorded below
        const CorollaryQuantities cq = corollary_quantities(flow, model0, copts);
        const double kkt = kkt_residual(w_flow, kappa_inf, phi.integral, model0.X);

        const double gen_disc = (w_disc - ds.w_star).norm();
        const double gen_flow = (w_flow - ds.w_star).norm();
        const double mean_kappa_ratio =
            (kappa_inf.array() / model0.kappa().array()).mean();

        auto vec_json = [](const Vec& v) {
            return std::vector<double>(v.data(), v.data() + v.size());
        };
        cell.report = nlohmann::json{
            {"s", cell.s},
            {"mu", cell.mu},
            {"seed", cell.seed},
            {"kappa0", vec_json(model0.kappa())},
            {"kappa_inf", vec_json(kappa_inf)},
            {"kappa_inf_formula", vec_json(cq.kappa_inf_formula)},
            {"Phi", vec_json(cq.Phi)},
            {"q", vec_json(cq.q)},
            {"phi", vec_json(phi.integral)},
            {"phi_closed_form", vec_json(phi.closed_form)},
            {"kkt_residual", kkt},
            {"w_inf", vec_json(w_flow)},
            {"w_inf_discrete", vec_json(w_disc)},
            {"generalization", gen_disc},
            {"generalization_flow", gen_flow},
            {"discrete_iterations", disc.iterations},
            {"discrete_converged", disc.converged},
            {"flow_segments", flow.n_segments},
            {"flow_final_loss", flow.final_loss},
            {"mean_kappa_ratio", mean_kappa_ratio},
            {"manifest", hash},
        };
        char row[256];
        std::snprintf(row, sizeof(row), "%.17g,%.17g,%llu,%.17g,%.17g,%.17g", cell.s,
                      cell.mu, static_cast<unsigned long long>(cell.seed), gen_disc,
                      kkt, mean_kappa_ratio);
        cell.row = row;
        std::ofstream os(art.path("bias_s" + num_tag(cell.s) + "_mu" + num_tag(cell.mu) +
                                  "_seed" + std::to_string(cell.seed) + ".json"));
        os << cell.report.dump(2) << "\n";
    });

    // Aggregate in grid order, independent of completion order.
    std::ofstream os(art.path("bias_aggregate.csv"));
    os << "# manifest " << std::hex << hash << std::dec << "\n";
    os << "s,mu,seed,generalization,kkt_residual,mean_kappa_ratio\n";
    for (const auto& c : cells) os << c.row << "\n";
}

inline void run_dln_error(const DlnErrorParams& p, ArtifactTracker& art,
                          std::uint64_t hash) {
    const DlnDataset ds = make_sparse_regression(p.n, p.d, p.nnz, p.seed);
    const DLNModel model0 = dln_initialize(ds, p.s, 1.0);
    const Problem prob = make_dln_problem(model0);

    std::vector<SvgSeries> plot;
    for (double mu : p.mu_grid) {
        const Trajectory hb = run_discrete(Optimizer::Hb, prob, dln_stack(model0),
                                           p.eta, mu, p.steps);
        for (bool correction : {false, true}) {
            DlnFlowConfig fc;
            fc.correction = correction;
            fc.mu = mu;
            fc.eta = p.eta;
            fc.substeps = p.substeps;
            fc.integrator = p.integrator;
            fc.mode = p.mode;
            fc.grid_stride = 1;
            const DlnFlowResult flow = run_dln_flow(model0, fc, p.steps);

            ErrorSeries es;
            es.flow_label = correction ? "hbf2" : "rgf";
            const int d = p.d;
            for (long k = 0; k <= p.steps; ++k) {
                const Vec z = hb.points[static_cast<std::size_t>(k)];
                const Vec w_disc = z.head(d).array().square() - z.tail(d).array().square();
                const Vec w_flow = flow.wp_grid[static_cast<std::size_t>(k)].array().square() -
                                   flow.wm_grid[static_cast<std::size_t>(k)].array().square();
                es.k.push_back(k);
                es.eps_norm.push_back((w_flow - w_disc).norm());
            }
            const std::string name = es.flow_label + "_mu" + num_tag(mu);
            write_error_series_csv(es, p.eta, hash, art.path("error_" + name + ".csv"));
            SvgSeries s;
            s.label = name;
            for (std::size_t i = 0; i < es.k.size(); ++i) {
                s.x.push_back(static_cast<double>(es.k[i]));
                s.y.push_back(es.eps_norm[i]);
            }
            plot.push_back(std::move(s));
        }
    }
    write_svg_lines(art.path("dln_error.svg").string(), "|w_flow - w_hb| vs k", plot,
                    false, true, hash);
}

}  // namespace expdetail

struct RunResult {
    Manifest manifest;
    fs::path output_dir;
};

/// Validates, runs the experiment, emits artifacts plus a manifest. On
/// failure all partial outputs are removed and the exception propagates.
inline RunResult run_experiment(const nlohmann::json& cfg, const fs::path& out_root,
                                int jobs = 1) {
    const std::string kind = validate_experiment(cfg);
    const std::string out_dir = cfgdetail::require_string(cfg, "", "output_dir");
    const std::uint64_t hash = config_hash(cfg);
    const std::uint64_t seed =
        static_cast<std::uint64_t>(cfgdetail::get_or<long>(cfg, "", "seed", 0, "integer"));

    expdetail::ArtifactTracker art(out_root / out_dir);
    const auto t0 = std::chrono::steady_clock::now();
    try {
        if (kind == "twod_trajectories")
            expdetail::run_twod_trajectories(parse_twod(cfg), art, hash);
        else if (kind == "error_curves")
            expdetail::run_error_curves(parse_twod(cfg), art, hash);
        else if (kind == "order_sweep")
            expdetail::run_order_sweep(parse_order_sweep(cfg), art, hash);
        else if (kind == "smoothness")
            expdetail::run_smoothness(parse_smoothness(cfg), art, hash);
        else if (kind == "dln_bias")
            expdetail::run_dln_bias(parse_dln_bias(cfg), art, hash, jobs);
        else if (kind == "dln_error")
            expdetail::run_dln_error(parse_dln_error(cfg), art, hash);
    } catch (...) {
        art.discard_all();
        throw;
    }
    const auto t1 = std::chrono::steady_clock::now();

    RunResult res;
    res.output_dir = out_root / out_dir;
    res.manifest.config_hash = hash;
    res.manifest.seed = seed;
    res.manifest.experiment = kind;
    res.manifest.wall_time_s = std::chrono::duration<double>(t1 - t0).count();
    res.manifest.artifacts = art.names();
    write_manifest(res.manifest, (res.output_dir / "manifest.json").string());
    return res;
}

}  // namespace hbflow
