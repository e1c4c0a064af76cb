#include "cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "splitinf/bootstrap.hpp"
#include "splitinf/csv_io.hpp"
#include "splitinf/error.hpp"
#include "splitinf/loco.hpp"
#include "splitinf/manymeans.hpp"
#include "splitinf/parallel.hpp"
#include "splitinf/projection.hpp"
#include "splitinf/selection.hpp"
#include "splitinf/simharness.hpp"

namespace splitinf::cli {

namespace {

constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kUsage = 2;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Stream ids under the root seed; fixed so outputs never depend on the order
// in which parameters are requested.
enum Stream : std::uint64_t { split_stream = 1, select_stream, loco_stream, boot_stream, gauss_stream, robust_stream };

struct Common {
    std::uint64_t seed = 1;
    int threads = 0;
    std::string out;
};

struct Inference {
    std::string selector = "lasso";
    Index k = 5;
    std::vector<std::string> params{"beta"};
    std::vector<std::string> methods{"boot"};
    double alpha = 0.05;
    Index boot_reps = 2000;
    std::int64_t mc_draws = 100000;
    Index image_samples = 5000;
    double epsilon = 0.05;
    std::string tau = "auto";
    bool center = false;
    bool robust = false;
};

struct FitArgs {
    std::string input;
    std::string response;
    bool no_header = false;
    std::string dump_replicates;
};

struct SimulateArgs {
    std::string setting = "A";
    Index n = 100;
    Index p = 50;
    double noise_variance = 0.5;
};

struct CoverageArgs {
    std::string setting = "B";
    std::vector<Index> n_grid{100, 200, 400, 800};
    Index p = 50;
    double noise_variance = 0.5;
    Index reps = 500;
    std::int64_t oracle_draws = 100000;
};

struct ManyMeansArgs {
    Index dim = 1000;
    Index n = 50;
    std::vector<double> gaps;
    Index reps = 10000;
    std::string coverage_out;
    Index coverage_reps = 200;
};

const CLI::Validator kOpenUnit(
    [](std::string& text) -> std::string {
        try {
            const double v = parse_double(text);
            if (v > 0.0 && v < 1.0) return {};
        } catch (const std::exception&) {
        }
        return "alpha must lie strictly between 0 and 1, got " + text;
    },
    "(0,1)");

void add_common(CLI::App* sub, Common& c) {
    sub->add_option("--seed", c.seed, "Root seed")->capture_default_str();
    sub->add_option("--threads", c.threads, "Worker threads (0 = all logical cores)")
        ->check(CLI::NonNegativeNumber);
    sub->add_option("--out", c.out, "Output CSV path (default: standard output)");
}

void add_inference(CLI::App* sub, Inference& f, bool with_selection = true) {
    if (with_selection) {
        sub->add_option("--selector", f.selector, "topk, stepwise or lasso")
            ->check(CLI::IsMember({"topk", "stepwise", "lasso"}))
            ->capture_default_str();
        sub->add_option("--k", f.k, "Maximum model size")->check(CLI::PositiveNumber)->capture_default_str();
    }
    sub->add_option("--param", f.params, "beta, gamma, phi, rho")
        ->delimiter(',')
        ->check(CLI::IsMember({"beta", "gamma", "phi", "rho"}));
    sub->add_option("--method", f.methods, "normal, boot, image, median")
        ->delimiter(',')
        ->check(CLI::IsMember({"normal", "boot", "image", "median"}));
    sub->add_option("--alpha", f.alpha, "Miscoverage level")->check(kOpenUnit)->capture_default_str();
    sub->add_option("--boot-reps", f.boot_reps, "Bootstrap replicates")->check(CLI::Range(Index{100}, Index{10000000}));
    sub->add_option("--mc-draws", f.mc_draws, "Gaussian Monte-Carlo draws")->check(CLI::Range(std::int64_t{1000}, std::int64_t{100000000}));
    sub->add_option("--image-samples", f.image_samples, "Cube samples for the image bootstrap")
        ->check(CLI::Range(Index{1000}, Index{100000000}));
    sub->add_option("--epsilon", f.epsilon, "LOCO noise half-width (0 disables noise)")->check(CLI::NonNegativeNumber);
    sub->add_option("--tau", f.tau, "LOCO truncation: auto, inf, or a positive level");
    sub->add_flag("--center", f.center, "Center the inference half before projection intervals");
    sub->add_flag("--robust", f.robust, "Truncated, noise-perturbed prediction errors for rho");
}

std::vector<MethodChoice> method_choices(const Inference& f) {
    std::vector<MethodChoice> out;
    for (const auto& p : f.params) {
        for (const auto& m : f.methods) {
            MethodChoice choice{*parse_parameter(p), *parse_family(m)};
            try {
                (void)method_for(choice);
            } catch (const InvalidArgument& e) {
                throw UsageError(e.what());
            }
            out.push_back(choice);
        }
    }
    return out;
}

LocoConfig loco_config(const Inference& f, const Dataset& first, const SeededRng& rng) {
    LocoConfig cfg = LocoConfig::defaults_for(first, rng);
    cfg.epsilon = f.epsilon;
    cfg.include_noise = f.epsilon > 0.0;
    if (f.tau == "inf" || f.tau == "none") {
        cfg.tau.reset();
    } else if (f.tau != "auto") {
        double t = 0.0;
        try {
            t = parse_double(f.tau);
        } catch (const std::exception&) {
            throw UsageError("--tau expects auto, inf or a positive number");
        }
        if (!(t > 0.0)) throw UsageError("--tau must be positive");
        cfg.tau = t;
    }
    return cfg;
}

SelectorSpec selector_spec(const Inference& f) {
    SelectorSpec s;
    s.method = f.selector;
    s.k = f.k;
    return s;
}

std::string join(const std::vector<std::string>& v) {
    std::string s;
    for (const auto& x : v) s += (s.empty() ? "" : ",") + x;
    return s;
}

std::vector<std::string> inference_echo(const Inference& f) {
    return {"selector=" + f.selector + " k=" + std::to_string(f.k),
            "param=" + join(f.params) + " method=" + join(f.methods),
            "alpha=" + format_double(f.alpha) + " boot_reps=" + std::to_string(f.boot_reps) +
                " mc_draws=" + std::to_string(f.mc_draws) + " image_samples=" + std::to_string(f.image_samples),
            "epsilon=" + format_double(f.epsilon) + " tau=" + f.tau + " center=" + (f.center ? "1" : "0") +
                " robust=" + (f.robust ? "1" : "0")};
}

// Opens --out or falls back to the provided stream.
class Sink {
public:
    Sink(const std::string& path, std::ostream& fallback) : stream_(&fallback) {
        if (!path.empty()) {
            file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
            if (!*file_) throw Error("cannot open output file: " + path);
            stream_ = file_.get();
        }
    }
    std::ostream& get() { return *stream_; }
    void close() {
        if (file_) {
            file_->close();
            if (!*file_) throw Error("failed writing output file");
        }
    }

private:
    std::unique_ptr<std::ofstream> file_;
    std::ostream* stream_;
};

void apply_threads(const Common& c) {
    if (c.threads > 0) set_num_threads(c.threads);
}

int cmd_fit(const Common& c, const Inference& f, const FitArgs& a, std::ostream& out) {
    apply_threads(c);
    const auto choices = method_choices(f);
    CsvReadOptions opts;
    opts.header = !a.no_header;
    opts.response = a.response;
    const LoadedDataset loaded = read_dataset_csv(a.input, opts);
    const SeededRng root(c.seed);
    const DataSplit parts = split(loaded.data, root.child(split_stream));
    const SelectedModel model = select_model(parts.first, selector_spec(f), root.child(select_stream));
    const Dataset& d2 = parts.second;
    const Dataset d2_beta = f.center ? d2.centered() : d2;
    const IndexList& s = model.selected;

    std::unique_ptr<std::ofstream> dump;
    bool dump_header = true;
    if (!a.dump_replicates.empty()) {
        dump = std::make_unique<std::ofstream>(a.dump_replicates, std::ios::binary);
        if (!*dump) throw Error("cannot open replicate dump file: " + a.dump_replicates);
    }
    auto dump_draws = [&](const BootstrapDraws& draws, const std::string& label) {
        if (!dump) return;
        write_replicates_csv(*dump, draws, label, dump_header);
        dump_header = false;
    };

    std::optional<DeltaMatrix> deltas;
    const LocoConfig loco = loco_config(f, parts.first, root.child(loco_stream));
    std::vector<ConfidenceRow> rows;
    for (const auto& choice : choices) {
        BootstrapConfig bcfg;
        bcfg.replicates = f.boot_reps;
        bcfg.alpha = f.alpha;
        bcfg.rng = root.child(boot_stream)
                       .child(static_cast<std::uint64_t>(choice.parameter) * 8 +
                              static_cast<std::uint64_t>(choice.family));
        std::vector<ConfidenceRow> part;
        switch (choice.parameter) {
        case Parameter::beta:
            if (choice.family == Family::normal) {
                const Eigen::VectorXd est = ols(d2_beta, s);
                part = rows_for(Parameter::beta, s, est,
                                ci_normal_bonferroni(est, plugin_covariance(d2_beta, s), d2_beta.rows(), f.alpha));
            } else if (choice.family == Family::boot) {
                const BootIntervals bi = boot_ci_beta(d2_beta, s, bcfg);
                dump_draws(bi.draws, "beta");
                part = rows_for(Parameter::beta, s, bi.estimate, bi.cube);
            } else {
                const ImageBootstrap ib = image_boot_ci(d2_beta, s, bcfg, f.image_samples);
                part = rows_for(Parameter::beta, s, ib.estimate, ib.ci);
            }
            break;
        case Parameter::gamma:
            if (!deltas) deltas = delta_matrix(model, d2, loco);
            if (choice.family == Family::normal) {
                const LocoIntervals li = loco_ci_normal(*deltas, f.alpha, f.mc_draws, root.child(gauss_stream));
                part = rows_for(Parameter::gamma, s, li.estimate, li.rect);
            } else {
                const LocoBootIntervals lb = loco_ci_boot(*deltas, bcfg);
                dump_draws(lb.draws, "gamma");
                part = rows_for(Parameter::gamma, s, lb.estimate, lb.cube);
            }
            break;
        case Parameter::phi: {
            const MedianIntervals mi = median_loco_ci(model, d2, f.alpha);
            part = rows_for(Parameter::phi, s, mi.estimate, mi.ci);
            break;
        }
        case Parameter::rho: {
            std::optional<LocoConfig> robust;
            if (f.robust) robust = loco_config(f, parts.first, root.child(robust_stream));
            const PredictionInterval pi = prediction_ci(model, d2, f.alpha, robust);
            part = rows_for(Parameter::rho, {}, Eigen::VectorXd::Constant(1, pi.estimate), pi.ci);
            break;
        }
        }
        rows.insert(rows.end(), part.begin(), part.end());
    }

    std::vector<std::string> comments{"splitinf fit", "input=" + a.input,
                                      "response=" + loaded.response_name, "seed=" + std::to_string(c.seed),
                                      "n=" + std::to_string(loaded.data.rows()) +
                                          " p=" + std::to_string(loaded.data.cols())};
    for (auto& e : inference_echo(f)) comments.push_back(std::move(e));
    std::string sel = "selected=";
    for (std::size_t i = 0; i < s.size(); ++i)
        sel += (i ? "," : "") + loaded.covariate_names[static_cast<std::size_t>(s[i])];
    comments.push_back(sel);
    for (const auto& w : model.warnings) comments.push_back("warning: " + w);

    if (!c.out.empty()) {
        Sink sink(c.out, out);
        write_confidence_csv(sink.get(), rows, comments);
        sink.close();
        out << std::left << std::setw(10) << "parameter" << std::setw(16) << "covariate" << std::right
            << std::setw(14) << "estimate" << std::setw(14) << "lower" << std::setw(14) << "upper" << '\n';
        for (const auto& r : rows) {
            const std::string name = r.index ? loaded.covariate_names[static_cast<std::size_t>(*r.index)] : "-";
            out << std::left << std::setw(10) << to_string(r.parameter) << std::setw(16) << name << std::right
                << std::setprecision(6) << std::setw(14) << r.estimate << std::setw(14) << r.lower
                << std::setw(14) << r.upper << '\n';
        }
    } else {
        write_confidence_csv(out, rows, comments);
    }
    return kOk;
}

int cmd_simulate(const Common& c, const SimulateArgs& a, std::ostream& out) {
    SettingSpec spec;
    spec.setting = *parse_setting(a.setting);
    spec.n = a.n;
    spec.p = a.p;
    spec.noise_variance = a.noise_variance;
    spec.rng = SeededRng(c.seed);
    const Generated gen = generate(spec);
    Sink sink(c.out, out);
    sink.get() << "# splitinf simulate setting=" << a.setting << " n=" << a.n << " p=" << a.p
               << " noise_variance=" << format_double(a.noise_variance) << " seed=" << c.seed << '\n';
    write_dataset_csv(sink.get(), gen.data);
    sink.close();
    return kOk;
}

int cmd_coverage(const Common& c, const Inference& f, const CoverageArgs& a, std::ostream& out,
                 std::ostream& err) {
    apply_threads(c);
    const auto choices = method_choices(f);
    if (f.tau != "auto" || f.epsilon != 0.05 || f.center || f.robust)
        throw UsageError("coverage runs use the default LOCO noise and truncation");
    CoverageOptions opts;
    opts.boot_reps = f.boot_reps;
    opts.mc_draws = f.mc_draws;
    opts.image_samples = f.image_samples;
    opts.oracle_draws = a.oracle_draws;
    const SeededRng root(c.seed);
    std::vector<CoverageResult> results;
    for (const Index n : a.n_grid) {
        SettingSpec spec;
        spec.setting = *parse_setting(a.setting);
        spec.n = n;
        spec.p = a.p;
        spec.noise_variance = a.noise_variance;
        results.push_back(run_coverage(spec, selector_spec(f), choices, f.alpha, a.reps, opts,
                                       root.child(static_cast<std::uint64_t>(n))));
        if (!results.back().oracle.stable())
            err << "warning: oracle targets unstable at n=" << n << " (z=" << results.back().oracle.max_z << ")\n";
    }
    Sink sink(c.out, out);
    std::ostream& o = sink.get();
    o << "# splitinf coverage setting=" << a.setting << " p=" << a.p
      << " noise_variance=" << format_double(a.noise_variance) << " reps=" << a.reps
      << " oracle_draws=" << a.oracle_draws << " seed=" << c.seed << '\n';
    for (const auto& e : inference_echo(f)) o << "# " << e << '\n';
    for (const auto& r : results) {
        std::string line = "# n=" + std::to_string(r.spec.n) + " selection_failures=" + std::to_string(r.selection_failures);
        for (const auto& cell : r.cells)
            line += " " + std::string(to_string(cell.choice.parameter)) + "/" + std::string(to_string(cell.method)) +
                    "_failures=" + std::to_string(cell.failures);
        o << line << '\n';
    }
    write_coverage_header(o);
    for (const auto& r : results) write_coverage_rows(o, r);
    sink.close();
    return kOk;
}

int cmd_manymeans(const Common& c, const Inference& f, ManyMeansArgs a, std::ostream& out) {
    apply_threads(c);
    if (a.gaps.empty())
        for (int i = 0; i <= 12; ++i) a.gaps.push_back(0.25 * i);
    const SeededRng root(c.seed);
    const auto rows = mm_risk_experiment(a.dim, a.n, a.gaps, a.reps, root.child(1));
    const std::vector<std::string> comments{"splitinf manymeans D=" + std::to_string(a.dim) + " n=" +
                                            std::to_string(a.n) + " reps=" + std::to_string(a.reps) +
                                            " seed=" + std::to_string(c.seed)};
    Sink sink(c.out, out);
    write_risk_csv(sink.get(), rows, comments);
    sink.close();
    if (!a.coverage_out.empty()) {
        const auto cov = mm_coverage_experiment(a.dim, a.n, a.gaps, a.coverage_reps, f.alpha, f.boot_reps,
                                                root.child(2));
        Sink csink(a.coverage_out, out);
        write_mm_coverage_csv(csink.get(), cov,
                              {comments.front() + " coverage_reps=" + std::to_string(a.coverage_reps) +
                               " alpha=" + format_double(f.alpha) + " boot_reps=" + std::to_string(f.boot_reps)});
        csink.close();
    }
    return kOk;
}

} // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Inference after sample splitting: projection, LOCO, median and prediction intervals"};
    app.set_config("--config", "", "Plain-text key=value config; command-line flags win");
    app.require_subcommand(1);

    Common common;
    Inference inference;
    FitArgs fit_args;
    SimulateArgs sim_args;
    CoverageArgs cov_args;
    ManyMeansArgs mm_args;
    Inference mm_inference;
    mm_inference.boot_reps = 500;

    auto* fit = app.add_subcommand("fit", "Split, select and build confidence sets on a CSV dataset");
    add_common(fit, common);
    add_inference(fit, inference);
    fit->add_option("--input", fit_args.input, "Dataset CSV")->required()->check(CLI::ExistingFile);
    fit->add_option("--response", fit_args.response, "Response column name (or 0-based position without header)");
    fit->add_flag("--no-header", fit_args.no_header, "Input has no header row");
    fit->add_option("--dump-replicates", fit_args.dump_replicates, "Write bootstrap replicates to this CSV");

    auto* sim = app.add_subcommand("simulate", "Draw a dataset from Setting A, B or C");
    add_common(sim, common);
    sim->add_option("--setting", sim_args.setting)->check(CLI::IsMember({"A", "B", "C"}))->capture_default_str();
    sim->add_option("--n", sim_args.n)->check(CLI::Range(Index{4}, Index{100000000}))->capture_default_str();
    sim->add_option("--p", sim_args.p)->check(CLI::Range(Index{5}, Index{100000}))->capture_default_str();
    sim->add_option("--noise-variance", sim_args.noise_variance)->check(CLI::NonNegativeNumber);

    auto* cov = app.add_subcommand("coverage", "Coverage simulation over an n-grid");
    add_common(cov, common);
    add_inference(cov, inference);
    cov->add_option("--setting", cov_args.setting)->check(CLI::IsMember({"A", "B", "C"}))->capture_default_str();
    cov->add_option("--n", cov_args.n_grid, "Sample sizes before splitting")
        ->delimiter(',')
        ->check(CLI::Range(Index{4}, Index{100000000}));
    cov->add_option("--p", cov_args.p)->check(CLI::Range(Index{5}, Index{100000}))->capture_default_str();
    cov->add_option("--noise-variance", cov_args.noise_variance)->check(CLI::NonNegativeNumber);
    cov->add_option("--reps", cov_args.reps)->check(CLI::PositiveNumber)->capture_default_str();
    cov->add_option("--oracle-draws", cov_args.oracle_draws)->check(CLI::Range(std::int64_t{100000}, std::int64_t{1000000000}));

    auto* mm = app.add_subcommand("manymeans", "Many-means risk comparison of split and non-split estimators");
    add_common(mm, common);
    mm->add_option("--D", mm_args.dim, "Dimension")->check(CLI::PositiveNumber)->capture_default_str();
    mm->add_option("--n", mm_args.n, "Half-sample size")->check(CLI::PositiveNumber)->capture_default_str();
    mm->add_option("--gaps", mm_args.gaps, "Gap grid (default 0,0.25,...,3)")->delimiter(',')->check(CLI::NonNegativeNumber);
    mm->add_option("--reps", mm_args.reps)->check(CLI::Range(Index{2}, Index{100000000}))->capture_default_str();
    mm->add_option("--coverage-out", mm_args.coverage_out, "Also compare split and uniform intervals");
    mm->add_option("--coverage-reps", mm_args.coverage_reps)->check(CLI::Range(Index{2}, Index{100000000}));
    mm->add_option("--alpha", mm_inference.alpha)->check(kOpenUnit);
    mm->add_option("--boot-reps", mm_inference.boot_reps)->check(CLI::Range(Index{100}, Index{10000000}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << '\n';
        return kUsage;
    }

    try {
        if (fit->parsed()) return cmd_fit(common, inference, fit_args, out);
        if (sim->parsed()) return cmd_simulate(common, sim_args, out);
        if (cov->parsed()) return cmd_coverage(common, inference, cov_args, out, err);
        if (mm->parsed()) return cmd_manymeans(common, mm_inference, mm_args, out);
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kFailure;
    }
    return kUsage;
}

} // namespace splitinf::cli
