// flowlab: flow-record pipeline from raw exports to fitted mixture models
// and synthetic flows.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "flowlab/flowlab.hpp"

namespace {

using namespace flowlab;

struct Globals {
    bool quiet = false;
    unsigned threads = 1;
};

/// stdin/stdout when the path is "-", a file otherwise.
class Input {
public:
    explicit Input(const std::string& path) {
        if (path == "-") {
            stream_ = &std::cin;
        } else {
            file_ = std::make_unique<std::ifstream>(path, std::ios::binary);
            if (!*file_) throw Error("cannot open " + path);
            stream_ = file_.get();
        }
    }
    std::istream& get() { return *stream_; }

private:
    std::unique_ptr<std::ifstream> file_;
    std::istream* stream_ = nullptr;
};

class Output {
public:
    explicit Output(const std::string& path) {
        if (path == "-") {
            stream_ = &std::cout;
        } else {
            file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
            if (!*file_) throw Error("cannot write " + path);
            stream_ = file_.get();
        }
    }
    std::ostream& get() { return *stream_; }
    void finish() {
        stream_->flush();
        if (!*stream_) throw Error("write failed");
    }

private:
    std::unique_ptr<std::ofstream> file_;
    std::ostream* stream_ = nullptr;
};

Feature feature_arg(const std::string& s) {
    auto f = parse_feature(s);
    if (!f) throw ValidationError("unknown feature '" + s + "'");
    return *f;
}

Target target_arg(const std::string& s) {
    auto t = parse_target(s);
    if (!t) throw ValidationError("unknown target '" + s + "'");
    return *t;
}

Histogram load_hist(const std::string& path, const std::string& feature) {
    Input in(path);
    std::optional<Feature> f;
    if (!feature.empty()) f = feature_arg(feature);
    return read_hist_csv(in.get(), f);
}

// --- ingest ----------------------------------------------------------------

struct IngestArgs {
    std::string in = "-", out = "-", format = "csv";
    bool skip_errors = false;
    bool assume_sorted = false;
};

void run_ingest(const IngestArgs& a, const Globals& g) {
    Input in(a.in);
    Output out(a.out);
    BinaryWriter writer(out.get());
    std::vector<FlowRecord> buffer;
    std::uint64_t last_first = 0;
    std::size_t seen = 0;
    auto sink = [&](const FlowRecord& r) {
        if (a.assume_sorted) {
            if (seen > 0 && r.first_ms < last_first) throw OrderError(seen, "input not sorted by first_ms");
            last_first = r.first_ms;
            writer.write(r);
        } else {
            buffer.push_back(r);
        }
        ++seen;
    };

    std::size_t skipped = 0;
    if (a.format == "csv") {
        CsvReader reader(in.get(), a.skip_errors ? CsvReader::OnError::skip : CsvReader::OnError::abort);
        while (auto r = reader.next()) sink(*r);
        skipped = reader.skipped();
    } else if (a.format == "nfv5") {
        read_netflow_v5_stream(in.get(), sink);
    } else {
        throw ValidationError("unknown input format '" + a.format + "'");
    }
    if (!a.assume_sorted) {
        sort_records(buffer);
        for (const auto& r : buffer) writer.write(r);
    }
    out.finish();
    if (!g.quiet) std::cerr << "records=" << writer.count() << " skipped=" << skipped << '\n';
}

// --- clean -----------------------------------------------------------------

struct CleanArgs {
    std::string in = "-", out = "-", direction = "both";
    std::vector<std::uint16_t> ifaces;
    std::vector<unsigned> protocols;
    CleanConfig cfg;
};

void run_clean(CleanArgs a, const Globals& g) {
    a.cfg.allowed_ifaces.insert(a.ifaces.begin(), a.ifaces.end());
    for (auto p : a.protocols) {
        if (p > 255) throw ValidationError("protocol must be 0..255");
        a.cfg.protocols.insert(static_cast<std::uint8_t>(p));
    }
    if (a.direction == "in") a.cfg.direction = DirectionFilter::in;
    else if (a.direction == "out") a.cfg.direction = DirectionFilter::out;
    else if (a.direction == "both") a.cfg.direction = DirectionFilter::both;
    else throw ValidationError("direction must be in, out or both");

    Cleaner cleaner(a.cfg);
    Input in(a.in);
    BinaryReader reader(in.get());
    Output out(a.out);
    BinaryWriter writer(out.get());
    while (auto r = reader.next())
        if (cleaner.accept(*r)) writer.write(*r);
    out.finish();
    if (!g.quiet) std::cerr << cleaner.report() << '\n';
}

// --- merge -----------------------------------------------------------------

struct MergeArgs {
    std::string in = "-", out = "-";
    double active_s = 300, inactive_s = 15;
};

void run_merge(const MergeArgs& a, const Globals& g) {
    MergeConfig cfg{static_cast<std::uint64_t>(a.active_s * 1000.0), static_cast<std::uint64_t>(a.inactive_s * 1000.0)};
    cfg.validate();
    Input in(a.in);
    BinaryReader reader(in.get());
    Output out(a.out);
    BinaryWriter writer(out.get());
    MergeReport report;
    std::size_t peak = 0;
    if (g.threads > 1) {
        auto records = std::vector<FlowRecord>{};
        while (auto r = reader.next()) records.push_back(*r);
        auto [merged, rep] = merge_sharded(records, cfg, g.threads);
        for (const auto& r : merged) writer.write(r);
        report = rep;
    } else {
        Merger m(cfg, [&](const FlowRecord& r) { writer.write(r); });
        while (auto r = reader.next()) m.push(*r);
        m.finish();
        report = m.report();
        peak = m.peak_cache_size();
    }
    out.finish();
    if (!g.quiet) std::cerr << report << " peak_cache=" << peak << '\n';
}

// --- hist ------------------------------------------------------------------

struct HistArgs {
    std::string in = "-", out = "-", feature;
    std::optional<int> exact_exp;
};

void run_hist(const HistArgs& a, const Globals& g) {
    Feature f = feature_arg(a.feature);
    BinSpec spec = a.exact_exp ? BinSpec{*a.exact_exp} : BinSpec::for_feature(f);
    spec.validate();
    Input in(a.in);
    BinaryReader reader(in.get());
    Histogram h(f, spec);
    std::vector<FlowRecord> batch;
    constexpr std::size_t batch_size = 1 << 16;
    while (reader.next_batch(batch, batch_size) > 0) h += bin_parallel(batch, f, spec, g.threads);
    Output out(a.out);
    write_hist_csv(h, out.get());
    out.finish();
    if (!g.quiet) std::cerr << "records=" << reader.count() << " bins=" << h.bins().size() << '\n';
}

// --- stats -----------------------------------------------------------------

struct StatsArgs {
    std::string hist, feature;
    bool cdf_table = false;
};

void run_stats(const StatsArgs& a, const Globals&) {
    Histogram h = load_hist(a.hist, a.feature);
    auto s = stats(h);
    std::cout << "flows=" << s.totals.flows << '\n'
              << "packets=" << s.totals.packets << '\n'
              << "octets=" << s.totals.octets << '\n'
              << std::fixed << std::setprecision(6) << "avg_flow_length=" << s.avg_flow_length << '\n'
              << "avg_flow_size=" << s.avg_flow_size << '\n'
              << "avg_packet_size=" << s.avg_packet_size << '\n';
    if (a.cdf_table) {
        std::vector<std::uint64_t> xs;
        std::uint64_t last = h.bins().rbegin()->first;
        for (std::uint64_t x = 1; ; x *= 2) {
            xs.push_back(x);
            if (x >= last || x >= (std::uint64_t{1} << 62)) break;
        }
        std::cout << "x,flows_pct,packets_pct,octets_pct\n" << std::setprecision(4);
        for (const auto& row : cdf_table(h, xs))
            std::cout << row.x << ',' << row.flows_pct << ',' << row.packets_pct << ',' << row.octets_pct << '\n';
    }
}

// --- fit -------------------------------------------------------------------

struct FitArgs {
    std::string hist, feature, target = "flows", out = "-", init;
    FitConfig cfg;
    std::uint64_t seed = 0;
    int restarts = 1;
};

void run_fit(FitArgs a, const Globals& g) {
    Histogram h = load_hist(a.hist, a.feature);
    a.cfg.target = target_arg(a.target);
    a.cfg.threads = g.threads;
    if (!a.init.empty()) a.cfg.initial = load_model(a.init);
    EMState st = em_fit_restarts(h, a.cfg, a.restarts, a.seed);
    Output out(a.out);
    write_model_json(st.model, out.get());
    out.finish();
    if (!g.quiet) {
        std::cerr << "iterations=" << st.iteration << " converged=" << (st.converged ? "yes" : "no")
                  << " loglik=" << std::setprecision(12) << st.loglik_trace.back() << '\n';
        for (std::size_t i = 0; i < st.model.size(); ++i) {
            const auto& c = st.model.components()[i];
            std::cerr << "  component " << i << ' ' << kind_name(kind_of(c.component)) << " weight=" << c.weight
                      << (st.frozen[i] ? " frozen" : "") << '\n';
        }
        for (const auto& w : st.warnings) std::cerr << "warning: " << w << '\n';
    }
}

// --- eval ------------------------------------------------------------------

struct EvalArgs {
    std::string model;
    std::vector<double> cdf_at, pdf_at;
};

void run_eval(const EvalArgs& a, const Globals&) {
    MixtureModel m = load_model(a.model);
    if (a.cdf_at.empty() && a.pdf_at.empty()) throw ValidationError("nothing to evaluate; pass --cdf-at or --pdf-at");
    std::cout << std::setprecision(17);
    for (double x : a.cdf_at) std::cout << m.cdf(x) << '\n';
    for (double x : a.pdf_at) std::cout << m.pdf(x) << '\n';
}

// --- generate --------------------------------------------------------------

struct GenerateArgs {
    std::string models, cls, feature = "length", out = "-";
    GenConfig cfg;
};

void run_generate(GenerateArgs a, const Globals& g) {
    std::filesystem::path dir = a.models;
    if (!a.cls.empty()) dir /= a.cls;
    ModelSet ms = ModelSet::load(dir);
    a.cfg.feature = feature_arg(a.feature);
    Output out(a.out);
    auto& os = out.get();
    os << "length,size,avg_packet_size\n" << std::setprecision(10);
    auto write = [&os](const GeneratedFlow& f) { os << f.length << ',' << f.size << ',' << f.avg_packet_size << '\n'; };
    if (g.threads > 1) {
        for (const auto& f : generate_parallel(ms, a.cfg, g.threads)) write(f);
    } else {
        generate(ms, a.cfg, write);
    }
    out.finish();
}

// --- plot-data -------------------------------------------------------------

struct PlotArgs {
    std::string hist, feature, out = "-", models, model_out;
};

void write_model_series(const Histogram& h, const ModelSet& ms, std::ostream& os) {
    os << series_csv_header << '\n' << std::setprecision(17);
    const auto& bins = h.bins();
    const Target targets[] = {Target::flows, Target::packets, Target::octets};
    for (auto it = bins.begin(); it != bins.end(); ++it) {
        const std::uint64_t lo = it->first;
        auto next = std::next(it);
        const std::uint64_t span_end = next != bins.end() ? next->first : h.spec().bin_hi(lo);
        const std::uint64_t cdf_end = h.spec().bin_hi(lo) - 1;
        std::string cdf_cols, pdf_cols;
        for (auto t : targets) {
            cdf_cols += ',';
            pdf_cols += ',';
            const MixtureModel* m = ms.find(h.feature(), t);
            if (!m) continue;
            // same conventions as to_series: cumulative through the bin end,
            // mass over the span to the next non-empty bin
            double c = rounded_cdf(*m, cdf_end);
            double mass = rounded_cdf(*m, span_end - 1) - rounded_cdf(*m, lo - 1);
            std::ostringstream a, b;
            a << std::setprecision(17) << c;
            b << std::setprecision(17) << mass / static_cast<double>(span_end - lo);
            cdf_cols += a.str();
            pdf_cols += b.str();
        }
        os << lo << cdf_cols << pdf_cols << '\n';
    }
}

void run_plot(const PlotArgs& a, const Globals&) {
    Histogram h = load_hist(a.hist, a.feature);
    Output out(a.out);
    write_series_csv(to_series(h), out.get());
    out.finish();
    if (!a.models.empty()) {
        if (a.model_out.empty()) throw ValidationError("--models requires --model-out");
        ModelSet ms = ModelSet::load(a.models);
        Output mout(a.model_out);
        write_model_series(h, ms, mout.get());
        mout.finish();
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"flowlab: flow record cleaning, merging, binning, mixture fitting and flow generation"};
    app.require_subcommand(1);
    Globals g;
    app.add_flag("--quiet", g.quiet, "Suppress reports on standard error");
    app.add_option("--threads", g.threads, "Worker threads for hist, fit, merge and generate")
        ->check(CLI::Range(1u, 1024u));
    app.fallthrough();

    IngestArgs ingest;
    auto* c_ingest = app.add_subcommand("ingest", "Convert CSV or NetFlow v5 exports to the binary record format");
    c_ingest->add_option("--in", ingest.in, "Input file (- for stdin)");
    c_ingest->add_option("--out", ingest.out, "Output file (- for stdout)");
    c_ingest->add_option("--format", ingest.format, "Input format")->check(CLI::IsMember({"csv", "nfv5"}));
    c_ingest->add_flag("--skip-errors", ingest.skip_errors, "Skip malformed CSV rows instead of aborting");
    c_ingest->add_flag("--assume-sorted", ingest.assume_sorted, "Stream without sorting; fail on unsorted input");

    CleanArgs clean_args;
    auto* c_clean = app.add_subcommand("clean", "Keep records of one observation point and drop corrupt ones");
    c_clean->add_option("--in", clean_args.in);
    c_clean->add_option("--out", clean_args.out);
    c_clean->add_option("--iface", clean_args.ifaces, "Allowed interface index (repeatable)");
    c_clean->add_option("--direction", clean_args.direction, "in, out or both");
    c_clean->add_option("--protocol", clean_args.protocols, "Allowed IP protocol (repeatable)");
    c_clean->add_option("--max-duration-ms", clean_args.cfg.max_duration_ms);
    c_clean->add_option("--min-packet-size", clean_args.cfg.min_packet_size);
    c_clean->add_option("--max-packet-size", clean_args.cfg.max_packet_size);

    MergeArgs merge_args;
    auto* c_merge = app.add_subcommand("merge", "Reassemble flows split by the exporter's active timeout");
    c_merge->add_option("--in", merge_args.in);
    c_merge->add_option("--out", merge_args.out);
    c_merge->add_option("--active-timeout", merge_args.active_s, "Seconds");
    c_merge->add_option("--inactive-timeout", merge_args.inactive_s, "Seconds");

    HistArgs hist_args;
    auto* c_hist = app.add_subcommand("hist", "Bin records into a histogram CSV");
    c_hist->add_option("--in", hist_args.in);
    c_hist->add_option("--out", hist_args.out);
    c_hist->add_option("--feature", hist_args.feature)->required()->check(CLI::IsMember({"length", "size"}));
    c_hist->add_option("--exact-exp", hist_args.exact_exp, "Values below 2^N get exact bins")->check(CLI::Range(0, 63));

    StatsArgs stats_args;
    auto* c_stats = app.add_subcommand("stats", "Totals and averages of a histogram");
    c_stats->add_option("--hist", stats_args.hist)->required();
    c_stats->add_option("--feature", stats_args.feature, "Feature for histograms without a header comment");
    c_stats->add_flag("--cdf-table", stats_args.cdf_table, "Also print cumulative percentages at powers of two");

    FitArgs fit_args;
    auto* c_fit = app.add_subcommand("fit", "Fit a mixture to a histogram column by EM");
    c_fit->add_option("--hist", fit_args.hist)->required();
    c_fit->add_option("--feature", fit_args.feature, "Feature for histograms without a header comment");
    c_fit->add_option("--target", fit_args.target)->check(CLI::IsMember({"flows", "packets", "octets"}));
    c_fit->add_option("--uniform", fit_args.cfg.uniform_count);
    c_fit->add_option("--lognormal", fit_args.cfg.lognormal_count);
    c_fit->add_option("--normal", fit_args.cfg.normal_count);
    c_fit->add_option("--pareto", fit_args.cfg.pareto_count);
    c_fit->add_option("--weibull", fit_args.cfg.weibull_count);
    c_fit->add_option("--gamma", fit_args.cfg.gamma_count);
    c_fit->add_option("--max-iters", fit_args.cfg.max_iters);
    c_fit->add_option("--tol", fit_args.cfg.rel_tol, "Relative log-likelihood tolerance");
    c_fit->add_option("--init", fit_args.init, "Initial model JSON");
    c_fit->add_option("--seed", fit_args.seed, "Seed for perturbed restarts");
    c_fit->add_option("--restarts", fit_args.restarts, "Number of EM runs; the best is kept")->check(CLI::PositiveNumber);
    c_fit->add_option("--out", fit_args.out);

    EvalArgs eval_args;
    auto* c_eval = app.add_subcommand("eval", "Evaluate a mixture model");
    c_eval->add_option("--model", eval_args.model)->required();
    c_eval->add_option("--cdf-at", eval_args.cdf_at);
    c_eval->add_option("--pdf-at", eval_args.pdf_at);

    GenerateArgs gen_args;
    auto* c_gen = app.add_subcommand("generate", "Generate synthetic flows from a model set");
    c_gen->add_option("--models", gen_args.models, "Directory with <feature>/<target>.json")->required();
    c_gen->add_option("--class", gen_args.cls, "Traffic class subdirectory, e.g. all");
    c_gen->add_option("--feature", gen_args.feature)->check(CLI::IsMember({"length", "size"}));
    c_gen->add_option("--count", gen_args.cfg.count)->required()->check(CLI::PositiveNumber);
    c_gen->add_option("--seed", gen_args.cfg.seed);
    c_gen->add_option("--min-packet-size", gen_args.cfg.min_packet_size);
    c_gen->add_option("--max-packet-size", gen_args.cfg.max_packet_size);
    c_gen->add_option("--out", gen_args.out);

    PlotArgs plot_args;
    auto* c_plot = app.add_subcommand("plot-data", "CDF/PDF point series for external plotting");
    c_plot->add_option("--hist", plot_args.hist)->required();
    c_plot->add_option("--feature", plot_args.feature, "Feature for histograms without a header comment");
    c_plot->add_option("--out", plot_args.out);
    c_plot->add_option("--models", plot_args.models, "Model directory with <feature>/<target>.json");
    c_plot->add_option("--model-out", plot_args.model_out, "Series of the models on the histogram's x grid");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        std::cerr << app.help();
        return 2;
    }

    auto* sub = app.get_subcommands().front();
    try {
        const std::string name = sub->get_name();
        if (name == "ingest") run_ingest(ingest, g);
        else if (name == "clean") run_clean(clean_args, g);
        else if (name == "merge") run_merge(merge_args, g);
        else if (name == "hist") run_hist(hist_args, g);
        else if (name == "stats") run_stats(stats_args, g);
        else if (name == "fit") run_fit(fit_args, g);
        else if (name == "eval") run_eval(eval_args, g);
        else if (name == "generate") run_generate(gen_args, g);
        else if (name == "plot-data") run_plot(plot_args, g);
    } catch (const std::exception& e) {
        std::cerr << "flowlab " << sub->get_name() << ": " << e.what() << '\n';
        return 1;
    }
    return 0;
}
