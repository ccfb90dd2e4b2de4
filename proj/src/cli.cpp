#include "chbell/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "chbell/accidentals.hpp"
#include "chbell/analysis.hpp"
#include "chbell/ingest.hpp"
#include "chbell/report.hpp"
#include "chbell/simulator.hpp"

namespace chbell {

namespace {

namespace fs = std::filesystem;

constexpr const char* kDataDirEnv = "CHBELL_DATA_DIR";

// Optimum of the linear CH metric at r = 0.26, efficiency 0.75 with a1 on
// the minimum-transmission axis.
constexpr AngleSet kDefaultAngles{1.570796, 2.151407, 1.681738, 1.251473};

fs::path resolve_input(const std::string& p) {
    fs::path path(p);
    if (fs::exists(path) || path.is_absolute())
        return path;
    if (const char* dir = std::getenv(kDataDirEnv)) {
        fs::path alt = fs::path(dir) / path;
        if (fs::exists(alt))
            return alt;
    }
    return path;
}

void require_file(const fs::path& p) {
    if (!fs::is_regular_file(p))
        throw std::runtime_error("input file not found: " + p.string());
}

std::vector<double> parse_grid(const std::string& spec) {
    // "a,b,c" or "start:step:stop" (inclusive, tolerant of rounding)
    std::vector<double> out;
    if (spec.find(':') != std::string::npos) {
        std::istringstream in(spec);
        double start = 0, step = 0, stop = 0;
        char c1 = 0, c2 = 0;
        if (!(in >> start >> c1 >> step >> c2 >> stop) || c1 != ':' || c2 != ':' || !(step > 0) || stop < start)
            throw std::invalid_argument("bad grid range '" + spec + "', expected start:step:stop");
        const auto n = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
        for (std::size_t k = 0; k < n; ++k)
            out.push_back(start + static_cast<double>(k) * step);
        return out;
    }
    std::istringstream in(spec);
    std::string tok;
    while (std::getline(in, tok, ',')) {
        std::size_t used = 0;
        double v = std::stod(tok, &used);
        if (used != tok.size())
            throw std::invalid_argument("bad grid value '" + tok + "'");
        out.push_back(v);
    }
    if (out.empty())
        throw std::invalid_argument("empty grid");
    return out;
}

AngleSet parse_angles(const std::string& spec) {
    const auto v = parse_grid(spec);
    if (v.size() != 4)
        throw std::invalid_argument("angles need four values a1,a2,b1,b2");
    return {v[0], v[1], v[2], v[3]};
}

const char* mode_name(CountingMode m) { return m == CountingMode::full ? "full" : "legacy"; }
const char* rule_name(PartitionRule r) { return r == PartitionRule::events ? "events" : "openings"; }
const char* sampling_name(SamplingMode m) { return m == SamplingMode::per_trial ? "per-trial" : "aggregated"; }

Cell optional_cell(const std::optional<double>& v) {
    return v ? Cell(*v) : Cell(std::numeric_limits<double>::quiet_NaN());
}

struct OutputOptions {
    std::string out;
    std::string json;
};

void add_output_options(CLI::App* cmd, OutputOptions& o) {
    cmd->add_option("--out", o.out, "Report path (default: stdout)");
    cmd->add_option("--json", o.json, "Full-precision JSON sidecar (default: <out>.json when --out is given)");
}

void emit(Report& report, const OutputOptions& o, std::ostream& out) {
    std::string json_path = o.json;
    if (json_path.empty() && !o.out.empty())
        json_path = o.out + ".json";
    if (!o.out.empty())
        report.manifest.outputs.push_back(o.out);
    if (!json_path.empty())
        report.manifest.outputs.push_back(json_path);

    if (o.out.empty()) {
        report.write_text(out);
    } else {
        std::ofstream f(o.out, std::ios::trunc);
        if (!f)
            throw std::runtime_error("cannot write report " + o.out);
        report.write_text(f);
    }
    if (!json_path.empty()) {
        std::ofstream f(json_path, std::ios::trunc);
        if (!f)
            throw std::runtime_error("cannot write sidecar " + json_path);
        f << report.to_json().dump(2) << '\n';
    }
}

void add_input(Report& r, const std::string& given, const fs::path& resolved) {
    r.manifest.inputs.push_back({given, sha256_file(resolved)});
}

struct AnalysisOptions {
    AnalysisParams params;
    std::string mode = "full";
    std::string rule = "events";
};

void add_analysis_options(CLI::App* cmd, AnalysisOptions& a, bool with_partition = true) {
    cmd->add_option("--window-us", a.params.window_us, "Opening window (us)")->capture_default_str();
    cmd->add_option("--delay1-us", a.params.delays.delay_1_us, "Side-1 time-of-flight delay (us)")
        ->capture_default_str();
    cmd->add_option("--delay2-us", a.params.delays.delay_2_us, "Side-2 time-of-flight delay (us)")
        ->capture_default_str();
    cmd->add_option("--period-us", a.params.period_us, "Spacing between consecutive openings (us)")
        ->capture_default_str();
    cmd->add_option("--mode", a.mode, "Counting mode")->check(CLI::IsMember({"full", "legacy"}))->capture_default_str();
    cmd->add_flag("--averaging", a.params.averaging, "Singles-rate averaging");
    if (with_partition) {
        cmd->add_option("--partition-size", a.params.partition_size, "Partition size")->capture_default_str();
        cmd->add_option("--partition-rule", a.rule, "events | openings")
            ->check(CLI::IsMember({"events", "openings"}))
            ->capture_default_str();
    }
}

AnalysisParams finish(AnalysisOptions& a) {
    a.params.mode = a.mode == "legacy" ? CountingMode::legacy : CountingMode::full;
    a.params.partition_rule = a.rule == "openings" ? PartitionRule::openings_per_setting : PartitionRule::events;
    a.params.validate();
    return a.params;
}

void record_analysis(Report& r, const AnalysisParams& p) {
    r.manifest.param("counting_mode", std::string(mode_name(p.mode)));
    r.manifest.param("window_us", p.window_us);
    r.manifest.param("delay1_us", p.delays.delay_1_us);
    r.manifest.param("delay2_us", p.delays.delay_2_us);
    r.manifest.param("period_us", p.period_us);
    r.manifest.param("averaging", p.averaging);
    r.manifest.param("partition_size", p.partition_size);
    r.manifest.param("partition_rule", std::string(rule_name(p.partition_rule)));
}

void add_count_table(Report& r, const CountTable& t, const std::string& name) {
    auto& tab = r.table(name, {"setting", "singles_a", "coincidences", "singles_b", "trials"});
    for (Setting s : kAllSettings)
        tab.add({std::string(setting_name(s)), t[s].singles_a, t[s].coincidences, t[s].singles_b, t[s].trials});
}

struct SimOptions {
    double r = 0.26;
    double efficiency = 0.75;
    double noise = 0.0;
    std::uint64_t partition_size = 10000;
    std::uint64_t runs = 100;
    bool averaging = false;
    std::uint64_t seed = 0;
    std::string sampling = "per-trial";
    std::string angles;
};

void add_sim_options(CLI::App* cmd, SimOptions& s, bool with_angles) {
    cmd->add_option("--r", s.r, "Source maximality r in [0, 1]")->capture_default_str();
    cmd->add_option("--efficiency", s.efficiency, "Detection efficiency")->capture_default_str();
    cmd->add_option("--noise", s.noise, "Per-side noise detection probability per trial")->capture_default_str();
    cmd->add_option("--partition-size", s.partition_size, "Trials per setting per run")->capture_default_str();
    cmd->add_option("--runs", s.runs, "Runs (partitions)")->capture_default_str();
    cmd->add_flag("--averaging", s.averaging, "Singles-rate averaging");
    cmd->add_option("--seed", s.seed, "Random seed")->capture_default_str();
    cmd->add_option("--sampling", s.sampling, "per-trial | aggregated")
        ->check(CLI::IsMember({"per-trial", "aggregated"}))
        ->capture_default_str();
    if (with_angles)
        cmd->add_option("--angles", s.angles, "a1,a2,b1,b2 in radians (default: optimum at r=0.26, eff=0.75)");
}

SimConfig finish(const SimOptions& s) {
    SimConfig c;
    c.state = EntangledState(s.r);
    c.angles = s.angles.empty() ? kDefaultAngles : parse_angles(s.angles);
    c.efficiency = s.efficiency;
    c.noise = s.noise;
    c.partition_size = s.partition_size;
    c.runs = s.runs;
    c.averaging = s.averaging;
    c.seed = s.seed;
    c.sampling = s.sampling == "aggregated" ? SamplingMode::aggregated : SamplingMode::per_trial;
    c.validate();
    return c;
}

void record_sim(Report& r, const SimConfig& c) {
    r.manifest.param("r", c.state.r());
    r.manifest.param("efficiency", c.efficiency);
    r.manifest.param("noise", c.noise);
    r.manifest.param("partition_size", c.partition_size);
    r.manifest.param("runs", c.runs);
    r.manifest.param("averaging", c.averaging);
    r.manifest.param("seed", c.seed);
    r.manifest.param("sampling", std::string(sampling_name(c.sampling)));
    r.manifest.param("a1", c.angles.a1);
    r.manifest.param("a2", c.angles.a2);
    r.manifest.param("b1", c.angles.b1);
    r.manifest.param("b2", c.angles.b2);
}

void add_prediction_table(Report& r, const PredictionResult& p) {
    auto& t = r.table("prediction", {"mean_ch", "mean_ratio", "positivity", "a1", "a2", "b1", "b2", "replicates",
                                     "runs"});
    t.add({p.mean_ch, p.mean_ratio, p.positivity, p.angles.a1, p.angles.a2, p.angles.b1, p.angles.b2, p.replicates,
           p.runs});
}

// ---- subcommands ----

struct ExtractCmd {
    std::vector<std::string> inputs;
    std::string output_dir;
    double period_us = 40.0;
    bool no_reinsert = false;
    OutputOptions out;

    void run(std::ostream& os) const {
        fs::create_directories(output_dir);
        Report r;
        r.manifest.subcommand = "extract";
        r.manifest.param("period_us", period_us);
        r.manifest.param("reinsert_openings", !no_reinsert);
        r.manifest.param("output_dir", output_dir);
        auto& t = r.table("files", {"input", "output", "events_in", "openings_in", "openings_added", "events_out"});
        for (const auto& given : inputs) {
            const auto path = resolve_input(given);
            require_file(path);
            add_input(r, given, path);
            auto events = parse_events_file(path);
            std::uint64_t openings = 0;
            for (const auto& e : events)
                openings += e.is_opening();
            std::vector<RawEvent> result;
            if (no_reinsert) {
                result = events;
                std::stable_sort(result.begin(), result.end(),
                                 [](const RawEvent& a, const RawEvent& b) { return a.timetag < b.timetag; });
            } else {
                result = insert_missing_openings(events, period_us);
            }
            const auto out_path = (fs::path(output_dir) / path.filename()).string();
            std::ofstream f(out_path, std::ios::trunc);
            if (!f)
                throw std::runtime_error("cannot write " + out_path);
            write_events(f, result);
            r.manifest.outputs.push_back(out_path);
            t.add({given, out_path, std::uint64_t{events.size()}, openings,
                   std::uint64_t{result.size() - events.size()}, std::uint64_t{result.size()}});
        }
        emit(r, out, os);
    }
};

struct CompileCmd {
    std::vector<std::string> inputs;
    std::string output;
    OutputOptions out;

    void run(std::ostream& os) const {
        Report r;
        r.manifest.subcommand = "compile";
        std::vector<RawEvent> all;
        for (const auto& given : inputs) {
            const auto path = resolve_input(given);
            require_file(path);
            add_input(r, given, path);
            auto events = parse_events_file(path);
            all.insert(all.end(), events.begin(), events.end());
        }
        if (!time_ordered(all))
            throw std::runtime_error("events are not in ascending time order across the inputs (run extract first, "
                                     "and list files in time order)");
        const auto file = compile(all);
        store(file, fs::path(output));
        r.manifest.outputs.push_back(output);

        auto& t = r.table("summary", {"detection_events", "orphan_detections", "trials_a1b1", "trials_a1b2",
                                      "trials_a2b1", "trials_a2b2"});
        t.add({std::uint64_t{file.num_detection_events()}, std::uint64_t{file.orphan_detections()},
               std::uint64_t{file.total_trials[0]}, std::uint64_t{file.total_trials[1]},
               std::uint64_t{file.total_trials[2]}, std::uint64_t{file.total_trials[3]}});
        emit(r, out, os);
    }
};

CompiledFile load_input(Report& r, const std::string& given) {
    const auto path = resolve_input(given);
    require_file(path);
    add_input(r, given, path);
    return load(path);
}

struct AnalyzeCmd {
    std::string input;
    AnalysisOptions analysis;
    bool list_partitions = false;
    OutputOptions out;

    void run(std::ostream& os) {
        Report r;
        r.manifest.subcommand = "analyze";
        const auto params = finish(analysis);
        record_analysis(r, params);
        const auto file = load_input(r, input);
        const auto pa = partition_analysis(file, params);

        add_count_table(r, pa.whole, "counts");
        auto& m = r.table("metrics", {"metric", "value"});
        if (pa.whole.sufficient()) {
            const auto ch = ch_linear(pa.whole, params.averaging);
            m.add({std::string("ch_linear"), ch.ch_linear});
            m.add({std::string("ch_ratio"), ch.ch_ratio});
            m.add({std::string("violated"), ch.violated});
        } else {
            m.add({std::string("ch_linear"), std::string("insufficient")});
        }
        m.add({std::string("positivity"), optional_cell(pa.report.positivity)});
        m.add({std::string("positive_partitions"), pa.report.positive});
        m.add({std::string("sufficient_partitions"), pa.report.sufficient});
        m.add({std::string("total_partitions"), pa.report.total});
        m.add({std::string("sigma"), optional_cell(pa.report.sigma)});
        m.add({std::string("detections"), pa.detections});
        m.add({std::string("dropped_out_of_window"), pa.dropped});

        if (list_partitions) {
            auto& t = r.table("partitions", {"index", "first_event", "end_event", "sufficient", "ch_linear", "ch_ratio"});
            for (std::size_t k = 0; k < pa.partitions.size(); ++k) {
                const auto& p = pa.partitions[k];
                const double nan = std::numeric_limits<double>::quiet_NaN();
                t.add({std::uint64_t{k}, std::uint64_t{p.first_event}, std::uint64_t{p.end_event},
                       p.result.has_value(), p.result ? p.result->ch_linear : nan,
                       p.result ? p.result->ch_ratio : nan});
            }
        }
        emit(r, out, os);
    }
};

struct ScanCmd {
    std::string input;
    std::string axis;
    std::string grid;
    std::string grid1;
    std::string grid2;
    std::string objective = "ch";
    double knee_ns = 500.0;
    double slope_fraction = 0.1;
    double gate_us = 2.0;
    AnalysisOptions analysis;
    OutputOptions out;

    void run(std::ostream& os) {
        Report r;
        r.manifest.subcommand = "scan";
        r.manifest.param("axis", axis);
        const auto params = finish(analysis);
        record_analysis(r, params);
        const auto file = load_input(r, input);

        if (axis == "window" || axis == "partition") {
            if (grid.empty())
                throw std::invalid_argument("--grid is required for the " + axis + " axis");
            r.manifest.param("grid", grid);
            const auto values = parse_grid(grid);
            std::vector<ScanRow> rows;
            if (axis == "window") {
                rows = scan_windows(file, params, values);
            } else {
                std::vector<std::uint64_t> sizes;
                for (double v : values) {
                    if (!(v >= 1.0) || v != std::floor(v))
                        throw std::invalid_argument("partition sizes must be positive integers");
                    sizes.push_back(static_cast<std::uint64_t>(v));
                }
                rows = scan_partitions(file, params, sizes);
            }
            auto& t = r.table(axis, {axis == "window" ? "window_us" : "partition_size", "positivity", "positive",
                                     "sufficient", "insufficient", "total", "sigma", "whole_ch"});
            for (const auto& row : rows) {
                t.add({row.value, optional_cell(row.report.positivity), row.report.positive, row.report.sufficient,
                       row.report.total - row.report.sufficient, row.report.total, optional_cell(row.report.sigma),
                       row.whole_ch});
            }
        } else if (axis == "delay") {
            if (grid1.empty() || grid2.empty())
                throw std::invalid_argument("--grid1 and --grid2 are required for the delay axis");
            r.manifest.param("grid1", grid1);
            r.manifest.param("grid2", grid2);
            r.manifest.param("objective", objective);
            const DelayGrid g{parse_grid(grid1), parse_grid(grid2)};
            const auto scan = scan_delays(file, params, g,
                                          objective == "coincidences" ? DelayObjective::coincidences
                                                                      : DelayObjective::ch_linear);
            auto& best = r.table("best", {"delay1_us", "delay2_us", "metric"});
            best.add({scan.best.delay_1_us, scan.best.delay_2_us, scan.best_metric});
            auto& t = r.table("surface", {"delay1_us", "delay2_us", "metric"});
            for (const auto& pt : scan.surface)
                t.add({pt.delay_1_us, pt.delay_2_us, pt.metric});
        } else {
            if (grid.empty())
                throw std::invalid_argument("--grid (window sizes in ns) is required for the coincidence-window axis");
            r.manifest.param("grid", grid);
            r.manifest.param("knee_ns", knee_ns);
            r.manifest.param("slope_fraction", slope_fraction);
            r.manifest.param("gate_us", gate_us);
            CurveOptions opt;
            opt.knee_ns = knee_ns;
            opt.slope_fraction = slope_fraction;
            opt.gate_us = gate_us;
            opt.period_us = params.period_us;
            opt.averaging = params.averaging;
            const auto windows = parse_grid(grid);
            const auto curve = scan_curve(file, params.delays, windows, opt);
            auto& t = r.table("curve", {"window_ns", "C_a1b1", "C_a1b2", "C_a2b1", "C_a2b2", "ch_linear", "dC_a1b1",
                                        "dC_a1b2", "dC_a2b1", "dC_a2b2"});
            for (std::size_t k = 0; k < windows.size(); ++k) {
                t.add({windows[k], curve.counts[0][k], curve.counts[1][k], curve.counts[2][k], curve.counts[3][k],
                       curve.ch[k], curve.slopes[0][k], curve.slopes[1][k], curve.slopes[2][k], curve.slopes[3][k]});
            }
            auto& v = r.table("verdict", {"accidentals_negligible"});
            v.add({curve.accidentals_negligible});
        }
        emit(r, out, os);
    }
};

struct HistogramCmd {
    std::string input;
    int side = 1;
    bool include_empty = false;
    AnalysisOptions analysis;
    OutputOptions out;

    void run(std::ostream& os) {
        Report r;
        r.manifest.subcommand = "histogram";
        const auto params = finish(analysis);
        record_analysis(r, params);
        r.manifest.param("side", std::int64_t{side});
        r.manifest.param("include_empty_openings", include_empty);
        const auto file = load_input(r, input);
        const auto hist = histogram_per_trial(file, params, side == 1 ? Side::one : Side::two, include_empty);
        auto& t = r.table("histogram", {"detections", "trials"});
        const std::uint32_t max = hist.empty() ? 0 : hist.rbegin()->first;
        for (std::uint32_t k = 0; k <= max && !hist.empty(); ++k) {
            auto it = hist.find(k);
            t.add({std::uint64_t{k}, it == hist.end() ? std::uint64_t{0} : it->second});
        }
        emit(r, out, os);
    }
};

struct SimulateCmd {
    SimOptions sim;
    std::uint64_t replicates = 1;
    OutputOptions out;

    void run(std::ostream& os) const {
        Report r;
        r.manifest.subcommand = "simulate";
        const auto c = finish(sim);
        record_sim(r, c);
        r.manifest.param("replicates", replicates);
        add_prediction_table(r, run_replicates(c, replicates));
        emit(r, out, os);
    }
};

struct SearchCmd {
    SimOptions sim;
    std::uint64_t restarts = 4;
    std::uint64_t replicates = 10;
    double fixed_a1 = std::numbers::pi / 2.0;
    int max_iterations = 50;
    OutputOptions out;

    void run(std::ostream& os) const {
        Report r;
        r.manifest.subcommand = "search";
        SearchConfig c;
        c.state = EntangledState(sim.r);
        c.efficiency = sim.efficiency;
        c.noise = sim.noise;
        c.partition_size = sim.partition_size;
        c.runs = sim.runs;
        c.averaging = sim.averaging;
        c.restarts = restarts;
        c.seed = sim.seed;
        c.fixed_a1 = fixed_a1;
        c.replicates = replicates;
        c.powell.max_iterations = max_iterations;
        c.sampling = sim.sampling == "per-trial" ? SamplingMode::per_trial : SamplingMode::aggregated;

        r.manifest.param("r", c.state.r());
        r.manifest.param("efficiency", c.efficiency);
        r.manifest.param("noise", c.noise);
        r.manifest.param("partition_size", c.partition_size);
        r.manifest.param("runs", c.runs);
        r.manifest.param("averaging", c.averaging);
        r.manifest.param("restarts", c.restarts);
        r.manifest.param("seed", c.seed);
        r.manifest.param("fixed_a1", c.fixed_a1);
        r.manifest.param("replicates", c.replicates);
        r.manifest.param("max_iterations", std::int64_t{max_iterations});
        r.manifest.param("sampling", std::string(sampling_name(c.sampling)));

        const auto res = powell_search(c);
        add_prediction_table(r, res.prediction);
        auto& t = r.table("restarts", {"restart", "start_score", "best_score", "a2", "b1", "b2", "iterations",
                                       "evaluations"});
        for (std::size_t i = 0; i < res.restarts.size(); ++i) {
            const auto& tr = res.restarts[i];
            t.add({std::uint64_t{i}, tr.start_score, tr.best_score, tr.best.a2, tr.best.b1, tr.best.b2,
                   std::int64_t{tr.iterations}, tr.evaluations});
        }
        emit(r, out, os);
    }
};

struct SynthCmd {
    SimOptions sim;
    SynthTiming timing;
    std::int64_t trials = -1;
    std::string order = "cycle";
    std::string output;
    OutputOptions out;

    void run(std::ostream& os) {
        Report r;
        r.manifest.subcommand = "synth";
        const auto c = finish(sim);
        if (trials >= 0)
            timing.trials = static_cast<std::uint64_t>(trials);
        timing.order = order == "random" ? SettingOrder::random
                       : order == "blocks" ? SettingOrder::blocks
                                           : SettingOrder::cycle;
        record_sim(r, c);
        r.manifest.param("trials", timing.trials ? Cell(*timing.trials) : Cell(std::string("runs*partition*4")));
        r.manifest.param("period_us", timing.period_us);
        r.manifest.param("gate_us", timing.gate_us);
        r.manifest.param("delay1_us", timing.delay_1_us);
        r.manifest.param("delay2_us", timing.delay_2_us);
        r.manifest.param("order", order);
        r.manifest.param("block_length", timing.block_length);
        r.manifest.param("mean_pairs", timing.mean_pairs);
        r.manifest.param("jitter_ns", timing.jitter_ns);

        const auto events = emit_synthetic_events(c, timing);
        std::ofstream f(output, std::ios::trunc);
        if (!f)
            throw std::runtime_error("cannot write " + output);
        write_events(f, events);
        r.manifest.outputs.push_back(output);

        std::uint64_t openings = 0;
        for (const auto& e : events)
            openings += e.is_opening();
        auto& t = r.table("summary", {"events", "openings", "detections"});
        t.add({std::uint64_t{events.size()}, openings, std::uint64_t{events.size() - openings}});
        emit(r, out, os);
    }
};

} // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Clauser-Horne analysis of time-tagged EPRB event data, and quantum prediction by simulation",
                 "chbell"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    ExtractCmd extract;
    auto* ex = app.add_subcommand("extract", "Reinsert missing openings and time-order raw event text files");
    ex->add_option("inputs", extract.inputs, "Raw event text files")->required();
    ex->add_option("--output-dir", extract.output_dir, "Directory for extracted files")->required();
    ex->add_option("--period-us", extract.period_us, "Opening period (us)")->capture_default_str();
    ex->add_flag("--no-reinsert", extract.no_reinsert, "Only sort; do not add the missing openings");
    add_output_options(ex, extract.out);

    CompileCmd comp;
    auto* co = app.add_subcommand("compile", "Compile event text files (in time order) into one binary file");
    co->add_option("inputs", comp.inputs, "Extracted event text files")->required();
    co->add_option("-o,--output", comp.output, "Compiled binary file")->required();
    add_output_options(co, comp.out);

    AnalyzeCmd analyze;
    auto* an = app.add_subcommand("analyze", "Counts, CH metrics and partition positivity");
    an->add_option("input", analyze.input, "Compiled binary file")->required();
    add_analysis_options(an, analyze.analysis);
    an->add_flag("--list-partitions", analyze.list_partitions, "Add a per-partition table");
    add_output_options(an, analyze.out);

    ScanCmd scan;
    auto* sc = app.add_subcommand("scan", "Parameter scans over window, delay, partition size or coincidence window");
    sc->add_option("input", scan.input, "Compiled binary file")->required();
    sc->add_option("--axis", scan.axis, "window | delay | partition | coincidence-window")
        ->required()
        ->check(CLI::IsMember({"window", "delay", "partition", "coincidence-window"}));
    sc->add_option("--grid", scan.grid, "Values 'a,b,c' or range 'start:step:stop'");
    sc->add_option("--grid1", scan.grid1, "Side-1 delays (us) for the delay axis");
    sc->add_option("--grid2", scan.grid2, "Side-2 delays (us) for the delay axis");
    sc->add_option("--objective", scan.objective, "ch | coincidences (delay axis)")
        ->check(CLI::IsMember({"ch", "coincidences"}))
        ->capture_default_str();
    sc->add_option("--knee-ns", scan.knee_ns, "Knee for the accidentals verdict (ns)")->capture_default_str();
    sc->add_option("--slope-fraction", scan.slope_fraction, "Negligible slope as a fraction of C/W")
        ->capture_default_str();
    sc->add_option("--gate-us", scan.gate_us, "Opening duration used to select events (us)")->capture_default_str();
    add_analysis_options(sc, scan.analysis);
    add_output_options(sc, scan.out);

    HistogramCmd hist;
    auto* hi = app.add_subcommand("histogram", "Detections-per-trial histogram for one side");
    hi->add_option("input", hist.input, "Compiled binary file")->required();
    hi->add_option("--side", hist.side, "1 or 2")->check(CLI::IsMember({1, 2}))->capture_default_str();
    hi->add_flag("--include-empty", hist.include_empty, "Count every opening, including ones with no detections");
    add_analysis_options(hi, hist.analysis, false);
    add_output_options(hi, hist.out);

    SimulateCmd simulate;
    auto* si = app.add_subcommand("simulate", "Quantum prediction at fixed angles");
    add_sim_options(si, simulate.sim, true);
    si->add_option("--replicates", simulate.replicates, "Independent replicate experiments")->capture_default_str();
    add_output_options(si, simulate.out);

    SearchCmd search;
    search.sim.sampling = "aggregated";
    auto* se = app.add_subcommand("search", "Powell search of the angle space for the maximal CH metric");
    add_sim_options(se, search.sim, false);
    se->add_option("--restarts", search.restarts, "Random starting points")->capture_default_str();
    se->add_option("--replicates", search.replicates, "Replicates for the reported metrics")->capture_default_str();
    se->add_option("--fixed-a1", search.fixed_a1, "Pinned a1 (radians)")->capture_default_str();
    se->add_option("--max-iterations", search.max_iterations, "Powell iterations per restart")->capture_default_str();
    add_output_options(se, search.out);

    SynthCmd synth;
    auto* sy = app.add_subcommand("synth", "Write a synthetic event text file from the quantum model");
    add_sim_options(sy, synth.sim, true);
    sy->add_option("--trials", synth.trials, "Total openings (default: runs * partition-size * 4)");
    sy->add_option("--period-us", synth.timing.period_us, "Opening period (us)")->capture_default_str();
    sy->add_option("--gate-us", synth.timing.gate_us, "Opening duration (us)")->capture_default_str();
    sy->add_option("--delay1-us", synth.timing.delay_1_us, "Injected side-1 delay (us)")->capture_default_str();
    sy->add_option("--delay2-us", synth.timing.delay_2_us, "Injected side-2 delay (us)")->capture_default_str();
    sy->add_option("--order", synth.order, "cycle | random | blocks")
        ->check(CLI::IsMember({"cycle", "random", "blocks"}))
        ->capture_default_str();
    sy->add_option("--block-length", synth.timing.block_length, "Openings per block")->capture_default_str();
    sy->add_option("--mean-pairs", synth.timing.mean_pairs, "Poisson mean pair emissions per trial (0 = exactly one)")
        ->capture_default_str();
    sy->add_option("--jitter-ns", synth.timing.jitter_ns, "Gaussian detection jitter (ns)")->capture_default_str();
    sy->add_option("-o,--output", synth.output, "Event text file")->required();
    add_output_options(sy, synth.out);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        if (*ex)
            extract.run(out);
        else if (*co)
            comp.run(out);
        else if (*an)
            analyze.run(out);
        else if (*sc)
            scan.run(out);
        else if (*hi)
            hist.run(out);
        else if (*si)
            simulate.run(out);
        else if (*se)
            search.run(out);
        else if (*sy)
            synth.run(out);
    } catch (const std::exception& e) {
        err << "chbell: error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

} // namespace chbell
