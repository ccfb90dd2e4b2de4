#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "chbell/accidentals.hpp"
#include "chbell/analysis.hpp"
#include "chbell/cli.hpp"
#include "chbell/report.hpp"
#include "chbell/simulator.hpp"

namespace py = pybind11;
using namespace chbell;

namespace {

CountTable table_from_rows(const std::vector<std::array<std::uint64_t, 4>>& rows) {
    if (rows.size() != kNumSettings)
        throw std::invalid_argument("count table needs four rows (a1b1, a1b2, a2b1, a2b2)");
    CountTable t;
    for (Setting s : kAllSettings) {
        const auto& r = rows[index(s)];
        t[s] = {r[0], r[1], r[2], r[3]};
    }
    return t;
}

std::vector<std::array<std::uint64_t, 4>> rows_of(const CountTable& t) {
    std::vector<std::array<std::uint64_t, 4>> out;
    for (const auto& r : t.rows)
        out.push_back({r.singles_a, r.coincidences, r.singles_b, r.trials});
    return out;
}

py::dict prediction_dict(const PredictionResult& p) {
    py::dict d;
    d["mean_ch"] = p.mean_ch;
    d["mean_ratio"] = p.mean_ratio;
    d["positivity"] = p.positivity;
    d["angles"] = std::array<double, 4>{p.angles.a1, p.angles.a2, p.angles.b1, p.angles.b2};
    d["replicates"] = p.replicates;
    d["runs"] = p.runs;
    return d;
}

SamplingMode sampling_of(const std::string& s) {
    if (s == "per-trial")
        return SamplingMode::per_trial;
    if (s == "aggregated")
        return SamplingMode::aggregated;
    throw std::invalid_argument("sampling must be 'per-trial' or 'aggregated'");
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.attr("__version__") = kVersion;

    m.def(
        "joint_detection_probabilities",
        [](double r, double alpha, double beta) {
            const auto p = joint_detection_probabilities(EntangledState(r), alpha, beta);
            return std::array<double, 4>{p.p_cc, p.p_cn, p.p_nc, p.p_nn};
        },
        py::arg("r"), py::arg("alpha"), py::arg("beta"),
        "(p_cc, p_cn, p_nc, p_nn) for one analyzer pair.");

    m.def(
        "ch_linear",
        [](const std::vector<std::array<std::uint64_t, 4>>& rows, bool averaging) {
            const auto r = ch_linear(table_from_rows(rows), averaging);
            return py::make_tuple(r.ch_linear, r.ch_ratio, r.violated);
        },
        py::arg("rows"), py::arg("averaging") = false,
        "CH metric of a count table given as rows [singles_a, coincidences, singles_b, trials].");

    m.def(
        "run_experiment",
        [](double r, std::array<double, 4> angles, double efficiency, double noise, std::uint64_t partition_size,
           std::uint64_t runs, bool averaging, std::uint64_t seed, const std::string& sampling,
           std::uint64_t replicates) {
            SimConfig c;
            c.state = EntangledState(r);
            c.angles = {angles[0], angles[1], angles[2], angles[3]};
            c.efficiency = efficiency;
            c.noise = noise;
            c.partition_size = partition_size;
            c.runs = runs;
            c.averaging = averaging;
            c.seed = seed;
            c.sampling = sampling_of(sampling);
            py::gil_scoped_release release;
            const auto p = run_replicates(c, replicates);
            py::gil_scoped_acquire acquire;
            return prediction_dict(p);
        },
        py::arg("r") = 0.26, py::arg("angles"), py::arg("efficiency") = 0.75, py::arg("noise") = 0.0,
        py::arg("partition_size") = 10000, py::arg("runs") = 100, py::arg("averaging") = false, py::arg("seed") = 0,
        py::arg("sampling") = "per-trial", py::arg("replicates") = 1);

    m.def(
        "powell_search",
        [](double r, double efficiency, double noise, std::uint64_t partition_size, std::uint64_t runs, bool averaging,
           std::uint64_t restarts, std::uint64_t seed, std::uint64_t replicates) {
            SearchConfig c;
            c.state = EntangledState(r);
            c.efficiency = efficiency;
            c.noise = noise;
            c.partition_size = partition_size;
            c.runs = runs;
            c.averaging = averaging;
            c.restarts = restarts;
            c.seed = seed;
            c.replicates = replicates;
            SearchResult res;
            {
                py::gil_scoped_release release;
                res = powell_search(c);
            }
            auto d = prediction_dict(res.prediction);
            d["best_score"] = res.best_score;
            return d;
        },
        py::arg("r") = 0.26, py::arg("efficiency") = 0.75, py::arg("noise") = 0.0, py::arg("partition_size") = 10000,
        py::arg("runs") = 100, py::arg("averaging") = false, py::arg("restarts") = 1, py::arg("seed") = 0,
        py::arg("replicates") = 10);

    m.def(
        "analyze",
        [](const std::string& path, double window_us, double delay1_us, double delay2_us,
           std::uint64_t partition_size, bool averaging, const std::string& mode) {
            AnalysisParams p;
            p.window_us = window_us;
            p.delays = {delay1_us, delay2_us};
            p.partition_size = partition_size;
            p.averaging = averaging;
            if (mode != "full" && mode != "legacy")
                throw std::invalid_argument("mode must be 'full' or 'legacy'");
            p.mode = mode == "full" ? CountingMode::full : CountingMode::legacy;
            const auto file = load(std::filesystem::path(path));
            const auto pa = partition_analysis(file, p);
            py::dict d;
            d["counts"] = rows_of(pa.whole);
            d["positivity"] = pa.report.positivity;
            d["sigma"] = pa.report.sigma;
            d["positive"] = pa.report.positive;
            d["sufficient"] = pa.report.sufficient;
            d["total"] = pa.report.total;
            d["dropped"] = pa.dropped;
            if (pa.whole.sufficient())
                d["ch_linear"] = ch_linear(pa.whole, averaging).ch_linear;
            return d;
        },
        py::arg("path"), py::arg("window_us") = 2.5, py::arg("delay1_us") = 0.0, py::arg("delay2_us") = 0.0,
        py::arg("partition_size") = 10000, py::arg("averaging") = false, py::arg("mode") = "full");

    m.def(
        "greedy_coincidences",
        [](std::vector<double> a, std::vector<double> b, double window) { return greedy_coincidences(a, b, window); },
        py::arg("a"), py::arg("b"), py::arg("window"), "Earliest-first matches of two ascending time lists.");

    m.def(
        "run_cli",
        [](const std::vector<std::string>& args) {
            std::vector<std::string> full{"chbell"};
            full.insert(full.end(), args.begin(), args.end());
            std::vector<const char*> argv;
            for (const auto& a : full)
                argv.push_back(a.c_str());
            std::ostringstream out, err;
            int code = 0;
            {
                py::gil_scoped_release release;
                code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
            }
            return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"), "Run the command line tool in-process; returns (status, stdout, stderr).");
}
