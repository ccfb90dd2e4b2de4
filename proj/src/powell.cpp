#include "chbell/powell.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace chbell {

namespace {

constexpr double kGold = 1.618033988749895;
constexpr double kInvGold = 0.6180339887498949;

// Internally minimizes g = -f and remembers the best sample.
class Minimizer {
public:
    Minimizer(const Objective& f, std::size_t dim) : f_(f), scratch_(dim) {}

    double eval(std::span<const double> x) {
        const double g = -f_(x);
        ++evaluations_;
        if (g < best_value_) {
            best_value_ = g;
            best_x_.assign(x.begin(), x.end());
        }
        return g;
    }

    double eval_along(const std::vector<double>& p, const std::vector<double>& d, double t) {
        for (std::size_t i = 0; i < p.size(); ++i)
            scratch_[i] = p[i] + t * d[i];
        return eval(scratch_);
    }

    // Moves p along d to the best point found by bracketing plus golden
    // section; fp is g(p) on entry and on exit.
    void line_minimize(std::vector<double>& p, double& fp, const std::vector<double>& d, const PowellOptions& o) {
        int budget = o.max_line_evaluations;
        double best_t = 0.0;
        double best_g = fp;
        auto probe = [&](double t) {
            const double g = eval_along(p, d, t);
            --budget;
            if (g < best_g) {
                best_g = g;
                best_t = t;
            }
            return g;
        };

        // Bracket a minimum: a < b < c (or reversed) with g(b) <= g(a), g(c).
        double a = 0.0, fa = fp;
        double b = o.initial_step, fb = probe(b);
        if (fb > fa) {
            std::swap(a, b);
            std::swap(fa, fb);
        }
        double c = b + kGold * (b - a), fc = probe(c);
        const double max_span = 2.0 * std::numbers::pi;
        while (fb > fc && budget > 0 && std::abs(c - a) < max_span) {
            a = b;
            fa = fb;
            b = c;
            fb = fc;
            c = b + kGold * (b - a);
            fc = probe(c);
        }

        // Golden section on [lo, hi] around b.
        double lo = std::min(a, c);
        double hi = std::max(a, c);
        double x1 = hi - kInvGold * (hi - lo);
        double x2 = lo + kInvGold * (hi - lo);
        double f1 = budget > 0 ? probe(x1) : std::numeric_limits<double>::infinity();
        double f2 = budget > 0 ? probe(x2) : std::numeric_limits<double>::infinity();
        while (hi - lo > o.line_tolerance && budget > 0) {
            if (f1 < f2) {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - kInvGold * (hi - lo);
                f1 = probe(x1);
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + kInvGold * (hi - lo);
                f2 = probe(x2);
            }
        }

        for (std::size_t i = 0; i < p.size(); ++i)
            p[i] += best_t * d[i];
        fp = best_g;
    }

    std::uint64_t evaluations() const { return evaluations_; }
    double best_value() const { return best_value_; }
    const std::vector<double>& best_x() const { return best_x_; }

private:
    const Objective& f_;
    std::vector<double> scratch_;
    std::vector<double> best_x_;
    double best_value_ = std::numeric_limits<double>::infinity();
    std::uint64_t evaluations_ = 0;
};

bool normalize(std::vector<double>& d) {
    double n = 0.0;
    for (double v : d)
        n += v * v;
    n = std::sqrt(n);
    if (!(n > 1e-12))
        return false;
    for (double& v : d)
        v /= n;
    return true;
}

} // namespace

PowellResult powell_maximize(const Objective& f, std::vector<double> start, const PowellOptions& options) {
    const std::size_t dim = start.size();
    if (dim == 0)
        throw std::invalid_argument("powell_maximize needs at least one dimension");

    Minimizer m(f, dim);
    std::vector<std::vector<double>> dirs(dim, std::vector<double>(dim, 0.0));
    for (std::size_t i = 0; i < dim; ++i)
        dirs[i][i] = 1.0;

    std::vector<double> p = std::move(start);
    double fp = m.eval(p);

    PowellResult result;
    for (int iter = 1; iter <= options.max_iterations; ++iter) {
        result.iterations = iter;
        const std::vector<double> p0 = p;
        const double f0 = fp;
        std::size_t biggest = 0;
        double biggest_drop = 0.0;

        for (std::size_t i = 0; i < dim; ++i) {
            const double before = fp;
            m.line_minimize(p, fp, dirs[i], options);
            if (before - fp > biggest_drop) {
                biggest_drop = before - fp;
                biggest = i;
            }
        }

        if (f0 - fp < options.tolerance) {
            result.converged = true;
            break;
        }

        std::vector<double> extrapolated(dim);
        std::vector<double> new_dir(dim);
        for (std::size_t i = 0; i < dim; ++i) {
            extrapolated[i] = 2.0 * p[i] - p0[i];
            new_dir[i] = p[i] - p0[i];
        }
        const double fe = m.eval(extrapolated);
        if (fe < f0) {
            const double t = 2.0 * (f0 - 2.0 * fp + fe) * (f0 - fp - biggest_drop) * (f0 - fp - biggest_drop) -
                             biggest_drop * (f0 - fe) * (f0 - fe);
            if (t < 0.0 && normalize(new_dir)) {
                m.line_minimize(p, fp, new_dir, options);
                dirs[biggest] = dirs.back();
                dirs.back() = new_dir;
            }
        }
    }

    result.x = m.best_x();
    result.value = -m.best_value();
    result.evaluations = m.evaluations();
    return result;
}

} // namespace chbell
