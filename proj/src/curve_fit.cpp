#include "pgrtb/curve_fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include <Eigen/Dense>

#include "pgrtb/errors.hpp"

namespace pgrtb {

namespace {

std::vector<Point> sorted_by_x(std::span<const Point> points) {
    std::vector<Point> out(points.begin(), points.end());
    for (const auto& p : out) {
        if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
            throw FitError("curve fit: non-finite point");
        }
    }
    std::stable_sort(out.begin(), out.end(), [](const Point& a, const Point& b) { return a.x < b.x; });
    return out;
}

std::size_t distinct_x(const std::vector<Point>& sorted) {
    std::size_t d = 0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        if (i == 0 || sorted[i].x != sorted[i - 1].x) ++d;
    }
    return d;
}

double rmse_of(const FittedCurve& curve, std::span<const Point> points) {
    double ss = 0.0;
    for (const auto& p : points) {
        const double r = p.y - curve(p.x);
        ss += r * r;
    }
    return std::sqrt(ss / static_cast<double>(points.size()));
}

double median(std::vector<double> v) {
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    const double upper = v[mid];
    if (v.size() % 2 == 1) {
        return upper;
    }
    const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lower + upper);
}

double logistic(double z) {
    return 1.0 / (1.0 + std::exp(-z));
}

struct SigmoidParams {
    double a = 0.0;
    double b = 0.0;
    double c = 0.0;
    double d = 0.0;
    double sse = std::numeric_limits<double>::infinity();
};

// Best (a, d) for fixed (b, c): ordinary least squares on [logistic, 1].
SigmoidParams solve_linear_part(const std::vector<Point>& pts, double b, double c) {
    SigmoidParams out;
    out.b = b;
    out.c = c;
    const double n = static_cast<double>(pts.size());
    double ms = 0.0;
    double my = 0.0;
    for (const auto& p : pts) {
        ms += logistic(b * (p.x - c));
        my += p.y;
    }
    ms /= n;
    my /= n;
    double sxx = 0.0;
    double sxy = 0.0;
    for (const auto& p : pts) {
        const double s = logistic(b * (p.x - c)) - ms;
        sxx += s * s;
        sxy += s * (p.y - my);
    }
    if (!(sxx > 1e-14 * n)) {
        return out;
    }
    out.a = sxy / sxx;
    out.d = my - out.a * ms;
    double sse = 0.0;
    for (const auto& p : pts) {
        const double r = p.y - (out.a * logistic(b * (p.x - c)) + out.d);
        sse += r * r;
    }
    out.sse = sse;
    return out;
}

}  // namespace

const char* to_string(FitMethod method) {
    switch (method) {
        case FitMethod::lowess: return "lowess";
        case FitMethod::polynomial: return "polynomial";
        case FitMethod::sigmoid: return "sigmoid";
    }
    return "unknown";
}

FitMethod fit_method_from_string(const std::string& name) {
    if (name == "lowess") return FitMethod::lowess;
    if (name == "polynomial") return FitMethod::polynomial;
    if (name == "sigmoid") return FitMethod::sigmoid;
    throw ArgumentError("unknown fit method '" + name + "'");
}

double FittedCurve::operator()(double x) const {
    x = std::clamp(x, x_min, x_max);
    switch (method) {
        case FitMethod::lowess: {
            if (knots.size() == 1 || x <= knots.front().x) return knots.front().y;
            if (x >= knots.back().x) return knots.back().y;
            const auto it = std::upper_bound(knots.begin(), knots.end(), x,
                                             [](double v, const Point& k) { return v < k.x; });
            const Point& hi = *it;
            const Point& lo = *(it - 1);
            const double w = (x - lo.x) / (hi.x - lo.x);
            return lo.y + w * (hi.y - lo.y);
        }
        case FitMethod::polynomial: {
            const double span = x_max - x_min;
            const double t = span > 0.0 ? (2.0 * x - (x_min + x_max)) / span : 0.0;
            double v = 0.0;
            for (auto k = coefficients.size(); k-- > 0;) {
                v = v * t + coefficients[k];
            }
            return v;
        }
        case FitMethod::sigmoid:
            return coefficients[0] * logistic(coefficients[1] * (x - coefficients[2])) + coefficients[3];
    }
    return 0.0;
}

FittedCurve constant_curve(std::span<const Point> points) {
    if (points.empty()) {
        throw FitError("constant_curve: no points");
    }
    FittedCurve c;
    c.method = FitMethod::polynomial;
    double sum = 0.0;
    double lo = points.front().x;
    double hi = points.front().x;
    for (const auto& p : points) {
        sum += p.y;
        lo = std::min(lo, p.x);
        hi = std::max(hi, p.x);
    }
    c.coefficients = {sum / static_cast<double>(points.size())};
    c.x_min = lo;
    c.x_max = hi;
    c.rmse = rmse_of(c, points);
    return c;
}

FittedCurve lowess(std::span<const Point> points, double fraction, int iterations) {
    if (points.size() < 3) {
        throw FitError("lowess needs at least 3 points");
    }
    if (!(fraction > 0.0 && fraction <= 1.0) || iterations < 0) {
        throw FitError("lowess needs fraction in (0, 1] and iterations >= 0");
    }
    const auto pts = sorted_by_x(points);
    const std::size_t n = pts.size();
    if (distinct_x(pts) < 2) {
        throw FitError("lowess needs at least two distinct x values");
    }
    const double range = pts.back().x - pts.front().x;
    const auto ns = std::clamp<std::size_t>(
        static_cast<std::size_t>(fraction * static_cast<double>(n) + 1e-7), 2, n);

    std::vector<double> fitted(n, 0.0);
    std::vector<double> robustness(n, 1.0);
    std::vector<double> residuals(n, 0.0);

    for (int pass = 0; pass <= iterations; ++pass) {
        std::size_t left = 0;
        std::size_t right = ns;  // window is [left, right)
        for (std::size_t i = 0; i < n; ++i) {
            const double xi = pts[i].x;
            while (right < n && xi - pts[left].x > pts[right].x - xi) {
                ++left;
                ++right;
            }
            const double h = std::max(xi - pts[left].x, pts[right - 1].x - xi);
            const double h_hi = 0.999 * h;
            const double h_lo = 0.001 * h;
            double sw = 0.0;
            double swx = 0.0;
            double swy = 0.0;
            std::vector<std::pair<std::size_t, double>> weights;
            weights.reserve(right - left);
            // Points tied with the window edge are included, as in the classic routine.
            std::size_t lo_j = left;
            while (lo_j > 0 && pts[lo_j - 1].x == pts[left].x) --lo_j;
            std::size_t hi_j = right;
            while (hi_j < n && pts[hi_j].x == pts[right - 1].x) ++hi_j;
            for (std::size_t j = lo_j; j < hi_j; ++j) {
                const double r = std::abs(pts[j].x - xi);
                double w = 0.0;
                if (h <= 0.0 || r <= h_lo) {
                    w = 1.0;
                } else if (r <= h_hi) {
                    const double q = r / h;
                    const double t = 1.0 - q * q * q;
                    w = t * t * t;
                }
                w *= robustness[j];
                if (w > 0.0) {
                    weights.emplace_back(j, w);
                    sw += w;
                    swx += w * pts[j].x;
                    swy += w * pts[j].y;
                }
            }
            if (!(sw > 0.0)) {
                fitted[i] = pts[i].y;
                continue;
            }
            const double xbar = swx / sw;
            const double ybar = swy / sw;
            double sxx = 0.0;
            double sxy = 0.0;
            for (const auto& [j, w] : weights) {
                const double dx = pts[j].x - xbar;
                sxx += w * dx * dx;
                sxy += w * dx * (pts[j].y - ybar);
            }
            const double spread = std::sqrt(sxx / sw);
            if (spread > 0.001 * range) {
                fitted[i] = ybar + (sxy / sxx) * (xi - xbar);
            } else {
                fitted[i] = ybar;
            }
        }
        if (pass == iterations) {
            break;
        }
        std::vector<double> abs_res(n);
        double mean_abs = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            residuals[i] = pts[i].y - fitted[i];
            abs_res[i] = std::abs(residuals[i]);
            mean_abs += abs_res[i];
        }
        mean_abs /= static_cast<double>(n);
        const double cmad = 6.0 * median(abs_res);
        if (cmad < 1e-7 * mean_abs) {
            // More than half the residuals vanish: anything off the fit is an outlier.
            if (mean_abs == 0.0) {
                break;
            }
            for (std::size_t i = 0; i < n; ++i) {
                robustness[i] = abs_res[i] <= 1e-7 * mean_abs ? 1.0 : 0.0;
            }
            continue;
        }
        for (std::size_t i = 0; i < n; ++i) {
            const double u = abs_res[i] / cmad;
            if (u <= 0.001) {
                robustness[i] = 1.0;
            } else if (u <= 0.999) {
                const double t = 1.0 - u * u;
                robustness[i] = t * t;
            } else {
                robustness[i] = 0.0;
            }
        }
    }

    FittedCurve curve;
    curve.method = FitMethod::lowess;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        double sum = 0.0;
        while (j < n && pts[j].x == pts[i].x) {
            sum += fitted[j];
            ++j;
        }
        curve.knots.push_back({pts[i].x, sum / static_cast<double>(j - i)});
        i = j;
    }
    curve.x_min = pts.front().x;
    curve.x_max = pts.back().x;
    curve.rmse = rmse_of(curve, pts);
    return curve;
}

FittedCurve polynomial_fit(std::span<const Point> points, int degree) {
    if (points.empty() || degree < 0) {
        throw FitError("polynomial_fit needs points and degree >= 0");
    }
    const auto pts = sorted_by_x(points);
    const auto d = static_cast<int>(distinct_x(pts));
    if (degree > d - 1) {
        throw FitError("polynomial_fit: degree exceeds distinct x values - 1");
    }
    FittedCurve curve;
    curve.method = FitMethod::polynomial;
    curve.x_min = pts.front().x;
    curve.x_max = pts.back().x;
    const double span = curve.x_max - curve.x_min;
    const auto n = static_cast<Eigen::Index>(pts.size());
    Eigen::MatrixXd design(n, degree + 1);
    Eigen::VectorXd target(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& p = pts[static_cast<std::size_t>(i)];
        const double t = span > 0.0 ? (2.0 * p.x - (curve.x_min + curve.x_max)) / span : 0.0;
        double power = 1.0;
        for (int k = 0; k <= degree; ++k) {
            design(i, k) = power;
            power *= t;
        }
        target(i) = p.y;
    }
    const Eigen::VectorXd coef = design.colPivHouseholderQr().solve(target);
    curve.coefficients.assign(coef.data(), coef.data() + coef.size());
    curve.rmse = rmse_of(curve, pts);
    return curve;
}

FittedCurve sigmoid_fit(std::span<const Point> points) {
    const auto pts = sorted_by_x(points);
    if (pts.size() < 4 || distinct_x(pts) < 3) {
        throw FitError("sigmoid_fit needs at least 4 points over 3 distinct x values");
    }
    const double lo = pts.front().x;
    const double hi = pts.back().x;
    const double range = hi - lo;

    SigmoidParams best;
    constexpr int kSlopes = 25;
    constexpr int kCenters = 41;
    for (int sign : {1, -1}) {
        for (int i = 0; i < kSlopes; ++i) {
            const double b = sign * std::pow(10.0, -1.0 + 3.0 * i / (kSlopes - 1)) / range;
            for (int j = 0; j < kCenters; ++j) {
                const double c = lo - range + 3.0 * range * j / (kCenters - 1);
                const auto cand = solve_linear_part(pts, b, c);
                if (cand.sse < best.sse) best = cand;
            }
        }
    }
    if (!std::isfinite(best.sse)) {
        throw FitError("sigmoid_fit: no usable parameters");
    }
    double step_b = std::abs(best.b) * 0.25;
    double step_c = range * 0.05;
    for (int iter = 0; iter < 200 && (step_b > 1e-12 || step_c > 1e-12 * range); ++iter) {
        bool improved = false;
        for (const auto& [db, dc] : {std::pair{step_b, 0.0}, std::pair{-step_b, 0.0},
                                     std::pair{0.0, step_c}, std::pair{0.0, -step_c}}) {
            const auto cand = solve_linear_part(pts, best.b + db, best.c + dc);
            if (cand.sse < best.sse) {
                best = cand;
                improved = true;
            }
        }
        if (!improved) {
            step_b *= 0.5;
            step_c *= 0.5;
        }
    }
    FittedCurve curve;
    curve.method = FitMethod::sigmoid;
    curve.coefficients = {best.a, best.b, best.c, best.d};
    curve.x_min = lo;
    curve.x_max = hi;
    curve.rmse = rmse_of(curve, pts);
    return curve;
}

FittedCurve fit_best(std::span<const Point> points, const FitOptions& options) {
    if (points.empty()) {
        throw FitError("fit_best: no points");
    }
    const auto pts = sorted_by_x(points);
    const auto d = distinct_x(pts);
    if (d < 2) {
        return constant_curve(pts);
    }
    const int degree = std::min<int>(options.polynomial_degree, static_cast<int>(d) - 1);
    auto try_fit = [&](FitMethod m) -> std::optional<FittedCurve> {
        try {
            switch (m) {
                case FitMethod::lowess:
                    return lowess(pts, options.lowess_fraction, options.lowess_iterations);
                case FitMethod::polynomial:
                    return polynomial_fit(pts, degree);
                case FitMethod::sigmoid:
                    return sigmoid_fit(pts);
            }
        } catch (const FitError&) {
        }
        return std::nullopt;
    };
    if (options.method) {
        if (auto c = try_fit(*options.method)) return *c;
        return constant_curve(pts);
    }
    std::optional<FittedCurve> best;
    for (FitMethod m : {FitMethod::lowess, FitMethod::polynomial, FitMethod::sigmoid}) {
        auto c = try_fit(m);
        if (c && (!best || c->rmse < best->rmse)) {
            best = std::move(c);
        }
    }
    return best ? *best : constant_curve(pts);
}

AuctionSummary AuctionSummary::from_bids(std::string id, std::optional<std::int64_t> hour,
                                         std::vector<double> bids) {
    if (bids.empty()) {
        throw ArgumentError("auction '" + id + "' has no bids");
    }
    std::sort(bids.begin(), bids.end(), std::greater<>());
    return AuctionSummary{std::move(id), hour, std::move(bids)};
}

PaymentFit fit_phi_psi(std::span<const AuctionSummary> auctions, const FitOptions& options) {
    if (auctions.empty()) {
        throw FitError("fit_phi_psi: empty auction log");
    }
    constexpr std::int64_t kNoHour = std::numeric_limits<std::int64_t>::min();
    std::map<std::pair<std::int64_t, int>, std::vector<double>> buckets;
    std::map<int, std::vector<double>> by_competition;
    for (const auto& a : auctions) {
        if (a.competition() < 2) {
            throw FitError("fit_phi_psi: auction '" + a.auction_id + "' has fewer than 2 bids");
        }
        buckets[{a.hour.value_or(kNoHour), a.competition()}].push_back(a.payment());
        by_competition[a.competition()].push_back(a.payment());
    }

    auto mean_std = [](const std::vector<double>& v) {
        const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
        double ss = 0.0;
        for (double x : v) ss += (x - m) * (x - m);
        const double s = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
        return std::pair{m, s};
    };

    PaymentFit fit;
    for (const auto& [key, payments] : buckets) {
        const auto [m, s] = mean_std(payments);
        const auto xi = static_cast<double>(key.second);
        fit.phi_points.push_back({xi, m});
        if (payments.size() >= 2) {
            fit.psi_points.push_back({xi, s});
        }
    }
    if (fit.psi_points.empty()) {
        for (const auto& [k, payments] : by_competition) {
            if (payments.size() >= 2) {
                fit.psi_points.push_back({static_cast<double>(k), mean_std(payments).second});
            }
        }
    }
    if (fit.psi_points.empty()) {
        for (const auto& p : fit.phi_points) {
            fit.psi_points.push_back({p.x, 0.0});
        }
    }
    fit.phi = fit_best(fit.phi_points, options);
    fit.psi = fit_best(fit.psi_points, options);
    return fit;
}

double estimate_pi(std::span<const AuctionSummary> auctions) {
    if (auctions.empty()) {
        throw ArgumentError("estimate_pi: empty auction log");
    }
    constexpr std::int64_t kNoHour = std::numeric_limits<std::int64_t>::min();
    std::map<std::int64_t, std::pair<double, std::size_t>> hourly;
    for (const auto& a : auctions) {
        auto& [sum, count] = hourly[a.hour.value_or(kNoHour)];
        for (double b : a.bids) {
            sum += b;
            ++count;
        }
    }
    double best = 0.0;
    for (const auto& [hour, acc] : hourly) {
        if (acc.second > 0) {
            best = std::max(best, acc.first / static_cast<double>(acc.second));
        }
    }
    return best;
}

double CurvePayments::mean_payment(double xi) const {
    return std::max(0.0, phi_(xi));
}

double CurvePayments::payment_std(double xi) const {
    return std::max(0.0, psi_(xi));
}

}  // namespace pgrtb
