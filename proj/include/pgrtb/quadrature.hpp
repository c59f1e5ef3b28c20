#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <queue>
#include <vector>

namespace pgrtb {

// Two integrals over the same interval, sharing integrand evaluations.
struct PairIntegral {
    double first = 0.0;
    double second = 0.0;
    double error = 0.0;  // max of the two absolute error estimates
    int intervals = 0;
};

namespace detail {

// Gauss-Kronrod 7/15 abscissae and weights on [-1, 1].
inline constexpr std::array<double, 8> kKronrodNodes{
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0};
inline constexpr std::array<double, 8> kKronrodWeights{
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kGaussWeights{
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
    double a;
    double b;
    double first;
    double second;
    double error;
    bool operator<(const Segment& other) const { return error < other.error; }
};

template <class F>
Segment gauss_kronrod_15(F& f, double a, double b) {
    const double center = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    std::array<double, 2> kronrod{0.0, 0.0};
    std::array<double, 2> gauss{0.0, 0.0};
    const auto mid = f(center);
    kronrod[0] = mid[0] * kKronrodWeights[7];
    kronrod[1] = mid[1] * kKronrodWeights[7];
    gauss[0] = mid[0] * kGaussWeights[3];
    gauss[1] = mid[1] * kGaussWeights[3];
    for (std::size_t j = 0; j < 7; ++j) {
        const double dx = half * kKronrodNodes[j];
        const auto left = f(center - dx);
        const auto right = f(center + dx);
        for (std::size_t c = 0; c < 2; ++c) {
            const double pair = left[c] + right[c];
            kronrod[c] += kKronrodWeights[j] * pair;
            if (j % 2 == 1) {
                gauss[c] += kGaussWeights[j / 2] * pair;
            }
        }
    }
    Segment s{a, b, kronrod[0] * half, kronrod[1] * half, 0.0};
    s.error = std::max(std::abs((kronrod[0] - gauss[0]) * half), std::abs((kronrod[1] - gauss[1]) * half));
    return s;
}

}  // namespace detail

// Globally adaptive Gauss-Kronrod integration of a pair-valued integrand
// f(x) -> std::array<double, 2> over [a, b]. `cuts` are interior points where
// the integrand is not smooth; the initial partition starts there.
template <class F>
PairIntegral integrate_pair(F&& f, double a, double b, std::vector<double> cuts = {},
                            double abs_tol = 1e-10, int max_intervals = 4000) {
    PairIntegral out;
    if (!(b > a)) {
        return out;
    }
    std::vector<double> knots{a};
    std::sort(cuts.begin(), cuts.end());
    for (double c : cuts) {
        if (c > knots.back() && c < b) {
            knots.push_back(c);
        }
    }
    knots.push_back(b);

    std::priority_queue<detail::Segment> queue;
    double total_error = 0.0;
    for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
        auto s = detail::gauss_kronrod_15(f, knots[i], knots[i + 1]);
        total_error += s.error;
        queue.push(s);
    }
    int count = static_cast<int>(queue.size());
    while (total_error > abs_tol && count < max_intervals) {
        const auto worst = queue.top();
        const double mid = 0.5 * (worst.a + worst.b);
        if (!(mid > worst.a && mid < worst.b)) {
            break;
        }
        queue.pop();
        auto left = detail::gauss_kronrod_15(f, worst.a, mid);
        auto right = detail::gauss_kronrod_15(f, mid, worst.b);
        total_error += left.error + right.error - worst.error;
        queue.push(left);
        queue.push(right);
        ++count;
    }

    // Sum in interval order so the result does not depend on heap layout.
    std::vector<detail::Segment> segments;
    segments.reserve(queue.size());
    while (!queue.empty()) {
        segments.push_back(queue.top());
        queue.pop();
    }
    std::sort(segments.begin(), segments.end(),
              [](const detail::Segment& x, const detail::Segment& y) { return x.a < y.a; });
    out.error = 0.0;
    for (const auto& s : segments) {
        out.first += s.first;
        out.second += s.second;
        out.error += s.error;
    }
    out.intervals = static_cast<int>(segments.size());
    return out;
}

}  // namespace pgrtb
