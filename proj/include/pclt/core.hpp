#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace pclt {

// Thrown when a spec or config violates a documented precondition.
struct validation_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Thrown when a sampling or estimation budget is exhausted or too small.
struct budget_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Thrown when an inverse or d2 bound is requested for a non-PD matrix.
struct singular_matrix_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline constexpr double pi = 3.14159265358979323846;

// Volume of the d-dimensional unit ball, pi^{d/2} / Gamma(d/2 + 1).
inline double unit_ball_volume(int d) {
    if (d < 1) throw validation_error("unit_ball_volume: dimension must be >= 1");
    return std::pow(pi, 0.5 * d) / std::tgamma(0.5 * d + 1.0);
}

// Neumaier compensated accumulator. Brute-force difference oracles cancel
// nearly equal sums, so plain accumulation would eat the comparison tolerance.
template <typename T = double>
struct CompensatedSum {
    T sum = 0, comp = 0;
    void add(T v) {
        T t = sum + v;
        if (std::abs(sum) >= std::abs(v))
            comp += (sum - t) + v;
        else
            comp += (v - t) + sum;
        sum = t;
    }
    T value() const { return sum + comp; }
};

struct MeanVar {
    std::size_t n = 0;
    double mean = 0, m2 = 0;
    void add(double v) {
        ++n;
        double d = v - mean;
        mean += d / double(n);
        m2 += d * (v - mean);
    }
    double variance() const { return n > 1 ? m2 / double(n - 1) : 0.0; }
    double std_err() const { return n > 1 ? std::sqrt(variance() / double(n)) : 0.0; }
};

// Flat point storage, row i at coords[i*dim .. i*dim+dim).
struct Points {
    int dim = 0;
    std::vector<double> coords;

    Points() = default;
    explicit Points(int d) : dim(d) {}

    std::size_t size() const { return dim ? coords.size() / dim : 0; }
    const double* operator[](std::size_t i) const { return coords.data() + i * dim; }
    double* operator[](std::size_t i) { return coords.data() + i * dim; }
    void push_back(const double* x) { coords.insert(coords.end(), x, x + dim); }
    void pop_back() { coords.resize(coords.size() - dim); }
};

inline double sq_dist(const double* a, const double* b, int d) {
    double s = 0;
    for (int k = 0; k < d; ++k) {
        double diff = a[k] - b[k];
        s += diff * diff;
    }
    return s;
}

inline double dist(const double* a, const double* b, int d) { return std::sqrt(sq_dist(a, b, d)); }

}  // namespace pclt
