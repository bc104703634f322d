#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "cohmark/errors.hpp"

namespace cohmark {

using Vec = std::vector<double>;

// Column-major matrix; columns are word vectors when built by a backend.
struct Mat {
    int rows = 0;
    int cols = 0;
    Vec data;  // rows * cols, column-major

    Mat() = default;
    Mat(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0) {}

    double& at(int r, int c) { return data[static_cast<std::size_t>(c) * rows + r]; }
    double at(int r, int c) const { return data[static_cast<std::size_t>(c) * rows + r]; }

    const double* col(int c) const { return data.data() + static_cast<std::size_t>(c) * rows; }
    double* col(int c) { return data.data() + static_cast<std::size_t>(c) * rows; }
};

inline double dot(const Vec& a, const Vec& b) {
    if (a.size() != b.size()) throw DataError("dot: dimension mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm(const Vec& a) {
    double s = 0.0;
    for (double x : a) s += x * x;
    return std::sqrt(s);
}

inline void normalize_inplace(Vec& a) {
    double n = norm(a);
    if (n > 0.0) {
        for (double& x : a) x /= n;
    }
}

inline double cosine(const Vec& a, const Vec& b) {
    double na = norm(a);
    double nb = norm(b);
    if (na == 0.0 || nb == 0.0) throw NumericError("cosine: zero-norm vector");
    return dot(a, b) / (na * nb);
}

}  // namespace cohmark
