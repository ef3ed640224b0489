#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lade/errors.hpp"

namespace lade {

/// Dense row-major matrix of doubles. Plain storage for logits, probabilities
/// and features outside the autodiff graph.
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(int r, int c, double fill = 0.0) : rows(r), cols(c), data() {
        if (r < 0 || c < 0) throw ParameterError("Matrix: negative dimensions");
        data.assign(static_cast<std::size_t>(r) * static_cast<std::size_t>(c), fill);
    }
    Matrix(int r, int c, std::vector<double> values)
        : rows(r), cols(c), data(std::move(values)) {
        if (r < 0 || c < 0) throw ParameterError("Matrix: negative dimensions");
        if (data.size() != static_cast<std::size_t>(r) * static_cast<std::size_t>(c)) {
            throw DimensionError("Matrix: value count " + std::to_string(data.size()) +
                                 " does not fill " + std::to_string(r) + "x" + std::to_string(c));
        }
    }

    double& operator()(int i, int j) {
        return data[static_cast<std::size_t>(i) * static_cast<std::size_t>(cols) +
                    static_cast<std::size_t>(j)];
    }
    double operator()(int i, int j) const {
        return data[static_cast<std::size_t>(i) * static_cast<std::size_t>(cols) +
                    static_cast<std::size_t>(j)];
    }

    std::span<const double> row(int i) const {
        return {data.data() + static_cast<std::size_t>(i) * static_cast<std::size_t>(cols),
                static_cast<std::size_t>(cols)};
    }

    bool operator==(const Matrix& other) const = default;
};

}  // namespace lade
