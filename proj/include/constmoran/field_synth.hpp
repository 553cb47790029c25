#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

#include "constmoran/error.hpp"
#include "constmoran/moran.hpp"
#include "constmoran/numeric.hpp"
#include "constmoran/parallel.hpp"
#include "constmoran/rng.hpp"

namespace constmoran {

struct SynthConfig {
    std::size_t rows = 40;
    std::size_t cols = 40;
    double beta = 0.0; // spectral slope: S(f) ~ f^-beta
    std::uint64_t seed = 0;

    void validate() const {
        if (rows < 1 || cols < 1 || rows * cols < 4)
            throw error("synthesis grid must have at least 4 cells");
        if (!(std::isfinite(beta) && beta >= 0.0))
            throw error("beta must be finite and non-negative");
    }
};

namespace detail {

// Inverse 2D DFT by row-column decomposition, O(R*C*(R+C)). Grids here are
// desk-scale (~40x40), so no FFT library is needed and any size works.
inline std::vector<std::complex<double>> inverse_dft_2d(
    const std::vector<std::complex<double>>& spec, std::size_t rows, std::size_t cols) {
    const double two_pi = 2.0 * std::numbers::pi;
    std::vector<std::complex<double>> wr(rows), wc(cols);
    for (std::size_t k = 0; k < rows; ++k)
        wr[k] = std::polar(1.0, two_pi * static_cast<double>(k) / static_cast<double>(rows));
    for (std::size_t k = 0; k < cols; ++k)
        wc[k] = std::polar(1.0, two_pi * static_cast<double>(k) / static_cast<double>(cols));

    // stage 1: transform along columns index v for each row u
    std::vector<std::complex<double>> stage(rows * cols);
    for (std::size_t u = 0; u < rows; ++u) {
        for (std::size_t n = 0; n < cols; ++n) {
            std::complex<double> acc{0.0, 0.0};
            for (std::size_t v = 0; v < cols; ++v) acc += spec[u * cols + v] * wc[(v * n) % cols];
            stage[u * cols + n] = acc;
        }
    }
    // stage 2: transform along rows index u
    std::vector<std::complex<double>> out(rows * cols);
    for (std::size_t n = 0; n < cols; ++n) {
        for (std::size_t m = 0; m < rows; ++m) {
            std::complex<double> acc{0.0, 0.0};
            for (std::size_t u = 0; u < rows; ++u) acc += stage[u * cols + n] * wr[(u * m) % rows];
            out[m * cols + n] = acc;
        }
    }
    return out;
}

} // namespace detail

// Random field with power-law spectrum S(f) ~ f^-beta on a rows x cols grid.
// Fourier coefficients are complex Gaussians with scale f^(-beta/2), i.e.
// Rayleigh amplitudes and uniform phases, with f = sqrt(fu^2 + fv^2) over
// integer frequency indices mapped to [-rows/2, rows/2) x [-cols/2, cols/2).
// Hermitian pairing keeps the spatial field exactly real; the DC bin is
// zeroed; output is standardized to mean 0, variance 1 (row-major order).
inline Field generate_field(const SynthConfig& config) {
    config.validate();
    const std::size_t rows = config.rows, cols = config.cols;
    const std::size_t n = rows * cols;

    std::vector<std::complex<double>> spec(n, {0.0, 0.0});
    std::vector<std::uint8_t> assigned(n, 0);
    Rng rng(config.seed);

    for (std::size_t u = 0; u < rows; ++u) {
        for (std::size_t v = 0; v < cols; ++v) {
            const std::size_t idx = u * cols + v;
            if (assigned[idx]) continue;
            const std::size_t pu = (rows - u) % rows;
            const std::size_t pv = (cols - v) % cols;
            const std::size_t pidx = pu * cols + pv;
            assigned[idx] = 1;
            assigned[pidx] = 1;
            if (idx == 0) continue; // DC stays zero

            const double fu = (u <= (rows - 1) / 2) ? static_cast<double>(u)
                                                    : static_cast<double>(u) - static_cast<double>(rows);
            const double fv = (v <= (cols - 1) / 2) ? static_cast<double>(v)
                                                    : static_cast<double>(v) - static_cast<double>(cols);
            const double f = std::hypot(fu, fv);
            const double scale = std::pow(f, -config.beta / 2.0);

            if (idx == pidx) {
                // self-conjugate bin must be real
                spec[idx] = {rng.gaussian() * scale, 0.0};
            } else {
                spec[idx] = {rng.gaussian() * scale * std::numbers::sqrt2 / 2.0,
                             rng.gaussian() * scale * std::numbers::sqrt2 / 2.0};
                spec[pidx] = std::conj(spec[idx]);
            }
        }
    }

    const auto complex_field = detail::inverse_dft_2d(spec, rows, cols);

    double max_abs_real = 0.0, max_abs_imag = 0.0;
    for (const auto& c : complex_field) {
        max_abs_real = std::max(max_abs_real, std::abs(c.real()));
        max_abs_imag = std::max(max_abs_imag, std::abs(c.imag()));
    }
    if (max_abs_imag > 1e-9 * std::max(1.0, max_abs_real))
        throw error("spectral synthesis produced a non-real field (broken Hermitian pairing)");

    std::vector<double> values(n);
    for (std::size_t i = 0; i < n; ++i) values[i] = complex_field[i].real();

    const double mean = vector_mean(values);
    KahanSum ss;
    for (double& v : values) {
        v -= mean;
        ss.add(v * v);
    }
    const double sd = std::sqrt(ss.value() / static_cast<double>(n));
    if (!(sd > 0.0)) throw error("spectral synthesis produced a constant field");
    for (double& v : values) v /= sd;
    return Field(std::move(values));
}

struct BetaCurveRow {
    double beta = 0.0;
    DistSummary moran;
};

// Per-beta distribution summaries of Moran's I over synthesized fields under
// queen weights. Trials are seeded by (beta index, trial index).
inline std::vector<BetaCurveRow> moran_beta_curve(std::span<const double> betas,
                                                  std::size_t trials, std::size_t rows,
                                                  std::size_t cols, std::uint64_t seed) {
    if (trials < 2) throw error("moran_beta_curve needs at least 2 trials");
    const SpatialWeights weights = row_normalize(build_grid_queen(rows, cols));
    std::vector<std::vector<double>> samples(betas.size(), std::vector<double>(trials, 0.0));
    parallel_for(betas.size() * trials, [&](std::size_t flat) {
        const std::size_t b = flat / trials;
        const std::size_t t = flat % trials;
        const SynthConfig cfg{rows, cols, betas[b], derive_seed(seed, b, t)};
        samples[b][t] = moran_i(generate_field(cfg), weights);
    });
    std::vector<BetaCurveRow> curve(betas.size());
    for (std::size_t b = 0; b < betas.size(); ++b) {
        curve[b].beta = betas[b];
        curve[b].moran = summarize(samples[b]);
    }
    return curve;
}

} // namespace constmoran
