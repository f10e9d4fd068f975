#pragma once

// Reference implementations used only by tests. Deliberately naive.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "seqsel/types.hpp"

namespace oracle {

// All length-n sequences over `levels`, in lexicographic order of level index.
inline std::vector<std::vector<double>> all_sequences(const std::vector<double>& levels,
                                                      std::size_t n) {
    std::vector<std::vector<double>> out;
    std::vector<std::size_t> idx(n, 0);
    for (;;) {
        std::vector<double> s(n);
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = levels[idx[i]];
        }
        out.push_back(s);
        std::size_t p = n;
        while (p > 0 && ++idx[p - 1] == levels.size()) {
            idx[--p] = 0;
        }
        if (p == 0) {
            return out;
        }
    }
}

inline double energy(const std::vector<double>& s) {
    double e = 0.0;
    for (double v : s) {
        e += v * v;
    }
    return e;
}

// Smallest sphere energy holding at least `need` sequences.
inline double min_sphere_energy(const std::vector<double>& levels, std::size_t n, double need) {
    std::vector<double> energies;
    for (const auto& s : all_sequences(levels, n)) {
        energies.push_back(energy(s));
    }
    std::sort(energies.begin(), energies.end());
    return energies.at(static_cast<std::size_t>(need) - 1);
}

inline std::vector<std::vector<double>> sphere(const std::vector<double>& levels, std::size_t n,
                                               double emax) {
    std::vector<std::vector<double>> out;
    for (auto& s : all_sequences(levels, n)) {
        if (energy(s) <= emax + 1e-9) {
            out.push_back(std::move(s));
        }
    }
    return out;
}

// Gauss-Hermite nodes and weights for weight exp(-x^2), via Golub-Welsch
// free recurrence + Newton refinement.
inline void gauss_hermite(int n, std::vector<double>& x, std::vector<double>& w) {
    x.assign(n, 0.0);
    w.assign(n, 0.0);
    const int m = (n + 1) / 2;
    double z = 0.0;
    for (int i = 0; i < m; ++i) {
        if (i == 0) {
            z = std::sqrt(2.0 * n + 1) - 1.85575 * std::pow(2.0 * n + 1, -0.16667);
        } else if (i == 1) {
            z -= 1.14 * std::pow(n, 0.426) / z;
        } else if (i == 2) {
            z = 1.86 * z - 0.86 * x[0];
        } else if (i == 3) {
            z = 1.91 * z - 0.91 * x[1];
        } else {
            z = 2.0 * z - x[i - 2];
        }
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p1 = std::pow(std::numbers::pi, -0.25);
            double p2 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = z * std::sqrt(2.0 / (j + 1)) * p2 - std::sqrt(static_cast<double>(j) / (j + 1)) * p3;
            }
            pp = std::sqrt(2.0 * n) * p2;
            const double z1 = z;
            z = z1 - p1 / pp;
            if (std::abs(z - z1) <= 1e-14) {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
}

// Per-rail bit-metric GMI of uniform 8-PAM {±1,±3,±5,±7} with BRGC labels
// under real AWGN of variance s2, by Gauss-Hermite quadrature. Returns bits
// per real dimension.
inline double gmi_uniform_8pam(double s2) {
    const std::vector<double> pts{-7, -5, -3, -1, 1, 3, 5, 7};
    // Labels: sign bit (1 = negative) then Gray code of the amplitude index.
    auto label = [&](std::size_t j, int b) {
        const bool neg = pts[j] < 0;
        const std::size_t a = static_cast<std::size_t>((std::abs(pts[j]) - 1) / 2);
        const std::size_t g = a ^ (a >> 1);
        if (b == 0) {
            return neg ? 1 : 0;
        }
        return static_cast<int>((g >> (2 - b)) & 1U);
    };
    std::vector<double> gx, gw;
    gauss_hermite(80, gx, gw);
    double loss = 0.0;
    for (std::size_t j = 0; j < pts.size(); ++j) {
        for (std::size_t q = 0; q < gx.size(); ++q) {
            const double y = pts[j] + std::sqrt(2.0 * s2) * gx[q];
            const double wq = gw[q] / std::sqrt(std::numbers::pi);
            for (int b = 0; b < 3; ++b) {
                double all = 0.0;
                double match = 0.0;
                for (std::size_t i = 0; i < pts.size(); ++i) {
                    const double l = std::exp(-(y - pts[i]) * (y - pts[i]) / (2.0 * s2) +
                                              (y - pts[j]) * (y - pts[j]) / (2.0 * s2));
                    all += l;
                    if (label(i, b) == label(j, b)) {
                        match += l;
                    }
                }
                loss += wq * std::log2(all / match) / pts.size();
            }
        }
    }
    return 3.0 - loss;
}

// Windowed kurtosis, recomputed from scratch for every window.
inline double windowed_kurtosis(const std::vector<seqsel::Symbol4D>& s, std::size_t w,
                                std::size_t stride, bool use_max) {
    double acc = 0.0;
    std::size_t count = 0;
    for (std::size_t start = 0; start + w <= s.size(); start += stride) {
        double m1 = 0.0;
        double m2 = 0.0;
        for (std::size_t k = start; k < start + w; ++k) {
            const double e = std::norm(s[k].x) + std::norm(s[k].y);
            m1 += e;
            m2 += e * e;
        }
        m1 /= static_cast<double>(w);
        m2 /= static_cast<double>(w);
        const double kappa = m2 / (m1 * m1);
        acc = use_max ? std::max(acc, kappa) : acc + kappa;
        ++count;
    }
    return use_max ? acc : acc / static_cast<double>(count);
}

}  // namespace oracle
