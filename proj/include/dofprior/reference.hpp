#pragma once

#include <array>
#include <limits>

namespace dofprior::reference {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Published contiguous divergences, four significant digits. Columns are
// (d=1 prev, d=1 next, d=2 prev, d=2 next, d=3 prev, d=3 next).
struct KLTableRow {
    int nu;
    std::array<double, 6> values;
};

inline constexpr std::array<KLTableRow, 30> kl_table = {{
    {1, {kNaN, 1.131e-1, kNaN, 1.416e-1, kNaN, 1.552e-1}},
    {2, {6.210e-2, 1.917e-2, 7.944e-2, 2.733e-2, 8.851e-2, 3.208e-2}},
    {3, {1.364e-2, 5.897e-3, 1.956e-2, 9.139e-3, 2.313e-2, 1.129e-2}},
    {4, {4.700e-3, 2.412e-3, 7.283e-3, 3.961e-3, 9.021e-3, 5.087e-3}},
    {5, {2.047e-3, 1.170e-3, 3.353e-3, 2.005e-3, 4.307e-3, 2.654e-3}},
    {6, {1.033e-3, 6.364e-4, 1.764e-3, 1.127e-3, 2.332e-3, 1.529e-3}},
    {7, {5.768e-4, 3.761e-4, 1.018e-3, 6.838e-4, 1.378e-3, 9.459e-4}},
    {8, {3.473e-4, 2.366e-4, 6.289e-4, 4.394e-4, 8.680e-4, 6.179e-4}},
    {9, {2.215e-4, 1.563e-4, 4.097e-4, 2.955e-4, 5.749e-4, 4.213e-4}},
    {10, {1.479e-4, 1.075e-4, 2.785e-4, 2.061e-4, 3.962e-4, 2.975e-4}},
    {11, {1.025e-4, 7.632e-5, 1.959e-4, 1.483e-4, 2.821e-4, 2.162e-4}},
    {12, {7.326e-5, 5.570e-5, 1.419e-4, 1.094e-4, 2.064e-4, 1.610e-4}},
    {13, {5.375e-5, 4.161e-5, 1.052e-4, 8.252e-5, 1.546e-4, 1.224e-4}},
    {14, {4.033e-5, 3.172e-5, 7.973e-5, 6.342e-5, 1.180e-4, 9.475e-5}},
    {15, {3.084e-5, 2.460e-5, 6.151e-5, 4.956e-5, 9.173e-5, 7.451e-5}},
    {16, {2.399e-5, 1.937e-5, 4.821e-5, 3.929e-5, 7.237e-5, 5.941e-5}},
    {17, {1.894e-5, 1.546e-5, 3.833e-5, 3.155e-5, 5.786e-5, 4.796e-5}},
    {18, {1.515e-5, 1.250e-5, 3.085e-5, 2.563e-5, 4.682e-5, 3.915e-5}},
    {19, {1.227e-5, 1.021e-5, 2.511e-5, 2.104e-5, 3.830e-5, 3.227e-5}},
    {20, {1.004e-5, 8.420e-6, 2.065e-5, 1.743e-5, 3.163e-5, 2.685e-5}},
    {21, {8.291e-6, 7.007e-6, 1.714e-5, 1.457e-5, 2.636e-5, 2.252e-5}},
    {22, {6.909e-6, 5.879e-6, 1.434e-5, 1.227e-5, 2.214e-5, 1.903e-5}},
    {23, {5.803e-6, 4.969e-6, 1.209e-5, 1.041e-5, 1.873e-5, 1.619e-5}},
    {24, {4.910e-6, 4.229e-6, 1.027e-5, 8.886e-6, 1.595e-5, 1.386e-5}},
    {25, {4.182e-6, 3.622e-6, 8.775e-6, 7.633e-6, 1.367e-5, 1.194e-5}},
    {26, {3.584e-6, 3.120e-6, 7.544e-6, 6.593e-6, 1.179e-5, 1.034e-5}},
    {27, {3.089e-6, 2.702e-6, 6.521e-6, 5.725e-6, 1.022e-5, 8.999e-6}},
    {28, {2.677e-6, 2.352e-6, 5.666e-6, 4.995e-6, 8.899e-6, 7.869e-6}},
    {29, {2.332e-6, 2.056e-6, 4.947e-6, 4.378e-6, 7.786e-6, 6.911e-6}},
    {30, {2.040e-6, 1.806e-6, 4.338e-6, 3.853e-6, 6.843e-6, 6.095e-6}},
}};

inline double kl_table_prev(int d, int nu) { return kl_table[nu - 1].values[2 * (d - 1)]; }
inline double kl_table_next(int d, int nu) { return kl_table[nu - 1].values[2 * (d - 1) + 1]; }

// Published bivariate t-copula prior at rho = 0 on {1, ..., 30}.
inline constexpr std::array<double, 30> copula_prior_rho0 = {
    0.804,   0.129,   0.0368,  0.014,   0.007,   0.004,   0.002,   1.28e-3, 8.05e-4, 5.33e-4,
    3.58e-4, 3.05e-4, 2.06e-4, 1.60e-4, 1.30e-4, 9.52e-5, 6.79e-5, 6.04e-5, 4.55e-5, 3.44e-5,
    2.19e-5, 2.39e-5, 2.06e-5, 2.31e-5, 1.81e-5, 1.91e-5, 1.28e-5, 2.05e-5, 7.85e-6, 2.78e-6};

// Fitted values used to generate the bundled synthetic fixtures.
namespace mvt_fixture {
inline constexpr double mu1 = 4.33e-4, mu2 = 8.54e-4;
inline constexpr double s11 = 1.54e-4, s22 = 3.11e-5, s12 = 3.26e-5;
inline constexpr int nu = 4;
inline constexpr int n = 2528;
}  // namespace mvt_fixture

namespace copula_fixture {
inline constexpr double mu1 = 3.17e-4, mu2 = -2.14e-4;
inline constexpr double sigma1 = 8.13e-3, sigma2 = 1.18e-2;
inline constexpr double rho = 0.69;
inline constexpr int nu = 4, nu1 = 4, nu2 = 3;
inline constexpr int n = 1769;
}  // namespace copula_fixture

}  // namespace dofprior::reference
