#pragma once

/**
 * @file basins.hpp
 * @brief Newton basins of attraction over a rectangular complex window.
 */

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ccroots/polynomial.hpp"

namespace ccroots {

/// Dense univariate polynomial, coefficients in ascending powers.
struct Univariate {
  std::vector<cplx> coeffs;

  int degree() const noexcept;
  cplx eval(cplx z) const;
  cplx derivative(cplx z) const;
};

/// Parses expressions such as "z^3 - 1" or "2.5z^2 - 3i*z + 0.5":
///
///   expr   := ['+'|'-'] term (('+'|'-') term)*
///   term   := factor (['*'] factor)*
///   factor := number | 'i' | 'z' ['^' integer]
///
/// Numbers may carry a decimal exponent (1e-3). Whitespace is ignored;
/// adjacent factors multiply. Errors name the offending token and its
/// position.
Univariate parse_univariate(const std::string& text);

struct Window {
  double re_min = -2.0, re_max = 2.0, im_min = -2.0, im_max = 2.0;
  void validate() const;
};

/// Line x = base + z * direction through a multivariate system.
struct SliceSpec {
  PolynomialSystem system;
  CVector base;
  CVector direction;
};

struct BasinOptions {
  int max_iters = 50;
  double tol = 1e-10;
  double match_radius = 1e-6;
  int threads = 0;
  /// Registry entries present before the scan (index order preserved).
  std::vector<cplx> seed_roots;
};

struct BasinGrid {
  Window window;
  int width = 0;
  int height = 0;
  int max_iters = 0;
  std::vector<int> assignment;  ///< row-major, -1 = not converged
  std::vector<int> iterations;  ///< row-major
  std::vector<cplx> roots;

  int at(int row, int col) const { return assignment[static_cast<std::size_t>(row) * width + col]; }
  /// Complex coordinate of a pixel; row 0 is the top (im_max) edge.
  cplx pixel(int row, int col) const;
};

/// Pixel centers span the window edges inclusively (a single pixel sits at
/// the window center). The root registry grows in row-major order of first
/// convergence; new roots are polished before registration.
BasinGrid basin_scan(const Univariate& f, const Window& window, int width, int height, const BasinOptions& opts = {});

/// Heuristic slice scan: Gauss-Newton in z on ||F(base + z dir)||^2; a pixel
/// converges only if the limit is a zero of F (||F||_inf < 1e-8).
BasinGrid basin_scan(const SliceSpec& slice, const Window& window, int width, int height,
                     const BasinOptions& opts = {});

using Rgb = std::array<std::uint8_t, 3>;

/// Evenly spaced saturated hues starting at red.
std::vector<Rgb> default_palette(std::size_t n);

/// Binary P6 image. Non-converged pixels are black, the pixel nearest each
/// root is white, and converged pixels take their root color scaled by
/// 1 - 0.75 * iterations / max_iters.
std::string render_ppm(const BasinGrid& grid, const std::vector<Rgb>& palette);

/// Assignment matrix as comma-separated rows.
std::string assignment_csv(const BasinGrid& grid);

}  // namespace ccroots
