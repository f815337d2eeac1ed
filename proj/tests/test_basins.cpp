#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>

#include "ccroots/basins.hpp"

using namespace ccroots;

namespace {

BasinOptions single_thread() {
  BasinOptions o;
  o.threads = 1;
  return o;
}

/// Plain Newton from z0 with the same stopping rule as the scan.
std::optional<cplx> newton_limit(const Univariate& f, cplx z, int max_iters, double tol) {
  for (int k = 0; k < max_iters; ++k) {
    const cplx d = f.derivative(z);
    if (d == cplx(0.0)) return std::nullopt;
    const cplx step = f.eval(z) / d;
    z -= step;
    if (std::abs(step) < tol && std::abs(f.eval(z)) < 1e-8) return z;
  }
  return std::abs(f.eval(z)) < 1e-8 ? std::optional<cplx>(z) : std::nullopt;
}

}  // namespace

TEST(Parser, AcceptsGrammar) {
  const auto p = parse_univariate("z^3 - 1");
  ASSERT_EQ(p.degree(), 3);
  EXPECT_EQ(p.coeffs[0], cplx(-1.0));
  EXPECT_EQ(p.coeffs[3], cplx(1.0));
  const auto q = parse_univariate(" 2.5z^2 - 3i*z + 0.5 ");
  ASSERT_EQ(q.degree(), 2);
  EXPECT_EQ(q.coeffs[2], cplx(2.5));
  EXPECT_EQ(q.coeffs[1], cplx(0.0, -3.0));
  EXPECT_EQ(q.coeffs[0], cplx(0.5));
  const auto r = parse_univariate("-z z + z^2 + 1e-3 z");
  EXPECT_EQ(r.degree(), 1);
  EXPECT_EQ(r.coeffs[1], cplx(1e-3));
  EXPECT_EQ(parse_univariate("i").coeffs[0], cplx(0.0, 1.0));
}

TEST(Parser, EvaluatesByHorner) {
  const auto p = parse_univariate("z^3 - 2z + 4");
  const cplx z(0.3, -1.2);
  EXPECT_NEAR(std::abs(p.eval(z) - (z * z * z - 2.0 * z + 4.0)), 0.0, 1e-14);
  EXPECT_NEAR(std::abs(p.derivative(z) - (3.0 * z * z - 2.0)), 0.0, 1e-14);
}

TEST(Parser, ErrorsNamePosition) {
  try {
    parse_univariate("z^3 - # 1");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("position 7"), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse_univariate(""), ParseError);
  EXPECT_THROW(parse_univariate("z^"), ParseError);
  EXPECT_THROW(parse_univariate("z + + 1"), ParseError);
  EXPECT_THROW(parse_univariate("x^2"), ParseError);
  EXPECT_THROW(parse_univariate("z^2000"), ParseError);
}

TEST(Scan, CubeRootsOfUnity) {
  const auto f = parse_univariate("z^3 - 1");
  const auto g = basin_scan(f, Window{}, 300, 300, single_thread());
  ASSERT_EQ(g.roots.size(), 3u);
  const double s = std::sqrt(3.0) / 2.0;
  const std::vector<cplx> expect{cplx(1.0), cplx(-0.5, s), cplx(-0.5, -s)};
  for (const auto& e : expect) {
    int hits = 0;
    for (const auto& r : g.roots) hits += std::abs(r - e) < 1e-12;
    EXPECT_EQ(hits, 1);
  }
  EXPECT_EQ(g.assignment.size(), 90000u);
  EXPECT_EQ(g.iterations.size(), 90000u);
  for (int a : g.assignment) {
    EXPECT_GE(a, -1);
    EXPECT_LT(a, 3);
  }
  // The pixel nearest each root belongs to that root's basin.
  for (std::size_t k = 0; k < g.roots.size(); ++k) {
    const int col = static_cast<int>(std::lround((g.roots[k].real() + 2.0) / 4.0 * 299));
    const int row = static_cast<int>(std::lround((2.0 - g.roots[k].imag()) / 4.0 * 299));
    EXPECT_EQ(g.at(row, col), static_cast<int>(k));
  }
}

TEST(Scan, PositiveRealAxisGoesToOne) {
  const auto f = parse_univariate("z^3 - 1");
  const Window w{-2.0, 2.0, -1.0, 1.0};
  const auto g = basin_scan(f, w, 301, 3, single_thread());
  for (int col = 0; col < 301; ++col) {
    const cplx z = g.pixel(1, col);
    EXPECT_EQ(z.imag(), 0.0);
    if (z.real() > 0.0) EXPECT_NEAR(std::abs(g.roots[static_cast<std::size_t>(g.at(1, col))] - 1.0), 0.0, 1e-12);
  }
}

TEST(Scan, MatchesBruteForceNewton) {
  const auto f = parse_univariate("z^2 - 1");
  const auto g = basin_scan(f, Window{}, 11, 11, single_thread());
  ASSERT_EQ(g.roots.size(), 2u);
  for (int row = 0; row < 11; ++row)
    for (int col = 0; col < 11; ++col) {
      const cplx z0 = g.pixel(row, col);
      EXPECT_NEAR(z0.real(), -2.0 + 0.4 * col, 1e-14);
      EXPECT_NEAR(z0.imag(), 2.0 - 0.4 * row, 1e-14);
      const auto lim = newton_limit(f, z0, 50, 1e-10);
      const int a = g.at(row, col);
      if (!lim) {
        EXPECT_EQ(a, -1);
        continue;
      }
      ASSERT_GE(a, 0);
      EXPECT_LT(std::abs(g.roots[static_cast<std::size_t>(a)] - *lim), 1e-6);
      if (z0.real() < 0) EXPECT_NEAR(g.roots[static_cast<std::size_t>(a)].real(), -1.0, 1e-12);
      if (z0.real() > 0) EXPECT_NEAR(g.roots[static_cast<std::size_t>(a)].real(), 1.0, 1e-12);
    }
  // The imaginary axis is the basin boundary: Newton stays on it.
  for (int row = 0; row < 11; ++row) EXPECT_EQ(g.at(row, 5), -1);
}

TEST(Scan, SinglePixelSitsAtCenter) {
  const auto g = basin_scan(parse_univariate("z - 0.25"), Window{-1.0, 3.0, -2.0, 0.0}, 1, 1, single_thread());
  EXPECT_EQ(g.pixel(0, 0), cplx(1.0, -1.0));
  EXPECT_EQ(g.at(0, 0), 0);
}

TEST(Scan, DeterministicAcrossThreadCounts) {
  const auto f = parse_univariate("z^4 - 1 + 0.3i z");
  BasinOptions a = single_thread();
  BasinOptions b;
  b.threads = 3;
  const auto g1 = basin_scan(f, Window{}, 64, 48, a);
  const auto g2 = basin_scan(f, Window{}, 64, 48, b);
  EXPECT_EQ(g1.assignment, g2.assignment);
  EXPECT_EQ(g1.iterations, g2.iterations);
  EXPECT_EQ(g1.roots, g2.roots);
  const auto pal = default_palette(g1.roots.size());
  EXPECT_EQ(render_ppm(g1, pal), render_ppm(g2, pal));
}

TEST(Scan, SeededRegistryGivesSameBasins) {
  const auto f = parse_univariate("z^3 - 1");
  const auto free = basin_scan(f, Window{}, 60, 60, single_thread());
  BasinOptions o = single_thread();
  const double s = std::sqrt(3.0) / 2.0;
  o.seed_roots = {cplx(-0.5, -s), cplx(1.0), cplx(-0.5, s)};
  const auto seeded = basin_scan(f, Window{}, 60, 60, o);
  ASSERT_EQ(seeded.roots.size(), 3u);
  std::map<int, int> perm{{-1, -1}};
  for (std::size_t i = 0; i < free.assignment.size(); ++i) {
    const auto [it, fresh] = perm.emplace(free.assignment[i], seeded.assignment[i]);
    EXPECT_EQ(it->second, seeded.assignment[i]);
  }
  std::set<int> image;
  for (const auto& [k, v] : perm) image.insert(v);
  EXPECT_EQ(image.size(), perm.size());
}

TEST(Scan, RejectsBadInput) {
  EXPECT_THROW(basin_scan(parse_univariate("3"), Window{}, 10, 10), InvalidArgument);
  EXPECT_THROW(basin_scan(parse_univariate("z"), Window{}, 0, 10), InvalidArgument);
  EXPECT_THROW(basin_scan(parse_univariate("z"), Window{1.0, 1.0, 0.0, 1.0}, 10, 10), InvalidArgument);
}

TEST(Slice, FindsZerosOnLine) {
  // F = (x0^2 - 1, x1 - x0) along x = z (1, 1): zeros at z = +-1.
  Polynomial a, b;
  a.add_term(Monomial::variable(0, 2), 1.0);
  a.add_term(Monomial{}, -1.0);
  b.add_term(Monomial::variable(1), 1.0);
  b.add_term(Monomial::variable(0), -1.0);
  SliceSpec s{PolynomialSystem(2, {a, b}), CVector::Zero(2), CVector::Ones(2)};
  const auto g = basin_scan(s, Window{}, 21, 21, single_thread());
  ASSERT_EQ(g.roots.size(), 2u);
  for (const auto& r : g.roots) EXPECT_NEAR(std::abs(r * r - 1.0), 0.0, 1e-8);
  EXPECT_EQ(g.roots[static_cast<std::size_t>(g.at(10, 20))], g.roots[static_cast<std::size_t>(g.at(0, 20))]);

  // A line that misses the zero set never converges.
  SliceSpec off{PolynomialSystem(2, {a, b}), CVector::Zero(2), CVector::Zero(2)};
  off.direction[0] = 1.0;
  off.base[1] = 5.0;
  const auto h = basin_scan(off, Window{}, 7, 7, single_thread());
  EXPECT_TRUE(h.roots.empty());
  for (int v : h.assignment) EXPECT_EQ(v, -1);

  SliceSpec bad{PolynomialSystem(2, {a, b}), CVector::Zero(2), CVector::Zero(2)};
  EXPECT_THROW(basin_scan(bad, Window{}, 3, 3), InvalidArgument);
}

TEST(Render, SinglePixelBytes) {
  BasinGrid g;
  g.width = g.height = 1;
  g.max_iters = 50;
  g.assignment = {0};
  g.iterations = {0};
  g.roots = {cplx(5.0)};  // far from the pixel, so not a marker
  g.window = Window{-1, 1, -1, 1};
  const std::string ppm = render_ppm(g, {Rgb{255, 0, 0}});
  EXPECT_EQ(ppm, std::string("P6\n1 1\n255\n") + std::string("\xff\x00\x00", 3));
  EXPECT_THROW(render_ppm(g, {}), InvalidArgument);
}

TEST(Render, NonConvergedIsBlack) {
  BasinGrid g;
  g.width = 4;
  g.height = 3;
  g.max_iters = 50;
  g.assignment.assign(12, -1);
  g.iterations.assign(12, 50);
  const std::string ppm = render_ppm(g, {});
  const std::string header = "P6\n4 3\n255\n";
  ASSERT_EQ(ppm.size(), header.size() + 36);
  EXPECT_EQ(ppm.substr(0, header.size()), header);
  for (std::size_t i = header.size(); i < ppm.size(); ++i) EXPECT_EQ(ppm[i], '\0');
}

TEST(Render, CubicHistogram) {
  const auto g = basin_scan(parse_univariate("z^3 - 1"), Window{}, 120, 120, single_thread());
  const auto pal = default_palette(3);
  const std::string ppm = render_ppm(g, pal);
  const std::size_t off = std::string("P6\n120 120\n255\n").size();
  ASSERT_EQ(ppm.size(), off + 120 * 120 * 3);
  std::set<int> hues;
  int white = 0, black = 0;
  for (std::size_t p = off; p < ppm.size(); p += 3) {
    const int r = static_cast<unsigned char>(ppm[p]), gg = static_cast<unsigned char>(ppm[p + 1]),
              b = static_cast<unsigned char>(ppm[p + 2]);
    if (r == 255 && gg == 255 && b == 255) {
      ++white;
      continue;
    }
    if (r == 0 && gg == 0 && b == 0) {
      ++black;
      continue;
    }
    // Brightness scaling preserves the dominant channel of each palette hue.
    const int dom = r >= gg && r >= b ? 0 : (gg >= b ? 1 : 2);
    hues.insert(dom);
  }
  EXPECT_EQ(white, 3);
  EXPECT_EQ(hues.size(), 3u);
  EXPECT_EQ(render_ppm(g, pal), ppm);
}

TEST(Render, PaletteIsDistinct) {
  const auto p = default_palette(5);
  ASSERT_EQ(p.size(), 5u);
  EXPECT_EQ(p[0], (Rgb{255, 0, 0}));
  EXPECT_EQ(std::set<Rgb>(p.begin(), p.end()).size(), 5u);
}

TEST(Csv, RowsMatchAssignment) {
  const auto g = basin_scan(parse_univariate("z^2 - 1"), Window{}, 3, 2, single_thread());
  const std::string csv = assignment_csv(g);
  std::string expect;
  for (int r = 0; r < 2; ++r) {
    for (int c = 0; c < 3; ++c) expect += (c ? "," : "") + std::to_string(g.at(r, c));
    expect += "\n";
  }
  EXPECT_EQ(csv, expect);
}
